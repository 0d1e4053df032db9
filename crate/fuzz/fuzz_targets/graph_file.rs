//! Fuzzes the graph file parser: arbitrary bytes must be either rejected
//! with an error or parsed into a graph whose serialization parses again.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(g) = gfcnn::graph::parse_graph(text) {
        let again = gfcnn::graph::parse_graph(&gfcnn::graph::format_graph(&g))
            .expect("serialized graph no longer parses");
        assert_eq!(g.edges(), again.edges());
    }
});
