//! Fuzzes the model file parser: arbitrary bytes must be either rejected
//! with an error or parsed into a model that round-trips exactly.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = gfcnn::model::parse_model(text) {
        let again = gfcnn::model::parse_model(&gfcnn::model::format_model(&m))
            .expect("serialized model no longer parses");
        assert_eq!(m, again);
    }
});
