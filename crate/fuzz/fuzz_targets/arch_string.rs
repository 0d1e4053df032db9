//! Fuzzes the architecture string parser: arbitrary strings must be either
//! rejected with a positioned error or parsed into specs that re-format to
//! a string parsing back to the same specs.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(specs) = gfcnn::arch::parse_architecture(text) {
        let formatted = gfcnn::arch::format_architecture(&specs);
        let again = gfcnn::arch::parse_architecture(&formatted)
            .expect("formatted architecture no longer parses");
        assert_eq!(specs, again);
    }
});
