//! Fuzzes the dataset file parser: arbitrary bytes must be either rejected
//! with an error or parsed into a dataset that round-trips exactly.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(d) = gfcnn::dataset::parse_dataset(text) {
        let again = gfcnn::dataset::parse_dataset(&gfcnn::dataset::format_dataset(&d))
            .expect("serialized dataset no longer parses");
        assert_eq!(d, again);
    }
});
