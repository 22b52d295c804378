#![no_main]

use libfuzzer_sys::fuzz_target;
use policylearn::env::parse_classification_csv;

fuzz_target!(|data: &[u8]| {
    // First line selects the label column; the rest is the table.
    let Some(split) = data.iter().position(|&b| b == b'\n') else {
        return;
    };
    let Ok(label) = std::str::from_utf8(&data[..split]) else {
        return;
    };
    if let Ok(env) = parse_classification_csv(&data[split + 1..], label) {
        assert!(env.k >= 2);
    }
});
