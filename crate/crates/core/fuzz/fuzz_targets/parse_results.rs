#![no_main]

use libfuzzer_sys::fuzz_target;
use policylearn::io::parse_results;

fuzz_target!(|data: &[u8]| {
    let _ = parse_results(data);
});
