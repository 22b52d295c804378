#![no_main]

use libfuzzer_sys::fuzz_target;
use policylearn::io::{parse_logged, write_logged};

fuzz_target!(|data: &[u8]| {
    if let Ok((samples, p)) = parse_logged(data) {
        let mut buf = Vec::new();
        write_logged(&mut buf, &samples, p).unwrap();
        let (back, q) = parse_logged(buf.as_slice()).expect("written log parses");
        assert_eq!((back, q), (samples, p));
    }
});
