#![no_main]

use libfuzzer_sys::fuzz_target;
use policylearn::treepolicy::TreePolicy;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(tree) = text.parse::<TreePolicy>() {
        let printed = tree.to_string();
        let again: TreePolicy = printed.parse().expect("printed tree parses");
        assert_eq!(again.to_string(), printed);
    }
});
