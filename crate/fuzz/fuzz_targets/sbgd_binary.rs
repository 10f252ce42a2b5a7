#![no_main]

use libfuzzer_sys::fuzz_target;
use sbary::io::{decode_binary, encode_binary};

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = decode_binary(data) {
        // anything accepted must survive a re-encode unchanged
        let again = decode_binary(&encode_binary(&m)).expect("re-encoded measure decodes");
        assert_eq!(again.mass(), m.mass());
        assert!(again.grid().same_as(m.grid()));
    }
});
