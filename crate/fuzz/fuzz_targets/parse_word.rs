#![no_main]

use continuant_lab::cf::{cf_expand, word_to_matrix};
use continuant_lab::io::parse_word;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(w) = parse_word(s) {
            if w.len() <= 64 {
                let m = word_to_matrix(&w);
                assert!(m.det() == 1.into() || m.det() == (-1).into());
                if let Ok(f) = w.value() {
                    assert_eq!(cf_expand(f).unwrap().value().unwrap(), f);
                }
            }
        }
    }
});
