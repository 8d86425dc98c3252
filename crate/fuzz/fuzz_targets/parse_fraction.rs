#![no_main]

use continuant_lab::cf::cf_expand;
use continuant_lab::io::parse_fraction;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(f) = parse_fraction(s) {
            if let Ok(w) = cf_expand(f) {
                assert_eq!(w.value().unwrap(), f);
            }
        }
    }
});
