#![no_main]

use continuant_lab::io::parse_alphabet;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(a) = parse_alphabet(s) {
            // display form parses back to the same alphabet
            assert_eq!(parse_alphabet(&a.to_string()).unwrap(), a);
        }
    }
});
