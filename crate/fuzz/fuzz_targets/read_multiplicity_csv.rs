#![no_main]

use continuant_lab::io::read_multiplicity_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(t) = read_multiplicity_csv(s) {
            let sum: u64 = t.iter().map(|(_, c)| c).sum();
            assert_eq!(sum, t.total());
        }
    }
});
