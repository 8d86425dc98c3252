#![no_main]

use continuant_lab::io::read_points_csv;
use continuant_lab::qmc::{star_discrepancy, MAX_EXACT_POINTS};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(ps) = read_points_csv(s) {
            if !ps.is_empty() && ps.len() <= MAX_EXACT_POINTS / 10 {
                let d = star_discrepancy(&ps).unwrap();
                assert!(d > 0.0 && d <= 1.0);
            }
        }
    }
});
