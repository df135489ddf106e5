#![no_main]

use hypercmc::export::pipeline::parse_q_range;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(qs) = parse_q_range(s) {
        assert!(!qs.is_empty() && qs.len() <= 1000);
        assert!(qs.iter().all(|q| q.is_finite()));
    }
});
