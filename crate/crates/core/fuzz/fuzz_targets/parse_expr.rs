#![no_main]

use hypercmc::expr::parse_expr;
use hypercmc::C64;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(e) = parse_expr(s) else { return };
    // printing must parse back to the same tree
    let printed = e.to_string();
    let back = parse_expr(&printed).expect("printed expression failed to parse");
    assert_eq!(back, e, "{printed}");
    let _ = e.eval(C64::new(0.3, -0.2));
});
