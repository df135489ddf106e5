#![no_main]

use hypercmc::export::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = RunConfig::parse(s) else { return };
    let _ = cfg.validate();
    let back = RunConfig::parse(&cfg.to_toml()).expect("serialized config failed to parse");
    assert_eq!(back, cfg);
});
