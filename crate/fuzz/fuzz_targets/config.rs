#![no_main]

use libfuzzer_sys::fuzz_target;
use uavpc::harness::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::parse(text) {
        let again = RunConfig::parse(&cfg.to_config_string()).expect("written config parses");
        assert_eq!(cfg, again);
    }
});
