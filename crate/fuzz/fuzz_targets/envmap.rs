#![no_main]

use libfuzzer_sys::fuzz_target;
use uavpc::env::{EnvMap, Position};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(env) = EnvMap::from_json(text) {
        let again = EnvMap::from_json(&env.to_json().unwrap()).expect("written map parses");
        assert_eq!(env, again);
        let a = Position::new(0.25, 0.375, 0.025);
        let b = Position::new(0.5, 0.5, 0.05);
        assert_eq!(env.is_los(&a, &b), env.is_los(&b, &a));
    }
});
