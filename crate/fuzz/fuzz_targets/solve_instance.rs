#![no_main]

use libfuzzer_sys::fuzz_target;
use uavpc::solver::{solve_instance, SolveInstance};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(inst) = SolveInstance::from_json(text) else { return };
    if inst.h_ul.len() > 32 {
        return;
    }
    if let Ok(out) = solve_instance(&inst) {
        if let Some(t) = out.tightness {
            assert!(t.is_finite());
        }
    }
});
