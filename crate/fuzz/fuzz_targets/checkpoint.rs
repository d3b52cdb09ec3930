#![no_main]

use libfuzzer_sys::fuzz_target;
use uavpc::estimator::ChannelEstimator;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(est) = ChannelEstimator::from_json(text) {
        let again = ChannelEstimator::from_json(&est.to_json().unwrap()).expect("written checkpoint parses");
        assert_eq!(est, again);
    }
});
