#![no_main]

use libfuzzer_sys::fuzz_target;
use matroidphase::exp::SweepConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = SweepConfig::from_json(text) {
        let back = serde_json::to_string(&c).expect("configs serialize");
        SweepConfig::from_json(&back).expect("serialized configs parse");
    }
});
