#![no_main]

use libfuzzer_sys::fuzz_target;
use matroidphase::minors::TargetSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = text.parse::<TargetSpec>() {
        let again: TargetSpec = spec.to_string().parse().expect("display parses back");
        assert_eq!(again, spec);
        if let Some(t) = spec.to_target() {
            let _ = t.name();
        }
    }
});
