#![no_main]

use libfuzzer_sys::fuzz_target;
use matroidphase::gf::Field;
use matroidphase::process::{dist_make, DistSpec};

fuzz_target!(|data: &[u8]| {
    let Some((&head, rest)) = data.split_first() else { return };
    let Ok(spec) = serde_json::from_slice::<DistSpec>(rest) else { return };
    let q = [2, 3, 4, 5, 7, 8, 9][head as usize % 7];
    let k = 2 + (head as usize / 7) % 5;
    let field = Field::with_order(q).expect("prime power");
    if let Ok(d) = dist_make(&field, k, &spec) {
        let total: f64 = d.atoms().iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-6);
    }
});
