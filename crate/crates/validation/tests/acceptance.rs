//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

use std::time::Instant;

use matroidphase_validation as v;

fn main() {
    let criteria: [(&str, fn() -> v::Verdict); 8] = [
        ("threshold constants", v::constants),
        ("solver self-consistency", v::solver_consistency),
        ("subcritical rank", v::subcritical_rank),
        ("core sizes and red fraction", v::core_sizes),
        ("phase transition", v::phase_transition),
        ("oracle equivalence", v::oracle_equivalence),
        ("constructions", v::constructions),
        ("pipeline exactness", || v::pipeline_exactness().0),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| *f == id) {
            continue;
        }
        let start = Instant::now();
        let verdict = run();
        let status = if verdict.pass { "PASS" } else { "FAIL" };
        failed += !verdict.pass as usize;
        println!(
            "{status} {id} {name}: {} ({:.1}s)",
            verdict.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
