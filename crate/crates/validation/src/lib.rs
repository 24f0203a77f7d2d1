//! The acceptance criteria as functions, each returning a verdict with its evidence.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use matroidphase::exp::{Experiment, FieldSpec, FinderMode, FinderSpec, SweepConfig};
use matroidphase::gf::Field;
use matroidphase::minors::{
    complete_matrix, is_complete, minor_bruteforce, minor_randomized,
    pg_from_3complete, pipeline_run, step_up, verify_witness, NotFoundReason, PipelineParams,
    RandomizedOutcome, TargetMinor, TargetSpec,
};
use matroidphase::peel::{hypergraph_of, two_core};
use matroidphase::process::{dist_make, sample_matrix, DistSpec};
use matroidphase::spmat::{contract_rep, parallel, rank, simplify, DenseMatrix, SparseMatrix};
use matroidphase::thresholds::{self, beta, dk, dk_expression, mu_of, rank_limit};

#[derive(Debug, Clone)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Verdict { pass, detail }
    }
}

fn binary_k3() -> matroidphase::process::ColumnDistribution {
    dist_make(&Field::binary(), 3, &DistSpec::Uniform).expect("valid distribution")
}

/// Threshold constants against their published values.
pub fn constants() -> Verdict {
    let start = Instant::now();
    let d2 = thresholds::report(2, None).expect("k = 2 report").d_k;
    let mu3 = mu_of(3.0).expect("mu(3)");
    let b3 = beta(3).expect("beta(3)");
    let max_beta = (3..=10).map(|k| beta(k).expect("beta")).fold(0.0f64, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let pass = (d2 - 1.0).abs() <= 1e-9
        && (mu3 - 2.1491258).abs() <= 1e-6
        && (b3 - 0.4254370997).abs() <= 1e-8
        && max_beta < 0.45
        && secs < 1.0;
    Verdict::new(
        pass,
        format!("d_2={d2:.12} mu(3)={mu3:.9} beta(3)={b3:.11} max beta(3..10)={max_beta:.6} in {secs:.3}s"),
    )
}

/// Root of the d_k expression by a plain grid scan and linear interpolation.
fn dk_grid_oracle(k: usize, from: f64, step: f64) -> Option<f64> {
    let mut prev = (from, dk_expression(k, from));
    let mut i = 1;
    loop {
        let d = from + i as f64 * step;
        if d > k as f64 + 1.0 {
            return None;
        }
        let v = dk_expression(k, d);
        if v < 0.0 {
            let (d0, v0) = prev;
            return Some(d0 + (d - d0) * v0 / (v0 - v));
        }
        prev = (d, v);
        i += 1;
    }
}

/// Solver brackets, the grid-scan oracle and the subcritical rank limit.
pub fn solver_consistency() -> Verdict {
    let start = Instant::now();
    let mut pass = true;
    let mut worst_oracle = 0.0f64;
    let mut worst_width = 0.0f64;
    let mut worst_rank = 0.0f64;
    for k in 3..=6 {
        let r = dk(k).expect("dk");
        let (lo, hi) = r.d_k_bracket;
        worst_width = worst_width.max(hi - lo);
        pass &= hi - lo <= 1e-9 * (1.0 + 1e-9);
        pass &= dk_expression(k, lo) >= 0.0 && dk_expression(k, hi) < 0.0;
        match dk_grid_oracle(k, r.d_star_bracket.1, 1e-4) {
            Some(g) => worst_oracle = worst_oracle.max((g - r.d_k).abs()),
            None => pass = false,
        }
        let mut d = 0.05;
        while d < r.d_k - 1e-3 {
            let l = rank_limit(k, d).expect("rank limit").limit;
            worst_rank = worst_rank.max((l - d / k as f64).abs());
            d += 0.01;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= worst_oracle <= 1e-6 && worst_rank <= 1e-12 && secs < 10.0;
    Verdict::new(
        pass,
        format!(
            "k=3..6: max bracket width {worst_width:.2e}, max |grid - d_k| {worst_oracle:.2e}, \
             max |rank_limit - d/k| {worst_rank:.2e} in {secs:.2}s"
        ),
    )
}

/// Full column rank below the threshold, deficiency above.
pub fn subcritical_rank() -> Verdict {
    let n = 3000;
    let dist = binary_k3();
    let count = |ratio: f64, seed_base: u64, want_full: bool| {
        let m = (ratio * n as f64).round() as usize;
        (0..100u64)
            .filter(|&t| {
                let a = sample_matrix(&dist, n, m, seed_base + t).expect("sample");
                (a.rank() == m) == want_full
            })
            .count()
    };
    let full = count(0.85, 30_000, true);
    let deficient = count(0.95, 40_000, false);
    Verdict::new(
        full >= 95 && deficient >= 90,
        format!("m=0.85n full rank {full}/100, m=0.95n deficient {deficient}/100"),
    )
}

/// Core fractions and red edge fraction at d = 3.
pub fn core_sizes() -> Verdict {
    let n = 100_000;
    let d = 3.0;
    let dist = binary_k3();
    let m = (d * n as f64 / 3.0).round() as usize;
    let (mut rows, mut cols, mut red) = (0.0, 0.0, 0.0);
    let trials = 10;
    for t in 0..trials {
        let pr = two_core(&sample_matrix(&dist, n, m, 50_000 + t).expect("sample"));
        rows += pr.kept_rows.len() as f64 / n as f64;
        cols += pr.kept_cols.len() as f64 / n as f64;
        let h = hypergraph_of(&pr).expect("nonempty core at d = 3");
        red += h.red_count() as f64 / h.n_edges() as f64;
    }
    let t = trials as f64;
    let (rows, cols, red) = (rows / t, cols / t, red / t);
    let (pr, pc) = thresholds::core_sizes(3, d).expect("core sizes");
    let b3 = beta(3).expect("beta");
    let at_d = thresholds::red_fraction(thresholds::core_row_mu(3, d).expect("mu"));
    let rows_ok = (rows - pr).abs() <= 0.02;
    let cols_ok = (cols - pc).abs() <= 0.02;
    let red_ok = (red - b3).abs() <= 0.02;
    Verdict::new(
        rows_ok && cols_ok && red_ok,
        format!(
            "rows {rows:.4} vs {pr:.4}{}, cols {cols:.4} vs {pc:.4}{}, red fraction {red:.4} vs \
             beta_3 {b3:.4}{} (truncated-Poisson value at d=3: {at_d:.4})",
            mark(rows_ok),
            mark(cols_ok),
            mark(red_ok)
        ),
    )
}

fn mark(ok: bool) -> &'static str {
    if ok {
        ""
    } else {
        " [out of tolerance]"
    }
}

pub const TRANSITION_RATIOS: [f64; 7] = [0.80, 0.85, 0.90, 0.95, 1.00, 1.05, 1.10];

/// Frequency of a U(2,3) minor across the threshold.
pub fn phase_transition() -> Verdict {
    let trials = 50;
    let cfg = SweepConfig {
        field: FieldSpec { p: 2, e: 1 },
        k: 3,
        n: 2000,
        ratios: TRANSITION_RATIOS.to_vec(),
        trials,
        distribution: DistSpec::Uniform,
        target: TargetSpec::U23,
        finder: FinderSpec { mode: FinderMode::Random, budget: 1000 },
        master_seed: 2024,
        output: None,
        diagnostics: false,
        timing: false,
    };
    let exp = Experiment::new(cfg).expect("valid config");
    let mut sink = Vec::new();
    let summary = exp.run_sweep(&mut sink, None, None).expect("in-memory sweep");
    let freq: Vec<f64> = summary.iter().map(|s| s.found_frequency()).collect();
    let at = |r: f64| freq[TRANSITION_RATIOS.iter().position(|&x| x == r).expect("grid")];
    let var = |p: f64| p * (1.0 - p) / trials as f64;
    let monotone = freq.windows(2).all(|w| w[1] >= w[0] - 2.0 * (var(w[0]) + var(w[1])).sqrt());
    let replays_ok = String::from_utf8(sink).expect("utf8").lines().all(|l| !l.contains("witness-replay-failed"));
    let pass = at(0.85) <= 0.05 && at(1.05) >= 0.90 && monotone && replays_ok;
    let table: Vec<String> =
        TRANSITION_RATIOS.iter().zip(&freq).map(|(r, f)| format!("{r:.2}:{f:.2}")).collect();
    Verdict::new(pass, format!("found frequency {} (nondecreasing within 2 sigma: {monotone})", table.join(" ")))
}

/// Randomized finder against the exhaustive oracle on small instances.
pub fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut contradictions, mut misses, mut positives, mut replay_failures) = (0, 0, 0, 0);
    let mut instances = 0;
    for q in [2u32, 3] {
        let field = Field::with_order(q).expect("prime");
        for i in 0..100u64 {
            let rows = rng.random_range(2..=6);
            let cols = rng.random_range(1..=10);
            let a = if i % 2 == 0 {
                let k = rng.random_range(2..=rows.min(3));
                let dist = dist_make(&field, k, &DistSpec::Uniform).expect("valid");
                sample_matrix(&dist, rows, cols, rng.random()).expect("sample")
            } else {
                let columns: Vec<Vec<u8>> = (0..cols)
                    .map(|_| (0..rows).map(|_| if rng.random_bool(0.5) { rng.random_range(1..q as u8) } else { 0 }).collect())
                    .collect();
                SparseMatrix::from_dense_columns(&field, rows, &columns)
            };
            let target = match (q, i % 3) {
                (2, 2) => TargetMinor::Pg { t: 3, q: 2 },
                (3, 2) => TargetMinor::Pg { t: 2, q: 3 },
                _ => TargetMinor::U23,
            };
            let n = target.representation(&field).expect("target over this field");
            instances += 1;
            let brute = minor_bruteforce(&a, &target).expect("small instance");
            let fast = minor_randomized(&a, &target, 10_000, &mut rng).expect("valid input");
            for w in brute.iter().chain(fast.witness()) {
                positives += 1;
                if verify_witness(&a, &n, w).is_err() {
                    replay_failures += 1;
                }
            }
            match (&fast, &brute) {
                (RandomizedOutcome::Found(_), None) => contradictions += 1,
                (
                    RandomizedOutcome::NotFound(NotFoundReason::FreeMatroid | NotFoundReason::RankTooSmall),
                    Some(_),
                ) => contradictions += 1,
                (RandomizedOutcome::NotFound(_), Some(_)) => misses += 1,
                _ => {}
            }
        }
    }
    Verdict::new(
        contradictions == 0 && replay_failures == 0,
        format!(
            "{instances} instances: {contradictions} contradictions, {positives} witnesses \
             ({replay_failures} failed replay), {misses} budget misses"
        ),
    )
}

/// Row-space equality of two representations on the same labels.
fn row_equivalent(a: &SparseMatrix, b: &SparseMatrix) -> bool {
    let (da, db) = (a.to_dense(), b.to_dense());
    let mut rows = da.to_rows();
    rows.extend(db.to_rows());
    let stacked = DenseMatrix::from_rows(a.field(), a.n_cols(), &rows);
    let r = rank(&stacked);
    a.labels() == b.labels() && r == rank(&da) && r == rank(&db)
}

/// The step-up lemma and the PG(3,2) recursion.
pub fn constructions() -> Verdict {
    let start = Instant::now();
    let f = Field::binary();
    let input = complete_matrix(&f, 15, 3);
    let step = step_up(&input, 3, 3).expect("step_up on a 3-complete rank-15 input");
    let replay = contract_rep(&input, &step.contracted).expect("labels exist");
    let step_ok = step.matrix.rank() == 3
        && is_complete(&step.matrix, 4)
        && simplify(&step.matrix).n_cols() == 7
        && row_equivalent(&replay, &step.matrix);

    let big = complete_matrix(&f, 64, 3);
    let pg = pg_from_3complete(&big, 4).expect("PG(3,2) from rank 64");
    let target = TargetMinor::Pg { t: 4, q: 2 }.representation(&f).expect("PG(3,2)");
    let cols = pg.matrix.columns();
    let pairwise = (0..cols.len()).all(|i| (i + 1..cols.len()).all(|j| !parallel(&f, &cols[i], &cols[j])));
    let pg_ok = cols.len() == 15
        && pairwise
        && cols.iter().all(|c| !c.is_empty())
        && verify_witness(&big, &target, &pg.witness).is_ok();
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        step_ok && pg_ok && secs < 60.0,
        format!(
            "step_up: rank {}, 4-complete {}, {} points, replay {}; PG(3,2): {} points, pairwise \
             non-parallel {pairwise}, witness {} in {secs:.2}s",
            step.matrix.rank(),
            is_complete(&step.matrix, 4),
            simplify(&step.matrix).n_cols(),
            row_equivalent(&replay, &step.matrix),
            cols.len(),
            if verify_witness(&big, &target, &pg.witness).is_ok() { "verified" } else { "REJECTED" },
        ),
    )
}

/// Pipeline outcome counts and exact checks per run.
#[derive(Debug, Default, Clone)]
pub struct PipelineTally {
    pub runs: usize,
    pub reached: usize,
    pub failures: Vec<(String, usize)>,
    pub residual_bad: usize,
    pub rank_bad: usize,
    pub degree_one_exceptions: usize,
    pub runs_with_light_combos: usize,
}

/// Exact identities of the supercritical construction over 20 runs.
pub fn pipeline_exactness() -> (Verdict, PipelineTally) {
    let dist = binary_k3();
    let (n, d) = (2000, 2.6);
    let m1 = (d * n as f64 / 3.0).round() as usize;
    let mut tally = PipelineTally::default();
    let mut codes: std::collections::BTreeMap<String, usize> = Default::default();
    let mut errors = 0;
    for seed in 0..20u64 {
        tally.runs += 1;
        let a1 = sample_matrix(&dist, n, m1, 800 + seed).expect("sample");
        let params = PipelineParams { seed: 900 + seed, ..Default::default() };
        let trace = match pipeline_run(&a1, &dist, &params) {
            Ok(t) => t,
            Err(e) => {
                *codes.entry(format!("error: {e}")).or_default() += 1;
                errors += 1;
                continue;
            }
        };
        let code = trace.failure_code();
        *codes.entry(if code.is_empty() { "success".into() } else { code.into() }).or_default() += 1;
        if !trace.reached_contraction() {
            continue;
        }
        tally.reached += 1;
        tally.degree_one_exceptions += trace.diagnostics.degree_one_exceptions;
        tally.runs_with_light_combos += (trace.diagnostics.light_combos > 0) as usize;

        // Tails recomputed from the raw second round.
        let f = a1.field().clone();
        let mut row_pos = vec![None; n];
        for (p, &i) in trace.core_rows.iter().enumerate() {
            row_pos[i] = Some(p);
        }
        let base = trace.m1 + trace.first_round.len();
        let a3 = trace.a3.to_dense();
        let all: Vec<usize> = (0..a3.n_cols()).collect();
        let a_star = a3.select(&trace.a_star_rows, &all);
        let mut bad = 0;
        for &label in &trace.v {
            let col = &trace.second_round[label - base];
            let mut dense = vec![0u8; trace.core_rows.len()];
            for &(i, v) in col {
                dense[row_pos[i].expect("V lies in the core rows")] = v;
            }
            let x: Vec<u8> = trace.a_dd_rows.iter().map(|&i| dense[i]).collect();
            let y: Vec<u8> = trace.a_star_rows.iter().map(|&i| dense[i]).collect();
            let pred = a_star.mul_vec(&trace.b.mul_vec(&x));
            if pred.iter().zip(&y).any(|(&p, &yy)| f.sub(yy, p) != 0) {
                bad += 1;
            }
        }
        if bad > 0 || trace.diagnostics.residual_violations > 0 {
            tally.residual_bad += 1;
        }
        if trace.a6.rank() != trace.r || trace.diagnostics.a6_rank != trace.r {
            tally.rank_bad += 1;
        }
    }
    tally.failures = codes.into_iter().collect();
    let accounted: usize = tally.failures.iter().map(|(_, c)| c).sum();
    let pass = errors == 0
        && accounted == tally.runs
        && tally.residual_bad == 0
        && tally.rank_bad == 0
        && tally.degree_one_exceptions == 0;
    let outcomes: Vec<String> = tally.failures.iter().map(|(c, k)| format!("{c}={k}")).collect();
    let verdict = Verdict::new(
        pass,
        format!(
            "{} runs [{}]; {} reached A6: residual failures {}, rank(A6) != r {}, degree-one \
             exceptions {}; runs with a combination lighter than delta n' {}",
            tally.runs,
            outcomes.join(" "),
            tally.reached,
            tally.residual_bad,
            tally.rank_bad,
            tally.degree_one_exceptions,
            tally.runs_with_light_combos
        ),
    );
    (verdict, tally)
}
