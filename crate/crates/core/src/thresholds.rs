//! Threshold constants of the random column process.
//!
//! * `rho(k, d)`: the largest fixed point of `x = 1 - exp(-d x^(k-1))` in `[0, 1]`.
//! * `d_star`: where `rho` first becomes positive (2-core emergence).
//! * `d_k`: where `rho - d rho^(k-1) + (1 - 1/k) d rho^k` first turns negative; the
//!   fixed-minor threshold density is `d_k / k`.
//! * the rank limit, core-size fractions, and the truncated-Poisson constants
//!   `f`, `mu_of` and `beta`.

use serde::Serialize;
use thiserror::Error;

/// Step of the downward scan that locates the largest fixed point.
pub const RHO_SCAN_STEP: f64 = 1e-4;
/// Step of the density scan that checks `d_k` has a single sign change.
pub const DK_SCAN_STEP: f64 = 1e-3;
/// Target width of every outer bisection bracket.
pub const BRACKET_WIDTH: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error("k must be at least {min}, got {k}")]
    KTooSmall { k: usize, min: usize },
    #[error("density must be finite and nonnegative, got {0}")]
    BadDensity(f64),
    #[error("the d_k expression changes sign {count} times on the scan grid")]
    MultipleSignChanges { count: usize },
    #[error("the d_k expression never turns negative below d = {upper}")]
    NoSignChange { upper: f64 },
    #[error("f(mu) = {0} has no positive root; need c > 2")]
    OutOfRange(f64),
}

fn check_kd(k: usize, d: f64, min_k: usize) -> Result<(), ThresholdError> {
    if k < min_k {
        return Err(ThresholdError::KTooSmall { k, min: min_k });
    }
    if !d.is_finite() || d < 0.0 {
        return Err(ThresholdError::BadDensity(d));
    }
    Ok(())
}

/// `x - (1 - exp(-d x^(k-1)))`, positive above the largest fixed point.
fn gap(k: usize, d: f64, x: f64) -> f64 {
    x + (-d * x.powi(k as i32 - 1)).exp_m1()
}

fn bisect_root(k: usize, d: f64, mut lo: f64, mut hi: f64) -> f64 {
    // Invariant: gap(lo) <= 0 < gap(hi).
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return hi;
        }
        if gap(k, d, mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// The largest fixed point of `x = 1 - exp(-d x^(k-1))` in `[0, 1]`.
pub fn rho(k: usize, d: f64) -> Result<f64, ThresholdError> {
    check_kd(k, d, 2)?;
    Ok(rho_unchecked(k, d))
}

fn rho_unchecked(k: usize, d: f64) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    let steps = (1.0 / RHO_SCAN_STEP).round() as usize;
    let mut prev = 1.0;
    for j in 1..steps {
        let x = 1.0 - j as f64 * RHO_SCAN_STEP;
        if gap(k, d, x) <= 0.0 {
            return bisect_root(k, d, x, prev);
        }
        prev = x;
    }
    // Below the grid only k = 2 just above d = 1 can still have a root; halve toward 0.
    let mut x = prev;
    while x > 1e-300 {
        let next = 0.5 * x;
        if gap(k, d, next) <= 0.0 {
            return bisect_root(k, d, next, x);
        }
        x = next;
    }
    0.0
}

/// Bracket `[lo, hi]` of width below [`BRACKET_WIDTH`] with `pred(lo)` false and `pred(hi)` true.
fn bisect_predicate(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> (f64, f64) {
    while hi - lo > BRACKET_WIDTH {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// `inf { d : rho(k, d) > 0 }` as a bisection bracket.
pub fn d_star(k: usize) -> Result<(f64, f64), ThresholdError> {
    check_kd(k, 0.0, 2)?;
    let positive = |d: f64| rho_unchecked(k, d) > 0.0;
    let mut hi = 1.0;
    while !positive(hi) {
        hi *= 2.0;
    }
    Ok(bisect_predicate(0.0, hi, positive))
}

/// `e^y - 1 - y`, accurate for small `y`.
fn expm1_minus_x(y: f64) -> f64 {
    if y.abs() < 0.5 {
        let mut term = y * y / 2.0;
        let mut sum = 0.0f64;
        let mut j = 2.0;
        while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
            sum += term;
            j += 1.0;
            term *= y / j;
        }
        sum
    } else {
        y.exp_m1() - y
    }
}

/// The d_k expression `rho - d rho^(k-1) + (1 - 1/k) d rho^k` at density `d`.
pub fn dk_expression(k: usize, d: f64) -> f64 {
    let r = rho_unchecked(k, d);
    r - d * r.powi(k as i32 - 1) + (1.0 - 1.0 / k as f64) * d * r.powi(k as i32)
}

/// Sign of the d_k expression, evaluated stably.
///
/// With `y = d rho^(k-1)` the fixed point gives `rho = 1 - e^-y`, so the expression is
/// `rho * h(y)` with `h(y) = 1 + (1 - 1/k) y - y / (1 - e^-y)`. For k = 2 the two sides
/// of `h` cancel to second order as `d -> 1`, so small `y` uses the series
/// `y / (1 - e^-y) = 1 + y/2 + y^2/12 - y^4/720 + ...`.
fn dk_negative(k: usize, d: f64) -> bool {
    let r = rho_unchecked(k, d);
    if r <= 0.0 {
        return false;
    }
    let y = d * r.powi(k as i32 - 1);
    let c = 1.0 - 1.0 / k as f64;
    let h = if y < 1e-3 {
        (c - 0.5) * y - y * y / 12.0 + y.powi(4) / 720.0
    } else {
        1.0 + c * y + y / (-y).exp_m1()
    };
    h < 0.0
}

/// Bisection brackets for `d_star` and `d_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DkResult {
    pub k: usize,
    pub d_star: f64,
    pub d_star_bracket: (f64, f64),
    pub d_k: f64,
    pub d_k_bracket: (f64, f64),
}

/// `d_star` and `d_k` for support size `k`.
///
/// After locating `d_star`, the d_k predicate is scanned on a grid of step
/// [`DK_SCAN_STEP`] up to `k + 1`; more than one sign change is reported as an error
/// rather than resolved by guessing.
pub fn dk(k: usize) -> Result<DkResult, ThresholdError> {
    let (s_lo, s_hi) = d_star(k)?;
    let upper = k as f64 + 1.0;
    let mut grid = vec![s_lo, s_hi];
    let mut i = 1;
    loop {
        let d = s_hi + i as f64 * DK_SCAN_STEP;
        if d > upper {
            break;
        }
        grid.push(d);
        i += 1;
    }
    let signs: Vec<bool> = grid.iter().map(|&d| dk_negative(k, d)).collect();
    let changes: Vec<usize> = (1..signs.len()).filter(|&i| signs[i] != signs[i - 1]).collect();
    match changes.as_slice() {
        [] => Err(ThresholdError::NoSignChange { upper }),
        [i] if signs[*i] => {
            let (lo, hi) = bisect_predicate(grid[i - 1], grid[*i], |d| dk_negative(k, d));
            Ok(DkResult {
                k,
                d_star: 0.5 * (s_lo + s_hi),
                d_star_bracket: (s_lo, s_hi),
                d_k: 0.5 * (lo + hi),
                d_k_bracket: (lo, hi),
            })
        }
        _ => Err(ThresholdError::MultipleSignChanges {
            count: changes.len(),
        }),
    }
}

/// Row and column fractions of the 2-core at density `d`.
pub fn core_sizes(k: usize, d: f64) -> Result<(f64, f64), ThresholdError> {
    check_kd(k, d, 2)?;
    let r = rho_unchecked(k, d);
    if r == 0.0 {
        return Ok((0.0, 0.0));
    }
    let rk1 = r.powi(k as i32 - 1);
    let rk = rk1 * r;
    Ok((r - d * rk1 + d * rk, d * rk / k as f64))
}

/// Column-to-row ratio of the core, `pi_k(d)`; 0 when the core is empty.
pub fn core_density(k: usize, d: f64) -> Result<f64, ThresholdError> {
    let (rows, cols) = core_sizes(k, d)?;
    Ok(if rows > 0.0 { cols / rows } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankLimitResult {
    pub k: usize,
    pub d: f64,
    pub limit: f64,
    pub alpha_star: f64,
}

/// The bracketed objective of the rank limit at `alpha`.
pub fn rank_objective(k: usize, d: f64, alpha: f64) -> f64 {
    let ak1 = alpha.powi(k as i32 - 1);
    let ak = ak1 * alpha;
    (-d * ak1).exp() - (d / k as f64) * (1.0 - k as f64 * ak1 + (k as f64 - 1.0) * ak)
}

/// `lim rk(A_m)/n` for `m = (d/k) n`: one minus the maximum of the objective over `[0, 1]`.
pub fn rank_limit(k: usize, d: f64) -> Result<RankLimitResult, ThresholdError> {
    check_kd(k, d, 1)?;
    let phi = |a: f64| rank_objective(k, d, a);
    let grid = 1000;
    let mut best = 0;
    let mut best_val = phi(0.0);
    for i in 1..=grid {
        let v = phi(i as f64 / grid as f64);
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    let mut alpha = best as f64 / grid as f64;
    if best > 0 && best < grid {
        let (mut a, mut b) = ((best - 1) as f64 / grid as f64, (best + 1) as f64 / grid as f64);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        while b - a > 1e-12 {
            let c = b - g * (b - a);
            let e = a + g * (b - a);
            if phi(c) >= phi(e) {
                b = e;
            } else {
                a = c;
            }
        }
        let refined = 0.5 * (a + b);
        if phi(refined) > best_val {
            alpha = refined;
            best_val = phi(refined);
        }
    }
    if alpha == 0.0 || best_val <= phi(0.0) {
        return Ok(RankLimitResult {
            k,
            d,
            limit: d / k as f64,
            alpha_star: 0.0,
        });
    }
    Ok(RankLimitResult {
        k,
        d,
        limit: 1.0 - best_val,
        alpha_star: alpha,
    })
}

/// `f(x) = x (e^x - 1) / (e^x - 1 - x)`; increasing on `x > 0` with limit 2 at 0.
pub fn f(x: f64) -> f64 {
    x * x.exp_m1() / expm1_minus_x(x)
}

/// The positive root of `f(mu) = c`, for `c > 2`.
pub fn mu_of(c: f64) -> Result<f64, ThresholdError> {
    if !(c > 2.0) || !c.is_finite() {
        return Err(ThresholdError::OutOfRange(c));
    }
    // f(x) > x, so the root lies below c.
    let (mut lo, mut hi) = (0.0f64, c);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if mid == 0.0 || f(mid) < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Fraction of 2-edges among the edges of a Poisson(mu) degree law truncated at 2.
pub fn red_fraction(mu: f64) -> f64 {
    mu * mu / (2.0 * expm1_minus_x(mu))
}

/// `beta_k = (mu^2/2) / (e^mu - 1 - mu)` with `mu = mu_of(k)`.
pub fn beta(k: usize) -> Result<f64, ThresholdError> {
    if k < 3 {
        return Err(ThresholdError::KTooSmall { k, min: 3 });
    }
    Ok(red_fraction(mu_of(k as f64)?))
}

/// Poisson parameter of the core row degrees at density `d`, `d rho^(k-1)`.
pub fn core_row_mu(k: usize, d: f64) -> Result<f64, ThresholdError> {
    Ok(d * rho(k, d)?.powi(k as i32 - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub bracket_width: f64,
    pub rho_scan_step: f64,
    pub dk_scan_step: f64,
}

/// Everything the `thresholds` command prints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub k: usize,
    pub d: Option<f64>,
    pub rho: Option<f64>,
    pub d_star: f64,
    pub d_star_bracket: (f64, f64),
    pub d_k: f64,
    pub d_k_bracket: (f64, f64),
    pub ratio: f64,
    pub core_row_frac: Option<f64>,
    pub core_col_frac: Option<f64>,
    pub pi: Option<f64>,
    pub rank_limit: Option<f64>,
    pub beta: Option<f64>,
    pub tolerances: Tolerances,
}

pub fn report(k: usize, d: Option<f64>) -> Result<ThresholdReport, ThresholdError> {
    let dkr = dk(k)?;
    let mut rep = ThresholdReport {
        k,
        d,
        rho: None,
        d_star: dkr.d_star,
        d_star_bracket: dkr.d_star_bracket,
        d_k: dkr.d_k,
        d_k_bracket: dkr.d_k_bracket,
        ratio: dkr.d_k / k as f64,
        core_row_frac: None,
        core_col_frac: None,
        pi: None,
        rank_limit: None,
        beta: if k >= 3 { Some(beta(k)?) } else { None },
        tolerances: Tolerances {
            bracket_width: BRACKET_WIDTH,
            rho_scan_step: RHO_SCAN_STEP,
            dk_scan_step: DK_SCAN_STEP,
        },
    };
    if let Some(d) = d {
        let (rows, cols) = core_sizes(k, d)?;
        rep.rho = Some(rho(k, d)?);
        rep.core_row_frac = Some(rows);
        rep.core_col_frac = Some(cols);
        rep.pi = Some(core_density(k, d)?);
        rep.rank_limit = Some(rank_limit(k, d)?.limit);
    }
    Ok(rep)
}
