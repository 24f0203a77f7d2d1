//! The random column process: each column picks a uniform k-subset of rows and fills
//! it with a draw from a permutation-invariant law on k-tuples of nonzero elements.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::Field;
use crate::spmat::{SparseColumn, SparseMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProcessError {
    #[error("support size k must be at least 2, got {0}")]
    KTooSmall(usize),
    #[error("atom {index} has {found} values, expected {k}")]
    WrongArity { index: usize, found: usize, k: usize },
    #[error("atom {index} contains zero")]
    ZeroEntry { index: usize },
    #[error("atom {index} contains {value}, not an element of GF({q})")]
    BadValue { index: usize, value: u32, q: u32 },
    #[error("atom {index} has invalid probability {p}")]
    BadProbability { index: usize, p: f64 },
    #[error("atom probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("no atoms given")]
    NoAtoms,
    #[error("n = {n} is smaller than k = {k}")]
    NTooSmall { n: usize, k: usize },
}

/// One atom of an explicit distribution as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub values: Vec<u32>,
    pub p: f64,
}

/// Distribution spec: `{"kind":"uniform"}`, `{"kind":"all-ones"}` or
/// `{"kind":"atoms","atoms":[{"values":[..],"p":..}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistSpec {
    Uniform,
    AllOnes,
    Atoms { atoms: Vec<AtomSpec> },
}

#[derive(Debug, Clone)]
enum Law {
    /// Independent uniform nonzero values; equal to the uniform law on tuples.
    Uniform,
    Atoms {
        atoms: Vec<(Vec<u8>, f64)>,
        index: WeightedIndex<f64>,
    },
}

/// A permutation-invariant law on (F*)^k, stored as multisets with probabilities.
#[derive(Debug, Clone)]
pub struct ColumnDistribution {
    field: Field,
    k: usize,
    law: Law,
}

impl ColumnDistribution {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.law, Law::Uniform)
    }

    /// Atoms as sorted multisets with probabilities, sorted by multiset.
    ///
    /// The uniform law is expanded here; its size grows like C(q+k-2, k).
    pub fn atoms(&self) -> Vec<(Vec<u8>, f64)> {
        match &self.law {
            Law::Atoms { atoms, .. } => atoms.clone(),
            Law::Uniform => {
                let q1 = self.field.order() - 1;
                let total = (q1 as f64).powi(self.k as i32);
                let mut out = Vec::new();
                let mut cur = Vec::with_capacity(self.k);
                uniform_multisets(1, q1 as u8, self.k, &mut cur, &mut |ms| {
                    out.push((ms.to_vec(), arrangements(ms) / total));
                });
                out
            }
        }
    }

    /// Probability that every value equals 1.
    pub fn prob_all_ones(&self) -> f64 {
        let ones = vec![1u8; self.k];
        self.atoms()
            .iter()
            .find(|(m, _)| *m == ones)
            .map_or(0.0, |a| a.1)
    }

    /// Draws the values of one column, in a uniformly random order.
    fn draw_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        match &self.law {
            Law::Uniform => {
                let q = self.field.order();
                (0..self.k).map(|_| rng.random_range(1..q) as u8).collect()
            }
            // The caller pairs these with a uniformly ordered support, which is what
            // makes the order of the returned values uniform.
            Law::Atoms { atoms, index } => atoms[index.sample(rng)].0.clone(),
        }
    }
}

fn uniform_multisets(
    from: u8,
    max: u8,
    left: usize,
    cur: &mut Vec<u8>,
    emit: &mut dyn FnMut(&[u8]),
) {
    if left == 0 {
        emit(cur);
        return;
    }
    for v in from..=max {
        cur.push(v);
        uniform_multisets(v, max, left - 1, cur, emit);
        cur.pop();
    }
}

/// Number of distinct orderings of a multiset, k! / prod(mult!).
fn arrangements(ms: &[u8]) -> f64 {
    let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for &v in ms {
        *counts.entry(v).or_default() += 1;
    }
    fact(ms.len()) / counts.values().map(|&c| fact(c)).product::<f64>()
}

/// Builds and validates a column distribution.
pub fn dist_make(field: &Field, k: usize, spec: &DistSpec) -> Result<ColumnDistribution, ProcessError> {
    if k < 2 {
        return Err(ProcessError::KTooSmall(k));
    }
    let spec = match spec {
        // Over GF(2) the uniform law has a single atom; both paths agree.
        DistSpec::Uniform => {
            return Ok(ColumnDistribution {
                field: field.clone(),
                k,
                law: Law::Uniform,
            })
        }
        DistSpec::AllOnes => vec![AtomSpec {
            values: vec![1; k],
            p: 1.0,
        }],
        DistSpec::Atoms { atoms } => atoms.clone(),
    };
    if spec.is_empty() {
        return Err(ProcessError::NoAtoms);
    }
    let q = field.order();
    let mut merged: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    let mut sum = 0.0;
    for (index, a) in spec.iter().enumerate() {
        if a.values.len() != k {
            return Err(ProcessError::WrongArity {
                index,
                found: a.values.len(),
                k,
            });
        }
        if let Some(&value) = a.values.iter().find(|&&v| v >= q) {
            return Err(ProcessError::BadValue { index, value, q });
        }
        if a.values.contains(&0) {
            return Err(ProcessError::ZeroEntry { index });
        }
        if !a.p.is_finite() || a.p < 0.0 {
            return Err(ProcessError::BadProbability { index, p: a.p });
        }
        let mut ms: Vec<u8> = a.values.iter().map(|&v| v as u8).collect();
        ms.sort_unstable();
        *merged.entry(ms).or_default() += a.p;
        sum += a.p;
    }
    if (sum - 1.0).abs() > 1e-12 {
        return Err(ProcessError::NotNormalized { sum });
    }
    let atoms: Vec<(Vec<u8>, f64)> = merged
        .into_iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(m, p)| (m, p / sum))
        .collect();
    let index = WeightedIndex::new(atoms.iter().map(|a| a.1)).map_err(|_| ProcessError::NoAtoms)?;
    Ok(ColumnDistribution {
        field: field.clone(),
        k,
        law: Law::Atoms { atoms, index },
    })
}

/// A uniformly random ordered k-tuple of distinct elements of `0..n`.
///
/// Partial Fisher-Yates over a virtual identity array; only displaced slots are stored.
pub fn sample_support<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut moved: Vec<(usize, usize)> = Vec::with_capacity(k);
    let lookup = |moved: &[(usize, usize)], i: usize| {
        moved
            .iter()
            .rev()
            .find(|&&(slot, _)| slot == i)
            .map_or(i, |&(_, v)| v)
    };
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let j = rng.random_range(i..n);
        let (vi, vj) = (lookup(&moved, i), lookup(&moved, j));
        out.push(vj);
        moved.push((j, vi));
    }
    out
}

/// One random column over `n` rows.
pub fn sample_column<R: Rng + ?Sized>(
    dist: &ColumnDistribution,
    n: usize,
    rng: &mut R,
) -> Result<SparseColumn, ProcessError> {
    let k = dist.k;
    if n < k {
        return Err(ProcessError::NTooSmall { n, k });
    }
    let rows = sample_support(n, k, rng);
    let values = dist.draw_values(rng);
    let mut col: SparseColumn = rows.into_iter().zip(values).collect();
    col.sort_unstable_by_key(|e| e.0);
    assert!(
        col.len() == k && col.iter().all(|&(_, v)| v != 0),
        "sampled column must have exactly k nonzeros"
    );
    Ok(col)
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for trial `(ratio_index, trial_index)` under `master`.
pub fn derive_seed(master: u64, ratio_index: u64, trial_index: u64) -> u64 {
    let a = mix64(master ^ 0x9e37_79b9_7f4a_7c15);
    let b = mix64(a ^ ratio_index.wrapping_mul(0xd1b5_4a32_d192_ed03));
    mix64(b ^ trial_index.wrapping_mul(0x8cb9_2ba7_2f3d_8dd7))
}

/// The growing matrix A_m with its own generator.
#[derive(Debug, Clone)]
pub struct ProcessState {
    dist: ColumnDistribution,
    matrix: SparseMatrix,
    rng: ChaCha8Rng,
}

impl ProcessState {
    pub fn new(dist: ColumnDistribution, n: usize, seed: u64) -> Result<Self, ProcessError> {
        if n < dist.k {
            return Err(ProcessError::NTooSmall { n, k: dist.k });
        }
        Ok(ProcessState {
            matrix: SparseMatrix::new(&dist.field, n),
            dist,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn n(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn m(&self) -> usize {
        self.matrix.n_cols()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> SparseMatrix {
        self.matrix
    }

    pub fn dist(&self) -> &ColumnDistribution {
        &self.dist
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Draws `count` columns without appending them; consumes the same stream as `extend`.
    pub fn draw(&mut self, count: usize) -> Vec<SparseColumn> {
        let n = self.n();
        (0..count)
            .map(|_| sample_column(&self.dist, n, &mut self.rng).expect("n >= k checked"))
            .collect()
    }

    /// Appends `count` fresh columns labelled by their position.
    pub fn extend(&mut self, count: usize) {
        for col in self.draw(count) {
            let label = self.matrix.n_cols();
            self.matrix.push_unchecked(label, col);
        }
    }
}

/// A_m for the given seed: `m` columns over `n` rows.
pub fn sample_matrix(
    dist: &ColumnDistribution,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<SparseMatrix, ProcessError> {
    let mut st = ProcessState::new(dist.clone(), n, seed)?;
    st.extend(m);
    Ok(st.into_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn gf(q: u32) -> Field {
        Field::with_order(q).unwrap()
    }

    #[test]
    fn dist_examples() {
        let d = dist_make(&gf(2), 3, &DistSpec::Uniform).unwrap();
        assert_eq!(d.atoms(), vec![(vec![1, 1, 1], 1.0)]);
        let d = dist_make(&gf(3), 3, &DistSpec::AllOnes).unwrap();
        assert_eq!(d.atoms(), vec![(vec![1, 1, 1], 1.0)]);
        let d = dist_make(&gf(3), 2, &DistSpec::Uniform).unwrap();
        assert_eq!(
            d.atoms(),
            vec![(vec![1, 1], 0.25), (vec![1, 2], 0.5), (vec![2, 2], 0.25)]
        );
        let total: f64 = dist_make(&gf(5), 4, &DistSpec::Uniform)
            .unwrap()
            .atoms()
            .iter()
            .map(|a| a.1)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dist_errors() {
        let f = gf(3);
        let atoms = |v: Vec<(Vec<u32>, f64)>| DistSpec::Atoms {
            atoms: v
                .into_iter()
                .map(|(values, p)| AtomSpec { values, p })
                .collect(),
        };
        assert!(matches!(
            dist_make(&f, 1, &DistSpec::Uniform),
            Err(ProcessError::KTooSmall(1))
        ));
        assert!(matches!(
            dist_make(&f, 2, &atoms(vec![(vec![0, 1], 1.0)])),
            Err(ProcessError::ZeroEntry { .. })
        ));
        assert!(matches!(
            dist_make(&f, 2, &atoms(vec![(vec![1, 1], 0.5)])),
            Err(ProcessError::NotNormalized { .. })
        ));
        assert!(matches!(
            dist_make(&f, 2, &atoms(vec![(vec![1, 1, 1], 1.0)])),
            Err(ProcessError::WrongArity { .. })
        ));
        assert!(matches!(
            dist_make(&f, 2, &atoms(vec![(vec![1, 3], 1.0)])),
            Err(ProcessError::BadValue { .. })
        ));
        assert!(matches!(
            dist_make(&f, 2, &atoms(vec![])),
            Err(ProcessError::NoAtoms)
        ));
        // permuted duplicates merge into one multiset
        let d = dist_make(&f, 2, &atoms(vec![(vec![1, 2], 0.5), (vec![2, 1], 0.5)])).unwrap();
        assert_eq!(d.atoms(), vec![(vec![1, 2], 1.0)]);
    }

    #[test]
    fn spec_json_shapes() {
        let u: DistSpec = serde_json::from_str(r#"{"kind":"uniform"}"#).unwrap();
        assert_eq!(u, DistSpec::Uniform);
        let o: DistSpec = serde_json::from_str(r#"{"kind":"all-ones"}"#).unwrap();
        assert_eq!(o, DistSpec::AllOnes);
        let a: DistSpec =
            serde_json::from_str(r#"{"kind":"atoms","atoms":[{"values":[1,1,2],"p":1.0}]}"#)
                .unwrap();
        assert!(matches!(a, DistSpec::Atoms { ref atoms } if atoms.len() == 1));
        assert!(serde_json::from_str::<DistSpec>(r#"{"kind":"gaussian"}"#).is_err());
    }

    #[test]
    fn support_is_everything_when_n_equals_k() {
        let d = dist_make(&gf(2), 4, &DistSpec::Uniform).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let c = sample_column(&d, 4, &mut rng).unwrap();
            assert_eq!(c.iter().map(|e| e.0).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        }
        assert!(matches!(
            sample_column(&d, 3, &mut rng),
            Err(ProcessError::NTooSmall { n: 3, k: 4 })
        ));
    }

    #[test]
    fn support_chi_square() {
        let d = dist_make(&gf(2), 3, &DistSpec::Uniform).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 100_000;
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for _ in 0..draws {
            let c = sample_column(&d, 10, &mut rng).unwrap();
            *counts.entry(c.iter().map(|e| e.0).collect()).or_default() += 1;
        }
        assert_eq!(counts.len(), 120);
        let expected = draws as f64 / 120.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 99% quantile of chi-square with 119 degrees of freedom.
        assert!(chi2 < 158.95, "chi2 = {chi2}");
    }

    #[test]
    fn atom_frequencies_within_three_sigma() {
        let f = gf(3);
        for spec in [
            DistSpec::Uniform,
            DistSpec::Atoms {
                atoms: vec![
                    AtomSpec {
                        values: vec![1, 2, 2],
                        p: 0.3,
                    },
                    AtomSpec {
                        values: vec![1, 1, 1],
                        p: 0.7,
                    },
                ],
            },
        ] {
            let d = dist_make(&f, 3, &spec).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let draws = 100_000;
            let mut counts: HashMap<Vec<u8>, usize> = HashMap::new();
            for _ in 0..draws {
                let c = sample_column(&d, 20, &mut rng).unwrap();
                let mut ms: Vec<u8> = c.iter().map(|e| e.1).collect();
                ms.sort_unstable();
                *counts.entry(ms).or_default() += 1;
            }
            for (ms, p) in d.atoms() {
                let got = *counts.get(&ms).unwrap_or(&0) as f64;
                let mean = p * draws as f64;
                let sd = (draws as f64 * p * (1.0 - p)).sqrt();
                assert!((got - mean).abs() <= 3.0 * sd, "{ms:?}: {got} vs {mean}");
            }
        }
    }

    #[test]
    fn value_order_is_uniform_for_atoms() {
        // The single atom {1,2,2} must put the lone 1 in each position equally often.
        let d = dist_make(
            &gf(3),
            3,
            &DistSpec::Atoms {
                atoms: vec![AtomSpec {
                    values: vec![2, 1, 2],
                    p: 1.0,
                }],
            },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pos = [0usize; 3];
        let draws = 30_000;
        for _ in 0..draws {
            let c = sample_column(&d, 3, &mut rng).unwrap();
            pos[c.iter().position(|e| e.1 == 1).unwrap()] += 1;
        }
        let sd = (draws as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for p in pos {
            assert!((p as f64 - draws as f64 / 3.0).abs() < 4.0 * sd, "{pos:?}");
        }
    }

    #[test]
    fn extend_properties() {
        let d = dist_make(&gf(4), 3, &DistSpec::Uniform).unwrap();
        let mut a = ProcessState::new(d.clone(), 30, 9).unwrap();
        let before = a.matrix().clone();
        a.extend(0);
        assert_eq!(a.matrix(), &before);
        a.extend(5);
        a.extend(3);
        let mut b = ProcessState::new(d.clone(), 30, 9).unwrap();
        b.extend(8);
        assert_eq!(a.matrix(), b.matrix());
        assert_eq!(b.m(), 8);
        assert!(b.matrix().check_uniform_weight(3).is_ok());
        assert_eq!(sample_matrix(&d, 30, 8, 9).unwrap(), *b.matrix());
        assert_ne!(sample_matrix(&d, 30, 8, 10).unwrap(), *b.matrix());
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for r in 0..20 {
            for t in 0..200 {
                assert!(seen.insert(derive_seed(42, r, t)));
            }
        }
        assert_eq!(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
        assert_ne!(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
    }
}
