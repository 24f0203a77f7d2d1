//! Tanner graphs of core hypergraphs, red 2-edge components, pseudo-forests, the
//! bipartite configuration model, and the alpha-subgraphs used to inspect rows of the
//! pipeline's inverse matrix.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::gf::Field;
use crate::peel::Hypergraph;
use crate::spmat::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TannerError {
    #[error("vertex degrees sum to {vertex_sum} but edge degrees sum to {edge_sum}")]
    DegreeSumMismatch { vertex_sum: usize, edge_sum: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("alpha must have {expected} entries, got {found}")]
    AlphaLength { expected: usize, found: usize },
    #[error("alpha is zero")]
    ZeroAlpha,
}

/// Bipartite incidence graph between vertex-nodes and edge-nodes.
///
/// Edge-node `x` is adjacent to the vertex-nodes in `edge_adj[x]`; repeated entries are
/// parallel edges, which only the configuration model produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    pub n_vertices: usize,
    pub edge_adj: Vec<Vec<usize>>,
    pub edge_values: Vec<Vec<u8>>,
    pub red: Vec<bool>,
}

impl TannerGraph {
    pub fn n_edge_nodes(&self) -> usize {
        self.edge_adj.len()
    }

    pub fn red_count(&self) -> usize {
        self.red.iter().filter(|&&r| r).count()
    }

    pub fn red_fraction(&self) -> f64 {
        if self.edge_adj.is_empty() {
            0.0
        } else {
            self.red_count() as f64 / self.edge_adj.len() as f64
        }
    }

    pub fn vertex_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_vertices];
        for e in &self.edge_adj {
            for &v in e {
                d[v] += 1;
            }
        }
        d
    }

    /// No edge-node is joined to the same vertex-node twice.
    pub fn is_simple(&self) -> bool {
        self.edge_adj.iter().all(|e| {
            let mut s = e.clone();
            s.sort_unstable();
            s.windows(2).all(|w| w[0] != w[1])
        })
    }

    /// Inverse of [`tanner_of`].
    pub fn to_hypergraph(&self) -> Hypergraph {
        Hypergraph {
            n_vertices: self.n_vertices,
            edges: self.edge_adj.clone(),
            values: self.edge_values.clone(),
            red: self.red.clone(),
        }
    }
}

pub fn tanner_of(h: &Hypergraph) -> TannerGraph {
    TannerGraph {
        n_vertices: h.n_vertices,
        edge_adj: h.edges.clone(),
        edge_values: h.values.clone(),
        red: h.edges.iter().map(|e| e.len() == 2).collect(),
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        true
    }
}

/// Orders of the connected components of the subgraph spanned by all vertex-nodes and
/// the red edge-nodes, largest first.
pub fn red_components(t: &TannerGraph) -> Vec<usize> {
    let nv = t.n_vertices;
    let red_nodes: Vec<usize> = (0..t.n_edge_nodes()).filter(|&x| t.red[x]).collect();
    let mut uf = UnionFind::new(nv + red_nodes.len());
    for (slot, &x) in red_nodes.iter().enumerate() {
        for &v in &t.edge_adj[x] {
            uf.union(nv + slot, v);
        }
    }
    let roots: Vec<usize> = (0..nv + red_nodes.len())
        .filter(|&i| uf.find(i) == i)
        .collect();
    let mut sizes: Vec<usize> = roots.into_iter().map(|i| uf.size[i]).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Every vertex has degree at least one and the Tanner graph is acyclic.
pub fn is_pseudo_forest(n_vertices: usize, edges: &[Vec<usize>]) -> bool {
    let mut deg = vec![0usize; n_vertices];
    let mut uf = UnionFind::new(n_vertices + edges.len());
    for (x, e) in edges.iter().enumerate() {
        for &v in e {
            if v >= n_vertices {
                return false;
            }
            deg[v] += 1;
            if !uf.union(n_vertices + x, v) {
                return false;
            }
        }
    }
    deg.iter().all(|&d| d >= 1)
}

/// A subgraph of a Tanner graph as a list of `(edge_node, vertex)` incidences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubTanner {
    pub incidences: Vec<(usize, usize)>,
}

impl SubTanner {
    fn edge_nodes(&self) -> Vec<usize> {
        let mut xs: Vec<usize> = self.incidences.iter().map(|&(x, _)| x).collect();
        xs.sort_unstable();
        xs.dedup();
        xs
    }
}

/// Total over edge-nodes of `sub` of their degree in `t` minus their degree in `sub`.
pub fn excess(t: &TannerGraph, sub: &SubTanner) -> usize {
    sub.edge_nodes()
        .into_iter()
        .map(|x| {
            let in_sub = sub.incidences.iter().filter(|&&(y, _)| y == x).count();
            t.edge_adj[x].len() - in_sub
        })
        .sum()
}

/// The smallest subgraph containing `sub` in which every edge-node of `sub` has its full
/// degree from `t`.
pub fn closure(t: &TannerGraph, sub: &SubTanner) -> SubTanner {
    let incidences = sub
        .edge_nodes()
        .into_iter()
        .flat_map(|x| t.edge_adj[x].iter().map(move |&v| (x, v)))
        .collect();
    SubTanner { incidences }
}

/// Random bipartite multigraph with the given degrees, by uniform matching of points.
pub fn config_model<R: Rng + ?Sized>(
    vertex_degrees: &[usize],
    edge_degrees: &[usize],
    rng: &mut R,
) -> Result<(TannerGraph, bool), TannerError> {
    let vertex_sum: usize = vertex_degrees.iter().sum();
    let edge_sum: usize = edge_degrees.iter().sum();
    if vertex_sum != edge_sum {
        return Err(TannerError::DegreeSumMismatch {
            vertex_sum,
            edge_sum,
        });
    }
    let mut points: Vec<usize> = vertex_degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat_n(v, d))
        .collect();
    points.shuffle(rng);
    let mut it = points.into_iter();
    let edge_adj: Vec<Vec<usize>> = edge_degrees
        .iter()
        .map(|&d| it.by_ref().take(d).collect())
        .collect();
    let t = TannerGraph {
        n_vertices: vertex_degrees.len(),
        edge_values: edge_adj.iter().map(|e| vec![1; e.len()]).collect(),
        red: edge_degrees.iter().map(|&d| d == 2).collect(),
        edge_adj,
    };
    let simple = t.is_simple();
    Ok((t, simple))
}

/// The hypergraph restricted to the edges where a combination of rows of `B` is nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaSubgraph {
    pub j: Vec<usize>,
    pub alpha: Vec<u8>,
    /// Hypergraph edges kept, ascending.
    pub included_edges: Vec<usize>,
    /// Non-isolated vertices, ascending, with their degrees.
    pub vertices: Vec<usize>,
    pub degrees: Vec<usize>,
}

impl AlphaSubgraph {
    /// Retained vertices outside `J` with degree exactly one.
    pub fn degree_one_outside_j(&self) -> Vec<usize> {
        self.vertices
            .iter()
            .zip(&self.degrees)
            .filter(|&(v, &d)| d == 1 && !self.j.contains(v))
            .map(|(&v, _)| v)
            .collect()
    }
}

/// Builds the alpha-subgraph of `h` for rows `j` of `b` with coefficients `alpha`.
///
/// Row `i` of `b` must belong to vertex `i` of `h` (so `b` lists the core columns first),
/// and column `c` of `b` to hypergraph edge `b_col_edges[c]`.
pub fn alpha_subgraph(
    h: &Hypergraph,
    b: &DenseMatrix,
    b_col_edges: &[usize],
    j: &[usize],
    alpha: &[u8],
) -> Result<AlphaSubgraph, TannerError> {
    if alpha.len() != j.len() {
        return Err(TannerError::AlphaLength {
            expected: j.len(),
            found: alpha.len(),
        });
    }
    if alpha.iter().all(|&a| a == 0) {
        return Err(TannerError::ZeroAlpha);
    }
    if b_col_edges.len() != b.n_cols() {
        return Err(TannerError::Dimension(format!(
            "B has {} columns but {} edge labels were given",
            b.n_cols(),
            b_col_edges.len()
        )));
    }
    if let Some(&i) = j.iter().find(|&&i| i >= b.n_rows() || i >= h.n_vertices) {
        return Err(TannerError::Dimension(format!("row {i} of J is out of range")));
    }
    if let Some(&e) = b_col_edges.iter().find(|&&e| e >= h.n_edges()) {
        return Err(TannerError::Dimension(format!("edge {e} is out of range")));
    }
    let w = combine_rows(b, j, alpha);
    let mut included_edges: Vec<usize> = (0..b.n_cols())
        .filter(|&c| w[c] != 0)
        .map(|c| b_col_edges[c])
        .collect();
    included_edges.sort_unstable();
    let mut deg = vec![0usize; h.n_vertices];
    for &e in &included_edges {
        for &v in &h.edges[e] {
            deg[v] += 1;
        }
    }
    let vertices: Vec<usize> = (0..h.n_vertices).filter(|&v| deg[v] > 0).collect();
    let degrees = vertices.iter().map(|&v| deg[v]).collect();
    Ok(AlphaSubgraph {
        j: j.to_vec(),
        alpha: alpha.to_vec(),
        included_edges,
        vertices,
        degrees,
    })
}

/// `sum_i alpha_i * b[j_i]` as a row vector.
pub fn combine_rows(b: &DenseMatrix, j: &[usize], alpha: &[u8]) -> Vec<u8> {
    let f: &Field = b.field();
    let mut w = vec![0u8; b.n_cols()];
    for (&i, &a) in j.iter().zip(alpha) {
        if a == 0 {
            continue;
        }
        for (c, wc) in w.iter_mut().enumerate() {
            let v = b.get(i, c);
            if v != 0 {
                *wc = f.add(*wc, f.mul(a, v));
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Field;
    use crate::peel::{hypergraph_of, two_core};
    use crate::process::{dist_make, sample_matrix, DistSpec};
    use crate::thresholds;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hyper(n: usize, edges: Vec<Vec<usize>>) -> Hypergraph {
        Hypergraph {
            n_vertices: n,
            values: edges.iter().map(|e| vec![1; e.len()]).collect(),
            red: edges.iter().map(|e| e.len() == 2).collect(),
            edges,
        }
    }

    #[test]
    fn tanner_examples() {
        let t = tanner_of(&hyper(2, vec![vec![0, 1]]));
        assert_eq!(t.edge_adj, vec![vec![0, 1]]);
        assert_eq!(t.red, vec![true]);
        let t = tanner_of(&hyper(3, vec![vec![0, 1, 2]]));
        assert_eq!(t.red, vec![false]);
        assert_eq!(t.vertex_degrees(), vec![1, 1, 1]);
        let h = hyper(4, vec![vec![0, 1], vec![1, 2, 3], vec![0, 3]]);
        assert_eq!(tanner_of(&h).to_hypergraph(), h);
        assert_eq!(tanner_of(&h).red_count(), 2);
    }

    #[test]
    fn red_component_examples() {
        let t = tanner_of(&hyper(3, vec![vec![0, 1, 2]]));
        assert_eq!(red_components(&t), vec![1, 1, 1]);
        let t = tanner_of(&hyper(3, vec![vec![0, 1], vec![1, 2]]));
        assert_eq!(red_components(&t), vec![5]);
    }

    #[test]
    fn pseudo_forest_examples() {
        assert!(is_pseudo_forest(3, &[vec![0, 1, 2]]));
        assert!(is_pseudo_forest(2, &[vec![0, 1]]));
        assert!(!is_pseudo_forest(2, &[vec![0, 1], vec![0, 1]]));
        assert!(!is_pseudo_forest(3, &[vec![0, 1]]));
    }

    #[test]
    fn tree_extension_keeps_pseudo_forest() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let mut n = 3;
            let mut edges = vec![vec![0, 1, 2]];
            for _ in 0..20 {
                let anchor = rng.random_range(0..n);
                let fresh = rng.random_range(1..4);
                let mut e = vec![anchor];
                e.extend(n..n + fresh);
                n += fresh;
                edges.push(e);
                assert!(is_pseudo_forest(n, &edges));
            }
            // closing any cycle breaks it
            let a = edges[1][1];
            let b = edges[2][1];
            if a != b {
                edges.push(vec![a, b]);
                assert!(!is_pseudo_forest(n, &edges));
            }
        }
    }

    #[test]
    fn excess_and_closure() {
        let t = tanner_of(&hyper(4, vec![vec![0, 1, 2], vec![2, 3]]));
        let sub = SubTanner {
            incidences: vec![(0, 0), (0, 1), (1, 2)],
        };
        assert_eq!(excess(&t, &sub), 2);
        let cl = closure(&t, &sub);
        assert_eq!(excess(&t, &cl), 0);
        assert_eq!(cl.incidences.len(), 5);
    }

    #[test]
    fn config_model_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (t, simple) = config_model(&[1; 5], &[1; 5], &mut rng).unwrap();
        assert!(simple);
        let mut seen: Vec<usize> = t.edge_adj.iter().map(|e| e[0]).collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
        assert!(matches!(
            config_model(&[2, 2], &[3], &mut rng),
            Err(TannerError::DegreeSumMismatch { .. })
        ));
    }

    #[test]
    fn config_model_simple_with_positive_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 10_000;
        let samples = 100;
        let mut simple = 0;
        for _ in 0..samples {
            let (t, s) = config_model(&vec![3; n], &vec![3; n], &mut rng).unwrap();
            assert_eq!(t.vertex_degrees(), vec![3; n]);
            simple += s as usize;
        }
        // For (3,3)-biregular graphs P(simple) tends to exp(-(2*2)/2) = 0.135.
        let p = simple as f64 / samples as f64;
        assert!(p > 0.04 && p < 0.25, "simple fraction {p}");
    }

    #[test]
    fn alpha_subgraph_single_row() {
        let f = Field::binary();
        let h = hyper(3, vec![vec![0, 1], vec![1, 2], vec![0, 2]]);
        let b = DenseMatrix::from_rows(&f, 3, &[vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 0]]);
        let s = alpha_subgraph(&h, &b, &[0, 1, 2], &[0], &[1]).unwrap();
        assert_eq!(s.included_edges, vec![0, 2]);
        assert_eq!(s.vertices, vec![0, 1, 2]);
        assert_eq!(s.degrees, vec![2, 1, 1]);
        assert!(alpha_subgraph(&h, &b, &[0, 1, 2], &[0], &[0]).is_err());
        assert!(alpha_subgraph(&h, &b, &[0, 1], &[0], &[1]).is_err());
    }

    #[test]
    fn red_fraction_matches_truncated_poisson() {
        // The red fraction of the core at density d follows the Poisson law with
        // parameter d rho^(k-1) truncated at 2; at d_k that is beta_k.
        let f = Field::binary();
        let dist = dist_make(&f, 3, &DistSpec::Uniform).unwrap();
        let n = 100_000;
        for d in [2.6, 2.76] {
            let a = sample_matrix(&dist, n, (d * n as f64 / 3.0) as usize, 31).unwrap();
            let pr = two_core(&a);
            let t = tanner_of(&hypergraph_of(&pr).unwrap());
            let predicted = thresholds::red_fraction(thresholds::core_row_mu(3, d).unwrap());
            let got = t.red_fraction();
            assert!((got - predicted).abs() < 0.01, "d={d}: {got} vs {predicted}");
            if d > 2.7 {
                let b3 = thresholds::beta(3).unwrap();
                assert!((got - b3).abs() < 0.02, "near d_3: {got} vs {b3}");
            }
        }
    }
}
