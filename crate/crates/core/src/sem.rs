//! Linear Gaussian structural equation models over a true DAG: random
//! parameterization, implied covariance, and data sampling.

use crate::error::{Error, Result};
use crate::graph::{NodeId, TrueDag};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Name of the RNG algorithm, recorded in run metadata.
pub const RNG_ALGORITHM: &str = "chacha8";

/// A linear SEM: one coefficient per edge of the graph, one error variance
/// per node (exogenous latent variances included).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSem {
    pub graph: TrueDag,
    /// (parent, child) -> coefficient
    pub coeffs: BTreeMap<(NodeId, NodeId), f64>,
    /// node -> error variance (> 0)
    pub error_vars: BTreeMap<NodeId, f64>,
}

impl LinearSem {
    pub fn new(
        graph: TrueDag,
        coeffs: BTreeMap<(NodeId, NodeId), f64>,
        error_vars: BTreeMap<NodeId, f64>,
    ) -> Result<Self> {
        for (p, c) in graph.edges() {
            if !coeffs.contains_key(&(p, c)) {
                return Err(Error::input(format!(
                    "missing coefficient for edge {} -> {}",
                    graph.name(p),
                    graph.name(c)
                )));
            }
        }
        for (p, c) in coeffs.keys() {
            if !graph.has_edge(*p, *c) {
                return Err(Error::input(format!(
                    "coefficient on non-edge {} -> {}",
                    graph.name(*p),
                    graph.name(*c)
                )));
            }
        }
        for n in graph.nodes() {
            match error_vars.get(&n) {
                Some(v) if *v > 0.0 => {}
                Some(_) => {
                    return Err(Error::input(format!(
                        "error variance of `{}` must be > 0",
                        graph.name(n)
                    )))
                }
                None => {
                    return Err(Error::input(format!(
                        "missing error variance for `{}`",
                        graph.name(n)
                    )))
                }
            }
        }
        Ok(LinearSem {
            graph,
            coeffs,
            error_vars,
        })
    }
}

/// Draws a random parameterization: each coefficient uniform on
/// [-coef_high, -coef_low] ∪ [coef_low, coef_high], each error variance
/// uniform on (0, var_high]. Deterministic given the seed.
pub fn random_sem(
    g: &TrueDag,
    seed: u64,
    coef_low: f64,
    coef_high: f64,
    var_high: f64,
) -> Result<LinearSem> {
    if !(0.0 < coef_low && coef_low < coef_high) {
        return Err(Error::input("require 0 < coef_low < coef_high"));
    }
    if var_high <= 0.0 {
        return Err(Error::input("require var_high > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = BTreeMap::new();
    for (p, c) in g.edges() {
        let mag: f64 = rng.gen_range(coef_low..=coef_high);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        coeffs.insert((p, c), sign * mag);
    }
    let mut error_vars = BTreeMap::new();
    for n in g.nodes() {
        // uniform on (0, var_high]: 1 - u maps [0,1) to (0,1]
        let u: f64 = rng.gen::<f64>();
        error_vars.insert(n, (1.0 - u) * var_high);
    }
    LinearSem::new(g.clone(), coeffs, error_vars)
}

pub const DEFAULT_COEF_LOW: f64 = 0.5;
pub const DEFAULT_COEF_HIGH: f64 = 1.5;
pub const DEFAULT_VAR_HIGH: f64 = 0.5;

/// Covariance matrix over named variables, optionally carrying the sample
/// size it was estimated from.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    pub names: Vec<String>,
    pub values: DMatrix<f64>,
    pub n: Option<usize>,
    /// set when the source sample was rank-deficient / the matrix is singular
    pub rank_warning: bool,
}

impl CovMatrix {
    pub fn new(names: Vec<String>, values: DMatrix<f64>, n: Option<usize>) -> Result<Self> {
        let p = names.len();
        if values.nrows() != p || values.ncols() != p {
            return Err(Error::input("covariance dimensions do not match names"));
        }
        let mut max_abs: f64 = 0.0;
        for i in 0..p {
            for j in 0..p {
                max_abs = max_abs.max(values[(i, j)].abs());
            }
        }
        for i in 0..p {
            for j in (i + 1)..p {
                let d = (values[(i, j)] - values[(j, i)]).abs();
                if d > 1e-12 * max_abs.max(1.0) {
                    return Err(Error::input(format!(
                        "covariance not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let rank_warning = if p == 0 {
            false
        } else {
            let eigs = values.clone().symmetric_eigen().eigenvalues;
            let max = eigs.iter().cloned().fold(f64::MIN, f64::max);
            let min = eigs.iter().cloned().fold(f64::MAX, f64::min);
            min <= 1e-12 * max.max(1.0)
        };
        Ok(CovMatrix {
            names,
            values,
            n,
            rank_warning,
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Submatrix over the given variable indices, in the given order.
    pub fn submatrix(&self, idx: &[usize]) -> DMatrix<f64> {
        let k = idx.len();
        DMatrix::from_fn(k, k, |r, c| self.values[(idx[r], idx[c])])
    }

    pub fn is_positive_definite(&self) -> bool {
        !self.rank_warning
    }
}

/// A data matrix: n observations of p named variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    pub names: Vec<String>,
    /// n x p
    pub values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if values.ncols() != names.len() {
            return Err(Error::input("column count does not match variable names"));
        }
        Ok(DataMatrix { names, values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }
}

/// Implied covariance over the observed variables: solves the linear system
/// induced by the structural equations in topological order, i.e.
/// (I - B)^{-1} Omega (I - B)^{-T} restricted to observed rows/columns.
pub fn implied_covariance(m: &LinearSem) -> Result<CovMatrix> {
    let g = &m.graph;
    let n = g.node_count();
    let order = g.topo_order();
    let mut pos = vec![0usize; n];
    for (i, v) in order.iter().enumerate() {
        pos[v.idx()] = i;
    }
    // full covariance over all nodes in topological order
    let mut full = DMatrix::<f64>::zeros(n, n);
    for (i, &v) in order.iter().enumerate() {
        // Cov(v, u) for u earlier in order: sum over parents
        for j in 0..i {
            let mut s = 0.0;
            for &p in g.parents_of(v) {
                s += m.coeffs[&(p, v)] * full[(pos[p.idx()], j)];
            }
            full[(i, j)] = s;
            full[(j, i)] = s;
        }
        let mut var = m.error_vars[&v];
        for &p in g.parents_of(v) {
            for &q in g.parents_of(v) {
                var += m.coeffs[&(p, v)] * m.coeffs[&(q, v)] * full[(pos[p.idx()], pos[q.idx()])];
            }
        }
        full[(i, i)] = var;
    }
    let obs = g.observed();
    let k = obs.len();
    let values = DMatrix::from_fn(k, k, |r, c| full[(pos[obs[r].idx()], pos[obs[c].idx()])]);
    let names = obs.iter().map(|&o| g.name(o).to_string()).collect();
    let cov = CovMatrix::new(names, values, None)?;
    if cov.rank_warning {
        return Err(Error::internal(
            "implied covariance is not positive-definite",
        ));
    }
    Ok(cov)
}

/// Draws n i.i.d. samples of the observed variables. Each node is generated
/// in topological order as a linear combination of its parents plus Gaussian
/// noise; one normal draw per (row, node) in that fixed order.
pub fn sample(m: &LinearSem, n: usize, seed: u64) -> Result<DataMatrix> {
    if n == 0 {
        return Err(Error::input("sample size must be >= 1"));
    }
    let g = &m.graph;
    let order = g.topo_order();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let obs = g.observed();
    let mut values = DMatrix::<f64>::zeros(n, obs.len());
    let mut node_vals = vec![0.0f64; g.node_count()];
    let obs_col: BTreeMap<NodeId, usize> = obs.iter().enumerate().map(|(c, &o)| (o, c)).collect();
    for row in 0..n {
        for &v in &order {
            let mut x = 0.0;
            for &p in g.parents_of(v) {
                x += m.coeffs[&(p, v)] * node_vals[p.idx()];
            }
            let z: f64 = standard_normal(&mut rng);
            x += m.error_vars[&v].sqrt() * z;
            node_vals[v.idx()] = x;
            if let Some(&c) = obs_col.get(&v) {
                values[(row, c)] = x;
            }
        }
    }
    DataMatrix::new(obs.iter().map(|&o| g.name(o).to_string()).collect(), values)
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; one draw consumed per call pair kept deterministic
    loop {
        let u1: f64 = rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        if u1 > f64::MIN_POSITIVE {
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

/// Unbiased (n-1 denominator) sample covariance; carries n. Rank-deficient
/// samples are flagged, not rejected.
pub fn sample_covariance(d: &DataMatrix) -> Result<CovMatrix> {
    let n = d.n();
    let p = d.p();
    if n < p + 1 {
        return Err(Error::input(format!(
            "need at least p+1 = {} observations, got {n}",
            p + 1
        )));
    }
    let means: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| d.values[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let mut values = DMatrix::<f64>::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let mut s = 0.0;
            for i in 0..n {
                s += (d.values[(i, a)] - means[a]) * (d.values[(i, b)] - means[b]);
            }
            let v = s / (n as f64 - 1.0);
            values[(a, b)] = v;
            values[(b, a)] = v;
        }
    }
    CovMatrix::new(d.names.clone(), values, Some(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TrueDag;

    fn one_factor(k: usize) -> TrueDag {
        let mut b = TrueDag::builder();
        let x = b.latent("X");
        for i in 1..=k {
            let y = b.observed(&format!("Y{i}"));
            b.edge(x, y);
        }
        b.build().unwrap()
    }

    #[test]
    fn one_factor_unit_loadings_hand_computed() {
        let g = one_factor(4);
        let x = g.node_by_name("X").unwrap();
        let mut coeffs = BTreeMap::new();
        let mut vars = BTreeMap::new();
        vars.insert(x, 1.0);
        for i in 1..=4 {
            let y = g.node_by_name(&format!("Y{i}")).unwrap();
            coeffs.insert((x, y), 1.0);
            vars.insert(y, 0.5);
        }
        let sem = LinearSem::new(g, coeffs, vars).unwrap();
        let cov = implied_covariance(&sem).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.5 } else { 1.0 };
                assert!((cov.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_factor_tetrads_vanish() {
        let g = one_factor(4);
        let sem = random_sem(&g, 42, 0.5, 1.5, 0.5).unwrap();
        let c = implied_covariance(&sem).unwrap();
        let t1 = c.get(0, 1) * c.get(2, 3) - c.get(0, 2) * c.get(1, 3);
        let t2 = c.get(0, 1) * c.get(2, 3) - c.get(0, 3) * c.get(1, 2);
        assert!(t1.abs() < 1e-12 && t2.abs() < 1e-12);
    }

    #[test]
    fn random_sem_deterministic() {
        let g = one_factor(4);
        let a = random_sem(&g, 7, 0.5, 1.5, 0.5).unwrap();
        let b = random_sem(&g, 7, 0.5, 1.5, 0.5).unwrap();
        assert_eq!(a, b);
        let c = random_sem(&g, 8, 0.5, 1.5, 0.5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn random_sem_coefficient_gap() {
        // no coefficient mass in (-0.5, 0.5), variances in (0, 0.5]
        let g = one_factor(4);
        for seed in 0..2500 {
            let sem = random_sem(&g, seed, 0.5, 1.5, 0.5).unwrap();
            for c in sem.coeffs.values() {
                assert!(c.abs() >= 0.5 && c.abs() <= 1.5, "coef {c} out of range");
            }
            for v in sem.error_vars.values() {
                assert!(*v > 0.0 && *v <= 0.5, "variance {v} out of range");
            }
        }
    }

    #[test]
    fn random_sem_invalid_range() {
        let g = one_factor(4);
        assert!(random_sem(&g, 1, 0.0, 1.5, 0.5).is_err());
        assert!(random_sem(&g, 1, 1.5, 0.5, 0.5).is_err());
        assert!(random_sem(&g, 1, 0.5, 1.5, 0.0).is_err());
    }

    #[test]
    fn sample_matches_implied_covariance() {
        let g = one_factor(4);
        let sem = random_sem(&g, 3, 0.5, 1.5, 0.5).unwrap();
        let implied = implied_covariance(&sem).unwrap();
        let data = sample(&sem, 100_000, 11).unwrap();
        let est = sample_covariance(&data).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = implied.get(i, j);
                let got = est.get(i, j);
                assert!(
                    (got - want).abs() <= 0.03 * want.abs().max(0.1),
                    "entry ({i},{j}): got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn implied_covariance_monte_carlo_two_latents() {
        // two connected latents with three indicators each; a million draws
        // agree with the implied covariance entrywise within 2%
        let mut b = TrueDag::builder();
        let x1 = b.latent("X1");
        let x2 = b.latent("X2");
        b.edge(x1, x2);
        for i in 1..=6 {
            let y = b.observed(&format!("Y{i}"));
            b.edge(if i <= 3 { x1 } else { x2 }, y);
        }
        let g = b.build().unwrap();
        let sem = random_sem(&g, 21, 0.5, 1.5, 0.5).unwrap();
        let implied = implied_covariance(&sem).unwrap();
        let est = sample_covariance(&sample(&sem, 1_000_000, 4).unwrap()).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = implied.get(i, j);
                let got = est.get(i, j);
                assert!(
                    (got - want).abs() <= 0.02 * want.abs().max(0.05),
                    "entry ({i},{j}): got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn zero_coefficient_sem_gives_uncorrelated_columns() {
        let g = one_factor(2);
        let x = g.node_by_name("X").unwrap();
        let mut coeffs = BTreeMap::new();
        let mut vars = BTreeMap::new();
        vars.insert(x, 1.0);
        for i in 1..=2 {
            let y = g.node_by_name(&format!("Y{i}")).unwrap();
            coeffs.insert((x, y), 0.0);
            vars.insert(y, 1.0);
        }
        let sem = LinearSem::new(g, coeffs, vars).unwrap();
        let cov = sample_covariance(&sample(&sem, 20_000, 2).unwrap()).unwrap();
        assert!(
            cov.get(0, 1).abs() < 0.03,
            "cross covariance {}",
            cov.get(0, 1)
        );
    }

    #[test]
    fn sample_deterministic() {
        let g = one_factor(3);
        let sem = random_sem(&g, 5, 0.5, 1.5, 0.5).unwrap();
        let a = sample(&sem, 50, 9).unwrap();
        let b = sample(&sem, 50, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_columns_flagged() {
        let names = vec!["A".into(), "B".into()];
        let mut vals = DMatrix::<f64>::zeros(5, 2);
        for i in 0..5 {
            vals[(i, 0)] = i as f64;
            vals[(i, 1)] = i as f64;
        }
        let d = DataMatrix::new(names, vals).unwrap();
        let cov = sample_covariance(&d).unwrap();
        assert!(cov.rank_warning);
    }

    #[test]
    fn single_column_variance() {
        let d = DataMatrix::new(
            vec!["A".into()],
            DMatrix::from_column_slice(2, 1, &[0.0, 2.0]),
        )
        .unwrap();
        let cov = sample_covariance(&d).unwrap();
        assert!((cov.get(0, 0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sample_size_precondition() {
        let d = DataMatrix::new(vec!["A".into(), "B".into()], DMatrix::zeros(2, 2)).unwrap();
        assert!(sample_covariance(&d).is_err());
    }
}
