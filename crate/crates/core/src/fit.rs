//! Gaussian maximum-likelihood fitting of measurement patterns, BIC scoring,
//! chi-square fit statistics, degrees-of-freedom accounting and the greedy
//! bi-directed-edge augmentation.

use crate::error::{Error, Result};
use crate::graph::{EdgeLabel, MeasurementPattern};
use crate::sem::CovMatrix;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Parameter structure of a pattern fit: sparse loadings with the first
/// (lowest-index) child of each latent fixed to 1, a free symmetric latent
/// covariance, and an error covariance with free diagonal plus free
/// off-diagonals exactly at the bi-directed pairs.
#[derive(Debug, Clone)]
pub struct FitModel {
    pub latents: Vec<String>,
    pub observed: Vec<String>,
    /// (latent index, observed index, fixed) for every directed edge
    pub loading_entries: Vec<(usize, usize, bool)>,
    /// observed index pairs with a free error covariance
    pub bidirected_pairs: Vec<(usize, usize)>,
    pub loadings: DMatrix<f64>,
    pub latent_cov: DMatrix<f64>,
    pub error_cov: DMatrix<f64>,
}

impl FitModel {
    pub fn from_pattern(pattern: &MeasurementPattern) -> Result<Self> {
        let latents: Vec<String> = pattern.latents().to_vec();
        let observed: Vec<String> = pattern.observed().to_vec();
        if latents.is_empty() || observed.is_empty() {
            return Err(Error::identification("empty pattern cannot be fitted"));
        }
        let obs_idx = |name: &str| observed.iter().position(|o| o == name).unwrap();
        let mut loading_entries = Vec::new();
        for (li, l) in latents.iter().enumerate() {
            let children: Vec<usize> = {
                let mut c: Vec<usize> = pattern.children_of(l).iter().map(|k| obs_idx(k)).collect();
                c.sort_unstable();
                c
            };
            if children.len() < 2 {
                return Err(Error::identification(format!(
                    "latent `{l}` has fewer than 2 indicators; under-identified"
                )));
            }
            for (pos, &oi) in children.iter().enumerate() {
                loading_entries.push((li, oi, pos == 0));
            }
        }
        let mut bidirected_pairs = Vec::new();
        for (a, b, _) in pattern.bidirected_edges() {
            let (i, j) = (obs_idx(a), obs_idx(b));
            bidirected_pairs.push((i.min(j), i.max(j)));
        }
        bidirected_pairs.sort_unstable();
        bidirected_pairs.dedup();
        let k = latents.len();
        let p = observed.len();
        Ok(FitModel {
            latents,
            observed,
            loading_entries,
            bidirected_pairs,
            loadings: DMatrix::zeros(p, k),
            latent_cov: DMatrix::identity(k, k),
            error_cov: DMatrix::zeros(p, p),
        })
    }

    pub fn free_param_count(&self) -> usize {
        let k = self.latents.len();
        let free_loadings = self
            .loading_entries
            .iter()
            .filter(|(_, _, fixed)| !fixed)
            .count();
        free_loadings + k * (k + 1) / 2 + self.observed.len() + self.bidirected_pairs.len()
    }

    pub fn implied(&self) -> DMatrix<f64> {
        &self.loadings * &self.latent_cov * self.loadings.transpose() + &self.error_cov
    }

    fn param_len(&self) -> usize {
        self.free_param_count()
    }

    /// Parameter vector layout (all entries unconstrained):
    /// free loadings, then the lower-triangular Cholesky factor of the
    /// latent covariance with log-diagonal, then log error variances, then
    /// the error covariances of the bi-directed pairs.
    fn write_params(&mut self, theta: &[f64]) {
        let mut t = theta.iter();
        let k = self.latents.len();
        let p = self.observed.len();
        self.loadings.fill(0.0);
        for &(li, oi, fixed) in &self.loading_entries {
            self.loadings[(oi, li)] = if fixed { 1.0 } else { *t.next().unwrap() };
        }
        let mut chol = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let v = *t.next().unwrap();
                chol[(i, j)] = if i == j { v.exp() } else { v };
            }
        }
        self.latent_cov = &chol * chol.transpose();
        self.error_cov.fill(0.0);
        for i in 0..p {
            self.error_cov[(i, i)] = t.next().unwrap().exp();
        }
        for &(i, j) in &self.bidirected_pairs {
            let v = *t.next().unwrap();
            self.error_cov[(i, j)] = v;
            self.error_cov[(j, i)] = v;
        }
        debug_assert!(t.next().is_none());
    }

    fn read_params(&self) -> Vec<f64> {
        let k = self.latents.len();
        let mut out = Vec::with_capacity(self.param_len());
        for &(li, oi, fixed) in &self.loading_entries {
            if !fixed {
                out.push(self.loadings[(oi, li)]);
            }
        }
        let chol = self
            .latent_cov
            .clone()
            .cholesky()
            .expect("latent covariance must be positive-definite")
            .l();
        for i in 0..k {
            for j in 0..=i {
                out.push(if i == j {
                    chol[(i, i)].ln()
                } else {
                    chol[(i, j)]
                });
            }
        }
        for i in 0..self.observed.len() {
            out.push(self.error_cov[(i, i)].max(1e-300).ln());
        }
        for &(i, j) in &self.bidirected_pairs {
            out.push(self.error_cov[(i, j)]);
        }
        out
    }
}

/// A fitted pattern with its likelihood and bookkeeping.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub model: FitModel,
    pub log_likelihood: f64,
    pub n: usize,
    pub free_param_count: usize,
    pub converged: bool,
    pub iterations: usize,
    /// F_ML discrepancy at the optimum
    pub discrepancy: f64,
}

/// p(p+1)/2 minus the free parameter count under the unit-loading
/// convention. May be negative (model not testable).
pub fn degrees_of_freedom(pattern: &MeasurementPattern) -> Result<i64> {
    if pattern.is_empty() {
        return Err(Error::input("empty pattern"));
    }
    let p = pattern.observed().len() as i64;
    let k = pattern.latents().len() as i64;
    let directed = pattern.directed_edges().count() as i64;
    let bid = pattern.bidirected_edges().count() as i64;
    let free = (directed - k) + k * (k + 1) / 2 + p + bid;
    Ok(p * (p + 1) / 2 - free)
}

/// F_ML = ln det Sigma + tr(S Sigma^-1) - ln det S - p, or None when Sigma is
/// not positive-definite.
fn f_ml(sigma: &DMatrix<f64>, s: &DMatrix<f64>, logdet_s: f64) -> Option<f64> {
    let p = s.nrows();
    let chol = sigma.clone().cholesky()?;
    let logdet_sigma = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let sigma_inv = chol.inverse();
    let tr = (s * &sigma_inv).trace();
    let f = logdet_sigma + tr - logdet_s - p as f64;
    if f.is_finite() {
        Some(f)
    } else {
        None
    }
}

/// Gradient of F_ML with respect to the free parameter vector (chain-ruled
/// through the log-Cholesky / log-variance reparameterization).
fn f_ml_gradient(model: &FitModel, s: &DMatrix<f64>) -> Option<Vec<f64>> {
    let sigma = model.implied();
    let chol = sigma.clone().cholesky()?;
    let sigma_inv = chol.inverse();
    // W = Sigma^-1 (Sigma - S) Sigma^-1; dF = tr(W dSigma)
    let w = &sigma_inv * (&sigma - s) * &sigma_inv;
    let k = model.latents.len();
    let mut grad = Vec::with_capacity(model.param_len());
    let wlp = &w * &model.loadings * &model.latent_cov; // p x k
    for &(li, oi, fixed) in &model.loading_entries {
        if !fixed {
            grad.push(2.0 * wlp[(oi, li)]);
        }
    }
    // dF/dPhi = Lambda^T W Lambda; through Phi = L L^T: dF/dL = 2 (dF/dPhi) L
    let lwl = model.loadings.transpose() * &w * &model.loadings; // k x k
    let lfac = model.latent_cov.clone().cholesky()?.l();
    let dl = 2.0 * &lwl * &lfac;
    for i in 0..k {
        for j in 0..=i {
            grad.push(if i == j {
                dl[(i, i)] * lfac[(i, i)]
            } else {
                dl[(i, j)]
            });
        }
    }
    for i in 0..model.observed.len() {
        grad.push(w[(i, i)] * model.error_cov[(i, i)]);
    }
    for &(i, j) in &model.bidirected_pairs {
        grad.push(2.0 * w[(i, j)]);
    }
    Some(grad)
}

const MAX_ITER: usize = 500;
const GRAD_TOL: f64 = 1e-6;
const STEP_TOL: f64 = 1e-8;

/// BFGS minimization of F_ML from one starting point.
/// Returns (theta, f, converged, iterations).
fn minimize_from(
    model: &mut FitModel,
    s: &DMatrix<f64>,
    logdet_s: f64,
    start: Vec<f64>,
) -> Option<(Vec<f64>, f64, bool, usize)> {
    let m = start.len();
    let mut theta = start;
    model.write_params(&theta);
    let mut f = f_ml(&model.implied(), s, logdet_s)?;
    let mut grad = f_ml_gradient(model, s)?;
    let mut hinv = DMatrix::<f64>::identity(m, m);
    let mut scaled = false;
    let mut restarted_at = usize::MAX;
    let mut converged = false;
    let mut iters = 0usize;
    for it in 0..MAX_ITER {
        iters = it + 1;
        let gnorm = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if gnorm < GRAD_TOL * (1.0 + f.abs()) {
            converged = true;
            break;
        }
        let gvec = DMatrix::from_column_slice(m, 1, &grad);
        let mut dir = -(&hinv * &gvec);
        // ensure descent
        let mut slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        if slope >= 0.0 {
            dir = -gvec.clone();
            slope = -grad.iter().map(|g| g * g).sum::<f64>();
        }
        // backtracking line search with PD safeguard (step halving when the
        // implied covariance leaves the PD cone)
        let mut step = 1.0f64;
        let mut new_theta;
        let new_f;
        let mut ok = false;
        loop {
            new_theta = theta
                .iter()
                .zip(dir.iter())
                .map(|(t, d)| t + step * d)
                .collect::<Vec<f64>>();
            model.write_params(&new_theta);
            if let Some(fv) = f_ml(&model.implied(), s, logdet_s) {
                if fv <= f + 1e-4 * step * slope {
                    new_f = fv;
                    ok = true;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-14 {
                new_f = f;
                break;
            }
        }
        if !ok {
            // stalled: discard the curvature model once and retry steepest
            if restarted_at != it {
                restarted_at = it + 1;
                hinv = DMatrix::identity(m, m);
                scaled = false;
                continue;
            }
            break;
        }
        let max_move = dir.iter().fold(0.0f64, |a, d| a.max((step * d).abs()));
        let new_grad = {
            model.write_params(&new_theta);
            f_ml_gradient(model, s)?
        };
        // BFGS update; pairs violating the curvature condition are skipped
        let sves: Vec<f64> = new_theta.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yves: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy: f64 = sves.iter().zip(&yves).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            if !scaled {
                // scale the seed inverse Hessian to the first curvature pair
                let yy: f64 = yves.iter().map(|y| y * y).sum();
                if yy > 0.0 {
                    hinv *= sy / yy;
                    scaled = true;
                }
            }
            let sv = DMatrix::from_column_slice(m, 1, &sves);
            let yv = DMatrix::from_column_slice(m, 1, &yves);
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(m, m);
            let left = &i - rho * &sv * yv.transpose();
            let right = &i - rho * &yv * sv.transpose();
            hinv = &left * &hinv * &right + rho * &sv * sv.transpose();
        }
        theta = new_theta;
        f = new_f;
        grad = new_grad;
        if max_move < STEP_TOL {
            converged = true;
            break;
        }
    }
    model.write_params(&theta);
    Some((theta, f, converged, iters))
}

/// Moment-based starting point: each latent's variance from its anchor
/// (the fixed-loading child), free loadings from covariances with the
/// anchor, latent covariances from anchor-anchor covariances (shrunk until
/// positive-definite), error variances at half the observed variances. This
/// picks up loading signs, which an all-ones start does not.
fn starting_points(model: &FitModel, s: &DMatrix<f64>, n_starts: usize) -> Vec<Vec<f64>> {
    let p = model.observed.len();
    let k = model.latents.len();
    let mut anchor = vec![0usize; k];
    for &(li, oi, fixed) in &model.loading_entries {
        if fixed {
            anchor[li] = oi;
        }
    }
    let mut phi = DMatrix::<f64>::zeros(k, k);
    for l in 0..k {
        phi[(l, l)] = (0.5 * s[(anchor[l], anchor[l])]).max(1e-6);
    }
    for l in 0..k {
        for m in 0..l {
            let cap = 0.9 * (phi[(l, l)] * phi[(m, m)]).sqrt();
            let v = s[(anchor[l], anchor[m])].clamp(-cap, cap);
            phi[(l, m)] = v;
            phi[(m, l)] = v;
        }
    }
    // shrink off-diagonals until the Cholesky factorization succeeds
    let diag = phi.diagonal();
    while phi.clone().cholesky().is_none() {
        for l in 0..k {
            for m in 0..k {
                if l != m {
                    phi[(l, m)] *= 0.8;
                }
            }
        }
        for l in 0..k {
            phi[(l, l)] = diag[l];
        }
    }
    let mut base = FitModel {
        loadings: DMatrix::zeros(p, k),
        latent_cov: phi,
        error_cov: DMatrix::zeros(p, p),
        ..model.clone()
    };
    for &(li, oi, fixed) in &base.loading_entries.clone() {
        base.loadings[(oi, li)] = if fixed {
            1.0
        } else {
            s[(oi, anchor[li])] / base.latent_cov[(li, li)]
        };
    }
    for i in 0..p {
        base.error_cov[(i, i)] = 0.5 * s[(i, i)];
    }
    let theta0 = base.read_params();
    let mut starts = vec![theta0.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(0xF17);
    let free_loadings = model
        .loading_entries
        .iter()
        .filter(|(_, _, fx)| !fx)
        .count();
    for _ in 1..n_starts {
        let mut t = theta0.clone();
        for v in t.iter_mut().take(free_loadings) {
            *v *= 1.0 + rng.gen_range(-0.2..0.2);
        }
        starts.push(t);
    }
    starts
}

/// Maximum-likelihood fit of a pattern against a sample covariance with n.
/// Multi-start BFGS; best local optimum returned, converged flag set from
/// the gradient/step tolerances.
pub fn fit_ml(pattern: &MeasurementPattern, cov: &CovMatrix) -> Result<FittedModel> {
    let n = cov
        .n
        .ok_or_else(|| Error::config("fitting requires a covariance with sample size n"))?;
    let p = pattern.observed().len();
    if n <= p {
        return Err(Error::input(format!("need n > p = {p}, got n = {n}")));
    }
    let mut model = FitModel::from_pattern(pattern)?;
    // reorder the sample covariance to the pattern's observed order
    let idx: Vec<usize> = model
        .observed
        .iter()
        .map(|o| {
            cov.var_index(o)
                .ok_or_else(|| Error::input(format!("variable `{o}` missing from covariance")))
        })
        .collect::<Result<Vec<_>>>()?;
    let s = cov.submatrix(&idx);
    let logdet_s = s
        .clone()
        .cholesky()
        .map(|c| 2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
        .ok_or_else(|| Error::input("sample covariance is not positive-definite"))?;

    let mut best: Option<(Vec<f64>, f64, bool, usize)> = None;
    for start in starting_points(&model, &s, 3) {
        if let Some(r) = minimize_from(&mut model, &s, logdet_s, start) {
            let better = match &best {
                None => true,
                Some(b) => r.1 < b.1 - 1e-12 || (r.2 && !b.2 && r.1 < b.1 + 1e-9),
            };
            if better {
                best = Some(r);
            }
        }
    }
    let (theta, f, converged, iterations) =
        best.ok_or_else(|| Error::internal("all fit starts failed (non-PD throughout)"))?;
    model.write_params(&theta);
    let nf = n as f64;
    // multivariate normal log-likelihood with the ML (n-denominator) covariance
    let s_ml = &s * ((nf - 1.0) / nf);
    let sigma = model.implied();
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::internal("optimum left the PD cone"))?;
    let logdet_sigma = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let tr = (&s_ml * chol.inverse()).trace();
    let log_likelihood =
        -0.5 * nf * (p as f64 * (2.0 * std::f64::consts::PI).ln() + logdet_sigma + tr);
    let free_param_count = model.free_param_count();
    Ok(FittedModel {
        model,
        log_likelihood,
        n,
        free_param_count,
        converged,
        iterations,
        discrepancy: f,
    })
}

/// Bayesian information criterion, lower is better.
pub fn bic(f: &FittedModel) -> f64 {
    -2.0 * f.log_likelihood + f.free_param_count as f64 * (f.n as f64).ln()
}

/// Likelihood-ratio chi-square statistic (n-1) * F_ML with its upper-tail
/// p-value at the pattern's degrees of freedom.
pub fn chi_square(f: &FittedModel, pattern: &MeasurementPattern) -> Result<(f64, i64, f64)> {
    let df = degrees_of_freedom(pattern)?;
    if df <= 0 {
        return Err(Error::input(format!(
            "chi-square requires df > 0, got {df}"
        )));
    }
    let stat = (f.n as f64 - 1.0) * f.discrepancy;
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::internal(e.to_string()))?;
    let p = 1.0 - dist.cdf(stat.max(0.0));
    Ok((stat, df, p.clamp(0.0, 1.0)))
}

/// Evaluates the analytic gradient and a central finite-difference gradient
/// of F_ML at a randomly perturbed feasible point. The finite-difference side
/// only ever calls the scalar objective, so it is an independent check of the
/// gradient formulas. Returns (analytic, finite-difference, parameter labels).
pub fn gradient_probe(
    pattern: &MeasurementPattern,
    s: &DMatrix<f64>,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<String>)> {
    let mut model = FitModel::from_pattern(pattern)?;
    let logdet_s = s
        .clone()
        .cholesky()
        .map(|c| 2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
        .ok_or_else(|| Error::input("sample covariance is not positive-definite"))?;
    let base = starting_points(&model, s, 1).remove(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta: Vec<f64> = base
        .iter()
        .map(|v| v * (1.0 + rng.gen_range(-0.15..0.15)) + rng.gen_range(-0.02..0.02))
        .collect();
    model.write_params(&theta);
    if f_ml(&model.implied(), s, logdet_s).is_none() {
        theta = base; // perturbation left the PD cone; use the canonical point
        model.write_params(&theta);
    }
    let analytic = f_ml_gradient(&model, s)
        .ok_or_else(|| Error::internal("gradient undefined at probe point"))?;
    let mut fd = Vec::with_capacity(theta.len());
    for k in 0..theta.len() {
        let h = 1e-6 * theta[k].abs().max(1.0);
        let mut plus = theta.clone();
        plus[k] += h;
        model.write_params(&plus);
        let fp = f_ml(&model.implied(), s, logdet_s)
            .ok_or_else(|| Error::internal("objective undefined at theta+h"))?;
        let mut minus = theta.clone();
        minus[k] -= h;
        model.write_params(&minus);
        let fm = f_ml(&model.implied(), s, logdet_s)
            .ok_or_else(|| Error::internal("objective undefined at theta-h"))?;
        fd.push((fp - fm) / (2.0 * h));
    }
    let mut labels = Vec::new();
    for &(li, oi, fixed) in &model.loading_entries {
        if !fixed {
            labels.push(format!(
                "loading {}->{}",
                model.latents[li], model.observed[oi]
            ));
        }
    }
    for i in 0..model.latents.len() {
        for j in 0..=i {
            labels.push(format!("phi({i},{j})"));
        }
    }
    for i in 0..model.observed.len() {
        labels.push(format!("theta({i})"));
    }
    for &(i, j) in &model.bidirected_pairs {
        labels.push(format!("theta({i},{j})"));
    }
    Ok((analytic, fd, labels))
}

/// One round result of the greedy search.
#[derive(Debug, Clone)]
pub struct GreedyReport {
    pub added: Vec<(String, String)>,
    pub skipped: Vec<(String, String, String)>,
    pub rounds: usize,
}

/// Best-first greedy bi-directed augmentation: at each round fit all
/// single-edge additions over eligible observed pairs, take the
/// BIC-minimizing candidate and accept it only on strict improvement.
pub fn greedy_bidirected(
    pattern: &MeasurementPattern,
    cov: &CovMatrix,
    threads: usize,
) -> Result<(MeasurementPattern, GreedyReport)> {
    let mut current = pattern.clone();
    let mut report = GreedyReport {
        added: Vec::new(),
        skipped: Vec::new(),
        rounds: 0,
    };
    let mut incumbent = match fit_ml(&current, cov) {
        Ok(f) => bic(&f),
        Err(e) => {
            report
                .skipped
                .push(("<incumbent>".into(), "<incumbent>".into(), e.to_string()));
            return Ok((current, report));
        }
    };
    loop {
        report.rounds += 1;
        let obs: Vec<String> = current.observed().to_vec();
        let mut candidates: Vec<(String, String)> = Vec::new();
        for i in 0..obs.len() {
            for j in (i + 1)..obs.len() {
                if current.bidirected_label(&obs[i], &obs[j]).is_none() {
                    candidates.push((obs[i].clone(), obs[j].clone()));
                }
            }
        }
        if candidates.is_empty() {
            break;
        }
        let results = run_candidates(&current, cov, &candidates, threads);
        let mut best: Option<(f64, usize)> = None;
        for (idx, r) in results.iter().enumerate() {
            match r {
                Ok(b) => {
                    if best.map(|(bb, _)| *b < bb).unwrap_or(true) {
                        best = Some((*b, idx));
                    }
                }
                Err(msg) => {
                    let (a, b) = &candidates[idx];
                    report.skipped.push((a.clone(), b.clone(), msg.clone()));
                }
            }
        }
        match best {
            Some((b, idx)) if b < incumbent => {
                let (a, c) = &candidates[idx];
                current.add_bidirected(a, c, EdgeLabel::Unconfirmed);
                report.added.push((a.clone(), c.clone()));
                incumbent = b;
            }
            _ => break,
        }
    }
    Ok((current, report))
}

fn run_candidates(
    current: &MeasurementPattern,
    cov: &CovMatrix,
    candidates: &[(String, String)],
    threads: usize,
) -> Vec<std::result::Result<f64, String>> {
    let eval = |pair: &(String, String)| -> std::result::Result<f64, String> {
        let mut cand = current.clone();
        cand.add_bidirected(&pair.0, &pair.1, EdgeLabel::Unconfirmed);
        if degrees_of_freedom(&cand).map_err(|e| e.to_string())? < 0 {
            return Err("negative degrees of freedom".into());
        }
        fit_ml(&cand, cov)
            .map(|f| bic(&f))
            .map_err(|e| e.to_string())
    };
    if threads <= 1 || candidates.len() <= 1 {
        return candidates.iter().map(eval).collect();
    }
    let chunk = candidates.len().div_ceil(threads);
    let mut out: Vec<std::result::Result<f64, String>> = Vec::with_capacity(candidates.len());
    std::thread::scope(|scope| {
        let handles: Vec<_> = candidates
            .chunks(chunk)
            .map(|ch| scope.spawn(move || ch.iter().map(eval).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            out.extend(h.join().expect("candidate fit thread panicked"));
        }
    });
    out
}

/// Structured text report for a fitted model.
pub fn fit_report(f: &FittedModel, pattern: &MeasurementPattern) -> String {
    let mut out = String::new();
    out.push_str("fitted measurement pattern\n");
    out.push_str(&format!("  n: {}\n", f.n));
    out.push_str(&format!("  free parameters: {}\n", f.free_param_count));
    out.push_str(&format!("  log-likelihood: {:.6}\n", f.log_likelihood));
    out.push_str(&format!("  BIC: {:.6}\n", bic(f)));
    match chi_square(f, pattern) {
        Ok((stat, df, p)) => out.push_str(&format!(
            "  chi-square: {stat:.4} with {df} degrees of freedom (p = {p:.4})\n"
        )),
        Err(e) => out.push_str(&format!("  chi-square: unavailable ({e})\n")),
    }
    out.push_str(&format!(
        "  converged: {} after {} iterations\n",
        f.converged, f.iterations
    ));
    out.push_str("  loadings (fixed entries marked *):\n");
    for &(li, oi, fixed) in &f.model.loading_entries {
        out.push_str(&format!(
            "    {} -> {}: {:.6}{}\n",
            f.model.latents[li],
            f.model.observed[oi],
            f.model.loadings[(oi, li)],
            if fixed { " *" } else { "" }
        ));
    }
    out.push_str("  latent covariance:\n");
    for i in 0..f.model.latents.len() {
        let row: Vec<String> = (0..f.model.latents.len())
            .map(|j| format!("{:.6}", f.model.latent_cov[(i, j)]))
            .collect();
        out.push_str(&format!("    {}\n", row.join(" ")));
    }
    out.push_str("  error variances:\n");
    for i in 0..f.model.observed.len() {
        out.push_str(&format!(
            "    {}: {:.6}\n",
            f.model.observed[i],
            f.model.error_cov[(i, i)]
        ));
    }
    if !f.model.bidirected_pairs.is_empty() {
        out.push_str("  error covariances (bi-directed pairs):\n");
        for &(i, j) in &f.model.bidirected_pairs {
            out.push_str(&format!(
                "    {} <-> {}: {:.6}\n",
                f.model.observed[i],
                f.model.observed[j],
                f.model.error_cov[(i, j)]
            ));
        }
    }
    out
}
