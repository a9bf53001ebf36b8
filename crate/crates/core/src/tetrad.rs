//! Tetrad-constraint evaluation: the predicate T(ABCD), covariance-product
//! comparisons, and the identification checks built on them, answered either
//! exactly from a population covariance or statistically from a sample
//! covariance via Wishart's tetrad test.

use crate::error::{Error, Result};
use crate::sem::CovMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

/// How tetrad queries are answered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceMode {
    /// Exact answers with a relative tolerance.
    Population { tol: f64 },
    /// Wishart z-tests at significance level `alpha`; `bonferroni` divides
    /// alpha by three when the three per-quad tests are conjoined.
    Sample { alpha: f64, bonferroni: bool },
}

/// The abstraction both discovery modes consume: a covariance matrix plus a
/// decision rule for tetrad and product queries.
#[derive(Debug, Clone)]
pub struct CovSource {
    pub cov: CovMatrix,
    pub mode: SourceMode,
}

impl CovSource {
    pub fn population(cov: CovMatrix, tol: f64) -> Result<Self> {
        if tol <= 0.0 {
            return Err(Error::config("population tolerance must be > 0"));
        }
        Ok(CovSource {
            cov,
            mode: SourceMode::Population { tol },
        })
    }

    pub fn sample(cov: CovMatrix, alpha: f64) -> Result<Self> {
        Self::sample_with(cov, alpha, false)
    }

    pub fn sample_with(cov: CovMatrix, alpha: f64, bonferroni: bool) -> Result<Self> {
        if !(0.0 < alpha && alpha < 1.0) {
            return Err(Error::config("alpha must lie in (0, 1)"));
        }
        if cov.n.is_none() {
            return Err(Error::config(
                "sample mode requires a covariance with sample size n",
            ));
        }
        Ok(CovSource {
            cov,
            mode: SourceMode::Sample { alpha, bonferroni },
        })
    }

    pub fn dim(&self) -> usize {
        self.cov.dim()
    }

    pub fn is_population(&self) -> bool {
        matches!(self.mode, SourceMode::Population { .. })
    }
}

/// Verdict of the predicate T over one quad.
#[derive(Debug, Clone, PartialEq)]
pub struct TetradVerdict {
    pub quad: [usize; 4],
    pub holds: bool,
    /// (s_ab*s_cd - s_ac*s_bd, s_ab*s_cd - s_ad*s_bc, s_ac*s_bd - s_ad*s_bc)
    pub differences: [f64; 3],
    pub p_values: [Option<f64>; 3],
    /// all three products are (near-)zero: the constraint holds vacuously
    pub degenerate: bool,
}

impl TetradVerdict {
    /// Holds and is informative: the form every premise check uses.
    pub fn holds_informative(&self) -> bool {
        self.holds && !self.degenerate
    }
}

fn check_distinct(ids: &[usize], dim: usize) -> Result<()> {
    for (i, &a) in ids.iter().enumerate() {
        if a >= dim {
            return Err(Error::input(format!("variable index {a} out of range")));
        }
        if ids[i + 1..].contains(&a) {
            return Err(Error::input("variable ids must be distinct"));
        }
    }
    Ok(())
}

/// The three tetrad differences over (a, b, c, d).
pub fn tetrad_differences(
    cov: &CovMatrix,
    a: usize,
    b: usize,
    c: usize,
    d: usize,
) -> Result<[f64; 3]> {
    check_distinct(&[a, b, c, d], cov.dim())?;
    let p1 = cov.get(a, b) * cov.get(c, d);
    let p2 = cov.get(a, c) * cov.get(b, d);
    let p3 = cov.get(a, d) * cov.get(b, c);
    Ok([p1 - p2, p1 - p3, p2 - p3])
}

fn tetrad_products(cov: &CovMatrix, a: usize, b: usize, c: usize, d: usize) -> [f64; 3] {
    [
        cov.get(a, b) * cov.get(c, d),
        cov.get(a, c) * cov.get(b, d),
        cov.get(a, d) * cov.get(b, c),
    ]
}

/// Two-sided p-value of Wishart's test for the `which`-th tetrad difference
/// (1-based, ordered as in [`tetrad_differences`]). Returns 1.0 when the
/// variance estimate is non-positive (degenerate sample).
pub fn wishart_p_value(
    cov: &CovMatrix,
    a: usize,
    b: usize,
    c: usize,
    d: usize,
    which: usize,
) -> Result<f64> {
    let (p, _) = wishart_test(cov, a, b, c, d, which)?;
    Ok(p)
}

/// (p-value, degenerate flag).
fn wishart_test(
    cov: &CovMatrix,
    a: usize,
    b: usize,
    c: usize,
    d: usize,
    which: usize,
) -> Result<(f64, bool)> {
    check_distinct(&[a, b, c, d], cov.dim())?;
    let n = cov
        .n
        .ok_or_else(|| Error::config("Wishart test requires a covariance with sample size"))?;
    if n <= 4 {
        return Err(Error::input("Wishart test requires n > 4"));
    }
    // permute so the tested difference takes the canonical form
    // s_AB*s_CD - s_AC*s_BD
    let (qa, qb, qc, qd) = match which {
        1 => (a, b, c, d),
        2 => (a, b, d, c),
        3 => (a, c, d, b),
        _ => return Err(Error::input("`which` must be 1, 2 or 3")),
    };
    let tau = cov.get(qa, qb) * cov.get(qc, qd) - cov.get(qa, qc) * cov.get(qb, qd);
    canonical_wishart(cov, qa, qb, qc, qd, tau, n)
}

fn canonical_wishart(
    cov: &CovMatrix,
    a: usize,
    b: usize,
    c: usize,
    d: usize,
    tau: f64,
    n: usize,
) -> Result<(f64, bool)> {
    // Wishart's sampling variance for tau = s_ab*s_cd - s_ac*s_bd uses the
    // 2x2 determinants of the pairs absent from both products, (a,d) and
    // (b,c); verified against simulated tetrad variances.
    let d_ad = cov.get(a, a) * cov.get(d, d) - cov.get(a, d) * cov.get(a, d);
    let d_bc = cov.get(b, b) * cov.get(c, c) - cov.get(b, c) * cov.get(b, c);
    let det = cov.submatrix(&[a, b, c, d]).determinant();
    let nf = n as f64;
    let var = (d_ad * d_bc * (nf + 1.0) / (nf - 1.0) - det) / (nf - 2.0);
    if var <= 0.0 || !var.is_finite() {
        return Ok((1.0, true));
    }
    let z = tau / var.sqrt();
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::internal(e.to_string()))?;
    let p = 2.0 * (1.0 - normal.cdf(z.abs()));
    Ok((p.clamp(0.0, 1.0), false))
}

/// Evaluates T(abcd): all three covariance products equal.
pub fn tetrad_holds(
    src: &CovSource,
    a: usize,
    b: usize,
    c: usize,
    d: usize,
) -> Result<TetradVerdict> {
    let differences = tetrad_differences(&src.cov, a, b, c, d)?;
    let products = tetrad_products(&src.cov, a, b, c, d);
    match src.mode {
        SourceMode::Population { tol } => {
            let max_p = products.iter().fold(0.0f64, |m, p| m.max(p.abs()));
            let scale = max_p.max(1.0);
            let holds = differences.iter().all(|t| t.abs() < tol * scale);
            let degenerate = max_p < tol;
            Ok(TetradVerdict {
                quad: [a, b, c, d],
                holds,
                differences,
                p_values: [None; 3],
                degenerate,
            })
        }
        SourceMode::Sample { alpha, bonferroni } => {
            let level = if bonferroni { alpha / 3.0 } else { alpha };
            let mut p_values = [None; 3];
            let mut degenerate = false;
            let mut holds = true;
            for which in 1..=3 {
                let (p, deg) = wishart_test(&src.cov, a, b, c, d, which)?;
                degenerate |= deg;
                p_values[which - 1] = Some(p);
                if p < level {
                    holds = false;
                }
            }
            Ok(TetradVerdict {
                quad: [a, b, c, d],
                holds,
                differences,
                p_values,
                degenerate,
            })
        }
    }
}

/// True iff the product comparison s_ab*s_de = s_ae*s_bd is rejected
/// (population: outside tolerance; sample: Wishart-style z-test rejects).
///
/// Both compared pairs lie inside the two premise quads {a,b,c,d} and
/// {a,d,e,f}, which is what makes the Fact-2 conclusion sound: a common
/// parent of `a` and `d` chokes both quads and forces the equality. Pairing
/// the comparison as s_ad*s_be instead (the transcription in the text)
/// involves (b, e), a pair outside both quads, and admits false conclusions.
pub fn product_comparison_fails(
    src: &CovSource,
    a: usize,
    b: usize,
    d: usize,
    e: usize,
) -> Result<bool> {
    check_distinct(&[a, b, d, e], src.dim())?;
    let cov = &src.cov;
    let lhs = cov.get(a, b) * cov.get(d, e);
    let rhs = cov.get(a, e) * cov.get(b, d);
    match src.mode {
        SourceMode::Population { tol } => {
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            Ok((lhs - rhs).abs() >= tol * scale)
        }
        SourceMode::Sample { alpha, .. } => {
            let n = cov
                .n
                .ok_or_else(|| Error::config("sample mode requires n"))?;
            // canonical difference s_AB*s_CD - s_AC*s_BD with (A,B,C,D) = (a,b,e,d)
            let (p, degenerate) = canonical_wishart(cov, a, b, e, d, lhs - rhs, n)?;
            Ok(!degenerate && p < alpha)
        }
    }
}

/// Fact-2 check: T(abcd) and T(adef) hold but s_ab*s_de != s_ae*s_bd, which
/// licenses the claim that `a` and `d` have no common parent in the true
/// graph.
pub fn fact2_separates(
    src: &CovSource,
    a: usize,
    b: usize,
    c: usize,
    d: usize,
    e: usize,
    f: usize,
) -> Result<bool> {
    check_distinct(&[a, b, c, d, e, f], src.dim())?;
    if !tetrad_holds(src, a, b, c, d)?.holds_informative() {
        return Ok(false);
    }
    if !tetrad_holds(src, a, d, e, f)?.holds_informative() {
        return Ok(false);
    }
    product_comparison_fails(src, a, b, d, e)
}

/// Roles A..F plus the pair concluded to share extra hidden common causes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma3Conclusion {
    pub roles: [usize; 6],
    pub impure_pair: (usize, usize),
}

/// Checks the Lemma-3 premise pattern; a conclusion names (c, d) as a pair
/// with extra hidden common causes beyond the two latents involved.
pub fn lemma3_check(
    src: &CovSource,
    a: usize,
    b: usize,
    c: usize,
    d: usize,
    e: usize,
    f: usize,
) -> Result<Option<Lemma3Conclusion>> {
    check_distinct(&[a, b, c, d, e, f], src.dim())?;
    let must_hold = [[a, b, c, e], [a, b, c, f], [a, d, e, f], [b, d, e, f]];
    for q in must_hold {
        if !tetrad_holds(src, q[0], q[1], q[2], q[3])?.holds_informative() {
            return Ok(None);
        }
    }
    let must_fail = [[a, b, e, f], [a, b, c, d], [c, d, e, f]];
    for q in must_fail {
        let v = tetrad_holds(src, q[0], q[1], q[2], q[3])?;
        if v.holds || v.degenerate {
            return Ok(None);
        }
    }
    Ok(Some(Lemma3Conclusion {
        roles: [a, b, c, d, e, f],
        impure_pair: (c, d),
    }))
}

/// Roles A..G plus the indicator concluded to be a child of both latents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma4Conclusion {
    pub roles: [usize; 7],
    pub shared_child: usize,
}

/// Checks the Lemma-4 premise pattern; a conclusion marks `d` as a confirmed
/// shared child of the two latents spanned by {a,b,c} and {e,f,g}.
#[allow(clippy::too_many_arguments)]
pub fn lemma4_check(
    src: &CovSource,
    a: usize,
    b: usize,
    c: usize,
    d: usize,
    e: usize,
    f: usize,
    g: usize,
) -> Result<Option<Lemma4Conclusion>> {
    check_distinct(&[a, b, c, d, e, f, g], src.dim())?;
    for k in [d, e, f, g] {
        if !tetrad_holds(src, a, b, c, k)?.holds_informative() {
            return Ok(None);
        }
    }
    for k in [a, b, c, d] {
        if !tetrad_holds(src, k, e, f, g)?.holds_informative() {
            return Ok(None);
        }
    }
    let left = [a, b, c];
    let right = [e, f, g];
    for i in 0..3 {
        for j in (i + 1)..3 {
            for k in 0..3 {
                for l in (k + 1)..3 {
                    let v = tetrad_holds(src, left[i], left[j], right[k], right[l])?;
                    if v.holds || v.degenerate {
                        return Ok(None);
                    }
                }
            }
        }
    }
    for q in [[a, d, e, f], [a, b, d, e]] {
        let v = tetrad_holds(src, q[0], q[1], q[2], q[3])?;
        if v.holds || v.degenerate {
            return Ok(None);
        }
    }
    Ok(Some(Lemma4Conclusion {
        roles: [a, b, c, d, e, f, g],
        shared_child: d,
    }))
}
