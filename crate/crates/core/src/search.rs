//! The three-stage pattern assembly: the initial pass building the
//! auxiliary undirected graph, per-clique single-latent graphs, and the
//! merging/labeling pass that unifies them into a measurement pattern;
//! plus variable screening, the end-to-end pipeline and recovery metrics.

use crate::error::{Error, Result};
use crate::fit;
use crate::graph::{
    combinations, EdgeLabel, MeasurementPattern, SingleLatentGraph, TrueDag, UndirectedGraph,
};
use crate::sem::{implied_covariance, sample_covariance, CovMatrix, DataMatrix, LinearSem};
use crate::tetrad::{
    lemma3_check, lemma4_check, product_comparison_fails, tetrad_holds, CovSource, SourceMode,
};
use statrs::distribution::{ContinuousCDF, Normal};
use std::collections::BTreeSet;
use std::time::Instant;

/// Knobs for the discovery pipeline.
#[derive(Debug, Clone)]
pub struct DiscoveryConfig {
    /// Wishart test level for the predicate T in sample mode
    pub alpha: f64,
    /// relative tolerance for population-mode tetrad decisions
    pub population_tol: f64,
    /// minimum clique size considered by the single-latent stage
    pub min_clique_size: usize,
    /// run the greedy BIC bi-directed augmentation (sample mode only)
    pub use_bic_augmentation: bool,
    /// apply a Bonferroni correction over the three per-quad tests
    pub bonferroni: bool,
    pub seed: u64,
    /// level of the zero-correlation screening test
    pub screening_alpha: f64,
    pub threads: usize,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            alpha: 0.05,
            population_tol: 1e-9,
            min_clique_size: 3,
            use_bic_augmentation: true,
            bonferroni: false,
            seed: 0,
            screening_alpha: 0.10,
            threads: 1,
        }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::config("alpha must lie in (0,1)"));
        }
        if !(0.0 < self.screening_alpha && self.screening_alpha < 1.0) {
            return Err(Error::config("screening_alpha must lie in (0,1)"));
        }
        if self.population_tol <= 0.0 {
            return Err(Error::config("population_tol must be > 0"));
        }
        if self.min_clique_size < 3 {
            return Err(Error::config("min_clique_size must be >= 3"));
        }
        Ok(())
    }
}

/// What happened during a run; embedded into the text report.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub mode: String,
    pub dropped_variables: Vec<String>,
    pub removed_edges: Vec<(String, String)>,
    pub deleted_in_step3: Vec<String>,
    pub cliques: Vec<Vec<String>>,
    pub merges: Vec<(String, String)>,
    pub lemma3_confirmations: Vec<(String, String)>,
    pub lemma4_supported: Vec<(String, String)>,
    pub bic_added_edges: Vec<(String, String)>,
    pub bic_skipped: Vec<(String, String, String)>,
    pub tetrad_queries: usize,
    pub product_queries: usize,
    pub warnings: Vec<String>,
    pub elapsed_ms: u128,
    pub rng_algorithm: &'static str,
}

struct Ctx<'a> {
    src: &'a CovSource,
    tetrad_queries: usize,
    product_queries: usize,
}

impl<'a> Ctx<'a> {
    fn new(src: &'a CovSource) -> Self {
        Ctx {
            src,
            tetrad_queries: 0,
            product_queries: 0,
        }
    }

    fn holds(&mut self, a: usize, b: usize, c: usize, d: usize) -> Result<bool> {
        self.tetrad_queries += 1;
        Ok(tetrad_holds(self.src, a, b, c, d)?.holds_informative())
    }

    fn fails(&mut self, a: usize, b: usize, c: usize, d: usize) -> Result<bool> {
        self.tetrad_queries += 1;
        let v = tetrad_holds(self.src, a, b, c, d)?;
        Ok(!v.holds && !v.degenerate)
    }

    fn product_differs(&mut self, a: usize, b: usize, d: usize, e: usize) -> Result<bool> {
        self.product_queries += 1;
        product_comparison_fails(self.src, a, b, d, e)
    }
}

/// Step 1-3 of the first stage: start from the complete graph over `vars`,
/// remove every edge with a Fact-2 certificate (sweeping all six-variable
/// subsets of the step-start clique snapshot and all role assignments), then
/// delete variables that appear in no holding quad.
pub fn initial_pass(src: &CovSource, vars: &[usize]) -> Result<UndirectedGraph> {
    let mut report = RunReport::default();
    initial_pass_impl(src, vars, &mut report)
}

fn initial_pass_impl(
    src: &CovSource,
    vars: &[usize],
    report: &mut RunReport,
) -> Result<UndirectedGraph> {
    let p = src.dim();
    for &v in vars {
        if v >= p {
            return Err(Error::input(format!("variable index {v} out of range")));
        }
    }
    let mut h = UndirectedGraph::empty(p);
    if vars.len() < 4 {
        report
            .warnings
            .push("fewer than 4 variables: returning empty graph".into());
        for &v in vars {
            h.remove_node(v);
        }
        return Ok(h);
    }
    // step 1: complete graph on vars
    for (i, &a) in vars.iter().enumerate() {
        for &b in &vars[i + 1..] {
            h.add_edge(a, b);
        }
    }
    let mut ctx = Ctx::new(src);
    // step 2: every six-subset is a clique of the step-start snapshot;
    // removals depend only on the covariance, so the sweep order does not
    // affect the outcome.
    for subset_idx in combinations(vars.len(), 6) {
        let six: Vec<usize> = subset_idx.iter().map(|&i| vars[i]).collect();
        sweep_fact2(&mut ctx, &six, &mut h, report)?;
    }
    // step 3: drop variables with no informative holding quad
    let present = h.present_nodes();
    for &a in &present {
        let mut supported = false;
        'outer: for trip in combinations(vars.len(), 3) {
            let (b, c, d) = (vars[trip[0]], vars[trip[1]], vars[trip[2]]);
            if b == a || c == a || d == a {
                continue;
            }
            if ctx.holds(a, b, c, d)? {
                supported = true;
                break 'outer;
            }
        }
        if !supported {
            h.remove_node(a);
            report.deleted_in_step3.push(var_name(src, a));
        }
    }
    report.tetrad_queries += ctx.tetrad_queries;
    report.product_queries += ctx.product_queries;
    Ok(h)
}

/// All Fact-2 role assignments over one six-subset: ordered pair (A, D),
/// B within the first quad's helpers, E within the second's.
fn sweep_fact2(
    ctx: &mut Ctx,
    six: &[usize],
    h: &mut UndirectedGraph,
    report: &mut RunReport,
) -> Result<()> {
    debug_assert_eq!(six.len(), 6);
    for ai in 0..6 {
        for di in 0..6 {
            if di == ai {
                continue;
            }
            let (a, d) = (six[ai], six[di]);
            if !h.has_edge(a, d) {
                continue;
            }
            let rest: Vec<usize> = (0..6)
                .filter(|&i| i != ai && i != di)
                .map(|i| six[i])
                .collect();
            // {B,C} is a 2-subset of rest, {E,F} the complement; B and E are
            // the roles entering the product comparison.
            for bc in combinations(4, 2) {
                let (b0, c0) = (rest[bc[0]], rest[bc[1]]);
                let ef: Vec<usize> = (0..4)
                    .filter(|i| !bc.contains(i))
                    .map(|i| rest[i])
                    .collect();
                let (e0, f0) = (ef[0], ef[1]);
                if !ctx.holds(a, b0, c0, d)? || !ctx.holds(a, d, e0, f0)? {
                    continue;
                }
                for (b, e) in [(b0, e0), (b0, f0), (c0, e0), (c0, f0)] {
                    if ctx.product_differs(a, b, d, e)? {
                        h.remove_edge(a, d);
                        let (x, y) = if a < d { (a, d) } else { (d, a) };
                        let pair = (var_name(ctx.src, x), var_name(ctx.src, y));
                        if !report.removed_edges.contains(&pair) {
                            report.removed_edges.push(pair);
                        }
                        break;
                    }
                }
                if !h.has_edge(a, d) {
                    break;
                }
            }
        }
    }
    Ok(())
}

fn var_name(src: &CovSource, idx: usize) -> String {
    src.cov.names[idx].clone()
}

/// All maximal cliques of H with at least `min_size` members, sorted.
pub fn enumerate_cliques(h: &UndirectedGraph, min_size: usize) -> Vec<Vec<usize>> {
    h.maximal_cliques(min_size)
}

/// Second stage: one tentative latent per clique that passes the foundation
/// check, with unconfirmed bi-directed edges for within-clique pairs no quad
/// supports. With BIC augmentation enabled (sample mode), extra bi-directed
/// edges are added per clique by the greedy search.
pub fn single_latents(
    src: &CovSource,
    h: &UndirectedGraph,
    cfg: &DiscoveryConfig,
) -> Result<Vec<SingleLatentGraph>> {
    let mut report = RunReport::default();
    single_latents_impl(src, h, cfg, &mut report)
}

fn single_latents_impl(
    src: &CovSource,
    h: &UndirectedGraph,
    cfg: &DiscoveryConfig,
    report: &mut RunReport,
) -> Result<Vec<SingleLatentGraph>> {
    let vars = h.present_nodes();
    let mut ctx = Ctx::new(src);
    let mut out: Vec<SingleLatentGraph> = Vec::new();
    for clique in h.maximal_cliques(cfg.min_clique_size) {
        report
            .cliques
            .push(clique.iter().map(|&v| var_name(src, v)).collect());
        // step 3: foundation triplet {a,b,c} in the clique with some d
        if !has_foundation(&mut ctx, &clique, &vars, None)? {
            continue;
        }
        let mut g = SingleLatentGraph::new(
            out.len() + 1,
            clique.iter().map(|&v| var_name(src, v)).collect(),
        );
        // step 5: pairs the latent cannot separate get an unconfirmed edge
        for i in 0..clique.len() {
            for j in (i + 1)..clique.len() {
                let (a, b) = (clique[i], clique[j]);
                let mut supported = false;
                'support: for &c in &clique {
                    if c == a || c == b {
                        continue;
                    }
                    for &d in &vars {
                        if d == a || d == b || d == c {
                            continue;
                        }
                        if ctx.holds(a, b, c, d)? {
                            supported = true;
                            break 'support;
                        }
                    }
                }
                if !supported {
                    g.add_bidirected(&var_name(src, a), &var_name(src, b), EdgeLabel::Unconfirmed);
                }
            }
        }
        if cfg.use_bic_augmentation && !src.is_population() {
            augment_cluster(&mut g, src, cfg, report)?;
        }
        out.push(g);
    }
    report.tetrad_queries += ctx.tetrad_queries;
    report.product_queries += ctx.product_queries;
    Ok(out)
}

/// Is there a T-supported triplet inside `members` (with the fourth variable
/// drawn from `vars`)? With `within`, the triplet must additionally lie in
/// that set.
fn has_foundation(
    ctx: &mut Ctx,
    members: &[usize],
    vars: &[usize],
    within: Option<&BTreeSet<usize>>,
) -> Result<bool> {
    for trip in combinations(members.len(), 3) {
        let (a, b, c) = (members[trip[0]], members[trip[1]], members[trip[2]]);
        if let Some(w) = within {
            if !(w.contains(&a) && w.contains(&b) && w.contains(&c)) {
                continue;
            }
        }
        for &d in vars {
            if d == a || d == b || d == c {
                continue;
            }
            if ctx.holds(a, b, c, d)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn augment_cluster(
    g: &mut SingleLatentGraph,
    src: &CovSource,
    cfg: &DiscoveryConfig,
    report: &mut RunReport,
) -> Result<()> {
    let mut pattern = MeasurementPattern::new();
    let lname = g.latent_name();
    for child in &g.children {
        pattern.add_directed(&lname, child, EdgeLabel::Confirmed);
    }
    for ((a, b), label) in &g.bidirected {
        pattern.add_bidirected(a, b, *label);
    }
    let (augmented, rep) = fit::greedy_bidirected(&pattern, &src.cov, cfg.threads)?;
    for (a, b) in rep.added {
        g.add_bidirected(&a, &b, EdgeLabel::Unconfirmed);
        report.bic_added_edges.push((a, b));
    }
    report.bic_skipped.extend(rep.skipped);
    let _ = augmented;
    Ok(())
}

/// Third stage: union the single-latent graphs, merge clusters that share a
/// supported foundation triplet, apply the Lemma-3 edge-removal/confirmation
/// pass over cluster pairs, label multi-parent children by Lemma-4 support,
/// upgrade isolatable bi-directed edges, and prune vacuous ones.
pub fn find_measurement_pattern(
    src: &CovSource,
    s: &[SingleLatentGraph],
    cfg: &DiscoveryConfig,
) -> Result<MeasurementPattern> {
    let mut report = RunReport::default();
    find_measurement_pattern_impl(src, s, cfg, &mut report)
}

struct Cluster {
    latent_idx: usize,
    children: BTreeSet<usize>,
    labels: std::collections::BTreeMap<usize, EdgeLabel>,
    bidirected: std::collections::BTreeMap<(usize, usize), EdgeLabel>,
}

fn find_measurement_pattern_impl(
    src: &CovSource,
    s: &[SingleLatentGraph],
    cfg: &DiscoveryConfig,
    report: &mut RunReport,
) -> Result<MeasurementPattern> {
    if s.is_empty() {
        return Ok(MeasurementPattern::new());
    }
    let name_idx = |name: &str| -> Result<usize> {
        src.cov
            .var_index(name)
            .ok_or_else(|| Error::input(format!("variable `{name}` missing from covariance")))
    };
    let mut clusters: Vec<Cluster> = Vec::new();
    for g in s {
        let mut children = BTreeSet::new();
        let mut labels = std::collections::BTreeMap::new();
        for child in &g.children {
            let i = name_idx(child)?;
            children.insert(i);
            labels.insert(i, EdgeLabel::Confirmed);
        }
        let mut bidirected = std::collections::BTreeMap::new();
        for ((a, b), label) in &g.bidirected {
            let (ia, ib) = (name_idx(a)?, name_idx(b)?);
            bidirected.insert((ia.min(ib), ia.max(ib)), *label);
        }
        clusters.push(Cluster {
            latent_idx: g.latent_idx,
            children,
            labels,
            bidirected,
        });
    }
    let all_vars: Vec<usize> = {
        let mut v: BTreeSet<usize> = BTreeSet::new();
        for c in &clusters {
            v.extend(c.children.iter().copied());
        }
        v.into_iter().collect()
    };
    let mut ctx = Ctx::new(src);

    // merge cascade: a pair whose intersection contains a supported
    // foundation triplet collapses onto the earlier latent; children outside
    // the intersection become unconfirmed.
    'cascade: loop {
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let inter: BTreeSet<usize> = clusters[i]
                    .children
                    .intersection(&clusters[j].children)
                    .copied()
                    .collect();
                if inter.len() < 3 {
                    continue;
                }
                let members: Vec<usize> = inter.iter().copied().collect();
                if !has_foundation(&mut ctx, &members, &all_vars, None)? {
                    continue;
                }
                // merge j into i
                let cj = clusters.remove(j);
                let ci = &mut clusters[i];
                report
                    .merges
                    .push((format!("L{}", ci.latent_idx), format!("L{}", cj.latent_idx)));
                for (&child, &label) in &cj.labels {
                    ci.children.insert(child);
                    ci.labels.entry(child).or_insert(label);
                }
                for (child, label) in ci.labels.iter_mut() {
                    if !inter.contains(child) {
                        *label = EdgeLabel::Unconfirmed;
                    }
                }
                for (pair, label) in cj.bidirected {
                    ci.bidirected.entry(pair).or_insert(label);
                }
                continue 'cascade;
            }
        }
        break;
    }

    // assemble the pattern
    let mut pattern = MeasurementPattern::new();
    let lname = |c: &Cluster| format!("L{}", c.latent_idx);
    for c in &clusters {
        let l = lname(c);
        for &child in &c.children {
            pattern.add_directed(&l, &var_name(src, child), c.labels[&child]);
        }
        for (&(a, b), &label) in &c.bidirected {
            pattern.add_bidirected(&var_name(src, a), &var_name(src, b), label);
        }
    }
    pattern.latents_biconnected = true;

    // step 4: per surviving pair, candidate impure pairs (c, d) with c drawn
    // from the first cluster and d from the second; pairs inside the
    // intersection always carry an unconfirmed edge, and a Lemma-3
    // conclusion upgrades the edge and detaches the crossed parents.
    for i in 0..clusters.len() {
        for j in (i + 1)..clusters.len() {
            let (si, sj) = (&clusters[i].children.clone(), &clusters[j].children.clone());
            let inter: BTreeSet<usize> = si.intersection(sj).copied().collect();
            for &c in si.iter() {
                for &d in sj.iter() {
                    if c == d {
                        continue;
                    }
                    let (cn, dn) = (var_name(src, c), var_name(src, d));
                    if inter.contains(&c)
                        && inter.contains(&d)
                        && pattern.bidirected_label(&cn, &dn).is_none()
                    {
                        pattern.add_bidirected(&cn, &dn, EdgeLabel::Unconfirmed);
                    }
                    // Lemma-3 role search: {a,b} from S_i, {e,f} from S_j
                    let ab_pool: Vec<usize> =
                        si.iter().copied().filter(|&x| x != c && x != d).collect();
                    let ef_pool: Vec<usize> =
                        sj.iter().copied().filter(|&x| x != c && x != d).collect();
                    let mut fired = false;
                    'roles: for ab in combinations(ab_pool.len(), 2) {
                        let (a, b) = (ab_pool[ab[0]], ab_pool[ab[1]]);
                        for ef in combinations(ef_pool.len(), 2) {
                            let (e, f) = (ef_pool[ef[0]], ef_pool[ef[1]]);
                            if a == e || a == f || b == e || b == f {
                                continue;
                            }
                            ctx.tetrad_queries += 7;
                            if lemma3_check(src, a, b, c, d, e, f)?.is_some() {
                                fired = true;
                                break 'roles;
                            }
                        }
                    }
                    if fired {
                        let li = format!("L{}", clusters[i].latent_idx);
                        let lj = format!("L{}", clusters[j].latent_idx);
                        pattern.remove_directed(&lj, &cn);
                        pattern.remove_directed(&li, &dn);
                        clusters[j].children.remove(&c);
                        clusters[j].labels.remove(&c);
                        clusters[i].children.remove(&d);
                        clusters[i].labels.remove(&d);
                        pattern.add_bidirected(&cn, &dn, EdgeLabel::Confirmed);
                        report.lemma3_confirmations.push((cn.clone(), dn.clone()));
                    }
                }
            }
        }
    }

    // step 5: multi-parent children keep a directed edge's label only when a
    // Lemma-4 role assignment supports the parent pair; unsupported edges
    // become unconfirmed.
    let observed_names: Vec<String> = pattern.observed().to_vec();
    for y in &observed_names {
        let parents = pattern.parents_of(y);
        if parents.len() < 2 {
            continue;
        }
        let d = name_idx(y)?;
        let mut supported: BTreeSet<String> = BTreeSet::new();
        for pi in 0..parents.len() {
            for pj in 0..parents.len() {
                if pi == pj {
                    continue;
                }
                let ci = clusters.iter().find(|c| lname(c) == parents[pi]).unwrap();
                let cj = clusters.iter().find(|c| lname(c) == parents[pj]).unwrap();
                let abc_pool: Vec<usize> =
                    ci.children.iter().copied().filter(|&x| x != d).collect();
                let efg_pool: Vec<usize> =
                    cj.children.iter().copied().filter(|&x| x != d).collect();
                let mut fired = false;
                'l4: for abc in combinations(abc_pool.len(), 3) {
                    let (a, b, c) = (abc_pool[abc[0]], abc_pool[abc[1]], abc_pool[abc[2]]);
                    for efg in combinations(efg_pool.len(), 3) {
                        let (e, f, g) = (efg_pool[efg[0]], efg_pool[efg[1]], efg_pool[efg[2]]);
                        let roles = [a, b, c, d, e, f, g];
                        let mut distinct = roles.to_vec();
                        distinct.sort_unstable();
                        distinct.dedup();
                        if distinct.len() != 7 {
                            continue;
                        }
                        ctx.tetrad_queries += 19;
                        if lemma4_check(src, a, b, c, d, e, f, g)?.is_some() {
                            fired = true;
                            break 'l4;
                        }
                    }
                }
                if fired {
                    supported.insert(parents[pi].clone());
                    supported.insert(parents[pj].clone());
                    report
                        .lemma4_supported
                        .push((parents[pi].clone(), y.clone()));
                }
            }
        }
        for l in &parents {
            if !supported.contains(l) {
                pattern.set_directed_label(l, y, EdgeLabel::Unconfirmed);
            }
        }
    }

    // isolation upgrade: an unconfirmed bi-directed pair (u, v) under a
    // single shared latent whose failure can be pinned to that pair alone
    // (three co-indicators support u and v separately but not jointly) is
    // confirmed.
    let bid_edges: Vec<(String, String, EdgeLabel)> = pattern
        .bidirected_edges()
        .map(|(a, b, l)| (a.to_string(), b.to_string(), l))
        .collect();
    for (u, v, label) in &bid_edges {
        if *label == EdgeLabel::Confirmed {
            continue;
        }
        let pu: BTreeSet<String> = pattern.parents_of(u).into_iter().collect();
        let pv: BTreeSet<String> = pattern.parents_of(v).into_iter().collect();
        let common: Vec<&String> = pu.intersection(&pv).collect();
        if common.len() != 1 {
            continue;
        }
        let cluster = clusters.iter().find(|c| lname(c) == *common[0]).unwrap();
        let (ui, vi) = (name_idx(u)?, name_idx(v)?);
        let pool: Vec<usize> = cluster
            .children
            .iter()
            .copied()
            .filter(|&x| x != ui && x != vi)
            .collect();
        let mut isolated = false;
        'iso: for trip in combinations(pool.len(), 3) {
            let (x, y, z) = (pool[trip[0]], pool[trip[1]], pool[trip[2]]);
            ctx.tetrad_queries += 3;
            if ctx.holds(x, y, z, ui)? && ctx.holds(x, y, z, vi)? && ctx.fails(x, y, ui, vi)? {
                isolated = true;
                break 'iso;
            }
        }
        if isolated {
            pattern.add_bidirected(u, v, EdgeLabel::Confirmed);
        }
    }

    // prune unconfirmed bi-directed edges whose endpoints no longer share a
    // latent parent (their within-cluster meaning is gone)
    let bid_edges: Vec<(String, String, EdgeLabel)> = pattern
        .bidirected_edges()
        .map(|(a, b, l)| (a.to_string(), b.to_string(), l))
        .collect();
    for (u, v, label) in bid_edges {
        if label == EdgeLabel::Confirmed {
            continue;
        }
        let pu: BTreeSet<String> = pattern.parents_of(&u).into_iter().collect();
        let pv: BTreeSet<String> = pattern.parents_of(&v).into_iter().collect();
        if pu.intersection(&pv).next().is_none() {
            pattern.remove_bidirected(&u, &v);
        }
    }

    let orphans = pattern.prune_orphan_observed();
    if !orphans.is_empty() {
        report.warnings.push(format!(
            "observed dropped after edge removals: {}",
            orphans.join(", ")
        ));
    }

    if cfg.use_bic_augmentation && !src.is_population() && !pattern.is_empty() {
        let (augmented, rep) = fit::greedy_bidirected(&pattern, &src.cov, cfg.threads)?;
        for pair in &rep.added {
            report.bic_added_edges.push(pair.clone());
        }
        report.bic_skipped.extend(rep.skipped);
        pattern = augmented;
    }

    report.tetrad_queries += ctx.tetrad_queries;
    report.product_queries += ctx.product_queries;
    pattern.validate()?;
    Ok(pattern)
}

/// Input accepted by the end-to-end pipeline.
pub enum DiscoverInput {
    Data(DataMatrix),
    Covariance(CovMatrix),
    Sem(LinearSem),
}

/// End-to-end discovery: build a covariance source, screen variables whose
/// correlations are statistically indistinguishable from zero, then run the
/// three stages.
pub fn discover(
    input: DiscoverInput,
    cfg: &DiscoveryConfig,
) -> Result<(MeasurementPattern, RunReport)> {
    cfg.validate()?;
    let src = match input {
        DiscoverInput::Data(d) => {
            let cov = sample_covariance(&d)?;
            CovSource::sample_with(cov, cfg.alpha, cfg.bonferroni)?
        }
        DiscoverInput::Covariance(cov) => match cov.n {
            Some(_) => CovSource::sample_with(cov, cfg.alpha, cfg.bonferroni)?,
            None => CovSource::population(cov, cfg.population_tol)?,
        },
        DiscoverInput::Sem(sem) => {
            let cov = implied_covariance(&sem)?;
            CovSource::population(cov, cfg.population_tol)?
        }
    };
    discover_on_source(&src, cfg, None)
}

/// Pipeline over a prepared covariance source; `initial_h` overrides the
/// first stage with a caller-provided auxiliary graph, useful for
/// replaying recorded intermediate states.
pub fn discover_on_source(
    src: &CovSource,
    cfg: &DiscoveryConfig,
    initial_h: Option<UndirectedGraph>,
) -> Result<(MeasurementPattern, RunReport)> {
    cfg.validate()?;
    let started = Instant::now();
    let mut report = RunReport {
        mode: match src.mode {
            SourceMode::Population { tol } => format!("population (tol {tol:.1e})"),
            SourceMode::Sample { alpha, .. } => {
                format!("sample (n {}, alpha {alpha})", src.cov.n.unwrap_or(0))
            }
        },
        rng_algorithm: crate::sem::RNG_ALGORITHM,
        ..Default::default()
    };
    let keep = screen_variables(src, cfg, &mut report)?;
    if keep.len() > 30 && !src.is_population() {
        report.warnings.push(format!(
            "{} variables: the clique search is exponential in the number of variables",
            keep.len()
        ));
    }
    let h = match initial_h {
        Some(h) => h,
        None => initial_pass_impl(src, &keep, &mut report)?,
    };
    let s = single_latents_impl(src, &h, cfg, &mut report)?;
    let pattern = find_measurement_pattern_impl(src, &s, cfg, &mut report)?;
    report.elapsed_ms = started.elapsed().as_millis();
    Ok((pattern, report))
}

/// Variables whose correlations with every other variable are statistically
/// indistinguishable from zero are dropped before the search. Population
/// mode uses the tolerance; sample mode a Fisher-z test at screening_alpha.
fn screen_variables(
    src: &CovSource,
    cfg: &DiscoveryConfig,
    report: &mut RunReport,
) -> Result<Vec<usize>> {
    let p = src.dim();
    let cov = &src.cov;
    let mut keep = Vec::new();
    for i in 0..p {
        let vi = cov.get(i, i);
        let mut related = false;
        if vi > 0.0 {
            for j in 0..p {
                if i == j {
                    continue;
                }
                let vj = cov.get(j, j);
                if vj <= 0.0 {
                    continue;
                }
                let r = cov.get(i, j) / (vi * vj).sqrt();
                match src.mode {
                    SourceMode::Population { tol } => {
                        if r.abs() > tol.sqrt() {
                            related = true;
                            break;
                        }
                    }
                    SourceMode::Sample { .. } => {
                        let n = cov.n.unwrap();
                        if n > 3 {
                            let r = r.clamp(-0.999_999, 0.999_999);
                            let z = r.atanh() * ((n - 3) as f64).sqrt();
                            let normal = Normal::new(0.0, 1.0)
                                .map_err(|e| Error::internal(e.to_string()))?;
                            let pval = 2.0 * (1.0 - normal.cdf(z.abs()));
                            if pval < cfg.screening_alpha {
                                related = true;
                                break;
                            }
                        }
                    }
                }
            }
        }
        if related {
            keep.push(i);
        } else {
            report.dropped_variables.push(cov.names[i].clone());
        }
    }
    Ok(keep)
}

/// Agreement and soundness of a discovered pattern against the generating
/// DAG.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryMetrics {
    /// fraction of truth's observed variables present in the pattern
    pub observed_coverage: f64,
    /// fraction of observed pairs whose same-latent status matches
    pub cluster_agreement: f64,
    /// fraction of confirmed directed edges whose mapped latent is a true
    /// ancestor of the child
    pub confirmed_edge_soundness: f64,
    pub confirmed_directed: usize,
    pub unconfirmed_directed: usize,
    pub confirmed_bidirected: usize,
    pub unconfirmed_bidirected: usize,
}

pub fn recovery_metrics(found: &MeasurementPattern, truth: &TrueDag) -> Result<RecoveryMetrics> {
    let truth_observed: BTreeSet<String> = truth
        .observed()
        .iter()
        .map(|&o| truth.name(o).to_string())
        .collect();
    for o in found.observed() {
        if !truth_observed.contains(o) {
            return Err(Error::input(format!(
                "pattern variable `{o}` not in the true graph"
            )));
        }
    }
    let mut counts = RecoveryMetrics {
        observed_coverage: 0.0,
        cluster_agreement: 0.0,
        confirmed_edge_soundness: 0.0,
        confirmed_directed: 0,
        unconfirmed_directed: 0,
        confirmed_bidirected: 0,
        unconfirmed_bidirected: 0,
    };
    for (_, _, l) in found.directed_edges() {
        match l {
            EdgeLabel::Confirmed => counts.confirmed_directed += 1,
            EdgeLabel::Unconfirmed => counts.unconfirmed_directed += 1,
        }
    }
    for (_, _, l) in found.bidirected_edges() {
        match l {
            EdgeLabel::Confirmed => counts.confirmed_bidirected += 1,
            EdgeLabel::Unconfirmed => counts.unconfirmed_bidirected += 1,
        }
    }
    if found.is_empty() {
        return Ok(counts);
    }
    counts.observed_coverage = found.observed().len() as f64 / truth_observed.len().max(1) as f64;

    // same-latent status per pair
    let obs = found.observed();
    let mut matches = 0usize;
    let mut pairs = 0usize;
    for i in 0..obs.len() {
        for j in (i + 1)..obs.len() {
            let pi: BTreeSet<String> = found.parents_of(&obs[i]).into_iter().collect();
            let pj: BTreeSet<String> = found.parents_of(&obs[j]).into_iter().collect();
            let same_found = pi.intersection(&pj).next().is_some();
            let ti = truth.require_node(&obs[i])?;
            let tj = truth.require_node(&obs[j])?;
            let same_truth = truth
                .parents_of(ti)
                .iter()
                .any(|p| truth.parents_of(tj).contains(p));
            pairs += 1;
            if same_found == same_truth {
                matches += 1;
            }
        }
    }
    counts.cluster_agreement = if pairs == 0 {
        1.0
    } else {
        matches as f64 / pairs as f64
    };

    // map each pattern latent to the truth latent with maximal child overlap
    let truth_latents = truth.latents();
    let mut sound = 0usize;
    let mut total = 0usize;
    for l in found.latents() {
        let children = found.children_of(l);
        let mapped = truth_latents
            .iter()
            .copied()
            .max_by_key(|&x| {
                let tc: BTreeSet<String> = truth
                    .children_of(x)
                    .iter()
                    .filter(|&&c| truth.kind(c) == crate::graph::NodeKind::Observed)
                    .map(|&c| truth.name(c).to_string())
                    .collect();
                (
                    children.iter().filter(|c| tc.contains(*c)).count(),
                    usize::MAX - x.idx(),
                )
            })
            .ok_or_else(|| Error::input("true graph has no latents"))?;
        let reach: BTreeSet<String> = truth
            .descendants_of(mapped)
            .into_iter()
            .map(|d| truth.name(d).to_string())
            .collect();
        for child in &children {
            if found.directed_label(l, child) == Some(EdgeLabel::Confirmed) {
                total += 1;
                if reach.contains(child) {
                    sound += 1;
                }
            }
        }
    }
    counts.confirmed_edge_soundness = if total == 0 {
        1.0
    } else {
        sound as f64 / total as f64
    };
    Ok(counts)
}
