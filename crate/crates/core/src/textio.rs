//! Line-oriented text formats: graphs (`node`/edge lines), SEM files (graph
//! plus `coef` and `var` lines), covariance matrices (`n=` header, names,
//! rows) and CSV data matrices.

use crate::error::{Error, Result};
use crate::graph::{EdgeLabel, MeasurementPattern, NodeKind, TrueDag, TrueDagBuilder};
use crate::sem::{CovMatrix, DataMatrix, LinearSem};
use nalgebra::DMatrix;
use std::collections::BTreeMap;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line: line + 1,
        msg: msg.into(),
    }
}

// ---------------------------------------------------------------------------
// TrueDag / SEM text format
// ---------------------------------------------------------------------------

pub fn dag_to_text(g: &TrueDag) -> String {
    let mut out = String::new();
    for n in g.nodes() {
        let kind = match g.kind(n) {
            NodeKind::Latent => "latent",
            NodeKind::Observed => "observed",
        };
        out.push_str(&format!("node {} {}\n", g.name(n), kind));
    }
    for (p, c) in g.edges() {
        out.push_str(&format!("{} -> {}\n", g.name(p), g.name(c)));
    }
    out
}

pub fn sem_to_text(m: &LinearSem) -> String {
    let mut out = dag_to_text(&m.graph);
    for ((p, c), v) in &m.coeffs {
        out.push_str(&format!(
            "coef {} {} {v}\n",
            m.graph.name(*p),
            m.graph.name(*c)
        ));
    }
    for (n, v) in &m.error_vars {
        out.push_str(&format!("var {} {v}\n", m.graph.name(*n)));
    }
    out
}

struct ParsedGraph {
    dag: TrueDag,
    coefs: Vec<(String, String, f64)>,
    vars: Vec<(String, f64)>,
}

fn parse_graph_lines(text: &str) -> Result<ParsedGraph> {
    let mut builder = TrueDagBuilder::default();
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut coefs = Vec::new();
    let mut vars = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["node", name, kind] => {
                let k = match *kind {
                    "latent" => NodeKind::Latent,
                    "observed" => NodeKind::Observed,
                    other => return Err(perr(ln, format!("unknown node kind `{other}`"))),
                };
                builder.node(name, k).map_err(|e| perr(ln, e.to_string()))?;
            }
            [a, "->", b] => edges.push((a.to_string(), b.to_string())),
            ["coef", a, b, v] => {
                let val: f64 = v
                    .parse()
                    .map_err(|_| perr(ln, format!("bad number `{v}`")))?;
                coefs.push((a.to_string(), b.to_string(), val));
            }
            ["var", n, v] => {
                let val: f64 = v
                    .parse()
                    .map_err(|_| perr(ln, format!("bad number `{v}`")))?;
                vars.push((n.to_string(), val));
            }
            _ => return Err(perr(ln, format!("unrecognized line `{line}`"))),
        }
    }
    // build with named edges
    let mut dag_builder = builder;
    let mut edge_ids = Vec::new();
    {
        // resolve names after all nodes are declared
        let dag = std::mem::take(&mut dag_builder)
            .build()
            .map_err(|e| Error::input(e.to_string()))?;
        for (a, b) in &edges {
            let pa = dag.require_node(a)?;
            let cb = dag.require_node(b)?;
            edge_ids.push((pa, cb));
        }
        let mut rebuilt = TrueDagBuilder::default();
        for n in dag.nodes() {
            rebuilt.node(dag.name(n), dag.kind(n)).expect("unique");
        }
        for (p, c) in edge_ids {
            rebuilt.edge(p, c);
        }
        let dag = rebuilt.build()?;
        Ok(ParsedGraph { dag, coefs, vars })
    }
}

pub fn dag_from_text(text: &str) -> Result<TrueDag> {
    Ok(parse_graph_lines(text)?.dag)
}

pub fn sem_from_text(text: &str) -> Result<LinearSem> {
    let parsed = parse_graph_lines(text)?;
    let dag = parsed.dag;
    let mut coeffs = BTreeMap::new();
    for (a, b, v) in parsed.coefs {
        let p = dag.require_node(&a)?;
        let c = dag.require_node(&b)?;
        coeffs.insert((p, c), v);
    }
    let mut error_vars = BTreeMap::new();
    for (n, v) in parsed.vars {
        let id = dag.require_node(&n)?;
        error_vars.insert(id, v);
    }
    LinearSem::new(dag, coeffs, error_vars)
}

// ---------------------------------------------------------------------------
// MeasurementPattern text format
// ---------------------------------------------------------------------------

pub fn pattern_to_text(p: &MeasurementPattern) -> String {
    let mut out = String::new();
    for l in p.latents() {
        out.push_str(&format!("node {l} latent\n"));
    }
    for o in p.observed() {
        out.push_str(&format!("node {o} observed\n"));
    }
    for (l, o, label) in p.directed_edges() {
        out.push_str(&format!("{l} -> {o} {label}\n"));
    }
    for (a, b, label) in p.bidirected_edges() {
        out.push_str(&format!("{a} <-> {b} {label}\n"));
    }
    out
}

pub fn pattern_from_text(text: &str) -> Result<MeasurementPattern> {
    let mut p = MeasurementPattern::new();
    let mut kinds: BTreeMap<String, NodeKind> = BTreeMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let parse_label = |tok: Option<&&str>, ln: usize| -> Result<EdgeLabel> {
            match tok {
                None => Ok(EdgeLabel::Confirmed),
                Some(&"confirmed") => Ok(EdgeLabel::Confirmed),
                Some(&"unconfirmed") => Ok(EdgeLabel::Unconfirmed),
                Some(other) => Err(perr(ln, format!("unknown label `{other}`"))),
            }
        };
        match toks.as_slice() {
            ["node", name, kind] => {
                let k = match *kind {
                    "latent" => {
                        p.add_latent(name);
                        NodeKind::Latent
                    }
                    "observed" => {
                        p.add_observed(name);
                        NodeKind::Observed
                    }
                    other => return Err(perr(ln, format!("unknown node kind `{other}`"))),
                };
                kinds.insert(name.to_string(), k);
            }
            [a, "->", b, rest @ ..] if rest.len() <= 1 => {
                if kinds.get(*a) != Some(&NodeKind::Latent) {
                    return Err(perr(
                        ln,
                        format!("directed edge source `{a}` must be a declared latent"),
                    ));
                }
                if kinds.get(*b) != Some(&NodeKind::Observed) {
                    return Err(perr(
                        ln,
                        format!("directed edge target `{b}` must be a declared observed"),
                    ));
                }
                p.add_directed(a, b, parse_label(rest.first(), ln)?);
            }
            [a, "<->", b, rest @ ..] if rest.len() <= 1 => {
                if kinds.get(*a) != Some(&NodeKind::Observed)
                    || kinds.get(*b) != Some(&NodeKind::Observed)
                {
                    return Err(perr(ln, "bi-directed edges connect observed nodes"));
                }
                p.add_bidirected(a, b, parse_label(rest.first(), ln)?);
            }
            _ => return Err(perr(ln, format!("unrecognized line `{line}`"))),
        }
    }
    p.validate()?;
    Ok(p)
}

pub fn pattern_to_json(p: &MeasurementPattern) -> Result<String> {
    serde_json::to_string_pretty(p).map_err(|e| Error::internal(e.to_string()))
}

pub fn pattern_from_json(text: &str) -> Result<MeasurementPattern> {
    let p: MeasurementPattern =
        serde_json::from_str(text).map_err(|e| Error::input(format!("bad pattern JSON: {e}")))?;
    p.validate()?;
    Ok(p)
}

// ---------------------------------------------------------------------------
// CovMatrix text format
// ---------------------------------------------------------------------------

pub fn cov_to_text(c: &CovMatrix) -> String {
    let mut out = String::new();
    match c.n {
        Some(n) => out.push_str(&format!("n={n}\n")),
        None => out.push_str("n=none\n"),
    }
    out.push_str(&c.names.join(","));
    out.push('\n');
    for i in 0..c.dim() {
        let row: Vec<String> = (0..c.dim()).map(|j| format!("{}", c.get(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn cov_from_text(text: &str) -> Result<CovMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (ln0, header) = lines
        .next()
        .ok_or_else(|| Error::input("empty covariance file"))?;
    let header = header.trim();
    let n = if let Some(v) = header.strip_prefix("n=") {
        if v == "none" {
            None
        } else {
            Some(
                v.parse::<usize>()
                    .map_err(|_| perr(ln0, format!("bad sample size `{v}`")))?,
            )
        }
    } else {
        return Err(perr(ln0, "expected `n=<int|none>` header"));
    };
    let (_, name_line) = lines
        .next()
        .ok_or_else(|| Error::input("missing names line"))?;
    let names: Vec<String> = name_line
        .trim()
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let p = names.len();
    let mut values = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let (ln, row) = lines
            .next()
            .ok_or_else(|| Error::input(format!("expected {p} covariance rows, got {i}")))?;
        let entries: Vec<&str> = row.trim().split(',').collect();
        if entries.len() != p {
            return Err(perr(
                ln,
                format!("expected {p} entries, got {}", entries.len()),
            ));
        }
        for (j, e) in entries.iter().enumerate() {
            values[(i, j)] = e
                .trim()
                .parse()
                .map_err(|_| perr(ln, format!("bad number `{e}`")))?;
        }
    }
    CovMatrix::new(names, values, n)
}

// ---------------------------------------------------------------------------
// DataMatrix CSV
// ---------------------------------------------------------------------------

pub fn data_to_csv(d: &DataMatrix) -> String {
    let mut out = String::new();
    out.push_str(&d.names.join(","));
    out.push('\n');
    for i in 0..d.n() {
        let row: Vec<String> = (0..d.p())
            .map(|j| format!("{}", d.values[(i, j)]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn data_from_csv(text: &str) -> Result<DataMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::input("empty CSV"))?;
    let names: Vec<String> = header
        .trim()
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let p = names.len();
    let mut rows: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for (ln, row) in lines {
        let entries: Vec<&str> = row.trim().split(',').collect();
        if entries.len() != p {
            return Err(perr(
                ln,
                format!("expected {p} columns, got {}", entries.len()),
            ));
        }
        for e in entries {
            rows.push(
                e.trim()
                    .parse()
                    .map_err(|_| perr(ln, format!("bad number `{e}`")))?,
            );
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::input("CSV has no data rows"));
    }
    let values = DMatrix::from_row_slice(n, p, &rows);
    DataMatrix::new(names, values)
}
