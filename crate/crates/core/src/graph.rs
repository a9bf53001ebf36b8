//! Graph representations: true causal DAGs over latent and observed nodes,
//! the d-separation oracle, undirected auxiliary graphs with maximal-clique
//! enumeration, and measurement patterns (directed mixed graphs with labeled
//! edges).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

/// Dense node index within one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Latent,
    Observed,
}

/// Label on a measurement-pattern edge: confirmed edges correspond to actual
/// paths in the true graph, unconfirmed edges cannot be decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeLabel {
    Confirmed,
    Unconfirmed,
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeLabel::Confirmed => write!(f, "confirmed"),
            EdgeLabel::Unconfirmed => write!(f, "unconfirmed"),
        }
    }
}

// ---------------------------------------------------------------------------
// TrueDag
// ---------------------------------------------------------------------------

/// Directed acyclic causal graph over latent and observed nodes.
///
/// Invariants, enforced on build:
/// - no directed cycle,
/// - no observed node is a parent of a latent node,
/// - no observed node is a parent of another observed node.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueDag {
    names: Vec<String>,
    kinds: Vec<NodeKind>,
    index: HashMap<String, NodeId>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
}

impl TrueDag {
    pub fn builder() -> TrueDagBuilder {
        TrueDagBuilder::default()
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id.idx()]
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.kinds[id.idx()]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn require_node(&self, name: &str) -> Result<NodeId> {
        self.node_by_name(name)
            .ok_or_else(|| Error::input(format!("unknown node `{name}`")))
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.names.len() as u32).map(NodeId)
    }

    pub fn latents(&self) -> Vec<NodeId> {
        self.nodes()
            .filter(|&n| self.kind(n) == NodeKind::Latent)
            .collect()
    }

    pub fn observed(&self) -> Vec<NodeId> {
        self.nodes()
            .filter(|&n| self.kind(n) == NodeKind::Observed)
            .collect()
    }

    pub fn parents_of(&self, id: NodeId) -> &[NodeId] {
        &self.parents[id.idx()]
    }

    pub fn children_of(&self, id: NodeId) -> &[NodeId] {
        &self.children[id.idx()]
    }

    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for p in self.nodes() {
            for &c in self.children_of(p) {
                out.push((p, c));
            }
        }
        out
    }

    pub fn has_edge(&self, parent: NodeId, child: NodeId) -> bool {
        self.children[parent.idx()].contains(&child)
    }

    /// Ancestors of `id` (not including `id`), ascending.
    pub fn ancestors_of(&self, id: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            for &p in self.parents_of(v) {
                if !seen[p.idx()] {
                    seen[p.idx()] = true;
                    stack.push(p);
                }
            }
        }
        (0..self.node_count() as u32)
            .map(NodeId)
            .filter(|n| seen[n.idx()])
            .collect()
    }

    /// Descendants of `id` (not including `id`), ascending.
    pub fn descendants_of(&self, id: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            for &c in self.children_of(v) {
                if !seen[c.idx()] {
                    seen[c.idx()] = true;
                    stack.push(c);
                }
            }
        }
        (0..self.node_count() as u32)
            .map(NodeId)
            .filter(|n| seen[n.idx()])
            .collect()
    }

    /// Topological order (parents before children), stable for equal ranks.
    pub fn topo_order(&self) -> Vec<NodeId> {
        let n = self.node_count();
        let mut indeg: Vec<usize> = (0..n).map(|i| self.parents[i].len()).collect();
        let mut queue: VecDeque<NodeId> = (0..n as u32)
            .map(NodeId)
            .filter(|v| indeg[v.idx()] == 0)
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &c in self.children_of(v) {
                indeg[c.idx()] -= 1;
                if indeg[c.idx()] == 0 {
                    queue.push_back(c);
                }
            }
        }
        debug_assert_eq!(order.len(), n);
        order
    }

    fn validate(&self) -> Result<()> {
        // acyclicity via Kahn count
        let n = self.node_count();
        let mut indeg: Vec<usize> = (0..n).map(|i| self.parents[i].len()).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut visited = 0usize;
        while let Some(v) = queue.pop_front() {
            visited += 1;
            for &c in &self.children[v] {
                indeg[c.idx()] -= 1;
                if indeg[c.idx()] == 0 {
                    queue.push_back(c.idx());
                }
            }
        }
        if visited != n {
            return Err(Error::input("graph contains a directed cycle"));
        }
        for p in self.nodes() {
            if self.kind(p) == NodeKind::Observed {
                if let Some(&c) = self.children_of(p).first() {
                    let kind = match self.kind(c) {
                        NodeKind::Latent => "latent",
                        NodeKind::Observed => "observed",
                    };
                    return Err(Error::input(format!(
                        "observed node `{}` is a parent of {kind} `{}`",
                        self.name(p),
                        self.name(c)
                    )));
                }
            }
        }
        Ok(())
    }

    /// d-separation of `a` and `b` given `given`, by the standard reachability
    /// algorithm. Correctness is pinned against a brute-force path enumerator
    /// in the test suite.
    pub fn d_separated(&self, a: NodeId, b: NodeId, given: &BTreeSet<NodeId>) -> Result<bool> {
        if a == b {
            return Err(Error::input("d_separated: endpoints must differ"));
        }
        if given.contains(&a) || given.contains(&b) {
            return Err(Error::input(
                "d_separated: endpoints must not be conditioned on",
            ));
        }
        let n = self.node_count();
        for &v in given.iter().chain([a, b].iter()) {
            if v.idx() >= n {
                return Err(Error::input(format!("unknown node id {v}")));
            }
        }
        Ok(!self.reachable(a, given).contains(&b))
    }

    /// Nodes d-connected to `src` given `given` (excluding `src` itself).
    fn reachable(&self, src: NodeId, given: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        // ancestors of the conditioning set, inclusive
        let mut anc = vec![false; self.node_count()];
        let mut stack: Vec<NodeId> = given.iter().copied().collect();
        for &z in given {
            anc[z.idx()] = true;
        }
        while let Some(v) = stack.pop() {
            for &p in self.parents_of(v) {
                if !anc[p.idx()] {
                    anc[p.idx()] = true;
                    stack.push(p);
                }
            }
        }

        // (node, approached-from-child?) traversal
        const UP: usize = 0; // leaving toward parents allowed state: arrived from a child
        const DOWN: usize = 1; // arrived from a parent
        let mut visited = vec![[false; 2]; self.node_count()];
        let mut out = BTreeSet::new();
        let mut queue: VecDeque<(NodeId, usize)> = VecDeque::new();
        queue.push_back((src, UP));
        while let Some((v, dir)) = queue.pop_front() {
            if visited[v.idx()][dir] {
                continue;
            }
            visited[v.idx()][dir] = true;
            let in_given = given.contains(&v);
            if !in_given && v != src {
                out.insert(v);
            }
            if dir == UP && !in_given {
                for &p in self.parents_of(v) {
                    queue.push_back((p, UP));
                }
                for &c in self.children_of(v) {
                    queue.push_back((c, DOWN));
                }
            } else if dir == DOWN {
                if !in_given {
                    for &c in self.children_of(v) {
                        queue.push_back((c, DOWN));
                    }
                }
                if anc[v.idx()] {
                    for &p in self.parents_of(v) {
                        queue.push_back((p, UP));
                    }
                }
            }
        }
        out
    }

    /// True iff `{x}` d-separates every pair drawn from `ys`.
    pub fn node_separates_all_pairs(&self, x: NodeId, ys: &BTreeSet<NodeId>) -> Result<bool> {
        if self.kind(x) != NodeKind::Latent {
            return Err(Error::input(format!("`{}` is not latent", self.name(x))));
        }
        if ys.len() != 4 {
            return Err(Error::input(
                "node_separates_all_pairs expects exactly 4 observed nodes",
            ));
        }
        for &y in ys {
            if self.kind(y) != NodeKind::Observed {
                return Err(Error::input(format!("`{}` is not observed", self.name(y))));
            }
        }
        self.separates_all_pairs_unchecked(x, ys)
    }

    fn separates_all_pairs_unchecked(&self, x: NodeId, ys: &BTreeSet<NodeId>) -> Result<bool> {
        let given: BTreeSet<NodeId> = [x].into_iter().collect();
        let ys: Vec<NodeId> = ys.iter().copied().collect();
        for i in 0..ys.len() {
            let reach = self.reachable(ys[i], &given);
            for &other in &ys[i + 1..] {
                if reach.contains(&other) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Exhaustive enumeration of one-factor submodels: every (latent X,
    /// observed 4-subset) such that X d-separates all pairs of the subset.
    /// Lexicographic in (latent index, subset indices).
    pub fn one_factor_submodels(&self) -> Vec<(NodeId, BTreeSet<NodeId>)> {
        let observed = self.observed();
        let mut out = Vec::new();
        for x in self.latents() {
            let given: BTreeSet<NodeId> = [x].into_iter().collect();
            // pairwise separation matrix under {x}
            let m = observed.len();
            let mut sep = vec![vec![false; m]; m];
            for i in 0..m {
                let reach = self.reachable(observed[i], &given);
                for j in 0..m {
                    if i != j {
                        sep[i][j] = !reach.contains(&observed[j]);
                    }
                }
            }
            for c in combinations(m, 4) {
                let ok = (0..4).all(|i| (i + 1..4).all(|j| sep[c[i]][c[j]] && sep[c[j]][c[i]]));
                if ok {
                    out.push((x, c.iter().map(|&i| observed[i]).collect()));
                }
            }
        }
        out
    }
}

/// All k-subsets of 0..n in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

#[derive(Default)]
pub struct TrueDagBuilder {
    names: Vec<String>,
    kinds: Vec<NodeKind>,
    index: HashMap<String, NodeId>,
    edges: Vec<(NodeId, NodeId)>,
}

impl TrueDagBuilder {
    pub fn node(&mut self, name: &str, kind: NodeKind) -> Result<NodeId> {
        if self.index.contains_key(name) {
            return Err(Error::input(format!("duplicate node `{name}`")));
        }
        let id = NodeId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.kinds.push(kind);
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn latent(&mut self, name: &str) -> NodeId {
        self.node(name, NodeKind::Latent)
            .expect("duplicate latent node")
    }

    pub fn observed(&mut self, name: &str) -> NodeId {
        self.node(name, NodeKind::Observed)
            .expect("duplicate observed node")
    }

    pub fn edge(&mut self, parent: NodeId, child: NodeId) -> &mut Self {
        self.edges.push((parent, child));
        self
    }

    pub fn build(self) -> Result<TrueDag> {
        let n = self.names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (p, c) in &self.edges {
            if p.idx() >= n || c.idx() >= n {
                return Err(Error::input("edge endpoint out of range"));
            }
            if parents[c.idx()].contains(p) {
                return Err(Error::input("duplicate edge"));
            }
            parents[c.idx()].push(*p);
            children[p.idx()].push(*c);
        }
        for v in parents.iter_mut().chain(children.iter_mut()) {
            v.sort_unstable();
        }
        let dag = TrueDag {
            names: self.names,
            kinds: self.kinds,
            index: self.index,
            parents,
            children,
        };
        dag.validate()?;
        Ok(dag)
    }
}

// ---------------------------------------------------------------------------
// UndirectedGraph
// ---------------------------------------------------------------------------

/// Undirected auxiliary graph over observed variables (the graph H returned
/// by the initial pass). Nodes are indices into the caller's variable list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    n: usize,
    adj: Vec<BTreeSet<usize>>,
    /// variables still present (deleted nodes keep their slot)
    present: Vec<bool>,
}

impl UndirectedGraph {
    pub fn complete(n: usize) -> Self {
        let adj = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).collect())
            .collect();
        UndirectedGraph {
            n,
            adj,
            present: vec![true; n],
        }
    }

    pub fn empty(n: usize) -> Self {
        UndirectedGraph {
            n,
            adj: vec![BTreeSet::new(); n],
            present: vec![true; n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_present(&self, v: usize) -> bool {
        self.present[v]
    }

    pub fn present_nodes(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| self.present[v]).collect()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        self.adj[a].insert(b);
        self.adj[b].insert(a);
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        self.adj[a].remove(&b);
        self.adj[b].remove(&a);
    }

    pub fn remove_node(&mut self, v: usize) {
        let neigh: Vec<usize> = self.adj[v].iter().copied().collect();
        for u in neigh {
            self.adj[u].remove(&v);
        }
        self.adj[v].clear();
        self.present[v] = false;
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for &b in &self.adj[a] {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn is_clique(&self, vs: &[usize]) -> bool {
        vs.iter().all(|&v| self.present[v])
            && vs
                .iter()
                .enumerate()
                .all(|(i, &a)| vs[i + 1..].iter().all(|&b| self.adj[a].contains(&b)))
    }

    /// All maximal cliques of size >= `min_size`, Bron-Kerbosch with pivoting.
    /// Each clique is sorted; the list is sorted lexicographically.
    pub fn maximal_cliques(&self, min_size: usize) -> Vec<Vec<usize>> {
        let mut cliques = Vec::new();
        let p: BTreeSet<usize> = self.present_nodes().into_iter().collect();
        let mut r = Vec::new();
        let mut x = BTreeSet::new();
        self.bron_kerbosch(&mut r, p, &mut x, &mut cliques);
        let mut cliques: Vec<Vec<usize>> = cliques
            .into_iter()
            .filter(|c| c.len() >= min_size)
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        cliques.sort();
        cliques
    }

    fn bron_kerbosch(
        &self,
        r: &mut Vec<usize>,
        p: BTreeSet<usize>,
        x: &mut BTreeSet<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if p.is_empty() && x.is_empty() {
            out.push(r.clone());
            return;
        }
        // pivot: vertex of P ∪ X with most neighbors in P
        let pivot = p
            .iter()
            .chain(x.iter())
            .copied()
            .max_by_key(|&u| (self.adj[u].intersection(&p).count(), usize::MAX - u));
        let candidates: Vec<usize> = match pivot {
            Some(u) => p
                .iter()
                .copied()
                .filter(|v| !self.adj[u].contains(v))
                .collect(),
            None => p.iter().copied().collect(),
        };
        let mut p = p;
        for v in candidates {
            let neigh = &self.adj[v];
            let new_p: BTreeSet<usize> = p.intersection(neigh).copied().collect();
            let mut new_x: BTreeSet<usize> = x.intersection(neigh).copied().collect();
            r.push(v);
            self.bron_kerbosch(r, new_p, &mut new_x, out);
            r.pop();
            p.remove(&v);
            x.insert(v);
        }
    }
}

// ---------------------------------------------------------------------------
// MeasurementPattern
// ---------------------------------------------------------------------------

/// A single tentative latent with its indicator set, produced per clique of H.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleLatentGraph {
    /// creation index, 1-based as in the procedure
    pub latent_idx: usize,
    /// observed variable names, sorted
    pub children: BTreeSet<String>,
    /// unordered observed pairs with label
    pub bidirected: BTreeMap<(String, String), EdgeLabel>,
}

impl SingleLatentGraph {
    pub fn new(latent_idx: usize, children: BTreeSet<String>) -> Self {
        SingleLatentGraph {
            latent_idx,
            children,
            bidirected: BTreeMap::new(),
        }
    }

    pub fn latent_name(&self) -> String {
        format!("L{}", self.latent_idx)
    }

    pub fn add_bidirected(&mut self, a: &str, b: &str, label: EdgeLabel) {
        let key = if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        self.bidirected.entry(key).or_insert(label);
    }
}

/// The output graph: latents with directed edges into observed variables and
/// bi-directed edges between observed variables, every edge labeled. All
/// latents are implicitly pairwise connected by bi-directed edges (stored as
/// a flag rather than materialized pairs).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "PatternJson", from = "PatternJson")]
pub struct MeasurementPattern {
    latents: Vec<String>,
    observed: Vec<String>,
    directed: BTreeMap<(String, String), EdgeLabel>,
    bidirected: BTreeMap<(String, String), EdgeLabel>,
    pub latents_biconnected: bool,
}

/// JSON schema for patterns (documented in the README).
#[derive(Serialize, Deserialize)]
struct PatternJson {
    latents: Vec<String>,
    observed: Vec<String>,
    directed: Vec<DirectedJson>,
    bidirected: Vec<BidirectedJson>,
    latents_biconnected: bool,
}

#[derive(Serialize, Deserialize)]
struct DirectedJson {
    from: String,
    to: String,
    label: EdgeLabel,
}

#[derive(Serialize, Deserialize)]
struct BidirectedJson {
    a: String,
    b: String,
    label: EdgeLabel,
}

impl From<MeasurementPattern> for PatternJson {
    fn from(p: MeasurementPattern) -> Self {
        PatternJson {
            latents: p.latents.clone(),
            observed: p.observed.clone(),
            directed: p
                .directed
                .iter()
                .map(|((l, o), &label)| DirectedJson {
                    from: l.clone(),
                    to: o.clone(),
                    label,
                })
                .collect(),
            bidirected: p
                .bidirected
                .iter()
                .map(|((a, b), &label)| BidirectedJson {
                    a: a.clone(),
                    b: b.clone(),
                    label,
                })
                .collect(),
            latents_biconnected: p.latents_biconnected,
        }
    }
}

impl From<PatternJson> for MeasurementPattern {
    fn from(j: PatternJson) -> Self {
        let mut p = MeasurementPattern::new();
        for l in &j.latents {
            p.add_latent(l);
        }
        for o in &j.observed {
            p.add_observed(o);
        }
        for e in &j.directed {
            p.add_directed(&e.from, &e.to, e.label);
        }
        for e in &j.bidirected {
            p.add_bidirected(&e.a, &e.b, e.label);
        }
        p.latents_biconnected = j.latents_biconnected;
        p
    }
}

impl Default for MeasurementPattern {
    fn default() -> Self {
        Self::new()
    }
}

impl MeasurementPattern {
    pub fn new() -> Self {
        MeasurementPattern {
            latents: Vec::new(),
            observed: Vec::new(),
            directed: BTreeMap::new(),
            bidirected: BTreeMap::new(),
            latents_biconnected: true,
        }
    }

    pub fn add_latent(&mut self, name: &str) {
        if !self.latents.iter().any(|l| l == name) {
            self.latents.push(name.to_string());
        }
    }

    pub fn add_observed(&mut self, name: &str) {
        if !self.observed.iter().any(|o| o == name) {
            self.observed.push(name.to_string());
        }
    }

    pub fn add_directed(&mut self, latent: &str, observed: &str, label: EdgeLabel) {
        self.add_latent(latent);
        self.add_observed(observed);
        self.directed
            .insert((latent.to_string(), observed.to_string()), label);
    }

    pub fn set_directed_label(&mut self, latent: &str, observed: &str, label: EdgeLabel) {
        if let Some(l) = self
            .directed
            .get_mut(&(latent.to_string(), observed.to_string()))
        {
            *l = label;
        }
    }

    pub fn remove_directed(&mut self, latent: &str, observed: &str) {
        self.directed
            .remove(&(latent.to_string(), observed.to_string()));
    }

    pub fn add_bidirected(&mut self, a: &str, b: &str, label: EdgeLabel) {
        let key = Self::bikey(a, b);
        self.bidirected.insert(key, label);
    }

    pub fn bidirected_label(&self, a: &str, b: &str) -> Option<EdgeLabel> {
        self.bidirected.get(&Self::bikey(a, b)).copied()
    }

    pub fn remove_bidirected(&mut self, a: &str, b: &str) {
        self.bidirected.remove(&Self::bikey(a, b));
    }

    fn bikey(a: &str, b: &str) -> (String, String) {
        if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        }
    }

    pub fn latents(&self) -> &[String] {
        &self.latents
    }

    pub fn observed(&self) -> &[String] {
        &self.observed
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (&str, &str, EdgeLabel)> {
        self.directed
            .iter()
            .map(|((l, o), &lab)| (l.as_str(), o.as_str(), lab))
    }

    pub fn bidirected_edges(&self) -> impl Iterator<Item = (&str, &str, EdgeLabel)> {
        self.bidirected
            .iter()
            .map(|((a, b), &lab)| (a.as_str(), b.as_str(), lab))
    }

    pub fn directed_label(&self, latent: &str, observed: &str) -> Option<EdgeLabel> {
        self.directed
            .get(&(latent.to_string(), observed.to_string()))
            .copied()
    }

    pub fn children_of(&self, latent: &str) -> BTreeSet<String> {
        self.directed
            .keys()
            .filter(|(l, _)| l == latent)
            .map(|(_, o)| o.clone())
            .collect()
    }

    pub fn parents_of(&self, observed: &str) -> Vec<String> {
        self.directed
            .keys()
            .filter(|(_, o)| o == observed)
            .map(|(l, _)| l.clone())
            .collect()
    }

    /// Drop a latent and its edges.
    pub fn remove_latent(&mut self, latent: &str) {
        self.latents.retain(|l| l != latent);
        self.directed.retain(|(l, _), _| l != latent);
    }

    /// Drop observed nodes that lost all latent parents, along with their
    /// bi-directed edges. Returns the dropped names.
    pub fn prune_orphan_observed(&mut self) -> Vec<String> {
        let orphans: Vec<String> = self
            .observed
            .iter()
            .filter(|o| self.parents_of(o).is_empty())
            .cloned()
            .collect();
        for o in &orphans {
            self.observed.retain(|x| x != o);
            self.bidirected.retain(|(a, b), _| a != o && b != o);
        }
        orphans
    }

    pub fn is_empty(&self) -> bool {
        self.latents.is_empty() && self.observed.is_empty()
    }

    /// Structural invariants: every observed node has at least one latent
    /// parent, directed edges run latent -> observed only, bi-directed edges
    /// connect observed pairs only.
    pub fn validate(&self) -> Result<()> {
        let latset: BTreeSet<&String> = self.latents.iter().collect();
        let obsset: BTreeSet<&String> = self.observed.iter().collect();
        for (l, o) in self.directed.keys() {
            if !latset.contains(l) {
                return Err(Error::internal(format!(
                    "directed edge from non-latent `{l}`"
                )));
            }
            if !obsset.contains(o) {
                return Err(Error::internal(format!(
                    "directed edge into non-observed `{o}`"
                )));
            }
        }
        for (a, b) in self.bidirected.keys() {
            if !obsset.contains(a) || !obsset.contains(b) {
                return Err(Error::internal(format!(
                    "bi-directed edge on non-observed `{a}`/`{b}`"
                )));
            }
        }
        for o in &self.observed {
            if self.parents_of(o).is_empty() {
                return Err(Error::internal(format!(
                    "observed `{o}` has no latent parent"
                )));
            }
        }
        Ok(())
    }

    /// Enumerates maximal pure sub-patterns: retained observed nodes have
    /// exactly one latent parent and no incident bi-directed edge (among the
    /// retained set), and every retained latent keeps at least
    /// `min_indicators` children.
    pub fn pure_submodels(&self, min_indicators: usize) -> Vec<MeasurementPattern> {
        assert!(min_indicators >= 3, "min_indicators must be >= 3");
        // candidates: single-parent observed nodes
        let cands: Vec<String> = self
            .observed
            .iter()
            .filter(|o| self.parents_of(o).len() == 1)
            .cloned()
            .collect();
        let m = cands.len();
        // maximal independent sets of the bid-graph = maximal cliques of complement
        let mut comp = UndirectedGraph::empty(m);
        for i in 0..m {
            for j in i + 1..m {
                if self.bidirected_label(&cands[i], &cands[j]).is_none() {
                    comp.add_edge(i, j);
                }
            }
        }
        let mut results: Vec<MeasurementPattern> = Vec::new();
        for set in comp.maximal_cliques(1) {
            let retained: BTreeSet<String> = set.iter().map(|&i| cands[i].clone()).collect();
            // latents keeping enough children
            let mut sub = MeasurementPattern::new();
            for l in &self.latents {
                let kids: Vec<String> = self
                    .children_of(l)
                    .into_iter()
                    .filter(|k| retained.contains(k))
                    .collect();
                if kids.len() >= min_indicators {
                    for k in &kids {
                        let lab = self.directed_label(l, k).unwrap_or(EdgeLabel::Confirmed);
                        sub.add_directed(l, k, lab);
                    }
                }
            }
            sub.latents_biconnected = self.latents_biconnected;
            if !sub.latents().is_empty() {
                results.push(sub);
            }
        }
        // dedupe and keep only maximal observed sets
        results.sort_by(|a, b| a.observed.cmp(&b.observed).then(a.latents.cmp(&b.latents)));
        results.dedup_by(|a, b| a.observed == b.observed && a.latents == b.latents);
        let obs_sets: Vec<BTreeSet<String>> = results
            .iter()
            .map(|r| r.observed.iter().cloned().collect())
            .collect();
        let keep: Vec<bool> = obs_sets
            .iter()
            .enumerate()
            .map(|(i, s)| {
                !obs_sets
                    .iter()
                    .enumerate()
                    .any(|(j, t)| j != i && s.is_subset(t) && s != t)
            })
            .collect();
        results
            .into_iter()
            .zip(keep)
            .filter_map(|(r, k)| if k { Some(r) } else { None })
            .collect()
    }
}

impl PartialEq for MeasurementPattern {
    fn eq(&self, other: &Self) -> bool {
        let a: BTreeSet<&String> = self.latents.iter().collect();
        let b: BTreeSet<&String> = other.latents.iter().collect();
        let oa: BTreeSet<&String> = self.observed.iter().collect();
        let ob: BTreeSet<&String> = other.observed.iter().collect();
        a == b
            && oa == ob
            && self.directed == other.directed
            && self.bidirected == other.bidirected
            && self.latents_biconnected == other.latents_biconnected
    }
}

impl Eq for MeasurementPattern {}
