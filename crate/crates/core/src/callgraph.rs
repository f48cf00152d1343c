//! Provenance-tagged dependency graphs over generated functions.

use crate::sketch::Hole;
use crate::target;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    User,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Epoch {
    Old,
    New,
}

/// Merge priority: the user's current intention first, then the user's
/// previous one, then previously generated code, then fresh generations.
pub fn rank(p: Provenance, e: Epoch) -> u8 {
    match (p, e) {
        (Provenance::User, Epoch::New) => 4,
        (Provenance::User, Epoch::Old) => 3,
        (Provenance::Llm, Epoch::Old) => 2,
        (Provenance::Llm, Epoch::New) => 1,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionNode {
    pub name: String,
    pub source: String,
    pub provenance: Provenance,
    pub epoch: Epoch,
    /// Free identifiers referenced by the body, builtins excluded.
    pub calls: BTreeSet<String>,
}

impl FunctionNode {
    pub fn rank(&self) -> u8 {
        rank(self.provenance, self.epoch)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("no function definition could be extracted: {0}")]
    ParseFailure(String),
    #[error("function `{0}` is defined more than once")]
    DuplicateName(String),
    #[error("call graph has a cycle: {0:?}")]
    CyclicGraph(Vec<String>),
    #[error("`{0}` is not a node of the graph")]
    UnknownRoot(String),
    #[error("`{name}` has two different definitions with the same priority")]
    MergeConflict { name: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub nodes: IndexMap<String, FunctionNode>,
}

impl DependencyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, node: FunctionNode) -> Option<FunctionNode> {
        self.nodes.insert(node.name.clone(), node)
    }

    pub fn get(&self, name: &str) -> Option<&FunctionNode> {
        self.nodes.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.nodes.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    /// Callees of `name` that are nodes of this graph, self-edges included.
    pub fn callees(&self, name: &str) -> BTreeSet<&str> {
        self.nodes
            .get(name)
            .map(|n| {
                n.calls
                    .iter()
                    .filter(|c| self.nodes.contains_key(*c))
                    .map(String::as_str)
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn edges(&self) -> BTreeSet<(String, String)> {
        let mut out = BTreeSet::new();
        for n in self.nodes.keys() {
            for c in self.callees(n) {
                out.insert((n.clone(), c.to_string()));
            }
        }
        out
    }

    /// Nodes no other node depends on.
    pub fn entry_nodes(&self) -> BTreeSet<String> {
        let mut called = BTreeSet::new();
        for n in self.nodes.keys() {
            for c in self.callees(n) {
                if c != n {
                    called.insert(c);
                }
            }
        }
        self.nodes.keys().filter(|n| !called.contains(n.as_str())).cloned().collect()
    }

    /// Callers before callees; ties broken by name.
    pub fn topo_order(&self) -> Result<Vec<String>, GraphError> {
        let mut indeg: BTreeMap<&str, usize> = self.nodes.keys().map(|k| (k.as_str(), 0)).collect();
        for n in self.nodes.keys() {
            for c in self.callees(n) {
                if c != n {
                    *indeg.get_mut(c).unwrap() += 1;
                }
            }
        }
        let mut ready: BTreeSet<&str> = indeg.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
        let mut out = Vec::with_capacity(self.nodes.len());
        while let Some(n) = ready.pop_first() {
            out.push(n.to_string());
            for c in self.callees(n) {
                if c == n {
                    continue;
                }
                let d = indeg.get_mut(c).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(c);
                }
            }
        }
        if out.len() < self.nodes.len() {
            let cycle = self.cycles().into_iter().next().unwrap_or_default();
            return Err(GraphError::CyclicGraph(cycle));
        }
        Ok(out)
    }

    /// Strongly connected components with at least two members, each sorted,
    /// in order of their smallest member.
    pub fn cycles(&self) -> Vec<Vec<String>> {
        let names: Vec<&str> = self.nodes.keys().map(String::as_str).collect();
        let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let adj: Vec<Vec<usize>> = names
            .iter()
            .map(|n| self.callees(n).into_iter().map(|c| index[c]).collect())
            .collect();
        let mut comps = tarjan(&adj)
            .into_iter()
            .filter(|c| c.len() >= 2)
            .map(|c| {
                let mut v: Vec<String> = c.into_iter().map(|i| names[i].to_string()).collect();
                v.sort();
                v
            })
            .collect::<Vec<_>>();
        comps.sort();
        comps
    }

    pub fn has_cycle(&self) -> bool {
        !self.cycles().is_empty()
    }

    pub fn reachable_from<'a>(&self, roots: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<String> = VecDeque::new();
        for r in roots {
            if self.nodes.contains_key(r) && seen.insert(r.to_string()) {
                queue.push_back(r.to_string());
            }
        }
        while let Some(n) = queue.pop_front() {
            for c in self.callees(&n) {
                if seen.insert(c.to_string()) {
                    queue.push_back(c.to_string());
                }
            }
        }
        seen
    }

    pub fn prune_reachable(&self, root: &str) -> Result<DependencyGraph, GraphError> {
        if !self.contains(root) {
            return Err(GraphError::UnknownRoot(root.to_string()));
        }
        Ok(self.retain(&self.reachable_from([root])))
    }

    /// Keeps only nodes reachable from any of `roots` (missing roots ignored).
    pub fn prune_from<'a>(&self, roots: impl IntoIterator<Item = &'a str>) -> DependencyGraph {
        self.retain(&self.reachable_from(roots))
    }

    fn retain(&self, keep: &BTreeSet<String>) -> DependencyGraph {
        DependencyGraph {
            nodes: self
                .nodes
                .iter()
                .filter(|(k, _)| keep.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn retag(&mut self, epoch: Epoch) {
        for n in self.nodes.values_mut() {
            n.epoch = epoch;
        }
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph calls {\n");
        for n in self.nodes.values() {
            let tag = format!("{:?}/{:?}", n.provenance, n.epoch).to_lowercase();
            let _ = writeln!(out, "  \"{}\" [label=\"{}\\n{}\"];", n.name, n.name, tag);
        }
        for (a, b) in self.edges() {
            let _ = writeln!(out, "  \"{a}\" -> \"{b}\";");
        }
        out.push_str("}\n");
        out
    }
}

fn tarjan(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct St<'a> {
        adj: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    fn visit(s: &mut St<'_>, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on[v] = true;
        for &w in &s.adj[v] {
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on[w] => s.low[v] = s.low[v].min(iw),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            while let Some(w) = s.stack.pop() {
                s.on[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            s.out.push(comp);
        }
    }
    let n = adj.len();
    let mut s = St {
        adj,
        index: vec![None; n],
        low: vec![0; n],
        on: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.out
}

/// Builds a graph from a target-language module: one node per top-level
/// function, tagged uniformly.
pub fn build_graph(source: &str, provenance: Provenance, epoch: Epoch) -> Result<DependencyGraph, GraphError> {
    let module = target::scan_module(source).map_err(|e| GraphError::ParseFailure(e.to_string()))?;
    graph_from_module(&module, provenance, epoch)
}

pub fn graph_from_module(
    module: &target::TargetModule,
    provenance: Provenance,
    epoch: Epoch,
) -> Result<DependencyGraph, GraphError> {
    let mut g = DependencyGraph::new();
    for (f, text) in module.functions() {
        let node = FunctionNode {
            name: f.name.clone(),
            source: text.to_string(),
            provenance,
            epoch,
            calls: f.references.clone(),
        };
        if g.insert(node).is_some() {
            return Err(GraphError::DuplicateName(f.name.clone()));
        }
    }
    if g.is_empty() {
        return Err(GraphError::ParseFailure("source contains no top-level function definition".into()));
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FillDecision {
    /// The hole's user name is a node; `pruned` is what it reaches.
    Named { node: String, pruned: DependencyGraph },
    /// Exactly one entry node; `pruned` is what it reaches.
    SingleEntry { node: String, pruned: DependencyGraph },
    /// Several (or zero) entry nodes, or a cycle: regenerate.
    Ambiguous { entries: BTreeSet<String> },
    /// The hole is named, its name is absent and there is no single entry.
    NamedMissing { name: String, entries: BTreeSet<String> },
}

impl FillDecision {
    pub fn chosen(&self) -> Option<(&str, &DependencyGraph)> {
        match self {
            FillDecision::Named { node, pruned } | FillDecision::SingleEntry { node, pruned } => Some((node, pruned)),
            _ => None,
        }
    }
}

pub fn resolve_hole_fill(hole: &Hole, g: &DependencyGraph) -> FillDecision {
    if let Some(name) = &hole.user_name {
        if g.contains(name) {
            let pruned = g.prune_reachable(name).expect("root present");
            if !pruned.has_cycle() {
                return FillDecision::Named {
                    node: name.clone(),
                    pruned,
                };
            }
            return FillDecision::Ambiguous {
                entries: g.entry_nodes(),
            };
        }
    }
    let entries = g.entry_nodes();
    if entries.len() == 1 && !g.has_cycle() {
        let node = entries.iter().next().unwrap().clone();
        let pruned = g.prune_reachable(&node).expect("entry present");
        return FillDecision::SingleEntry { node, pruned };
    }
    match &hole.user_name {
        Some(name) => FillDecision::NamedMissing {
            name: name.clone(),
            entries,
        },
        None => FillDecision::Ambiguous { entries },
    }
}

/// Keeps, for every name, the node with the higher rank. Names present in
/// only one graph are kept as they are. No pruning.
pub fn merge_nodes(old_g: &DependencyGraph, new_g: &DependencyGraph) -> Result<DependencyGraph, GraphError> {
    let mut out = old_g.clone();
    for (name, n) in &new_g.nodes {
        match out.nodes.get(name) {
            None => {
                out.insert(n.clone());
            }
            Some(o) if o.rank() < n.rank() => {
                out.insert(n.clone());
            }
            Some(o) if o.rank() == n.rank() && o.source != n.source => {
                return Err(GraphError::MergeConflict { name: name.clone() });
            }
            Some(_) => {}
        }
    }
    Ok(out)
}

/// [`merge_nodes`] followed by pruning to what `main` reaches.
pub fn merge(old_g: &DependencyGraph, new_g: &DependencyGraph) -> Result<DependencyGraph, GraphError> {
    merge_with_roots(old_g, new_g, [crate::sketch::ENTRY_NAME])
}

pub fn merge_with_roots<'a>(
    old_g: &DependencyGraph,
    new_g: &DependencyGraph,
    roots: impl IntoIterator<Item = &'a str>,
) -> Result<DependencyGraph, GraphError> {
    Ok(merge_nodes(old_g, new_g)?.prune_from(roots))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(src: &str) -> DependencyGraph {
        build_graph(src, Provenance::Llm, Epoch::New).unwrap()
    }

    #[test]
    fn chain() {
        let g = graph("def f(x):\n    return g(x)\n\ndef g(x):\n    return x\n");
        assert_eq!(g.edges(), [("f".to_string(), "g".to_string())].into());
        assert_eq!(g.entry_nodes(), ["f".to_string()].into());
        assert_eq!(g.topo_order().unwrap(), ["f", "g"]);
    }

    #[test]
    fn self_recursion_is_an_entry() {
        let g = graph("def f(x):\n    return f(x - 1)\n");
        assert_eq!(g.entry_nodes(), ["f".to_string()].into());
        assert!(g.cycles().is_empty());
        assert_eq!(g.topo_order().unwrap(), ["f"]);
    }

    #[test]
    fn mutual_recursion() {
        let g = graph("def a(x):\n    return b(x)\n\ndef b(x):\n    return a(x)\n");
        assert_eq!(g.cycles(), [vec!["a".to_string(), "b".to_string()]]);
        assert_eq!(g.topo_order(), Err(GraphError::CyclicGraph(vec!["a".into(), "b".into()])));
    }

    #[test]
    fn errors() {
        assert!(matches!(build_graph("x = 1\n", Provenance::Llm, Epoch::New), Err(GraphError::ParseFailure(_))));
        assert!(matches!(build_graph("def f(:\n", Provenance::Llm, Epoch::New), Err(GraphError::ParseFailure(_))));
        assert_eq!(
            build_graph("def f():\n    pass\ndef f():\n    pass\n", Provenance::Llm, Epoch::New),
            Err(GraphError::DuplicateName("f".into()))
        );
        assert_eq!(graph("def f():\n    pass\n").prune_reachable("z"), Err(GraphError::UnknownRoot("z".into())));
    }

    #[test]
    fn dot_dump() {
        let g = graph("def f(x):\n    return g(x)\n\ndef g(x):\n    return x\n");
        let dot = g.to_dot();
        assert!(dot.contains("\"f\" -> \"g\";"));
        assert!(dot.contains("llm/new"));
    }
}
