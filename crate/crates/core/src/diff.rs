//! Differential compilation: recompile only what an edit touched.

use crate::callgraph::{self, DependencyGraph, Epoch, Provenance};
use crate::compiler::{check_sketch, fill_one, Assembly, CompileError, CompiledProgram, FillAttempt};
use crate::llm::ChatModel;
use crate::sketch::render::{render_function, HoleMode};
use crate::sketch::{AnplProgram, Hole, HoleId};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashSet};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EditDelta {
    /// New-program ids of holes whose description or signature changed.
    pub changed_holes: BTreeSet<HoleId>,
    pub new_holes: BTreeSet<HoleId>,
    /// Old-program ids with no counterpart.
    pub removed_holes: BTreeSet<HoleId>,
    /// Per sketch function of the new program: does its body differ?
    pub sketch_changed: BTreeMap<String, bool>,
    /// Unchanged holes, new id to old id.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub reused: BTreeMap<HoleId, HoleId>,
}

impl EditDelta {
    pub fn is_empty(&self) -> bool {
        self.changed_holes.is_empty()
            && self.new_holes.is_empty()
            && self.removed_holes.is_empty()
            && !self.sketch_changed.values().any(|c| *c)
    }

    /// Holes that need a fresh fill.
    pub fn to_compile(&self) -> BTreeSet<&HoleId> {
        self.changed_holes.iter().chain(&self.new_holes).collect()
    }
}

fn same_spec(a: &Hole, b: &Hole) -> bool {
    a.description == b.description && a.params() == b.params()
}

/// Matches holes across two versions of a program. Named holes pair by name.
/// Inline holes pair by position with an identical spec, then by identical
/// spec within the same function (the statement moved), then by position
/// alone (the spec changed).
pub fn diff(old: &AnplProgram, new: &AnplProgram) -> EditDelta {
    let old_holes = old.holes();
    let new_holes = new.holes();
    let mut delta = EditDelta::default();
    let mut old_used: HashSet<&str> = HashSet::new();
    let mut new_done: HashSet<&str> = HashSet::new();

    let pair = |delta: &mut EditDelta, n: &Hole, o: &Hole, changed: bool| {
        if changed {
            delta.changed_holes.insert(n.id.clone());
        } else {
            delta.reused.insert(n.id.clone(), o.id.clone());
        }
    };

    for n in new_holes.iter().filter(|h| h.is_named()) {
        if let Some(o) = old_holes.iter().find(|o| o.is_named() && o.user_name == n.user_name) {
            pair(&mut delta, n, o, !same_spec(n, o));
            old_used.insert(&o.id);
            new_done.insert(&n.id);
        }
    }
    let inline_old: Vec<&Hole> = old_holes.iter().filter(|h| !h.is_named()).collect();
    let inline_new: Vec<&Hole> = new_holes.iter().filter(|h| !h.is_named()).collect();
    for n in &inline_new {
        if let Some(o) = inline_old.iter().find(|o| o.id == n.id && same_spec(n, o)) {
            pair(&mut delta, n, o, false);
            old_used.insert(&o.id);
            new_done.insert(&n.id);
        }
    }
    for n in &inline_new {
        if new_done.contains(n.id.as_str()) {
            continue;
        }
        if let Some(o) = inline_old
            .iter()
            .find(|o| !old_used.contains(o.id.as_str()) && o.function() == n.function() && same_spec(n, o))
        {
            pair(&mut delta, n, o, false);
            old_used.insert(&o.id);
            new_done.insert(&n.id);
        }
    }
    for n in &inline_new {
        if new_done.contains(n.id.as_str()) {
            continue;
        }
        if let Some(o) = inline_old.iter().find(|o| !old_used.contains(o.id.as_str()) && o.id == n.id) {
            pair(&mut delta, n, o, true);
            old_used.insert(&o.id);
            new_done.insert(&n.id);
        }
    }
    for n in &new_holes {
        if !new_done.contains(n.id.as_str()) {
            delta.new_holes.insert(n.id.clone());
        }
    }
    for o in &old_holes {
        if !old_used.contains(o.id.as_str()) {
            delta.removed_holes.insert(o.id.clone());
        }
    }
    for f in new.sketch_functions() {
        let changed = match old.function(&f.name) {
            Some(of) if !of.is_hole() => render_function(of, HoleMode::Anpl) != render_function(f, HoleMode::Anpl),
            _ => true,
        };
        delta.sketch_changed.insert(f.name.clone(), changed);
    }
    delta
}

/// Recompiles `new_anpl` against `old`: unchanged holes keep their fills
/// verbatim, the rest are filled fresh, and the graphs are merged by rank.
pub fn compile_diff(
    old: &CompiledProgram,
    new_anpl: &AnplProgram,
    llm: &dyn ChatModel,
) -> Result<CompiledProgram, CompileError> {
    compile_diff_traced(old, new_anpl, llm).map(|(p, _, _)| p)
}

pub fn compile_diff_traced(
    old: &CompiledProgram,
    new_anpl: &AnplProgram,
    llm: &dyn ChatModel,
) -> Result<(CompiledProgram, EditDelta, Vec<FillAttempt>), CompileError> {
    check_sketch(new_anpl)?;
    let delta = diff(&old.anpl, new_anpl);

    let mut old_graph = old.graph.clone();
    old_graph.retag(Epoch::Old);
    let old_asm = {
        let mut c = old.clone();
        c.graph = old_graph.clone();
        Assembly::from_compiled(&c)
    };
    let old_entries = old_asm.entries();

    let mut asm = Assembly::new(new_anpl.clone());
    asm.imports = old.imports.clone();
    let holes = new_anpl.holes();
    for hole in &holes {
        let Some(old_id) = delta.reused.get(&hole.id) else { continue };
        let Some(entry) = old.fill_map.get(old_id) else { continue };
        for name in old_asm.fill_order(entry, &old_entries) {
            asm.fills.insert(old_asm.fills.nodes[&name].clone());
        }
        asm.fill_map.insert(hole.id.clone(), entry.clone());
    }
    let adopted: BTreeSet<String> = asm.fills.names().map(str::to_string).collect();

    let mut history = Vec::new();
    for hole in &holes {
        if asm.fill_map.contains_key(&hole.id) {
            continue;
        }
        history.extend(fill_one(&mut asm, hole, llm, Epoch::New)?);
    }

    let new_sketch: HashSet<&str> = new_anpl.sketch_functions().map(|f| f.name.as_str()).collect();
    let mut old_g = DependencyGraph::new();
    for n in old_graph.nodes.values() {
        let keep = match n.provenance {
            Provenance::User => new_sketch.contains(n.name.as_str()),
            Provenance::Llm => adopted.contains(&n.name),
        };
        if keep {
            old_g.insert(n.clone());
        }
    }
    let mut new_g = asm.sketch_nodes(Epoch::New);
    for n in asm.fills.nodes.values().filter(|n| !adopted.contains(&n.name)) {
        new_g.insert(n.clone());
    }
    let roots: Vec<String> = new_sketch
        .iter()
        .map(|s| s.to_string())
        .chain(asm.fill_map.values().cloned())
        .collect();
    let merged = callgraph::merge_with_roots(&old_g, &new_g, roots.iter().map(String::as_str))
        .map_err(CompileError::Graph)?;
    Ok((asm.finish(merged), delta, history))
}
