//! The hole compiler: fills holes one at a time in appearance order, keeping
//! the sketch fixed.

mod extract;
mod prompt;

pub use extract::extract_code;
pub use prompt::{build_prompt, hole_stub, PROMPT_VERSION, SYSTEM_PROMPT, USER_TEMPLATE};

use crate::callgraph::{self, DependencyGraph, Epoch, FillDecision, FunctionNode, Provenance};
use crate::lex::{self, TokKind};
use crate::llm::{ChatModel, ChatRequest, LlmError};
use crate::sketch::render::{render_function, HoleMode};
use crate::sketch::validate::{self, Diagnostic};
use crate::sketch::{AnplProgram, Expr, FunctionBody, Hole, HoleId, Stmt};
use crate::target::{self, ItemKind};
use indexmap::IndexMap;
use serde::Serialize;
use std::collections::{BTreeSet, HashMap, HashSet};

/// Fixed head of every compiled module.
pub const PREAMBLE: &str = "import numpy as np\nfrom typing import *\n(black, blue, red, green, yellow, grey, pink, orange, teal, maroon) = range(10)\n";

pub const MAX_ATTEMPTS: usize = 5;

pub const FILL_MARKER: &str = "# fill for ";

/// Sampling temperature of the `attempt`-th try.
pub fn attempt_temperature(attempt: usize) -> f64 {
    attempt as f64 / 10.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledProgram {
    pub anpl: AnplProgram,
    pub target_source: String,
    /// Hole id to implementing function, in hole order.
    pub fill_map: IndexMap<HoleId, String>,
    pub graph: DependencyGraph,
    /// Import lines collected from completions, after the preamble.
    pub imports: Vec<String>,
}

impl CompiledProgram {
    pub fn fill_name(&self, hole_id: &str) -> Option<&str> {
        self.fill_map.get(hole_id).map(String::as_str)
    }

    /// Source of every function in the fill of `hole_id`.
    pub fn fill_source(&self, hole_id: &str) -> Option<String> {
        let asm = Assembly::from_compiled(self);
        let entry = self.fill_map.get(hole_id)?;
        let order = asm.fill_order(entry, &asm.entries());
        Some(order.iter().map(|n| asm.fills.nodes[n].source.as_str()).collect::<Vec<_>>().join("\n"))
    }

    /// Names of the nodes making up the fill of `hole_id`.
    pub fn fill_nodes(&self, hole_id: &str) -> Vec<String> {
        let asm = Assembly::from_compiled(self);
        match self.fill_map.get(hole_id) {
            Some(entry) => asm.fill_order(entry, &asm.entries()),
            None => Vec::new(),
        }
    }
}

impl Serialize for CompiledProgram {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            anpl: String,
            target_source: &'a str,
            fill_map: &'a IndexMap<HoleId, String>,
            graph: &'a DependencyGraph,
            imports: &'a [String],
        }
        View {
            anpl: self.anpl.render(),
            target_source: &self.target_source,
            fill_map: &self.fill_map,
            graph: &self.graph,
            imports: &self.imports,
        }
        .serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptOutcome {
    Filled(String),
    Rejected(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FillAttempt {
    pub hole_id: HoleId,
    pub attempt_index: usize,
    pub temperature: f64,
    pub prompt: Prompt,
    pub response: String,
    pub outcome: AttemptOutcome,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum CompileError {
    #[error("sketch is not well-formed ({} diagnostics)", .0.len())]
    SketchInvalid(Vec<Diagnostic>),
    #[error("hole {hole_id} still unresolved after {} attempts", attempts.len())]
    ExhaustedAttempts {
        hole_id: HoleId,
        attempts: Vec<FillAttempt>,
        /// The program with every hole before this one filled.
        partial: Box<CompiledProgram>,
    },
    #[error("language model failed while filling {hole_id}: {source}")]
    Llm {
        hole_id: HoleId,
        source: LlmError,
        attempts: Vec<FillAttempt>,
    },
    #[error(transparent)]
    Graph(#[from] callgraph::GraphError),
}

impl CompileError {
    /// Attempts made for the hole that failed.
    pub fn attempts(&self) -> &[FillAttempt] {
        match self {
            CompileError::SketchInvalid(_) | CompileError::Graph(_) => &[],
            CompileError::ExhaustedAttempts { attempts, .. } | CompileError::Llm { attempts, .. } => attempts,
        }
    }
}

pub fn compile(anpl: &AnplProgram, llm: &dyn ChatModel) -> Result<CompiledProgram, CompileError> {
    compile_traced(anpl, llm).map(|(p, _)| p)
}

/// [`compile`], also returning every fill attempt in order.
pub fn compile_traced(
    anpl: &AnplProgram,
    llm: &dyn ChatModel,
) -> Result<(CompiledProgram, Vec<FillAttempt>), CompileError> {
    check_sketch(anpl)?;
    let mut asm = Assembly::new(anpl.clone());
    let mut history = Vec::new();
    for hole in anpl.holes() {
        history.extend(fill_one(&mut asm, &hole, llm, Epoch::New)?);
    }
    Ok((asm.into_compiled(), history))
}

pub(crate) fn check_sketch(anpl: &AnplProgram) -> Result<(), CompileError> {
    let errors: Vec<Diagnostic> = validate::validate_sketch(anpl).into_iter().filter(Diagnostic::is_error).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CompileError::SketchInvalid(errors))
    }
}

/// Queries `llm` for `hole` under the retry schedule and splices the first
/// resolvable completion into `asm`.
pub(crate) fn fill_one(
    asm: &mut Assembly,
    hole: &Hole,
    llm: &dyn ChatModel,
    epoch: Epoch,
) -> Result<Vec<FillAttempt>, CompileError> {
    let context = asm.layout();
    let (system, user) = build_prompt(&context, hole);
    let mut attempts = Vec::new();
    for attempt_index in 0..MAX_ATTEMPTS {
        let temperature = attempt_temperature(attempt_index);
        let req = ChatRequest::new(system.clone(), user.clone(), temperature, 1);
        let resp = match llm.complete(&req) {
            Ok(r) => r,
            Err(source) => {
                return Err(CompileError::Llm {
                    hole_id: hole.id.clone(),
                    source,
                    attempts,
                })
            }
        };
        let response = resp.completions.into_iter().next().unwrap_or_default();
        let outcome = match asm.try_splice(hole, &response, epoch) {
            Ok(name) => AttemptOutcome::Filled(name),
            Err(reason) => AttemptOutcome::Rejected(reason),
        };
        let done = matches!(outcome, AttemptOutcome::Filled(_));
        tracing::debug!(hole = %hole.id, attempt_index, ?outcome, "fill attempt");
        attempts.push(FillAttempt {
            hole_id: hole.id.clone(),
            attempt_index,
            temperature,
            prompt: Prompt {
                system: system.clone(),
                user: user.clone(),
            },
            response,
            outcome,
        });
        if done {
            return Ok(attempts);
        }
    }
    Err(CompileError::ExhaustedAttempts {
        hole_id: hole.id.clone(),
        attempts,
        partial: Box::new(asm.clone().into_compiled()),
    })
}

/// A program under construction: the sketch, the fills spliced so far and
/// the imports they brought.
#[derive(Debug, Clone)]
pub(crate) struct Assembly {
    pub anpl: AnplProgram,
    pub fill_map: IndexMap<HoleId, String>,
    /// Generated nodes only.
    pub fills: DependencyGraph,
    pub imports: Vec<String>,
}

impl Assembly {
    pub fn new(anpl: AnplProgram) -> Self {
        Assembly {
            anpl,
            fill_map: IndexMap::new(),
            fills: DependencyGraph::new(),
            imports: Vec::new(),
        }
    }

    pub fn from_compiled(c: &CompiledProgram) -> Self {
        let mut fills = DependencyGraph::new();
        for n in c.graph.nodes.values().filter(|n| n.provenance == Provenance::Llm) {
            fills.insert(n.clone());
        }
        Assembly {
            anpl: c.anpl.clone(),
            fill_map: c.fill_map.clone(),
            fills,
            imports: c.imports.clone(),
        }
    }

    /// Inline-hole label to fill name.
    pub fn label_map(&self) -> HashMap<String, String> {
        self.anpl
            .holes()
            .into_iter()
            .filter_map(|h| {
                let label = h.auto_label.clone()?;
                Some((label, self.fill_map.get(&h.id)?.clone()))
            })
            .collect()
    }

    pub fn entries(&self) -> HashSet<String> {
        self.fill_map.values().cloned().collect()
    }

    pub fn sketch_nodes(&self, epoch: Epoch) -> DependencyGraph {
        let map = self.label_map();
        let mut g = DependencyGraph::new();
        for f in self.anpl.sketch_functions() {
            let source = render_function(f, HoleMode::Target(&map));
            let calls = target::scan_module(&source)
                .ok()
                .and_then(|m| m.functions().next().map(|(d, _)| d.references.clone()))
                .unwrap_or_default();
            g.insert(FunctionNode {
                name: f.name.clone(),
                source,
                provenance: Provenance::User,
                epoch,
                calls,
            });
        }
        g
    }

    /// Preorder walk of the generated nodes under `entry`, callees in name
    /// order, not descending into other holes' entries.
    pub fn fill_order(&self, entry: &str, entries: &HashSet<String>) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        self.fill_walk(entry, entry, entries, &mut seen, &mut out);
        out
    }

    fn fill_walk(&self, n: &str, entry: &str, entries: &HashSet<String>, seen: &mut HashSet<String>, out: &mut Vec<String>) {
        if !self.fills.contains(n) || (n != entry && entries.contains(n)) || !seen.insert(n.to_string()) {
            return;
        }
        out.push(n.to_string());
        for c in self.fills.callees(n) {
            self.fill_walk(c, entry, entries, seen, out);
        }
    }

    /// The module text: preamble, imports, the sketch with hole calls
    /// replaced, then one block per filled hole.
    pub fn layout(&self) -> String {
        let mut out = String::from(PREAMBLE);
        for imp in &self.imports {
            out.push_str(imp);
            if !imp.ends_with('\n') {
                out.push('\n');
            }
        }
        out.push('\n');
        let map = self.label_map();
        let parts: Vec<String> = self
            .anpl
            .functions
            .iter()
            .filter(|f| !(f.is_hole() && self.fill_map.contains_key(&f.name)))
            .map(|f| {
                if f.is_hole() {
                    // unfilled named hole: a def whose body is its description
                    render_function(f, HoleMode::Anpl)
                } else {
                    render_function(f, HoleMode::Target(&map))
                }
            })
            .collect();
        out.push_str(&parts.join("\n"));
        let entries = self.entries();
        let mut emitted: HashSet<String> = HashSet::new();
        for hole in self.anpl.holes() {
            let Some(entry) = self.fill_map.get(&hole.id) else { continue };
            let order: Vec<String> = self
                .fill_order(entry, &entries)
                .into_iter()
                .filter(|n| emitted.insert(n.clone()))
                .collect();
            if order.is_empty() {
                continue;
            }
            out.push('\n');
            out.push_str(FILL_MARKER);
            out.push_str(&hole.id);
            out.push('\n');
            let body: Vec<&str> = order.iter().map(|n| self.fills.nodes[n].source.as_str()).collect();
            out.push_str(&body.join("\n"));
        }
        out
    }

    /// Sketch nodes plus fills, restricted to what the sketch reaches.
    pub fn graph(&self, sketch_epoch: Epoch) -> DependencyGraph {
        let mut g = self.sketch_nodes(sketch_epoch);
        for n in self.fills.nodes.values() {
            g.insert(n.clone());
        }
        let roots: Vec<String> = self
            .anpl
            .sketch_functions()
            .map(|f| f.name.clone())
            .chain(self.fill_map.values().cloned())
            .collect();
        g.prune_from(roots.iter().map(String::as_str))
    }

    pub fn into_compiled(self) -> CompiledProgram {
        let graph = self.graph(Epoch::New);
        self.finish(graph)
    }

    /// Builds the program around an already merged graph.
    pub fn finish(mut self, graph: DependencyGraph) -> CompiledProgram {
        self.fill_map = self
            .anpl
            .holes()
            .iter()
            .filter_map(|h| self.fill_map.get(&h.id).map(|n| (h.id.clone(), n.clone())))
            .collect();
        self.fills = DependencyGraph {
            nodes: graph
                .nodes
                .iter()
                .filter(|(_, n)| n.provenance == Provenance::Llm)
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        };
        let target_source = self.layout();
        CompiledProgram {
            anpl: self.anpl,
            target_source,
            fill_map: self.fill_map,
            graph,
            imports: self.imports,
        }
    }

    /// Removes the fill of `hole_id`, keeping nodes other fills still use.
    pub fn detach(&mut self, hole_id: &str) -> Option<String> {
        let entry = self.fill_map.shift_remove(hole_id)?;
        let entries = self.entries();
        let mut keep: HashSet<String> = HashSet::new();
        for e in &entries {
            keep.extend(self.fill_order(e, &entries));
        }
        let mut all = entries.clone();
        all.insert(entry.clone());
        for n in self.fill_order(&entry, &all) {
            if !keep.contains(&n) {
                self.fills.nodes.shift_remove(&n);
            }
        }
        Some(entry)
    }

    /// Identifiers a new generated function may not take: everything the
    /// sketch mentions, other holes' names, generated functions already in
    /// the program, preamble names and builtins.
    fn reserved_names(&self, hole: &Hole) -> BTreeSet<String> {
        let mut r: BTreeSet<String> = sketch_identifiers(&self.anpl);
        for h in self.anpl.holes() {
            if h.id == hole.id {
                continue;
            }
            r.insert(h.name().to_string());
        }
        r.extend(self.fills.names().map(str::to_string));
        r.extend(validate::PREAMBLE_NAMES.iter().map(|s| s.to_string()));
        r.extend(target::BUILTINS.iter().map(|s| s.to_string()));
        if let Some(own) = &hole.user_name {
            r.remove(own);
        }
        r
    }

    /// Resolves `response` for `hole` and splices it in. Returns the fill's
    /// entry name, or why the response was rejected.
    pub fn try_splice(&mut self, hole: &Hole, response: &str, epoch: Epoch) -> Result<String, String> {
        self.try_splice_as(hole, response, epoch, None)
    }

    /// [`Assembly::try_splice`], naming the entry `forced` when given.
    pub fn try_splice_as(&mut self, hole: &Hole, response: &str, epoch: Epoch, forced: Option<&str>) -> Result<String, String> {
        let (entry_name, nodes, imports) = self.resolve_response(hole, response, epoch, forced)?;
        for n in nodes {
            self.fills.insert(n);
        }
        for imp in imports {
            if !self.imports.contains(&imp) {
                self.imports.push(imp);
            }
        }
        self.fill_map.insert(hole.id.clone(), entry_name.clone());
        Ok(entry_name)
    }

    /// Everything [`Assembly::try_splice`] does except mutating: the entry
    /// name, the renamed nodes and new import lines.
    pub fn resolve_response(
        &self,
        hole: &Hole,
        response: &str,
        epoch: Epoch,
        forced: Option<&str>,
    ) -> Result<(String, Vec<FunctionNode>, Vec<String>), String> {
        let code = extract_code(response);
        let module = target::scan_module(&code).map_err(|e| format!("parse failure: {e}"))?;
        let graph = callgraph::graph_from_module(&module, Provenance::Llm, epoch).map_err(|e| e.to_string())?;
        let graph = self.filter_response(hole, graph);
        if graph.is_empty() {
            return Err("response defines no new function".into());
        }
        let (chosen, pruned) = match callgraph::resolve_hole_fill(hole, &graph) {
            FillDecision::Named { node, pruned } | FillDecision::SingleEntry { node, pruned } => (node, pruned),
            FillDecision::Ambiguous { entries } if graph.has_cycle() => {
                return Err(format!("call cycle among generated functions {:?} (entries {entries:?})", graph.cycles()))
            }
            FillDecision::Ambiguous { entries } => return Err(format!("ambiguous entry nodes {entries:?}")),
            FillDecision::NamedMissing { name, entries } => {
                return Err(format!("`{name}` not defined and entry nodes {entries:?} are not unique"))
            }
        };
        let canonical = forced.map(str::to_string).or_else(|| hole.user_name.clone());
        let mut reserved = self.reserved_names(hole);
        if let Some(c) = &canonical {
            reserved.remove(c);
        }
        let mut taken: BTreeSet<String> = BTreeSet::new();
        let mut rename: HashMap<String, String> = HashMap::new();
        let order: Vec<String> = std::iter::once(chosen.clone())
            .chain(pruned.names().filter(|n| *n != chosen).map(str::to_string))
            .collect();
        for name in &order {
            let target = if let (true, Some(c)) = (*name == chosen, &canonical) {
                c.clone()
            } else if reserved.contains(name) || taken.contains(name) {
                fresh_name(name, |c| reserved.contains(c) || taken.contains(c) || pruned.contains(c))
            } else {
                name.clone()
            };
            taken.insert(target.clone());
            if target != *name {
                rename.insert(name.clone(), target);
            }
        }
        let nodes: Vec<FunctionNode> = order
            .iter()
            .map(|name| {
                let n = &pruned.nodes[name];
                FunctionNode {
                    name: rename.get(name).cloned().unwrap_or_else(|| name.clone()),
                    source: target::rename_identifiers(&n.source, &rename),
                    provenance: Provenance::Llm,
                    epoch,
                    calls: n.calls.iter().map(|c| rename.get(c).cloned().unwrap_or_else(|| c.clone())).collect(),
                }
            })
            .collect();
        let imports: Vec<String> = module
            .imports()
            .map(|s| s.to_string())
            .filter(|s| !PREAMBLE.lines().any(|p| p == s.trim_end()))
            .collect();
        let entry = nodes[0].name.clone();
        Ok((entry, nodes, imports))
    }

    /// Drops functions that belong to the sketch or to other holes, and
    /// verbatim copies of functions the program already has.
    fn filter_response(&self, hole: &Hole, g: DependencyGraph) -> DependencyGraph {
        let mut drop: HashSet<String> = self.anpl.sketch_functions().map(|f| f.name.clone()).collect();
        for h in self.anpl.holes() {
            if h.id != hole.id {
                drop.insert(h.name().to_string());
            }
        }
        DependencyGraph {
            nodes: g
                .nodes
                .into_iter()
                .filter(|(name, n)| {
                    !drop.contains(name)
                        && !self.fills.get(name).is_some_and(|old| old.source.trim_end() == n.source.trim_end())
                })
                .collect(),
        }
    }
}

pub(crate) fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> String {
    (2..)
        .map(|k| format!("{base}__v{k}"))
        .find(|c| !taken(c))
        .expect("unbounded")
}

/// Every identifier the sketch binds or mentions.
pub(crate) fn sketch_identifiers(anpl: &AnplProgram) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for f in &anpl.functions {
        out.insert(f.name.clone());
        out.extend(f.params.iter().cloned());
        if let FunctionBody::Block(stmts) = &f.body {
            collect_block_names(stmts, &mut out);
        }
    }
    out
}

fn collect_block_names(stmts: &[Stmt], out: &mut BTreeSet<String>) {
    for s in stmts {
        for e in s.own_exprs() {
            e.walk(&mut |sub| match sub {
                Expr::Name(n) => {
                    out.insert(n.clone());
                }
                Expr::HoleCall(h) => out.extend(h.args.iter().cloned()),
                _ => {}
            });
        }
        for b in s.blocks() {
            collect_block_names(b, out);
        }
    }
}

/// Rebuilds the ANPL text from a compiled module alone: fill blocks are cut,
/// calls to inline-hole fills become hole calls again and named-hole
/// definitions are put back. Equal to `program.anpl.render()` for every
/// program this module produces.
pub fn recover_sketch(program: &CompiledProgram) -> String {
    let src = &program.target_source;
    let body_start = src
        .match_indices("\ndef ")
        .map(|(i, _)| i + 1)
        .next()
        .or_else(|| src.starts_with("def ").then_some(0))
        .unwrap_or(src.len());
    let body_end = src[body_start..]
        .find(&format!("\n{FILL_MARKER}"))
        .map(|i| body_start + i + 1)
        .unwrap_or(src.len());
    let section = &src[body_start..body_end];

    let holes = program.anpl.holes();
    let mut inline_desc: HashMap<&str, &str> = HashMap::new();
    for h in &holes {
        if h.auto_label.is_some() {
            if let Some(name) = program.fill_map.get(&h.id) {
                inline_desc.insert(name.as_str(), h.description.as_str());
            }
        }
    }
    let mut reverted = String::with_capacity(section.len());
    match lex::tokenize(section) {
        Ok(toks) => {
            let mut last = 0;
            for (i, t) in toks.iter().enumerate() {
                if t.kind != TokKind::Name || !toks.get(i + 1).is_some_and(|n| n.is_op("(")) {
                    continue;
                }
                if i > 0 && (toks[i - 1].is_op(".") || toks[i - 1].is_name("def")) {
                    continue;
                }
                if let Some(desc) = inline_desc.get(t.text.as_str()) {
                    reverted.push_str(&section[last..t.start]);
                    reverted.push_str(&lex::quote_string(desc));
                    last = t.end;
                }
            }
            reverted.push_str(&section[last..]);
        }
        Err(_) => reverted.push_str(section),
    }

    let items: Vec<String> = target::scan_module(&reverted)
        .map(|m| {
            m.items
                .into_iter()
                .filter(|i| matches!(i.kind, ItemKind::Function(_)))
                .map(|i| i.text)
                .collect()
        })
        .unwrap_or_default();
    let mut items = items.into_iter();
    let mut parts = Vec::new();
    for f in &program.anpl.functions {
        if f.is_hole() && program.fill_map.contains_key(&f.name) {
            parts.push(render_function(f, HoleMode::Anpl));
        } else if let Some(text) = items.next() {
            parts.push(text);
        }
    }
    parts.extend(items);
    parts.join("\n")
}
