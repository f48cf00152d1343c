//! Resynthesis under input-output constraints: one batched request, every
//! candidate executed against the stored examples, first passer wins.

use crate::callgraph::Epoch;
use crate::compiler::{build_prompt, Assembly, CompiledProgram};
use crate::diff::EditDelta;
use crate::harness::{ExecRequest, ExecStatus, Harness, HarnessError};
use crate::llm::{ChatModel, ChatRequest, LlmError};
use crate::sketch::{AnplProgram, HoleId};
use crate::value::Value;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const BATCH_SIZE: u32 = 10;
pub const RESYNTH_TEMPERATURE: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoConstraint {
    pub hole_id: HoleId,
    pub input: Vec<Value>,
    pub expected_output: Value,
}

/// Per-hole constraint sets, in insertion order without duplicates.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConstraintStore {
    sets: BTreeMap<HoleId, Vec<IoConstraint>>,
}

impl ConstraintStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false when the constraint was already present.
    pub fn add(&mut self, anpl: &AnplProgram, c: IoConstraint) -> Result<bool, ResynthError> {
        if anpl.hole(&c.hole_id).is_none() {
            return Err(ResynthError::UnknownHole(c.hole_id));
        }
        let set = self.sets.entry(c.hole_id.clone()).or_default();
        if set.contains(&c) {
            return Ok(false);
        }
        set.push(c);
        Ok(true)
    }

    pub fn get(&self, hole_id: &str) -> &[IoConstraint] {
        self.sets.get(hole_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.sets.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Follows holes across an edit: reused holes keep their examples under
    /// their new id, everything else is dropped.
    pub fn remap(&mut self, delta: &EditDelta) {
        let old = std::mem::take(&mut self.sets);
        for (new_id, old_id) in &delta.reused {
            if let Some(set) = old.get(old_id) {
                let moved = set
                    .iter()
                    .map(|c| IoConstraint {
                        hole_id: new_id.clone(),
                        ..c.clone()
                    })
                    .collect();
                self.sets.insert(new_id.clone(), moved);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub candidate_index: usize,
    pub constraint_index: usize,
    pub status: CandidateStatus,
    pub detail: String,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ResynthError {
    #[error("unknown hole `{0}`")]
    UnknownHole(HoleId),
    #[error("no constraints stored for `{0}`")]
    NoConstraints(HoleId),
    #[error("none of the candidates satisfies every constraint")]
    NoCandidatePasses { report: Vec<CandidateReport> },
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resynthesis {
    pub program: CompiledProgram,
    pub selected: usize,
    pub report: Vec<CandidateReport>,
}

/// Regenerates the fill of `hole_id`. The new fill is spliced under the old
/// entry name so the sketch stays byte-identical.
pub fn resynthesize(
    program: &CompiledProgram,
    hole_id: &str,
    constraints: &[IoConstraint],
    llm: &dyn ChatModel,
    harness: &dyn Harness,
) -> Result<Resynthesis, ResynthError> {
    let hole = program.anpl.hole(hole_id).ok_or_else(|| ResynthError::UnknownHole(hole_id.to_string()))?;
    if constraints.is_empty() {
        return Err(ResynthError::NoConstraints(hole_id.to_string()));
    }
    let mut base = Assembly::from_compiled(program);
    let old_entry = base.detach(hole_id);
    let (system, user) = build_prompt(&base.layout(), &hole);
    let resp = llm.complete(&ChatRequest::new(system, user, RESYNTH_TEMPERATURE, BATCH_SIZE))?;

    let scratch: Vec<Result<CompiledProgram, String>> = resp
        .completions
        .iter()
        .map(|text| {
            let mut asm = base.clone();
            asm.try_splice_as(&hole, text, Epoch::New, old_entry.as_deref())?;
            Ok(asm.into_compiled())
        })
        .collect();

    let rows: Vec<Result<Vec<CandidateReport>, HarnessError>> = std::thread::scope(|s| {
        let handles: Vec<_> = scratch
            .iter()
            .enumerate()
            .map(|(i, cand)| s.spawn(move || evaluate(i, cand, hole_id, constraints, harness)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("evaluation thread")).collect()
    });
    let mut report = Vec::new();
    let mut selected = None;
    for (i, r) in rows.into_iter().enumerate() {
        let r = r?;
        if selected.is_none() && r.iter().all(|row| row.status == CandidateStatus::Pass) {
            selected = Some(i);
        }
        report.extend(r);
    }
    match selected {
        Some(i) => Ok(Resynthesis {
            program: scratch[i].clone().expect("passing candidate was spliced"),
            selected: i,
            report,
        }),
        None => Err(ResynthError::NoCandidatePasses { report }),
    }
}

fn evaluate(
    index: usize,
    cand: &Result<CompiledProgram, String>,
    hole_id: &str,
    constraints: &[IoConstraint],
    harness: &dyn Harness,
) -> Result<Vec<CandidateReport>, HarnessError> {
    let row = |k: usize, status, detail: String| CandidateReport {
        candidate_index: index,
        constraint_index: k,
        status,
        detail,
    };
    let prog = match cand {
        Ok(p) => p,
        Err(reason) => {
            return Ok((0..constraints.len())
                .map(|k| row(k, CandidateStatus::Fail, format!("not spliced: {reason}")))
                .collect())
        }
    };
    let entry = prog.fill_map[hole_id].clone();
    constraints
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let res = harness.run(&ExecRequest::new(prog.target_source.clone(), entry.clone(), c.input.clone()))?;
            Ok(match res.status {
                ExecStatus::Ok => {
                    let got = res.output.unwrap_or(Value::None);
                    if got.matches(&c.expected_output) {
                        row(k, CandidateStatus::Pass, "ok".into())
                    } else {
                        row(k, CandidateStatus::Fail, format!("expected {}, got {got}", c.expected_output))
                    }
                }
                ExecStatus::Fault => row(k, CandidateStatus::Error, res.traceback.unwrap_or_default()),
                ExecStatus::Timeout => row(k, CandidateStatus::Error, "timeout".into()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::compile;
    use crate::harness::{ExecResult, FnHarness};
    use crate::llm::MockModel;

    fn program() -> CompiledProgram {
        let anpl = AnplProgram::parse("def main(x):\n    return \"add three\"(x)\n").unwrap();
        compile(&anpl, &MockModel::new().with_sequence(["def add3(x):\n    return x + 2\n"])).unwrap()
    }

    // evaluates `return x + k` bodies without a real interpreter
    fn fake() -> FnHarness<impl Fn(&ExecRequest) -> Result<ExecResult, HarnessError>> {
        FnHarness(|req: &ExecRequest| {
            let src = &req.source;
            let at = src.find(&format!("def {}(x):\n    return x + ", req.entry)).expect("entry");
            let tail = &src[at..];
            let k: String = tail[tail.find("x + ").unwrap() + 4..].chars().take_while(|c| c.is_ascii_digit()).collect();
            if k == "0" {
                return Ok(ExecResult::fault("ZeroDivisionError"));
            }
            Ok(ExecResult::ok(Value::Int(req.args[0].as_int().unwrap() + k.parse::<i64>().unwrap())))
        })
    }

    #[test]
    fn first_passer_is_spliced_under_old_name() {
        let p = program();
        let mut batch: Vec<String> = (0..10).map(|i| format!("def cand(x):\n    return x + {}\n", i % 3)).collect();
        batch[4] = "def cand(x):\n    return x + 3\n".into();
        batch[7] = "def cand(x):\n    return x + 3\n".into();
        let llm = MockModel::new().with_batches(vec![batch]);
        let cs = vec![IoConstraint {
            hole_id: "main@0".into(),
            input: vec![Value::Int(1)],
            expected_output: Value::Int(4),
        }];
        let r = resynthesize(&p, "main@0", &cs, &llm, &fake()).unwrap();
        assert_eq!(llm.call_count(), 1);
        assert_eq!(llm.calls()[0].n_completions, 10);
        assert_eq!(llm.calls()[0].temperature, 0.8);
        assert_eq!(r.selected, 4);
        assert_eq!(r.report[0].status, CandidateStatus::Error);
        assert_eq!(r.report[1].status, CandidateStatus::Fail);
        assert_eq!(r.report[4].status, CandidateStatus::Pass);
        assert_eq!(r.program.fill_map["main@0"], "add3");
        assert!(r.program.target_source.contains("def add3(x):\n    return x + 3\n"));
        assert!(!r.program.target_source.contains("x + 2"));
    }

    #[test]
    fn nothing_passes() {
        let p = program();
        let batch: Vec<String> = (0..10).map(|_| "def cand(x):\n    return x + 1\n".to_string()).collect();
        let llm = MockModel::new().with_batches(vec![batch]);
        let cs = vec![IoConstraint {
            hole_id: "main@0".into(),
            input: vec![Value::Int(1)],
            expected_output: Value::Int(4),
        }];
        match resynthesize(&p, "main@0", &cs, &llm, &fake()) {
            Err(ResynthError::NoCandidatePasses { report }) => assert_eq!(report.len(), 10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn store_semantics() {
        let p = program();
        let mut s = ConstraintStore::new();
        let c = |v| IoConstraint {
            hole_id: "main@0".into(),
            input: vec![Value::Int(v)],
            expected_output: Value::Int(v + 3),
        };
        assert!(s.add(&p.anpl, c(1)).unwrap());
        assert!(s.add(&p.anpl, c(2)).unwrap());
        assert!(!s.add(&p.anpl, c(1)).unwrap());
        assert_eq!(s.get("main@0").len(), 2);
        let bad = IoConstraint {
            hole_id: "gone".into(),
            ..c(1)
        };
        assert!(matches!(s.add(&p.anpl, bad), Err(ResynthError::UnknownHole(_))));
    }
}
