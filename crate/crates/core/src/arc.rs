//! ARC tasks: color grids, loading and checking programs against pairs.

use crate::compiler::CompiledProgram;
use crate::harness::{ExecRequest, ExecStatus, Harness, HarnessError};
use crate::sketch::ENTRY_NAME;
use crate::value::Value;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

pub const MAX_DIM: usize = 30;
pub const COLORS: [&str; 10] = ["black", "blue", "red", "green", "yellow", "grey", "pink", "orange", "teal", "maroon"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Grid {
    cells: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[serde(tag = "error")]
pub enum ArcError {
    #[error("schema error: {message}")]
    Schema { message: String },
    #[error("{at}: cell ({row}, {col}) = {value} is not a color 0-9")]
    CellRange { at: String, row: usize, col: usize, value: i64 },
    #[error("{at}: {height}x{width} grid outside 1..=30 or ragged")]
    DimRange { at: String, height: usize, width: usize },
    #[error("cannot read task: {message}")]
    Io { message: String },
}

impl Grid {
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Grid, ArcError> {
        Grid::from_ints(rows.into_iter().map(|r| r.into_iter().map(i64::from).collect()).collect(), "grid")
    }

    /// Validates dimensions and cell range; `at` names the grid in errors.
    pub fn from_ints(rows: Vec<Vec<i64>>, at: &str) -> Result<Grid, ArcError> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if !(1..=MAX_DIM).contains(&height) || !(1..=MAX_DIM).contains(&width) || rows.iter().any(|r| r.len() != width) {
            return Err(ArcError::DimRange {
                at: at.to_string(),
                height,
                width: rows.iter().map(Vec::len).max().unwrap_or(0),
            });
        }
        let mut cells = Vec::with_capacity(height);
        for (row, r) in rows.into_iter().enumerate() {
            let mut out = Vec::with_capacity(width);
            for (col, value) in r.into_iter().enumerate() {
                if !(0..=9).contains(&value) {
                    return Err(ArcError::CellRange {
                        at: at.to_string(),
                        row,
                        col,
                        value,
                    });
                }
                out.push(value as u8);
            }
            cells.push(out);
        }
        Ok(Grid { cells })
    }

    pub fn filled(height: usize, width: usize, color: u8) -> Result<Grid, ArcError> {
        Grid::new(vec![vec![color; width]; height])
    }

    pub fn height(&self) -> usize {
        self.cells.len()
    }

    pub fn width(&self) -> usize {
        self.cells[0].len()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<u8> {
        self.cells.get(row)?.get(col).copied()
    }

    pub fn set(&mut self, row: usize, col: usize, color: u8) {
        assert!(color <= 9, "color out of range");
        self.cells[row][col] = color;
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.cells
    }

    pub fn to_value(&self) -> Value {
        Value::grid(&self.cells)
    }

    pub fn from_value(v: &Value) -> Option<Result<Grid, ArcError>> {
        v.as_rows().map(|rows| Grid::from_ints(rows, "output"))
    }

    /// First differing cell when shapes agree.
    pub fn first_difference(&self, other: &Grid) -> Option<(usize, usize)> {
        self.cells
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, v)| (r, c, *v)))
            .find(|&(r, c, v)| other.cells[r][c] != v)
            .map(|(r, c, _)| (r, c))
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.cells {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<i64>>::deserialize(d)?;
        Grid::from_ints(rows, "grid").map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub input: Grid,
    pub output: Grid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArcTask {
    pub task_id: String,
    pub train: Vec<Pair>,
    pub test: Vec<Pair>,
}

impl ArcTask {
    /// Parses the standard layout `{"train": [{input, output}..], "test": [..]}`.
    pub fn from_json(task_id: &str, bytes: &[u8]) -> Result<ArcTask, ArcError> {
        let doc: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| schema(e.to_string()))?;
        let split = |name: &str| -> Result<Vec<Pair>, ArcError> {
            let list = doc
                .get(name)
                .and_then(|v| v.as_array())
                .ok_or_else(|| schema(format!("missing array `{name}`")))?;
            if list.is_empty() {
                return Err(schema(format!("`{name}` is empty")));
            }
            list.iter()
                .enumerate()
                .map(|(i, p)| {
                    let grid = |side: &str| -> Result<Grid, ArcError> {
                        let at = format!("{name}[{i}].{side}");
                        let v = p.get(side).ok_or_else(|| schema(format!("{at} missing")))?;
                        let rows: Vec<Vec<i64>> =
                            serde_json::from_value(v.clone()).map_err(|e| schema(format!("{at}: {e}")))?;
                        Grid::from_ints(rows, &at)
                    };
                    Ok(Pair {
                        input: grid("input")?,
                        output: grid("output")?,
                    })
                })
                .collect()
        };
        Ok(ArcTask {
            task_id: task_id.to_string(),
            train: split("train")?,
            test: split("test")?,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({"train": self.train, "test": self.test})
    }
}

fn schema(message: String) -> ArcError {
    ArcError::Schema { message }
}

/// Loads `<dir>/<id>.json` or a file path; the id is the file stem.
pub fn load_task(path: impl AsRef<Path>) -> Result<ArcTask, ArcError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| ArcError::Io {
        message: format!("{}: {e}", path.display()),
    })?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    ArcTask::from_json(&id, &bytes)
}

/// A directory of `<task_id>.json` files.
#[derive(Debug, Clone)]
pub struct TaskStore {
    pub dir: PathBuf,
}

impl TaskStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        TaskStore { dir: dir.into() }
    }

    pub fn get(&self, task_id: &str) -> Result<ArcTask, ArcError> {
        if task_id.is_empty() || !task_id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(ArcError::Io {
                message: format!("invalid task id `{task_id}`"),
            });
        }
        load_task(self.dir.join(format!("{task_id}.json")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairVerdict {
    pub split: Split,
    pub index: usize,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub train_pass: bool,
    pub test_pass: bool,
    pub pairs: Vec<PairVerdict>,
}

/// Compares an actual harness output with the expected grid.
pub fn compare(expected: &Grid, actual: &Value) -> Result<(), String> {
    let grid = match Grid::from_value(actual) {
        None => return Err(format!("output is not a grid: {actual}")),
        Some(Err(e)) => return Err(format!("output is not a valid grid: {e}")),
        Some(Ok(g)) => g,
    };
    if (grid.height(), grid.width()) != (expected.height(), expected.width()) {
        return Err(format!(
            "shape mismatch: expected {}x{}, got {}x{}",
            expected.height(),
            expected.width(),
            grid.height(),
            grid.width()
        ));
    }
    match expected.first_difference(&grid) {
        None => Ok(()),
        Some((r, c)) => Err(format!(
            "cell ({r}, {c}) differs: expected {}, got {}",
            expected.cells[r][c], grid.cells[r][c]
        )),
    }
}

/// Runs `main` on every pair's input and compares exactly.
pub fn check(program: &CompiledProgram, task: &ArcTask, harness: &dyn Harness) -> Result<Verdict, HarnessError> {
    check_source(&program.target_source, task, harness)
}

pub fn check_source(source: &str, task: &ArcTask, harness: &dyn Harness) -> Result<Verdict, HarnessError> {
    let mut pairs = Vec::new();
    for (split, list) in [(Split::Train, &task.train), (Split::Test, &task.test)] {
        for (index, pair) in list.iter().enumerate() {
            let req = ExecRequest::new(source, ENTRY_NAME, vec![pair.input.to_value()]);
            let res = harness.run(&req)?;
            let outcome = match res.status {
                ExecStatus::Timeout => Err(format!("timeout after {} ms", req.timeout_ms)),
                ExecStatus::Fault => Err(format!("runtime fault: {}", res.traceback.unwrap_or_default().trim_end())),
                ExecStatus::Ok => compare(&pair.output, res.output.as_ref().unwrap_or(&Value::None)),
            };
            pairs.push(PairVerdict {
                split,
                index,
                pass: outcome.is_ok(),
                detail: outcome.err().unwrap_or_else(|| "ok".into()),
            });
        }
    }
    let all = |s: Split| pairs.iter().filter(|p| p.split == s).all(|p| p.pass);
    Ok(Verdict {
        train_pass: all(Split::Train),
        test_pass: all(Split::Test),
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_task() {
        let t = ArcTask::from_json("t", br#"{"train":[{"input":[[0]],"output":[[1]]}],"test":[{"input":[[0]],"output":[[1]]}]}"#).unwrap();
        assert_eq!(t.train.len(), 1);
        assert_eq!(t.test[0].output.get(0, 0), Some(1));
    }

    #[test]
    fn cell_range_has_coordinates() {
        let e = ArcTask::from_json("t", br#"{"train":[{"input":[[0,10]],"output":[[1]]}],"test":[{"input":[[0]],"output":[[1]]}]}"#)
            .unwrap_err();
        assert_eq!(
            e,
            ArcError::CellRange {
                at: "train[0].input".into(),
                row: 0,
                col: 1,
                value: 10
            }
        );
    }

    #[test]
    fn dims() {
        assert!(matches!(Grid::new(vec![]), Err(ArcError::DimRange { .. })));
        assert!(matches!(Grid::new(vec![vec![0; 31]]), Err(ArcError::DimRange { .. })));
        assert!(matches!(Grid::new(vec![vec![0, 0], vec![0]]), Err(ArcError::DimRange { .. })));
        assert!(Grid::new(vec![vec![0; 30]; 30]).is_ok());
    }

    #[test]
    fn compare_details() {
        let g = Grid::new(vec![vec![1, 2], vec![3, 4]]).unwrap();
        assert!(compare(&g, &g.to_value()).is_ok());
        assert_eq!(compare(&g, &Value::grid(&[vec![1]])).unwrap_err(), "shape mismatch: expected 2x2, got 1x1");
        assert!(compare(&g, &Value::grid(&[vec![1, 2], vec![3, 5]])).unwrap_err().starts_with("cell (1, 1)"));
    }
}
