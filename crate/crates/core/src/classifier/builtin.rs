//! Closed-form classifiers over small grids.
//!
//! A pixel is "on" when the mean of its normalised channel values exceeds 0.5.
//! Every builtin is a pure function of the on/off pattern, which makes exact
//! enumeration over ≤ 16-pixel grids practical.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Backend, RawScores};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::imagery::Shape;

const ON_THRESHOLD: f32 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BuiltinModel {
    /// Label 1 iff every listed pixel is on. One-hot confidences.
    And(Vec<usize>),
    /// Label 1 iff any listed pixel is on. One-hot confidences.
    Or(Vec<usize>),
    /// Label 1 iff any pixel of the grid is on.
    AnyOn,
    /// Label 1 iff the key pixel is on; every other pixel is irrelevant.
    KeyOnly(usize),
    /// Label 1 iff the key pixel is on. The winning class gets
    /// `0.5 + 0.5·k/n` where `k` counts the other pixels that are on and `n`
    /// is the grid size (`0.5 + 0.125·k` on a 2×2 grid). The remainder is
    /// split evenly over the two losing classes, so there are three classes.
    CountConf(usize),
    /// Label 1 iff at least `min_on` of the listed pixels are on. Graded
    /// confidence `0.5 + 0.5·(agreeing pixels)/(listed pixels)`.
    Threshold { pixels: Vec<usize>, min_on: usize },
}

impl BuiltinModel {
    pub fn class_count(&self) -> usize {
        match self {
            BuiltinModel::CountConf(_) => 3,
            _ => 2,
        }
    }

    fn referenced(&self) -> Vec<usize> {
        match self {
            BuiltinModel::And(ps) | BuiltinModel::Or(ps) => ps.clone(),
            BuiltinModel::Threshold { pixels, .. } => pixels.clone(),
            BuiltinModel::KeyOnly(k) | BuiltinModel::CountConf(k) => vec![*k],
            BuiltinModel::AnyOn => vec![],
        }
    }

    pub fn check_fits(&self, pixels: usize) -> Result<()> {
        if let Some(p) = self.referenced().into_iter().find(|p| *p >= pixels) {
            return Err(Error::Config(format!(
                "builtin {self} references pixel {p} but the grid has {pixels} pixels"
            )));
        }
        Ok(())
    }

    /// Evaluates the closed form on an on/off pattern.
    pub fn evaluate(&self, on: &[bool]) -> Vec<f64> {
        let one_hot = |label: bool| if label { vec![0.0, 1.0] } else { vec![1.0, 0.0] };
        match self {
            BuiltinModel::And(ps) => one_hot(ps.iter().all(|p| on[*p])),
            BuiltinModel::Or(ps) => one_hot(ps.iter().any(|p| on[*p])),
            BuiltinModel::AnyOn => one_hot(on.iter().any(|b| *b)),
            BuiltinModel::KeyOnly(k) => one_hot(on[*k]),
            BuiltinModel::CountConf(key) => {
                let n = on.len() as f64;
                let others = on.iter().enumerate().filter(|(i, b)| *i != *key && **b).count() as f64;
                let win = 0.5 + 0.5 * others / n;
                let rest = (1.0 - win) / 2.0;
                if on[*key] {
                    vec![rest, win, rest]
                } else {
                    vec![win, rest, rest]
                }
            }
            BuiltinModel::Threshold { pixels, min_on } => {
                let p = pixels.len() as f64;
                let m = pixels.iter().filter(|i| on[**i]).count();
                if m >= *min_on {
                    let c = 0.5 + 0.5 * m as f64 / p;
                    vec![1.0 - c, c]
                } else {
                    let c = 0.5 + 0.5 * (pixels.len() - m) as f64 / p;
                    vec![c, 1.0 - c]
                }
            }
        }
    }

    /// Per-pixel on/off pattern of a normalised HWC tensor.
    pub fn on_pattern(shape: Shape, tensor: &[f32]) -> Vec<bool> {
        let c = shape.channels;
        tensor
            .chunks_exact(c)
            .map(|px| px.iter().sum::<f32>() / c as f32 > ON_THRESHOLD)
            .collect()
    }
}

fn parse_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad pixel index {t:?}: {e}")))
        .collect()
}

fn join(ps: &[usize]) -> String {
    ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
}

impl FromStr for BuiltinModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let model = match s {
            "and2" => BuiltinModel::And(vec![0, 1]),
            "or2" => BuiltinModel::Or(vec![0, 1]),
            "count-conf" => BuiltinModel::CountConf(0),
            "p0-only" => BuiltinModel::KeyOnly(0),
            "any-on" => BuiltinModel::AnyOn,
            _ => {
                let (head, rest) = s
                    .split_once(':')
                    .ok_or_else(|| format!("unknown builtin classifier {s:?}"))?;
                match head {
                    "and" => BuiltinModel::And(parse_list(rest)?),
                    "or" => BuiltinModel::Or(parse_list(rest)?),
                    "key" => BuiltinModel::KeyOnly(rest.parse().map_err(|e| format!("{e}"))?),
                    "count-conf" => BuiltinModel::CountConf(rest.parse().map_err(|e| format!("{e}"))?),
                    "threshold" => {
                        let (k, list) = rest
                            .split_once(':')
                            .ok_or_else(|| format!("threshold needs <min_on>:<pixels>, got {rest:?}"))?;
                        BuiltinModel::Threshold {
                            min_on: k.parse().map_err(|e| format!("{e}"))?,
                            pixels: parse_list(list)?,
                        }
                    }
                    _ => return Err(format!("unknown builtin classifier {s:?}")),
                }
            }
        };
        match &model {
            BuiltinModel::And(ps) | BuiltinModel::Or(ps) if ps.is_empty() => {
                Err(format!("{s:?} lists no pixels"))
            }
            BuiltinModel::Threshold { pixels, min_on } if *min_on == 0 || *min_on > pixels.len() => {
                Err(format!("threshold {min_on} must be in 1..={}", pixels.len()))
            }
            _ => Ok(model),
        }
    }
}

impl fmt::Display for BuiltinModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinModel::And(ps) if ps == &[0, 1] => write!(f, "and2"),
            BuiltinModel::Or(ps) if ps == &[0, 1] => write!(f, "or2"),
            BuiltinModel::CountConf(0) => write!(f, "count-conf"),
            BuiltinModel::KeyOnly(0) => write!(f, "p0-only"),
            BuiltinModel::AnyOn => write!(f, "any-on"),
            BuiltinModel::And(ps) => write!(f, "and:{}", join(ps)),
            BuiltinModel::Or(ps) => write!(f, "or:{}", join(ps)),
            BuiltinModel::KeyOnly(k) => write!(f, "key:{k}"),
            BuiltinModel::CountConf(k) => write!(f, "count-conf:{k}"),
            BuiltinModel::Threshold { pixels, min_on } => write!(f, "threshold:{min_on}:{}", join(pixels)),
        }
    }
}

impl TryFrom<String> for BuiltinModel {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<BuiltinModel> for String {
    fn from(m: BuiltinModel) -> String {
        m.to_string()
    }
}

pub(crate) struct BuiltinBackend {
    model: BuiltinModel,
    execution: Execution,
}

impl BuiltinBackend {
    pub fn new(model: BuiltinModel, execution: Execution) -> Self {
        BuiltinBackend { model, execution }
    }
}

// below this many images the rayon overhead outweighs the work
const PARALLEL_MIN_BATCH: usize = 64;

impl Backend for BuiltinBackend {
    fn infer(&self, shape: Shape, tensors: &[Vec<f32>]) -> Result<Vec<RawScores>> {
        let eval = |t: &Vec<f32>| RawScores {
            reported_label: None,
            scores: self.model.evaluate(&BuiltinModel::on_pattern(shape, t)),
        };
        let exec = if tensors.len() >= PARALLEL_MIN_BATCH {
            self.execution
        } else {
            Execution::Sequential
        };
        Ok(exec.map(tensors, eval))
    }
}
