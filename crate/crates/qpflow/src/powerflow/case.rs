//! Network case files: buses, branches, generators, all in per-unit.
//!
//! The JSON schema is
//!
//! ```json
//! {
//!   "base_mva": 100.0,
//!   "buses":    [{"id": 0, "kind": "slack", "p_load": 0.0, "q_load": 0.0,
//!                 "v_set": 1.05, "shunt_b": 0.0}, ...],
//!   "branches": [{"from": 0, "to": 1, "r": 0.01, "x": 0.1,
//!                 "b_charge": 0.02, "tap": 1.0}, ...],
//!   "gens":     [{"bus": 0, "p_gen": 1.0, "q_gen": 0.0,
//!                 "is_renewable": false, "p_max": 2.0}, ...]
//! }
//! ```
//!
//! `b_charge`, `tap`, `shunt_b`, and `q_gen` may be omitted and default to
//! 0, 1, 0, 0. `v_set` is required on slack and pv buses and ignored on pq
//! buses. Bus ids must be the contiguous range `0..n-1`.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Bus category: which pair of quantities the bus fixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    /// Fixes (V, phi); absorbs the network residual.
    Slack,
    /// Fixes (P, V).
    Pv,
    /// Fixes (P, Q).
    Pq,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub kind: BusKind,
    /// Active demand, p.u. on the system base.
    pub p_load: f64,
    /// Reactive demand, p.u.
    pub q_load: f64,
    /// Voltage setpoint magnitude, p.u.; slack and pv buses only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_set: Option<f64>,
    /// Shunt susceptance at the bus, p.u.
    #[serde(default)]
    pub shunt_b: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    /// Series resistance, p.u.
    pub r: f64,
    /// Series reactance, p.u.; must be nonzero.
    pub x: f64,
    /// Total line-charging susceptance, p.u. (split half per end).
    #[serde(default)]
    pub b_charge: f64,
    /// Off-nominal tap ratio on the `from` side; 1.0 when absent.
    #[serde(default = "default_tap")]
    pub tap: f64,
}

fn default_tap() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Generator {
    pub bus: usize,
    /// Active output, p.u.
    pub p_gen: f64,
    /// Reactive output, p.u.
    #[serde(default)]
    pub q_gen: f64,
    #[serde(default)]
    pub is_renewable: bool,
    /// Nameplate capacity, p.u.
    pub p_max: f64,
}

/// A validated AC network case in per-unit on `base_mva`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerCase {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub gens: Vec<Generator>,
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("malformed case JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("could not read case file: {0}")]
    Io(#[from] std::io::Error),
    #[error("base_mva must be positive and finite, got {0}")]
    BadBase(f64),
    #[error("case has {0} buses; at least 2 required")]
    TooFewBuses(usize),
    #[error("bus ids must be the contiguous range 0..{n}; bus {pos} has id {id}")]
    BadBusId { pos: usize, id: usize, n: usize },
    #[error("no slack bus defined")]
    NoSlack,
    #[error("multiple slack buses: ids {0:?}")]
    MultipleSlack(Vec<usize>),
    #[error("bus {id}: {what}")]
    BadBus { id: usize, what: String },
    #[error("branch {index} ({from}-{to}): {what}")]
    BadBranch {
        index: usize,
        from: usize,
        to: usize,
        what: String,
    },
    #[error("branch {index} references missing bus {id}")]
    DanglingBranch { index: usize, id: usize },
    #[error("generator {index} references missing bus {id}")]
    DanglingGen { index: usize, id: usize },
    #[error("generator {index} at bus {bus}: {what}")]
    BadGen {
        index: usize,
        bus: usize,
        what: String,
    },
}

impl PowerCase {
    /// Parses and validates a case from JSON text.
    pub fn from_json_str(text: &str) -> Result<Self, CaseError> {
        let case: PowerCase = serde_json::from_str(text)?;
        case.validate()?;
        Ok(case)
    }

    /// Parses and validates a case file.
    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self, CaseError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    pub fn n_branch(&self) -> usize {
        self.branches.len()
    }

    /// Index of the unique slack bus. Panics on an unvalidated case.
    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated case has a slack bus")
    }

    /// Total base active load, p.u.
    pub fn total_p_load(&self) -> f64 {
        self.buses.iter().map(|b| b.p_load).sum()
    }

    /// Enforces every structural invariant; errors carry the offending
    /// bus id or record index.
    pub fn validate(&self) -> Result<(), CaseError> {
        if !(self.base_mva.is_finite() && self.base_mva > 0.0) {
            return Err(CaseError::BadBase(self.base_mva));
        }
        let n = self.buses.len();
        if n < 2 {
            return Err(CaseError::TooFewBuses(n));
        }
        for (pos, bus) in self.buses.iter().enumerate() {
            if bus.id != pos {
                return Err(CaseError::BadBusId {
                    pos,
                    id: bus.id,
                    n,
                });
            }
        }
        let slack_ids: Vec<usize> = self
            .buses
            .iter()
            .filter(|b| b.kind == BusKind::Slack)
            .map(|b| b.id)
            .collect();
        match slack_ids.len() {
            0 => return Err(CaseError::NoSlack),
            1 => {}
            _ => return Err(CaseError::MultipleSlack(slack_ids)),
        }
        for bus in &self.buses {
            let bad = |what: String| CaseError::BadBus { id: bus.id, what };
            if !(bus.p_load.is_finite() && bus.q_load.is_finite() && bus.shunt_b.is_finite()) {
                return Err(bad("non-finite load or shunt".into()));
            }
            match (bus.kind, bus.v_set) {
                (BusKind::Slack | BusKind::Pv, None) => {
                    return Err(bad("v_set required on slack/pv buses".into()));
                }
                (BusKind::Slack | BusKind::Pv, Some(v)) if !(v.is_finite() && v > 0.0) => {
                    return Err(bad(format!("v_set must be positive, got {v}")));
                }
                _ => {}
            }
        }
        for (index, br) in self.branches.iter().enumerate() {
            let bad = |what: String| CaseError::BadBranch {
                index,
                from: br.from,
                to: br.to,
                what,
            };
            for id in [br.from, br.to] {
                if id >= n {
                    return Err(CaseError::DanglingBranch { index, id });
                }
            }
            if br.from == br.to {
                return Err(bad("self-loop".into()));
            }
            if !br.r.is_finite() || br.r < 0.0 {
                return Err(bad(format!("r must be finite and >= 0, got {}", br.r)));
            }
            if !br.x.is_finite() || br.x == 0.0 {
                return Err(bad(format!("x must be finite and nonzero, got {}", br.x)));
            }
            if !br.b_charge.is_finite() {
                return Err(bad("non-finite b_charge".into()));
            }
            if !(br.tap.is_finite() && br.tap > 0.0) {
                return Err(bad(format!("tap must be positive, got {}", br.tap)));
            }
        }
        for (index, g) in self.gens.iter().enumerate() {
            if g.bus >= n {
                return Err(CaseError::DanglingGen { index, id: g.bus });
            }
            let bad = |what: String| CaseError::BadGen {
                index,
                bus: g.bus,
                what,
            };
            if !(g.p_gen.is_finite() && g.q_gen.is_finite() && g.p_max.is_finite()) {
                return Err(bad("non-finite generator data".into()));
            }
            if g.p_max < 0.0 {
                return Err(bad(format!("p_max must be >= 0, got {}", g.p_max)));
            }
            if g.is_renewable && !(0.0..=g.p_max).contains(&g.p_gen) {
                return Err(bad(format!(
                    "renewable output {} outside [0, p_max={}]",
                    g.p_gen, g.p_max
                )));
            }
        }
        Ok(())
    }
}
