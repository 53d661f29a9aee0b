//! Shared certificate record for grid-checked claims.

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// `{op, params, grid_seed, grid_size, min_margin, status}` plus an optional
/// witness for the first failure found.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Certificate {
    pub op: String,
    pub params: Value,
    pub grid_seed: u64,
    pub grid_size: usize,
    pub min_margin: Option<f64>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}
