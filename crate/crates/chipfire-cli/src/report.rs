//! Machine-readable run reports. The JSON form is deterministic for
//! identical inputs — field order is fixed and maps are sorted — except
//! for the top-level `elapsed_ms`, which callers exclude when comparing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub input_digest: String,
    pub elapsed_ms: u64,
    pub limits: LimitFlags,
    pub result: ReportPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitFlags {
    pub node_budget: u64,
    pub exceeded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportPayload {
    Info {
        vertices: u64,
        edges: u64,
        loop_free: bool,
        strongly_connected: bool,
        eulerian: bool,
        pigeonhole_bound: u64,
    },
    Period {
        #[serde(rename = "v_G")]
        v_g: BTreeMap<String, u64>,
        #[serde(rename = "P")]
        p: u64,
    },
    Exact {
        method: String,
        c: u64,
        optimal_sequence: Option<Vec<String>>,
        witness: Option<BTreeMap<String, u64>>,
        witness_verified: bool,
        nodes: u64,
        single_vertex_convention: bool,
    },
    Bound {
        heuristic: String,
        bound: u64,
        sequence: Vec<String>,
        trace: Vec<(u32, u64)>,
    },
    Witness {
        c: u64,
        witness: BTreeMap<String, u64>,
        verified: bool,
        optimal_sequence: Vec<String>,
    },
    Gen {
        n: u64,
        max_mult: u64,
        density: f64,
        seed: u64,
        graph: String,
    },
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
