use serde::{Deserialize, Serialize};

/// One reported vulnerability.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Finding {
    /// Detector id, 1 to 10; 0 for findings from ad-hoc WQL programs.
    pub query: u8,
    pub kind: String,
    pub function: String,
    /// Offending call target or loop label.
    pub label: String,
    pub description: String,
    pub nodes: Vec<u32>,
}

impl Finding {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("finding serializes")
    }
}
