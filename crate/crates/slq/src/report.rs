//! Machine-readable run reports.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Backend;
use crate::ledger::QueryLedger;

/// One command's outcome in the stable JSON schema.
///
/// Field order is fixed by this declaration and the `result` object keeps
/// its keys sorted, so any two runs with the same inputs, flags, and seed
/// serialize byte-identically apart from `wall_time`.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub task: String,
    pub inputs_digest: String,
    pub result: serde_json::Value,
    pub eta: f64,
    pub delta: f64,
    pub backend: Backend,
    pub ledger: QueryLedger,
    pub seed: u64,
    /// Elapsed seconds; the one field reruns are allowed to differ in.
    pub wall_time: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }

    /// Plain-text rendering: one field per line, result keys inline.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("task: {}\n", self.task));
        if let serde_json::Value::Object(map) = &self.result {
            for (key, value) in map {
                out.push_str(&format!("{key}: {value}\n"));
            }
        } else {
            out.push_str(&format!("result: {}\n", self.result));
        }
        out.push_str(&format!(
            "eta: {}  delta: {}  backend: {}  seed: {}\n",
            self.eta, self.delta, self.backend, self.seed
        ));
        out.push_str(&format!(
            "queries: power={} bit={} qubits_peak={} classical_ops={}\n",
            self.ledger.power_queries,
            self.ledger.bit_queries,
            self.ledger.qubits_peak,
            self.ledger.classical_ops
        ));
        out.push_str(&format!("wall_time: {:.6}s\n", self.wall_time));
        out
    }
}

/// Hex SHA-256 over length-prefixed parts, so distinct part lists never
/// collide by concatenation.
pub fn digest_inputs(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        Report {
            task: "eigen".into(),
            inputs_digest: digest_inputs(&["eigen", "const:0"]),
            result: serde_json::json!({"lambda": 9.87, "extra": 1}),
            eta: 0.2,
            delta: 0.25,
            backend: Backend::Spectral,
            ledger: QueryLedger {
                power_queries: 117,
                bit_queries: 0,
                qubits_peak: 15,
                classical_ops: 42,
                verify_bit_queries: 0,
            },
            seed: 1,
            wall_time: 0.125,
        }
    }

    #[test]
    fn json_fields_appear_in_schema_order() {
        let text = sample().to_json();
        let order = [
            "\"task\"",
            "\"inputs_digest\"",
            "\"result\"",
            "\"eta\"",
            "\"delta\"",
            "\"backend\"",
            "\"ledger\"",
            "\"seed\"",
            "\"wall_time\"",
        ];
        let mut last = 0;
        for key in order {
            let pos = text.find(key).unwrap_or_else(|| panic!("missing {key}"));
            assert!(pos > last, "{key} out of order in {text}");
            last = pos;
        }
        assert!(!text.contains("verify_bit_queries"));
    }

    #[test]
    fn result_keys_are_sorted() {
        let text = sample().to_json();
        assert!(text.find("\"extra\"").unwrap() < text.find("\"lambda\"").unwrap());
    }

    #[test]
    fn digest_is_position_sensitive() {
        let a = digest_inputs(&["ab", "c"]);
        let b = digest_inputs(&["a", "bc"]);
        assert_ne!(a, b);
        assert_eq!(a.len(), 64);
        assert_eq!(a, digest_inputs(&["ab", "c"]));
    }

    #[test]
    fn text_rendering_mentions_the_ledger() {
        let text = sample().to_text();
        assert!(text.contains("power=117"));
        assert!(text.contains("lambda: 9.87"));
    }
}
