//! JSON form of a gate sequence.

use serde::{Deserialize, Serialize};

use super::{CircuitSequence, GateKind, GateSpec, Route};
use crate::error::{Error, Result};

pub const SCHEMA: &str = "qqft-seq/1";

#[derive(Serialize, Deserialize)]
struct Document {
    schema: String,
    n_sites: usize,
    route: Route,
    depth: usize,
    gates: Vec<WireGate>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum WireGate {
    Swap { site: usize, step: usize },
    Mix { site: usize, step: usize, theta: f64, phi: f64 },
    Phase { site: usize, step: usize, lambda: f64 },
}

impl From<&GateSpec> for WireGate {
    fn from(g: &GateSpec) -> Self {
        let (site, step) = (g.site, g.step);
        match g.kind {
            GateKind::Swap => WireGate::Swap { site, step },
            GateKind::Mix { theta, phi } => WireGate::Mix { site, step, theta, phi },
            GateKind::Phase { lambda } => WireGate::Phase { site, step, lambda },
        }
    }
}

impl From<WireGate> for GateSpec {
    fn from(w: WireGate) -> Self {
        match w {
            WireGate::Swap { site, step } => GateSpec::swap(site, step),
            WireGate::Mix { site, step, theta, phi } => GateSpec::mix(site, theta, phi, step),
            WireGate::Phase { site, step, lambda } => GateSpec::phase(site, lambda, step),
        }
    }
}

pub(super) fn to_json(seq: &CircuitSequence) -> Result<String> {
    let doc = Document {
        schema: SCHEMA.to_string(),
        n_sites: seq.n_sites,
        route: seq.route,
        depth: seq.depth,
        gates: seq.gates.iter().map(WireGate::from).collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub(super) fn from_json(s: &str) -> Result<CircuitSequence> {
    let doc: Document = serde_json::from_str(s)?;
    if doc.schema != SCHEMA {
        return Err(Error::Schema(format!("expected schema {SCHEMA}, found {}", doc.schema)));
    }
    let seq = CircuitSequence::new(
        doc.n_sites,
        doc.route,
        doc.gates.into_iter().map(GateSpec::from).collect(),
    )?;
    if seq.depth != doc.depth {
        return Err(Error::Schema(format!(
            "declared depth {} but the gates span {} steps",
            doc.depth, seq.depth
        )));
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_generic_qqft, build_radix2_qqft};
    use proptest::prelude::*;

    #[test]
    fn builtin_sequences_roundtrip() {
        for seq in [build_radix2_qqft(3).unwrap(), build_generic_qqft(5).unwrap()] {
            let back = CircuitSequence::from_json(&seq.to_json().unwrap()).unwrap();
            assert_eq!(back, seq);
        }
    }

    #[test]
    fn wrong_schema_or_depth_rejected() {
        let s = build_radix2_qqft(2).unwrap().to_json().unwrap();
        assert!(matches!(
            CircuitSequence::from_json(&s.replace(SCHEMA, "other/9")),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            CircuitSequence::from_json(&s.replace("\"depth\": 5", "\"depth\": 6")),
            Err(Error::Schema(_))
        ));
        assert!(CircuitSequence::from_json("{").is_err());
    }

    fn arb_gate(n_sites: usize) -> impl Strategy<Value = (u8, usize, f64, f64)> {
        (0u8..3, 0..n_sites - 1, -3.0f64..3.0, -3.0f64..3.0)
    }

    proptest! {
        #[test]
        fn random_sequences_roundtrip(raw in prop::collection::vec(arb_gate(8), 0..40)) {
            // one gate per step keeps every random list valid
            let gates: Vec<GateSpec> = raw
                .into_iter()
                .enumerate()
                .map(|(step, (k, site, a, b))| match k {
                    0 => GateSpec::swap(site, step),
                    1 => GateSpec::mix(site, a, b, step),
                    _ => GateSpec::phase(site, a, step),
                })
                .collect();
            let seq = CircuitSequence::new(8, Route::Givens, gates).unwrap();
            let back = CircuitSequence::from_json(&seq.to_json().unwrap()).unwrap();
            prop_assert_eq!(back, seq);
        }
    }
}
