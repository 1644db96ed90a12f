//! Small fixtures shared by unit tests: a two-bus case and a toy model.

use crate::model::Model;
use crate::powerflow::{Branch, Bus, BusKind, Generator, Norms, PowerCase, Sample};

pub(crate) fn two_bus_case() -> PowerCase {
    PowerCase {
        base_mva: 100.0,
        buses: vec![
            Bus {
                id: 0,
                kind: BusKind::Slack,
                p_load: 0.0,
                q_load: 0.0,
                v_set: Some(1.02),
                shunt_b: 0.0,
            },
            Bus {
                id: 1,
                kind: BusKind::Pq,
                p_load: 0.4,
                q_load: 0.15,
                v_set: None,
                shunt_b: 0.0,
            },
        ],
        branches: vec![Branch {
            from: 0,
            to: 1,
            r: 0.03,
            x: 0.1,
            b_charge: 0.0,
            tap: 1.0,
        }],
        gens: vec![Generator {
            bus: 0,
            p_gen: 0.4,
            q_gen: 0.0,
            is_renewable: false,
            p_max: 1.0,
        }],
    }
}

/// States with mild per-sample variation so fitted scales stay small.
pub(crate) fn two_bus_samples() -> Vec<Sample> {
    [
        (1.021, 0.98, -0.033),
        (1.019, 1.00, -0.031),
        (1.022, 0.96, -0.036),
        (1.018, 1.01, -0.030),
    ]
    .iter()
    .map(|&(v0, v1, phi1)| Sample {
        input: vec![v0, v1, 0.0005, phi1],
        target: vec![v0, v1, 0.0005, phi1, 0.39, 0.17],
    })
    .collect()
}

/// A 2-qubit, 1-layer hybrid on the two-bus case (36 parameters).
pub(crate) fn two_bus_model() -> Model {
    Model::new_hybrid(two_bus_case(), Norms::fit(&two_bus_samples()), 2, 1).unwrap()
}
