//! Published kinetic schemes for three receptors.
//!
//! Rates are in s⁻¹; sensitive rates are per unit input (relative light
//! intensity for ChR2, mol/ℓ for ACh and CaM).

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::model::{LabeledEdge, ModelParts, ReceptorModel, StateInfo};
use crate::{Error, Result};

pub const NAMES: [&str; 3] = ["chr2", "ach", "cam"];

pub fn builtin(name: &str) -> Result<ReceptorModel> {
    match name.to_ascii_lowercase().as_str() {
        "chr2" => Ok(chr2()),
        "ach" => Ok(ach()),
        "cam" => Ok(cam()),
        _ => Err(Error::UnknownModel(name.to_string())),
    }
}

fn build(
    states: &[(u32, &str)],
    edges: &[(u32, u32, f64, bool)],
    input_range: (f64, f64),
) -> ReceptorModel {
    let states: Vec<StateInfo> = states
        .iter()
        .map(|(label, property)| StateInfo {
            label: *label,
            property: property.to_string(),
        })
        .collect();
    let lump: BTreeMap<u32, String> = states
        .iter()
        .map(|s| (s.label, s.property.clone()))
        .collect();
    let edges = edges
        .iter()
        .map(|&(from, to, rate, sensitive)| LabeledEdge {
            from,
            to,
            rate,
            sensitive,
        })
        .collect();
    ReceptorModel::new(ModelParts {
        states,
        edges,
        input_range,
        lump: Some(lump),
    })
    .expect("built-in model is valid")
}

/// Channelrhodopsin-2: closed C1, open O2, desensitized C3; light drives 1→2.
pub fn chr2() -> ReceptorModel {
    build(
        &[(1, "closed"), (2, "open"), (3, "closed")],
        &[(1, 2, 5e3, true), (2, 3, 50.0, false), (3, 1, 17.0, false)],
        (0.0, 1.0),
    )
}

/// Nicotinic acetylcholine receptor, five states (O1, O2 open; C3–C5 closed).
pub fn ach() -> ReceptorModel {
    build(
        &[
            (1, "open"),
            (2, "open"),
            (3, "closed"),
            (4, "closed"),
            (5, "closed"),
        ],
        &[
            (1, 2, 5e8, true),
            (1, 4, 3e3, false),
            (2, 1, 0.66, false),
            (2, 3, 5e2, false),
            (3, 2, 1.5e4, false),
            (3, 4, 4e3, false),
            (4, 1, 15.0, false),
            (4, 3, 5e8, true),
            (4, 5, 2e3, false),
            (5, 4, 1e8, true),
        ],
        (1e-7, 1e-5),
    )
}

/// Calmodulin with two binding sites on each lobe. State `3c + n` has `c`
/// calcium ions on the C lobe and `n` on the N lobe; the tag records which
/// lobes are fully bound.
pub fn cam() -> ReceptorModel {
    const N_ON_T: f64 = 7.7e8;
    const N_OFF_T: f64 = 1.6e5;
    const N_ON_R: f64 = 3.2e10;
    const N_OFF_R: f64 = 2.2e4;
    const C_ON_T: f64 = 8.4e7;
    const C_OFF_T: f64 = 2.6e3;
    const C_ON_R: f64 = 2.5e7;
    const C_OFF_R: f64 = 6.5;
    build(
        &[
            (0, "∅"),
            (1, "∅"),
            (2, "N"),
            (3, "∅"),
            (4, "∅"),
            (5, "N"),
            (6, "C"),
            (7, "C"),
            (8, "NC"),
        ],
        &[
            (0, 1, N_ON_T, true),
            (3, 4, N_ON_T, true),
            (6, 7, N_ON_T, true),
            (1, 0, N_OFF_T, false),
            (4, 3, N_OFF_T, false),
            (7, 6, N_OFF_T, false),
            (1, 2, N_ON_R, true),
            (4, 5, N_ON_R, true),
            (7, 8, N_ON_R, true),
            (2, 1, N_OFF_R, false),
            (5, 4, N_OFF_R, false),
            (8, 7, N_OFF_R, false),
            (0, 3, C_ON_T, true),
            (1, 4, C_ON_T, true),
            (2, 5, C_ON_T, true),
            (3, 0, C_OFF_T, false),
            (4, 1, C_OFF_T, false),
            (5, 2, C_OFF_T, false),
            (3, 6, C_ON_R, true),
            (4, 7, C_ON_R, true),
            (5, 8, C_ON_R, true),
            (6, 3, C_OFF_R, false),
            (7, 4, C_OFF_R, false),
            (8, 5, C_OFF_R, false),
        ],
        (1e-7, 1e-6),
    )
}
