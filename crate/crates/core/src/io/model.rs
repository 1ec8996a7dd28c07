//! Trained models as JSON. Floats are written with round-trip precision, so a
//! reloaded model predicts bit-for-bit what the saved one did.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::nn::Network;
use crate::surrogate::Model;

const FORMAT: &str = "gridflow-model";
const VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a> {
    format: &'a str,
    version: u32,
    model: &'a Model,
}

#[derive(Deserialize)]
struct Owned {
    format: String,
    version: u32,
    model: Model,
}

pub fn model_to_json(model: &Model) -> String {
    serde_json::to_string(&Envelope { format: FORMAT, version: VERSION, model }).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<Model, IoError> {
    let env: Owned = serde_json::from_str(text).map_err(|e| IoError::SchemaMismatch(format!("model file: {e}")))?;
    if env.format != FORMAT || env.version != VERSION {
        return Err(IoError::SchemaMismatch(format!("unsupported model format {} v{}", env.format, env.version)));
    }
    let m = env.model;
    // rebuild the layer chain so inconsistent weights or shapes are caught here
    let mut net = Network::new(m.network.input.len());
    for layer in m.network.layers.clone() {
        net = net.push(layer).map_err(|e| IoError::SchemaMismatch(format!("model network: {e}")))?;
    }
    for layer in &net.layers {
        use crate::nn::Layer;
        let ok = match layer {
            Layer::Dense(d) => d.w.len() == d.inputs * d.outputs && d.b.len() == d.outputs,
            Layer::Conv2d(c) => c.w.len() == c.filters * c.input.c * c.k1 * c.k2 && c.b.len() == c.filters,
            Layer::Rbf(r) => r.centers.len() == r.dim * r.sigmas.len(),
            _ => true,
        };
        if !ok {
            return Err(IoError::SchemaMismatch(format!("model layer {} has the wrong number of weights", layer.name())));
        }
    }
    let (nx, ny) = (m.x_names.len(), m.y_names.len());
    if net.input.len() != nx || net.outputs() != ny || m.x_norm.len() != nx || m.y_norm.len() != ny {
        return Err(IoError::SchemaMismatch(format!("model network is {}→{} but names are {nx}→{ny}", net.input.len(), net.outputs())));
    }
    Ok(m)
}

pub fn write_model(model: &Model, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, model_to_json(model))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<Model, IoError> {
    model_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;
    use crate::pf::SolveOptions;
    use crate::scenario::{generate_dataset, ScenarioConfig};
    use crate::surrogate::{evaluate, train, ArchitectureSpec, Family, TrainConfig};

    #[test]
    fn round_trip_predicts_identically() {
        let cfg = ScenarioConfig { horizon: 96, noise: 0.05, ..Default::default() };
        let ds = generate_dataset(&assets::ieee4(), &cfg, &SolveOptions::default()).unwrap().0;
        for family in Family::ALL {
            let tc = TrainConfig { epochs: 2, batch: 16, ..TrainConfig::desk(family, 3) };
            let mut m = crate::surrogate::Model::new(ArchitectureSpec::standard(family, ds.nx(), ds.ny()), &ds, tc).unwrap();
            train(&mut m, &ds, |_, _| {}).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("m.model.json");
            write_model(&m, &p).unwrap();
            let mut back = read_model(&p).unwrap();
            assert_eq!(evaluate(&mut m, &ds, &ds.test).unwrap(), evaluate(&mut back, &ds, &ds.test).unwrap());
            assert_eq!(back.loss_history, m.loss_history);
        }
    }

    #[test]
    fn malformed_files_rejected() {
        assert!(matches!(model_from_json("{"), Err(IoError::SchemaMismatch(_))));
        assert!(matches!(model_from_json("{\"format\":\"x\",\"version\":1}"), Err(IoError::SchemaMismatch(_))));
        let cfg = ScenarioConfig { horizon: 24, noise: 0.05, ..Default::default() };
        let ds = generate_dataset(&assets::ieee4(), &cfg, &SolveOptions::default()).unwrap().0;
        let m = crate::surrogate::Model::new(ArchitectureSpec::standard(Family::Mlp, ds.nx(), ds.ny()), &ds, TrainConfig::desk(Family::Mlp, 1)).unwrap();
        let text = model_to_json(&m);
        let truncated_weights = text.replacen("\"w\":[", "\"w\":[0.5,", 1);
        assert!(matches!(model_from_json(&truncated_weights), Err(IoError::SchemaMismatch(_))));
        let renamed = text.replacen("\"V:1:a\"", "\"V:9:a\"", 1);
        assert!(model_from_json(&renamed).is_ok());
    }
}
