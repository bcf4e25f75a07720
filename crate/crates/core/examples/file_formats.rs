//! Dataset and model files: sample a benchmark, fit, write both files and
//! confirm that parsing and re-serializing reproduces them byte for byte.
//!
//! Run with `cargo run --release --example file_formats`.

use parafit::bench::{imag_log_grid, lin_grid, sample_model, ChainSpec};
use parafit::coupled::{fit_fixed_basis, Phase1Config};
use parafit::io::{dataset_to_json, model_from_json, model_to_json, dataset_from_json, DatasetFile, ModelFile};
use parafit::{ParametricBasis, Result, C64};

fn main() -> Result<()> {
    let params: Vec<C64> = lin_grid(0.05, 0.8, 5).into_iter().map(|p| C64::new(p, 0.0)).collect();
    let data = sample_model(&ChainSpec { n: 20 }, &imag_log_grid(1e-2, 1e2, 30), &params)?;
    let mut cfg = Phase1Config::uniform(6, ParametricBasis::bernstein(2, 0.05, 0.8)?);
    cfg.enforce_real = true;
    let model = fit_fixed_basis(&data, &cfg)?.model;

    let d = dataset_to_json(&DatasetFile::OneParam(data));
    let m = model_to_json(&ModelFile::Parametric(model));
    println!("dataset file: {} bytes, model file: {} bytes", d.len(), m.len());
    println!("model file starts with: {}...", &m[..m.find("\"basis\"").unwrap_or(80).min(120)]);
    assert_eq!(dataset_to_json(&dataset_from_json(&d)?), d);
    assert_eq!(model_to_json(&model_from_json(&m)?), m);
    println!("both files round-trip byte for byte");
    Ok(())
}
