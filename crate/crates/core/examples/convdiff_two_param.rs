//! Two-parameter fit of the convection-diffusion model on a 6x6 parameter
//! grid, followed by compression of the tensor-basis model.
//!
//! Run with `cargo run --release --example convdiff_two_param`.

use parafit::bench::{imag_log_grid, lin_grid, log_grid, sample_model2, ConvDiffSpec, ParametricSystem2};
use parafit::compress::IrkaConfig;
use parafit::metrics::rel_h2_band;
use parafit::multiparam::{compress_two_param, fit_two_param, TwoParamConfig};
use parafit::{ParametricBasis, Result, C64};

fn main() -> Result<()> {
    let truth = ConvDiffSpec::with_size(20);
    let grid = lin_grid(0.0, 1.0, 6);
    let data = sample_model2(&truth, &imag_log_grid(1e2, 1e6, 100), &grid, &grid)?;

    let basis = ParametricBasis::monomial(5, 0.0, 1.0)?;
    let mut cfg = TwoParamConfig::new(10, basis.clone(), basis);
    cfg.enforce_real = true;
    let fit = fit_two_param(&data, &cfg)?;
    println!(
        "{} local models, n_s = {}, training relative residual {:.3e}",
        fit.model.local_models().len(),
        fit.model.order(),
        fit.rel_residual
    );

    let omegas = log_grid(1e2, 1e6, 300);
    let off_grid = [(0.1, 0.9), (0.5, 0.5), (0.93, 0.27)];
    for (p, q) in off_grid {
        let e = rel_h2_band(
            |s| fit.model.eval(s, C64::new(p, 0.0), C64::new(q, 0.0)),
            |s| truth.eval2(s, p, q),
            &omegas,
        )?;
        println!("off-grid (p, q) = ({p}, {q}): relative H2 error {e:.3e}");
    }

    let c = compress_two_param(&fit.model, &IrkaConfig::new(12))?;
    println!(
        "compressed to order 12: joint error {:.3e} relative to the intermediate model",
        c.error / c.input_norm
    );
    Ok(())
}
