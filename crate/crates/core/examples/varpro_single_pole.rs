//! Variable projection on a single rational basis pole: data `g(s)/(p - 3)`
//! sampled for p in [0, 2], Gauss-Newton started at pi = 10.
//!
//! Run with `cargo run --release --example varpro_single_pole`.

use parafit::bench::{imag_log_grid, lin_grid};
use parafit::linalg::MatrixC;
use parafit::varpro::{fit_adaptive_basis, PoleCoordinates, VarproConfig};
use parafit::{FrequencyResponseDataset, PoleResidueModel, Result, C64};

fn main() -> Result<()> {
    let c = C64::new;
    let g = PoleResidueModel::new(vec![c(-1.0, 2.0), c(-1.0, -2.0)], vec![c(1.0, 0.5), c(1.0, -0.5)])?;
    let freqs = imag_log_grid(0.2, 10.0, 12);
    let params: Vec<C64> = lin_grid(0.0, 2.0, 9).into_iter().map(|p| c(p, 0.0)).collect();
    let h = MatrixC::from_fn(12, 9, |i, j| g.eval(freqs[i]).unwrap() / (params[j] - 3.0));
    let data = FrequencyResponseDataset::new(freqs, params, h, None, true)?;

    let fit = fit_adaptive_basis(&data, &[g], 1, Some(PoleCoordinates::real(vec![10.0])), &VarproConfig::default())?;
    println!("objective history:");
    for (k, f) in fit.report.objective_history.iter().enumerate() {
        println!("  {k:2}  {f:.6e}");
    }
    println!(
        "pi = {:.12} after {} iterations (converged {}), relative residual {:.2e}",
        fit.poles.real_poles[0], fit.report.iterations, fit.report.converged, fit.rel_residual
    );
    Ok(())
}
