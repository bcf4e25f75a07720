//! Two-phase pipeline on the damped-chain beam surrogate: a fixed Bernstein
//! basis fit, then compression to several reduced orders.
//!
//! Run with `cargo run --release --example beam_pipeline`.

use parafit::bench::{imag_log_grid, lin_grid, log_grid, sample_model, ChainSpec, ParametricSystem};
use parafit::compress::{compress, IrkaConfig};
use parafit::coupled::{fit_fixed_basis, Phase1Config};
use parafit::metrics::rel_h2_band;
use parafit::{ParametricBasis, Result, C64};

fn params(lo: f64, hi: f64, n: usize) -> Vec<C64> {
    lin_grid(lo, hi, n).into_iter().map(|p| C64::new(p, 0.0)).collect()
}

/// Worst band-limited relative H2 error over the validation parameters.
fn worst<F>(eval: F, truth: &ChainSpec, validation: &[C64], omegas: &[f64]) -> Result<f64>
where
    F: Fn(C64, C64) -> Result<C64>,
{
    let mut w = 0.0f64;
    for p in validation {
        w = w.max(rel_h2_band(|s| eval(s, *p), |s| truth.eval(s, *p), omegas)?);
    }
    Ok(w)
}

fn main() -> Result<()> {
    let truth = ChainSpec { n: 200 };
    let omegas = log_grid(1e-3, 1e3, 400);
    let validation = params(0.01, 0.8, 50);

    // Phase 1 at the small sampling counts.
    let data = sample_model(&truth, &imag_log_grid(1e-3, 1e3, 80), &params(0.01, 0.8, 10))?;
    let mut cfg = Phase1Config::uniform(10, ParametricBasis::bernstein(5, 0.01, 0.8)?);
    cfg.enforce_real = true;
    let fit = fit_fixed_basis(&data, &cfg)?;
    let e1 = worst(|s, p| fit.model.eval(s, p), &truth, &validation, &omegas)?;
    println!("phase 1 (m_p=10, nu=10, r_p=6): training {:.3e}, worst validation H2 {e1:.3e}", fit.rel_residual);

    // Richer intermediate model, then compression.
    let data = sample_model(&truth, &imag_log_grid(1e-3, 1e3, 200), &params(0.01, 0.8, 20))?;
    let mut cfg = Phase1Config::uniform(25, ParametricBasis::bernstein(19, 0.01, 0.8)?);
    cfg.enforce_real = true;
    let inter = fit_fixed_basis(&data, &cfg)?;
    let ei = worst(|s, p| inter.model.eval(s, p), &truth, &validation, &omegas)?;
    println!(
        "intermediate (m_p=20, nu=25, r_p=20, n_s={}): training {:.3e}, worst validation H2 {ei:.3e}",
        inter.model.order(),
        inter.rel_residual
    );
    for n_red in [10, 20, 30] {
        let c = compress(&inter.model, &IrkaConfig::new(n_red))?;
        let e = worst(|s, p| c.model.eval(s, p), &truth, &validation, &omegas)?;
        println!(
            "n_red={n_red}: joint error vs intermediate {:.3e} (relative {:.3e}), IRKA iterations {} converged {}, worst validation H2 {e:.3e}",
            c.error,
            c.error / c.input_norm,
            c.report.iterations,
            c.report.converged
        );
    }
    Ok(())
}
