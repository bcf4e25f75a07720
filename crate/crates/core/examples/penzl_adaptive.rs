//! Adaptive rational basis versus fixed polynomial basis on the Penzl-type
//! benchmark with rational parameter dependence.
//!
//! Run with `cargo run --release --example penzl_adaptive`.

use parafit::bench::{imag_log_grid, lin_grid, log_grid, sample_model, ParametricSystem, Penzl, PenzlSpec};
use parafit::coupled::{fit_fixed_basis, fit_local_models, Phase1Config};
use parafit::metrics::rel_h2_band;
use parafit::varpro::{fit_adaptive_basis, PoleCoordinates, VarproConfig};
use parafit::vecfit::VfConfig;
use parafit::{ParametricBasis, C64};

fn main() -> parafit::Result<()> {
    let truth = Penzl::new(PenzlSpec::default())?;
    let freqs = imag_log_grid(1e-1, 1e5, 100);
    let params: Vec<C64> = lin_grid(1.0, 5.0, 8).into_iter().map(|p| C64::new(p, 0.0)).collect();
    let data = sample_model(&truth, &freqs, &params)?;

    let nu = 20;
    let poly = fit_fixed_basis(&data, &Phase1Config::uniform(nu, ParametricBasis::monomial(5, 1.0, 5.0)?))?;
    println!("polynomial basis: training residual {:.3e}", poly.rel_residual);

    let locals = fit_local_models(&data, &[nu], &VfConfig::new(nu), None)?;
    // Two real poles and two conjugate pairs, all outside [1, 5].
    let pi0 = PoleCoordinates {
        real_poles: vec![0.5, 5.5],
        pair_poles: vec![(2.5, 1.0), (3.5, 1.0)],
    };
    let cfg = VarproConfig {
        guard: Some(0.05),
        ..VarproConfig::default()
    };
    let adaptive = fit_adaptive_basis(&data, &locals.models, 6, Some(pi0), &cfg)?;
    println!(
        "adaptive basis: training residual {:.3e} after {} Gauss-Newton steps",
        adaptive.rel_residual, adaptive.report.iterations
    );
    let mut poles = adaptive.poles.poles();
    poles.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    println!("fitted parameter poles: {poles:.4?}");

    let omegas = log_grid(1e-1, 1e5, 400);
    let mut wins = 0;
    let (mut worst_poly, mut worst_adapt) = (0.0f64, 0.0f64);
    let validation = lin_grid(1.0, 5.0, 50);
    for p in &validation {
        let p = C64::new(*p, 0.0);
        let ep = rel_h2_band(|s| poly.model.eval(s, p), |s| truth.eval(s, p), &omegas)?;
        let ea = rel_h2_band(|s| adaptive.model.eval(s, p), |s| truth.eval(s, p), &omegas)?;
        wins += usize::from(ea <= ep);
        worst_poly = worst_poly.max(ep);
        worst_adapt = worst_adapt.max(ea);
    }
    println!("adaptive at least as accurate at {wins}/{} validation points", validation.len());
    println!("max relative H2 error: polynomial {worst_poly:.3e}, adaptive {worst_adapt:.3e}");
    Ok(())
}
