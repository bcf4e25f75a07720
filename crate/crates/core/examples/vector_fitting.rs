//! Vector fitting of one frequency-response column: recover a known order-6
//! model from 80 samples, starting from the default node placement.
//!
//! Run with `cargo run --release --example vector_fitting`.

use parafit::bench::imag_log_grid;
use parafit::vecfit::{vf_fit, VfConfig};
use parafit::{PoleResidueModel, Result, C64};

fn main() -> Result<()> {
    let c = C64::new;
    let truth = PoleResidueModel::new(
        vec![c(-0.1, 1.0), c(-0.1, -1.0), c(-2.0, 30.0), c(-2.0, -30.0), c(-0.5, 0.0), c(-40.0, 0.0)],
        vec![c(1.0, 0.5), c(1.0, -0.5), c(3.0, -2.0), c(3.0, 2.0), c(0.2, 0.0), c(10.0, 0.0)],
    )?;
    let freqs = imag_log_grid(0.1, 300.0, 80);
    let data: Vec<C64> = freqs.iter().map(|s| truth.eval(*s)).collect::<Result<_>>()?;

    let mut cfg = VfConfig::new(6);
    cfg.real_symmetric = true;
    let fit = vf_fit(&freqs, &data, &cfg)?;
    println!(
        "{} iterations, converged {}, relative RMS {:.3e}",
        fit.report.iterations, fit.report.converged, fit.report.rel_rms
    );
    let mut poles = fit.model.poles().to_vec();
    poles.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    for p in poles {
        println!("  pole {:+.8} {:+.8}i", p.re, p.im);
    }
    Ok(())
}
