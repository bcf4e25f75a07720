//! Phase 1 with a fixed basis on data that lies in the model class: three
//! local models blended by quadratic Bernstein weights are recovered from a
//! 30 x 5 sample grid.
//!
//! Run with `cargo run --release --example coupled_fit`.

use parafit::bench::{imag_log_grid, lin_grid};
use parafit::coupled::{fit_fixed_basis, Phase1Config};
use parafit::linalg::MatrixC;
use parafit::{FrequencyResponseDataset, ParametricBasis, ParametricModel, PoleResidueModel, Result, C64};

fn main() -> Result<()> {
    let c = C64::new;
    let locals = [(1.0, c(1.0, 0.3)), (3.0, c(-0.5, 1.0)), (7.0, c(2.0, -0.2))]
        .into_iter()
        .map(|(w, r)| PoleResidueModel::new(vec![c(-0.1 * w, w), c(-0.1 * w, -w)], vec![r, r.conj()]))
        .collect::<Result<Vec<_>>>()?;
    let basis = ParametricBasis::bernstein(2, 0.0, 1.0)?;
    let x = MatrixC::from_row_slice(3, 3, &[c(1.0, 0.0), c(0.2, 0.0), c(-0.4, 0.0), c(0.0, 0.0), c(0.7, 0.0), c(0.3, 0.0), c(-0.6, 0.0), c(0.1, 0.0), c(0.9, 0.0)]);
    let truth = ParametricModel::new(locals, basis.clone(), x, true)?;

    let freqs = imag_log_grid(0.1, 100.0, 30);
    let params: Vec<C64> = lin_grid(0.0, 1.0, 5).into_iter().map(|p| c(p, 0.0)).collect();
    let h = MatrixC::from_fn(30, 5, |i, j| truth.eval(freqs[i], params[j]).unwrap());
    let data = FrequencyResponseDataset::new(freqs, params, h, None, true)?;

    // Every column mixes all three local models, so each local fit needs order 6.
    let mut cfg = Phase1Config::uniform(6, basis);
    cfg.enforce_real = true;
    let fit = fit_fixed_basis(&data, &cfg)?;
    println!("relative residual {:.3e}, rank deficient {}", fit.rel_residual, fit.rank_deficient);

    let (s, p) = (c(0.0, 2.5), c(0.37, 0.0));
    println!("off-grid check at p = 0.37: fitted {:.10}, true {:.10}", fit.model.eval(s, p)?, truth.eval(s, p)?);
    Ok(())
}
