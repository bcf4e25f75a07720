//! Phase 2 in isolation: IRKA on a 24-state SIMO system, then compression of
//! a parametric model, reporting the joint H2 x L2 error for several orders.
//!
//! Run with `cargo run --release --example irka_compress`.

use parafit::compress::{assemble_simo, compress, h2_norm_simo, h2l2_error, irka_simo, IrkaConfig};
use parafit::linalg::MatrixC;
use parafit::{ParametricBasis, ParametricModel, PoleResidueModel, Result, SimoRealization, C64};

fn main() -> Result<()> {
    let c = C64::new;
    let poles: Vec<C64> = (0..12)
        .flat_map(|k| {
            let w = 0.5 + k as f64;
            [c(-0.05 * w - 0.1, w), c(-0.05 * w - 0.1, -w)]
        })
        .collect();
    let n = poles.len();
    let outputs = MatrixC::from_fn(3, n, |i, j| c(((i + 1) * (j + 2)) as f64 % 7.0 - 3.0, (j % 3) as f64 - 1.0));
    let sys = SimoRealization::new(poles, vec![c(1.0, 0.0); n], outputs)?;
    let norm = h2_norm_simo(&sys)?;
    for r in [2, 6, 12] {
        let res = irka_simo(&sys, &IrkaConfig::new(r))?;
        println!(
            "SIMO order {n} -> {r}: relative H2 error {:.3e}, {} iterations, converged {}",
            res.h2_error / norm,
            res.report.iterations,
            res.report.converged
        );
    }

    // Parametric model with four local models and a cubic Bernstein basis.
    let locals = (0..4)
        .map(|k| {
            let w = 1.0 + 1.5 * k as f64;
            PoleResidueModel::new(vec![c(-0.1 * w, w), c(-0.1 * w, -w)], vec![c(1.0, 0.2 * k as f64), c(1.0, -0.2 * k as f64)])
        })
        .collect::<Result<Vec<_>>>()?;
    let basis = ParametricBasis::bernstein(3, 0.0, 1.0)?;
    let x = MatrixC::from_fn(4, 4, |k, l| c(if k == l { 1.0 } else { 0.1 * (k + l) as f64 }, 0.0));
    let model = ParametricModel::new(locals, basis, x, true)?;
    println!("assembled SIMO order {}", assemble_simo(&model)?.order());
    for r in [2, 4, 8] {
        let out = compress(&model, &IrkaConfig::new(r))?;
        let check = h2l2_error(&model, &out.model)?;
        println!("compressed to {r}: joint error {:.3e} (relative {:.3e}, recomputed {:.3e})", out.error, out.error / out.input_norm, check);
    }
    Ok(())
}
