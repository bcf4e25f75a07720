//! Fixed-basis parametric fitting: local vector fits knitted together by a
//! coupled least-squares problem in the basis coefficients.

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{conj, fro_norm, kron, lstsq_minnorm_rank, pinv, unvec_cols, MatrixC, VectorC, C64};
use crate::model::{FrequencyResponseDataset, ParametricBasis, ParametricModel, PoleResidueModel};
use crate::vecfit::{vf_fit, VfConfig, VfReport};

/// Row limit for materializing the weighted Kronecker system.
pub const MAX_WEIGHTED_ROWS: usize = 20_000;

/// Default relative rank tolerance for the coupled solves. The fitted local
/// models are nearly dependent by construction, so singular values at the
/// fitting-noise level must be discarded rather than inverted.
pub const DEFAULT_RANK_RTOL: f64 = 1e-10;

/// `A[i, k] = h_k(xi_i)` and `B[i, l] = P_l(mu_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    pub a: MatrixC,
    pub b: MatrixC,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSolution {
    pub x: MatrixC,
    /// Informational: the minimal-norm solution is returned regardless.
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase1Config {
    /// One order per local model; a single entry is used for every column.
    pub local_orders: Vec<usize>,
    pub vf: VfConfig,
    pub basis: ParametricBasis,
    /// Overrides the dataset weights when set.
    pub weights: Option<DMatrix<f64>>,
    pub enforce_real: bool,
    /// Singular values below `rank_rtol * sigma_max` are treated as zero.
    pub rank_rtol: f64,
}

impl Phase1Config {
    pub fn uniform(order: usize, basis: ParametricBasis) -> Self {
        Self {
            local_orders: vec![order],
            vf: VfConfig::new(order),
            basis,
            weights: None,
            enforce_real: false,
            rank_rtol: DEFAULT_RANK_RTOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Phase1Fit {
    pub model: ParametricModel,
    /// Parameter-column index behind every local model.
    pub columns: Vec<usize>,
    /// Per-column VF outcome; failed columns contribute no local model.
    pub vf_reports: Vec<std::result::Result<VfReport, String>>,
    /// `||A X B^T - H||_F`, weighted when weights are in play.
    pub residual: f64,
    pub rel_residual: f64,
    pub rank_deficient: bool,
}

pub fn build_design(
    local_models: &[PoleResidueModel],
    freqs: &[C64],
    basis: &ParametricBasis,
    params: &[C64],
) -> Result<DesignMatrices> {
    let mut a = MatrixC::zeros(freqs.len(), local_models.len());
    for (k, m) in local_models.iter().enumerate() {
        for (i, s) in freqs.iter().enumerate() {
            a[(i, k)] = m.eval(*s)?;
        }
    }
    Ok(DesignMatrices {
        a,
        b: basis_matrix(basis, params)?,
    })
}

/// `B[i, l] = P_l(mu_i)`.
pub fn basis_matrix(basis: &ParametricBasis, params: &[C64]) -> Result<MatrixC> {
    let mut b = MatrixC::zeros(params.len(), basis.len());
    for (i, p) in params.iter().enumerate() {
        for (l, v) in basis.eval(*p)?.into_iter().enumerate() {
            b[(i, l)] = v;
        }
    }
    Ok(b)
}

/// Minimal-norm minimizer of `||A X B^T - H||_F`, or of its entrywise
/// weighted analog `||W^(1/2) o (A X B^T - H)||_F`, at [`DEFAULT_RANK_RTOL`].
pub fn solve_coupled(design: &DesignMatrices, h: &MatrixC, weights: Option<&DMatrix<f64>>) -> Result<CoupledSolution> {
    solve_coupled_rtol(design, h, weights, DEFAULT_RANK_RTOL)
}

/// As [`solve_coupled`] with an explicit relative rank tolerance.
pub fn solve_coupled_rtol(
    design: &DesignMatrices,
    h: &MatrixC,
    weights: Option<&DMatrix<f64>>,
    rank_rtol: f64,
) -> Result<CoupledSolution> {
    let (a, b) = (&design.a, &design.b);
    if h.shape() != (a.nrows(), b.nrows()) {
        return Err(Error::ShapeMismatch(format!(
            "data are {}x{}, design expects {}x{}",
            h.nrows(),
            h.ncols(),
            a.nrows(),
            b.nrows()
        )));
    }
    match weights {
        None => {
            let (pa, ra) = pinv_rank(a, rank_rtol)?;
            let (pb, rb) = pinv_rank(b, rank_rtol)?;
            Ok(CoupledSolution {
                x: pa * h * pb.transpose(),
                rank_deficient: ra < a.ncols() || rb < b.ncols(),
            })
        }
        Some(w) => {
            if w.shape() != h.shape() {
                return Err(Error::ShapeMismatch("weights must match the data shape".into()));
            }
            let rows = h.nrows() * h.ncols();
            if rows > MAX_WEIGHTED_ROWS {
                return Err(Error::ProblemTooLarge(format!(
                    "weighted coupled system has {rows} rows (limit {MAX_WEIGHTED_ROWS})"
                )));
            }
            let mut k = kron(b, a);
            let mut rhs = MatrixC::zeros(rows, 1);
            for j in 0..h.ncols() {
                for i in 0..h.nrows() {
                    let r = j * h.nrows() + i;
                    let sw = w[(i, j)].sqrt();
                    k.row_mut(r).iter_mut().for_each(|z| *z *= sw);
                    rhs[(r, 0)] = h[(i, j)] * sw;
                }
            }
            let tol = rank_rtol * sigma_max(&k);
            let ls = lstsq_minnorm_rank(&k, &rhs, Some(tol))?;
            let unknowns = a.ncols() * b.ncols();
            let x = unvec_cols(&VectorC::from_iterator(unknowns, ls.solution.iter().copied()), a.ncols(), b.ncols());
            Ok(CoupledSolution {
                x,
                rank_deficient: ls.rank_deficient(unknowns),
            })
        }
    }
}

fn sigma_max(m: &MatrixC) -> f64 {
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

fn pinv_rank(m: &MatrixC, rank_rtol: f64) -> Result<(MatrixC, usize)> {
    let p = pinv(m, Some(rank_rtol * sigma_max(m)))?;
    // rank(A) = trace(A^+ A) for the truncated pseudoinverse.
    let rank = (&p * m).trace().re.round() as usize;
    Ok((p, rank))
}

/// Enforces `conj(x[k, l]) = x[k, rho(l)]` by averaging each entry with its
/// conjugate partner.
pub fn project_real(x: &MatrixC, basis: &ParametricBasis) -> Result<MatrixC> {
    let rho = basis.conj_perm().ok_or(Error::NotConjugationClosed)?;
    Ok(MatrixC::from_fn(x.nrows(), x.ncols(), |k, l| (x[(k, l)] + x[(k, rho[l])].conj()) * 0.5))
}

/// `||A X B^T - H||_F`, or the weighted analog.
pub fn coupled_residual(design: &DesignMatrices, x: &MatrixC, h: &MatrixC, weights: Option<&DMatrix<f64>>) -> f64 {
    let r = &design.a * x * design.b.transpose() - h;
    match weights {
        None => fro_norm(&r),
        Some(w) => r.iter().zip(w.iter()).map(|(z, w)| z.norm_sqr() * w).sum::<f64>().sqrt(),
    }
}

fn weighted_norm(h: &MatrixC, weights: Option<&DMatrix<f64>>) -> f64 {
    match weights {
        None => fro_norm(h),
        Some(w) => h.iter().zip(w.iter()).map(|(z, w)| z.norm_sqr() * w).sum::<f64>().sqrt(),
    }
}

fn closed_under_conjugation(v: &[C64]) -> bool {
    v.iter().all(|z| v.contains(&z.conj()))
}

/// Solves the coupled problem, mirroring the data across the real axis first
/// when the system is real so the solution is already (nearly) real, then
/// projecting exactly.
pub(crate) fn solve_with_realness(
    design: &DesignMatrices,
    freqs: &[C64],
    params: &[C64],
    h: &MatrixC,
    weights: Option<&DMatrix<f64>>,
    basis: &ParametricBasis,
    real_symmetric: bool,
    enforce_real: bool,
    rank_rtol: f64,
) -> Result<CoupledSolution> {
    let mirror = enforce_real
        && real_symmetric
        && params.iter().all(|p| p.im == 0.0)
        && !closed_under_conjugation(freqs);
    let mut sol = if mirror {
        let m = design.a.nrows();
        let mut a2 = MatrixC::zeros(2 * m, design.a.ncols());
        a2.rows_mut(0, m).copy_from(&design.a);
        a2.rows_mut(m, m).copy_from(&conj(&design.a));
        let mut h2 = MatrixC::zeros(2 * m, h.ncols());
        h2.rows_mut(0, m).copy_from(h);
        h2.rows_mut(m, m).copy_from(&conj(h));
        let w2 = weights.map(|w| {
            let mut w2 = DMatrix::zeros(2 * m, w.ncols());
            w2.rows_mut(0, m).copy_from(w);
            w2.rows_mut(m, m).copy_from(w);
            w2
        });
        let d2 = DesignMatrices {
            a: a2,
            b: design.b.clone(),
        };
        solve_coupled_rtol(&d2, &h2, w2.as_ref(), rank_rtol)?
    } else {
        solve_coupled_rtol(design, h, weights, rank_rtol)?
    };
    if enforce_real {
        sol.x = project_real(&sol.x, basis)?;
    }
    Ok(sol)
}

/// Local models fitted column by column.
#[derive(Debug, Clone)]
pub struct LocalFits {
    pub models: Vec<PoleResidueModel>,
    /// Parameter-column index behind every model.
    pub columns: Vec<usize>,
    pub reports: Vec<std::result::Result<VfReport, String>>,
}

/// Vector-fits every parameter column (in parallel, order preserved).
/// `orders` holds one entry per column or a single shared entry. Columns whose
/// fit fails are dropped and reported.
pub fn fit_local_models(
    dataset: &FrequencyResponseDataset,
    orders: &[usize],
    vf: &VfConfig,
    weights: Option<&DMatrix<f64>>,
) -> Result<LocalFits> {
    let m_p = dataset.n_params();
    if orders.is_empty() || (orders.len() != 1 && orders.len() != m_p) {
        return Err(Error::ShapeMismatch(format!("{} local orders for {m_p} parameter samples", orders.len())));
    }
    if orders.contains(&0) {
        return Err(Error::InvalidInput("local orders must be at least 1".into()));
    }
    let fits: Vec<Result<crate::vecfit::VfFit>> = (0..m_p)
        .into_par_iter()
        .map(|j| {
            let mut vf = vf.clone();
            vf.order = if orders.len() == 1 { orders[0] } else { orders[j] };
            vf.real_symmetric |= dataset.real_symmetric();
            if let Some(w) = weights {
                vf.freq_weights = Some(w.column(j).iter().copied().collect());
            }
            vf_fit(dataset.frequencies(), &dataset.column(j), &vf)
        })
        .collect();

    let mut out = LocalFits {
        models: Vec::new(),
        columns: Vec::new(),
        reports: Vec::with_capacity(m_p),
    };
    for (j, f) in fits.into_iter().enumerate() {
        match f {
            Ok(fit) => {
                if !fit.report.converged {
                    warn!("local model {j} did not converge");
                }
                out.models.push(fit.model);
                out.columns.push(j);
                out.reports.push(Ok(fit.report));
            }
            Err(e) => {
                warn!("local model {j} failed: {e}");
                out.reports.push(Err(e.to_string()));
            }
        }
    }
    if out.models.is_empty() {
        return Err(Error::InvalidInput("every local vector fit failed".into()));
    }
    Ok(out)
}

/// Fits one local model per parameter sample, then solves for the basis
/// coefficients. Columns whose vector fit fails are dropped and reported.
pub fn fit_fixed_basis(dataset: &FrequencyResponseDataset, config: &Phase1Config) -> Result<Phase1Fit> {
    if config.enforce_real && config.basis.conj_perm().is_none() {
        return Err(Error::NotConjugationClosed);
    }
    let (lo, hi) = config.basis.domain();
    if dataset.parameters().iter().any(|p| p.im == 0.0 && (p.re < lo || p.re > hi)) {
        warn!("parameter samples extend beyond the basis interval [{lo}, {hi}]");
    }
    let weights = config.weights.as_ref().or(dataset.weights());
    if let Some(w) = weights {
        if w.shape() != dataset.samples().shape() {
            return Err(Error::ShapeMismatch("weights must match the sample shape".into()));
        }
    }

    let LocalFits {
        models: locals,
        columns,
        reports,
    } = fit_local_models(dataset, &config.local_orders, &config.vf, weights)?;
    let design = build_design(&locals, dataset.frequencies(), &config.basis, dataset.parameters())?;
    let h = dataset.samples();
    let sol = solve_with_realness(
        &design,
        dataset.frequencies(),
        dataset.parameters(),
        h,
        weights,
        &config.basis,
        dataset.real_symmetric(),
        config.enforce_real,
        config.rank_rtol,
    )?;
    if sol.rank_deficient {
        warn!("coupled least-squares problem is rank deficient; returning the minimal-norm solution");
    }
    let residual = coupled_residual(&design, &sol.x, h, weights);
    let scale = weighted_norm(h, weights);
    let rel_residual = if scale > 0.0 { residual / scale } else { residual };
    let real_flag = config.enforce_real && locals.iter().all(|m| m.real_flag());
    let model = ParametricModel::new(locals, config.basis.clone(), sol.x, real_flag)?;
    Ok(Phase1Fit {
        model,
        columns,
        vf_reports: reports,
        residual,
        rel_residual,
        rank_deficient: sol.rank_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, vec_cols};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
        c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> MatrixC {
        MatrixC::from_fn(r, c, |_, _| rand_c(rng))
    }

    #[test]
    fn design_examples() {
        let m = PoleResidueModel::new(vec![c64(-1., 0.)], vec![c64(1., 0.)]).unwrap();
        let basis = ParametricBasis::bernstein(1, 0., 1.).unwrap();
        let d = build_design(&[m], &[c64(0., 0.), c64(0., 1.)], &basis, &[c64(0., 0.), c64(1., 0.)]).unwrap();
        assert_eq!(d.a[(0, 0)], c64(1., 0.));
        assert!((d.a[(1, 0)] - c64(0.5, -0.5)).norm() < 1e-16);
        assert_eq!(d.b, MatrixC::identity(2, 2));
        let r = ParametricBasis::rational(vec![c64(3., 0.)], 0., 1.).unwrap();
        let b = basis_matrix(&r, &[c64(4., 0.), c64(5., 0.)]).unwrap();
        assert_eq!(b, MatrixC::from_column_slice(2, 1, &[c64(1., 0.), c64(0.5, 0.)]));
    }

    #[test]
    fn in_class_coefficients_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = rand_mat(&mut rng, 8, 3);
        let b = rand_mat(&mut rng, 5, 2);
        let x = rand_mat(&mut rng, 3, 2);
        let h = &a * &x * b.transpose();
        let d = DesignMatrices { a, b };
        let got = solve_coupled(&d, &h, None).unwrap();
        assert!(fro_norm(&(&got.x - &x)) < 1e-10 * fro_norm(&x));
        let ones = DMatrix::from_element(8, 5, 1.0);
        let gw = solve_coupled(&d, &h, Some(&ones)).unwrap();
        assert!(fro_norm(&(&gw.x - &got.x)) < 1e-10 * fro_norm(&x));
    }

    #[test]
    fn mean_example() {
        let one = MatrixC::from_element(2, 1, c64(1., 0.));
        let d = DesignMatrices { a: one.clone(), b: one };
        let h = MatrixC::from_row_slice(2, 2, &[c64(0., 0.), c64(2., 0.), c64(2., 0.), c64(4., 0.)]);
        let x = solve_coupled(&d, &h, None).unwrap().x;
        // Normal equation: 4 x = 1^T H 1 = 8.
        assert!((x[(0, 0)] - c64(2., 0.)).norm() < 1e-14);
    }

    #[test]
    fn zero_weight_annihilates_entry() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = DesignMatrices {
            a: rand_mat(&mut rng, 6, 2),
            b: rand_mat(&mut rng, 4, 2),
        };
        let h = rand_mat(&mut rng, 6, 4);
        let mut w = DMatrix::from_fn(6, 4, |_, _| rng.random_range(0.5..2.0));
        w[(2, 1)] = 0.0;
        let x0 = solve_coupled(&d, &h, Some(&w)).unwrap().x;
        let mut h2 = h.clone();
        h2[(2, 1)] += c64(1e6, -3e5);
        let x1 = solve_coupled(&d, &h2, Some(&w)).unwrap().x;
        assert!(fro_norm(&(&x1 - &x0)) <= 1e-12 * fro_norm(&x0).max(1.0));
    }

    #[test]
    fn weighted_guard() {
        let d = DesignMatrices {
            a: MatrixC::from_element(201, 1, c64(1., 0.)),
            b: MatrixC::from_element(100, 1, c64(1., 0.)),
        };
        let h = MatrixC::zeros(201, 100);
        let w = DMatrix::from_element(201, 100, 1.0);
        assert!(matches!(solve_coupled(&d, &h, Some(&w)), Err(Error::ProblemTooLarge(_))));
    }

    #[test]
    fn project_real_examples() {
        let id = ParametricBasis::monomial(0, 0., 1.).unwrap();
        let x = MatrixC::from_element(1, 1, c64(1., 2.));
        assert_eq!(project_real(&x, &id).unwrap()[(0, 0)], c64(1., 0.));
        let xr = MatrixC::from_element(1, 1, c64(3., 0.));
        assert_eq!(project_real(&xr, &id).unwrap(), xr);

        let swap = ParametricBasis::rational(vec![c64(2., 1.), c64(2., -1.)], -1., 1.).unwrap();
        let (a, b) = (c64(1., 2.), c64(3., -5.));
        let x = MatrixC::from_row_slice(1, 2, &[a, b]);
        let p = project_real(&x, &swap).unwrap();
        let avg = (a + b.conj()) / 2.0;
        assert_eq!(p[(0, 0)], avg);
        assert_eq!(p[(0, 1)], avg.conj());
        assert_eq!(project_real(&p, &swap).unwrap(), p);
    }

    #[test]
    fn kronecker_frobenius_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = rand_mat(&mut rng, 6, 3);
        let x = rand_mat(&mut rng, 3, 2);
        let b = rand_mat(&mut rng, 4, 2);
        let h = rand_mat(&mut rng, 6, 4);
        let lhs = fro_norm(&(&a * &x * b.transpose() - &h));
        let rhs = (kron(&b, &a) * vec_cols(&x) - vec_cols(&h)).norm();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs);
    }

    #[test]
    fn normal_equation_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let d = DesignMatrices {
                a: rand_mat(&mut rng, 9, 4),
                b: rand_mat(&mut rng, 7, 3),
            };
            let h = rand_mat(&mut rng, 9, 7);
            let x = solve_coupled(&d, &h, None).unwrap().x;
            let r = &d.a * &x * d.b.transpose() - &h;
            let g = d.a.adjoint() * r * conj(&d.b);
            assert!(fro_norm(&g) <= 1e-9 * fro_norm(&h) * fro_norm(&d.a) * fro_norm(&d.b));
        }
    }

    fn synthetic(rng: &mut ChaCha8Rng, m_s: usize, m_p: usize) -> (Vec<PoleResidueModel>, Vec<C64>, Vec<C64>) {
        let locals: Vec<_> = (0..3)
            .map(|k| {
                let w = 0.5 + k as f64;
                let r = c64(rng.random_range(0.5..1.5), rng.random_range(-1.0..1.0));
                PoleResidueModel::new(vec![c64(-0.1 * w, w), c64(-0.1 * w, -w)], vec![r, r.conj()]).unwrap()
            })
            .collect();
        let freqs = (0..m_s).map(|i| c64(0.0, 0.05 * 1.2f64.powi(i as i32))).collect();
        let params = (0..m_p).map(|j| c64(j as f64 / (m_p - 1) as f64, 0.0)).collect();
        (locals, freqs, params)
    }

    #[test]
    fn monotone_basis_enrichment() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (locals, freqs, params) = synthetic(&mut rng, 25, 9);
        let h = MatrixC::from_fn(25, 9, |i, j| {
            let p = params[j].re;
            locals[0].eval(freqs[i]).unwrap() * (3.0 * p).sin() + locals[1].eval(freqs[i]).unwrap() / (p + 0.3)
        });
        let mut prev = f64::INFINITY;
        for deg in 0..6 {
            let basis = ParametricBasis::bernstein(deg, 0., 1.).unwrap();
            let d = build_design(&locals, &freqs, &basis, &params).unwrap();
            let x = solve_coupled(&d, &h, None).unwrap().x;
            let r = coupled_residual(&d, &x, &h, None);
            assert!(r <= prev + 1e-12, "degree {deg}: {r} > {prev}");
            prev = r;
        }
    }

    #[test]
    fn outlier_zero_model_matches_deleted_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (locals, freqs, params) = synthetic(&mut rng, 20, 6);
        let basis = ParametricBasis::bernstein(2, 0., 1.).unwrap();
        let d = build_design(&locals, &freqs, &basis, &params).unwrap();
        let h = rand_mat(&mut rng, 20, 6);
        let mut zeroed = d.clone();
        zeroed.a.column_mut(1).fill(c64(0., 0.));
        let deleted = DesignMatrices {
            a: d.a.clone().remove_column(1),
            b: d.b.clone(),
        };
        let rz = coupled_residual(&zeroed, &solve_coupled(&zeroed, &h, None).unwrap().x, &h, None);
        let rd = coupled_residual(&deleted, &solve_coupled(&deleted, &h, None).unwrap().x, &h, None);
        assert!(rz <= rd * (1.0 + 1e-12));
    }

    #[test]
    fn fixed_basis_in_class_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (locals, freqs, params) = synthetic(&mut rng, 30, 5);
        let basis = ParametricBasis::bernstein(2, 0., 1.).unwrap();
        let x = MatrixC::from_fn(3, 3, |_, _| c64(rng.random_range(-1.0..1.0), 0.0));
        let truth = ParametricModel::new(locals, basis.clone(), x, true).unwrap();
        let h = MatrixC::from_fn(30, 5, |i, j| truth.eval(freqs[i], params[j]).unwrap());
        let ds = FrequencyResponseDataset::new(freqs, params, h, None, true).unwrap();
        let mut cfg = Phase1Config::uniform(6, basis);
        cfg.enforce_real = true;
        let fit = fit_fixed_basis(&ds, &cfg).unwrap();
        assert!(fit.rel_residual <= 1e-8, "residual {} {:?}", fit.rel_residual, fit.vf_reports.iter().map(|r| r.as_ref().map(|r| (r.rel_rms, r.iterations, r.converged))).collect::<Vec<_>>());
        assert!(fit.model.real_flag() && fit.model.satisfies_realness(0.0));
        assert!(fit.model.is_stable());
        assert_eq!(fit.model.local_models().len(), 5);
    }

    #[test]
    fn zero_data_gives_zero_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (_, freqs, params) = synthetic(&mut rng, 10, 3);
        let ds = FrequencyResponseDataset::new(freqs, params, MatrixC::zeros(10, 3), None, false).unwrap();
        let fit = fit_fixed_basis(&ds, &Phase1Config::uniform(2, ParametricBasis::bernstein(1, 0., 1.).unwrap())).unwrap();
        assert!(fit.model.coefficients().iter().all(|z| z.norm() == 0.0));
        assert_eq!(fit.residual, 0.0);
    }
}
