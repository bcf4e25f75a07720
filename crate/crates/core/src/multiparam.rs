//! Two-parameter fitting on tensor grids.
//!
//! Columns of the flattened sample matrix run q-major: grid point
//! `(j1, j2)` lives in column `j1 * m_q + j2` (0-based), and basis member
//! `P_l1 Q_l2` in coefficient column `l1 * r_q + l2`.

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::compress::{assemble_simo_from, gram_matrix, reduce_weighted, IrkaConfig, IrkaReport};
use crate::coupled::{basis_matrix, coupled_residual, solve_coupled_rtol, DesignMatrices, DEFAULT_RANK_RTOL};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_upper, conj, fro_norm, kron, pinv, MatrixC, VectorC, C64};
use crate::model::{reduced_response, ParametricBasis, PoleResidueModel};
use crate::vecfit::{vf_fit, VfConfig, VfReport};

/// Upper bound on the total state count of all local models.
pub const MAX_LOCAL_STATES: usize = 5000;

/// 1-based q-major column index of grid point `(j1, j2)`.
pub fn flatten_index(j1: usize, j2: usize, m_q: usize) -> Result<usize> {
    if j1 == 0 || j2 == 0 || j2 > m_q {
        return Err(Error::OutOfRange(format!("({j1}, {j2}) with m_q = {m_q}")));
    }
    Ok((j1 - 1) * m_q + j2)
}

/// Flattens `t[j1]` (each `m_s x m_q`) into an `m_s x (m_p m_q)` matrix.
pub fn flatten_tensor(t: &[MatrixC]) -> Result<MatrixC> {
    let Some(first) = t.first() else {
        return Err(Error::InvalidInput("empty tensor".into()));
    };
    let (m_s, m_q) = first.shape();
    if t.iter().any(|m| m.shape() != (m_s, m_q)) {
        return Err(Error::ShapeMismatch("tensor slices differ in shape".into()));
    }
    let mut out = MatrixC::zeros(m_s, t.len() * m_q);
    for (j1, slice) in t.iter().enumerate() {
        out.columns_mut(j1 * m_q, m_q).copy_from(slice);
    }
    Ok(out)
}

/// Inverse of [`flatten_tensor`].
pub fn unflatten_tensor(m: &MatrixC, m_p: usize, m_q: usize) -> Result<Vec<MatrixC>> {
    if m.ncols() != m_p * m_q {
        return Err(Error::ShapeMismatch(format!("{} columns for a {m_p}x{m_q} grid", m.ncols())));
    }
    Ok((0..m_p).map(|j1| m.columns(j1 * m_q, m_q).into_owned()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponseDataset2 {
    frequencies: Vec<C64>,
    params_p: Vec<f64>,
    params_q: Vec<f64>,
    samples: MatrixC,
    weights: Option<DMatrix<f64>>,
    real_symmetric: bool,
}

fn distinct(v: &[f64]) -> bool {
    v.iter().enumerate().all(|(i, a)| v[..i].iter().all(|b| a != b))
}

impl FrequencyResponseDataset2 {
    pub fn new(
        frequencies: Vec<C64>,
        params_p: Vec<f64>,
        params_q: Vec<f64>,
        samples: MatrixC,
        weights: Option<DMatrix<f64>>,
        real_symmetric: bool,
    ) -> Result<Self> {
        if frequencies.is_empty() || params_p.is_empty() || params_q.is_empty() {
            return Err(Error::InvalidInput("dataset needs nonempty grids".into()));
        }
        let finite = frequencies.iter().chain(samples.iter()).all(|z| z.re.is_finite() && z.im.is_finite())
            && params_p.iter().chain(&params_q).all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFinite("two-parameter dataset"));
        }
        let fdistinct = frequencies.iter().enumerate().all(|(i, a)| frequencies[..i].iter().all(|b| a != b));
        if !fdistinct || !distinct(&params_p) || !distinct(&params_q) {
            return Err(Error::InvalidInput("grid values must be distinct".into()));
        }
        let shape = (frequencies.len(), params_p.len() * params_q.len());
        if samples.shape() != shape {
            return Err(Error::ShapeMismatch(format!(
                "samples are {}x{}, grid is {}x{}",
                samples.nrows(),
                samples.ncols(),
                shape.0,
                shape.1
            )));
        }
        if let Some(w) = &weights {
            if w.shape() != shape || w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidInput("weights must match the samples and be nonnegative".into()));
            }
        }
        if real_symmetric {
            for (i, xi) in frequencies.iter().enumerate() {
                let Some(ic) = frequencies.iter().position(|z| *z == xi.conj()) else { continue };
                for j in 0..shape.1 {
                    let (a, b) = (samples[(i, j)], samples[(ic, j)].conj());
                    if (a - b).norm() > 1e-12 * a.norm().max(b.norm()).max(f64::MIN_POSITIVE) {
                        return Err(Error::InvalidInput(format!(
                            "real_symmetric dataset violates conjugate symmetry at ({i}, {j})"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            frequencies,
            params_p,
            params_q,
            samples,
            weights,
            real_symmetric,
        })
    }

    pub fn frequencies(&self) -> &[C64] {
        &self.frequencies
    }
    pub fn params_p(&self) -> &[f64] {
        &self.params_p
    }
    pub fn params_q(&self) -> &[f64] {
        &self.params_q
    }
    pub fn samples(&self) -> &MatrixC {
        &self.samples
    }
    pub fn weights(&self) -> Option<&DMatrix<f64>> {
        self.weights.as_ref()
    }
    pub fn real_symmetric(&self) -> bool {
        self.real_symmetric
    }
    /// Grid point `(p, q)` of 0-based flattened column `j`.
    pub fn grid_point(&self, j: usize) -> (f64, f64) {
        let m_q = self.params_q.len();
        (self.params_p[j / m_q], self.params_q[j % m_q])
    }
}

/// Tensor-product basis values `P_l1(p) Q_l2(q)` in q-major order.
fn tensor_values(bp: &ParametricBasis, bq: &ParametricBasis, p: C64, q: C64) -> Result<Vec<C64>> {
    let vp = bp.eval(p)?;
    let vq = bq.eval(q)?;
    Ok(vp.iter().flat_map(|a| vq.iter().map(move |b| a * b)).collect())
}

/// Upper Cholesky factor of `Gram_p (x) Gram_q`.
pub fn tensor_gram_chol(bp: &ParametricBasis, bq: &ParametricBasis) -> Result<MatrixC> {
    let rp = cholesky_upper(&gram_matrix(bp)?)?;
    let rq = cholesky_upper(&gram_matrix(bq)?)?;
    Ok(kron(&rp, &rq))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricModel2 {
    local_models: Vec<PoleResidueModel>,
    basis_p: ParametricBasis,
    basis_q: ParametricBasis,
    coefficients: MatrixC,
    real_flag: bool,
}

impl ParametricModel2 {
    pub fn new(
        local_models: Vec<PoleResidueModel>,
        basis_p: ParametricBasis,
        basis_q: ParametricBasis,
        coefficients: MatrixC,
        real_flag: bool,
    ) -> Result<Self> {
        if local_models.is_empty() {
            return Err(Error::InvalidInput("no local models".into()));
        }
        let want = (local_models.len(), basis_p.len() * basis_q.len());
        if coefficients.shape() != want {
            return Err(Error::ShapeMismatch(format!(
                "coefficients are {}x{}, expected {}x{}",
                coefficients.nrows(),
                coefficients.ncols(),
                want.0,
                want.1
            )));
        }
        Ok(Self {
            local_models,
            basis_p,
            basis_q,
            coefficients,
            real_flag,
        })
    }

    pub fn local_models(&self) -> &[PoleResidueModel] {
        &self.local_models
    }
    pub fn basis_p(&self) -> &ParametricBasis {
        &self.basis_p
    }
    pub fn basis_q(&self) -> &ParametricBasis {
        &self.basis_q
    }
    pub fn coefficients(&self) -> &MatrixC {
        &self.coefficients
    }
    pub fn real_flag(&self) -> bool {
        self.real_flag
    }
    pub fn order(&self) -> usize {
        self.local_models.iter().map(|m| m.order()).sum()
    }
    pub fn is_stable(&self) -> bool {
        self.local_models.iter().all(|m| m.is_stable())
    }

    /// `sum_k sum_l1 sum_l2 x[k, (l1, l2)] h_k(s) P_l1(p) Q_l2(q)`.
    pub fn eval(&self, s: C64, p: C64, q: C64) -> Result<C64> {
        let v = tensor_values(&self.basis_p, &self.basis_q, p, q)?;
        let mut acc = C64::new(0.0, 0.0);
        for (k, m) in self.local_models.iter().enumerate() {
            let hk = m.eval(s)?;
            let row: C64 = self.coefficients.row(k).iter().zip(&v).map(|(x, b)| x * b).sum();
            acc += hk * row;
        }
        Ok(acc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoParamConfig {
    pub local_order: usize,
    pub vf: VfConfig,
    pub basis_p: ParametricBasis,
    pub basis_q: ParametricBasis,
    /// Keep local models only at grid points whose indices are both
    /// multiples of the stride.
    pub stride: usize,
    pub enforce_real: bool,
    pub rank_rtol: f64,
}

impl TwoParamConfig {
    pub fn new(local_order: usize, basis_p: ParametricBasis, basis_q: ParametricBasis) -> Self {
        Self {
            local_order,
            vf: VfConfig::new(local_order),
            basis_p,
            basis_q,
            stride: 1,
            enforce_real: false,
            rank_rtol: DEFAULT_RANK_RTOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoParamFit {
    pub model: ParametricModel2,
    /// Flattened grid column behind every local model.
    pub columns: Vec<usize>,
    pub vf_reports: Vec<VfReport>,
    pub residual: f64,
    pub rel_residual: f64,
    pub rank_deficient: bool,
}

/// Local fits at every (decimated) grid point, then the Kronecker-basis
/// coupled solve `X = A^+ H ((B_p (x) B_q)^+)^T` with the pseudoinverse
/// applied factor by factor.
pub fn fit_two_param(dataset: &FrequencyResponseDataset2, config: &TwoParamConfig) -> Result<TwoParamFit> {
    if config.stride == 0 || config.local_order == 0 {
        return Err(Error::InvalidInput("stride and local order must be positive".into()));
    }
    let (m_p, m_q) = (dataset.params_p.len(), dataset.params_q.len());
    let columns: Vec<usize> = (0..m_p)
        .filter(|j1| j1 % config.stride == 0)
        .flat_map(|j1| (0..m_q).filter(|j2| j2 % config.stride == 0).map(move |j2| j1 * m_q + j2))
        .collect();
    let states = columns.len() * config.local_order;
    if states > MAX_LOCAL_STATES {
        return Err(Error::ProblemTooLarge(format!(
            "{states} local states exceed {MAX_LOCAL_STATES}; increase the decimation stride"
        )));
    }
    for (b, grid, name) in [(&config.basis_p, &dataset.params_p, "p"), (&config.basis_q, &dataset.params_q, "q")] {
        let (lo, hi) = b.domain();
        if grid.iter().any(|x| *x < lo || *x > hi) {
            warn!("{name} samples extend beyond the basis interval [{lo}, {hi}]");
        }
    }

    let weights = dataset.weights();
    let fits: Vec<Result<crate::vecfit::VfFit>> = columns
        .par_iter()
        .map(|&j| {
            let mut vf = config.vf.clone();
            vf.order = config.local_order;
            vf.real_symmetric |= dataset.real_symmetric;
            if let Some(w) = weights {
                vf.freq_weights = Some(w.column(j).iter().copied().collect());
            }
            let col: Vec<C64> = dataset.samples.column(j).iter().copied().collect();
            vf_fit(&dataset.frequencies, &col, &vf)
        })
        .collect();
    let mut locals = Vec::with_capacity(columns.len());
    let mut reports = Vec::with_capacity(columns.len());
    for (f, j) in fits.into_iter().zip(&columns) {
        let f = f.map_err(|e| Error::InvalidInput(format!("local fit at column {j} failed: {e}")))?;
        if !f.report.converged {
            warn!("local model at column {j} did not converge");
        }
        locals.push(f.model);
        reports.push(f.report);
    }

    let mut a = MatrixC::zeros(dataset.frequencies.len(), locals.len());
    for (k, m) in locals.iter().enumerate() {
        for (i, s) in dataset.frequencies.iter().enumerate() {
            a[(i, k)] = m.eval(*s)?;
        }
    }
    let to_c = |v: &[f64]| v.iter().map(|x| C64::new(*x, 0.0)).collect::<Vec<_>>();
    let bp = basis_matrix(&config.basis_p, &to_c(&dataset.params_p))?;
    let bq = basis_matrix(&config.basis_q, &to_c(&dataset.params_q))?;
    let h = &dataset.samples;

    // Real systems sampled on one side of the axis: append the mirrored rows
    // so the least-squares solution sees both halves.
    let mirror = config.enforce_real && dataset.real_symmetric;
    let (a_ls, h_ls, w_ls) = if mirror {
        let m = a.nrows();
        let stack = |x: &MatrixC, y: &MatrixC| {
            let mut out = MatrixC::zeros(2 * m, x.ncols());
            out.rows_mut(0, m).copy_from(x);
            out.rows_mut(m, m).copy_from(y);
            out
        };
        let w2 = weights.map(|w| {
            let mut out = DMatrix::zeros(2 * m, w.ncols());
            out.rows_mut(0, m).copy_from(w);
            out.rows_mut(m, m).copy_from(w);
            out
        });
        (stack(&a, &conj(&a)), stack(h, &conj(h)), w2)
    } else {
        (a.clone(), h.clone(), weights.cloned())
    };

    let (mut x, rank_deficient) = match &w_ls {
        None => {
            let (pa, ra) = pinv_rank(&a_ls, config.rank_rtol)?;
            let (pp, rp) = pinv_rank(&bp, config.rank_rtol)?;
            let (pq, rq) = pinv_rank(&bq, config.rank_rtol)?;
            let x = pa * &h_ls * kron(&pp, &pq).transpose();
            (x, ra < a_ls.ncols() || rp < bp.ncols() || rq < bq.ncols())
        }
        Some(w) => {
            let d = DesignMatrices {
                a: a_ls.clone(),
                b: kron(&bp, &bq),
            };
            let sol = solve_coupled_rtol(&d, &h_ls, Some(w), config.rank_rtol)?;
            (sol.x, sol.rank_deficient)
        }
    };
    if rank_deficient {
        warn!("two-parameter coupled problem is rank deficient; returning the minimal-norm solution");
    }
    if config.enforce_real {
        let rho_p = config.basis_p.conj_perm().ok_or(Error::NotConjugationClosed)?;
        let rho_q = config.basis_q.conj_perm().ok_or(Error::NotConjugationClosed)?;
        let r_q = config.basis_q.len();
        let rho = |l: usize| rho_p[l / r_q] * r_q + rho_q[l % r_q];
        x = MatrixC::from_fn(x.nrows(), x.ncols(), |k, l| (x[(k, l)] + x[(k, rho(l))].conj()) * 0.5);
    }
    let design = DesignMatrices { a, b: kron(&bp, &bq) };
    let residual = coupled_residual(&design, &x, h, weights);
    let scale = match weights {
        None => fro_norm(h),
        Some(w) => h.iter().zip(w.iter()).map(|(z, w)| z.norm_sqr() * w).sum::<f64>().sqrt(),
    };
    let rel_residual = if scale > 0.0 { residual / scale } else { residual };
    let real_flag = config.enforce_real && locals.iter().all(|m| m.real_flag());
    let model = ParametricModel2::new(locals, config.basis_p.clone(), config.basis_q.clone(), x, real_flag)?;
    Ok(TwoParamFit {
        model,
        columns,
        vf_reports: reports,
        residual,
        rel_residual,
        rank_deficient,
    })
}

fn pinv_rank(m: &MatrixC, rtol: f64) -> Result<(MatrixC, usize)> {
    let smax = m.clone().singular_values().iter().copied().fold(0.0, f64::max);
    let p = pinv(m, Some(rtol * smax))?;
    let rank = (&p * m).trace().re.round() as usize;
    Ok((p, rank))
}

/// Compressed two-parameter model; `gram_chol = R_p (x) R_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedParametricModel2 {
    pub basis_p: ParametricBasis,
    pub basis_q: ParametricBasis,
    pub gram_chol: MatrixC,
    pub a_red: MatrixC,
    pub b_red: VectorC,
    pub c_red_unweighted: MatrixC,
}

impl CompressedParametricModel2 {
    pub fn order(&self) -> usize {
        self.a_red.nrows()
    }

    /// Reduced-model poles (eigenvalues of `a_red`).
    pub fn poles(&self) -> Result<Vec<C64>> {
        Ok(crate::linalg::eig_general(&self.a_red)?.0)
    }

    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.poles()?.iter().all(|p| p.re < 0.0))
    }

    pub fn eval(&self, s: C64, p: C64, q: C64) -> Result<C64> {
        let g = reduced_response(&self.a_red, &self.b_red, &self.c_red_unweighted, s)?;
        let v = tensor_values(&self.basis_p, &self.basis_q, p, q)?;
        Ok(v.iter().zip(g.iter()).map(|(a, b)| a * b).sum())
    }
}

#[derive(Debug, Clone)]
pub struct Compression2 {
    pub model: CompressedParametricModel2,
    pub error: f64,
    pub input_norm: f64,
    pub report: IrkaReport,
}

/// Phase 2 on the flattened tensor basis with the separable Gram factor.
pub fn compress_two_param(model: &ParametricModel2, config: &IrkaConfig) -> Result<Compression2> {
    if !model.is_stable() {
        return Err(Error::UnstableSystem);
    }
    let sys = assemble_simo_from(&model.local_models, &model.coefficients)?;
    let r = tensor_gram_chol(&model.basis_p, &model.basis_q)?;
    let w = reduce_weighted(&sys, &r, config)?;
    Ok(Compression2 {
        model: CompressedParametricModel2 {
            basis_p: model.basis_p.clone(),
            basis_q: model.basis_q.clone(),
            gram_chol: r,
            a_red: w.a_red,
            b_red: w.b_red,
            c_red_unweighted: w.c_red_unweighted,
        },
        error: w.error,
        input_norm: w.input_norm,
        report: w.report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled::{fit_fixed_basis, Phase1Config};
    use crate::linalg::c64;
    use crate::model::FrequencyResponseDataset;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
        c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> MatrixC {
        MatrixC::from_fn(r, c, |_, _| rand_c(rng))
    }

    fn freqs(n: usize) -> Vec<C64> {
        (0..n).map(|i| c64(0.0, 10f64.powf(-1.0 + 3.0 * i as f64 / (n - 1) as f64))).collect()
    }

    fn lin(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    fn pair_model(w: f64, r: C64) -> PoleResidueModel {
        PoleResidueModel::new(vec![c64(-0.1 * w, w), c64(-0.1 * w, -w)], vec![r, r.conj()]).unwrap()
    }

    #[test]
    fn flatten_index_examples() {
        assert_eq!(flatten_index(1, 1, 7).unwrap(), 1);
        assert_eq!(flatten_index(2, 1, 3).unwrap(), 4);
        assert_eq!(flatten_index(3, 2, 5).unwrap(), 12);
        assert!(matches!(flatten_index(0, 1, 3), Err(Error::OutOfRange(_))));
        assert!(matches!(flatten_index(1, 4, 3), Err(Error::OutOfRange(_))));
    }

    proptest! {
        #[test]
        fn flatten_round_trip(m_s in 1usize..5, m_p in 1usize..5, m_q in 1usize..5, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t: Vec<MatrixC> = (0..m_p).map(|_| rand_mat(&mut rng, m_s, m_q)).collect();
            let flat = flatten_tensor(&t).unwrap();
            for j1 in 0..m_p {
                for j2 in 0..m_q {
                    let col = flatten_index(j1 + 1, j2 + 1, m_q).unwrap() - 1;
                    prop_assert_eq!(flat.column(col).into_owned(), t[j1].column(j2).into_owned());
                }
            }
            prop_assert_eq!(unflatten_tensor(&flat, m_p, m_q).unwrap(), t);
        }

        #[test]
        fn kronecker_pinv_identity(seed in any::<u64>(), r in 2usize..5, c in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = rand_mat(&mut rng, r + 1, c);
            let n = rand_mat(&mut rng, r, c.min(r));
            let lhs = pinv(&kron(&m, &n), None).unwrap();
            let rhs = kron(&pinv(&m, None).unwrap(), &pinv(&n, None).unwrap());
            prop_assert!(fro_norm(&(&lhs - &rhs)) <= 1e-10 * fro_norm(&rhs));
        }
    }

    #[test]
    fn eval_examples() {
        let lm = vec![pair_model(1.0, c64(1., 0.5)), pair_model(3.0, c64(-0.5, 1.))];
        let bp = ParametricBasis::monomial(1, 0., 1.).unwrap();
        let bq = ParametricBasis::bernstein(2, 0., 1.).unwrap();
        let zero = ParametricModel2::new(lm.clone(), bp.clone(), bq.clone(), MatrixC::zeros(2, 6), false).unwrap();
        assert_eq!(zero.eval(c64(0., 1.), c64(0.3, 0.), c64(0.6, 0.)).unwrap(), c64(0., 0.));

        let (s, p, q) = (c64(0.1, 2.), c64(0.3, 0.), c64(0.6, 0.));
        let mut x = MatrixC::zeros(2, 6);
        // Column 1 * 3 + 2 is the pair (l1, l2) = (1, 2).
        x[(1, 5)] = c64(1., 0.);
        let one = ParametricModel2::new(lm.clone(), bp.clone(), bq.clone(), x, false).unwrap();
        let want = lm[1].eval(s).unwrap() * bp.eval(p).unwrap()[1] * bq.eval(q).unwrap()[2];
        assert!((one.eval(s, p, q).unwrap() - want).norm() <= 1e-15 * want.norm());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = rand_mat(&mut rng, 2, 6);
        let m = ParametricModel2::new(lm.clone(), bp.clone(), bq.clone(), x.clone(), false).unwrap();
        let (vp, vq) = (bp.eval(p).unwrap(), bq.eval(q).unwrap());
        let mut oracle = c64(0., 0.);
        for k in 0..2 {
            for l1 in 0..2 {
                for l2 in 0..3 {
                    oracle += x[(k, l1 * 3 + l2)] * lm[k].eval(s).unwrap() * vp[l1] * vq[l2];
                }
            }
        }
        assert!((m.eval(s, p, q).unwrap() - oracle).norm() <= 1e-14 * oracle.norm());
    }

    fn synth(m: &ParametricModel2, f: &[C64], pp: &[f64], qq: &[f64]) -> MatrixC {
        MatrixC::from_fn(f.len(), pp.len() * qq.len(), |i, j| {
            m.eval(f[i], c64(pp[j / qq.len()], 0.), c64(qq[j % qq.len()], 0.)).unwrap()
        })
    }

    #[test]
    fn in_class_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let lm = vec![pair_model(0.5, c64(1., 0.2)), pair_model(2.0, c64(0.3, -1.)), pair_model(6.0, c64(-1., 0.4))];
        let bp = ParametricBasis::bernstein(1, 0., 1.).unwrap();
        let bq = ParametricBasis::bernstein(2, 0., 1.).unwrap();
        let x = MatrixC::from_fn(3, 6, |_, _| c64(rng.random_range(-1.0..1.0), 0.0));
        let truth = ParametricModel2::new(lm, bp.clone(), bq.clone(), x, true).unwrap();
        let (f, pp, qq) = (freqs(40), lin(0., 1., 3), lin(0., 1., 4));
        let ds = FrequencyResponseDataset2::new(f.clone(), pp.clone(), qq.clone(), synth(&truth, &f, &pp, &qq), None, true).unwrap();
        let mut cfg = TwoParamConfig::new(6, bp, bq);
        cfg.enforce_real = true;
        let fit = fit_two_param(&ds, &cfg).unwrap();
        assert!(fit.rel_residual <= 1e-8, "{}", fit.rel_residual);
        assert!(fit.model.is_stable());
    }

    #[test]
    fn constant_bases_give_means() {
        let lm = pair_model(1.0, c64(1., 0.));
        let f = freqs(30);
        let h = MatrixC::from_fn(30, 4, |i, j| lm.eval(f[i]).unwrap() * (1.0 + j as f64));
        let ds = FrequencyResponseDataset2::new(f, vec![0., 1.], vec![0., 1.], h.clone(), None, false).unwrap();
        let b0 = ParametricBasis::monomial(0, 0., 1.).unwrap();
        let mut cfg = TwoParamConfig::new(2, b0.clone(), b0);
        cfg.stride = 2;
        let fit = fit_two_param(&ds, &cfg).unwrap();
        assert_eq!(fit.columns, vec![0]);
        // One local model a = h_1 on the grid: normal equations give
        // x = (a^H H 1) / (4 a^H a).
        let a: Vec<C64> = ds.frequencies().iter().map(|s| fit.model.local_models()[0].eval(*s).unwrap()).collect();
        let num: C64 = (0..30).map(|i| a[i].conj() * (0..4).map(|j| h[(i, j)]).sum::<C64>()).sum();
        let den: f64 = 4.0 * a.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let want = num / den;
        assert!((fit.model.coefficients()[(0, 0)] - want).norm() <= 1e-10 * want.norm());
    }

    #[test]
    fn single_q_matches_one_parameter_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let lm = vec![pair_model(0.7, c64(1., 0.3)), pair_model(4.0, c64(0.2, 1.))];
        let bp = ParametricBasis::bernstein(2, 0., 1.).unwrap();
        let b0 = ParametricBasis::monomial(0, 0., 1.).unwrap();
        let x = rand_mat(&mut rng, 2, 3);
        let truth = ParametricModel2::new(lm, bp.clone(), b0.clone(), x, false).unwrap();
        let (f, pp) = (freqs(30), lin(0., 1., 5));
        let h = synth(&truth, &f, &pp, &[0.5]);
        let perturb = MatrixC::from_fn(30, 5, |_, _| rand_c(&mut rng) * 1e-3);
        let h = h + perturb;
        let ds2 = FrequencyResponseDataset2::new(f.clone(), pp.clone(), vec![0.5], h.clone(), None, false).unwrap();
        let fit2 = fit_two_param(&ds2, &TwoParamConfig::new(4, bp.clone(), b0)).unwrap();
        let ds1 = FrequencyResponseDataset::new(f, pp.iter().map(|p| c64(*p, 0.)).collect(), h, None, false).unwrap();
        let fit1 = fit_fixed_basis(&ds1, &Phase1Config::uniform(4, bp)).unwrap();
        let (x1, x2) = (fit1.model.coefficients(), fit2.model.coefficients());
        assert!(fro_norm(&(x1 - x2)) <= 1e-10 * fro_norm(x1));
        assert!((fit1.residual - fit2.residual).abs() <= 1e-10 * fit1.residual);
    }

    #[test]
    fn explosion_guard() {
        let f = freqs(10);
        let h = MatrixC::from_element(10, 36, c64(1., 0.));
        let ds = FrequencyResponseDataset2::new(f, lin(0., 1., 6), lin(0., 1., 6), h, None, false).unwrap();
        let b = ParametricBasis::monomial(1, 0., 1.).unwrap();
        let cfg = TwoParamConfig::new(200, b.clone(), b);
        assert!(matches!(fit_two_param(&ds, &cfg), Err(Error::ProblemTooLarge(_))));
    }

    #[test]
    fn compression_full_order_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let lm = vec![pair_model(1.0, c64(1., 0.5)), pair_model(3.0, c64(-0.5, 1.))];
        let bp = ParametricBasis::bernstein(1, 0., 1.).unwrap();
        let bq = ParametricBasis::monomial(1, 0., 1.).unwrap();
        let m = ParametricModel2::new(lm, bp, bq, rand_mat(&mut rng, 2, 4), false).unwrap();
        let c = compress_two_param(&m, &IrkaConfig::new(4)).unwrap();
        assert!(c.error <= 1e-10 * c.input_norm);
        let (s, p, q) = (c64(0., 1.7), c64(0.2, 0.), c64(0.9, 0.));
        let (a, b) = (m.eval(s, p, q).unwrap(), c.model.eval(s, p, q).unwrap());
        assert!((a - b).norm() <= 1e-9 * a.norm());
    }
}
