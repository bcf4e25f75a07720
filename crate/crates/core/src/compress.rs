//! Compression of a parametric model in the joint H2 x L2 norm.
//!
//! The model is rewritten as a parameter-free SIMO system `G(s)` whose outputs
//! are recombined by the basis. With `R^H R` the basis Gram matrix, the joint
//! error equals `||R G - R G_red||_H2`, so an H2-optimal reduction (IRKA) of
//! `R G` yields the compressed model.

use log::warn;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_upper, eig_general, MatrixC, VectorC, C64};
use crate::model::{CompressedParametricModel, ParametricBasis, ParametricModel, PoleResidueModel, SimoRealization};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Number of Gauss-Legendre nodes used for Gram matrices.
pub const GRAM_NODES: usize = 200;

/// Relative distance below which two poles are treated as one when
/// differencing systems.
const MERGE_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrkaInit {
    DominantPoles,
    LogSpaced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrkaConfig {
    pub n_red: usize,
    pub max_iters: usize,
    pub shift_tol: f64,
    pub flip_unstable_reduced: bool,
    pub init: IrkaInit,
}

impl IrkaConfig {
    pub fn new(n_red: usize) -> Self {
        Self {
            n_red,
            max_iters: 100,
            shift_tol: 1e-6,
            flip_unstable_reduced: true,
            init: IrkaInit::DominantPoles,
        }
    }
}

/// Reduced SIMO realization in diagonal form.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSimo {
    pub a_red: MatrixC,
    pub b_red: VectorC,
    pub c_red: MatrixC,
}

impl ReducedSimo {
    pub fn as_simo(&self) -> SimoRealization {
        SimoRealization {
            a_diag: self.a_red.diagonal().iter().copied().collect(),
            b: self.b_red.iter().copied().collect(),
            c: self.c_red.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrkaReport {
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
    /// H2 error `||G - G_red||` of every iterate.
    pub h2_history: Vec<f64>,
    /// Shifts and left tangent directions that define the returned model.
    pub shifts: Vec<C64>,
    pub tangents: Vec<VectorC>,
}

#[derive(Debug, Clone)]
pub struct IrkaResult {
    pub reduced: ReducedSimo,
    pub report: IrkaReport,
    pub h2_error: f64,
}

#[derive(Debug, Clone)]
pub struct Compression {
    pub model: CompressedParametricModel,
    /// Joint H2 x L2 error between the input and compressed models.
    pub error: f64,
    /// Joint H2 x L2 norm of the input model.
    pub input_norm: f64,
    pub report: IrkaReport,
}

/// Parameter-free SIMO form: all local poles on the diagonal, unit input
/// entries, and `c = (D X)^T` with the local residues in the block columns
/// of `D`.
pub fn assemble_simo(model: &ParametricModel) -> Result<SimoRealization> {
    assemble_simo_from(model.local_models(), model.coefficients())
}

/// [`assemble_simo`] from local models and a coefficient matrix (one row per
/// local model).
pub fn assemble_simo_from(locals: &[PoleResidueModel], x: &MatrixC) -> Result<SimoRealization> {
    if x.nrows() != locals.len() {
        return Err(Error::ShapeMismatch(format!("{} coefficient rows for {} local models", x.nrows(), locals.len())));
    }
    let r_p = x.ncols();
    let n_s: usize = locals.iter().map(|m| m.order()).sum();
    let mut a_diag = Vec::with_capacity(n_s);
    let mut c = MatrixC::zeros(r_p, n_s);
    let mut col = 0;
    for (k, lm) in locals.iter().enumerate() {
        for (p, phi) in lm.poles().iter().zip(lm.residues()) {
            let mut pole = *p;
            let mut bump = 0;
            while a_diag.iter().any(|q: &C64| (q - pole).norm() <= 1e-14 * pole.norm().max(1.0)) {
                bump += 1;
                pole = p * (1.0 + 1e-10 * bump as f64);
            }
            if bump > 0 {
                warn!("duplicate pole {p} across local models perturbed to keep the realization diagonal");
            }
            a_diag.push(pole);
            for l in 0..r_p {
                c[(l, col)] = phi * x[(k, l)];
            }
            col += 1;
        }
    }
    SimoRealization::new(a_diag, vec![ONE; n_s], c)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `G[i, j] = int_a^b conj(P_i(p)) P_j(p) dp`, so that
/// `int |V(p)^T g|^2 dp = g^H G g`.
pub fn gram_matrix(basis: &ParametricBasis) -> Result<MatrixC> {
    let (a, b) = basis.domain();
    let (x, w) = gauss_legendre(GRAM_NODES);
    let r = basis.len();
    let mut g = MatrixC::zeros(r, r);
    let half = 0.5 * (b - a);
    for (xk, wk) in x.iter().zip(&w) {
        let p = C64::new(a + half * (xk + 1.0), 0.0);
        let v = basis.eval(p)?;
        for i in 0..r {
            let ci = v[i].conj() * (wk * half);
            for j in 0..r {
                g[(i, j)] += ci * v[j];
            }
        }
    }
    // Symmetrize away quadrature rounding.
    let gh = g.adjoint();
    Ok((g + gh) * C64::new(0.5, 0.0))
}

/// Squared H2 norm of a diagonal SIMO system.
fn h2_sq(a: &[C64], b: &[C64], c: &MatrixC) -> Result<f64> {
    if a.iter().any(|x| x.re >= 0.0) {
        return Err(Error::UnstableSystem);
    }
    let n = a.len();
    let gram = c.adjoint() * c;
    let mut s = ZERO;
    for i in 0..n {
        let bi = b[i].conj();
        for j in 0..n {
            s += gram[(i, j)] * bi * b[j] / (-a[i].conj() - a[j]);
        }
    }
    Ok(s.re.max(0.0))
}

/// `||G||_H2` of a stable diagonal SIMO system.
pub fn h2_norm_simo(sys: &SimoRealization) -> Result<f64> {
    Ok(h2_sq(&sys.a_diag, &sys.b, &sys.c)?.sqrt())
}

/// `||G_1 - G_2||_H2` for diagonal SIMO systems. Poles shared up to a relative
/// `1e-10` are merged first so that nearly equal systems do not lose their
/// difference to cancellation.
pub fn h2_norm_diff(g1: &SimoRealization, g2: &SimoRealization) -> Result<f64> {
    if g1.outputs() != g2.outputs() {
        return Err(Error::ShapeMismatch("difference of systems with different output counts".into()));
    }
    let mut a: Vec<C64> = g1.a_diag.clone();
    let mut c: MatrixC = MatrixC::from_fn(g1.outputs(), g1.order(), |l, i| g1.c[(l, i)] * g1.b[i]);
    let mut extra_a = Vec::new();
    let mut extra_c = Vec::new();
    for j in 0..g2.order() {
        let pj = g2.a_diag[j];
        let col = g2.c.column(j) * g2.b[j];
        match a.iter().position(|p| (p - pj).norm() <= MERGE_RTOL * p.norm().max(f64::MIN_POSITIVE)) {
            Some(i) => {
                let mut ci = c.column_mut(i);
                ci -= &col;
            }
            None => {
                extra_a.push(pj);
                extra_c.push(-col);
            }
        }
    }
    if !extra_a.is_empty() {
        let n1 = a.len();
        a.extend(extra_a);
        let mut cc = MatrixC::zeros(c.nrows(), a.len());
        cc.columns_mut(0, n1).copy_from(&c);
        for (k, col) in extra_c.iter().enumerate() {
            cc.set_column(n1 + k, col);
        }
        c = cc;
    }
    let ones = vec![ONE; a.len()];
    Ok(h2_sq(&a, &ones, &c)?.sqrt())
}

fn sort_key(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re))
}

/// Canonical order (by imaginary, then real part) with collisions separated.
fn canonicalize(shifts: &mut Vec<C64>, tangents: &mut Vec<VectorC>) {
    let mut idx: Vec<usize> = (0..shifts.len()).collect();
    idx.sort_by(|&i, &j| sort_key(&shifts[i], &shifts[j]));
    *shifts = idx.iter().map(|&i| shifts[i]).collect();
    *tangents = idx.iter().map(|&i| tangents[i].clone()).collect();
    for i in 1..shifts.len() {
        let mut k = 0;
        while (0..i).any(|j| (shifts[j] - shifts[i]).norm() <= 1e-8 * shifts[i].norm().max(1e-300)) {
            k += 1;
            shifts[i] *= 1.0 + 1e-8 * k as f64;
        }
    }
}

fn mirror(l: C64) -> C64 {
    // Shift for reduced pole l: -conj(l) after flipping l into the LHP.
    let stable = if l.re > 0.0 { C64::new(-l.re, l.im) } else { l };
    let s = -stable.conj();
    if s.re > 0.0 {
        s
    } else {
        C64::new(1e-8 * s.im.abs().max(1.0), s.im)
    }
}

fn initial_shifts(sys: &SimoRealization, config: &IrkaConfig) -> (Vec<C64>, Vec<VectorC>) {
    let n = config.n_red;
    let r_p = sys.outputs();
    match config.init {
        IrkaInit::DominantPoles => {
            let score = |i: usize| sys.c.column(i).norm() * sys.b[i].norm() / sys.a_diag[i].re.abs();
            let mut idx: Vec<usize> = (0..sys.order()).collect();
            idx.sort_by(|&i, &j| score(j).total_cmp(&score(i)).then(i.cmp(&j)));
            let shifts = idx[..n].iter().map(|&i| mirror(sys.a_diag[i])).collect();
            let tangents = idx[..n]
                .iter()
                .map(|&i| {
                    let c = sys.c.column(i).into_owned();
                    if c.norm() > 0.0 {
                        c
                    } else {
                        VectorC::from_element(r_p, ONE)
                    }
                })
                .collect();
            (shifts, tangents)
        }
        IrkaInit::LogSpaced => {
            let mags: Vec<f64> = sys.a_diag.iter().map(|a| a.norm()).collect();
            let lo = mags.iter().copied().fold(f64::INFINITY, f64::min).max(1e-12);
            let hi = mags.iter().copied().fold(0.0, f64::max).max(lo * (1.0 + 1e-6));
            let shifts = (0..n)
                .map(|k| {
                    let t = if n == 1 { 0.5 } else { k as f64 / (n - 1) as f64 };
                    C64::new((lo.ln() + t * (hi.ln() - lo.ln())).exp(), 0.0)
                })
                .collect();
            (shifts, vec![VectorC::from_element(r_p, ONE); n])
        }
    }
}

fn orthonormal(m: &MatrixC) -> MatrixC {
    m.clone().qr().q()
}

fn is_singular(e: &MatrixC) -> bool {
    let s = e.clone().singular_values();
    let smax = s.iter().copied().fold(0.0, f64::max);
    let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
    !(smax > 0.0) || smin <= 1e-13 * smax
}

/// Projection step: reduced realization interpolating `G` at the shifts
/// (full vector) and along the left tangents.
fn project(sys: &SimoRealization, shifts: &[C64], tangents: &[VectorC]) -> Result<(MatrixC, VectorC, MatrixC)> {
    let n = sys.order();
    let k = shifts.len();
    let mut v = MatrixC::zeros(n, k);
    let mut w = MatrixC::zeros(n, k);
    for (j, (s, t)) in shifts.iter().zip(tangents).enumerate() {
        let cht = sys.c.adjoint() * t;
        for i in 0..n {
            let d = s - sys.a_diag[i];
            if d.norm() == 0.0 {
                return Err(Error::SingularResolvent);
            }
            v[(i, j)] = sys.b[i] / d;
            w[(i, j)] = cht[i] / d.conj();
        }
    }
    let v = orthonormal(&v);
    let w = orthonormal(&w);
    let e = w.adjoint() * &v;
    if e.nrows() != k || e.ncols() != k || is_singular(&e) {
        return Err(Error::SingularProjection(0));
    }
    let av = MatrixC::from_fn(n, k, |i, j| sys.a_diag[i] * v[(i, j)]);
    let lu = e.lu();
    let a_red = lu.solve(&(w.adjoint() * av)).ok_or(Error::SingularProjection(0))?;
    let bvec = VectorC::from_iterator(n, sys.b.iter().copied());
    let b_red = lu.solve(&(w.adjoint() * bvec)).ok_or(Error::SingularProjection(0))?;
    let c_red = &sys.c * v;
    Ok((a_red, b_red, c_red))
}

/// Diagonal form of a reduced realization, with eigenvectors for the tangent
/// update.
fn diagonalize(a: &MatrixC, b: &VectorC, c: &MatrixC) -> Result<(Vec<C64>, VectorC, MatrixC)> {
    let (vals, vecs) = eig_general(a)?;
    let lu = vecs.clone().lu();
    let bd = lu.solve(b).ok_or(Error::Singular)?;
    let cd = c * &vecs;
    Ok((vals, bd, cd))
}

fn reduced_from_diag(vals: &[C64], bd: &VectorC, cd: &MatrixC) -> ReducedSimo {
    ReducedSimo {
        a_red: MatrixC::from_diagonal(&VectorC::from_iterator(vals.len(), vals.iter().copied())),
        b_red: bd.clone(),
        c_red: cd.clone(),
    }
}

fn perturb(shifts: &mut [C64], attempt: usize) {
    for (i, s) in shifts.iter_mut().enumerate() {
        let f = 1e-3 * (attempt as f64) * if i % 2 == 0 { 1.0 } else { -1.0 };
        *s *= 1.0 + f;
        if s.re <= 0.0 {
            s.re = 1e-8 * s.im.abs().max(1.0);
        }
    }
}

struct Iterate {
    reduced: ReducedSimo,
    shifts: Vec<C64>,
    tangents: Vec<VectorC>,
    error: f64,
}

/// IRKA on a stable diagonal SIMO system. A run that hits `max_iters` is
/// flagged in the report and returns the best iterate seen.
pub fn irka_simo(sys: &SimoRealization, config: &IrkaConfig) -> Result<IrkaResult> {
    let n_s = sys.order();
    if config.n_red == 0 || config.n_red > n_s {
        return Err(Error::InvalidInput(format!("n_red = {} must lie in 1..={n_s}", config.n_red)));
    }
    if !sys.is_stable() {
        return Err(Error::UnstableSystem);
    }
    let full_norm = h2_norm_simo(sys)?;
    let (mut shifts, mut tangents) = initial_shifts(sys, config);
    canonicalize(&mut shifts, &mut tangents);

    if full_norm == 0.0 {
        let vals: Vec<C64> = shifts.iter().map(|s| -s.conj()).collect();
        let reduced = reduced_from_diag(&vals, &VectorC::from_element(config.n_red, ONE), &MatrixC::zeros(sys.outputs(), config.n_red));
        return Ok(IrkaResult {
            reduced,
            report: IrkaReport {
                iterations: 0,
                converged: true,
                restarts: 0,
                h2_history: vec![0.0],
                shifts,
                tangents,
            },
            h2_error: 0.0,
        });
    }

    let mut restarts = 0;
    let mut history = Vec::new();
    let mut best: Option<Iterate> = None;
    let mut last: Option<Iterate> = None;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iters {
        let (a_red, b_red, c_red) = match project(sys, &shifts, &tangents) {
            Ok(p) => p,
            Err(Error::SingularProjection(_)) | Err(Error::SingularResolvent) => {
                if restarts == 3 {
                    return Err(Error::SingularProjection(restarts));
                }
                restarts += 1;
                warn!("IRKA projection singular; restarting with perturbed shifts ({restarts}/3)");
                perturb(&mut shifts, restarts);
                canonicalize(&mut shifts, &mut tangents);
                continue;
            }
            Err(e) => return Err(e),
        };
        iterations += 1;
        let (vals, bd, cd) = diagonalize(&a_red, &b_red, &c_red)?;
        let reduced = reduced_from_diag(&vals, &bd, &cd);
        let error = if vals.iter().all(|v| v.re < 0.0) {
            h2_norm_diff(sys, &reduced.as_simo())?
        } else {
            f64::INFINITY
        };
        history.push(error);
        let it = Iterate {
            reduced,
            shifts: shifts.clone(),
            tangents: tangents.clone(),
            error,
        };
        if best.as_ref().is_none_or(|b| error < b.error) {
            best = Some(Iterate {
                reduced: it.reduced.clone(),
                shifts: it.shifts.clone(),
                tangents: it.tangents.clone(),
                error,
            });
        }

        let mut new_shifts: Vec<C64> = vals.iter().map(|l| mirror(*l)).collect();
        let mut new_tangents: Vec<VectorC> = (0..vals.len())
            .map(|i| {
                let t = cd.column(i).into_owned();
                if t.norm() > 1e-300 {
                    t
                } else {
                    VectorC::from_element(sys.outputs(), ONE)
                }
            })
            .collect();
        canonicalize(&mut new_shifts, &mut new_tangents);
        let change = shifts
            .iter()
            .zip(&new_shifts)
            .map(|(a, b)| (a - b).norm() / a.norm().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        last = Some(it);
        if change < config.shift_tol {
            converged = true;
            break;
        }
        shifts = new_shifts;
        tangents = new_tangents;
    }
    if !converged {
        warn!("IRKA stopped after {iterations} iterations without meeting the shift tolerance");
    }
    let chosen = if converged { last } else { best }.ok_or(Error::NoConvergence)?;
    let mut reduced = chosen.reduced;
    if config.flip_unstable_reduced {
        for i in 0..reduced.a_red.nrows() {
            let l = reduced.a_red[(i, i)];
            if l.re >= 0.0 {
                reduced.a_red[(i, i)] = if l.re > 0.0 { C64::new(-l.re, l.im) } else { C64::new(-1e-8 * l.im.abs().max(1.0), l.im) };
            }
        }
    }
    let h2_error = if reduced.a_red.diagonal().iter().all(|l| l.re < 0.0) {
        h2_norm_diff(sys, &reduced.as_simo())?
    } else {
        f64::INFINITY
    };
    Ok(IrkaResult {
        reduced,
        report: IrkaReport {
            iterations,
            converged,
            restarts,
            h2_history: history,
            shifts: chosen.shifts,
            tangents: chosen.tangents,
        },
        h2_error,
    })
}

/// SIMO system with `c <- R c`.
pub fn weighted(sys: &SimoRealization, r: &MatrixC) -> SimoRealization {
    SimoRealization {
        a_diag: sys.a_diag.clone(),
        b: sys.b.clone(),
        c: r * &sys.c,
    }
}

/// Outcome of reducing `R G`, with the output map already unweighted.
#[derive(Debug, Clone)]
pub struct WeightedReduction {
    pub a_red: MatrixC,
    pub b_red: VectorC,
    pub c_red_unweighted: MatrixC,
    pub error: f64,
    pub input_norm: f64,
    pub report: IrkaReport,
}

/// IRKA on `R G` followed by `c <- R^-1 c`; `r` must be upper triangular.
pub fn reduce_weighted(sys: &SimoRealization, r: &MatrixC, config: &IrkaConfig) -> Result<WeightedReduction> {
    let sys_w = weighted(sys, r);
    let input_norm = h2_norm_simo(&sys_w)?;
    let irka = irka_simo(&sys_w, config)?;
    let c_u = r
        .clone()
        .solve_upper_triangular(&irka.reduced.c_red)
        .ok_or(Error::Singular)?;
    Ok(WeightedReduction {
        a_red: irka.reduced.a_red,
        b_red: irka.reduced.b_red,
        c_red_unweighted: c_u,
        error: irka.h2_error,
        input_norm,
        report: irka.report,
    })
}

/// Compresses a SIMO system with basis `basis` and Gram factor `r`.
pub fn compress_simo(sys: &SimoRealization, basis: &ParametricBasis, r: &MatrixC, config: &IrkaConfig) -> Result<Compression> {
    let w = reduce_weighted(sys, r, config)?;
    Ok(Compression {
        model: CompressedParametricModel {
            basis: basis.clone(),
            gram_chol: r.clone(),
            a_red: w.a_red,
            b_red: w.b_red,
            c_red_unweighted: w.c_red_unweighted,
        },
        error: w.error,
        input_norm: w.input_norm,
        report: w.report,
    })
}

/// Phase 2: Gram factor, weighted IRKA, and the unweighted reduced output map.
pub fn compress(model: &ParametricModel, config: &IrkaConfig) -> Result<Compression> {
    if !model.is_stable() {
        return Err(Error::UnstableSystem);
    }
    let sys = assemble_simo(model)?;
    let r = cholesky_upper(&gram_matrix(model.basis())?)?;
    compress_simo(&sys, model.basis(), &r, config)
}

/// Either kind of model, viewed as a diagonal SIMO system plus basis.
pub trait SimoForm {
    fn basis(&self) -> &ParametricBasis;
    fn diagonal_simo(&self) -> Result<SimoRealization>;
}

impl SimoForm for ParametricModel {
    fn basis(&self) -> &ParametricBasis {
        ParametricModel::basis(self)
    }
    fn diagonal_simo(&self) -> Result<SimoRealization> {
        assemble_simo(self)
    }
}

impl SimoForm for CompressedParametricModel {
    fn basis(&self) -> &ParametricBasis {
        &self.basis
    }
    fn diagonal_simo(&self) -> Result<SimoRealization> {
        let n = self.order();
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || self.a_red[(i, j)] == ZERO));
        if diagonal {
            return SimoRealization::new(
                self.a_red.diagonal().iter().copied().collect(),
                self.b_red.iter().copied().collect(),
                self.c_red_unweighted.clone(),
            );
        }
        let (vals, bd, cd) = diagonalize(&self.a_red, &self.b_red, &self.c_red_unweighted)?;
        SimoRealization::new(vals, bd.iter().copied().collect(), cd)
    }
}

/// Joint `H2 x L2` distance between two models on the same basis.
pub fn h2l2_error(a: &dyn SimoForm, b: &dyn SimoForm) -> Result<f64> {
    if a.basis() != b.basis() {
        return Err(Error::BasisMismatch);
    }
    let r = cholesky_upper(&gram_matrix(a.basis())?)?;
    let ga = weighted(&a.diagonal_simo()?, &r);
    let gb = weighted(&b.diagonal_simo()?, &r);
    h2_norm_diff(&ga, &gb)
}

/// Joint `H2 x L2` norm of a model.
pub fn h2l2_norm(a: &dyn SimoForm) -> Result<f64> {
    let r = cholesky_upper(&gram_matrix(a.basis())?)?;
    h2_norm_simo(&weighted(&a.diagonal_simo()?, &r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, fro_norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
        c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    fn random_simo(rng: &mut ChaCha8Rng, n: usize, r_p: usize) -> SimoRealization {
        let a = (0..n).map(|_| c64(-rng.random_range(0.1..2.0), rng.random_range(-5.0..5.0))).collect();
        let b = (0..n).map(|_| rand_c(rng)).collect();
        let c = MatrixC::from_fn(r_p, n, |_, _| rand_c(rng));
        SimoRealization::new(a, b, c).unwrap()
    }

    /// Trapezoid rule for (1/2pi) int |G(iw)|^2 dw over both half-axes on a
    /// log grid.
    fn h2_quadrature(f: impl Fn(C64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let (l0, l1) = (lo.ln(), hi.ln());
        let h = (l1 - l0) / (n - 1) as f64;
        let mut acc = 0.0;
        for k in 0..n {
            let w = (l0 + h * k as f64).exp();
            let g = (f(c64(0.0, w)) + f(c64(0.0, -w))) * w;
            acc += if k == 0 || k == n - 1 { 0.5 * g } else { g };
        }
        acc * h / (2.0 * std::f64::consts::PI)
    }

    fn model_with(locals: Vec<PoleResidueModel>, basis: ParametricBasis, x: MatrixC) -> ParametricModel {
        ParametricModel::new(locals, basis, x, false).unwrap()
    }

    fn random_parametric(rng: &mut ChaCha8Rng, n_loc: usize, basis: ParametricBasis) -> ParametricModel {
        let locals = (0..n_loc)
            .map(|k| {
                let w = 0.7 + k as f64;
                PoleResidueModel::new(vec![c64(-0.2 * w, w), c64(-0.2 * w, -w)], vec![rand_c(rng), rand_c(rng)]).unwrap()
            })
            .collect();
        let x = MatrixC::from_fn(n_loc, basis.len(), |_, _| rand_c(rng));
        model_with(locals, basis, x)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(GRAM_NODES);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        for deg in [2usize, 10, 100, 398] {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let want = 2.0 / (deg + 1) as f64;
            assert!((got - want).abs() < 1e-12, "degree {deg}");
        }
        let (x5, _) = gauss_legendre(5);
        assert!((x5[2]).abs() < 1e-15 && (x5[4] - (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0).abs() < 1e-14);
    }

    #[test]
    fn gram_examples() {
        let g = gram_matrix(&ParametricBasis::monomial(1, 0., 1.).unwrap()).unwrap();
        let want = [[1.0, 0.5], [0.5, 1.0 / 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((g[(i, j)] - c64(want[i][j], 0.)).norm() < 1e-14);
            }
        }
        let g = gram_matrix(&ParametricBasis::rational(vec![c64(3., 0.)], 1., 2.).unwrap()).unwrap();
        assert!((g[(0, 0)] - c64(0.5, 0.)).norm() < 1e-14);
        // Orthonormal Legendre basis on [-1, 1]: sqrt(1/2), sqrt(3/2) p.
        let g = gram_matrix(&ParametricBasis::monomial(1, -1., 1.).unwrap()).unwrap();
        let d = MatrixC::from_diagonal(&VectorC::from_vec(vec![c64(0.5f64.sqrt(), 0.), c64(1.5f64.sqrt(), 0.)]));
        assert!(fro_norm(&(&d * g * &d - MatrixC::identity(2, 2))) < 1e-13);
    }

    #[test]
    fn gram_cholesky_reconstructs() {
        for basis in [
            ParametricBasis::bernstein(5, 0.01, 0.8).unwrap(),
            ParametricBasis::rational(vec![c64(0.4, 0.), c64(2., 1.5), c64(2., -1.5), c64(5.5, 0.)], 1., 5.).unwrap(),
        ] {
            let g = gram_matrix(&basis).unwrap();
            let r = cholesky_upper(&g).unwrap();
            assert!(fro_norm(&(r.adjoint() * &r - &g)) <= 1e-12 * fro_norm(&g));
        }
    }

    #[test]
    fn gram_weights_the_parameter_integral() {
        let basis = ParametricBasis::rational(vec![c64(2., 1.5), c64(2., -1.5)], -1., 1.).unwrap();
        let g = gram_matrix(&basis).unwrap();
        let e = VectorC::from_vec(vec![c64(0.3, -1.), c64(2., 0.5)]);
        let quad = (0..=20000)
            .map(|k| {
                let p = -1.0 + 2.0 * k as f64 / 20000.0;
                let v = basis.eval(c64(p, 0.)).unwrap();
                let f = (v[0] * e[0] + v[1] * e[1]).norm_sqr();
                if k == 0 || k == 20000 {
                    0.5 * f
                } else {
                    f
                }
            })
            .sum::<f64>()
            * 2.0
            / 20000.0;
        let form = (e.adjoint() * &g * &e)[(0, 0)].re;
        assert!((quad - form).abs() <= 1e-7 * form);
    }

    #[test]
    fn h2_examples() {
        let s = SimoRealization::new(vec![c64(-1., 0.)], vec![ONE], MatrixC::from_element(1, 1, ONE)).unwrap();
        assert!((h2_norm_simo(&s).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let z = SimoRealization::new(vec![c64(-1., 0.)], vec![ZERO], MatrixC::from_element(1, 1, ONE)).unwrap();
        assert_eq!(h2_norm_simo(&z).unwrap(), 0.0);
        let u = SimoRealization::new(vec![c64(1., 0.)], vec![ONE], MatrixC::from_element(1, 1, ONE)).unwrap();
        assert!(matches!(h2_norm_simo(&u), Err(Error::UnstableSystem)));
    }

    #[test]
    fn h2_formula_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for n in [3usize, 8] {
            let s = random_simo(&mut rng, n, 3);
            let ims: Vec<f64> = s.a_diag.iter().map(|a| a.norm()).collect();
            let lo = 1e-5 * ims.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = 1e6 * ims.iter().copied().fold(0.0, f64::max);
            let q = h2_quadrature(|w| s.eval(w).unwrap().norm_squared(), lo, hi, 400_000).sqrt();
            let f = h2_norm_simo(&s).unwrap();
            assert!((q - f).abs() <= 1e-4 * f, "n {n}: {q} vs {f}");
        }
    }

    #[test]
    fn assembled_simo_reproduces_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let basis = ParametricBasis::bernstein(2, 0., 1.).unwrap();
        let m = random_parametric(&mut rng, 3, basis.clone());
        let sys = assemble_simo(&m).unwrap();
        for _ in 0..20 {
            let s = c64(rng.random_range(-0.5..0.5), rng.random_range(-4.0..4.0));
            let p = c64(rng.random_range(0.0..1.0), 0.0);
            let v = basis.eval(p).unwrap();
            let g = sys.eval(s).unwrap();
            let via: C64 = v.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
            let direct = m.eval(s, p).unwrap();
            assert!((via - direct).norm() <= 1e-12 * direct.norm());
        }
        let one = model_with(
            vec![PoleResidueModel::new(vec![c64(-1., 0.)], vec![c64(2., 0.)]).unwrap()],
            ParametricBasis::monomial(0, 0., 1.).unwrap(),
            MatrixC::from_element(1, 1, ONE),
        );
        let g = assemble_simo(&one).unwrap();
        assert!((g.eval(c64(0., 1.)).unwrap()[0] - c64(2., 0.) / c64(1., 1.)).norm() < 1e-15);
        let zero = model_with(m.local_models().to_vec(), basis, MatrixC::zeros(3, 3));
        assert!(assemble_simo(&zero).unwrap().c.iter().all(|z| *z == ZERO));
    }

    #[test]
    fn duplicate_poles_are_separated() {
        let lm = PoleResidueModel::new(vec![c64(-1., 2.), c64(-1., -2.)], vec![ONE, ONE]).unwrap();
        let m = model_with(vec![lm.clone(), lm], ParametricBasis::monomial(0, 0., 1.).unwrap(), MatrixC::from_element(2, 1, ONE));
        let s = assemble_simo(&m).unwrap();
        for i in 0..4 {
            for j in 0..i {
                assert_ne!(s.a_diag[i], s.a_diag[j]);
            }
        }
        // Conjugate pairs stay paired.
        assert_eq!(s.a_diag[2], s.a_diag[3].conj());
    }

    #[test]
    fn irka_full_order_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let s = random_simo(&mut rng, 5, 2);
        let res = irka_simo(&s, &IrkaConfig::new(5)).unwrap();
        assert!(res.h2_error <= 1e-10 * h2_norm_simo(&s).unwrap(), "{}", res.h2_error);
        let one = random_simo(&mut rng, 1, 2);
        let r1 = irka_simo(&one, &IrkaConfig::new(1)).unwrap();
        assert!(r1.h2_error <= 1e-14 * h2_norm_simo(&one).unwrap());
    }

    /// Best H2 error of a one-pole model `rho / (s - l)` to a scalar diagonal
    /// system, for a fixed `l`: the optimal residue is a projection.
    fn one_pole_error(sys: &SimoRealization, l: C64) -> f64 {
        let full = h2_norm_simo(sys).unwrap().powi(2);
        let ip: C64 = (0..sys.order()).map(|j| sys.c[(0, j)] * sys.b[j] / (-l.conj() - sys.a_diag[j])).sum();
        (full - ip.norm_sqr() * (-2.0 * l.re)).max(0.0).sqrt()
    }

    #[test]
    fn irka_two_to_one_matches_global_optimum() {
        let sys = SimoRealization::new(
            vec![c64(-1., 0.), c64(-4., 0.)],
            vec![ONE, ONE],
            MatrixC::from_row_slice(1, 2, &[c64(1., 0.), c64(2., 0.)]),
        )
        .unwrap();
        let res = irka_simo(&sys, &IrkaConfig::new(1)).unwrap();
        assert!(res.report.converged);
        // Grid over the pole, then coordinate-wise golden-section polish.
        let mut best = (f64::INFINITY, c64(0., 0.));
        for i in 1..=200 {
            for j in -50..=50 {
                let l = c64(-0.05 * i as f64, 0.05 * j as f64);
                let e = one_pole_error(&sys, l);
                if e < best.0 {
                    best = (e, l);
                }
            }
        }
        let mut l = best.1;
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..20 {
            for dim in 0..2 {
                let f = |t: f64| {
                    let z = if dim == 0 { c64(t, l.im) } else { c64(l.re, t) };
                    one_pole_error(&sys, z)
                };
                let c0 = if dim == 0 { l.re } else { l.im };
                let (mut a, mut b) = (c0 - 0.05, c0 + 0.05);
                if dim == 0 {
                    b = b.min(-1e-6);
                }
                for _ in 0..60 {
                    let (x1, x2) = (b - phi * (b - a), a + phi * (b - a));
                    if f(x1) < f(x2) {
                        b = x2;
                    } else {
                        a = x1;
                    }
                }
                let t = 0.5 * (a + b);
                l = if dim == 0 { c64(t, l.im) } else { c64(l.re, t) };
            }
        }
        let oracle = one_pole_error(&sys, l);
        assert!((res.h2_error - oracle).abs() <= 1e-4 * oracle, "{} vs {oracle}", res.h2_error);
    }

    #[test]
    fn irka_fixed_point_interpolates() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let a: Vec<C64> = (0..12)
            .flat_map(|k| {
                let w = 0.5 + k as f64;
                let p = c64(-0.05 * w - 0.1, w);
                [p, p.conj()]
            })
            .collect();
        let n = a.len();
        let c = MatrixC::from_fn(3, n, |_, _| rand_c(&mut rng));
        let sys = SimoRealization::new(a, vec![ONE; n], c).unwrap();
        let res = irka_simo(&sys, &IrkaConfig::new(6)).unwrap();
        assert!(res.report.converged, "{:?}", res.report.h2_history);
        let red = res.reduced.as_simo();
        assert!(red.is_stable());
        for (sig, t) in res.report.shifts.iter().zip(&res.report.tangents) {
            let g = sys.eval(*sig).unwrap();
            let gr = red.eval(*sig).unwrap();
            assert!((&g - &gr).norm() <= 1e-6 * g.norm());
            let lt = (t.adjoint() * &g)[(0, 0)];
            let ltr = (t.adjoint() * &gr)[(0, 0)];
            assert!((lt - ltr).norm() <= 1e-6 * lt.norm());
        }
        let mut mirrored: Vec<C64> = red.a_diag.iter().map(|l| -l.conj()).collect();
        mirrored.sort_by(sort_key);
        for (m, s) in mirrored.iter().zip(&res.report.shifts) {
            assert!((m - s).norm() <= 1e-6 * s.norm());
        }
    }

    #[test]
    fn compress_full_order_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let basis = ParametricBasis::bernstein(1, 0., 1.).unwrap();
        let m = random_parametric(&mut rng, 2, basis.clone());
        let c = compress(&m, &IrkaConfig::new(4)).unwrap();
        assert!(c.error <= 1e-10 * c.input_norm, "{} vs {}", c.error, c.input_norm);
        let via = h2l2_error(&m, &c.model).unwrap();
        assert!(via <= 1e-10 * c.input_norm);
        assert!(c.model.is_stable().unwrap());

        let zero = model_with(m.local_models().to_vec(), basis, MatrixC::zeros(2, 2));
        for n_red in [1, 3] {
            let c = compress(&zero, &IrkaConfig::new(n_red)).unwrap();
            assert_eq!(c.model.eval(c64(0.3, 1.), c64(0.5, 0.)).unwrap(), ZERO);
        }
    }

    #[test]
    fn h2l2_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let basis = ParametricBasis::bernstein(2, 0., 1.).unwrap();
        let m = random_parametric(&mut rng, 3, basis.clone());
        assert_eq!(h2l2_error(&m, &m).unwrap(), 0.0);
        let zero = model_with(m.local_models().to_vec(), basis, MatrixC::zeros(3, 3));
        let want = h2l2_norm(&m).unwrap();
        assert!((h2l2_error(&m, &zero).unwrap() - want).abs() <= 1e-12 * want);
        let other = random_parametric(&mut rng, 3, ParametricBasis::bernstein(3, 0., 1.).unwrap());
        assert!(matches!(h2l2_error(&m, &other), Err(Error::BasisMismatch)));
    }

    #[test]
    fn joint_norm_matches_two_dimensional_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let basis = ParametricBasis::bernstein(2, 0., 1.).unwrap();
        let a = random_parametric(&mut rng, 2, basis.clone());
        let b = compress(&a, &IrkaConfig::new(2)).unwrap().model;
        let formula = h2l2_error(&a, &b).unwrap();
        // 2000 log-spaced frequencies (both half-axes) x 200 parameter points.
        let np = 200;
        let quad: f64 = (0..np)
            .map(|j| {
                let p = c64(j as f64 / (np - 1) as f64, 0.0);
                let wj = if j == 0 || j == np - 1 { 0.5 } else { 1.0 } / (np - 1) as f64;
                wj * h2_quadrature(|s| (a.eval(s, p).unwrap() - b.eval(s, p).unwrap()).norm_sqr(), 1e-3, 1e3, 2000)
            })
            .sum();
        assert!((quad.sqrt() - formula).abs() <= 1e-3 * formula, "{} vs {formula}", quad.sqrt());
    }
}
