//! Adaptive rational parametric basis by variable projection.
//!
//! The coefficients are eliminated in closed form, leaving a nonlinear
//! least-squares problem in the basis poles alone:
//! `r(pi) = vec(H - P H conj(Q(pi)))` with `P = A A^+` and `Q = B B^+`.
//! It is minimized by damped Gauss-Newton in real coordinates.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::coupled::{basis_matrix, build_design, solve_with_realness, DEFAULT_RANK_RTOL};
use crate::error::{Error, Result};
use crate::linalg::{fro_norm, lstsq_real, pinv, MatrixC, VectorC, C64};
use crate::model::{distance_to_interval, FrequencyResponseDataset, ParametricBasis, ParametricModel, PoleResidueModel};

/// Basis poles in real coordinates: real poles, then conjugate pairs given by
/// one member `(re, im)` with `im > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleCoordinates {
    pub real_poles: Vec<f64>,
    pub pair_poles: Vec<(f64, f64)>,
}

impl PoleCoordinates {
    pub fn real(poles: Vec<f64>) -> Self {
        Self {
            real_poles: poles,
            pair_poles: Vec::new(),
        }
    }

    /// Number of basis poles `r_p`.
    pub fn len(&self) -> usize {
        self.real_poles.len() + 2 * self.pair_poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Poles in basis order: real poles, then each pair as `pi, conj(pi)`.
    pub fn poles(&self) -> Vec<C64> {
        let mut out: Vec<C64> = self.real_poles.iter().map(|&x| C64::new(x, 0.0)).collect();
        for &(re, im) in &self.pair_poles {
            out.push(C64::new(re, im));
            out.push(C64::new(re, -im));
        }
        out
    }

    /// Splits a conjugation-closed pole set into coordinates.
    pub fn from_poles(poles: &[C64]) -> Result<Self> {
        let mut real = Vec::new();
        let mut pairs = Vec::new();
        let mut used = vec![false; poles.len()];
        for i in 0..poles.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            let p = poles[i];
            if p.im == 0.0 {
                real.push(p.re);
                continue;
            }
            let j = (0..poles.len())
                .find(|&j| !used[j] && (poles[j] - p.conj()).norm() <= 1e-12 * p.norm().max(1.0))
                .ok_or(Error::NotConjugationClosed)?;
            used[j] = true;
            pairs.push((p.re, p.im.abs()));
        }
        Ok(Self {
            real_poles: real,
            pair_poles: pairs,
        })
    }

    /// Real coordinates: the real poles, then `(re, im)` for every pair.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.real_poles.clone();
        for &(re, im) in &self.pair_poles {
            v.push(re);
            v.push(im);
        }
        v
    }

    /// Same layout as `self` with coordinates taken from `v` (see [`Self::to_vec`]).
    pub fn with_values(&self, v: &[f64]) -> Self {
        let nr = self.real_poles.len();
        Self {
            real_poles: v[..nr].to_vec(),
            pair_poles: v[nr..].chunks(2).map(|c| (c[0], c[1])).collect(),
        }
    }

    /// Smallest distance from a pole to the interval `[a, b]`.
    pub fn min_distance(&self, a: f64, b: f64) -> f64 {
        self.poles().iter().map(|p| distance_to_interval(*p, a, b)).fold(f64::INFINITY, f64::min)
    }

    fn admissible(&self, a: f64, b: f64, guard: f64) -> bool {
        self.pair_poles.iter().all(|p| p.1 > 0.0) && self.min_distance(a, b) >= guard && distinct(&self.poles())
    }

    fn check_guard(&self, a: f64, b: f64, guard: f64) -> Result<()> {
        for p in self.poles() {
            if distance_to_interval(p, a, b) < guard {
                return Err(Error::GuardViolation {
                    pole: p.to_string(),
                    guard,
                });
            }
        }
        if self.pair_poles.iter().any(|p| p.1 <= 0.0) {
            return Err(Error::InvalidInput("pair poles need a positive imaginary part".into()));
        }
        Ok(())
    }
}

fn distinct(p: &[C64]) -> bool {
    (0..p.len()).all(|i| (0..i).all(|j| p[i] != p[j]))
}

/// Default starting poles: real, alternating on either side of `[a, b]`.
pub fn default_initial_poles(a: f64, b: f64, r_p: usize, guard: f64) -> PoleCoordinates {
    let len = b - a;
    let mut offsets: Vec<f64> = (0..r_p).map(|l| ((l / 2) as f64 + 0.5) * len / r_p as f64).collect();
    if offsets.first().is_some_and(|o| *o < guard) {
        offsets.iter_mut().for_each(|o| *o += guard);
    }
    let poles = offsets
        .iter()
        .enumerate()
        .map(|(l, o)| if l % 2 == 0 { a - o } else { b + o })
        .collect();
    PoleCoordinates::real(poles)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    GolubPereyra,
    Kaufman,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarproConfig {
    pub max_iters: usize,
    /// Stop when `||J^H r|| <= grad_tol`, or when the Gauss-Newton step
    /// becomes negligible relative to the pole coordinates.
    pub grad_tol: f64,
    pub armijo: f64,
    pub max_halvings: usize,
    /// Minimum pole distance to the parameter interval; defaults to
    /// `0.05 (b - a)`.
    pub guard: Option<f64>,
    pub jacobian: JacobianMode,
    /// Parameter interval; defaults to the range of the parameter samples.
    pub interval: Option<(f64, f64)>,
    pub enforce_real: bool,
    pub rank_rtol: f64,
}

impl Default for VarproConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            grad_tol: 1e-8,
            armijo: 1e-4,
            max_halvings: 30,
            guard: None,
            jacobian: JacobianMode::GolubPereyra,
            interval: None,
            enforce_real: false,
            rank_rtol: DEFAULT_RANK_RTOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarproReport {
    pub iterations: usize,
    pub converged: bool,
    /// `||r||^2` at the start and after every accepted step.
    pub objective_history: Vec<f64>,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct AdaptiveFit {
    pub model: ParametricModel,
    pub poles: PoleCoordinates,
    pub report: VarproReport,
    /// `||A X B^T - H||_F / ||H||_F` for the returned model.
    pub rel_residual: f64,
}

/// The reduced problem: data `H`, its projection `P H`, parameter samples and
/// the admissible region.
struct Problem<'a> {
    h: &'a MatrixC,
    ph: MatrixC,
    params: &'a [C64],
    interval: (f64, f64),
}

struct Eval {
    r: VectorC,
    b: MatrixC,
    b_pinv: MatrixC,
    q: MatrixC,
}

impl<'a> Problem<'a> {
    fn new(a: &MatrixC, h: &'a MatrixC, params: &'a [C64], interval: (f64, f64), rank_rtol: f64) -> Result<Self> {
        if a.nrows() != h.nrows() || params.len() != h.ncols() {
            return Err(Error::ShapeMismatch("varpro: design and data shapes disagree".into()));
        }
        let smax = a.clone().singular_values().iter().copied().fold(0.0, f64::max);
        let ap = pinv(a, Some(rank_rtol * smax))?;
        let ph = a * (ap * h);
        Ok(Self {
            h,
            ph,
            params,
            interval,
        })
    }

    fn eval(&self, c: &PoleCoordinates) -> Result<Eval> {
        let basis = ParametricBasis::rational(c.poles(), self.interval.0, self.interval.1)?;
        let b = basis_matrix(&basis, self.params)?;
        let b_pinv = pinv(&b, None)?;
        let q = &b * &b_pinv;
        let fit = &self.ph * q.map(|z| z.conj());
        let r = VectorC::from_iterator(self.h.len(), (self.h - fit).iter().copied());
        Ok(Eval { r, b, b_pinv, q })
    }

    /// Derivative of `B` with respect to real coordinate `k`.
    fn d_b(&self, c: &PoleCoordinates, k: usize) -> MatrixC {
        let poles = c.poles();
        let mut d = MatrixC::zeros(self.params.len(), poles.len());
        let nr = c.real_poles.len();
        let col = |l: usize, d: &mut MatrixC, f: C64| {
            for (i, mu) in self.params.iter().enumerate() {
                let t = mu - poles[l];
                d[(i, l)] = f / (t * t);
            }
        };
        if k < nr {
            col(k, &mut d, C64::new(1.0, 0.0));
        } else {
            let pair = (k - nr) / 2;
            let l = nr + 2 * pair;
            if (k - nr) % 2 == 0 {
                col(l, &mut d, C64::new(1.0, 0.0));
                col(l + 1, &mut d, C64::new(1.0, 0.0));
            } else {
                col(l, &mut d, C64::new(0.0, 1.0));
                col(l + 1, &mut d, C64::new(0.0, -1.0));
            }
        }
        d
    }

    fn jacobian(&self, c: &PoleCoordinates, e: &Eval, mode: JacobianMode) -> Result<MatrixC> {
        let n = c.to_vec().len();
        let mut j = MatrixC::zeros(self.h.len(), n);
        match mode {
            JacobianMode::FiniteDifference => {
                let theta = c.to_vec();
                for k in 0..n {
                    let step = 1e-6 * theta[k].abs().max(1.0);
                    let mut tp = theta.clone();
                    let mut tm = theta.clone();
                    tp[k] += step;
                    tm[k] -= step;
                    let rp = self.eval(&c.with_values(&tp))?.r;
                    let rm = self.eval(&c.with_values(&tm))?.r;
                    j.set_column(k, &((rp - rm) / C64::new(2.0 * step, 0.0)));
                }
            }
            JacobianMode::GolubPereyra | JacobianMode::Kaufman => {
                let m_p = self.params.len();
                let q_perp = MatrixC::identity(m_p, m_p) - &e.q;
                for k in 0..n {
                    let t = &q_perp * self.d_b(c, k) * &e.b_pinv;
                    let dq = if mode == JacobianMode::GolubPereyra { &t + t.adjoint() } else { t };
                    let dr = -(&self.ph * dq.transpose());
                    j.set_column(k, &VectorC::from_iterator(self.h.len(), dr.iter().copied()));
                }
            }
        }
        let _ = &e.b;
        Ok(j)
    }
}

fn realify(j: &MatrixC) -> DMatrix<f64> {
    let m = j.nrows();
    DMatrix::from_fn(2 * m, j.ncols(), |i, k| if i < m { j[(i, k)].re } else { j[(i - m, k)].im })
}

fn realify_vec(r: &VectorC) -> DVector<f64> {
    let m = r.len();
    DVector::from_fn(2 * m, |i, _| if i < m { r[i].re } else { r[i - m].im })
}

fn data_interval(params: &[C64]) -> (f64, f64) {
    let lo = params.iter().map(|p| p.re).fold(f64::INFINITY, f64::min);
    let hi = params.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Projected residual `vec(H - P H conj(Q(pi)))`.
pub fn residual(
    coords: &PoleCoordinates,
    a: &MatrixC,
    h: &MatrixC,
    params: &[C64],
    interval: (f64, f64),
    guard: f64,
) -> Result<VectorC> {
    coords.check_guard(interval.0, interval.1, guard)?;
    let prob = Problem::new(a, h, params, interval, DEFAULT_RANK_RTOL)?;
    Ok(prob.eval(coords)?.r)
}

/// Derivative of [`residual`] with respect to the real pole coordinates.
pub fn jacobian(
    coords: &PoleCoordinates,
    a: &MatrixC,
    h: &MatrixC,
    params: &[C64],
    interval: (f64, f64),
    guard: f64,
    mode: JacobianMode,
) -> Result<MatrixC> {
    coords.check_guard(interval.0, interval.1, guard)?;
    let prob = Problem::new(a, h, params, interval, DEFAULT_RANK_RTOL)?;
    let e = prob.eval(coords)?;
    prob.jacobian(coords, &e, mode)
}

/// Optimizes `r_p` rational basis poles for fixed local models and returns
/// the resulting parametric model. A run that exhausts `max_iters` is flagged
/// in the report and returns the last (best) iterate.
pub fn fit_adaptive_basis(
    dataset: &FrequencyResponseDataset,
    local_models: &[PoleResidueModel],
    r_p: usize,
    pi0: Option<PoleCoordinates>,
    config: &VarproConfig,
) -> Result<AdaptiveFit> {
    if r_p == 0 {
        return Err(Error::InvalidInput("r_p must be at least 1".into()));
    }
    if dataset.weights().is_some() {
        warn!("variable projection ignores sample weights");
    }
    let params = dataset.parameters();
    let (a_lo, b_hi) = config.interval.unwrap_or_else(|| data_interval(params));
    if !(a_lo < b_hi) {
        return Err(Error::InvalidInput("parameter interval is degenerate".into()));
    }
    let guard = config.guard.unwrap_or(0.05 * (b_hi - a_lo));
    if !(guard > 0.0) {
        return Err(Error::InvalidInput("guard margin must be positive".into()));
    }
    let mut coords = pi0.unwrap_or_else(|| default_initial_poles(a_lo, b_hi, r_p, guard));
    if coords.len() != r_p {
        return Err(Error::ShapeMismatch(format!("{} initial poles for r_p = {r_p}", coords.len())));
    }
    coords.check_guard(a_lo, b_hi, guard)?;

    let freqs = dataset.frequencies();
    let h = dataset.samples();
    let design0 = build_design(local_models, freqs, &ParametricBasis::monomial(0, a_lo, b_hi)?, params)?;
    let prob = Problem::new(&design0.a, h, params, (a_lo, b_hi), config.rank_rtol)?;
    let h2 = fro_norm(h).powi(2);
    let grad_scale = h2.max(f64::MIN_POSITIVE);

    let mut e = prob.eval(&coords)?;
    let mut f = e.r.norm_squared();
    let mut history = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;

    while iterations < config.max_iters {
        iterations += 1;
        let j = prob.jacobian(&coords, &e, config.jacobian)?;
        let jr = realify(&j);
        let rr = realify_vec(&e.r);
        let g = jr.transpose() * &rr;
        grad_norm = g.norm();
        if grad_norm <= config.grad_tol || f <= 1e-30 * grad_scale {
            converged = true;
            break;
        }
        let delta = lstsq_real(&jr, &(-&rr))?;
        let theta_norm = coords.to_vec().iter().map(|x| x * x).sum::<f64>().sqrt();
        if delta.norm() <= 1e-13 * (1.0 + theta_norm) {
            converged = true;
            break;
        }
        let slope = 2.0 * g.dot(&delta);
        let theta = coords.to_vec();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=config.max_halvings {
            let cand_v: Vec<f64> = theta.iter().zip(delta.iter()).map(|(x, d)| x + t * d).collect();
            let cand = coords.with_values(&cand_v);
            if cand.admissible(a_lo, b_hi, guard) {
                if let Ok(ec) = prob.eval(&cand) {
                    let fc = ec.r.norm_squared();
                    if fc <= f + config.armijo * t * slope && fc < f {
                        accepted = Some((cand, ec, fc));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        let Some((cand, ec, fc)) = accepted else {
            warn!("variable projection stalled: no admissible descent step");
            break;
        };
        let decrease = f - fc;
        coords = cand;
        e = ec;
        f = fc;
        history.push(f);
        if decrease <= 1e-15 * f.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    if !converged {
        warn!("variable projection stopped after {iterations} iterations");
    }

    let basis = ParametricBasis::rational(coords.poles(), a_lo, b_hi)?;
    let design = build_design(local_models, freqs, &basis, params)?;
    let sol = solve_with_realness(
        &design,
        freqs,
        params,
        h,
        None,
        &basis,
        dataset.real_symmetric(),
        config.enforce_real,
        config.rank_rtol,
    )?;
    let res = fro_norm(&(&design.a * &sol.x * design.b.transpose() - h));
    let rel_residual = if h2 > 0.0 { res / h2.sqrt() } else { res };
    let real_flag = config.enforce_real && local_models.iter().all(|m| m.real_flag());
    let model = ParametricModel::new(local_models.to_vec(), basis, sol.x, real_flag)?;
    Ok(AdaptiveFit {
        model,
        poles: coords,
        report: VarproReport {
            iterations,
            converged,
            objective_history: history,
            grad_norm,
        },
        rel_residual,
    })
}
