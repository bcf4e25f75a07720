//! Benchmark systems and grid samplers.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{solve_banded, solve_dense, MatrixC, VectorC, C64};
use crate::model::FrequencyResponseDataset;
use crate::multiparam::FrequencyResponseDataset2;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Transfer function with one parameter.
pub trait ParametricSystem: Sync {
    fn eval(&self, s: C64, p: C64) -> Result<C64>;
    /// Real state-space matrices for real parameters.
    fn is_real(&self) -> bool {
        true
    }
}

/// Transfer function with two parameters.
pub trait ParametricSystem2: Sync {
    fn eval2(&self, s: C64, p: f64, q: f64) -> Result<C64>;
    fn is_real(&self) -> bool {
        true
    }
}

fn singular(s: C64) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::Singular => Error::SingularSystem(s.to_string()),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenzlSpec {
    pub zetas: Vec<f64>,
    pub param_poles: Vec<C64>,
    pub phis: Vec<C64>,
}

impl Default for PenzlSpec {
    fn default() -> Self {
        Self {
            zetas: vec![0.0, 0.29, 0.57, 0.86, 1.14, 1.43],
            param_poles: vec![
                C64::new(0.4, 0.0),
                C64::new(2.0, 1.5),
                C64::new(2.0, -1.5),
                C64::new(4.0, 0.8),
                C64::new(4.0, -0.8),
                C64::new(5.1, 0.0),
            ],
            phis: vec![C64::new(1.0, 0.0); 6],
        }
    }
}

/// `H(s, p) = sum_k phi_k / (p - pi_k) G_k(s)`, where `G_k` is the 26-state
/// system `A(zeta_k), b(zeta_k), c = b`.
#[derive(Debug, Clone)]
pub struct Penzl {
    spec: PenzlSpec,
    a: Vec<MatrixC>,
    b: Vec<VectorC>,
}

pub const PENZL_STATES: usize = 26;

/// `A(zeta) = diag((zeta+1)^2 A_1, A_2, A_3, zeta A_4)`.
pub fn penzl_matrix(zeta: f64) -> MatrixC {
    let mut a = MatrixC::zeros(PENZL_STATES, PENZL_STATES);
    for (blk, (scale, w)) in [((zeta + 1.0).powi(2), 100.0), (1.0, 200.0), (1.0, 400.0)].into_iter().enumerate() {
        let i = 2 * blk;
        a[(i, i)] = C64::new(-scale, 0.0);
        a[(i + 1, i + 1)] = C64::new(-scale, 0.0);
        a[(i, i + 1)] = C64::new(scale * w, 0.0);
        a[(i + 1, i)] = C64::new(-scale * w, 0.0);
    }
    for k in 0..20 {
        a[(6 + k, 6 + k)] = C64::new(-zeta * (k + 1) as f64, 0.0);
    }
    a
}

/// Entries 1-6 equal 10, entries 7-25 zero, entry 26 equals `zeta + 1`.
pub fn penzl_input(zeta: f64) -> VectorC {
    let mut b = VectorC::zeros(PENZL_STATES);
    for i in 0..6 {
        b[i] = C64::new(10.0, 0.0);
    }
    b[PENZL_STATES - 1] = C64::new(zeta + 1.0, 0.0);
    b
}

impl Penzl {
    pub fn new(spec: PenzlSpec) -> Result<Self> {
        let n = spec.zetas.len();
        if n == 0 || spec.param_poles.len() != n || spec.phis.len() != n {
            return Err(Error::ShapeMismatch("zetas, parameter poles, and mixing coefficients must align".into()));
        }
        Ok(Self {
            a: spec.zetas.iter().map(|z| penzl_matrix(*z)).collect(),
            b: spec.zetas.iter().map(|z| penzl_input(*z)).collect(),
            spec,
        })
    }

    pub fn spec(&self) -> &PenzlSpec {
        &self.spec
    }

    /// `G_k(s) = b^T (sI - A(zeta_k))^{-1} b`.
    pub fn g(&self, k: usize, s: C64) -> Result<C64> {
        let m = MatrixC::identity(PENZL_STATES, PENZL_STATES) * s - &self.a[k];
        let x = solve_dense(&m, &self.b[k]).map_err(singular(s))?;
        Ok(self.b[k].transpose().iter().zip(x.iter()).map(|(c, x)| c * x).sum())
    }
}

impl ParametricSystem for Penzl {
    /// Conjugate parameter poles multiply different `G_k`, so the response
    /// is not conjugate-symmetric.
    fn is_real(&self) -> bool {
        false
    }

    fn eval(&self, s: C64, p: C64) -> Result<C64> {
        let mut acc = ZERO;
        for (k, (pi, phi)) in self.spec.param_poles.iter().zip(&self.spec.phis).enumerate() {
            let d = p - pi;
            if d.norm() <= 1e-14 * pi.norm().max(1.0) {
                return Err(Error::ParameterPoleHit(pi.to_string()));
            }
            if *phi != ZERO {
                acc += phi / d * self.g(k, s)?;
            }
        }
        Ok(acc)
    }
}

/// Damped chain with `M = I/n`, `K = n tridiag(-1, 2, -1)`, and damping
/// `M/2 + p K`; input and output at the last mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    pub n: usize,
}

impl Default for ChainSpec {
    fn default() -> Self {
        Self { n: 200 }
    }
}

impl ParametricSystem for ChainSpec {
    fn eval(&self, s: C64, p: C64) -> Result<C64> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidInput("chain needs at least one mass".into()));
        }
        if p.re < 0.0 {
            return Err(Error::InvalidInput(format!("damping parameter {p} must be nonnegative")));
        }
        let nf = n as f64;
        let diag = s * s / nf + s * (0.5 / nf + p * 2.0 * nf) + 2.0 * nf;
        let off = -(s * p * nf) - nf;
        let mut rhs = vec![ZERO; n];
        rhs[n - 1] = C64::new(1.0, 0.0);
        let x = solve_banded(n, 1, 1, |i, j| if i == j { diag } else { off }, &rhs).map_err(singular(s))?;
        Ok(x[n - 1])
    }
}

/// Finite-difference convection-diffusion on the unit square with an
/// `N x N` interior grid; node `(i1, i2)` has index `i2 N + i1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvDiffSpec {
    pub n_grid: usize,
    /// Input acts where `z1 <= input_strip`.
    pub input_strip: f64,
    /// Output averages (with weight `h^2`) where `z1 >= output_strip`.
    pub output_strip: f64,
}

impl Default for ConvDiffSpec {
    fn default() -> Self {
        Self {
            n_grid: 20,
            input_strip: 0.2,
            output_strip: 0.8,
        }
    }
}

impl ConvDiffSpec {
    pub fn with_size(n_grid: usize) -> Self {
        Self {
            n_grid,
            ..Self::default()
        }
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n_grid + 1) as f64
    }

    /// Entry `(r, c)` of `A_0 + p A_1 + q A_2`.
    pub fn operator_entry(&self, r: usize, c: usize, p: f64, q: f64) -> f64 {
        let nn = self.n_grid;
        let h = self.h();
        let (r1, r2) = (r % nn, r / nn);
        let (c1, c2) = (c % nn, c / nn);
        let lap = 1.0 / (h * h);
        let conv = 0.5 / h;
        if r == c {
            -4.0 * lap
        } else if r2 == c2 && c1 == r1 + 1 {
            lap + p * conv
        } else if r2 == c2 && c1 + 1 == r1 {
            lap - p * conv
        } else if r1 == c1 && c2 == r2 + 1 {
            lap + q * conv
        } else if r1 == c1 && c2 + 1 == r2 {
            lap - q * conv
        } else {
            0.0
        }
    }

    pub fn input(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.n_grid * self.n_grid)
            .map(|r| if ((r % self.n_grid) + 1) as f64 * h <= self.input_strip + 1e-12 { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn output(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.n_grid * self.n_grid)
            .map(|r| if ((r % self.n_grid) + 1) as f64 * h >= self.output_strip - 1e-12 { h * h } else { 0.0 })
            .collect()
    }
}

impl ParametricSystem2 for ConvDiffSpec {
    fn eval2(&self, s: C64, p: f64, q: f64) -> Result<C64> {
        let nn = self.n_grid;
        if nn == 0 {
            return Err(Error::InvalidInput("grid needs at least one interior node".into()));
        }
        let n = nn * nn;
        let b: Vec<C64> = self.input().into_iter().map(|v| C64::new(v, 0.0)).collect();
        let x = solve_banded(
            n,
            nn,
            nn,
            |i, j| {
                let a = self.operator_entry(i, j, p, q);
                if i == j {
                    s - a
                } else {
                    C64::new(-a, 0.0)
                }
            },
            &b,
        )
        .map_err(singular(s))?;
        Ok(self.output().iter().zip(&x).map(|(c, x)| x * c).sum())
    }
}

/// `n` points `i * omega`, log-spaced in `[lo, hi]` with exact endpoints.
pub fn imag_log_grid(lo: f64, hi: f64, n: usize) -> Vec<C64> {
    log_grid(lo, hi, n).into_iter().map(|w| C64::new(0.0, w)).collect()
}

/// Log-spaced grid with exact endpoints.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| match i {
                0 => lo,
                i if i == n - 1 => hi,
                _ => (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp(),
            })
            .collect(),
    }
}

/// Equispaced grid with exact endpoints.
pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

fn real_symmetric(sys_real: bool, freqs: &[C64], params_real: bool) -> bool {
    sys_real && params_real && freqs.iter().all(|s| s.re == 0.0)
}

/// Samples `sys` on the grid; columns are filled in parallel.
pub fn sample_model(sys: &dyn ParametricSystem, freqs: &[C64], params: &[C64]) -> Result<FrequencyResponseDataset> {
    let cols: Vec<Result<Vec<C64>>> = params
        .par_iter()
        .map(|p| freqs.iter().map(|s| sys.eval(*s, *p)).collect())
        .collect();
    let mut h = MatrixC::zeros(freqs.len(), params.len());
    for (j, col) in cols.into_iter().enumerate() {
        for (i, v) in col?.into_iter().enumerate() {
            h[(i, j)] = v;
        }
    }
    let real = real_symmetric(sys.is_real(), freqs, params.iter().all(|p| p.im == 0.0));
    FrequencyResponseDataset::new(freqs.to_vec(), params.to_vec(), h, None, real)
}

/// Samples a two-parameter system on a tensor grid (q-major columns).
pub fn sample_model2(sys: &dyn ParametricSystem2, freqs: &[C64], pp: &[f64], qq: &[f64]) -> Result<FrequencyResponseDataset2> {
    let m_q = qq.len();
    let cols: Vec<Result<Vec<C64>>> = (0..pp.len() * m_q)
        .into_par_iter()
        .map(|j| freqs.iter().map(|s| sys.eval2(*s, pp[j / m_q], qq[j % m_q])).collect())
        .collect();
    let mut h = MatrixC::zeros(freqs.len(), pp.len() * m_q);
    for (j, col) in cols.into_iter().enumerate() {
        for (i, v) in col?.into_iter().enumerate() {
            h[(i, j)] = v;
        }
    }
    let real = real_symmetric(sys.is_real(), freqs, true);
    FrequencyResponseDataset2::new(freqs.to_vec(), pp.to_vec(), qq.to_vec(), h, None, real)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, eig_general};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    /// Closed form from the 2x2 rotation blocks and the single live entry of
    /// the diagonal block.
    fn penzl_g_closed(zeta: f64, s: C64) -> C64 {
        let blk = |alpha: f64, w: f64| 200.0 * (s + alpha) / ((s + alpha) * (s + alpha) + alpha * alpha * w * w);
        blk((zeta + 1.0).powi(2), 100.0) + blk(1.0, 200.0) + blk(1.0, 400.0) + (zeta + 1.0).powi(2) / (s + 20.0 * zeta)
    }

    #[test]
    fn penzl_matches_closed_form() {
        let pz = Penzl::new(PenzlSpec::default()).unwrap();
        let (s, p) = (c64(0., 1.), c64(2., 0.));
        let want: C64 = pz
            .spec()
            .param_poles
            .iter()
            .zip(&pz.spec().zetas)
            .map(|(pi, z)| penzl_g_closed(*z, s) / (p - pi))
            .sum();
        assert!(close(pz.eval(s, p).unwrap(), want, 1e-12));
    }

    #[test]
    fn penzl_properties() {
        let pz = Penzl::new(PenzlSpec::default()).unwrap();
        let mut mirrored = PenzlSpec::default();
        mirrored.param_poles.iter_mut().for_each(|z| *z = z.conj());
        let pzc = Penzl::new(mirrored).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let s = c64(rng.random_range(-1.0..1.0), rng.random_range(-500.0..500.0));
            let p = c64(rng.random_range(1.0..5.0), rng.random_range(-0.5..0.5));
            let a = pzc.eval(s.conj(), p.conj()).unwrap();
            let b = pz.eval(s, p).unwrap().conj();
            assert!(close(a, b, 1e-12));
        }
        // Without conjugating the pole set the identity fails.
        let (s, p) = (c64(0.3, 7.), c64(2.5, 0.));
        assert!(!close(pz.eval(s.conj(), p).unwrap(), pz.eval(s, p).unwrap().conj(), 1e-3));
        let mut spec = PenzlSpec::default();
        spec.phis = vec![ZERO; 6];
        spec.phis[2] = c64(1., 0.);
        let one = Penzl::new(spec).unwrap();
        let (s, p) = (c64(0.3, 7.), c64(2.5, 0.));
        let lhs = one.eval(s, p).unwrap() * (p - one.spec().param_poles[2]);
        assert!(close(lhs, one.g(2, s).unwrap(), 1e-12));
        assert!(matches!(pz.eval(s, c64(0.4, 0.)), Err(Error::ParameterPoleHit(_))));
        for z in [0.01, 0.5, 1.43, 2.0] {
            let (ev, _) = eig_general(&penzl_matrix(z)).unwrap();
            assert!(ev.iter().all(|l| l.re < 0.0));
        }
    }

    #[test]
    fn chain_properties() {
        let ch = ChainSpec { n: 50 };
        // Static response: K^{-1}[n, n] = (1/n) * n / (n + 1).
        let h0 = ch.eval(ZERO, c64(0.3, 0.)).unwrap();
        assert!(close(h0, c64(1.0 / 51.0, 0.), 1e-12));
        assert!(close(ch.eval(ZERO, c64(0.7, 0.)).unwrap(), h0, 1e-12));
        let s = c64(0.2, 3.1);
        assert!(close(ch.eval(s.conj(), c64(0.4, 0.)).unwrap(), ch.eval(s, c64(0.4, 0.)).unwrap().conj(), 1e-12));
        // First undamped resonance of M^{-1} K.
        let w1 = 50.0 * 2.0 * (std::f64::consts::PI / (2.0 * 51.0)).sin();
        let s1 = c64(0., w1);
        assert!(ch.eval(s1, c64(0.5, 0.)).unwrap().norm() < ch.eval(s1, ZERO).unwrap().norm());
        assert!(matches!(ch.eval(s, c64(-1., 0.)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn convdiff_hand_instance() {
        let cd = ConvDiffSpec {
            n_grid: 2,
            input_strip: 0.4,
            output_strip: 0.6,
        };
        let (s, p) = (c64(0., 1.), 1.0);
        // Symmetric in z2 when q = 0: two unknowns, solved by hand.
        let want = 2.0 * (9.0 - 1.5 * p) / (9.0 * ((s + 27.0) * (s + 27.0) - 81.0 + 2.25 * p * p));
        assert!(close(cd.eval2(s, p, 0.0).unwrap(), want, 1e-14));
    }

    #[test]
    fn convdiff_dense_oracle_and_symmetry() {
        let cd = ConvDiffSpec::with_size(5);
        let n = 25;
        let s = c64(3.0, 0.0);
        let a = MatrixC::from_fn(n, n, |i, j| c64(cd.operator_entry(i, j, 0., 0.), 0.));
        assert_eq!(a, a.transpose());
        let m = MatrixC::identity(n, n) * s - &a;
        let b = VectorC::from_iterator(n, cd.input().into_iter().map(|v| c64(v, 0.)));
        let x = solve_dense(&m, &b).unwrap();
        let want: C64 = cd.output().iter().zip(x.iter()).map(|(c, x)| x * c).sum();
        let got = cd.eval2(s, 0., 0.).unwrap();
        assert!(close(got, want, 1e-12) && got.im == 0.0);
        let z = c64(0.1, 40.);
        assert!(close(cd.eval2(z.conj(), 0.3, 0.7).unwrap(), cd.eval2(z, 0.3, 0.7).unwrap().conj(), 1e-12));
    }

    #[test]
    fn grids_and_sampling() {
        let g = log_grid(1e-3, 1e3, 80);
        assert_eq!((g[0], g[79]), (1e-3, 1e3));
        let pz = Penzl::new(PenzlSpec::default()).unwrap();
        let params: Vec<C64> = lin_grid(1., 5., 8).into_iter().map(|p| c64(p, 0.)).collect();
        let ds = sample_model(&pz, &imag_log_grid(1e-1, 1e5, 100), &params).unwrap();
        assert_eq!((ds.n_freqs(), ds.n_params()), (100, 8));
        assert!(!ds.real_symmetric());
        let chain: Vec<C64> = lin_grid(0.01, 0.8, 10).into_iter().map(|p| c64(p, 0.)).collect();
        let dc = sample_model(&ChainSpec { n: 20 }, &imag_log_grid(1e-3, 1e3, 80), &chain).unwrap();
        assert!(dc.real_symmetric() && dc.samples().shape() == (80, 10));
        let ds2 = sample_model2(&ConvDiffSpec::with_size(4), &imag_log_grid(1e2, 1e6, 10), &lin_grid(0., 1., 3), &lin_grid(0., 1., 2)).unwrap();
        assert_eq!(ds2.samples().shape(), (10, 6));
        let (p, q) = ds2.grid_point(3);
        assert_eq!((p, q), (0.5, 1.0));
    }
}
