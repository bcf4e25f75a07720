//! Datasets, rational models, parametric bases and their evaluation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{solve_dense, MatrixC, VectorC, C64};

/// Scalar type for frequencies, parameters, samples, poles and residues.
pub type ComplexScalar = C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub(crate) fn is_finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn all_finite<'a>(it: impl IntoIterator<Item = &'a C64>) -> bool {
    it.into_iter().all(|z| is_finite(*z))
}

fn pairwise_distinct(v: &[C64]) -> bool {
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            if v[i] == v[j] {
                return false;
            }
        }
    }
    true
}

/// Index of the entry of `v` closest to `target`, if within `tol` (relative).
fn find_close(v: &[C64], target: C64, tol: f64) -> Option<usize> {
    let scale = target.norm().max(1.0);
    v.iter()
        .enumerate()
        .map(|(i, z)| (i, (z - target).norm()))
        .filter(|(_, d)| *d <= tol * scale)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// Sampled transfer-function values on a frequency x parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponseDataset {
    frequencies: Vec<C64>,
    parameters: Vec<C64>,
    samples: MatrixC,
    weights: Option<DMatrix<f64>>,
    real_symmetric: bool,
}

impl FrequencyResponseDataset {
    pub fn new(
        frequencies: Vec<C64>,
        parameters: Vec<C64>,
        samples: MatrixC,
        weights: Option<DMatrix<f64>>,
        real_symmetric: bool,
    ) -> Result<Self> {
        if frequencies.is_empty() || parameters.is_empty() {
            return Err(Error::InvalidInput("dataset needs at least one frequency and parameter".into()));
        }
        if !all_finite(&frequencies) || !all_finite(&parameters) || !all_finite(samples.iter()) {
            return Err(Error::NonFinite("dataset"));
        }
        if !pairwise_distinct(&frequencies) {
            return Err(Error::InvalidInput("frequencies must be pairwise distinct".into()));
        }
        if !pairwise_distinct(&parameters) {
            return Err(Error::InvalidInput("parameters must be pairwise distinct".into()));
        }
        if samples.shape() != (frequencies.len(), parameters.len()) {
            return Err(Error::ShapeMismatch(format!(
                "samples are {}x{}, grid is {}x{}",
                samples.nrows(),
                samples.ncols(),
                frequencies.len(),
                parameters.len()
            )));
        }
        if let Some(w) = &weights {
            if w.shape() != samples.shape() {
                return Err(Error::ShapeMismatch("weights must match the sample shape".into()));
            }
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
            }
        }
        let ds = Self {
            frequencies,
            parameters,
            samples,
            weights,
            real_symmetric,
        };
        if real_symmetric {
            ds.check_conjugate_symmetry(1e-12)?;
        }
        Ok(ds)
    }

    /// Where both (xi, mu) and (conj xi, conj mu) are on the grid, the samples
    /// must be conjugates of each other.
    fn check_conjugate_symmetry(&self, tol: f64) -> Result<()> {
        for (i, xi) in self.frequencies.iter().enumerate() {
            let Some(ic) = find_close(&self.frequencies, xi.conj(), 1e-14) else { continue };
            for (j, mu) in self.parameters.iter().enumerate() {
                let Some(jc) = find_close(&self.parameters, mu.conj(), 1e-14) else { continue };
                let a = self.samples[(i, j)];
                let b = self.samples[(ic, jc)].conj();
                if (a - b).norm() > tol * a.norm().max(b.norm()).max(f64::MIN_POSITIVE) {
                    return Err(Error::InvalidInput(format!(
                        "real_symmetric dataset violates conjugate symmetry at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn frequencies(&self) -> &[C64] {
        &self.frequencies
    }
    pub fn parameters(&self) -> &[C64] {
        &self.parameters
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
    pub fn n_freqs(&self) -> usize {
        self.frequencies.len()
    }
    pub fn n_params(&self) -> usize {
        self.parameters.len()
    }

    /// Sample column for parameter index `j`.
    pub fn column(&self, j: usize) -> Vec<C64> {
        self.samples.column(j).iter().copied().collect()
    }
}

/// Strictly proper rational function `sum_k residue_k / (s - pole_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleResidueModel {
    poles: Vec<C64>,
    residues: Vec<C64>,
    real_flag: bool,
}

impl PoleResidueModel {
    /// Builds a model; `real_flag` is set when the (pole, residue) pairs are
    /// closed under simultaneous conjugation.
    pub fn new(poles: Vec<C64>, residues: Vec<C64>) -> Result<Self> {
        let mut m = Self::unchecked(poles, residues, false)?;
        m.real_flag = m.is_conjugation_closed(1e-12);
        Ok(m)
    }

    /// Builds a model with an explicit real flag; the flag is verified.
    pub fn with_real_flag(poles: Vec<C64>, residues: Vec<C64>, real_flag: bool) -> Result<Self> {
        let m = Self::unchecked(poles, residues, real_flag)?;
        if real_flag && !m.is_conjugation_closed(1e-10) {
            return Err(Error::InvalidInput("real_flag set but poles/residues are not conjugation-closed".into()));
        }
        Ok(m)
    }

    fn unchecked(poles: Vec<C64>, residues: Vec<C64>, real_flag: bool) -> Result<Self> {
        if poles.is_empty() || poles.len() != residues.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} poles, {} residues",
                poles.len(),
                residues.len()
            )));
        }
        if !all_finite(&poles) || !all_finite(&residues) {
            return Err(Error::NonFinite("pole-residue model"));
        }
        if !pairwise_distinct(&poles) {
            return Err(Error::InvalidInput("poles must be pairwise distinct".into()));
        }
        Ok(Self {
            poles,
            residues,
            real_flag,
        })
    }

    pub fn poles(&self) -> &[C64] {
        &self.poles
    }
    pub fn residues(&self) -> &[C64] {
        &self.residues
    }
    pub fn real_flag(&self) -> bool {
        self.real_flag
    }
    pub fn order(&self) -> usize {
        self.poles.len()
    }

    /// Every pole strictly in the open left half-plane.
    pub fn is_stable(&self) -> bool {
        self.poles.iter().all(|p| p.re < 0.0)
    }

    pub fn is_conjugation_closed(&self, tol: f64) -> bool {
        self.poles.iter().zip(&self.residues).all(|(p, r)| {
            match find_close(&self.poles, p.conj(), tol) {
                Some(k) => {
                    let rc = self.residues[k].conj();
                    (rc - r).norm() <= tol * r.norm().max(1.0)
                }
                None => false,
            }
        })
    }

    pub fn eval(&self, s: C64) -> Result<C64> {
        let mut acc = ZERO;
        for (p, r) in self.poles.iter().zip(&self.residues) {
            let d = s - p;
            if d.norm() < 1e-300 {
                return Err(Error::PoleEvaluation {
                    pole: p.to_string(),
                    distance: d.norm(),
                });
            }
            acc += r / d;
        }
        Ok(acc)
    }
}

/// Barycentric rational function `n(s) / d(s)` with shared nodes:
/// `n = sum psi_k / (s - node_k)`, `d = 1 + sum phi_k / (s - node_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricModel {
    nodes: Vec<C64>,
    num_residues: Vec<C64>,
    den_residues: Vec<C64>,
}

impl BarycentricModel {
    pub fn new(nodes: Vec<C64>, num_residues: Vec<C64>, den_residues: Vec<C64>) -> Result<Self> {
        if nodes.len() != num_residues.len() || nodes.len() != den_residues.len() {
            return Err(Error::ShapeMismatch("barycentric sequences differ in length".into()));
        }
        if !pairwise_distinct(&nodes) {
            return Err(Error::InvalidInput("nodes must be pairwise distinct".into()));
        }
        Ok(Self {
            nodes,
            num_residues,
            den_residues,
        })
    }

    pub fn nodes(&self) -> &[C64] {
        &self.nodes
    }
    pub fn num_residues(&self) -> &[C64] {
        &self.num_residues
    }
    pub fn den_residues(&self) -> &[C64] {
        &self.den_residues
    }

    /// Value of `n / d`; at a node the limit `psi_k / phi_k` is returned.
    pub fn eval(&self, s: C64) -> Result<C64> {
        if let Some(k) = self.nodes.iter().position(|&x| x == s) {
            if self.den_residues[k] == ZERO {
                return Err(Error::PoleEvaluation {
                    pole: s.to_string(),
                    distance: 0.0,
                });
            }
            return Ok(self.num_residues[k] / self.den_residues[k]);
        }
        let mut n = ZERO;
        let mut d = ONE;
        for k in 0..self.nodes.len() {
            let c = ONE / (s - self.nodes[k]);
            n += self.num_residues[k] * c;
            d += self.den_residues[k] * c;
        }
        Ok(n / d)
    }
}

/// The family of parametric basis functions.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisKind {
    /// `1, p, ..., p^degree`
    Monomial { degree: usize },
    /// Bernstein polynomials of the given degree on the basis interval.
    Bernstein { degree: usize },
    /// `1 / (p - pole_l)`
    RationalPoles { poles: Vec<C64> },
}

/// A parametric basis on a real parameter interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricBasis {
    kind: BasisKind,
    domain: (f64, f64),
    conj_perm: Option<Vec<usize>>,
}

impl ParametricBasis {
    pub fn monomial(degree: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(BasisKind::Monomial { degree }, a, b)
    }

    pub fn bernstein(degree: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(BasisKind::Bernstein { degree }, a, b)
    }

    pub fn rational(poles: Vec<C64>, a: f64, b: f64) -> Result<Self> {
        Self::new(BasisKind::RationalPoles { poles }, a, b)
    }

    pub fn new(kind: BasisKind, a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInput(format!("basis interval [{a}, {b}] is invalid")));
        }
        let conj_perm = match &kind {
            BasisKind::Monomial { degree } | BasisKind::Bernstein { degree } => Some((0..=*degree).collect()),
            BasisKind::RationalPoles { poles } => {
                if poles.is_empty() {
                    return Err(Error::InvalidInput("rational basis needs at least one pole".into()));
                }
                if !all_finite(poles) || !pairwise_distinct(poles) {
                    return Err(Error::InvalidInput("rational basis poles must be finite and distinct".into()));
                }
                if let Some(p) = poles.iter().find(|p| distance_to_interval(**p, a, b) == 0.0) {
                    return Err(Error::InvalidInput(format!("rational basis pole {p} lies on [{a}, {b}]")));
                }
                conjugation_permutation(poles)
            }
        };
        Ok(Self { kind, domain: (a, b), conj_perm })
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Permutation `rho` with `P_l(conj p) = conj(P_rho(l)(p))`; `None` when the
    /// rational poles are not closed under conjugation.
    pub fn conj_perm(&self) -> Option<&[usize]> {
        self.conj_perm.as_deref()
    }

    /// Number of basis functions `r_p`.
    pub fn len(&self) -> usize {
        match &self.kind {
            BasisKind::Monomial { degree } | BasisKind::Bernstein { degree } => degree + 1,
            BasisKind::RationalPoles { poles } => poles.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rational basis poles (empty for polynomial kinds).
    pub fn poles(&self) -> &[C64] {
        match &self.kind {
            BasisKind::RationalPoles { poles } => poles,
            _ => &[],
        }
    }

    /// `[P_1(p), ..., P_rp(p)]`.
    pub fn eval(&self, p: C64) -> Result<Vec<C64>> {
        match &self.kind {
            BasisKind::Monomial { degree } => {
                let mut out = Vec::with_capacity(degree + 1);
                let mut v = ONE;
                for _ in 0..=*degree {
                    out.push(v);
                    v *= p;
                }
                Ok(out)
            }
            BasisKind::Bernstein { degree } => {
                let (a, b) = self.domain;
                let t = (p - a) / (b - a);
                Ok(bernstein_all(*degree, t))
            }
            BasisKind::RationalPoles { poles } => poles
                .iter()
                .map(|pi| {
                    let d = p - pi;
                    if d.norm() < 1e-300 {
                        Err(Error::BasisPoleHit(pi.to_string()))
                    } else {
                        Ok(ONE / d)
                    }
                })
                .collect(),
        }
    }
}

/// All Bernstein polynomials of one degree at `t`, built by the de Casteljau
/// triangle (no binomial coefficients).
fn bernstein_all(degree: usize, t: C64) -> Vec<C64> {
    let mut b = vec![ZERO; degree + 1];
    b[0] = ONE;
    let u = ONE - t;
    for k in 1..=degree {
        for j in (1..=k).rev() {
            b[j] = u * b[j] + t * b[j - 1];
        }
        b[0] *= u;
    }
    b
}

/// Distance from a complex point to the real segment `[a, b]`.
pub fn distance_to_interval(z: C64, a: f64, b: f64) -> f64 {
    let x = z.re.clamp(a, b);
    C64::new(z.re - x, z.im).norm()
}

fn conjugation_permutation(poles: &[C64]) -> Option<Vec<usize>> {
    let mut perm = Vec::with_capacity(poles.len());
    for p in poles {
        perm.push(find_close(poles, p.conj(), 1e-12)?);
    }
    Some(perm)
}

/// `H(s, p) = sum_{k,l} x_{kl} h_k(s) P_l(p)`: local models knitted together
/// by a parametric basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricModel {
    local_models: Vec<PoleResidueModel>,
    basis: ParametricBasis,
    coefficients: MatrixC,
    real_flag: bool,
}

impl ParametricModel {
    pub fn new(
        local_models: Vec<PoleResidueModel>,
        basis: ParametricBasis,
        coefficients: MatrixC,
        real_flag: bool,
    ) -> Result<Self> {
        if local_models.is_empty() {
            return Err(Error::InvalidInput("parametric model needs at least one local model".into()));
        }
        if coefficients.shape() != (local_models.len(), basis.len()) {
            return Err(Error::ShapeMismatch(format!(
                "coefficients are {}x{}, expected {}x{}",
                coefficients.nrows(),
                coefficients.ncols(),
                local_models.len(),
                basis.len()
            )));
        }
        if !all_finite(coefficients.iter()) {
            return Err(Error::NonFinite("coefficients"));
        }
        Ok(Self {
            local_models,
            basis,
            coefficients,
            real_flag,
        })
    }

    pub fn local_models(&self) -> &[PoleResidueModel] {
        &self.local_models
    }
    pub fn basis(&self) -> &ParametricBasis {
        &self.basis
    }
    pub fn coefficients(&self) -> &MatrixC {
        &self.coefficients
    }
    pub fn real_flag(&self) -> bool {
        self.real_flag
    }

    /// Total s-order `n_s`.
    pub fn order(&self) -> usize {
        self.local_models.iter().map(|m| m.order()).sum()
    }

    /// Union of local-model poles; the pole set of `H(., p)` for every `p`.
    pub fn poles(&self) -> Vec<C64> {
        self.local_models.iter().flat_map(|m| m.poles().iter().copied()).collect()
    }

    /// Depends on the local models only, so it certifies every `p`.
    pub fn is_stable(&self) -> bool {
        self.local_models.iter().all(|m| m.is_stable())
    }

    /// `conj(x_{k,l}) == x_{k,rho(l)}` within `tol` (relative to max |x|).
    pub fn satisfies_realness(&self, tol: f64) -> bool {
        let Some(rho) = self.basis.conj_perm() else { return false };
        let scale = self.coefficients.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        (0..self.coefficients.nrows()).all(|k| {
            (0..self.coefficients.ncols())
                .all(|l| (self.coefficients[(k, l)].conj() - self.coefficients[(k, rho[l])]).norm() <= tol * scale)
        })
    }

    /// Local-model values `[h_1(s), ..., h_rs(s)]`.
    pub fn local_values(&self, s: C64) -> Result<Vec<C64>> {
        self.local_models.iter().map(|m| m.eval(s)).collect()
    }

    pub fn eval(&self, s: C64, p: C64) -> Result<C64> {
        let h = self.local_values(s)?;
        let v = self.basis.eval(p)?;
        let mut acc = ZERO;
        for (k, hk) in h.iter().enumerate() {
            let mut row = ZERO;
            for (l, vl) in v.iter().enumerate() {
                row += self.coefficients[(k, l)] * vl;
            }
            acc += hk * row;
        }
        Ok(acc)
    }
}

/// Parameter-free single-input multi-output system with diagonal state
/// matrix: `G(s) = C (sI - diag(a))^{-1} b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimoRealization {
    pub a_diag: Vec<C64>,
    pub b: Vec<C64>,
    /// `r_p x n_s`
    pub c: MatrixC,
}

impl SimoRealization {
    pub fn new(a_diag: Vec<C64>, b: Vec<C64>, c: MatrixC) -> Result<Self> {
        if a_diag.len() != b.len() || c.ncols() != a_diag.len() {
            return Err(Error::ShapeMismatch("SIMO realization dimensions".into()));
        }
        Ok(Self { a_diag, b, c })
    }

    pub fn order(&self) -> usize {
        self.a_diag.len()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }
    pub fn is_stable(&self) -> bool {
        self.a_diag.iter().all(|a| a.re < 0.0)
    }

    /// `G(s)`, one entry per output.
    pub fn eval(&self, s: C64) -> Result<VectorC> {
        let mut x = VectorC::zeros(self.order());
        for i in 0..self.order() {
            let d = s - self.a_diag[i];
            if d.norm() < 1e-300 {
                return Err(Error::SingularResolvent);
            }
            x[i] = self.b[i] / d;
        }
        Ok(&self.c * x)
    }
}

/// `H_red(s, p) = V(p)^T C_u (sI - A_red)^{-1} b_red` with `C_u = R^{-1} C_red`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedParametricModel {
    pub basis: ParametricBasis,
    /// Upper Cholesky factor `R` of the basis Gram matrix.
    pub gram_chol: MatrixC,
    pub a_red: MatrixC,
    pub b_red: VectorC,
    /// `r_p x n_red`
    pub c_red_unweighted: MatrixC,
}

impl CompressedParametricModel {
    pub fn order(&self) -> usize {
        self.a_red.nrows()
    }

    /// Reduced-model poles (eigenvalues of `a_red`).
    pub fn poles(&self) -> Result<Vec<C64>> {
        if self.is_diagonal() {
            return Ok(self.a_red.diagonal().iter().copied().collect());
        }
        Ok(crate::linalg::eig_general(&self.a_red)?.0)
    }

    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.poles()?.iter().all(|p| p.re < 0.0))
    }

    fn is_diagonal(&self) -> bool {
        let n = self.a_red.nrows();
        (0..n).all(|i| (0..n).all(|j| i == j || self.a_red[(i, j)] == ZERO))
    }

    /// Unweighted reduced SIMO response `C_u (sI - A_red)^{-1} b_red`.
    pub fn eval_simo(&self, s: C64) -> Result<VectorC> {
        reduced_response(&self.a_red, &self.b_red, &self.c_red_unweighted, s)
    }

    pub fn eval(&self, s: C64, p: C64) -> Result<C64> {
        let g = self.eval_simo(s)?;
        let v = self.basis.eval(p)?;
        Ok(v.iter().zip(g.iter()).map(|(a, b)| a * b).sum())
    }
}

/// `c (sI - a)^{-1} b`, with a fast path for diagonal `a`.
pub(crate) fn reduced_response(a: &MatrixC, b: &VectorC, c: &MatrixC, s: C64) -> Result<VectorC> {
    let n = a.nrows();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == ZERO));
    let x = if diagonal {
        let mut x = VectorC::zeros(n);
        for i in 0..n {
            let d = s - a[(i, i)];
            if d.norm() < 1e-300 {
                return Err(Error::SingularResolvent);
            }
            x[i] = b[i] / d;
        }
        x
    } else {
        let m = MatrixC::identity(n, n) * s - a;
        solve_dense(&m, b).map_err(|_| Error::SingularResolvent)?
    };
    Ok(c * x)
}
