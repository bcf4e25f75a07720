//! Vector fitting of a single frequency-response column.
//!
//! Each Sanathanan-Koerner step fits `n / d` in barycentric form over the
//! current nodes, then moves the nodes to the zeros of `d`. When the data are
//! conjugate-symmetric the step is solved in real coordinates so that nodes
//! and residues stay exactly conjugation-closed.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{eig_general, eig_real, lstsq_minnorm_rank, lstsq_real, MatrixC, C64};
use crate::model::PoleResidueModel;

#[derive(Debug, Clone, PartialEq)]
pub struct VfConfig {
    pub order: usize,
    pub max_iters: usize,
    pub residue_tol: f64,
    pub node_move_tol: f64,
    pub flip_unstable: bool,
    pub freq_weights: Option<Vec<f64>>,
    /// Treat the data as samples of a real system. Also switched on
    /// automatically when the frequencies are closed under conjugation and the
    /// samples are conjugate-symmetric.
    pub real_symmetric: bool,
    /// Starting nodes; defaults to [`init_nodes`] over the sample band.
    pub initial_nodes: Option<Vec<C64>>,
}

impl VfConfig {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            max_iters: 50,
            residue_tol: 1e-8,
            node_move_tol: 1e-10,
            flip_unstable: true,
            freq_weights: None,
            real_symmetric: false,
            initial_nodes: None,
        }
    }

    fn validate(&self, m: usize) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidInput("VF order must be at least 1".into()));
        }
        if !(self.residue_tol > 0.0 && self.node_move_tol > 0.0) {
            return Err(Error::InvalidInput("VF tolerances must be positive".into()));
        }
        if let Some(w) = &self.freq_weights {
            if w.len() != m {
                return Err(Error::ShapeMismatch(format!("{} frequency weights for {m} samples", w.len())));
            }
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidInput("frequency weights must be finite and nonnegative".into()));
            }
        }
        if let Some(n) = &self.initial_nodes {
            if n.len() != self.order {
                return Err(Error::ShapeMismatch(format!("{} initial nodes for order {}", n.len(), self.order)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VfReport {
    pub iterations: usize,
    pub converged: bool,
    /// Relative weighted SK residual of every iteration.
    pub residual_history: Vec<f64>,
    /// Relative weighted RMS misfit of the returned model.
    pub rel_rms: f64,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VfFit {
    pub model: PoleResidueModel,
    pub report: VfReport,
}

/// Result of one Sanathanan-Koerner step.
#[derive(Debug, Clone, PartialEq)]
pub struct SkStep {
    pub psi: Vec<C64>,
    pub phi: Vec<C64>,
    /// `||D_w (A x - h)|| / ||D_w h||` (absolute when the data vanish).
    pub residual: f64,
    pub rank: usize,
}

/// Default starting nodes: conjugate pairs log-spaced over the band, plus a
/// real node at the geometric mean when `order` is odd. Pairs are stored
/// consecutively with the positive imaginary part first.
pub fn init_nodes(freq_min: f64, freq_max: f64, order: usize) -> Vec<C64> {
    let pairs = order / 2;
    let mut nodes = Vec::with_capacity(order);
    let (lo, hi) = (freq_min.ln(), freq_max.ln());
    for k in 0..pairs {
        let im = if k == 0 {
            freq_min
        } else if k + 1 == pairs {
            freq_max
        } else {
            (lo + (hi - lo) * k as f64 / (pairs - 1) as f64).exp()
        };
        nodes.push(C64::new(-im / 100.0, im));
        nodes.push(C64::new(-im / 100.0, -im));
    }
    if order % 2 == 1 {
        nodes.push(C64::new(-(freq_min * freq_max).sqrt(), 0.0));
    }
    nodes
}

/// Mirrors right-half-plane poles; poles on the imaginary axis are pushed
/// just into the left half-plane.
pub fn flip_unstable(poles: &[C64]) -> Vec<C64> {
    poles
        .iter()
        .map(|p| {
            if p.re > 0.0 {
                C64::new(-p.re, p.im)
            } else if p.re == 0.0 {
                C64::new(-1e-8 * p.im.abs().max(1.0), p.im)
            } else {
                *p
            }
        })
        .collect()
}

/// Zeros of `d(s) = 1 + sum phi_k / (s - nodes_k)`, as the eigenvalues of
/// `diag(nodes) - 1 phi^T`.
pub fn relocate_poles(nodes: &[C64], phi: &[C64]) -> Result<Vec<C64>> {
    if nodes.len() != phi.len() {
        return Err(Error::ShapeMismatch("relocate_poles: nodes and residues differ in length".into()));
    }
    let n = nodes.len();
    let m = MatrixC::from_fn(n, n, |i, j| if i == j { nodes[i] - phi[j] } else { -phi[j] });
    Ok(eig_general(&m)?.0)
}

/// One weighted SK step over complex unknowns.
pub fn sk_vf_step(freqs: &[C64], data: &[C64], weights: Option<&[f64]>, nodes: &[C64]) -> Result<SkStep> {
    let w = weight_vector(weights, freqs.len())?;
    if data.len() != freqs.len() {
        return Err(Error::ShapeMismatch("sk_vf_step: data and frequency counts differ".into()));
    }
    sk_solve(freqs, data, &w, nodes, None, true)
}

/// Real-node / conjugate-pair structure of a conjugation-closed node set.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Block {
    Real(usize),
    Pair(usize),
}

fn layout(nodes: &[C64]) -> Option<Vec<Block>> {
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < nodes.len() {
        if nodes[i].im == 0.0 {
            blocks.push(Block::Real(i));
            i += 1;
        } else if nodes[i].im > 0.0 && i + 1 < nodes.len() && nodes[i + 1] == nodes[i].conj() {
            blocks.push(Block::Pair(i));
            i += 2;
        } else {
            return None;
        }
    }
    Some(blocks)
}

/// Puts a conjugation-closed set into canonical layout, forcing exact
/// conjugate pairs and exactly real singletons.
fn canonical_pairs(values: &[C64]) -> Option<Vec<C64>> {
    let mut upper: Vec<C64> = values.iter().copied().filter(|z| z.im > 0.0).collect();
    let lower: Vec<C64> = values.iter().copied().filter(|z| z.im < 0.0).collect();
    if upper.len() != lower.len() {
        return None;
    }
    upper.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    let mut out: Vec<C64> = values.iter().copied().filter(|z| z.im == 0.0).collect();
    out.sort_by(|a, b| a.re.total_cmp(&b.re));
    for z in upper {
        out.push(z);
        out.push(z.conj());
    }
    Some(out)
}

fn weight_vector(weights: Option<&[f64]>, m: usize) -> Result<Vec<f64>> {
    match weights {
        None => Ok(vec![1.0; m]),
        Some(w) if w.len() == m => Ok(w.iter().map(|v| v.sqrt()).collect()),
        Some(_) => Err(Error::ShapeMismatch("weights and frequency counts differ".into())),
    }
}

fn cauchy(freqs: &[C64], nodes: &[C64]) -> Result<MatrixC> {
    let mut c = MatrixC::zeros(freqs.len(), nodes.len());
    for (i, s) in freqs.iter().enumerate() {
        for (k, l) in nodes.iter().enumerate() {
            let d = s - l;
            if d.norm() == 0.0 {
                return Err(Error::PoleEvaluation {
                    pole: l.to_string(),
                    distance: 0.0,
                });
            }
            c[(i, k)] = 1.0 / d;
        }
    }
    Ok(c)
}

/// Basis columns for real unknowns: `1/(s-l)` for a real node; for a pair,
/// the two columns multiplying `Re psi` and `Im psi`.
fn real_columns(c: &MatrixC, blocks: &[Block]) -> MatrixC {
    let mut out = MatrixC::zeros(c.nrows(), c.ncols());
    let i_unit = C64::new(0.0, 1.0);
    for b in blocks {
        match *b {
            Block::Real(k) => out.set_column(k, &c.column(k)),
            Block::Pair(k) => {
                for i in 0..c.nrows() {
                    out[(i, k)] = c[(i, k)] + c[(i, k + 1)];
                    out[(i, k + 1)] = i_unit * (c[(i, k)] - c[(i, k + 1)]);
                }
            }
        }
    }
    out
}

fn real_to_residues(x: &[f64], blocks: &[Block]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); x.len()];
    for b in blocks {
        match *b {
            Block::Real(k) => out[k] = C64::new(x[k], 0.0),
            Block::Pair(k) => {
                out[k] = C64::new(x[k], x[k + 1]);
                out[k + 1] = C64::new(x[k], -x[k + 1]);
            }
        }
    }
    out
}

/// Solves `min || D_w ([C, -diag(h) C] [psi; phi] - h) ||` (or the numerator
/// block alone when `with_den` is false). Columns are scaled to unit norm.
fn sk_solve(
    freqs: &[C64],
    data: &[C64],
    sqrt_w: &[f64],
    nodes: &[C64],
    blocks: Option<&[Block]>,
    with_den: bool,
) -> Result<SkStep> {
    let m = freqs.len();
    let nu = nodes.len();
    let c = cauchy(freqs, nodes)?;
    let c = match blocks {
        Some(b) => real_columns(&c, b),
        None => c,
    };
    let ncols = if with_den { 2 * nu } else { nu };
    let mut a = MatrixC::zeros(m, ncols);
    let mut rhs = MatrixC::zeros(m, 1);
    for i in 0..m {
        for k in 0..nu {
            a[(i, k)] = c[(i, k)] * sqrt_w[i];
            if with_den {
                a[(i, nu + k)] = -data[i] * c[(i, k)] * sqrt_w[i];
            }
        }
        rhs[(i, 0)] = data[i] * sqrt_w[i];
    }
    let scale: Vec<f64> = (0..ncols)
        .map(|j| {
            let n = a.column(j).norm();
            if n > 0.0 {
                1.0 / n
            } else {
                1.0
            }
        })
        .collect();
    for (j, s) in scale.iter().enumerate() {
        a.column_mut(j).iter_mut().for_each(|z| *z *= *s);
    }

    let (x, rank) = match blocks {
        None => {
            let ls = lstsq_minnorm_rank(&a, &rhs, None)?;
            let x: Vec<C64> = (0..ncols).map(|j| ls.solution[(j, 0)] * scale[j]).collect();
            (x, ls.rank)
        }
        Some(b) => {
            let ar = DMatrix::from_fn(2 * m, ncols, |i, j| if i < m { a[(i, j)].re } else { a[(i - m, j)].im });
            let br = DVector::from_fn(2 * m, |i, _| if i < m { rhs[(i, 0)].re } else { rhs[(i - m, 0)].im });
            let xr = lstsq_real(&ar, &br)?;
            let rank = real_rank(&ar);
            let xr: Vec<f64> = (0..ncols).map(|j| xr[j] * scale[j]).collect();
            let mut x = real_to_residues(&xr[..nu], b);
            if with_den {
                x.extend(real_to_residues(&xr[nu..], b));
            }
            (x, rank)
        }
    };

    let mut res2 = 0.0;
    let mut h2 = 0.0;
    for i in 0..m {
        let mut v = C64::new(0.0, 0.0);
        let cc = cauchy(&freqs[i..=i], nodes)?;
        for k in 0..nu {
            v += x[k] * cc[(0, k)];
            if with_den {
                v -= data[i] * x[nu + k] * cc[(0, k)];
            }
        }
        res2 += ((v - data[i]) * sqrt_w[i]).norm_sqr();
        h2 += (data[i] * sqrt_w[i]).norm_sqr();
    }
    let residual = if h2 > 0.0 { (res2 / h2).sqrt() } else { res2.sqrt() };
    let (psi, phi) = if with_den {
        (x[..nu].to_vec(), x[nu..].to_vec())
    } else {
        (x, vec![C64::new(0.0, 0.0); nu])
    };
    Ok(SkStep {
        psi,
        phi,
        residual,
        rank,
    })
}

fn real_rank(a: &DMatrix<f64>) -> usize {
    let s = a.singular_values();
    let smax = s.iter().copied().fold(0.0, f64::max);
    let tol = crate::linalg::default_rank_tol(a.nrows(), a.ncols(), smax);
    s.iter().filter(|v| **v > tol && **v > 0.0).count()
}

fn relocate_real(nodes: &[C64], phi: &[C64], blocks: &[Block]) -> Result<Vec<C64>> {
    let n = nodes.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    let mut c = DVector::<f64>::zeros(n);
    for blk in blocks {
        match *blk {
            Block::Real(k) => {
                a[(k, k)] = nodes[k].re;
                b[k] = 1.0;
                c[k] = phi[k].re;
            }
            Block::Pair(k) => {
                let (s, w) = (nodes[k].re, nodes[k].im);
                a[(k, k)] = s;
                a[(k, k + 1)] = w;
                a[(k + 1, k)] = -w;
                a[(k + 1, k + 1)] = s;
                b[k] = 2.0;
                c[k] = phi[k].re;
                c[k + 1] = phi[k].im;
            }
        }
    }
    let m = a - &b * c.transpose();
    let z = eig_real(&m)?;
    canonical_pairs(&z).ok_or(Error::NotConjugationClosed)
}

/// Separates coincident nodes so the barycentric form stays well defined.
fn separate(nodes: &mut [C64]) {
    for i in 0..nodes.len() {
        for j in 0..i {
            if nodes[i] == nodes[j] {
                let bump = 1e-8 * nodes[i].norm().max(1.0);
                nodes[i].re -= bump;
                if i + 1 < nodes.len() && nodes[i].im > 0.0 && nodes[i + 1] == nodes[j + 1] {
                    nodes[i + 1].re -= bump;
                }
            }
        }
    }
}

fn node_move(old: &[C64], new: &[C64]) -> f64 {
    let key = |a: &C64, b: &C64| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re));
    let mut o = old.to_vec();
    let mut n = new.to_vec();
    o.sort_by(key);
    n.sort_by(key);
    o.iter()
        .zip(&n)
        .map(|(a, b)| (a - b).norm() / a.norm().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn conjugate_symmetric(freqs: &[C64], data: &[C64]) -> bool {
    freqs.iter().zip(data).all(|(s, h)| {
        freqs.iter().position(|t| *t == s.conj()).is_some_and(|j| {
            let d = (data[j] - h.conj()).norm();
            d <= 1e-12 * h.norm().max(f64::MIN_POSITIVE)
        })
    })
}

fn band(freqs: &[C64]) -> (f64, f64) {
    let mags: Vec<f64> = freqs.iter().map(|s| s.norm()).filter(|v| *v > 0.0).collect();
    let hi = mags.iter().copied().fold(0.0, f64::max);
    let lo = mags.iter().copied().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        return (0.1, 1.0);
    }
    if lo < hi {
        (lo, hi)
    } else {
        (hi / 10.0, hi)
    }
}

/// Fits a strictly proper order-`config.order` model to `data` sampled at
/// `freqs`. A run that hits `max_iters` is reported through
/// `report.converged`, with the best iterate returned.
pub fn vf_fit(freqs: &[C64], data: &[C64], config: &VfConfig) -> Result<VfFit> {
    let m = freqs.len();
    if m < 2 || data.len() != m {
        return Err(Error::ShapeMismatch(format!("vf_fit needs >= 2 samples, got {m} frequencies and {} values", data.len())));
    }
    config.validate(m)?;
    if data.iter().chain(freqs).any(|z| !crate::model::is_finite(*z)) {
        return Err(Error::NonFinite("vf_fit input"));
    }
    let nu = config.order;
    let real = config.real_symmetric || conjugate_symmetric(freqs, data);
    // Real mode counts each sample twice (the sample and its mirror).
    let eff_rows = if real { 2 * m } else { m };
    if eff_rows < 2 * nu {
        warn!("vector fitting with {m} samples for order {nu}; the SK system is underdetermined");
    }
    let sqrt_w = weight_vector(config.freq_weights.as_deref(), m)?;

    let mut nodes = match &config.initial_nodes {
        Some(n) => n.clone(),
        None => {
            let (lo, hi) = band(freqs);
            init_nodes(lo, hi, nu)
        }
    };
    let mut blocks = if real {
        match layout(&nodes) {
            Some(b) => Some(b),
            None => {
                nodes = canonical_pairs(&nodes).ok_or(Error::NotConjugationClosed)?;
                layout(&nodes)
            }
        }
    } else {
        None
    };

    let mut history = Vec::new();
    let mut converged = false;
    let mut rank_deficient = false;
    let mut best: Option<(f64, Vec<C64>, SkStep)> = None;
    let mut iterations = 0;
    let mut last_fit: Option<(Vec<C64>, SkStep)> = None;

    for _ in 0..config.max_iters {
        iterations += 1;
        let step = sk_solve(freqs, data, &sqrt_w, &nodes, blocks.as_deref(), true)?;
        rank_deficient |= step.rank < 2 * nu;
        history.push(step.residual);

        let fit = sk_solve(freqs, data, &sqrt_w, &nodes, blocks.as_deref(), false)?;
        let stable_enough = !config.flip_unstable || nodes.iter().all(|p| p.re < 0.0);
        if stable_enough && best.as_ref().is_none_or(|b| fit.residual < b.0) {
            best = Some((fit.residual, nodes.clone(), fit.clone()));
        }

        let phi_max = step.phi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if phi_max < config.residue_tol {
            converged = true;
            last_fit = Some((nodes.clone(), fit));
            break;
        }

        let mut new_nodes = match &blocks {
            Some(b) => relocate_real(&nodes, &step.phi, b)?,
            None => relocate_poles(&nodes, &step.phi)?,
        };
        if config.flip_unstable {
            new_nodes = flip_unstable(&new_nodes);
        }
        separate(&mut new_nodes);
        let moved = node_move(&nodes, &new_nodes);
        nodes = new_nodes;
        if real {
            blocks = layout(&nodes);
            if blocks.is_none() {
                return Err(Error::NotConjugationClosed);
            }
        }
        if moved < config.node_move_tol {
            converged = true;
            break;
        }
    }

    let (nodes, fit) = match last_fit {
        Some(lf) => lf,
        None => {
            let fit = sk_solve(freqs, data, &sqrt_w, &nodes, blocks.as_deref(), false)?;
            match best {
                Some((r, n, f)) if !converged && r < fit.residual => (n, f),
                _ => (nodes, fit),
            }
        }
    };
    if !converged {
        warn!("vector fitting stopped after {iterations} iterations without meeting its tolerances");
    }
    if !config.flip_unstable && nodes.iter().any(|p| p.re >= 0.0) {
        return Err(Error::Unstable);
    }

    let model = if real {
        PoleResidueModel::with_real_flag(nodes, fit.psi, true)?
    } else {
        PoleResidueModel::new(nodes, fit.psi)?
    };
    Ok(VfFit {
        model,
        report: VfReport {
            iterations,
            converged,
            residual_history: history,
            rel_rms: fit.residual,
            rank_deficient,
        },
    })
}
