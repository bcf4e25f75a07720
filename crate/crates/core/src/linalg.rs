//! Dense complex linear-algebra kernels.
//!
//! Everything here works on [`MatrixC`] (a `nalgebra` dynamic matrix of
//! `Complex64`). The decompositions themselves come from `nalgebra`; this
//! module pins the contracts the fitting code relies on: minimal-norm least
//! squares with a single rank tolerance, Moore-Penrose pseudoinverses,
//! eigenpairs with explicit right eigenvectors, and an upper Cholesky factor
//! with a real positive diagonal.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type MatrixC = DMatrix<C64>;
pub type VectorC = DVector<C64>;

const SVD_MAX_ITERS: usize = 10_000;
const SCHUR_MAX_ITERS: usize = 10_000;

/// Builds a complex scalar.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn check_finite(m: &MatrixC, what: &'static str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Frobenius norm of a complex matrix.
pub fn fro_norm(m: &MatrixC) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Default rank tolerance: `max(m, n) * eps * sigma_max`.
pub fn default_rank_tol(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Truncated SVD pieces: `A = U diag(s) V^H`.
struct Svd {
    u: MatrixC,
    s: Vec<f64>,
    v_t: MatrixC,
}

fn svd(a: &MatrixC) -> Result<Svd> {
    let dec = nalgebra::SVD::try_new(a.clone(), true, true, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(Error::NoConvergence)?;
    Ok(Svd {
        u: dec.u.ok_or(Error::NoConvergence)?,
        s: dec.singular_values.iter().copied().collect(),
        v_t: dec.v_t.ok_or(Error::NoConvergence)?,
    })
}

/// Minimal-norm least-squares solution together with the numerical rank.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: MatrixC,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

impl LeastSquares {
    /// `true` when the effective rank is below the number of unknowns.
    pub fn rank_deficient(&self, unknowns: usize) -> bool {
        self.rank < unknowns
    }
}

/// Minimal-Frobenius-norm minimizer of `||A X - B||_F`.
///
/// Singular values below `rank_tol` (default [`default_rank_tol`]) are treated
/// as zero.
pub fn lstsq_minnorm(a: &MatrixC, b: &MatrixC, rank_tol: Option<f64>) -> Result<MatrixC> {
    Ok(lstsq_minnorm_rank(a, b, rank_tol)?.solution)
}

/// As [`lstsq_minnorm`], also reporting the rank that was used.
pub fn lstsq_minnorm_rank(a: &MatrixC, b: &MatrixC, rank_tol: Option<f64>) -> Result<LeastSquares> {
    if a.nrows() != b.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "lstsq: A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if a.nrows() == 0 || a.ncols() == 0 || b.ncols() == 0 {
        return Err(Error::ShapeMismatch("lstsq: empty operand".into()));
    }
    check_finite(a, "least-squares matrix")?;
    check_finite(b, "least-squares right-hand side")?;
    let Svd { u, s, v_t } = svd(a)?;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let tol = rank_tol.unwrap_or_else(|| default_rank_tol(a.nrows(), a.ncols(), smax));
    // X = V diag(1/s) U^H B over the retained singular triplets.
    let mut uhb = u.adjoint() * b;
    let mut rank = 0;
    for (i, &si) in s.iter().enumerate() {
        if si > tol && si > 0.0 {
            rank += 1;
            let inv = 1.0 / si;
            uhb.row_mut(i).iter_mut().for_each(|z| *z *= inv);
        } else {
            uhb.row_mut(i).fill(C64::new(0.0, 0.0));
        }
    }
    let solution = v_t.adjoint() * uhb;
    Ok(LeastSquares {
        solution,
        rank,
        singular_values: s,
    })
}

/// Moore-Penrose pseudoinverse via the SVD.
pub fn pinv(a: &MatrixC, rank_tol: Option<f64>) -> Result<MatrixC> {
    check_finite(a, "pseudoinverse operand")?;
    let Svd { u, s, v_t } = svd(a)?;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let tol = rank_tol.unwrap_or_else(|| default_rank_tol(a.nrows(), a.ncols(), smax));
    let mut uh = u.adjoint();
    for (i, &si) in s.iter().enumerate() {
        if si > tol && si > 0.0 {
            let inv = 1.0 / si;
            uh.row_mut(i).iter_mut().for_each(|z| *z *= inv);
        } else {
            uh.row_mut(i).fill(C64::new(0.0, 0.0));
        }
    }
    Ok(v_t.adjoint() * uh)
}

/// Minimal-norm least squares for real systems (used by the Gauss-Newton
/// steps, whose Jacobians are real).
pub fn lstsq_real(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != b.len() {
        return Err(Error::ShapeMismatch("lstsq_real: row count".into()));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("real least-squares operands"));
    }
    let dec = nalgebra::SVD::try_new(a.clone(), true, true, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(Error::NoConvergence)?;
    let smax = dec.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = default_rank_tol(a.nrows(), a.ncols(), smax);
    dec.solve(b, tol).map_err(|_| Error::NoConvergence)
}

/// Eigenvalues and right eigenvectors of a general complex matrix.
///
/// The eigenvalues come from a complex Schur form `A = Q T Q^H`; each
/// eigenvector is obtained by back substitution on `T` and mapped back with
/// `Q`, then normalized to unit 2-norm.
pub fn eig_general(a: &MatrixC) -> Result<(Vec<C64>, MatrixC)> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::ShapeMismatch("eig_general needs a nonempty square matrix".into()));
    }
    check_finite(a, "eigenvalue operand")?;
    let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITERS)
        .ok_or(Error::NoConvergence)?;
    let (q, t) = schur.unpack();
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let tnorm = fro_norm(&t).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;

    let mut vectors = MatrixC::zeros(n, n);
    for k in 0..n {
        let lambda = values[k];
        let mut y = VectorC::zeros(n);
        y[k] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for l in (j + 1)..=k {
                acc += t[(j, l)] * y[l];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < small {
                denom = C64::new(small, 0.0);
            }
            y[j] = -acc / denom;
        }
        let mut v = &q * y;
        let nv = v.norm();
        if nv > 0.0 {
            v /= C64::new(nv, 0.0);
        }
        vectors.set_column(k, &v);
    }
    Ok((values, vectors))
}

/// Eigenvalues of a real matrix; complex eigenvalues come in exactly
/// conjugate pairs and real eigenvalues have an imaginary part of exactly 0.
pub fn eig_real(a: &DMatrix<f64>) -> Result<Vec<C64>> {
    if a.nrows() == 0 || a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch("eig_real needs a nonempty square matrix".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("real eigenvalue operand"));
    }
    let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITERS)
        .ok_or(Error::NoConvergence)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Upper-triangular `R` with `R^H R = G` and a real positive diagonal.
pub fn cholesky_upper(g: &MatrixC) -> Result<MatrixC> {
    let n = g.nrows();
    if n == 0 || g.ncols() != n {
        return Err(Error::ShapeMismatch("cholesky needs a nonempty square matrix".into()));
    }
    check_finite(g, "Gram matrix")?;
    let scale = fro_norm(g).max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..n {
            if (g[(i, j)] - g[(j, i)].conj()).norm() > 1e-12 * scale {
                return Err(Error::InvalidInput("Cholesky operand is not Hermitian".into()));
            }
        }
    }
    let mut r = MatrixC::zeros(n, n);
    for i in 0..n {
        let mut d = g[(i, i)].re;
        for k in 0..i {
            d -= r[(k, i)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: i, value: d });
        }
        let rii = d.sqrt();
        r[(i, i)] = C64::new(rii, 0.0);
        for j in (i + 1)..n {
            let mut s = g[(i, j)];
            for k in 0..i {
                s -= r[(k, i)].conj() * r[(k, j)];
            }
            r[(i, j)] = s / rii;
        }
    }
    Ok(r)
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn solve_dense(a: &MatrixC, b: &VectorC) -> Result<VectorC> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n || n == 0 {
        return Err(Error::ShapeMismatch("solve_dense: dimensions".into()));
    }
    check_finite(a, "linear system matrix")?;
    let mut m = a.clone();
    let mut x = b.clone();
    let amax = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tiny = n as f64 * f64::EPSILON * amax;
    for k in 0..n {
        let (piv, pmag) = (k..n)
            .map(|i| (i, m[(i, k)].norm()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmag <= tiny || pmag == 0.0 {
            return Err(Error::Singular);
        }
        if piv != k {
            m.swap_rows(piv, k);
            x.swap_rows(piv, k);
        }
        let pivot = m[(k, k)];
        for i in (k + 1)..n {
            let f = m[(i, k)] / pivot;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in k..n {
                let v = m[(k, j)];
                m[(i, j)] -= f * v;
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in (k + 1)..n {
            s -= m[(k, j)] * x[j];
        }
        x[k] = s / m[(k, k)];
    }
    Ok(x)
}

/// Solves `A x = b` for a banded `A` with `kl` sub- and `ku` super-diagonals,
/// using Gaussian elimination with partial pivoting in band storage.
///
/// `entry(i, j)` must return `A[i][j]` for `|i - j|` inside the band.
pub fn solve_banded<F>(n: usize, kl: usize, ku: usize, entry: F, b: &[C64]) -> Result<Vec<C64>>
where
    F: Fn(usize, usize) -> C64,
{
    if b.len() != n || n == 0 {
        return Err(Error::ShapeMismatch("solve_banded: dimensions".into()));
    }
    // Row i stores columns i-kl ..= i+ku+kl (fill-in from pivoting widens the
    // upper band by kl).
    let width = 2 * kl + ku + 1;
    let col0 = |i: usize| i as isize - kl as isize;
    let mut band = vec![C64::new(0.0, 0.0); n * width];
    let idx = |i: usize, j: usize| -> usize { i * width + (j as isize - col0(i)) as usize };
    let mut amax = 0.0f64;
    for i in 0..n {
        let lo = i.saturating_sub(kl);
        let hi = (i + ku).min(n - 1);
        for j in lo..=hi {
            let v = entry(i, j);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite("banded system matrix"));
            }
            amax = amax.max(v.norm());
            band[idx(i, j)] = v;
        }
    }
    let mut x: Vec<C64> = b.to_vec();
    let tiny = n as f64 * f64::EPSILON * amax;
    let in_band = |i: usize, j: usize| -> bool {
        let off = j as isize - col0(i);
        off >= 0 && (off as usize) < width
    };
    for k in 0..n {
        let last = (k + kl).min(n - 1);
        let mut piv = k;
        let mut pmag = band[idx(k, k)].norm();
        for i in (k + 1)..=last {
            let v = band[idx(i, k)].norm();
            if v > pmag {
                pmag = v;
                piv = i;
            }
        }
        if pmag <= tiny || pmag == 0.0 {
            return Err(Error::Singular);
        }
        let jmax = (k + ku + kl).min(n - 1);
        if piv != k {
            for j in k..=jmax {
                let a = if in_band(k, j) { band[idx(k, j)] } else { C64::new(0.0, 0.0) };
                let c = if in_band(piv, j) { band[idx(piv, j)] } else { C64::new(0.0, 0.0) };
                if in_band(k, j) {
                    band[idx(k, j)] = c;
                }
                if in_band(piv, j) {
                    band[idx(piv, j)] = a;
                }
            }
            x.swap(k, piv);
        }
        let pivot = band[idx(k, k)];
        for i in (k + 1)..=last {
            let f = band[idx(i, k)] / pivot;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            band[idx(i, k)] = C64::new(0.0, 0.0);
            for j in (k + 1)..=jmax {
                if in_band(i, j) && in_band(k, j) {
                    let v = band[idx(k, j)];
                    band[idx(i, j)] -= f * v;
                }
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        let jmax = (k + ku + kl).min(n - 1);
        for j in (k + 1)..=jmax {
            if in_band(k, j) {
                s -= band[idx(k, j)] * x[j];
            }
        }
        x[k] = s / band[idx(k, k)];
    }
    Ok(x)
}

/// Kronecker product `A (x) B`.
pub fn kron(a: &MatrixC, b: &MatrixC) -> MatrixC {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    MatrixC::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Column-stacking `vec` operator.
pub fn vec_cols(m: &MatrixC) -> VectorC {
    VectorC::from_iterator(m.len(), m.iter().copied())
}

/// Inverse of [`vec_cols`].
pub fn unvec_cols(v: &VectorC, rows: usize, cols: usize) -> MatrixC {
    MatrixC::from_iterator(rows, cols, v.iter().copied())
}

/// Entrywise complex conjugate.
pub fn conj(m: &MatrixC) -> MatrixC {
    m.map(|z| z.conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> MatrixC {
        MatrixC::from_fn(r, c, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn rel(a: &MatrixC, b: &MatrixC) -> f64 {
        fro_norm(&(a - b)) / fro_norm(b).max(1e-300)
    }

    #[test]
    fn lstsq_identity_returns_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = rand_mat(&mut rng, 3, 2);
        let x = lstsq_minnorm(&MatrixC::identity(3, 3), &b, None).unwrap();
        assert!(rel(&x, &b) < 1e-14);
    }

    #[test]
    fn lstsq_mean_of_two_observations() {
        let a = MatrixC::from_element(2, 1, c64(1.0, 0.0));
        let b = MatrixC::from_column_slice(2, 1, &[c64(0.0, 0.0), c64(2.0, 0.0)]);
        let x = lstsq_minnorm(&a, &b, None).unwrap();
        assert!((x[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn lstsq_rank_one_gives_minimal_norm() {
        // Every minimizer has x1 + x2 = (b1 + b2) / 2; the minimal-norm one
        // splits it evenly: x = (b1 + b2) / 4 * [1, 1].
        let a = MatrixC::from_element(2, 2, c64(1.0, 0.0));
        for rhs in [2.0, 1.0] {
            let b = MatrixC::from_element(2, 1, c64(rhs, 0.0));
            let x = lstsq_minnorm(&a, &b, None).unwrap();
            let want = (rhs + rhs) / 4.0;
            assert!((x[(0, 0)].re - want).abs() < 1e-13 && (x[(1, 0)].re - want).abs() < 1e-13);
        }
    }

    #[test]
    fn lstsq_rejects_nan() {
        let mut a = MatrixC::identity(2, 2);
        a[(0, 1)] = c64(f64::NAN, 0.0);
        let b = MatrixC::identity(2, 1);
        assert!(matches!(lstsq_minnorm(&a, &b, None), Err(Error::NonFinite(_))));
    }

    #[test]
    fn lstsq_residual_orthogonal_to_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let a = rand_mat(&mut rng, 9, 4);
            let b = rand_mat(&mut rng, 9, 3);
            let x = lstsq_minnorm(&a, &b, None).unwrap();
            let g = a.adjoint() * (&a * &x - &b);
            assert!(fro_norm(&g) <= 1e-10 * fro_norm(&a) * fro_norm(&b));
        }
    }

    #[test]
    fn pinv_examples() {
        let mut d = MatrixC::zeros(2, 2);
        d[(0, 0)] = c64(2.0, 0.0);
        let p = pinv(&d, None).unwrap();
        assert!((p[(0, 0)] - c64(0.5, 0.0)).norm() < 1e-15);
        assert!(p[(1, 1)].norm() < 1e-15);

        // unitary: QR factor of a random matrix
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = rand_mat(&mut rng, 4, 4).qr().q();
        assert!(rel(&pinv(&q, None).unwrap(), &q.adjoint()) < 1e-12);

        // normal-equations oracle for full column rank
        let a = rand_mat(&mut rng, 4, 2);
        let ne = (a.adjoint() * &a).try_inverse().unwrap() * a.adjoint();
        assert!(rel(&pinv(&a, None).unwrap(), &ne) < 1e-12);
    }

    #[test]
    fn pinv_moore_penrose_and_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = rand_mat(&mut rng, 5, 3) * rand_mat(&mut rng, 3, 4); // rank 3
        let p = pinv(&a, Some(1e-10)).unwrap();
        assert!(rel(&(&a * &p * &a), &a) < 1e-10);
        assert!(rel(&(&p * &a * &p), &p) < 1e-10);
        let ap = &a * &p;
        assert!(rel(&ap.adjoint(), &ap) < 1e-10);

        let sq = rand_mat(&mut rng, 4, 4);
        let back = pinv(&pinv(&sq, None).unwrap(), None).unwrap();
        assert!(rel(&back, &sq) < 1e-10);
    }

    #[test]
    fn eig_examples() {
        let d = MatrixC::from_diagonal(&VectorC::from_vec(vec![c64(-1.0, 0.0), c64(-5.0, 0.0)]));
        let (mut ev, _) = eig_general(&d).unwrap();
        ev.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((ev[0] - c64(-5.0, 0.0)).norm() < 1e-12 && (ev[1] - c64(-1.0, 0.0)).norm() < 1e-12);

        let s = MatrixC::from_row_slice(2, 2, &[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)]);
        let (mut ev, _) = eig_general(&s).unwrap();
        ev.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((ev[0] + 1.0).norm() < 1e-12 && (ev[1] - 1.0).norm() < 1e-12);

        // companion of z^2 + z - 6; quadratic formula: (-1 +- 5) / 2
        let comp = MatrixC::from_row_slice(2, 2, &[c64(-1., 0.), c64(6., 0.), c64(1., 0.), c64(0., 0.)]);
        let (mut ev, _) = eig_general(&comp).unwrap();
        ev.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        let disc: f64 = 1.0 + 24.0;
        let roots = [(-1.0 - disc.sqrt()) / 2.0, (-1.0 + disc.sqrt()) / 2.0];
        assert!((ev[0].re - roots[0]).abs() < 1e-12 && (ev[1].re - roots[1]).abs() < 1e-12);
    }

    #[test]
    fn eig_residuals_and_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1usize, 3, 8, 20] {
            let a = rand_mat(&mut rng, n, n);
            let (vals, vecs) = eig_general(&a).unwrap();
            let an = fro_norm(&a);
            for k in 0..n {
                let v = vecs.column(k).into_owned();
                let r = &a * &v - &v * vals[k];
                assert!(r.norm() <= 1e-10 * an * v.norm());
            }
        }
        // known spectrum through a similarity transform
        let want: Vec<C64> = (0..6).map(|k| c64(-(k as f64) - 1.0, k as f64 * 0.5)).collect();
        let t = rand_mat(&mut rng, 6, 6);
        let a = &t * MatrixC::from_diagonal(&VectorC::from_vec(want.clone())) * t.clone().try_inverse().unwrap();
        let (vals, _) = eig_general(&a).unwrap();
        for w in &want {
            let best = vals.iter().map(|v| (v - w).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8);
        }
    }

    #[test]
    fn eig_real_gives_exact_pairs() {
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.0, -2.0, -1.0, 0.0, 0.0, 0.0, -3.0]);
        let ev = eig_real(&a).unwrap();
        let cplx: Vec<_> = ev.iter().filter(|z| z.im != 0.0).collect();
        assert_eq!(cplx.len(), 2);
        assert_eq!(*cplx[0], cplx[1].conj());
        assert!(ev.iter().any(|z| z.im == 0.0 && (z.re + 3.0).abs() < 1e-12));
    }

    #[test]
    fn cholesky_examples() {
        let r = cholesky_upper(&MatrixC::identity(3, 3)).unwrap();
        assert!(rel(&r, &MatrixC::identity(3, 3)) < 1e-15);

        let g = MatrixC::from_row_slice(2, 2, &[c64(1., 0.), c64(0.5, 0.), c64(0.5, 0.), c64(1. / 3., 0.)]);
        let r = cholesky_upper(&g).unwrap();
        let want = MatrixC::from_row_slice(2, 2, &[c64(1., 0.), c64(0.5, 0.), c64(0., 0.), c64((1.0f64 / 12.0).sqrt(), 0.)]);
        assert!(rel(&r, &want) < 1e-14);

        let h = MatrixC::from_row_slice(2, 2, &[c64(1., 0.), c64(0., 0.5), c64(0., -0.5), c64(1., 0.)]);
        let r = cholesky_upper(&h).unwrap();
        assert!(rel(&(r.adjoint() * &r), &h) < 1e-12);
        assert!(r[(0, 0)].im == 0.0 && r[(1, 1)].im == 0.0 && r[(1, 1)].re > 0.0);

        let bad = MatrixC::from_row_slice(2, 2, &[c64(1., 0.), c64(2., 0.), c64(2., 0.), c64(1., 0.)]);
        assert!(matches!(cholesky_upper(&bad), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn solve_dense_examples() {
        let b = VectorC::from_vec(vec![c64(1., 2.), c64(-3., 0.5)]);
        let x = solve_dense(&MatrixC::identity(2, 2), &b).unwrap();
        assert!((x - &b).norm() < 1e-15);

        // Cramer's rule oracle
        let a = MatrixC::from_row_slice(2, 2, &[c64(2., 1.), c64(-1., 0.), c64(0.5, 0.), c64(3., -2.)]);
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        let x0 = (b[0] * a[(1, 1)] - a[(0, 1)] * b[1]) / det;
        let x1 = (a[(0, 0)] * b[1] - b[0] * a[(1, 0)]) / det;
        let x = solve_dense(&a, &b).unwrap();
        assert!((x[0] - x0).norm() < 1e-14 && (x[1] - x1).norm() < 1e-14);

        let hilbert = MatrixC::from_fn(4, 4, |i, j| c64(1.0 / (i + j + 1) as f64, 0.0));
        let rhs = VectorC::from_element(4, c64(1.0, 0.0));
        let x = solve_dense(&hilbert, &rhs).unwrap();
        assert!((&hilbert * x - rhs).norm() <= 1e-8);

        assert!(matches!(solve_dense(&MatrixC::zeros(2, 2), &b), Err(Error::Singular)));
    }

    #[test]
    fn banded_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 12;
        let (kl, ku) = (2, 3);
        let full = MatrixC::from_fn(n, n, |i, j| {
            if (j + kl >= i) && (i + ku >= j) {
                c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            } else {
                c64(0.0, 0.0)
            }
        });
        let b: Vec<C64> = (0..n).map(|i| c64(i as f64, 1.0)).collect();
        let xb = solve_banded(n, kl, ku, |i, j| full[(i, j)], &b).unwrap();
        let xd = solve_dense(&full, &VectorC::from_vec(b.clone())).unwrap();
        for i in 0..n {
            assert!((xb[i] - xd[i]).norm() < 1e-9 * (1.0 + xd[i].norm()));
        }
    }

    #[test]
    fn kron_vec_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = rand_mat(&mut rng, 6, 3);
        let x = rand_mat(&mut rng, 3, 2);
        let b = rand_mat(&mut rng, 4, 2);
        let lhs = vec_cols(&(&a * &x * b.transpose()));
        let rhs = kron(&b, &a) * vec_cols(&x);
        assert!((lhs - &rhs).norm() <= 1e-12 * rhs.norm());
        let back = unvec_cols(&vec_cols(&x), 3, 2);
        assert_eq!(back, x);
    }
}
