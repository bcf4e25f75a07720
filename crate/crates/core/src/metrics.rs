//! Error metrics along the imaginary axis.
//!
//! H2 quantities here are band-limited: `(1/2pi) int |E(i w)|^2 dw` over the
//! supplied positive frequency grid (trapezoid in `ln w`). Band limiting keeps
//! the metric finite for systems with a pole at `s = 0`. Only the sampled
//! half-axis is integrated: data never constrain a complex (non-real) model
//! at negative frequencies, and for real systems the relative values match
//! the two-sided ones.

use crate::error::Result;
use crate::linalg::C64;

/// `(1/2pi) int |f(i w)|^2 dw` over the span of `omegas`, which must be
/// positive and increasing.
pub fn band_energy<F>(f: F, omegas: &[f64]) -> Result<f64>
where
    F: Fn(C64) -> Result<C64>,
{
    let mut vals = Vec::with_capacity(omegas.len());
    for w in omegas {
        vals.push(f(C64::new(0.0, *w))?.norm_sqr() * w);
    }
    let mut acc = 0.0;
    for k in 1..omegas.len() {
        acc += 0.5 * (vals[k] + vals[k - 1]) * (omegas[k].ln() - omegas[k - 1].ln());
    }
    Ok(acc / (2.0 * std::f64::consts::PI))
}

/// Band-limited relative H2 error `||model - truth|| / ||truth||`.
pub fn rel_h2_band<F, G>(model: F, truth: G, omegas: &[f64]) -> Result<f64>
where
    F: Fn(C64) -> Result<C64>,
    G: Fn(C64) -> Result<C64>,
{
    let num = band_energy(|s| Ok(model(s)? - truth(s)?), omegas)?;
    let den = band_energy(&truth, omegas)?;
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

/// `max_w |model(i w) - reference(i w)|`: grid maximum refined by a
/// golden-section search in `ln w` between the neighbours of the maximizer.
pub fn hinf_error_at_param<F, G>(model: F, reference: G, omega_grid: &[f64]) -> Result<f64>
where
    F: Fn(C64) -> Result<C64>,
    G: Fn(C64) -> Result<C64>,
{
    let err = |w: f64| -> Result<f64> {
        let s = C64::new(0.0, w);
        Ok((model(s)? - reference(s)?).norm())
    };
    if omega_grid.is_empty() {
        return Ok(0.0);
    }
    let mut best = (0usize, f64::NEG_INFINITY);
    for (k, w) in omega_grid.iter().enumerate() {
        let e = err(*w)?;
        if e > best.1 {
            best = (k, e);
        }
    }
    let (k, mut peak) = best;
    if omega_grid.len() < 3 || omega_grid[0] <= 0.0 {
        return Ok(peak);
    }
    let lo = omega_grid[k.saturating_sub(1)].ln();
    let hi = omega_grid[(k + 1).min(omega_grid.len() - 1)].ln();
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (err(x1.exp())?, err(x2.exp())?);
    for _ in 0..60 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = err(x1.exp())?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = err(x2.exp())?;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    peak = peak.max(f1).max(f2);
    Ok(peak)
}

/// `max_w |truth(i w)|` on the grid, the normalizer for relative H-infinity.
pub fn peak_magnitude<G>(truth: G, omega_grid: &[f64]) -> Result<f64>
where
    G: Fn(C64) -> Result<C64>,
{
    let mut m: f64 = 0.0;
    for w in omega_grid {
        m = m.max(truth(C64::new(0.0, *w))?.norm());
    }
    Ok(m)
}

/// `sqrt(sum |fit - truth|^2 / sum |truth|^2)`.
pub fn rel_rms(fit: &[C64], truth: &[C64]) -> f64 {
    let num: f64 = fit.iter().zip(truth).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = truth.iter().map(|b| b.norm_sqr()).sum();
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::log_grid;
    use crate::linalg::c64;

    #[test]
    fn band_energy_of_first_order_system() {
        // (1/2pi) int dw / (1 + w^2) over the positive half-line is 1/4.
        let w = log_grid(1e-6, 1e6, 20001);
        let e = band_energy(|s| Ok(c64(1., 0.) / (s + 1.0)), &w).unwrap();
        assert!((e - 0.25).abs() < 1e-5);
    }

    #[test]
    fn relative_h2_examples() {
        let w = log_grid(1e-2, 1e2, 500);
        let f = |s: C64| Ok(c64(2., 0.) / (s + 3.0));
        assert_eq!(rel_h2_band(f, f, &w).unwrap(), 0.0);
        let g = |s: C64| Ok(c64(2.2, 0.) / (s + 3.0));
        assert!((rel_h2_band(g, f, &w).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn hinf_refines_between_grid_points() {
        // |1/(s^2 + 0.02 s + 1)| peaks near w = 1, between coarse grid points.
        let h = |s: C64| Ok(c64(1., 0.) / (s * s + s * 0.02 + 1.0));
        let zero = |_: C64| Ok(c64(0., 0.));
        let grid = log_grid(0.1, 10.0, 8);
        let coarse = grid.iter().map(|w| h(c64(0., *w)).unwrap().norm()).fold(0.0, f64::max);
        let refined = hinf_error_at_param(h, zero, &grid).unwrap();
        let exact = 1.0 / (0.02 * (1.0f64 - 0.0001).sqrt());
        assert!(refined > 2.0 * coarse);
        assert!((refined - exact).abs() <= 1e-6 * exact, "{refined} vs {exact}");
    }

    #[test]
    fn rms_examples() {
        let t = [c64(1., 0.), c64(0., 1.)];
        assert_eq!(rel_rms(&t, &t), 0.0);
        assert!((rel_rms(&[c64(0., 0.), c64(0., 0.)], &t) - 1.0).abs() < 1e-15);
    }
}
