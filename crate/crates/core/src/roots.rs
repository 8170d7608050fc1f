//! Polynomial and scalar root finding.
//!
//! Coefficient slices are ordered from the highest degree down, so
//! `[a, b, c, d]` is `a x^3 + b x^2 + c x + d`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// Evaluates a real polynomial and its derivative at `x` (Horner).
pub fn eval_with_derivative(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn eval_complex(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Strips leading coefficients that are negligible relative to the largest one.
fn trim_leading(coeffs: &[f64]) -> &[f64] {
    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let start = coeffs
        .iter()
        .position(|c| c.abs() > scale * 1e-300_f64.max(f64::EPSILON * 1e-3))
        .unwrap_or(coeffs.len());
    &coeffs[start..]
}

fn newton_polish(coeffs: &[f64], z: Complex64) -> Complex64 {
    let (p, dp) = eval_complex(coeffs, z);
    if dp.norm() > 0.0 {
        let next = z - p / dp;
        if next.is_finite() && eval_complex(coeffs, next).0.norm() <= p.norm() {
            return next;
        }
    }
    z
}

/// All three roots of `a x^3 + b x^2 + c x + d`, each polished by one Newton step.
///
/// A vanishing leading coefficient degrades gracefully to the quadratic or linear case.
pub fn cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<Complex64> {
    let coeffs = [a, b, c, d];
    let trimmed = trim_leading(&coeffs);
    let raw = match trimmed.len() {
        4 => cubic_closed_form(a, b, c, d),
        3 => quadratic_roots(trimmed[0], trimmed[1], trimmed[2]),
        2 => vec![Complex64::new(-trimmed[1] / trimmed[0], 0.0)],
        _ => Vec::new(),
    };
    raw.into_iter().map(|z| newton_polish(trimmed, z)).collect()
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<Complex64> {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return vec![Complex64::new(0.0, 0.0); 2];
        }
        vec![Complex64::new(q / a, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a);
        vec![Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

fn cubic_closed_form(a: f64, b: f64, c: f64, d: f64) -> Vec<Complex64> {
    let (b, c, d) = (b / a, c / a, d / a);
    let shift = b / 3.0;
    // depressed cubic t^3 + p t + q with x = t - b/3
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);

    if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-q / 2.0 - q.signum() * sq).cbrt();
        let u = if u == 0.0 { (-q / 2.0 + sq).cbrt() } else { u };
        let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
        let t0 = u + v;
        let re = -(u + v) / 2.0;
        let im = 3.0_f64.sqrt() / 2.0 * (u - v);
        vec![
            Complex64::new(t0 - shift, 0.0),
            Complex64::new(re - shift, im),
            Complex64::new(re - shift, -im),
        ]
    } else if p == 0.0 {
        vec![Complex64::new(-shift, 0.0); 3]
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q) / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| Complex64::new(r * (phi - 2.0 * PI * k as f64 / 3.0).cos() - shift, 0.0))
            .collect()
    }
}

/// All complex roots of a real polynomial by Aberth-Ehrlich iteration.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let coeffs = trim_leading(coeffs);
    let degree = coeffs.len().saturating_sub(1);
    if degree == 0 {
        return Vec::new();
    }
    let lead = coeffs[0];
    // Cauchy bound on root moduli
    let radius = 1.0 + coeffs[1..].iter().fold(0.0_f64, |m, c| m.max((c / lead).abs()));
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| Complex64::from_polar(radius * 0.5, 2.0 * PI * k as f64 / degree as f64 + 0.4))
        .collect();

    for _ in 0..500 {
        let mut max_step = 0.0_f64;
        for i in 0..degree {
            let (p, dp) = eval_complex(coeffs, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..degree)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / z[i].norm().max(1e-300));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    z.into_iter().map(|r| newton_polish(coeffs, r)).collect()
}

/// Real parts of the roots whose imaginary part is below `rel_tol` relative to their modulus
/// (absolute for roots of modulus below one).
pub fn real_roots(roots: &[Complex64], rel_tol: f64) -> Vec<f64> {
    roots
        .iter()
        .filter(|z| z.im.abs() <= rel_tol * z.norm().max(1.0))
        .map(|z| z.re)
        .collect()
}

/// Newton's method safeguarded by a sign-change bracket on `[lo, hi]`.
///
/// Starts at the midpoint; any Newton step leaving the current bracket is replaced by
/// bisection. `f` returns the value and the derivative.
pub fn bracketed_newton<F>(f: F, lo: f64, hi: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut lo, mut hi) = (lo, hi);
    let (f_lo, _) = f(lo);
    let (f_hi, _) = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::solver(
            format!("no sign change on [{lo}, {hi}] (f = {f_lo}, {f_hi})"),
            Vec::new(),
        ));
    }
    let lo_sign = f_lo.signum();

    let mut x = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= 4.0 * f64::EPSILON * hi.abs() {
            return Ok(x);
        }
    }
    Err(Error::solver(
        format!("bracketed Newton did not converge in {max_iter} iterations"),
        Vec::new(),
    ))
}

/// Plain bisection on a sign change, down to `tol` bracket width.
pub fn bisect<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let f_lo = f(lo);
    let f_hi = f(hi);
    if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
        return Err(Error::solver(
            format!("bisection not bracketed on [{lo}, {hi}] (f = {f_lo}, {f_hi})"),
            Vec::new(),
        ));
    }
    let lo_sign = f_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_max<F>(f: F, lo: f64, hi: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        c
    } else {
        d
    }
}
