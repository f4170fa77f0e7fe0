//! Analytic scattering of a line source by a homogeneous circular cylinder.
//!
//! Used as the reference for the integral-equation forward solver.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{wavenumber, Point, EPS0};

const TAIL_TOL: f64 = 1e-12;
const MAX_ORDER: usize = 400;

/// Homogeneous cylinder centered at the origin.
#[derive(Clone, Copy, Debug)]
pub struct Cylinder {
    pub eps_r: f64,
    pub sigma: f64,
    pub radius: f64,
}

impl Cylinder {
    /// Complex relative permittivity `eps_r - j·sigma/(ω ε₀)`.
    pub fn permittivity(&self, f: f64) -> Complex64 {
        Complex64::new(self.eps_r, -self.sigma / (2.0 * std::f64::consts::PI * f * EPS0))
    }
}

/// Bessel functions `J_0..=J_nmax` of complex argument by Miller's backward recurrence.
pub fn bessel_j_seq(nmax: usize, z: Complex64) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    if z.norm() == 0.0 {
        let mut out = vec![zero; nmax + 1];
        out[0] = Complex64::new(1.0, 0.0);
        return out;
    }
    let start = {
        let m = nmax.max(z.norm().ceil() as usize) + 40 + (z.norm().sqrt() * 10.0) as usize;
        m + (m & 1)
    };
    let mut vals = vec![zero; start + 2];
    vals[start] = Complex64::new(1e-300, 0.0);
    for k in (1..=start).rev() {
        let v = vals[k] * (2.0 * k as f64) / z - vals[k + 1];
        vals[k - 1] = v;
        if v.norm() > 1e100 {
            let s = 1e-100;
            for x in vals[k - 1..=start].iter_mut() {
                *x *= s;
            }
        }
    }
    let peak = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    vals.iter_mut().for_each(|v| *v /= peak);
    // J₀ + 2 Σ J₂ₖ = 1
    let mut norm = vals[0];
    for k in (2..=start).step_by(2) {
        norm += 2.0 * vals[k];
    }
    vals.truncate(nmax + 1);
    vals.iter().map(|v| v / norm).collect()
}

/// `Y_0..=Y_nmax` at real `x > 0` by forward recurrence (stable for `Y`).
fn bessel_y_seq(nmax: usize, x: f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(nmax + 2);
    y.push(puruspe::bessel::Yn(0, x));
    y.push(puruspe::bessel::Yn(1, x));
    for n in 1..nmax {
        let next = 2.0 * n as f64 / x * y[n] - y[n - 1];
        y.push(next);
    }
    y.truncate(nmax + 1);
    y
}

fn hankel2_seq(nmax: usize, x: f64) -> Vec<Complex64> {
    let j = bessel_j_seq(nmax, Complex64::new(x, 0.0));
    let y = bessel_y_seq(nmax, x);
    j.iter().zip(&y).map(|(j, y)| Complex64::new(j.re, -y)).collect()
}

fn deriv(seq: &[Complex64], n: usize, z: Complex64) -> Complex64 {
    // C_n' = C_{n-1} - (n/z) C_n, with C_{-1} = -C_1
    let prev = if n == 0 { -seq[1] } else { seq[n - 1] };
    prev - seq[n] * (n as f64) / z
}

/// Per-order scattering coefficients `a_n` and interior coefficients `b_n`.
fn coefficients(k: f64, k1: Complex64, radius: f64, nmax: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let x = k * radius;
    let z = k1 * radius;
    let jo = bessel_j_seq(nmax + 1, Complex64::new(x, 0.0));
    let ho = hankel2_seq(nmax + 1, x);
    let ji = bessel_j_seq(nmax + 1, z);
    let mut a = Vec::with_capacity(nmax + 1);
    let mut b = Vec::with_capacity(nmax + 1);
    let kc = Complex64::new(k, 0.0);
    for n in 0..=nmax {
        let (jn, jnp) = (jo[n], deriv(&jo, n, Complex64::new(x, 0.0)));
        let (hn, hnp) = (ho[n], deriv(&ho, n, Complex64::new(x, 0.0)));
        let (j1n, j1np) = (ji[n], deriv(&ji, n, z));
        let an = (k1 * j1np * jn - kc * jnp * j1n) / (kc * hnp * j1n - k1 * j1np * hn);
        let bn = (jn + an * hn) / j1n;
        a.push(an);
        b.push(bn);
    }
    (a, b)
}

fn polar(p: Point) -> (f64, f64) {
    (p[0].hypot(p[1]), p[1].atan2(p[0]))
}

/// Field of a unit line source at `tx` near the cylinder, truncated at order `nmax`.
///
/// Points outside the cylinder get the scattered field, points inside the total field.
pub fn mie_cylinder_truncated(
    cyl: Cylinder,
    f: f64,
    points: &[Point],
    tx: Point,
    nmax: usize,
) -> Vec<Complex64> {
    let k = wavenumber(f);
    let k1 = k * cyl.permittivity(f).sqrt();
    let (a, b) = coefficients(k, k1, cyl.radius, nmax);
    let (rho_t, phi_t) = polar(tx);
    let ht = hankel2_seq(nmax, k * rho_t);
    let pref = Complex64::new(0.0, -0.25);
    points
        .iter()
        .map(|&p| {
            let (rho, phi) = polar(p);
            let radial: Vec<Complex64> = if rho > cyl.radius {
                let h = hankel2_seq(nmax, k * rho);
                (0..=nmax).map(|n| a[n] * h[n]).collect()
            } else {
                let j = bessel_j_seq(nmax, k1 * rho);
                (0..=nmax).map(|n| b[n] * j[n]).collect()
            };
            let mut sum = radial[0] * ht[0];
            for n in 1..=nmax {
                sum += 2.0 * radial[n] * ht[n] * (n as f64 * (phi - phi_t)).cos();
            }
            pref * sum
        })
        .collect()
}

/// As [`mie_cylinder_truncated`], starting at order `⌈k·radius⌉ + 10` and
/// extending until the last retained term falls below `1e-12` of the sum.
pub fn mie_cylinder(cyl: Cylinder, f: f64, points: &[Point], tx: Point) -> Result<Vec<Complex64>> {
    let k = wavenumber(f);
    let (rho_t, _) = polar(tx);
    if rho_t <= cyl.radius {
        return Err(Error::InvalidArgument("line source must lie outside the cylinder".into()));
    }
    let mut nmax = (k * cyl.radius).ceil() as usize + 10;
    loop {
        let full = mie_cylinder_truncated(cyl, f, points, tx, nmax);
        let prev = mie_cylinder_truncated(cyl, f, points, tx, nmax - 1);
        let tail = full
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let scale = full.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if tail <= TAIL_TOL * scale || scale == 0.0 {
            return Ok(full);
        }
        if !tail.is_finite() || nmax >= MAX_ORDER {
            return Err(Error::NotConverged { iterations: nmax, residual: tail / scale });
        }
        nmax += 5;
    }
}
