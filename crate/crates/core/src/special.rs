//! Cylinder functions of real argument.

use num_complex::Complex64;

pub fn bessel_j0(x: f64) -> f64 {
    puruspe::bessel::Jn(0, x)
}

pub fn bessel_j1(x: f64) -> f64 {
    puruspe::bessel::Jn(1, x)
}

/// Second-kind Hankel function `H₀⁽²⁾(x) = J₀(x) - j·Y₀(x)`, `x > 0`.
pub fn hankel2_0(x: f64) -> Complex64 {
    Complex64::new(puruspe::bessel::Jn(0, x), -puruspe::bessel::Yn(0, x))
}

/// Second-kind Hankel function `H₁⁽²⁾(x)`, `x > 0`.
pub fn hankel2_1(x: f64) -> Complex64 {
    Complex64::new(puruspe::bessel::Jn(1, x), -puruspe::bessel::Yn(1, x))
}
