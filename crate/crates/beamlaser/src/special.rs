//! Special functions needed by the mean-field theory: the Faddeeva function
//! (scaled complex complementary error function), the Bessel function J0,
//! and small-argument-safe sinc.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

const INV_SQRT_PI: f64 = 0.5641895835477563; // 1/sqrt(pi)

/// Degree of the Weideman rational approximation used for moderate |z|.
const WEIDEMAN_N: usize = 64;

fn weideman_coeffs() -> &'static (f64, Vec<f64>) {
    static COEFFS: OnceLock<(f64, Vec<f64>)> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let n = WEIDEMAN_N;
        let l = (n as f64 / std::f64::consts::SQRT_2.sqrt()).sqrt();
        let m = 2 * n;
        // Fourier coefficients of f(theta) = exp(-t^2) (L^2 + t^2) with
        // t = L tan(theta/2), by trapezoid over one period. f(pi) = 0.
        let f: Vec<f64> = (0..m)
            .map(|j| {
                let theta = j as f64 * PI / m as f64;
                let t = l * (theta / 2.0).tan();
                (-t * t).exp() * (l * l + t * t)
            })
            .collect();
        let mut a = Vec::with_capacity(n);
        for k in 1..=n {
            let mut s = 0.5 * f[0];
            for j in 1..m {
                s += f[j] * (k as f64 * j as f64 * PI / m as f64).cos();
            }
            a.push(s / m as f64);
        }
        (l, a)
    })
}

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz) in the upper half-plane,
/// requires Im z >= 0 and Re z >= 0.
fn w_upper_right(z: Complex64) -> Complex64 {
    let norm_sq = z.norm_sqr();
    if norm_sq > 256.0 {
        // Laplace continued fraction; term count per Poppe & Wijers.
        let rho = ((z.re / 6.3) * (z.re / 6.3) + (z.im / 4.4) * (z.im / 4.4)).sqrt();
        let terms = (3.0 + 1442.0 / (26.0 * rho + 77.0)).ceil() as usize;
        let mut t = z;
        for k in (1..=terms).rev() {
            t = z - Complex64::new(k as f64 / 2.0, 0.0) / t;
        }
        Complex64::new(0.0, INV_SQRT_PI) / t
    } else {
        let (l, a) = weideman_coeffs();
        let denom = Complex64::new(*l, 0.0) - Complex64::new(0.0, 1.0) * z;
        let big_z = (Complex64::new(*l, 0.0) + Complex64::new(0.0, 1.0) * z) / denom;
        // Horner over descending powers Z^{N-1} .. Z^0.
        let mut p = Complex64::new(0.0, 0.0);
        for &coef in a.iter().rev() {
            p = p * big_z + coef;
        }
        2.0 * p / (denom * denom) + INV_SQRT_PI / denom
    }
}

/// Faddeeva function w(z) for arbitrary complex z.
pub fn faddeeva_w(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        // w(z) = 2 exp(-z^2) - w(-z); exp may legitimately overflow to inf.
        let mz2 = Complex64::new((z.im - z.re) * (z.re + z.im), -2.0 * z.re * z.im);
        return 2.0 * mz2.exp() - faddeeva_w(-z);
    }
    if z.re < 0.0 {
        // w(-conj z) = conj(w(z))
        return faddeeva_w(Complex64::new(-z.re, z.im)).conj();
    }
    w_upper_right(z)
}

/// Scaled complementary error function erfcx(z) = exp(z^2) erfc(z).
pub fn erfcx(z: Complex64) -> Complex64 {
    faddeeva_w(Complex64::new(-z.im, z.re))
}

/// Bessel function of the first kind, order zero.
///
/// Evaluated by the trapezoid rule on the integral representation
/// J0(x) = (1/2pi) \int_0^{2pi} cos(x sin t) dt, whose error is governed by
/// aliased high-order Bessel terms and decays faster than geometrically in
/// the node count. Full double precision for the |x| range used here.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    let m = (40usize.max((1.5 * ax) as usize + 40) + 1) & !1usize;
    let mut s = 0.0;
    for j in 0..m {
        s += (ax * (2.0 * PI * j as f64 / m as f64).sin()).cos();
    }
    s / m as f64
}

/// sin(x)/x with a series branch near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}
