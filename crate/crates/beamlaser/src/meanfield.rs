//! Closed-form mean-field theory: dispersion function and its dominant root
//! (linewidth and phase boundary below threshold), self-consistent steady
//! dipole and power above threshold, and the cavity pulling coefficient.
//!
//! Everything here is in natural units (tau = 1); `nu` means nu*tau.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{BeamLaserError, Result};
use crate::quad::{adaptive_kronrod, gauss_hermite, gauss_legendre};
use crate::special::{bessel_j0, erfcx, sinc};

const SQRT_PI: f64 = 1.7724538509055159;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeanFieldSolution {
    pub nu0: Complex64,
    pub linewidth_mf: f64,
    pub j_st: f64,
    pub power_mf: f64,
    pub pulling_mf: Option<f64>,
}

/// (e^{-n} - 1 + n) / n^2, stable near n = 0.
fn expm1_moment(n: Complex64) -> Complex64 {
    if n.norm() < 0.5 {
        // sum_{j>=0} (-n)^j / (j+2)!
        let mut term = Complex64::new(0.5, 0.0);
        let mut acc = term;
        for j in 1..25 {
            term *= -n / (j as f64 + 2.0);
            acc += term;
            if term.norm() < 1e-18 * acc.norm().max(1e-30) {
                break;
            }
        }
        acc
    } else {
        ((-n).exp() - 1.0 + n) / (n * n)
    }
}

/// Kernel integral I(n, d) = int_0^1 (1-s) e^{-n s} e^{-d^2 s^2 / 2} ds,
/// evaluated with the scaled complementary error function so nothing
/// overflows at small d or large |n|.
fn kernel_erf(n: Complex64, d: f64) -> Complex64 {
    if d == 0.0 {
        return expm1_moment(n);
    }
    let a = n / (d * std::f64::consts::SQRT_2);
    let b = a + d / std::f64::consts::SQRT_2;
    // exp(a^2 - b^2) = exp(-n - d^2/2), always benign.
    let eab = (-n - d * d / 2.0).exp();
    // E = e^{a^2} (erf b - erf a), by reflection so every erfcx argument has
    // nonnegative real part.
    let e = if a.re >= 0.0 {
        erfcx(a) - eab * erfcx(b)
    } else if b.re < 0.0 {
        eab * erfcx(-b) - erfcx(-a)
    } else {
        // -d/sqrt(2) < Re a <= 0, so e^{a^2} cannot overflow.
        2.0 * (a * a).exp() - eab * erfcx(b) - erfcx(-a)
    };
    let d2 = d * d;
    (SQRT_PI / std::f64::consts::SQRT_2) * ((d2 + n) / (d2 * d)) * e
        - (1.0 - eab) / d2
}

/// Dispersion function D(nu) in the closed error-function form.
pub fn dispersion_erf(nu: Complex64, flux_param: f64, doppler_param: f64) -> Result<Complex64> {
    let v = Complex64::new(1.0, 0.0) - flux_param / 4.0 * kernel_erf(nu, doppler_param);
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(BeamLaserError::NoConvergence(format!(
            "dispersion overflow at nu = {nu}, flux = {flux_param}, doppler = {doppler_param}"
        )));
    }
    Ok(v)
}

/// Dispersion function by direct phase-space quadrature: adaptive integration
/// over the lag, with the axial phase averaged on a trapezoid grid and the
/// axial velocity by Gauss-Hermite. Independent check on `dispersion_erf`;
/// the only analytic step is the x-overlap factor (1 - t), which is geometry.
pub fn dispersion_quadrature(
    nu: Complex64,
    flux_param: f64,
    doppler_param: f64,
) -> Result<Complex64> {
    const N_PHASE: usize = 16;
    let (uh, wh) = gauss_hermite(64);
    let f = |t: f64| -> Complex64 {
        // < cos(zeta + u t) cos(zeta) >_zeta,u with u Gaussian of std d.
        let mut corr = 0.0;
        for (h, w) in uh.iter().zip(&wh) {
            let ut = std::f64::consts::SQRT_2 * doppler_param * h * t;
            let mut zavg = 0.0;
            for m in 0..N_PHASE {
                let zeta = 2.0 * std::f64::consts::PI * m as f64 / N_PHASE as f64;
                zavg += (zeta + ut).cos() * zeta.cos();
            }
            corr += w / SQRT_PI * zavg / N_PHASE as f64;
        }
        (-nu * t).exp() * (1.0 - t) * corr
    };
    let integral = adaptive_kronrod(f, 0.0, 1.0, 1e-12).ok_or_else(|| {
        BeamLaserError::NoConvergence("dispersion quadrature did not converge".into())
    })?;
    Ok(Complex64::new(1.0, 0.0) - flux_param / 2.0 * integral)
}

/// Root of D with the largest real part, found by grid-seeded Newton
/// iteration. Conjugate-pair roots are reported by their Im >= 0
/// representative.
pub fn dominant_root(flux_param: f64, doppler_param: f64) -> Result<Complex64> {
    if flux_param <= 0.0 {
        return Err(BeamLaserError::InvalidParameter(
            "dominant_root requires flux_param > 0".into(),
        ));
    }
    let d_fn = |nu: Complex64| dispersion_erf(nu, flux_param, doppler_param);
    let im_max = (2.0 * doppler_param).max(1.0);
    let mut roots: Vec<Complex64> = Vec::new();
    let re_seeds = 16;
    let im_seeds = 9;
    for i in 0..re_seeds {
        for j in 0..im_seeds {
            let re = -10.0 + 15.0 * i as f64 / (re_seeds - 1) as f64;
            let im = im_max * j as f64 / (im_seeds - 1) as f64;
            let mut nu = Complex64::new(re, im);
            let mut ok = false;
            for _ in 0..80 {
                let f = match d_fn(nu) {
                    Ok(v) => v,
                    Err(_) => break,
                };
                if f.norm() < 1e-12 {
                    ok = true;
                    break;
                }
                let h = 1e-7 * (1.0 + nu.norm());
                let fp = match (d_fn(nu + h), d_fn(nu - h)) {
                    (Ok(a), Ok(b)) => (a - b) / (2.0 * h),
                    _ => break,
                };
                if fp.norm() < 1e-300 {
                    break;
                }
                let step = f / fp;
                nu -= step;
                if step.norm() > 100.0 {
                    break;
                }
            }
            if !ok {
                if let Ok(f) = d_fn(nu) {
                    ok = f.norm() < 1e-9;
                }
            }
            if ok {
                let rep = Complex64::new(nu.re, nu.im.abs());
                if !roots.iter().any(|r| (r - rep).norm() < 1e-6) {
                    roots.push(rep);
                }
            }
        }
    }
    roots
        .into_iter()
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .ok_or_else(|| {
            BeamLaserError::NoConvergence(format!(
                "no dispersion root converged from any seed (flux = {flux_param}, doppler = {doppler_param})"
            ))
        })
}

/// Mean-field linewidth max(-2 Re nu0, 0).
pub fn mf_linewidth(flux_param: f64, doppler_param: f64) -> Result<f64> {
    Ok((-2.0 * dominant_root(flux_param, doppler_param)?.re).max(0.0))
}

/// Flux parameter at which Re(nu0) crosses zero, by bisection.
pub fn threshold_flux(doppler_param: f64) -> Result<f64> {
    let sign = |f: f64| -> Result<f64> { Ok(dominant_root(f, doppler_param)?.re) };
    let mut lo = 1.0;
    if sign(lo)? >= 0.0 {
        return Err(BeamLaserError::NoConvergence(
            "threshold bracket failure: unstable already at flux_param = 1".into(),
        ));
    }
    let mut hi = 8.0;
    let mut tries = 0;
    while sign(hi)? < 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 12 {
            return Err(BeamLaserError::NoConvergence(
                "threshold bracket failure: still stable at huge flux".into(),
            ));
        }
    }
    while (hi - lo) > 1e-4 * hi {
        let mid = 0.5 * (lo + hi);
        if sign(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn dipole_map(j: f64, flux_param: f64, uh: &[f64], wh: &[f64], doppler_param: f64) -> f64 {
    let half = flux_param * j / 2.0;
    let mut acc = 0.0;
    for (h, w) in uh.iter().zip(wh) {
        let u = std::f64::consts::SQRT_2 * doppler_param * h;
        let x = half * sinc(u / 2.0);
        acc += w / SQRT_PI * (1.0 - bessel_j0(x)) / half;
    }
    acc
}

/// Self-consistent steady dipole per atom; 0 below threshold.
pub fn steady_dipole(flux_param: f64, doppler_param: f64) -> Result<f64> {
    if flux_param <= 0.0 {
        return Ok(0.0);
    }
    let (uh, wh) = gauss_hermite(64);
    let psi = |j: f64| dipole_map(j, flux_param, &uh, &wh, doppler_param) - j;
    let mut lo = 1e-6;
    let mut hi = 1.0;
    if psi(lo) <= 0.0 {
        return Ok(0.0);
    }
    if psi(hi) > 0.0 {
        return Err(BeamLaserError::NoConvergence(
            "steady dipole bracket failure at j = 1".into(),
        ));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if psi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let j = 0.5 * (lo + hi);
    let res = psi(j).abs();
    if res > 1e-10 {
        return Err(BeamLaserError::NoConvergence(format!(
            "steady dipole residual {res} exceeds 1e-10"
        )));
    }
    Ok(j)
}

/// Normalized output power P / (hbar omega Phi).
pub fn mf_power(j_st: f64, flux_param: f64) -> f64 {
    flux_param * j_st * j_st / 4.0
}

fn pulling_with_nodes(
    flux_param: f64,
    doppler_param: f64,
    kappa_tau: f64,
    n_t: usize,
    n_z: usize,
    n_u: usize,
) -> Result<f64> {
    let j = steady_dipole(flux_param, doppler_param)?;
    if j <= 0.0 {
        return Err(BeamLaserError::InvalidParameter(
            "pulling is defined only in the superradiant regime (j_st > 0)".into(),
        ));
    }
    let (tn, tw) = gauss_legendre(n_t);
    let (un, uw) = gauss_hermite(n_u);
    let half = flux_param * j / 2.0;
    let mut denom = 0.0;
    for (ti, twi) in tn.iter().zip(&tw) {
        let t0 = 0.5 * (ti + 1.0); // transit fraction already completed
        let wt = 0.5 * twi;
        for (ui, uwi) in un.iter().zip(&uw) {
            let u = std::f64::consts::SQRT_2 * doppler_param * ui;
            let wu = uwi / SQRT_PI;
            let mut zacc = 0.0;
            for m in 0..n_z {
                let zeta = 2.0 * std::f64::consts::PI * m as f64 / n_z as f64;
                // Interaction phase accumulated since entry.
                let kphase = half * t0 * sinc(u * t0 / 2.0) * (zeta - u * t0 / 2.0).cos();
                // Mode integral over the remaining transit.
                let rem = 1.0 - t0;
                let it = rem * sinc(u * rem / 2.0) * (zeta + u * rem / 2.0).cos();
                zacc += kphase.sin() * it;
            }
            denom += wt * wu * zacc / n_z as f64;
        }
    }
    if denom.abs() < 1e-300 {
        return Err(BeamLaserError::NoConvergence(
            "pulling quadrature produced a vanishing denominator".into(),
        ));
    }
    Ok(2.0 * j / (kappa_tau * denom))
}

/// Cavity pulling coefficient (fraction of a cavity shift appearing on the
/// output frequency).
pub fn mf_pulling(flux_param: f64, doppler_param: f64, kappa_tau: f64) -> Result<f64> {
    pulling_with_nodes(flux_param, doppler_param, kappa_tau, 64, 128, 64)
}

/// Full mean-field summary at one parameter point.
pub fn solve_point(
    flux_param: f64,
    doppler_param: f64,
    kappa_tau: Option<f64>,
) -> Result<MeanFieldSolution> {
    let nu0 = dominant_root(flux_param, doppler_param)?;
    let j_st = steady_dipole(flux_param, doppler_param)?;
    let pulling_mf = match kappa_tau {
        Some(kt) if j_st > 0.0 => Some(mf_pulling(flux_param, doppler_param, kt)?),
        _ => None,
    };
    Ok(MeanFieldSolution {
        nu0,
        linewidth_mf: (-2.0 * nu0.re).max(0.0),
        j_st,
        power_mf: mf_power(j_st, flux_param),
        pulling_mf,
    })
}
