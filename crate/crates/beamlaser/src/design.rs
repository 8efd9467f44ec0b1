//! Experimental-design calculator: turns species and cavity inputs into a
//! parameter report (transit time, atom number, rates, power, cavity
//! geometry, pulling) plus environmental-noise suppression figures.

use serde::{Deserialize, Serialize};

use crate::error::{BeamLaserError, Result};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Angular frequency in rad/s. Construct explicitly from Hz or rad/s so the
/// two conventions cannot be mixed silently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngularFreq(f64);

impl AngularFreq {
    pub fn from_rad_s(v: f64) -> Self {
        Self(v)
    }
    pub fn from_hz(v: f64) -> Self {
        Self(2.0 * std::f64::consts::PI * v)
    }
    pub fn rad_s(self) -> f64 {
        self.0
    }
    pub fn hz(self) -> f64 {
        self.0 / (2.0 * std::f64::consts::PI)
    }
}

/// SI design inputs. In the TOML form, `gamma` is in rad/s.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignInput {
    /// Transition linewidth (angular).
    pub gamma: AngularFreq,
    /// Transition wavelength (m).
    pub wavelength: f64,
    /// Effective excited-state flux into the cavity (atoms/s).
    pub flux: f64,
    /// Longitudinal beam velocity (m/s).
    pub v_longitudinal: f64,
    /// Mode half-width along the beam (m).
    pub waist: f64,
    /// Cavity length (m).
    pub cavity_length: f64,
    pub finesse: f64,
    pub cooperativity: f64,
    /// Bare acceleration sensitivity (1/(m/s^2)).
    pub accel_sensitivity: f64,
    /// Bare coefficient of thermal expansion (1/K).
    pub cte: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DesignReport {
    /// Transit time (s).
    pub tau: f64,
    /// Intracavity atom number.
    pub n_atoms: f64,
    /// Axial velocity spread at the Doppler threshold (m/s).
    pub dv_threshold: f64,
    /// Collective emission rate (rad/s).
    pub gamma_c: f64,
    /// Peak output power (W).
    pub p_max_watts: f64,
    /// Cavity pulling coefficient.
    pub pulling: f64,
    /// Cavity decay rate (rad/s).
    pub kappa: f64,
    pub kappa_tau: f64,
    pub flux_param: f64,
    pub doppler_param: f64,
    /// Effective acceleration sensitivity (1/(m/s^2)).
    pub k_eff: f64,
    /// Effective cavity length (m).
    pub l_eff: f64,
    /// Effective CTE (1/K).
    pub alpha_eff: f64,
    /// Phi tau^2 Gamma_c > 8.
    pub flux_ok: bool,
    /// delta_D tau <= pi (the threshold velocity spread itself sits exactly
    /// on the boundary).
    pub doppler_ok: bool,
}

/// Builds the full report. `pulling_override` replaces the kappa-tau scaling
/// fallback (anchored at 0.004 for kappa tau = 1000) with a caller-supplied
/// value, e.g. from a full mean-field evaluation.
pub fn design_report(d: &DesignInput, pulling_override: Option<f64>) -> Result<DesignReport> {
    let fields = [
        ("gamma", d.gamma.rad_s()),
        ("wavelength", d.wavelength),
        ("flux", d.flux),
        ("v_longitudinal", d.v_longitudinal),
        ("waist", d.waist),
        ("cavity_length", d.cavity_length),
        ("finesse", d.finesse),
        ("cooperativity", d.cooperativity),
        ("accel_sensitivity", d.accel_sensitivity),
        ("cte", d.cte),
    ];
    for (name, v) in fields {
        if !(v > 0.0) || !v.is_finite() {
            return Err(BeamLaserError::InvalidParameter(format!(
                "design input {name} must be strictly positive, got {v}"
            )));
        }
    }
    let tau = 2.0 * d.waist / d.v_longitudinal;
    let n_atoms = d.flux * tau;
    let dv_threshold = d.wavelength / (2.0 * tau);
    let gamma_c = d.gamma.rad_s() * d.cooperativity;
    let omega = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / d.wavelength;
    let p_max_watts = 0.7 * d.flux * HBAR * omega;
    let fsr = SPEED_OF_LIGHT / (2.0 * d.cavity_length);
    let kappa = 2.0 * std::f64::consts::PI * fsr / d.finesse;
    let kappa_tau = kappa * tau;
    let flux_param = d.flux * tau * tau * gamma_c;
    let k = 2.0 * std::f64::consts::PI / d.wavelength;
    let doppler_param = k * dv_threshold * tau;
    let pulling = pulling_override.unwrap_or(0.004 * 1000.0 / kappa_tau);
    let (k_eff, l_eff, alpha_eff) =
        effective_noise(pulling, d.accel_sensitivity, d.cavity_length, d.cte)?;
    Ok(DesignReport {
        tau,
        n_atoms,
        dv_threshold,
        gamma_c,
        p_max_watts,
        pulling,
        kappa,
        kappa_tau,
        flux_param,
        doppler_param,
        k_eff,
        l_eff,
        alpha_eff,
        flux_ok: flux_param > 8.0,
        doppler_ok: doppler_param <= std::f64::consts::PI + 1e-9,
    })
}

/// Environmental-noise suppression: (pulling * k, l / pulling, pulling * alpha).
pub fn effective_noise(pulling: f64, k: f64, l: f64, alpha: f64) -> Result<(f64, f64, f64)> {
    if !(pulling > 0.0 && pulling <= 1.0) {
        return Err(BeamLaserError::InvalidParameter(format!(
            "pulling must lie in (0, 1], got {pulling}"
        )));
    }
    Ok((pulling * k, l / pulling, pulling * alpha))
}

impl DesignReport {
    /// Two-column aligned text table.
    pub fn render_text(&self) -> String {
        let rows: Vec<(String, String)> = vec![
            ("Transit time".into(), format!("{:.3e} s", self.tau)),
            ("Atom number".into(), format!("{:.3e}", self.n_atoms)),
            (
                "Velocity spread at Doppler threshold".into(),
                format!("{:.3e} m/s", self.dv_threshold),
            ),
            (
                "Collective emission rate".into(),
                format!("2 pi x {:.3e} Hz ({:.3e} rad/s)", self.gamma_c / (2.0 * std::f64::consts::PI), self.gamma_c),
            ),
            ("Peak output power".into(), format!("{:.3e} W", self.p_max_watts)),
            (
                "Cavity decay rate".into(),
                format!("2 pi x {:.3e} Hz ({:.3e} rad/s)", self.kappa / (2.0 * std::f64::consts::PI), self.kappa),
            ),
            ("kappa tau".into(), format!("{:.3e}", self.kappa_tau)),
            ("Flux parameter".into(), format!("{:.3e}", self.flux_param)),
            ("Doppler parameter".into(), format!("{:.3e}", self.doppler_param)),
            ("Pulling coefficient".into(), format!("{:.3e}", self.pulling)),
            (
                "Effective acceleration sensitivity".into(),
                format!("{:.3e} /(m/s^2)", self.k_eff),
            ),
            ("Effective cavity length".into(), format!("{:.3e} m", self.l_eff)),
            ("Effective CTE".into(), format!("{:.3e} /K", self.alpha_eff)),
            (
                "Superradiance condition (flux parameter > 8)".into(),
                format!("{}", if self.flux_ok { "satisfied" } else { "VIOLATED" }),
            ),
            (
                "Doppler condition (doppler parameter <= pi)".into(),
                format!("{}", if self.doppler_ok { "satisfied" } else { "VIOLATED" }),
            ),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            out.push_str(&format!("{k:<width$}  {v}\n"));
        }
        out
    }
}

/// Reference inputs for a Ca-40 intercombination-line beam laser.
pub fn ca40() -> DesignInput {
    DesignInput {
        gamma: AngularFreq::from_hz(400.0),
        wavelength: 657e-9,
        flux: 6.1e14,
        v_longitudinal: 765.9,
        waist: 0.31e-3,
        cavity_length: 3.3e-2,
        finesse: 22.8,
        cooperativity: 2e-5,
        accel_sensitivity: 1e-9,
        cte: 1e-6,
    }
}

/// Reference inputs for a Sr-88 intercombination-line beam laser.
pub fn sr88() -> DesignInput {
    DesignInput {
        gamma: AngularFreq::from_hz(7.5e3),
        wavelength: 689e-9,
        flux: 1.2e13,
        v_longitudinal: 469.8,
        waist: 0.31e-3,
        cavity_length: 6.0e-2,
        finesse: 20.8,
        cooperativity: 2e-5,
        accel_sensitivity: 1e-9,
        cte: 1e-6,
    }
}
