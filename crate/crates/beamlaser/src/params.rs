//! Physical configuration of one beam-laser setup and the rates derived
//! from it. Internally everything downstream runs in natural units (tau = 1);
//! SI values appear only at the design and CLI boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{BeamLaserError, Result};

/// Primary inputs describing one laser configuration. All frequencies are
/// angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Vacuum Rabi frequency at a cavity antinode.
    pub g: f64,
    /// Cavity photon loss rate.
    pub kappa: f64,
    /// Cavity-atom detuning, omega_c - omega_a. Any sign.
    pub delta: f64,
    /// Free-space spontaneous emission rate; 0 disables spontaneous emission.
    pub gamma: f64,
    /// Transit time through the mode (s).
    pub tau: f64,
    /// Beam flux (atoms/s).
    pub phi: f64,
    /// Doppler width k * std(vz) (rad/s).
    pub delta_d: f64,
    /// Half-width of the top-hat mode along x (m).
    pub waist: f64,
    /// Cavity mode wavelength (m); k = 2 pi / lambda.
    pub wavelength: f64,
    /// Atomic transition frequency, used only to convert photon rate to power.
    pub omega_a: f64,
}

/// Secondary rates and dimensionless groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    pub gamma_c: f64,
    pub gamma_delta: f64,
    pub gamma_0: f64,
    pub n_atoms: u64,
    pub flux_param: f64,
    pub doppler_param: f64,
    pub kappa_tau: f64,
    /// True when kappa > 10 * max(1/tau, sqrt(phi*tau)*g, delta_d). Advisory
    /// only; the adiabatic field elimination is questionable when false.
    pub bad_cavity_ok: bool,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("g", self.g),
            ("kappa", self.kappa),
            ("tau", self.tau),
            ("phi", self.phi),
            ("waist", self.waist),
            ("wavelength", self.wavelength),
            ("omega_a", self.omega_a),
        ];
        for (name, v) in positives {
            if !(v > 0.0) || !v.is_finite() {
                return Err(BeamLaserError::InvalidParameter(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(BeamLaserError::InvalidParameter(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if !(self.delta_d >= 0.0) || !self.delta_d.is_finite() {
            return Err(BeamLaserError::InvalidParameter(format!(
                "delta_d must be >= 0, got {}",
                self.delta_d
            )));
        }
        if !self.delta.is_finite() {
            return Err(BeamLaserError::InvalidParameter(
                "delta must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }
}

pub fn derive_rates(p: &PhysicalParams) -> Result<DerivedRates> {
    p.validate()?;
    let denom = p.kappa * p.kappa / 4.0 + p.delta * p.delta;
    let gamma_c = p.g * p.g * p.kappa / 4.0 / denom;
    let gamma_delta = if p.delta == 0.0 {
        0.0
    } else {
        p.g * p.g * p.delta / 2.0 / denom
    };
    let gamma_0 = p.g * p.g / p.kappa;
    let n_atoms = (p.phi * p.tau).round() as u64;
    let transit_scale = (1.0 / p.tau)
        .max((p.phi * p.tau).sqrt() * p.g)
        .max(p.delta_d);
    Ok(DerivedRates {
        gamma_c,
        gamma_delta,
        gamma_0,
        n_atoms,
        flux_param: p.phi * p.tau * p.tau * gamma_c,
        doppler_param: p.delta_d * p.tau,
        kappa_tau: p.kappa * p.tau,
        bad_cavity_ok: p.kappa > 10.0 * transit_scale,
    })
}

/// Rescale a configuration so that tau = 1: every rate is multiplied by tau,
/// geometry stays. The inverse is [`with_tau`].
pub fn natural_units(p: &PhysicalParams) -> PhysicalParams {
    with_tau(p, 1.0)
}

/// Rescale a configuration to a new transit time, keeping all dimensionless
/// groups fixed.
pub fn with_tau(p: &PhysicalParams, new_tau: f64) -> PhysicalParams {
    let scale = p.tau / new_tau;
    PhysicalParams {
        g: p.g * scale,
        kappa: p.kappa * scale,
        delta: p.delta * scale,
        gamma: p.gamma * scale,
        tau: new_tau,
        phi: p.phi * scale,
        delta_d: p.delta_d * scale,
        waist: p.waist,
        wavelength: p.wavelength,
        omega_a: p.omega_a * scale,
    }
}

/// Convenience constructor used by simulation drivers: builds a natural-units
/// configuration directly from the dimensionless groups.
pub fn from_dimensionless(
    flux_param: f64,
    doppler_param: f64,
    kappa_tau: f64,
    n_atoms: u64,
) -> PhysicalParams {
    let phi = n_atoms as f64; // tau = 1
    let gamma_c = flux_param / phi;
    // Delta = 0 here, so Gamma_c = g^2 / kappa.
    let g = (gamma_c * kappa_tau).sqrt();
    PhysicalParams {
        g,
        kappa: kappa_tau,
        delta: 0.0,
        gamma: 0.0,
        tau: 1.0,
        phi,
        delta_d: doppler_param,
        waist: 0.5,
        wavelength: 1e-3,
        omega_a: 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn base() -> PhysicalParams {
        PhysicalParams {
            g: 1.0,
            kappa: 100.0,
            delta: 0.0,
            gamma: 0.0,
            tau: 1.0,
            phi: 500.0,
            delta_d: 0.2 * std::f64::consts::PI,
            waist: 0.5,
            wavelength: 1e-3,
            omega_a: 1.0,
        }
    }

    #[test]
    fn resonant_rates() {
        let r = derive_rates(&base()).unwrap();
        assert_relative_eq!(r.gamma_c, 0.01, max_relative = 1e-14);
        assert_eq!(r.gamma_delta, 0.0);
        assert_relative_eq!(r.gamma_0, 0.01, max_relative = 1e-14);
        assert_eq!(r.n_atoms, 500);
    }

    #[test]
    fn detuned_rates() {
        let p = PhysicalParams {
            delta: 50.0,
            ..base()
        };
        let r = derive_rates(&p).unwrap();
        assert_relative_eq!(r.gamma_c, 0.005, max_relative = 1e-14);
        assert_relative_eq!(r.gamma_delta, 0.005, max_relative = 1e-14);
        assert_relative_eq!(r.gamma_delta / r.gamma_c, 2.0 * 50.0 / 100.0, max_relative = 1e-14);
    }

    #[test]
    fn flux_param_reference() {
        // phi = 500/tau with Gamma_c = 0.04/tau gives flux_param 20.
        let p = PhysicalParams {
            g: 2.0,
            ..base()
        };
        let r = derive_rates(&p).unwrap();
        assert_relative_eq!(r.flux_param, 20.0, max_relative = 1e-12);
        assert_eq!(r.n_atoms, 500);
    }

    #[test]
    fn rejects_nonpositive() {
        for f in [
            |p: &mut PhysicalParams| p.kappa = 0.0,
            |p: &mut PhysicalParams| p.tau = -1.0,
            |p: &mut PhysicalParams| p.phi = 0.0,
            |p: &mut PhysicalParams| p.g = f64::NAN,
        ] {
            let mut p = base();
            f(&mut p);
            assert!(derive_rates(&p).is_err());
        }
    }

    #[test]
    fn natural_units_table_scale() {
        // tau = 0.81 us, Gamma_c = 2 pi x 8 mHz as achieved by picking g.
        let gamma_c_si = 2.0 * std::f64::consts::PI * 8e-3;
        let kappa = 2.0 * std::f64::consts::PI * 197e6;
        let p = PhysicalParams {
            g: (gamma_c_si * kappa).sqrt(),
            kappa,
            delta: 0.0,
            gamma: 2.0 * std::f64::consts::PI * 400.0,
            tau: 0.81e-6,
            phi: 6.1e14,
            delta_d: 2.0 * std::f64::consts::PI / 657e-9 * 0.41,
            waist: 0.31e-3,
            wavelength: 657e-9,
            omega_a: 2.0 * std::f64::consts::PI * 3e8 / 657e-9,
        };
        let n = natural_units(&p);
        assert_eq!(n.tau, 1.0);
        let r = derive_rates(&n).unwrap();
        assert_relative_eq!(r.gamma_c, gamma_c_si * 0.81e-6, max_relative = 1e-12);
        assert_relative_eq!(r.gamma_c, 4.07e-8, max_relative = 0.01);
        // Round trip.
        let back = with_tau(&n, p.tau);
        assert_relative_eq!(back.g, p.g, max_relative = 1e-12);
        assert_relative_eq!(back.phi, p.phi, max_relative = 1e-12);
        assert_relative_eq!(back.delta_d, p.delta_d, max_relative = 1e-12);
    }

    #[test]
    fn natural_units_identity_at_unit_tau() {
        let p = base();
        let n = natural_units(&p);
        assert_eq!(n, p);
    }

    proptest! {
        #[test]
        fn zero_detuning_means_zero_gamma_delta(g in 0.1f64..10.0, kappa in 1.0f64..1e4) {
            let p = PhysicalParams { g, kappa, delta: 0.0, ..base() };
            prop_assert_eq!(derive_rates(&p).unwrap().gamma_delta, 0.0);
        }

        #[test]
        fn dimensionless_groups_scale_invariant(tau2 in 1e-9f64..1e3) {
            let p = base();
            let q = with_tau(&p, tau2);
            let rp = derive_rates(&p).unwrap();
            let rq = derive_rates(&q).unwrap();
            prop_assert!((rp.flux_param - rq.flux_param).abs() <= 1e-9 * rp.flux_param);
            prop_assert!((rp.doppler_param - rq.doppler_param).abs() <= 1e-9 * rp.doppler_param.max(1e-30));
            prop_assert!((rp.kappa_tau - rq.kappa_tau).abs() <= 1e-9 * rp.kappa_tau);
            prop_assert_eq!(rp.n_atoms, rq.n_atoms);
        }

        #[test]
        fn gamma_c_decreases_with_detuning(d1 in 0.0f64..100.0, step in 0.1f64..100.0) {
            let p1 = PhysicalParams { delta: d1, ..base() };
            let p2 = PhysicalParams { delta: d1 + step, ..base() };
            let r1 = derive_rates(&p1).unwrap();
            let r2 = derive_rates(&p2).unwrap();
            prop_assert!(r2.gamma_c < r1.gamma_c);
        }
    }
}
