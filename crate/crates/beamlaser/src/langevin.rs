//! Stochastic integration of the classical-dipole Langevin equations for the
//! atom ensemble: ballistic transit through the mode, collective cavity shot
//! noise (shared draws per step), and optional spontaneous-emission
//! diffusion. Produces collective-dipole time series.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{BeamLaserError, Result};
use crate::params::{derive_rates, natural_units, DerivedRates, PhysicalParams};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimOptions {
    /// Total integration time in units of tau.
    pub total_time: f64,
    /// Record every this many injection intervals.
    pub sample_stride: usize,
    /// Integration sub-steps per injection interval.
    pub n_sub: usize,
    pub cavity_noise: bool,
    pub spont_noise: bool,
    /// Test hook: inject every atom with sx = +1, sy = 0 instead of random
    /// signs, giving a phase-locked deterministic buildup.
    pub coherent_init: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            total_time: 200.0,
            sample_stride: 1,
            n_sub: 1,
            cavity_noise: true,
            spont_noise: false,
            coherent_init: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AtomState {
    pub x: f64,
    pub z: f64,
    pub vx: f64,
    pub vz: f64,
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    pub entry_time: f64,
    exit_step: u64,
}

#[derive(Debug, Clone)]
pub struct EnsembleState {
    pub time: f64,
    pub step: u64,
    pub atoms: Vec<AtomState>,
    pub jx: f64,
    pub jy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub sample_times: Vec<f64>,
    pub jx_series: Vec<f64>,
    pub jy_series: Vec<f64>,
    pub seed: u64,
    pub config_hash: String,
    pub n_atoms: u64,
}

/// Top-hat-by-standing-wave mode function cos(kz) [theta(x+w) - theta(x-w)],
/// with theta(0) = 1.
pub fn mode_function(x: f64, z: f64, w: f64, k: f64) -> f64 {
    let theta = |t: f64| if t >= 0.0 { 1.0 } else { 0.0 };
    (k * z).cos() * (theta(x + w) - theta(x - w))
}

pub fn inject_atom<R: Rng>(rng: &mut R, p: &PhysicalParams) -> AtomState {
    let k = p.wavenumber();
    let z = rng.gen::<f64>() * p.wavelength;
    let vz = if p.delta_d == 0.0 {
        0.0
    } else {
        let n: f64 = StandardNormal.sample(rng);
        n * p.delta_d / k
    };
    let sx = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    let sy = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    AtomState {
        x: -p.waist,
        z,
        vx: 2.0 * p.waist / p.tau,
        vz,
        sx,
        sy,
        sz: 1.0,
        entry_time: 0.0,
        exit_step: 0,
    }
}

/// Deterministic part of the dipole equations. `gamma` must be 0 when
/// spontaneous emission is disabled.
pub fn drift(
    atom: &AtomState,
    eta: f64,
    jx: f64,
    jy: f64,
    rates: &DerivedRates,
    gamma: f64,
) -> (f64, f64, f64) {
    let (sx, sy, sz) = (atom.sx, atom.sy, atom.sz);
    let gc = rates.gamma_c;
    let gd = rates.gamma_delta;
    let cx = jx * sz - eta * sx * (sz + 1.0);
    let cy = jy * sz - eta * sy * (sz + 1.0);
    let dsx = 0.5 * gc * eta * cx - 0.5 * gd * eta * cy - 0.5 * gamma * sx;
    let dsy = 0.5 * gc * eta * cy + 0.5 * gd * eta * cx - 0.5 * gamma * sy;
    let dsz = -(gc * eta * eta + gamma) * (sz + 1.0)
        - 0.5 * gc * eta * (jx * sx + jy * sy - eta * (sx * sx + sy * sy))
        + 0.5 * gd * eta * (jy * sx - jx * sy);
    (dsx, dsy, dsz)
}

/// Cavity-noise increment for one atom. `xi_q` and `xi_p` are the shared
/// standard-normal draws of this timestep (single mode, collective noise).
pub fn cavity_noise_increment(
    atom: &AtomState,
    eta: f64,
    xi_q: f64,
    xi_p: f64,
    rates: &DerivedRates,
    dt: f64,
) -> (f64, f64, f64) {
    let cc = rates.gamma_c / rates.gamma_0.sqrt();
    let cd = rates.gamma_delta / rates.gamma_0.sqrt();
    let sdt = dt.sqrt();
    let nsx = (-cc * atom.sz * xi_p - cd * atom.sz * xi_q) * eta * sdt;
    let nsy = (cc * atom.sz * xi_q - cd * atom.sz * xi_p) * eta * sdt;
    let nsz = (cc * (atom.sx * xi_p - atom.sy * xi_q) + cd * (atom.sx * xi_q + atom.sy * xi_p))
        * eta
        * sdt;
    (nsx, nsy, nsz)
}

/// Spontaneous-emission increment: a 3-vector with covariance 2 D dt, where
/// D = (gamma/2) [[1, 0, sx], [0, 1, sy], [sx, sy, 2(1+sz)]]. Lower-triangular
/// factorization; the Schur complement is clamped at 0 when the state drifts
/// off the physical manifold.
pub fn spont_noise_increment<R: Rng>(
    atom: &AtomState,
    rng: &mut R,
    gamma: f64,
    dt: f64,
) -> (f64, f64, f64) {
    let s = (gamma * dt).sqrt();
    let n1: f64 = StandardNormal.sample(rng);
    let n2: f64 = StandardNormal.sample(rng);
    let n3: f64 = StandardNormal.sample(rng);
    let schur = (2.0 * (1.0 + atom.sz) - atom.sx * atom.sx - atom.sy * atom.sy).max(0.0);
    (
        s * n1,
        s * n2,
        s * (atom.sx * n1 + atom.sy * n2 + schur.sqrt() * n3),
    )
}

/// One Euler-Maruyama sub-step; at injection-interval boundaries removes
/// expired atoms and injects exactly one new atom.
pub fn step<R: Rng>(
    state: &mut EnsembleState,
    dt: f64,
    rng: &mut R,
    p: &PhysicalParams,
    rates: &DerivedRates,
    opts: &SimOptions,
) -> Result<()> {
    let k = p.wavenumber();
    let gamma = if opts.spont_noise { p.gamma } else { 0.0 };
    let (jx, jy) = (state.jx, state.jy);
    let (xi_q, xi_p): (f64, f64) = if opts.cavity_noise {
        (StandardNormal.sample(rng), StandardNormal.sample(rng))
    } else {
        (0.0, 0.0)
    };
    for atom in &mut state.atoms {
        let eta = mode_function(atom.x, atom.z, p.waist, k);
        let (dx, dy, dz) = drift(atom, eta, jx, jy, rates, gamma);
        let (mut nx, mut ny, mut nz) = if opts.cavity_noise {
            cavity_noise_increment(atom, eta, xi_q, xi_p, rates, dt)
        } else {
            (0.0, 0.0, 0.0)
        };
        if opts.spont_noise && p.gamma > 0.0 {
            let (ax, ay, az) = spont_noise_increment(atom, rng, p.gamma, dt);
            nx += ax;
            ny += ay;
            nz += az;
        }
        atom.sx += dx * dt + nx;
        atom.sy += dy * dt + ny;
        atom.sz += dz * dt + nz;
        atom.x += atom.vx * dt;
        atom.z = (atom.z + atom.vz * dt).rem_euclid(p.wavelength);
    }
    state.step += 1;
    state.time += dt;
    if state.step % opts.n_sub as u64 == 0 {
        state.atoms.retain(|a| a.exit_step > state.step);
        let mut fresh = inject_atom(rng, p);
        if opts.coherent_init {
            fresh.sx = 1.0;
            fresh.sy = 0.0;
        }
        fresh.entry_time = state.time;
        fresh.exit_step = state.step + rates.n_atoms * opts.n_sub as u64;
        state.atoms.push(fresh);
        if state.atoms.len() as u64 > rates.n_atoms + 1 {
            return Err(BeamLaserError::NoConvergence(format!(
                "ensemble grew to {} atoms with N = {}",
                state.atoms.len(),
                rates.n_atoms
            )));
        }
    }
    let (mut jx, mut jy) = (0.0, 0.0);
    for atom in &state.atoms {
        let eta = mode_function(atom.x, atom.z, p.waist, k);
        jx += eta * atom.sx;
        jy += eta * atom.sy;
    }
    state.jx = jx;
    state.jy = jy;
    Ok(())
}

pub fn config_hash(p: &PhysicalParams, opts: &SimOptions) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(&(p, opts)).expect("serializable config"));
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn trajectory_seed(base_seed: u64, index: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(base_seed.to_le_bytes());
    hasher.update(index.to_le_bytes());
    hasher.finalize().into()
}

pub fn run_trajectory(p: &PhysicalParams, opts: &SimOptions, seed: u64) -> Result<TrajectoryRecord> {
    run_trajectory_rng(p, opts, seed, ChaCha12Rng::seed_from_u64(seed))
}

fn run_trajectory_rng(
    p: &PhysicalParams,
    opts: &SimOptions,
    seed: u64,
    mut rng: ChaCha12Rng,
) -> Result<TrajectoryRecord> {
    let p = natural_units(p);
    let rates = derive_rates(&p)?;
    let n = rates.n_atoms;
    if n == 0 {
        return Err(BeamLaserError::InvalidParameter(
            "flux too low: N = round(phi tau) = 0".into(),
        ));
    }
    let dt = 1.0 / (n as f64 * opts.n_sub as f64);
    let total_steps = (opts.total_time * n as f64).round() as u64 * opts.n_sub as u64;
    let record_every = opts.sample_stride as u64 * opts.n_sub as u64;
    let mut state = EnsembleState {
        time: 0.0,
        step: 0,
        atoms: Vec::with_capacity(n as usize + 1),
        jx: 0.0,
        jy: 0.0,
    };
    let n_samples = (total_steps / record_every + 1) as usize;
    let mut record = TrajectoryRecord {
        sample_times: Vec::with_capacity(n_samples),
        jx_series: Vec::with_capacity(n_samples),
        jy_series: Vec::with_capacity(n_samples),
        seed,
        config_hash: config_hash(&p, opts),
        n_atoms: n,
    };
    record.sample_times.push(0.0);
    record.jx_series.push(0.0);
    record.jy_series.push(0.0);
    for s in 1..=total_steps {
        step(&mut state, dt, &mut rng, &p, &rates, opts)?;
        if s % record_every == 0 {
            record.sample_times.push(s as f64 * dt);
            record.jx_series.push(state.jx);
            record.jy_series.push(state.jy);
        }
    }
    Ok(record)
}

/// Runs `n_traj` independent trajectories in parallel. Trajectory i uses a
/// seed derived from (base_seed, i); results are ordered by index, so output
/// does not depend on the worker count.
pub fn run_ensemble(
    p: &PhysicalParams,
    opts: &SimOptions,
    n_traj: usize,
    base_seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    let results: Vec<(usize, Result<TrajectoryRecord>)> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let seed_bytes = trajectory_seed(base_seed, i as u64);
            let label = u64::from_le_bytes(seed_bytes[..8].try_into().unwrap());
            let rng = ChaCha12Rng::from_seed(seed_bytes);
            (i, run_trajectory_rng(p, opts, label, rng))
        })
        .collect();
    let mut out = Vec::with_capacity(n_traj);
    let mut failures = Vec::new();
    for (i, r) in results {
        match r {
            Ok(rec) => out.push(rec),
            Err(e) => failures.push(format!("trajectory {i}: {e}")),
        }
    }
    if !failures.is_empty() {
        return Err(BeamLaserError::NoConvergence(failures.join("; ")));
    }
    Ok(out)
}

impl TrajectoryRecord {
    /// CSV with header `t,jx,jy`, floats in %.12e.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,jx,jy")?;
        for i in 0..self.sample_times.len() {
            writeln!(
                w,
                "{:.12e},{:.12e},{:.12e}",
                self.sample_times[i], self.jx_series[i], self.jy_series[i]
            )?;
        }
        Ok(())
    }

    pub fn sidecar_json(&self, opts: &SimOptions) -> serde_json::Value {
        serde_json::json!({
            "seed": self.seed,
            "config_hash": self.config_hash,
            "n_atoms": self.n_atoms,
            "opts": opts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::from_dimensionless;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn desk(flux: f64, n: u64) -> PhysicalParams {
        from_dimensionless(flux, 0.2 * PI, 1000.0, n)
    }

    #[test]
    fn mode_function_edges() {
        let k = 2.0 * PI;
        assert_eq!(mode_function(0.0, 0.0, 1.0, k), 1.0);
        assert_eq!(mode_function(2.0, 0.0, 1.0, k), 0.0);
        assert_relative_eq!(mode_function(0.0, 0.25, 1.0, k), 0.0, epsilon = 1e-15);
        assert_eq!(mode_function(-1.0, 0.0, 1.0, k), 1.0);
        assert_eq!(mode_function(1.0, 0.0, 1.0, k), 0.0);
    }

    #[test]
    fn injection_statistics() {
        let p = desk(20.0, 200);
        let k = p.wavenumber();
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let m = 1_000_000;
        let (mut sum, mut sumsq, mut zmin, mut zmax) = (0.0, 0.0, f64::MAX, f64::MIN);
        for _ in 0..m {
            let a = inject_atom(&mut rng, &p);
            assert_eq!(a.x, -p.waist);
            assert_eq!(a.sz, 1.0);
            assert!(a.sx.abs() == 1.0 && a.sy.abs() == 1.0);
            assert_relative_eq!(a.vx, 2.0 * p.waist / p.tau);
            let kv = k * a.vz;
            sum += kv;
            sumsq += kv * kv;
            zmin = zmin.min(a.z);
            zmax = zmax.max(a.z);
        }
        let mean = sum / m as f64;
        let std = (sumsq / m as f64 - mean * mean).sqrt();
        let sigma = 0.2 * PI;
        assert!(mean.abs() < 3.0 * sigma / 1e3, "mean {mean}");
        assert_relative_eq!(std, sigma, max_relative = 0.01);
        assert!(zmin >= 0.0 && zmax < p.wavelength);
        // delta_d = 0 collapses vz.
        let p0 = PhysicalParams { delta_d: 0.0, ..p };
        assert_eq!(inject_atom(&mut rng, &p0).vz, 0.0);
    }

    #[test]
    fn drift_hand_values() {
        let p = desk(20.0, 200);
        let rates = derive_rates(&p).unwrap();
        let gc = rates.gamma_c;
        let atom = AtomState {
            x: 0.0,
            z: 0.0,
            vx: 1.0,
            vz: 0.0,
            sx: 1.0,
            sy: 0.0,
            sz: 1.0,
            entry_time: 0.0,
            exit_step: 0,
        };
        let (dsx, _, dsz) = drift(&atom, 1.0, 1.0, 0.0, &rates, 0.0);
        assert_relative_eq!(dsx, -gc / 2.0, max_relative = 1e-12);
        assert_relative_eq!(dsz, -2.0 * gc, max_relative = 1e-12);
        // Outside the mode nothing moves without spontaneous emission.
        assert_eq!(drift(&atom, 0.0, 1.0, 0.0, &rates, 0.0), (0.0, 0.0, 0.0));
        // With gamma on, eta = 0 leaves the free-space decay.
        let g = 0.3;
        let (dsx, dsy, dsz) = drift(&atom, 0.0, 1.0, 0.0, &rates, g);
        assert_relative_eq!(dsx, -g / 2.0);
        assert_eq!(dsy, 0.0);
        assert_relative_eq!(dsz, -2.0 * g);
    }

    #[test]
    fn cavity_noise_zero_draws_and_magnitude() {
        let p = desk(20.0, 200);
        let rates = derive_rates(&p).unwrap();
        let atom = AtomState {
            x: 0.0,
            z: 0.0,
            vx: 1.0,
            vz: 0.0,
            sx: 0.0,
            sy: 0.0,
            sz: 1.0,
            entry_time: 0.0,
            exit_step: 0,
        };
        assert_eq!(
            cavity_noise_increment(&atom, 1.0, 0.0, 0.0, &rates, 0.1),
            (0.0, 0.0, 0.0)
        );
        // Delta = 0: coefficient is sqrt(Gamma_c) eta |sz| sqrt(dt).
        let dt = 0.01;
        let (nsx, nsy, _) = cavity_noise_increment(&atom, 1.0, 1.0, 1.0, &rates, dt);
        let expect = (rates.gamma_c * dt).sqrt();
        assert_relative_eq!(nsx.abs(), expect, max_relative = 1e-12);
        assert_relative_eq!(nsy.abs(), expect, max_relative = 1e-12);
    }

    #[test]
    fn cavity_noise_variance_law() {
        let p = desk(20.0, 200);
        let rates = derive_rates(&p).unwrap();
        let atom = AtomState {
            x: 0.0,
            z: 0.0,
            vx: 1.0,
            vz: 0.0,
            sx: 0.0,
            sy: 0.0,
            sz: 1.0,
            entry_time: 0.0,
            exit_step: 0,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let dt = 1e-3;
        let steps = 10;
        let sums = 40_000;
        let mut var = 0.0;
        for _ in 0..sums {
            let mut acc = 0.0;
            for _ in 0..steps {
                let xq: f64 = StandardNormal.sample(&mut rng);
                let xp: f64 = StandardNormal.sample(&mut rng);
                acc += cavity_noise_increment(&atom, 1.0, xq, xp, &rates, dt).0;
            }
            var += acc * acc;
        }
        var /= sums as f64;
        let expect = rates.gamma_c * dt * steps as f64;
        assert_relative_eq!(var, expect, max_relative = 0.02);
    }

    #[test]
    fn spont_noise_covariance() {
        let gamma = 0.7;
        let dt = 0.02;
        let base = AtomState {
            x: 0.0,
            z: 0.0,
            vx: 1.0,
            vz: 0.0,
            sx: 1.0,
            sy: 0.0,
            sz: 0.0,
            entry_time: 0.0,
            exit_step: 0,
        };
        // Ground state emits no z-noise.
        let ground = AtomState { sx: 0.0, sz: -1.0, ..base };
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..100 {
            assert_eq!(spont_noise_increment(&ground, &mut rng, gamma, dt).2, 0.0);
        }
        // Empirical covariance at s = (1, 0, 0) matches gamma dt [[1,0,1],[0,1,0],[1,0,2]].
        let m = 1_000_000;
        let mut c = [[0.0; 3]; 3];
        for _ in 0..m {
            let (a, b, d) = spont_noise_increment(&base, &mut rng, gamma, dt);
            let v = [a, b, d];
            for i in 0..3 {
                for j in 0..3 {
                    c[i][j] += v[i] * v[j];
                }
            }
        }
        let scale = gamma * dt;
        let want = [[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                let got = c[i][j] / m as f64 / scale;
                if want[i][j] == 0.0 {
                    assert!(got.abs() < 0.02, "cov[{i}][{j}] = {got}");
                } else {
                    assert_relative_eq!(got, want[i][j], max_relative = 0.02);
                }
            }
        }
    }

    #[test]
    fn atom_count_fills_then_saturates() {
        let p = desk(20.0, 50);
        let rates = derive_rates(&p).unwrap();
        let opts = SimOptions {
            total_time: 3.0,
            n_sub: 2,
            ..SimOptions::default()
        };
        let n = rates.n_atoms;
        let dt = 1.0 / (n as f64 * opts.n_sub as f64);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut state = EnsembleState {
            time: 0.0,
            step: 0,
            atoms: Vec::new(),
            jx: 0.0,
            jy: 0.0,
        };
        let total = 3 * n * opts.n_sub as u64;
        for s in 1..=total {
            step(&mut state, dt, &mut rng, &p, &rates, &opts).unwrap();
            if s % opts.n_sub as u64 == 0 {
                let intervals = s / opts.n_sub as u64;
                let expect = intervals.min(n);
                assert_eq!(state.atoms.len() as u64, expect, "at interval {intervals}");
            }
        }
        // Cached dipole matches recomputation.
        let k = p.wavenumber();
        let (mut jx, mut jy) = (0.0, 0.0);
        for a in &state.atoms {
            let eta = mode_function(a.x, a.z, p.waist, k);
            jx += eta * a.sx;
            jy += eta * a.sy;
        }
        assert_relative_eq!(state.jx, jx, max_relative = 1e-9);
        assert_relative_eq!(state.jy, jy, max_relative = 1e-9);
    }

    #[test]
    fn single_atom_closed_form_decay() {
        // sx = sy = 0 stays; sz relaxes as -1 + (sz0 + 1) exp(-Gc eta^2 t).
        let gc: f64 = 1.0;
        let eta: f64 = 0.8;
        let dt = 5e-7;
        let t_end = 2.0;
        let (mut sx, mut sy, mut sz) = (0.0, 0.0, 1.0);
        let steps = (t_end / dt) as u64;
        for _ in 0..steps {
            // Single atom: jx = eta sx, jy = eta sy.
            let cx = eta * sx * sz - eta * sx * (sz + 1.0);
            let cy = eta * sy * sz - eta * sy * (sz + 1.0);
            let dsx = 0.5 * gc * eta * cx;
            let dsy = 0.5 * gc * eta * cy;
            let dsz = -gc * eta * eta * (sz + 1.0)
                - 0.5 * gc * eta * (eta * sx * sx + eta * sy * sy - eta * (sx * sx + sy * sy));
            sx += dsx * dt;
            sy += dsy * dt;
            sz += dsz * dt;
        }
        assert_eq!(sx, 0.0);
        assert_eq!(sy, 0.0);
        let expect = -1.0 + 2.0 * (-gc * eta * eta * t_end).exp();
        assert_relative_eq!(sz, expect, max_relative = 1e-6);
    }

    #[test]
    fn ballistic_position_is_exact_in_time() {
        let p = desk(20.0, 50);
        let rates = derive_rates(&p).unwrap();
        let opts = SimOptions {
            total_time: 1.0,
            cavity_noise: false,
            ..SimOptions::default()
        };
        let n = rates.n_atoms;
        let dt = 1.0 / n as f64;
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let mut state = EnsembleState {
            time: 0.0,
            step: 0,
            atoms: Vec::new(),
            jx: 0.0,
            jy: 0.0,
        };
        for _ in 0..n / 2 {
            step(&mut state, dt, &mut rng, &p, &rates, &opts).unwrap();
        }
        for a in &state.atoms {
            let age = state.time - a.entry_time;
            let expect = -p.waist + a.vx * age;
            assert_relative_eq!(a.x, expect, epsilon = 1e-12 * p.waist);
        }
    }

    #[test]
    fn trajectory_is_deterministic() {
        let p = desk(20.0, 50);
        let opts = SimOptions {
            total_time: 5.0,
            ..SimOptions::default()
        };
        let a = run_trajectory(&p, &opts, 42).unwrap();
        let b = run_trajectory(&p, &opts, 42).unwrap();
        assert_eq!(a.jx_series, b.jx_series);
        assert_eq!(a.jy_series, b.jy_series);
        let c = run_trajectory(&p, &opts, 43).unwrap();
        assert_ne!(a.jx_series, c.jx_series);
        // Uniform sampling grid.
        let dt0 = a.sample_times[1] - a.sample_times[0];
        for w in a.sample_times.windows(2) {
            assert_relative_eq!(w[1] - w[0], dt0, max_relative = 1e-9);
        }
    }

    #[test]
    fn coherent_buildup_matches_steady_dipole() {
        let p = from_dimensionless(20.0, 0.0, 1000.0, 500);
        let opts = SimOptions {
            total_time: 30.0,
            cavity_noise: false,
            coherent_init: true,
            ..SimOptions::default()
        };
        let rec = run_trajectory(&p, &opts, 1).unwrap();
        let n = rec.n_atoms as f64;
        let mut acc = 0.0;
        let mut count = 0;
        for (t, jx) in rec.sample_times.iter().zip(&rec.jx_series) {
            if *t > 20.0 {
                acc += jx / n;
                count += 1;
            }
        }
        let j_sim = acc / count as f64;
        let j_mf = crate::meanfield::steady_dipole(20.0, 0.0).unwrap();
        assert_relative_eq!(j_sim, j_mf, max_relative = 0.05);
    }

    #[test]
    fn below_threshold_dipole_stays_small() {
        let p = desk(2.0, 200);
        let opts = SimOptions {
            total_time: 40.0,
            ..SimOptions::default()
        };
        let rec = run_trajectory(&p, &opts, 11).unwrap();
        let n = rec.n_atoms as f64;
        let mut acc = 0.0;
        let mut count = 0;
        for (t, jx) in rec.sample_times.iter().zip(&rec.jx_series) {
            if *t > 10.0 {
                acc += jx;
                count += 1;
            }
        }
        let mean = acc / count as f64;
        assert!(mean.abs() < 0.1 * n, "mean dipole {mean} vs N {n}");
    }

    #[test]
    fn ensemble_matches_sequential_runs() {
        let p = desk(20.0, 50);
        let opts = SimOptions {
            total_time: 3.0,
            ..SimOptions::default()
        };
        let recs = run_ensemble(&p, &opts, 4, 99).unwrap();
        assert_eq!(recs.len(), 4);
        let again = run_ensemble(&p, &opts, 4, 99).unwrap();
        for (a, b) in recs.iter().zip(&again) {
            assert_eq!(a.jx_series, b.jx_series);
            assert_eq!(a.seed, b.seed);
        }
        // Distinct trajectories differ.
        assert_ne!(recs[0].jx_series, recs[1].jx_series);
    }

    #[test]
    fn csv_format() {
        let rec = TrajectoryRecord {
            sample_times: vec![0.0, 0.5],
            jx_series: vec![1.0, -2.25],
            jy_series: vec![0.0, 3.5],
            seed: 7,
            config_hash: "abc".into(),
            n_atoms: 10,
        };
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,jx,jy");
        assert_eq!(
            lines.next().unwrap(),
            "0.000000000000e0,1.000000000000e0,0.000000000000e0"
        );
    }
}
