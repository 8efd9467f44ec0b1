//! Trajectory ensembles to observables: averaged first-order correlation,
//! damped-cosine fit, linewidth, normalized power, pulling, and g2(0).

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{BeamLaserError, Result};
use crate::langevin::TrajectoryRecord;

#[derive(Debug, Clone)]
pub struct CorrelationSeries {
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
    pub n_pairs: Vec<u64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitResult {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub rms_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorReport {
    pub linewidth: f64,
    pub linewidth_units: String,
    pub power_norm: f64,
    pub pulling: Option<f64>,
    pub g2_zero: f64,
    pub fit: FitResult,
    pub window: WindowInfo,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowInfo {
    pub t0: f64,
    pub total_time: f64,
    pub n_traj: usize,
}

fn window_start(record: &TrajectoryRecord, t0: f64) -> usize {
    record.sample_times.partition_point(|&t| t < t0)
}

/// Unnormalized lag sums of <c(t'+lag) conj(c(t'))> by direct summation.
fn lag_sums_direct(c: &[Complex64], n_lags: usize) -> Vec<Complex64> {
    let m = c.len();
    (0..n_lags)
        .map(|lag| (0..m - lag).map(|i| c[i + lag] * c[i].conj()).sum())
        .collect()
}

/// Same sums via FFT autocorrelation (zero-padded, O(M log M)).
fn lag_sums_fft(c: &[Complex64], n_lags: usize) -> Vec<Complex64> {
    let m = c.len();
    let size = (2 * m).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    buf[..m].copy_from_slice(c);
    fft.process(&mut buf);
    for v in buf.iter_mut() {
        *v = *v * v.conj();
    }
    ifft.process(&mut buf);
    // rustfft leaves the inverse unnormalized.
    buf[..n_lags].iter().map(|v| v / size as f64).collect()
}

/// Trajectory- and time-averaged first-order correlation of the collective
/// dipole, on the sampling grid.
pub fn g1_correlation(
    records: &[TrajectoryRecord],
    t0: f64,
    max_lag: f64,
) -> Result<CorrelationSeries> {
    let first = records.first().ok_or_else(|| {
        BeamLaserError::Estimator("g1_correlation needs at least one record".into())
    })?;
    let dt = first.sample_times.get(1).copied().unwrap_or(0.0)
        - first.sample_times.first().copied().unwrap_or(0.0);
    if dt <= 0.0 {
        return Err(BeamLaserError::Estimator("degenerate sampling grid".into()));
    }
    let n_lags = (max_lag / dt).floor() as usize + 1;
    let mut sums = vec![Complex64::new(0.0, 0.0); n_lags];
    let mut pairs = vec![0u64; n_lags];
    for rec in records {
        let start = window_start(rec, t0);
        let c: Vec<Complex64> = (start..rec.sample_times.len())
            .map(|i| Complex64::new(rec.jx_series[i], rec.jy_series[i]))
            .collect();
        if c.len() <= n_lags {
            return Err(BeamLaserError::Estimator(format!(
                "averaging window too short: {} samples for {} lags",
                c.len(),
                n_lags
            )));
        }
        let part = if c.len() < 512 {
            lag_sums_direct(&c, n_lags)
        } else {
            lag_sums_fft(&c, n_lags)
        };
        for (lag, v) in part.iter().enumerate() {
            sums[lag] += v;
            pairs[lag] += (c.len() - lag) as u64;
        }
    }
    Ok(CorrelationSeries {
        lags: (0..n_lags).map(|i| i as f64 * dt).collect(),
        values: sums
            .iter()
            .zip(&pairs)
            .map(|(s, &n)| s.re / n as f64)
            .collect(),
        n_pairs: pairs,
    })
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        m.swap(col, piv);
        if m[col][col].abs() < 1e-300 {
            return None;
        }
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

fn model_rms(params: [f64; 3], t: &[f64], y: &[f64]) -> f64 {
    let [c1, c2, c3] = params;
    let ss: f64 = t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let r = c1 * (-c2 * ti).exp() * (c3 * ti).cos() - yi;
            r * r
        })
        .sum();
    (ss / t.len() as f64).sqrt()
}

fn initial_guess(t: &[f64], y: &[f64]) -> [f64; 3] {
    let c1 = y[0];
    // Dominant discrete-spectrum peak over the half spectrum.
    let m = y.len();
    let dt = t[1] - t[0];
    let mut best = (0usize, 0.0f64);
    for k in 0..m / 2 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &yi) in y.iter().enumerate() {
            let ph = -2.0 * std::f64::consts::PI * (k * i) as f64 / m as f64;
            acc += yi * Complex64::new(ph.cos(), ph.sin());
        }
        if acc.norm() > best.1 {
            best = (k, acc.norm());
        }
    }
    let c3 = 2.0 * std::f64::consts::PI * best.0 as f64 / (m as f64 * dt);
    // Envelope decay from a log-linear fit to local maxima of |y|.
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for i in 0..m {
        let v = y[i].abs();
        let left = if i == 0 { 0.0 } else { y[i - 1].abs() };
        let right = if i + 1 == m { 0.0 } else { y[i + 1].abs() };
        if v >= left && v >= right && v > 1e-12 * c1.abs() {
            pts.push((t[i], v.ln()));
        }
    }
    let c2 = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        if denom.abs() > 1e-300 {
            (-(n * sxy - sx * sy) / denom).max(0.0)
        } else {
            0.0
        }
    } else {
        0.0
    };
    [c1, c2, c3]
}

/// Truncate the fit window where the signal first drops below three times
/// the tail noise floor; tail noise otherwise biases the decay rate.
fn fit_window(y: &[f64]) -> usize {
    let m = y.len();
    let tail = &y[m - (m / 10).max(2)..];
    let floor = (tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64).sqrt();
    let cutoff = 3.0 * floor;
    if cutoff >= 0.5 * y[0].abs() {
        // Signal never decays into the noise floor; keep everything.
        return m;
    }
    // Walk the envelope (local maxima of |y|) so cosine zero crossings do not
    // end the window early.
    let mut end = m;
    for i in 1..m - 1 {
        let v = y[i].abs();
        if v >= y[i - 1].abs() && v >= y[i + 1].abs() && v < cutoff {
            end = i;
            break;
        }
    }
    end.max(20.min(m))
}

/// Levenberg-Marquardt fit of C1 exp(-C2 t) cos(C3 t), with C2 >= 0.
pub fn fit_decay_cosine(series: &CorrelationSeries) -> Result<FitResult> {
    if series.lags.len() < 20 {
        return Err(BeamLaserError::Estimator(
            "fit needs at least 20 lags".into(),
        ));
    }
    let end = fit_window(&series.values);
    let t = &series.lags[..end];
    let y = &series.values[..end];
    let mut params = initial_guess(t, y);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut cost = model_rms(params, t, y);
    for _ in 0..500 {
        let [c1, c2, c3] = params;
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (&ti, &yi) in t.iter().zip(y) {
            let e = (-c2 * ti).exp();
            let cosw = (c3 * ti).cos();
            let sinw = (c3 * ti).sin();
            let r = c1 * e * cosw - yi;
            let j = [e * cosw, -ti * c1 * e * cosw, -ti * c1 * e * sinw];
            for a in 0..3 {
                jtr[a] += j[a] * r;
                for b in 0..3 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let mut damped = jtj;
        for a in 0..3 {
            damped[a][a] += lambda * jtj[a][a].max(1e-12);
        }
        let Some(step) = solve3(damped, [-jtr[0], -jtr[1], -jtr[2]]) else {
            break;
        };
        let mut trial = [params[0] + step[0], params[1] + step[1], params[2] + step[2]];
        trial[1] = trial[1].max(0.0);
        let trial_cost = model_rms(trial, t, y);
        if trial_cost <= cost {
            let scale: f64 = params.iter().map(|p| p * p).sum::<f64>().sqrt().max(1e-30);
            let moved: f64 = params
                .iter()
                .zip(&trial)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            params = trial;
            cost = trial_cost;
            lambda = (lambda * 0.3).max(1e-12);
            if moved < 1e-9 * scale {
                converged = true;
                break;
            }
        } else {
            lambda *= 3.0;
            if lambda > 1e12 {
                // Damping saturated: the step is effectively zero.
                converged = true;
                break;
            }
        }
    }
    Ok(FitResult {
        c1: params[0],
        c2: params[1],
        c3: params[2].abs(),
        rms_residual: cost,
        converged,
    })
}

/// Full width 2 C2 of the Lorentzian implied by the fitted decay.
pub fn linewidth(fit: &FitResult) -> Result<f64> {
    if !fit.converged {
        return Err(BeamLaserError::Estimator(
            "linewidth requested from a non-converged fit".into(),
        ));
    }
    Ok(2.0 * fit.c2)
}

/// Pulling coefficient C3 / Delta from the fitted oscillation frequency.
pub fn pulling_from_fit(fit: &FitResult, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(BeamLaserError::Estimator(
            "pulling is undefined at zero detuning".into(),
        ));
    }
    if !fit.converged {
        return Err(BeamLaserError::Estimator(
            "pulling requested from a non-converged fit".into(),
        ));
    }
    Ok(fit.c3 / delta)
}

fn mean_square_dipole(records: &[TrajectoryRecord], t0: f64) -> Result<f64> {
    let mut acc = 0.0;
    let mut count = 0u64;
    for rec in records {
        let start = window_start(rec, t0);
        for i in start..rec.sample_times.len() {
            acc += rec.jx_series[i] * rec.jx_series[i] + rec.jy_series[i] * rec.jy_series[i];
            count += 1;
        }
    }
    if count == 0 {
        return Err(BeamLaserError::Estimator("empty averaging window".into()));
    }
    Ok(acc / count as f64)
}

/// Normalized output power P / (hbar omega Phi) from the steady-window
/// mean-square dipole.
pub fn power(records: &[TrajectoryRecord], t0: f64, flux_param: f64) -> Result<f64> {
    let n = records
        .first()
        .ok_or_else(|| BeamLaserError::Estimator("no records".into()))?
        .n_atoms as f64;
    Ok(flux_param / (4.0 * n * n) * mean_square_dipole(records, t0)?)
}

/// Second-order coherence at zero delay from the intensity proxy
/// I = (jx^2 + jy^2) / 4.
pub fn g2_zero(records: &[TrajectoryRecord], t0: f64) -> Result<f64> {
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut count = 0u64;
    for rec in records {
        let start = window_start(rec, t0);
        for i in start..rec.sample_times.len() {
            let intensity =
                (rec.jx_series[i] * rec.jx_series[i] + rec.jy_series[i] * rec.jy_series[i]) / 4.0;
            s1 += intensity;
            s2 += intensity * intensity;
            count += 1;
        }
    }
    if count == 0 {
        return Err(BeamLaserError::Estimator("empty averaging window".into()));
    }
    let mean = s1 / count as f64;
    if mean <= 0.0 {
        return Err(BeamLaserError::Estimator("zero mean intensity".into()));
    }
    Ok(s2 / count as f64 / (mean * mean))
}

/// Assembles the full report for one ensemble.
pub fn report(
    records: &[TrajectoryRecord],
    t0: f64,
    max_lag: f64,
    flux_param: f64,
    delta: Option<f64>,
) -> Result<EstimatorReport> {
    let series = g1_correlation(records, t0, max_lag)?;
    let fit = fit_decay_cosine(&series)?;
    let total_time = records[0].sample_times.last().copied().unwrap_or(0.0);
    let pulling = match delta {
        Some(d) if d != 0.0 && fit.converged => Some(pulling_from_fit(&fit, d)?),
        _ => None,
    };
    Ok(EstimatorReport {
        linewidth: linewidth(&fit)?,
        linewidth_units: "1/tau".into(),
        power_norm: power(records, t0, flux_param)?,
        pulling,
        g2_zero: g2_zero(records, t0)?,
        fit,
        window: WindowInfo {
            t0,
            total_time,
            n_traj: records.len(),
        },
    })
}
