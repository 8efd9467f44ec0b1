//! Batch front-end: stochastic simulation runs, mean-field phase-diagram
//! sweeps, and design tables, all with deterministic provenance.
//!
//! Exit codes: 0 success, 1 runtime/numeric failure, 2 usage/config error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use beamlaser::config::{self, Config};
use beamlaser::design::{design_report, effective_noise};
use beamlaser::langevin::{config_hash, run_ensemble};
use beamlaser::params::{derive_rates, natural_units};
use beamlaser::{estimators, meanfield};

#[derive(Parser)]
#[command(name = "beamlaser", version, about = "Superradiant beam laser toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate stochastic trajectories and write estimator reports.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Base RNG seed; overrides the config value.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of trajectories; overrides the config value.
        #[arg(long)]
        trajectories: Option<usize>,
        /// Worker threads; overrides BEAMLASER_WORKERS.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the mean-field theory over a parameter grid.
    Meanfield {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a design report from species and cavity inputs.
    Design {
        #[arg(long)]
        config: PathBuf,
        /// Replace the pulling fallback with this value.
        #[arg(long)]
        pulling: Option<f64>,
        /// Optional output directory; the table always goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Simulate {
            config,
            seed,
            trajectories,
            workers,
            out,
        } => cmd_simulate(&config, seed, trajectories, workers, &out),
        Cmd::Meanfield {
            config,
            workers,
            out,
        } => cmd_meanfield(&config, workers, &out),
        Cmd::Design {
            config,
            pulling,
            out,
        } => cmd_design(&config, pulling, out.as_deref()),
    };
    match code {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(String),
}

fn load_config(path: &Path) -> Result<Config, CliError> {
    config::load(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn init_workers(flag: Option<usize>) -> usize {
    let n = flag.or_else(|| {
        std::env::var("BEAMLASER_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    rayon::current_num_threads()
}

fn write_manifest(
    out: &Path,
    subcommand: &str,
    config_path: &Path,
    base_seed: u64,
    n_traj: usize,
    workers: usize,
    hash: &str,
) -> Result<(), CliError> {
    let manifest = serde_json::json!({
        "subcommand": subcommand,
        "config": config_path.display().to_string(),
        "base_seed": base_seed,
        "n_traj": n_traj,
        "workers": workers,
        "out_dir": out.display().to_string(),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_hash": hash,
    });
    write_json(&out.join("manifest.json"), &manifest)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn cmd_simulate(
    config_path: &Path,
    seed: Option<u64>,
    trajectories: Option<usize>,
    workers: Option<usize>,
    out: &Path,
) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let physical = cfg
        .physical
        .ok_or_else(|| CliError::Usage("missing [physical] section".into()))?;
    let sim = cfg
        .simulation
        .ok_or_else(|| CliError::Usage("missing [simulation] section".into()))?;
    let rates = derive_rates(&natural_units(&physical))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let opts = sim.options();
    let base_seed = seed.unwrap_or(sim.seed);
    let n_traj = trajectories.unwrap_or(sim.n_traj);
    let workers = init_workers(workers);
    if !rates.bad_cavity_ok {
        eprintln!(
            "warning: kappa = {} is not large compared to the atomic rates; \
             the adiabatic field elimination is marginal here",
            physical.kappa
        );
    }
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    let hash = config_hash(&natural_units(&physical), &opts);
    write_manifest(out, "simulate", config_path, base_seed, n_traj, workers, &hash)?;
    eprintln!(
        "simulate: N = {}, flux_param = {:.4}, doppler_param = {:.4}, {} trajectories on {} workers",
        rates.n_atoms, rates.flux_param, rates.doppler_param, n_traj, workers
    );
    let records = run_ensemble(&physical, &opts, n_traj, base_seed)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for (i, rec) in records.iter().enumerate() {
        let csv = out.join(format!("traj_{i:04}.csv"));
        let file = std::fs::File::create(&csv)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", csv.display())))?;
        rec.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        write_json(&out.join(format!("traj_{i:04}.json")), &rec.sidecar_json(&opts))?;
    }
    let delta_nat = physical.delta * physical.tau;
    let report = estimators::report(
        &records,
        sim.t0,
        sim.max_lag,
        rates.flux_param,
        (delta_nat != 0.0).then_some(delta_nat),
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    let value = serde_json::to_value(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_json(&out.join("estimators.json"), &value)?;
    println!("{}", serde_json::to_string(&value).unwrap());
    Ok(())
}

fn grid(min: f64, max: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![min];
    }
    (0..steps)
        .map(|i| min + (max - min) * i as f64 / (steps - 1) as f64)
        .collect()
}

fn cmd_meanfield(config_path: &Path, workers: Option<usize>, out: &Path) -> Result<(), CliError> {
    use rayon::prelude::*;
    let cfg = load_config(config_path)?;
    let mf = cfg
        .meanfield
        .ok_or_else(|| CliError::Usage("missing [meanfield] section".into()))?;
    let workers = init_workers(workers);
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    write_manifest(out, "meanfield", config_path, 0, 0, workers, "")?;
    let dopplers = grid(mf.doppler_min, mf.doppler_max, mf.doppler_steps);
    if mf.threshold_trace {
        let rows: Vec<String> = dopplers
            .par_iter()
            .map(|&d| match meanfield::threshold_flux(d) {
                Ok(f) => format!("{d:.12e},{f:.12e}"),
                Err(e) => {
                    eprintln!("threshold at doppler_param = {d}: {e}");
                    format!("{d:.12e},NaN")
                }
            })
            .collect();
        let text = format!("doppler_param,threshold_flux\n{}\n", rows.join("\n"));
        std::fs::write(out.join("threshold.csv"), text)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        eprintln!("meanfield: threshold trace over {} points", dopplers.len());
        return Ok(());
    }
    let fluxes = grid(mf.flux_min, mf.flux_max, mf.flux_steps);
    let points: Vec<(f64, f64)> = fluxes
        .iter()
        .flat_map(|&f| dopplers.iter().map(move |&d| (f, d)))
        .collect();
    eprintln!("meanfield: sweeping {} grid points on {} workers", points.len(), workers);
    let rows: Vec<String> = points
        .par_iter()
        .map(|&(f, d)| match meanfield::solve_point(f, d, mf.kappa_tau) {
            Ok(s) => {
                let pulling = s
                    .pulling_mf
                    .map_or("NaN".to_string(), |p| format!("{p:.12e}"));
                format!(
                    "{f:.12e},{d:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{pulling}",
                    s.nu0.re, s.nu0.im, s.linewidth_mf, s.j_st, s.power_mf
                )
            }
            Err(e) => {
                eprintln!("grid point (flux = {f}, doppler = {d}): {e}");
                format!("{f:.12e},{d:.12e},NaN,NaN,NaN,NaN,NaN,NaN")
            }
        })
        .collect();
    let text = format!(
        "flux_param,doppler_param,re_nu0,im_nu0,linewidth_mf,j_st,power_norm,pulling\n{}\n",
        rows.join("\n")
    );
    std::fs::write(out.join("phase_diagram.csv"), text)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(())
}

fn cmd_design(
    config_path: &Path,
    pulling: Option<f64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let input = cfg
        .design
        .ok_or_else(|| CliError::Usage("missing [design] section".into()))?;
    let mut report = design_report(&input, pulling).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(p) = pulling {
        let (k_eff, l_eff, alpha_eff) =
            effective_noise(p, input.accel_sensitivity, input.cavity_length, input.cte)
                .map_err(|e| CliError::Usage(e.to_string()))?;
        report.k_eff = k_eff;
        report.l_eff = l_eff;
        report.alpha_eff = alpha_eff;
    }
    let text = report.render_text();
    print!("{text}");
    std::io::stdout().flush().ok();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
        write_manifest(dir, "design", config_path, 0, 0, 1, "")?;
        std::fs::write(dir.join("design.txt"), &text)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let value = serde_json::to_value(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
        write_json(&dir.join("design.json"), &value)?;
    }
    Ok(())
}
