//! Command-line front end: encode Hamiltonians, evolve them with the exact,
//! variational or Trotter methods, synthesize stochastic trajectories, run
//! seeded ensembles and apply the hybrid error mitigation.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure.

mod config;

use clap::{Args, Parser, Subcommand};
use config::{BackendConfig, Model, ModelConfig, RunConfig};
use excidyn::analysis::{self, ensemble_average, EnsembleSpec, PopulationSeries};
use excidyn::exact::{evolve_exact_converged, ExactOptions};
use excidyn::hamiltonians::{synthesize_trajectory, HamiltonianSource, Interpolation};
use excidyn::mitigation::{apply_alpha, extract_alpha, write_mitigation_csv, MitigationResult};
use excidyn::sim::{sample_bitstrings, write_histogram_csv, Circuit, StateVector};
use excidyn::trotter::{run_trotter, TrotterConfig};
use excidyn::vqa::{make_default_ansatz, run_vqa, Ansatz, VqaBackend, VqaConfig};
use excidyn::Error as CoreError;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// CLI error carrying its exit code: 1 = configuration, 2 = numerical.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: u8,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 1,
        }
    }

    pub fn numerical(err: impl std::fmt::Display) -> Self {
        CliError {
            message: err.to_string(),
            code: 2,
        }
    }

    /// Core errors raised while reading user input are configuration errors.
    pub fn from_core_config(err: CoreError) -> Self {
        CliError::config(err.to_string())
    }

    /// Core errors raised mid-computation are numerical failures, except for
    /// input-shaped ones.
    pub fn from_core(err: CoreError) -> Self {
        match &err {
            CoreError::Io(_) | CoreError::Parse { .. } => CliError::config(err.to_string()),
            _ => CliError::numerical(err),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        CliError::from_core(err)
    }
}

#[derive(Parser)]
#[command(
    name = "excidyn",
    about = "Digital quantum dynamics for exciton energy transfer",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Pauli-encoded Hamiltonian and identity offset of a model.
    Encode(EncodeArgs),
    /// Evolve the configured model and write a population series CSV.
    Evolve(EvolveArgs),
    /// Extract the time-dilation factor from two series and write the
    /// corrected series.
    Mitigate(MitigateArgs),
    /// Run a seeded ensemble of stochastic trajectories and write the mean
    /// series.
    Ensemble(EvolveArgs),
    /// Synthesize an Ornstein-Uhlenbeck Hamiltonian trajectory CSV.
    SynthTraj(SynthArgs),
}

#[derive(Args)]
struct EncodeArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Optional output directory; writes hamiltonian.txt beside the printout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long)]
    config: PathBuf,
    /// exact | vqa | trotter
    #[arg(long)]
    method: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured shot count.
    #[arg(long)]
    shots: Option<u64>,
    /// Override the configured depolarizing strength.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct MitigateArgs {
    /// Raw VQA population series CSV.
    #[arg(long)]
    vqa: PathBuf,
    /// Trotter reference population series CSV.
    #[arg(long)]
    trotter: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Matching cutoff time in fs.
    #[arg(long, default_value_t = 20.0)]
    t_cutoff: f64,
    /// Search range lo,hi for alpha.
    #[arg(long, value_parser = parse_range, default_value = "0.5,3.0")]
    alpha_range: (f64, f64),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected lo,hi".into());
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| format!("bad lo: {e}"))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| format!("bad hi: {e}"))?;
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not errors
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Encode(args) => cmd_encode(&args),
        Command::Evolve(args) => cmd_evolve(&args, false),
        Command::Ensemble(args) => cmd_evolve(&args, true),
        Command::Mitigate(args) => cmd_mitigate(&args),
        Command::SynthTraj(args) => cmd_synth(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))
}

fn cmd_encode(args: &EncodeArgs) -> Result<(), CliError> {
    let config = RunConfig::load(&args.config)?;
    let model = config.model.build()?;
    let (h, offset) = model.source.at(0.0).map_err(CliError::from_core)?;
    let text = h.to_text();
    print!("{text}");
    println!("# offset_ev {offset}");
    println!("# qubits {}", h.qubit_count());
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        std::fs::write(dir.join("hamiltonian.txt"), &text)
            .map_err(|e| CliError::config(format!("write hamiltonian: {e}")))?;
        config.write_resolved(dir)?;
    }
    Ok(())
}

fn build_ansatz(model: &Model, config: &RunConfig, psi0_index: usize) -> Result<Ansatz, CliError> {
    let qubits = model.qubit_count();
    let prep = Circuit::basis_prep(qubits, psi0_index);
    let ansatz = match &config.ansatz {
        config::AnsatzConfig::Hamiltonian { layers } => {
            let (h, _) = model.source.at(0.0).map_err(CliError::from_core)?;
            Ansatz::hamiltonian_ansatz(prep, &h, *layers)
        }
        config::AnsatzConfig::Default { layers } => make_default_ansatz(prep, *layers),
    };
    ansatz.map_err(CliError::from_core)
}

fn vqa_backend(config: &RunConfig, seed: u64) -> VqaBackend {
    match &config.backend {
        BackendConfig::Analytic => VqaBackend::Analytic,
        BackendConfig::Sampled { shots } => VqaBackend::Sampled {
            shots: *shots,
            seed,
        },
        BackendConfig::Noisy { lambda, shots } => VqaBackend::Noisy {
            lambda: *lambda,
            shots: *shots,
            seed,
        },
    }
}

/// One evolution run, shared by `evolve` and the ensemble members.
fn run_method(
    method: &str,
    model: &Model,
    source: &HamiltonianSource,
    config: &RunConfig,
    seed: u64,
) -> Result<(PopulationSeries, Option<excidyn::vqa::VqaRun>), CliError> {
    let psi0_index = model.initial_index(config)?;
    let qubits = model.qubit_count();
    let psi0 = StateVector::basis(qubits, psi0_index);
    match method {
        "exact" => {
            let n_steps = (config.total_time_fs / config.dt_fs + 1e-9).floor() as usize;
            let grid: Vec<f64> = (0..=n_steps).map(|k| k as f64 * config.dt_fs).collect();
            let opts = ExactOptions {
                micro_dt_fs: config.micro_dt_fs,
                hbar: config.hbar,
            };
            let (states, _) = evolve_exact_converged(source, &psi0, &grid, &opts, 1e-8)
                .map_err(CliError::from_core)?;
            let series = match config.shots {
                None => analysis::series_from_states(grid, &states, &model.encoding)
                    .map_err(CliError::from_core)?,
                Some(shots) => {
                    let histograms: Vec<Vec<u64>> = states
                        .iter()
                        .enumerate()
                        .map(|(k, s)| {
                            sample_bitstrings(
                                &s.probabilities(),
                                shots,
                                excidyn::linalg::derive_seed(seed, &[k as u64]),
                            )
                        })
                        .collect();
                    analysis::series_from_histograms(grid, &histograms, qubits, &model.encoding)
                        .map_err(CliError::from_core)?
                }
            };
            Ok((series, None))
        }
        "vqa" => {
            let ansatz = build_ansatz(model, config, psi0_index)?;
            let vqa_config = VqaConfig {
                dt_fs: config.dt_fs,
                total_time_fs: config.total_time_fs,
                eps: config.eps,
                backend: vqa_backend(config, seed),
                alpha: config.alpha,
                hbar: config.hbar,
            };
            let run = run_vqa(source, &ansatz, &vqa_config).map_err(CliError::from_core)?;
            let series = analysis::series_from_states(run.times(), &run.states, &model.encoding)
                .map_err(CliError::from_core)?;
            Ok((series, Some(run)))
        }
        "trotter" => {
            let trotter_config = TrotterConfig {
                dt_fs: config.dt_fs,
                total_time_fs: config.total_time_fs,
                lambda: config.lambda,
                shots: config.shots,
                seed,
                hbar: config.hbar,
            };
            let series = run_trotter(source, &psi0, &trotter_config, &model.encoding)
                .map_err(CliError::from_core)?;
            Ok((series, None))
        }
        other => Err(CliError::config(format!(
            "unknown method '{other}' (use exact, vqa or trotter)"
        ))),
    }
}

fn apply_overrides(config: &mut RunConfig, args: &EvolveArgs) {
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(shots) = args.shots {
        config.shots = Some(shots);
        if let BackendConfig::Sampled { shots: s } | BackendConfig::Noisy { shots: s, .. } =
            &mut config.backend
        {
            *s = Some(shots);
        }
    }
    if let Some(lambda) = args.lambda {
        config.lambda = lambda;
        if let BackendConfig::Noisy { lambda: l, .. } = &mut config.backend {
            *l = lambda;
        }
    }
}

fn cmd_evolve(args: &EvolveArgs, ensemble: bool) -> Result<(), CliError> {
    let mut config = RunConfig::load(&args.config)?;
    apply_overrides(&mut config, args);
    ensure_dir(&args.out)?;
    let model = config.model.build()?;

    if ensemble {
        return run_ensemble(args, &config, &model);
    }

    let (series, vqa_run) = run_method(&args.method, &model, &model.source, &config, config.seed)?;
    series
        .write_csv(&args.out.join("populations.csv"))
        .map_err(CliError::from_core)?;
    if let Some(run) = vqa_run {
        run.write_theta_csv(&args.out.join("thetas.csv"))
            .map_err(CliError::from_core)?;
    }
    // final-state histogram when a shot count is configured for sampling
    if let (Some(shots), "exact" | "trotter") = (config.shots, args.method.as_str()) {
        let psi0 = StateVector::basis(model.qubit_count(), model.initial_index(&config)?);
        let grid = vec![0.0, config.total_time_fs.max(config.dt_fs)];
        let opts = ExactOptions {
            micro_dt_fs: config.micro_dt_fs,
            hbar: config.hbar,
        };
        if let Ok((states, _)) = evolve_exact_converged(&model.source, &psi0, &grid, &opts, 1e-8) {
            let counts = sample_bitstrings(
                &states[1].probabilities(),
                shots,
                excidyn::linalg::derive_seed(config.seed, &[0xf17a1]),
            );
            write_histogram_csv(
                &args.out.join("final_histogram.csv"),
                &counts,
                model.qubit_count(),
            )
            .map_err(CliError::from_core)?;
        }
    }
    config.write_resolved(&args.out)?;
    println!(
        "wrote {} ({} rows)",
        args.out.join("populations.csv").display(),
        series.times.len()
    );
    Ok(())
}

fn run_ensemble(args: &EvolveArgs, config: &RunConfig, model: &Model) -> Result<(), CliError> {
    let fluct = config.fluctuations.as_ref().ok_or_else(|| {
        CliError::config("ensemble runs need a `fluctuations` section in the config")
    })?;
    let count = config
        .ensemble
        .as_ref()
        .map(|e| e.count)
        .unwrap_or_else(|| EnsembleSpec::default().trajectory_count);
    let means = match &config.model {
        ModelConfig::FrenkelSnapshot { path } => config::read_snapshot(path)?,
        _ => {
            return Err(CliError::config(
                "ensemble synthesis needs a frenkel_snapshot model as the mean",
            ))
        }
    };
    let n = means.n_sites();
    let stddevs = excidyn::hamiltonians::FrenkelSnapshot::from_upper(
        vec![fluct.stddev_energy_ev; n],
        &vec![fluct.stddev_coupling_ev; n * (n - 1) / 2],
    )
    .map_err(CliError::from_core)?;
    let spec = EnsembleSpec {
        trajectory_count: count,
        base_seed: config.seed,
    };
    let members: Result<Vec<PopulationSeries>, CliError> = spec
        .member_seeds()
        .par_iter()
        .map(|&member_seed| {
            let traj = synthesize_trajectory(
                &means,
                &stddevs,
                fluct.correlation_fs,
                fluct.frame_dt_fs,
                // frames must cover the evolution plus one step of slack
                config.total_time_fs + fluct.frame_dt_fs,
                member_seed,
                Interpolation::Linear,
            )
            .map_err(CliError::from_core)?;
            let source = HamiltonianSource::from_trajectory(traj);
            let (series, _) = run_method(&args.method, model, &source, config, member_seed)?;
            Ok(series)
        })
        .collect();
    let members = members?;
    let mean = ensemble_average(&members).map_err(CliError::from_core)?;
    mean.write_csv(&args.out.join("populations.csv"))
        .map_err(CliError::from_core)?;
    config.write_resolved(&args.out)?;
    println!(
        "wrote ensemble mean over {count} members to {}",
        args.out.join("populations.csv").display()
    );
    Ok(())
}

fn cmd_mitigate(args: &MitigateArgs) -> Result<(), CliError> {
    let p_vqa = PopulationSeries::read_csv(&args.vqa).map_err(CliError::from_core_config)?;
    let p_trotter =
        PopulationSeries::read_csv(&args.trotter).map_err(CliError::from_core_config)?;
    ensure_dir(&args.out)?;
    let result = extract_alpha(&p_vqa, &p_trotter, args.t_cutoff, args.alpha_range)
        .map_err(CliError::numerical)?;
    let corrected = apply_alpha(&p_vqa, result.alpha).map_err(CliError::numerical)?;
    corrected
        .write_csv(&args.out.join("corrected.csv"))
        .map_err(CliError::from_core)?;
    let results = vec![MitigationResult {
        window_start_fs: Some(0.0),
        ..result
    }];
    write_mitigation_csv(&args.out.join("mitigation.csv"), &results)
        .map_err(CliError::from_core)?;
    let resolved = serde_json::json!({
        "vqa": args.vqa.display().to_string(),
        "trotter": args.trotter.display().to_string(),
        "t_cutoff_fs": args.t_cutoff,
        "alpha_range": args.alpha_range,
        "alpha": results[0].alpha,
    });
    std::fs::write(
        args.out.join("resolved_config.json"),
        serde_json::to_string_pretty(&resolved).expect("static json"),
    )
    .map_err(|e| CliError::config(format!("write resolved config: {e}")))?;
    println!(
        "alpha = {:.4} (objective {:.3e})",
        results[0].alpha, results[0].objective
    );
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let fluct = config.fluctuations.as_ref().ok_or_else(|| {
        CliError::config("synth-traj needs a `fluctuations` section in the config")
    })?;
    let means = match &config.model {
        ModelConfig::FrenkelSnapshot { path } => config::read_snapshot(path)?,
        _ => {
            return Err(CliError::config(
                "synth-traj needs a frenkel_snapshot model as the mean",
            ))
        }
    };
    let n = means.n_sites();
    let stddevs = excidyn::hamiltonians::FrenkelSnapshot::from_upper(
        vec![fluct.stddev_energy_ev; n],
        &vec![fluct.stddev_coupling_ev; n * (n - 1) / 2],
    )
    .map_err(CliError::from_core)?;
    ensure_dir(&args.out)?;
    let traj = synthesize_trajectory(
        &means,
        &stddevs,
        fluct.correlation_fs,
        fluct.frame_dt_fs,
        config.total_time_fs,
        config.seed,
        Interpolation::Linear,
    )
    .map_err(CliError::numerical)?;
    traj.write_csv(&args.out.join("trajectory.csv"))
        .map_err(CliError::from_core)?;
    config.write_resolved(&args.out)?;
    println!(
        "wrote {} frames to {}",
        traj.times().len(),
        args.out.join("trajectory.csv").display()
    );
    Ok(())
}
