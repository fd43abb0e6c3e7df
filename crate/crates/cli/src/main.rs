//! Command-line front end: urn sampling, population chains, diffusion paths,
//! density curves, convergence experiments, and a self-test battery. Every
//! run is reproducible from its seed and emits CSV artifacts with JSON
//! sidecars describing the resolved configuration.

mod config;
mod error;
mod output;
mod selftest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use ggpop::convergence::{
    ctmc_limit_experiment, gamma_limit_experiment, scaling_experiment, stationarity_experiment,
    CtmcLimitConfig, DistanceTable, GammaLimitConfig, Metric, ScalingConfig, StationarityConfig,
    StationarityInitial,
};
use ggpop::diffusion::{
    invariant_density, ln_scale_speed, simulate_path, verify_invariant_normalisation,
    BoundaryPolicy, DiffusionSpec,
};
use ggpop::moran::{ctmc_step, moran_step, KChainSampler, KChainState, PopulationState};
use ggpop::partition::{
    alpha_diversity_sample, k_pmf_row, urn_sample_with, UrnMode, WeightSource,
};
use ggpop::rng::{role, stream};
use ggpop::special::EXACT_N_LIMIT;
use ggpop::weights::{ExactWeightTable, GGParams};

use config::{FileConfig, IntList, NumList};
use error::CliError;
use output::{fmt_f64, OutputDir};

#[derive(Parser)]
#[command(
    name = "ggpop",
    about = "Generalised gamma population model: urn sampling, cluster-count chains, diffusions",
    version
)]
struct Cli {
    /// Flat `key = value` configuration file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed for all generator streams.
    #[arg(long, global = true, env = "GGPOP_SEED")]
    seed: Option<u64>,

    /// Output directory; no artifact is written outside it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for replicate parallelism (0 = all cores). Results do
    /// not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Approx,
}

#[derive(Clone, Copy, ValueEnum)]
enum KModeArg {
    M1Reduced,
    Approx,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    FullTruncation,
    ReflectAtEps,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Scaling,
    GammaLimit,
    CtmcLimit,
    Stationarity,
}

#[derive(Args)]
struct CommonParams {
    /// Stability index in (0,1).
    #[arg(long)]
    alpha: Option<f64>,
    /// Tilting mass, positive.
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample partitions from the predictive urn; emit the block-count
    /// histogram with the exact pmf overlay where available.
    Urn {
        #[command(flatten)]
        params: CommonParams,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Run Moran particle chains; emit (replicate, step, k) paths.
    Moran {
        #[command(flatten)]
        params: CommonParams,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        paths: Option<usize>,
        /// Record every this many steps.
        #[arg(long)]
        thin: Option<u64>,
    },
    /// Run reduced cluster-count chains; optionally emit the rescaled view.
    Kchain {
        #[command(flatten)]
        params: CommonParams,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<KModeArg>,
        #[arg(long)]
        thin: Option<u64>,
        /// Rescaled sample times (chain step floor(n^{1+alpha} t), value k/n^alpha).
        #[arg(long)]
        rescale_times: Option<NumList>,
    },
    /// Run the continuous-time count chain; emit (replicate, time, k) jumps.
    Ctmc {
        #[command(flatten)]
        params: CommonParams,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Horizon in rescaled time.
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Integrate diffusion paths; one CSV per (alpha, gamma) combination.
    Sde {
        #[arg(long)]
        alpha: Option<NumList>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        gamma: Option<NumList>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        paths: Option<usize>,
        /// Fixed start value; omit to draw starts from the diversity law.
        #[arg(long)]
        s0: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, value_enum)]
        boundary: Option<BoundaryArg>,
        #[arg(long)]
        thin: Option<usize>,
    },
    /// Tabulate stationary densities and the unnormalised speed measure.
    Density {
        #[command(flatten)]
        params: CommonParams,
        #[arg(long)]
        gamma: Option<NumList>,
        /// Also emit the gamma = 0 unnormalised speed measure curve.
        #[arg(long)]
        include_speed_measure: bool,
        /// Emit normalised stationary densities instead of bare speed
        /// densities (runs the normalisation self-check first).
        #[arg(long)]
        normalised: bool,
        #[arg(long)]
        x_min: Option<f64>,
        #[arg(long)]
        x_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Run a named convergence experiment and write its distance table.
    Verify {
        #[command(flatten)]
        params: CommonParams,
        #[arg(long, value_enum)]
        experiment: ExperimentArg,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        n_list: Option<IntList>,
        #[arg(long)]
        gamma_list: Option<NumList>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        times: Option<NumList>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Run the built-in property battery; one PASS/FAIL line per check.
    Selftest {
        /// Smaller grids, faster run.
        #[arg(long)]
        quick: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if workers > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
        }
    }
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            let payload = json!({ "error": e.kind_str(), "message": e.message });
            eprintln!("{payload}");
            std::process::exit(e.exit_code());
        }
    }
}

const DEFAULT_SEED: u64 = 20_260_808;

fn run(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let seed = file.resolve(cli.seed, "seed", DEFAULT_SEED)?;
    let out_dir = file.resolve(cli.out.clone(), "out", PathBuf::from("ggpop-out"))?;
    let argv: Vec<String> = std::env::args().collect();
    let repro = if argv.iter().any(|a| a == "--seed" || a.starts_with("--seed=")) {
        argv.join(" ")
    } else {
        format!("{} --seed {seed}", argv.join(" "))
    };
    let out = OutputDir::new(&out_dir, repro)?;

    match cli.cmd {
        Cmd::Urn { params, n, replicates, mode } => {
            let gg = resolve_params(&file, &params)?;
            let n = file.resolve(n, "n", 100usize)?;
            let replicates = file.resolve(replicates, "replicates", 10_000usize)?;
            let mode = match file.resolve(
                mode.map(|m| matches!(m, ModeArg::Exact)),
                "mode_exact",
                true,
            )? {
                true => UrnMode::Exact,
                false => UrnMode::Approx,
            };
            run_urn(&out, seed, gg, n, replicates, mode, &file)
        }
        Cmd::Moran { params, n, steps, paths, thin } => {
            let gg = resolve_params(&file, &params)?;
            let n = file.resolve(n, "n", 50usize)?;
            let steps = file.resolve(steps, "steps", 1_000u64)?;
            let paths = file.resolve(paths, "paths", 4usize)?;
            let thin = file.resolve(thin, "thin", 1u64)?.max(1);
            run_moran(&out, seed, gg, n, steps, paths, thin, &file)
        }
        Cmd::Kchain { params, n, steps, paths, mode, thin, rescale_times } => {
            let gg = resolve_params(&file, &params)?;
            let n = file.resolve(n, "n", 100usize)?;
            let steps = file.resolve(steps, "steps", 10_000u64)?;
            let paths = file.resolve(paths, "paths", 4usize)?;
            let thin = file.resolve(thin, "thin", 1u64)?.max(1);
            let m1 = matches!(
                mode.unwrap_or(KModeArg::Approx),
                KModeArg::M1Reduced
            );
            run_kchain(&out, seed, gg, n, steps, paths, m1, thin, rescale_times, &file)
        }
        Cmd::Ctmc { params, n, gamma, t_end, paths } => {
            let gg = resolve_params(&file, &params)?;
            let n = file.resolve(n, "n", 100usize)?;
            let gamma = file.resolve(gamma, "gamma", 0.5f64)?;
            let t_end = file.resolve(t_end, "t_end", 1.0f64)?;
            let paths = file.resolve(paths, "paths", 4usize)?;
            run_ctmc(&out, seed, gg, n, gamma, t_end, paths, &file)
        }
        Cmd::Sde { alpha, beta, gamma, dt, t_end, paths, s0, eps, boundary, thin } => {
            let alphas = file
                .resolve_opt(alpha, "alpha")?
                .unwrap_or(NumList(vec![0.5]))
                .0;
            let beta = file.resolve(beta, "beta", 1.0f64)?;
            let gammas = file
                .resolve_opt(gamma, "gamma")?
                .unwrap_or(NumList(vec![0.0]))
                .0;
            let dt = file.resolve(dt, "dt", DiffusionSpec::DEFAULT_DT)?;
            let t_end = file.resolve(t_end, "t_end", 10.0f64)?;
            let paths = file.resolve(paths, "paths", 3usize)?;
            let s0 = file.resolve_opt(s0, "s0")?;
            let eps = file.resolve(eps, "eps", DiffusionSpec::DEFAULT_EPS)?;
            let reflect = matches!(
                boundary.unwrap_or(BoundaryArg::FullTruncation),
                BoundaryArg::ReflectAtEps
            );
            let thin = file.resolve(thin, "thin", 10usize)?.max(1);
            run_sde(&out, seed, alphas, beta, gammas, dt, t_end, paths, s0, eps, reflect, thin, &file)
        }
        Cmd::Density {
            params,
            gamma,
            include_speed_measure,
            normalised,
            x_min,
            x_max,
            points,
        } => {
            let gg = resolve_params(&file, &params)?;
            let gammas = file
                .resolve_opt(gamma, "gamma")?
                .unwrap_or(NumList(vec![0.1, 0.05, 0.025]))
                .0;
            let x_min = file.resolve(x_min, "x_min", 0.05f64)?;
            let x_max = file.resolve(x_max, "x_max", 8.0f64)?;
            let points = file.resolve(points, "points", 400usize)?;
            run_density(
                &out,
                seed,
                gg,
                gammas,
                include_speed_measure,
                normalised,
                x_min,
                x_max,
                points,
                &file,
            )
        }
        Cmd::Verify {
            params,
            experiment,
            replicates,
            n_list,
            gamma_list,
            gamma,
            times,
            n,
            steps,
        } => {
            let gg = resolve_params(&file, &params)?;
            run_verify(
                &out, seed, gg, experiment, replicates, n_list, gamma_list, gamma, times, n,
                steps, &file,
            )
        }
        Cmd::Selftest { quick } => selftest::run(quick).map_err(CliError::numeric),
    }
}

fn resolve_params(file: &FileConfig, p: &CommonParams) -> Result<GGParams, CliError> {
    let alpha = file.resolve(p.alpha, "alpha", 0.5f64)?;
    let beta = file.resolve(p.beta, "beta", 1.0f64)?;
    Ok(GGParams::new(alpha, beta)?)
}

fn sidecar_base(out: &OutputDir, seed: u64, file: &FileConfig) -> serde_json::Value {
    json!({
        "tool": "ggpop",
        "version": env!("CARGO_PKG_VERSION"),
        "repro": out.repro(),
        "seed": seed,
        "config_file": file.entries(),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_urn(
    out: &OutputDir,
    seed: u64,
    params: GGParams,
    n: usize,
    replicates: usize,
    mode: UrnMode,
    file: &FileConfig,
) -> Result<(), CliError> {
    if n == 0 || replicates == 0 {
        return Err(CliError::validation("n and replicates must be positive"));
    }
    let cap = n.saturating_sub(1).min(EXACT_N_LIMIT);
    let table = match mode {
        UrnMode::Exact => Some(ExactWeightTable::build(&params, cap)?),
        UrnMode::Approx if n.saturating_sub(1) > EXACT_N_LIMIT => {
            Some(ExactWeightTable::build(&params, cap)?)
        }
        UrnMode::Approx => None,
    };
    let counts: Vec<usize> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, &[role::CHAIN, r]);
            let src = match (&table, n.saturating_sub(1) > cap) {
                (Some(t), true) => WeightSource::Hybrid(t, params),
                (Some(t), false) => WeightSource::Exact(t),
                (None, _) => WeightSource::Approx(params),
            };
            urn_sample_with(n, params.alpha(), &src, &mut rng).k()
        })
        .collect();
    let mut hist = vec![0u64; n + 1];
    for k in counts {
        hist[k] += 1;
    }
    let pmf = if n <= EXACT_N_LIMIT {
        Some(k_pmf_row(n, &params)?)
    } else {
        None
    };
    let rows = (1..=n).map(|k| {
        let freq = hist[k] as f64 / replicates as f64;
        let pmf_cell = pmf
            .as_ref()
            .map(|row| fmt_f64(row[k - 1]))
            .unwrap_or_default();
        format!("{k},{},{},{}", hist[k], fmt_f64(freq), pmf_cell)
    });
    let csv = out.write_csv("urn_k_histogram.csv", "k,count,frequency,pmf", rows)?;
    let mut sidecar = sidecar_base(out, seed, file);
    sidecar["command"] = json!("urn");
    sidecar["params"] = json!({
        "alpha": params.alpha(), "beta": params.beta(), "n": n,
        "replicates": replicates, "mode": format!("{mode:?}"),
    });
    sidecar["outputs"] = json!([csv]);
    out.write_sidecar("urn_k_histogram.json", &sidecar)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_moran(
    out: &OutputDir,
    seed: u64,
    params: GGParams,
    n: usize,
    steps: u64,
    paths: usize,
    thin: u64,
    file: &FileConfig,
) -> Result<(), CliError> {
    if n == 0 || n > EXACT_N_LIMIT + 1 {
        return Err(CliError::validation(format!(
            "particle chain uses exact weights; need 1 <= n <= {}",
            EXACT_N_LIMIT + 1
        )));
    }
    let table = ExactWeightTable::build(&params, n - 1)?;
    let rows: Vec<Vec<String>> = (0..paths as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, &[role::CHAIN, r]);
            let src = WeightSource::Exact(&table);
            let mut state = PopulationState::sample(n, params.alpha(), &src, &mut rng);
            let mut lines = vec![format!("{r},0,{}", state.k())];
            for step in 1..=steps {
                moran_step(&mut state, params.alpha(), &src, &mut rng);
                if step % thin == 0 {
                    lines.push(format!("{r},{step},{}", state.k()));
                }
            }
            lines
        })
        .collect();
    let csv = out.write_csv("moran_paths.csv", "replicate,step,k", rows.into_iter().flatten())?;
    let mut sidecar = sidecar_base(out, seed, file);
    sidecar["command"] = json!("moran");
    sidecar["params"] = json!({
        "alpha": params.alpha(), "beta": params.beta(), "n": n,
        "steps": steps, "paths": paths, "thin": thin,
    });
    sidecar["outputs"] = json!([csv]);
    out.write_sidecar("moran_paths.json", &sidecar)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_kchain(
    out: &OutputDir,
    seed: u64,
    params: GGParams,
    n: usize,
    steps: u64,
    paths: usize,
    m1_reduced: bool,
    thin: u64,
    rescale_times: Option<NumList>,
    file: &FileConfig,
) -> Result<(), CliError> {
    let sampler = if m1_reduced {
        KChainSampler::new_m1_reduced(n, &params)?
    } else {
        KChainSampler::new_approx(n, &params)?
    };
    let alpha = params.alpha();
    let k0 = ((n as f64).powf(alpha).round() as usize).clamp(1, n);
    let results: Vec<(Vec<String>, Vec<u32>)> = (0..paths as u64)
        .into_par_iter()
        .map(|r| -> Result<(Vec<String>, Vec<u32>), CliError> {
            let mut rng = stream(seed, &[role::CHAIN, r]);
            let mut state = KChainState::new(n, k0)?;
            let mut lines = vec![format!("{r},0,{k0}")];
            let mut raw = vec![state.k as u32];
            for step in 1..=steps {
                sampler.step(&mut state, &mut rng)?;
                raw.push(state.k as u32);
                if step % thin == 0 {
                    lines.push(format!("{r},{step},{}", state.k));
                }
            }
            Ok((lines, raw))
        })
        .collect::<Result<_, _>>()?;

    let csv = out.write_csv(
        "kchain_paths.csv",
        "replicate,step,k",
        results.iter().flat_map(|(lines, _)| lines.iter().cloned()),
    )?;
    let mut outputs = vec![csv];
    if let Some(NumList(times)) = &rescale_times {
        let mut lines = Vec::new();
        for (r, (_, raw)) in results.iter().enumerate() {
            let path = ggpop::moran::rescale_path(raw, n, alpha, times)?;
            for (t, v) in path.times.iter().zip(&path.values) {
                lines.push(format!("{r},{},{}", fmt_f64(*t), fmt_f64(*v)));
            }
        }
        outputs.push(out.write_csv("kchain_rescaled.csv", "replicate,t,value", lines)?);
    }
    let mut sidecar = sidecar_base(out, seed, file);
    sidecar["command"] = json!("kchain");
    sidecar["params"] = json!({
        "alpha": params.alpha(), "beta": params.beta(), "n": n, "steps": steps,
        "paths": paths, "mode": if m1_reduced { "m1-reduced" } else { "approx" },
        "thin": thin, "k0": k0,
        "rescale_times": rescale_times.as_ref().map(|l| l.0.clone()),
    });
    sidecar["outputs"] = json!(outputs);
    out.write_sidecar("kchain_paths.json", &sidecar)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_ctmc(
    out: &OutputDir,
    seed: u64,
    params: GGParams,
    n: usize,
    gamma: f64,
    t_end: f64,
    paths: usize,
    file: &FileConfig,
) -> Result<(), CliError> {
    if gamma <= 0.0 {
        return Err(CliError::validation("the continuous-time chain needs gamma > 0"));
    }
    if t_end <= 0.0 {
        return Err(CliError::validation("t_end must be positive"));
    }
    let alpha = params.alpha();
    let time_scale = (n as f64).powf(1.0 + alpha);
    let k0 = ((n as f64).powf(alpha).round() as usize).max(1);
    let rows: Vec<Vec<String>> = (0..paths as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<String>, CliError> {
            let mut rng = stream(seed, &[role::CHAIN, r]);
            let mut state = KChainState { n, k: k0, step: 0 };
            let mut clock = 0.0;
            let mut lines = vec![format!("{r},0.0,{k0}")];
            while clock < t_end * time_scale {
                let holding = ctmc_step(&mut state, &params, gamma, &mut rng)?;
                clock += holding;
                if clock >= t_end * time_scale {
                    break;
                }
                lines.push(format!("{r},{},{}", fmt_f64(clock / time_scale), state.k));
            }
            Ok(lines)
        })
        .collect::<Result<_, _>>()?;
    let csv = out.write_csv(
        "ctmc_paths.csv",
        "replicate,t,k",
        rows.into_iter().flatten(),
    )?;
    let mut sidecar = sidecar_base(out, seed, file);
    sidecar["command"] = json!("ctmc");
    sidecar["params"] = json!({
        "alpha": params.alpha(), "beta": params.beta(), "n": n, "gamma": gamma,
        "t_end": t_end, "paths": paths, "k0": k0,
        "time_column": "rescaled (raw clock / n^{1+alpha})",
    });
    sidecar["outputs"] = json!([csv]);
    out.write_sidecar("ctmc_paths.json", &sidecar)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_sde(
    out: &OutputDir,
    seed: u64,
    alphas: Vec<f64>,
    beta: f64,
    gammas: Vec<f64>,
    dt: f64,
    t_end: f64,
    paths: usize,
    s0: Option<f64>,
    eps: f64,
    reflect: bool,
    thin: usize,
    file: &FileConfig,
) -> Result<(), CliError> {
    let mut outputs = Vec::new();
    for &alpha in &alphas {
        for &gamma in &gammas {
            let params = GGParams::new(alpha, beta)?;
            let name = format!("sde_alpha{alpha:.3}_gamma{gamma:.3}.csv");
            let rows: Vec<Vec<String>> = (0..paths as u64)
                .into_par_iter()
                .map(|r| -> Result<Vec<String>, CliError> {
                    let start = match s0 {
                        Some(v) => v,
                        None => {
                            let mut rng = stream(seed, &[role::INITIAL, r]);
                            alpha_diversity_sample(&params, &mut rng)
                        }
                    };
                    let mut spec = DiffusionSpec::new(params, gamma, dt, t_end, start)?;
                    spec.eps = eps;
                    spec.substep_threshold = 10.0 * eps;
                    spec.boundary = if reflect {
                        BoundaryPolicy::ReflectAtEps
                    } else {
                        BoundaryPolicy::FullTruncation
                    };
                    spec.seed = seed;
                    let mut rng = stream(seed, &[role::DIFFUSION, r]);
                    let path = simulate_path(&spec, &mut rng)?;
                    Ok(path
                        .times
                        .iter()
                        .zip(&path.states)
                        .enumerate()
                        .filter(|(i, _)| i % thin == 0)
                        .map(|(_, (t, s))| format!("{r},{},{}", fmt_f64(*t), fmt_f64(*s)))
                        .collect())
                })
                .collect::<Result<_, _>>()?;
            outputs.push(out.write_csv(&name, "replicate,t,s", rows.into_iter().flatten())?);
        }
    }
    let mut sidecar = sidecar_base(out, seed, file);
    sidecar["command"] = json!("sde");
    sidecar["params"] = json!({
        "alpha": alphas, "beta": beta, "gamma": gammas, "dt": dt, "t_end": t_end,
        "paths": paths, "s0": s0, "eps": eps,
        "boundary": if reflect { "reflect-at-eps" } else { "full-truncation" },
        "thin": thin,
    });
    sidecar["outputs"] = json!(outputs);
    out.write_sidecar("sde_paths.json", &sidecar)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_density(
    out: &OutputDir,
    seed: u64,
    params: GGParams,
    gammas: Vec<f64>,
    include_speed_measure: bool,
    normalised: bool,
    x_min: f64,
    x_max: f64,
    points: usize,
    file: &FileConfig,
) -> Result<(), CliError> {
    if !(x_min > 0.0 && x_max > x_min) || points < 2 {
        return Err(CliError::validation("need 0 < x_min < x_max and points >= 2"));
    }
    let grid: Vec<f64> = (0..points)
        .map(|i| x_min * (x_max / x_min).powf(i as f64 / (points - 1) as f64))
        .collect();
    let mut outputs = Vec::new();
    for &gamma in &gammas {
        if gamma <= 0.0 {
            return Err(CliError::validation(
                "stationary density curves need gamma > 0; the gamma = 0 speed measure \
                 is emitted via --include-speed-measure",
            ));
        }
        if normalised {
            // guard against transcription drift in the closed-form constant
            verify_invariant_normalisation(&params, gamma, 1e-6)?;
        }
        let name = format!("density_gamma{gamma:.4}.csv");
        let rows = grid.iter().map(|&x| {
            let v = if normalised {
                invariant_density(x, &params, gamma)
            } else {
                ln_scale_speed(x, &params, gamma).map(|(_, ln_m)| ln_m.exp())
            };
            v.map(|v| format!("{},{}", fmt_f64(x), fmt_f64(v)))
        });
        let rows = rows.collect::<Result<Vec<_>, _>>()?;
        outputs.push(out.write_csv(&name, "x,value", rows)?);
    }
    if include_speed_measure {
        let rows = grid
            .iter()
            .map(|&x| {
                ln_scale_speed(x, &params, 0.0)
                    .map(|(_, ln_m)| format!("{},{}", fmt_f64(x), fmt_f64(ln_m.exp())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        outputs.push(out.write_csv("speed_measure.csv", "x,value", rows)?);
    }
    let mut sidecar = sidecar_base(out, seed, file);
    sidecar["command"] = json!("density");
    sidecar["params"] = json!({
        "alpha": params.alpha(), "beta": params.beta(), "gamma": gammas,
        "normalised": normalised, "include_speed_measure": include_speed_measure,
        "x_min": x_min, "x_max": x_max, "points": points,
    });
    sidecar["outputs"] = json!(outputs);
    out.write_sidecar("density.json", &sidecar)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_verify(
    out: &OutputDir,
    seed: u64,
    params: GGParams,
    experiment: ExperimentArg,
    replicates: Option<usize>,
    n_list: Option<IntList>,
    gamma_list: Option<NumList>,
    gamma: Option<f64>,
    times: Option<NumList>,
    n: Option<usize>,
    steps: Option<u64>,
    file: &FileConfig,
) -> Result<(), CliError> {
    let times = file
        .resolve_opt(times, "times")?
        .unwrap_or(NumList(vec![0.5, 1.0]))
        .0;
    match experiment {
        ExperimentArg::Scaling => {
            let cfg = ScalingConfig {
                n_list: file.resolve_opt(n_list, "n_list")?.unwrap_or(IntList(vec![50, 200, 800])).0,
                times,
                params,
                replicates: file.resolve(replicates, "replicates", 2_000usize)?,
                metric: Metric::W1,
                ref_dt: 1e-4,
                seed,
            };
            let table = scaling_experiment(&cfg)?;
            emit_table(out, seed, "scaling", &table, file)
        }
        ExperimentArg::GammaLimit => {
            let cfg = GammaLimitConfig {
                gamma_list: file
                    .resolve_opt(gamma_list, "gamma_list")?
                    .unwrap_or(NumList(vec![1.0, 0.3, 0.1]))
                    .0,
                times,
                params,
                replicates: file.resolve(replicates, "replicates", 2_000usize)?,
                metric: Metric::W1,
                dt: 1e-3,
                seed,
            };
            let table = gamma_limit_experiment(&cfg)?;
            emit_table(out, seed, "gamma-limit", &table, file)
        }
        ExperimentArg::CtmcLimit => {
            let cfg = CtmcLimitConfig {
                n_list: file.resolve_opt(n_list, "n_list")?.unwrap_or(IntList(vec![100, 400])).0,
                gamma: file.resolve(gamma, "gamma", 0.5f64)?,
                times,
                params,
                replicates: file.resolve(replicates, "replicates", 2_000usize)?,
                metric: Metric::W1,
                ref_dt: 1e-3,
                seed,
            };
            let table = ctmc_limit_experiment(&cfg)?;
            emit_table(out, seed, "ctmc-limit", &table, file)
        }
        ExperimentArg::Stationarity => {
            let n = file.resolve(n, "n", 30usize)?;
            let steps = file.resolve(steps, "steps", 10 * n as u64)?;
            let cfg = StationarityConfig {
                n,
                steps,
                checkpoints: vec![steps / 4, steps / 2, steps],
                params,
                replicates: file.resolve(replicates, "replicates", 20_000usize)?,
                initial: StationarityInitial::Stationary,
                seed,
            };
            let report = stationarity_experiment(&cfg)?;
            let rows = report
                .checkpoints
                .iter()
                .zip(&report.tv)
                .map(|(c, tv)| format!("{c},{}", fmt_f64(*tv)));
            let csv = out.write_csv("stationarity.csv", "step,tv", rows)?;
            let mut sidecar = sidecar_base(out, seed, file);
            sidecar["command"] = json!("verify stationarity");
            sidecar["report"] = serde_json::to_value(&report)
                .map_err(|e| CliError::io(e.to_string()))?;
            sidecar["outputs"] = json!([csv]);
            out.write_sidecar("stationarity.json", &sidecar)?;
            let pass = report.tv.iter().all(|&tv| tv < 2.0 * report.noise_floor.max(1e-3));
            println!(
                "stationarity: max TV {:.5} vs floor {:.5} -> {}",
                report.tv.iter().cloned().fold(0.0, f64::max),
                report.noise_floor,
                if pass { "PASS" } else { "FAIL" }
            );
            if pass {
                Ok(())
            } else {
                Err(CliError::numeric("stationarity drift exceeds the noise floor"))
            }
        }
    }
}

fn emit_table(
    out: &OutputDir,
    seed: u64,
    name: &str,
    table: &DistanceTable,
    file: &FileConfig,
) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for (i, axis) in table.axis.iter().enumerate() {
        for (j, t) in table.times.iter().enumerate() {
            rows.push(format!(
                "{},{},{},{}",
                fmt_f64(*axis),
                fmt_f64(*t),
                fmt_f64(table.distances[i][j]),
                fmt_f64(table.noise_floors[j])
            ));
        }
    }
    let header = format!("{},t,distance,noise_floor", table.axis_label);
    let csv = out.write_csv(&format!("{name}_distances.csv"), &header, rows)?;
    let mut sidecar = sidecar_base(out, seed, file);
    sidecar["command"] = json!(format!("verify {name}"));
    sidecar["table"] = serde_json::to_value(table).map_err(|e| CliError::io(e.to_string()))?;
    sidecar["outputs"] = json!([csv]);
    out.write_sidecar(&format!("{name}_distances.json"), &sidecar)?;
    let pass = table.trend_holds();
    println!("{name}: trend (last axis within one floor of first) -> {}", if pass { "PASS" } else { "FAIL" });
    if pass {
        Ok(())
    } else {
        Err(CliError::numeric(format!("{name} distances did not shrink along the axis")))
    }
}
