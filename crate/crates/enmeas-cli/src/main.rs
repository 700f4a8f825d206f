use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use enmeas::bessel::{phi, power_state};
use enmeas::charact::{
    membership_energy, membership_finite, membership_multilevel, universal_state_check, CharactOptions,
};
use enmeas::distances::{classical_distance, quantum_distance_with};
use enmeas::linalg::{HermitianMatrix, C64};
use enmeas::povm::{batteryless_decomposition, degrade, effective_povm, validate, PhysicalPovm, Povm};
use enmeas::sdp::{self, SdpOptions};
use enmeas::spectrum::{decompose_chains, default_grouping_tol, ChainDecomposition};
use enmeas::tau::{
    epsilon_from_tau, tau_coherent, tau_continuous, tau_finite, tau_near_resonant, tau_of_state, BatteryState, EnergyDensity,
};
use enmeas::{bell, Exec};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

mod output;
mod reproduce;

/// Solver tolerance override read when `--tol` is absent.
const TOL_ENV: &str = "ENMEAS_SDP_TOL";

#[derive(Parser)]
#[command(name = "enmeas", version, about = "Energy-constrained quantum measurement numerics")]
#[command(after_help = "CSV output flattens each record into one row. Columns:\n  \
    tau sweeps: parameter, tau, epsilon\n  \
    phi-sweep: z, phi, lambda_star, mu_star\n  \
    reproduce: check, expected, computed, tolerance, pass\n\
    Nested fields (matrices, certificates) are only available as JSON.")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// SDP feasibility and gap tolerance.
    #[arg(long, global = true, env = TOL_ENV)]
    tol: Option<f64>,
    /// Dump every SDP problem and solution as JSON into this directory.
    #[arg(long, global = true)]
    dump_sdp: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Battery quality τ.
    #[command(subcommand)]
    Tau(TauCmd),
    /// Maximal τ at mean energy z·Δ.
    Phi {
        #[arg(long)]
        z: f64,
    },
    /// φ over a linear grid of z.
    PhiSweep {
        #[arg(long)]
        zmin: f64,
        #[arg(long)]
        zmax: f64,
        #[arg(long)]
        steps: usize,
    },
    /// Optimal bounded-energy battery state.
    PowerState {
        #[arg(long)]
        ebar: f64,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, default_value_t = 1e-14)]
        tail_tol: f64,
        /// Where to write the state JSON.
        #[arg(long)]
        state_out: Option<PathBuf>,
    },
    /// POVM utilities.
    #[command(subcommand)]
    Povm(PovmCmd),
    /// Distances between two POVMs.
    Distance {
        #[arg(value_enum)]
        kind: DistanceKind,
        #[arg(long)]
        m0: PathBuf,
        #[arg(long)]
        m1: PathBuf,
    },
    /// Membership in the reachable measurement sets.
    #[command(subcommand)]
    Charact(CharactCmd),
    /// CHSH with dephased photon pairs.
    #[command(subcommand)]
    Bell(BellCmd),
    /// Chain decomposition of a battery spectrum from {"delta": x, "levels": [...]}.
    Spectrum {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        grouping_tol: Option<f64>,
    },
    /// Recompute the reference values and report pass/fail per check.
    Reproduce {
        /// Run every check (the only mode).
        #[arg(long)]
        all: bool,
    },
}

#[derive(Subcommand)]
enum TauCmd {
    /// cos(π/(d+1)); `--to` sweeps d..=to.
    Finite {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        to: Option<usize>,
    },
    /// Coherent state with mean photon number |α|².
    Coherent {
        #[arg(long)]
        alpha_sq: f64,
    },
    /// τ of a battery state read from JSON.
    State {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        grouping_tol: Option<f64>,
    },
    /// Gaussian energy density of standard deviation σ.
    Gaussian {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Qubit battery detuned by ε, read out with a Gaussian clock.
    Resonance {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        c0: f64,
        #[arg(long)]
        c1: f64,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, default_value_t = 0.01)]
        clock_sigma: f64,
    },
}

#[derive(Subcommand)]
enum PovmCmd {
    Validate {
        #[arg(long)]
        povm: PathBuf,
    },
    /// Effective POVM from a physical POVM and a battery state.
    Effective {
        #[arg(long)]
        physical: PathBuf,
        #[arg(long)]
        battery: PathBuf,
    },
    Degrade {
        #[arg(long)]
        povm: PathBuf,
        #[arg(long)]
        tau: f64,
    },
    /// Battery-less simulation table for an energy-diagonal POVM.
    Decompose {
        #[arg(long)]
        povm: PathBuf,
        #[arg(long, value_delimiter = ',')]
        levels: Vec<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DistanceKind {
    Classical,
    Quantum,
}

#[derive(Subcommand)]
enum CharactCmd {
    Finite {
        #[arg(long)]
        povm: PathBuf,
        #[arg(long)]
        d: usize,
    },
    Energy {
        #[arg(long)]
        povm: PathBuf,
        #[arg(long)]
        ebar: f64,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long)]
        d: usize,
    },
    Multilevel {
        #[arg(long)]
        povm: PathBuf,
        /// Target levels: a JSON array or {"levels": [...]}.
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        battery: PathBuf,
    },
    Universal {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum BellCmd {
    /// CHSH value of the dephased state, the mixture bound and the local bound.
    Chsh,
    /// See-saw optimum over dichotomic observables for a density matrix.
    Seesaw {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [4usize, 4])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Errors that should exit with the usage status.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Levels {
    Plain(Vec<f64>),
    Wrapped { levels: Vec<f64> },
}

fn read_levels(path: &Path) -> Result<Vec<f64>> {
    Ok(match read_json::<Levels>(path)? {
        Levels::Plain(l) | Levels::Wrapped { levels: l } => l,
    })
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(usage(format!("--{name} must be positive, got {x}")))
    }
}

fn chains_for(levels: &[f64], delta: f64, grouping_tol: Option<f64>) -> Result<ChainDecomposition> {
    let tol = grouping_tol.unwrap_or_else(|| default_grouping_tol(levels, delta));
    let chains = decompose_chains(levels, delta, tol)?;
    for nm in &chains.near_misses {
        eprintln!(
            "warning: levels {} and {} are {:.3e} apart from a Δ step, within 10x the grouping tolerance",
            nm.lower, nm.upper, nm.gap
        );
    }
    Ok(chains)
}

fn tau_row(parameter: f64, tau: f64) -> Value {
    json!({ "parameter": parameter, "tau": tau, "epsilon": epsilon_from_tau(tau) })
}

fn run_tau(cmd: TauCmd) -> Result<Value> {
    Ok(match cmd {
        TauCmd::Finite { d, to } => {
            if d == 0 {
                return Err(usage("--d must be at least 1"));
            }
            match to {
                Some(to) if to < d => return Err(usage("--to must not be below --d")),
                Some(to) => Value::Array((d..=to).map(|k| tau_row(k as f64, tau_finite(k))).collect()),
                None => tau_row(d as f64, tau_finite(d)),
            }
        }
        TauCmd::Coherent { alpha_sq } => {
            if !(alpha_sq >= 0.0) {
                return Err(usage("--alpha-sq must be nonnegative"));
            }
            let c = tau_coherent(alpha_sq, 1_000_000);
            let mut row = tau_row(alpha_sq, c.tau);
            row["tail_bound"] = json!(c.tail_bound);
            row
        }
        TauCmd::State { file, delta, grouping_tol } => {
            let state: BatteryState = read_json(&file)?;
            let chains = chains_for(&state.levels, positive("delta", delta)?, grouping_tol)?;
            let t = tau_of_state(&state, &chains)?;
            json!({ "tau": t.tau, "epsilon": t.epsilon, "chains": chains })
        }
        TauCmd::Gaussian { sigma, delta } => {
            let s = positive("sigma", sigma)?;
            let q = tau_continuous(&EnergyDensity::gaussian(0.0, s * s), delta)?;
            let mut row = tau_row(sigma, q.value);
            row["quadrature_error"] = json!(q.error);
            row
        }
        TauCmd::Resonance { eps, c0, c1, delta, clock_sigma } => {
            let s = positive("clock-sigma", clock_sigma)?;
            let clock = EnergyDensity::gaussian(0.0, s * s);
            let q = tau_near_resonant(C64::new(c0, 0.0), C64::new(c1, 0.0), eps, &clock, delta)?;
            let mut row = tau_row(eps, q.value);
            row["resonant_limit"] = json!((c0 * c1).abs());
            row["quadrature_error"] = json!(q.error);
            row
        }
    })
}

fn run_povm(cmd: PovmCmd) -> Result<Value> {
    Ok(match cmd {
        PovmCmd::Validate { povm } => {
            let m: Povm = read_json(&povm)?;
            let d = validate(&m);
            json!({ "valid": d.is_valid(), "violations": d.violations })
        }
        PovmCmd::Effective { physical, battery } => {
            let phys: PhysicalPovm = read_json(&physical)?;
            let b: BatteryState = read_json(&battery)?;
            serde_json::to_value(effective_povm(&phys, &b)?)?
        }
        PovmCmd::Degrade { povm, tau } => {
            if !(0.0..=1.0).contains(&tau) {
                return Err(usage("--tau must lie in [0, 1]"));
            }
            let m: Povm = read_json(&povm)?;
            serde_json::to_value(degrade(&m, tau))?
        }
        PovmCmd::Decompose { povm, levels } => {
            let m: Povm = read_json(&povm)?;
            serde_json::to_value(batteryless_decomposition(&m, &levels)?)?
        }
    })
}

fn run_charact(cmd: CharactCmd, opts: &CharactOptions) -> Result<Value> {
    let verdict = match cmd {
        CharactCmd::Finite { povm, d } => membership_finite(&read_json(&povm)?, d, opts)?,
        CharactCmd::Energy { povm, ebar, delta, d } => membership_energy(&read_json(&povm)?, ebar, delta, d, opts)?,
        CharactCmd::Multilevel { povm, target, battery } => {
            membership_multilevel(&read_json(&povm)?, &read_levels(&target)?, &read_levels(&battery)?, opts)?
        }
        CharactCmd::Universal { state, d, trials, seed } => {
            let s: BatteryState = read_json(&state)?;
            return Ok(serde_json::to_value(universal_state_check(&s, d, trials, seed, opts)?)?);
        }
    };
    Ok(serde_json::to_value(verdict)?)
}

fn run_bell(cmd: BellCmd) -> Result<Value> {
    Ok(match cmd {
        BellCmd::Chsh => {
            let v = bell::chsh_value(&bell::dephased_scenario())?;
            json!({ "chsh_value": v, "mixture_bound": bell::chsh_mixture_bound(), "local_bound": 2.0 })
        }
        BellCmd::Seesaw { state, dims, restarts, seed } => {
            let [da, db] = dims[..] else { return Err(usage("--dims takes two factors, e.g. 4,4")) };
            if restarts == 0 {
                return Err(usage("--restarts must be positive"));
            }
            let rho: HermitianMatrix = read_json(&state)?;
            let r = bell::optimize_chsh_seesaw(&rho, (da, db), restarts, seed)?;
            json!({ "value": r.value, "alice": r.alice, "bob": r.bob })
        }
    })
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    let mut sdp_opts = SdpOptions::default();
    if let Some(tol) = g.tol {
        let tol = positive("tol", tol)?;
        sdp_opts.feas_tol = tol;
        sdp_opts.gap_tol = tol;
    }
    if let Some(dir) = &g.dump_sdp {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        sdp::set_dump_dir(Some(dir.clone()));
    }
    let opts = CharactOptions { sdp: sdp_opts, ..CharactOptions::default() };
    let mut failed_checks = false;
    let value = match cli.command {
        Command::Tau(t) => run_tau(t)?,
        Command::Phi { z } => serde_json::to_value(phi(positive("z", z)?))?,
        Command::PhiSweep { zmin, zmax, steps } => {
            let (zmin, zmax) = (positive("zmin", zmin)?, positive("zmax", zmax)?);
            if steps < 2 || zmax <= zmin {
                return Err(usage("need --steps ≥ 2 and --zmax > --zmin"));
            }
            let rows = Exec::default().map(steps, |i| {
                let z = zmin + (zmax - zmin) * i as f64 / (steps - 1) as f64;
                let r = phi(z);
                json!({ "z": z, "phi": r.phi, "lambda_star": r.lambda_star, "mu_star": r.mu_star })
            });
            Value::Array(rows)
        }
        Command::PowerState { ebar, delta, tail_tol, state_out } => {
            let s = power_state(positive("ebar", ebar)?, positive("delta", delta)?, positive("tail-tol", tail_tol)?)?;
            let chains = ChainDecomposition::ladder(s.dim(), delta);
            let tau = tau_of_state(&s, &chains)?.tau;
            if let Some(path) = state_out {
                std::fs::write(&path, serde_json::to_string_pretty(&s)?).with_context(|| format!("writing {}", path.display()))?;
            }
            json!({ "ebar": ebar, "tau": tau, "mean_energy": s.mean_energy(), "levels": s.dim() })
        }
        Command::Povm(p) => run_povm(p)?,
        Command::Distance { kind, m0, m1 } => {
            let (a, b): (Povm, Povm) = (read_json(&m0)?, read_json(&m1)?);
            let r = match kind {
                DistanceKind::Classical => classical_distance(&a, &b)?,
                DistanceKind::Quantum => quantum_distance_with(&a, &b, &sdp_opts)?,
            };
            serde_json::to_value(r)?
        }
        Command::Charact(c) => run_charact(c, &opts)?,
        Command::Bell(b) => run_bell(b)?,
        Command::Spectrum { file, grouping_tol } => {
            #[derive(Deserialize)]
            struct SpectrumIn {
                delta: f64,
                levels: Vec<f64>,
            }
            let s: SpectrumIn = read_json(&file)?;
            serde_json::to_value(chains_for(&s.levels, positive("delta", s.delta)?, grouping_tol)?)?
        }
        Command::Reproduce { all } => {
            if !all {
                return Err(usage("reproduce needs --all"));
            }
            let checks = reproduce::run_all(&opts);
            failed_checks = checks.iter().any(|c| !c.pass);
            serde_json::to_value(checks)?
        }
    };
    let text = match g.format {
        Format::Json => serde_json::to_string_pretty(&value)? + "\n",
        Format::Csv => output::to_csv(&value)?,
    };
    match &g.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    if failed_checks {
        bail!("some reproduction checks failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if e.is::<UsageError>() { 2 } else { 1 };
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("{}", json!({ "error": chain.join(": ") }));
            ExitCode::from(code)
        }
    }
}
