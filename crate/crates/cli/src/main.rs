use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use discordium::analytic_discord::{
    discord_diagonal_field, discord_ghz, discord_symmetric, DiscordResult,
};
use discordium::decoherence::{
    detect_freeze_transition_with_tol, dynamics_sweep, p_grid, time_grid, SweepMethod,
};
use discordium::measurement_oracle::{
    minimize_discord_with_cap, minimize_reduced, OracleConfig, FULL_ORACLE_CAP,
};
use discordium::numfmt::sig9;
use discordium::pauli_state::{
    build_diagonal_field, build_noisy_ghz_dense, build_symmetric_family, realize_with_cap,
    validate_state, DensityMatrix, DiagonalFieldParams, FamilyParams, GhzParams, PauliSum,
    DEFAULT_DENSE_CAP, PHYSICAL_TOL,
};
use discordium::spectral::{
    closed_form_spectrum_3q, closed_form_spectrum_4q, closed_form_spectrum_ghz,
    diagonal_field_spectrum, hermitian_eigenvalues, SpectrumResult,
};
use discordium::Error;

const CAP_ENV: &str = "DISCORDIUM_DENSE_CAP";
/// Decimal flags carry about ten digits, so `c2 = c1 c3` is matched loosely.
const FLAG_MATCH_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "discordium", version, about = "Multipartite quantum discord calculator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discord of one state.
    Discord(DiscordArgs),
    /// Eigenvalues and von Neumann entropy as JSON.
    Spectrum(SpectrumArgs),
    /// Noisy GHZ discord over a grid of N and mu.
    GhzCurve(GhzCurveArgs),
    /// Discord of the symmetric family under phase-flip noise.
    Dynamics(DynamicsArgs),
    /// Hermiticity, trace and positivity report as JSON.
    Validate(ValidateArgs),
    /// Closed form against the numerical minimum; exits 1 above tolerance.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Symmetric,
    DiagonalField,
    Ghz,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Analytic,
    Oracle,
    Reduced,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Fallback {
    None,
    Oracle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct StateArgs {
    #[arg(long, value_enum, default_value = "symmetric")]
    family: Family,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c1: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c2: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c3: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    s: f64,
    /// Comma-separated local fields for the diagonal-field family.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    fields: Vec<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Pauli-sum JSON file; overrides the family flags.
    #[arg(long)]
    state: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// OracleConfig JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    starts: Option<usize>,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct DiscordArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, value_enum, default_value = "analytic")]
    method: Method,
    /// What to do when no closed form applies.
    #[arg(long, value_enum, default_value = "none")]
    fallback: Fallback,
    #[command(flatten)]
    oracle: OracleArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Use the family's closed-form spectrum instead of the eigensolver.
    #[arg(long)]
    closed_form: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GhzCurveArgs {
    #[arg(long, default_value_t = 2)]
    n_min: usize,
    #[arg(long, default_value_t = 6)]
    n_max: usize,
    #[arg(long, default_value_t = 101)]
    mu_steps: usize,
    /// Append a numerical-minimum column for N <= 3.
    #[arg(long)]
    oracle_check: bool,
    #[command(flatten)]
    oracle: OracleArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DynamicsArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, default_value_t = 91)]
    p_steps: usize,
    #[arg(long, default_value_t = 0.9)]
    p_max: f64,
    /// Decay rate; with --t-max the grid is p = 1 - exp(-gamma t).
    #[arg(long, requires = "t_max")]
    gamma: Option<f64>,
    #[arg(long, requires = "gamma")]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 91)]
    t_steps: usize,
    #[arg(long, value_enum, default_value = "analytic")]
    method: Method,
    #[command(flatten)]
    oracle: OracleArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, default_value_t = 5e-3)]
    tol: f64,
    /// Numerical side of the comparison; defaults to the full oracle when
    /// N is within the cap and the reduced one otherwise.
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[command(flatten)]
    oracle: OracleArgs,
    #[command(flatten)]
    out: OutArgs,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoAnalyticCase(_) => 3,
            _ => 2,
        };
        let mut message = e.to_string();
        if code == 3 {
            message.push_str("; rerun with --method oracle");
        }
        Failure { code, message }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

type CliResult<T> = std::result::Result<T, Failure>;

struct Caps {
    dense: usize,
    oracle: usize,
}

fn caps() -> CliResult<Caps> {
    match std::env::var(CAP_ENV) {
        Ok(v) => {
            let cap: usize = v
                .trim()
                .parse()
                .map_err(|_| fail(2, format!("{CAP_ENV}={v:?} is not a qubit count")))?;
            Ok(Caps { dense: cap, oracle: cap })
        }
        Err(_) => Ok(Caps { dense: DEFAULT_DENSE_CAP, oracle: FULL_ORACLE_CAP }),
    }
}

enum State {
    Symmetric(FamilyParams),
    Diagonal(DiagonalFieldParams),
    Ghz(GhzParams),
    File(PauliSum),
}

impl State {
    fn n_qubits(&self) -> usize {
        match self {
            State::Symmetric(p) => p.n_qubits,
            State::Diagonal(p) => p.n_qubits(),
            State::Ghz(p) => p.n_qubits,
            State::File(s) => s.n_qubits(),
        }
    }

    fn dense(&self, caps: &Caps) -> CliResult<DensityMatrix> {
        let n = self.n_qubits();
        if n > caps.dense {
            return Err(Error::CapExceeded { n, cap: caps.dense }.into());
        }
        let rho = match self {
            State::Symmetric(p) => realize_with_cap(&build_symmetric_family(p)?, caps.dense)?,
            State::Diagonal(p) => realize_with_cap(&build_diagonal_field(p)?, caps.dense)?,
            State::Ghz(p) => build_noisy_ghz_dense(p)?,
            State::File(s) => realize_with_cap(s, caps.dense)?,
        };
        Ok(rho)
    }

    fn require_physical(&self, caps: &Caps) -> CliResult<()> {
        let report = validate_state(&self.dense(caps)?, PHYSICAL_TOL);
        if !report.is_physical {
            return Err(Error::Unphysical(report.min_eigenvalue).into());
        }
        Ok(())
    }
}

fn parse_state(a: &StateArgs) -> CliResult<State> {
    if let Some(path) = &a.state {
        let text = std::fs::read_to_string(path).map_err(Error::from)?;
        return Ok(State::File(PauliSum::from_json(&text)?));
    }
    let need_n = || a.n.ok_or_else(|| fail(2, "--n is required for this family"));
    Ok(match a.family {
        Family::Symmetric => State::Symmetric(FamilyParams::new(need_n()?, a.c1, a.c2, a.c3, a.s)?),
        Family::DiagonalField => {
            if a.fields.is_empty() {
                return Err(fail(2, "--fields is required for the diagonal-field family"));
            }
            if let Some(n) = a.n {
                if n != a.fields.len() {
                    return Err(Error::WrongQubitCount { expected: n, got: a.fields.len() }.into());
                }
            }
            State::Diagonal(DiagonalFieldParams::new(a.fields.clone())?)
        }
        Family::Ghz => {
            let mu = a.mu.ok_or_else(|| fail(2, "--mu is required for the ghz family"))?;
            State::Ghz(GhzParams::new(need_n()?, mu)?)
        }
    })
}

fn oracle_config(a: &OracleArgs) -> CliResult<OracleConfig> {
    let mut cfg = match &a.config {
        Some(path) => OracleConfig::from_file(path)?,
        None => OracleConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(starts) = a.starts {
        cfg.starts = starts;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::from(e).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Nine significant digits as a JSON number.
fn num9(x: f64) -> Value {
    sig9(x).parse::<f64>().map(Value::from).unwrap_or(Value::Null)
}

fn analytic(state: &State) -> CliResult<DiscordResult> {
    Ok(match state {
        State::Symmetric(p) => discord_symmetric(p)?,
        State::Diagonal(p) => discord_diagonal_field(p)?,
        State::Ghz(p) => discord_ghz(p)?,
        State::File(_) => {
            return Err(Error::NoAnalyticCase("no closed form for an arbitrary Pauli sum".into()).into())
        }
    })
}

/// Numerical discord and the label used for it.
fn numerical(state: &State, method: Method, cfg: &OracleConfig, caps: &Caps) -> CliResult<(f64, String)> {
    match method {
        Method::Reduced => match state {
            State::Symmetric(p) => Ok((minimize_reduced(p, cfg)?.value, "reduced-oracle".into())),
            _ => Err(fail(2, "--method reduced applies to the symmetric family only")),
        },
        _ => {
            let rho = state.dense(caps)?;
            Ok((minimize_discord_with_cap(&rho, cfg, caps.oracle)?.value, "oracle".into()))
        }
    }
}

fn default_numeric(state: &State, caps: &Caps) -> Method {
    match state {
        State::Symmetric(p) if p.n_qubits > caps.oracle => Method::Reduced,
        _ => Method::Oracle,
    }
}

fn discord_output(value: f64, branch: &str, format: Format) -> String {
    match format {
        Format::Csv => format!("discord_bits,branch\n{},{}\n", sig9(value), branch),
        Format::Json => format!("{}\n", json!({ "discord_bits": num9(value), "branch": branch })),
    }
}

fn cmd_discord(a: &DiscordArgs) -> CliResult<()> {
    let caps = caps()?;
    let state = parse_state(&a.state)?;
    if state.n_qubits() <= caps.dense {
        state.require_physical(&caps)?;
    }
    let cfg = oracle_config(&a.oracle)?;
    let (value, branch) = match a.method {
        Method::Analytic => match analytic(&state) {
            Ok(r) => (r.value, r.branch),
            Err(f) if f.code == 3 && a.fallback == Fallback::Oracle => {
                numerical(&state, default_numeric(&state, &caps), &cfg, &caps)?
            }
            Err(f) => return Err(f),
        },
        m => numerical(&state, m, &cfg, &caps)?,
    };
    emit(&a.out.out, &discord_output(value, &branch, a.out.format))
}

fn closed_form(state: &State) -> CliResult<SpectrumResult> {
    match state {
        State::Symmetric(p) if p.n_qubits == 3 => Ok(closed_form_spectrum_3q(p)?),
        State::Symmetric(p) if p.n_qubits == 4 => Ok(closed_form_spectrum_4q(p)?),
        State::Ghz(p) => Ok(closed_form_spectrum_ghz(p)?),
        State::Diagonal(p) => Ok(diagonal_field_spectrum(&p.fields)),
        _ => Err(fail(2, "no closed-form spectrum for this state; drop --closed-form")),
    }
}

fn cmd_spectrum(a: &SpectrumArgs) -> CliResult<()> {
    let caps = caps()?;
    let state = parse_state(&a.state)?;
    let spec = if a.closed_form { closed_form(&state)? } else { hermitian_eigenvalues(&state.dense(&caps)?)? };
    let eig: Vec<Value> = spec.eigenvalues.iter().map(|&x| num9(x)).collect();
    let body = json!({ "eigenvalues": eig, "entropy_bits": num9(spec.entropy()) });
    emit(&a.out, &format!("{body}\n"))
}

fn cmd_ghz_curve(a: &GhzCurveArgs) -> CliResult<()> {
    if a.n_min < 2 || a.n_max < a.n_min {
        return Err(fail(2, format!("need 2 <= n-min <= n-max, got {}..{}", a.n_min, a.n_max)));
    }
    if a.mu_steps < 2 {
        return Err(fail(2, "--mu-steps must be at least 2"));
    }
    let caps = caps()?;
    let cfg = oracle_config(&a.oracle)?;
    let mut out = String::from(if a.oracle_check { "n,mu,discord_bits,oracle_bits\n" } else { "n,mu,discord_bits\n" });
    for n in a.n_min..=a.n_max {
        for i in 0..a.mu_steps {
            let mu = i as f64 / (a.mu_steps - 1) as f64;
            let p = GhzParams::new(n, mu)?;
            let v = discord_ghz(&p)?.value;
            let _ = write!(out, "{n},{},{}", sig9(mu), sig9(v));
            if a.oracle_check {
                let extra = if n <= 3 {
                    sig9(minimize_discord_with_cap(&build_noisy_ghz_dense(&p)?, &cfg, caps.oracle)?.value)
                } else {
                    String::new()
                };
                let _ = write!(out, ",{extra}");
            }
            out.push('\n');
        }
    }
    emit(&a.out, &out)
}

fn cmd_dynamics(a: &DynamicsArgs) -> CliResult<()> {
    let state = parse_state(&a.state)?;
    let State::Symmetric(params) = state else {
        return Err(fail(2, "dynamics supports the symmetric family only"));
    };
    let grid = match (a.gamma, a.t_max) {
        (Some(g), Some(t)) => time_grid(g, t, a.t_steps)?,
        _ => p_grid(a.p_steps, a.p_max)?,
    };
    let cfg = oracle_config(&a.oracle)?;
    let method = match a.method {
        Method::Analytic => SweepMethod::Analytic,
        Method::Oracle => SweepMethod::Oracle,
        Method::Reduced => SweepMethod::Reduced,
    };
    let series = dynamics_sweep(&params, &grid, method, &cfg)?;
    let failed = series.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        let first = series.rows.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        eprintln!("warning: {failed} rows failed; first: {first}");
    }
    let freeze = detect_freeze_transition_with_tol(&params, FLAG_MATCH_TOL);
    match (freeze.frozen, freeze.frozen_value, freeze.p_star) {
        (true, Some(v), Some(p)) => eprintln!("frozen=true frozen_value={} p_star={}", sig9(v), sig9(p)),
        _ => eprintln!("frozen=false"),
    }
    emit(&a.out, &series.to_csv())
}

fn cmd_validate(a: &ValidateArgs) -> CliResult<()> {
    let caps = caps()?;
    let state = parse_state(&a.state)?;
    let report = validate_state(&state.dense(&caps)?, PHYSICAL_TOL);
    let body = json!({
        "hermitian": report.hermitian,
        "trace_deviation": num9(report.trace_deviation),
        "min_eigenvalue": num9(report.min_eigenvalue),
        "is_physical": report.is_physical,
    });
    emit(&a.out, &format!("{body}\n"))?;
    if !report.is_physical {
        return Err(Error::Unphysical(report.min_eigenvalue).into());
    }
    Ok(())
}

fn cmd_compare(a: &CompareArgs) -> CliResult<bool> {
    let caps = caps()?;
    let state = parse_state(&a.state)?;
    if state.n_qubits() <= caps.dense {
        state.require_physical(&caps)?;
    }
    let cfg = oracle_config(&a.oracle)?;
    let closed = analytic(&state)?;
    let method = a.method.unwrap_or_else(|| default_numeric(&state, &caps));
    if method == Method::Analytic {
        return Err(fail(2, "--method must be oracle or reduced"));
    }
    let (num, label) = numerical(&state, method, &cfg, &caps)?;
    let diff = (closed.value - num).abs();
    let text = match a.out.format {
        Format::Csv => format!(
            "analytic_bits,numeric_bits,abs_diff,branch,numeric_method\n{},{},{},{},{}\n",
            sig9(closed.value),
            sig9(num),
            sig9(diff),
            closed.branch,
            label
        ),
        Format::Json => format!(
            "{}\n",
            json!({
                "analytic_bits": num9(closed.value),
                "numeric_bits": num9(num),
                "abs_diff": num9(diff),
                "branch": closed.branch,
                "numeric_method": label,
                "tol": a.tol,
            })
        ),
    };
    emit(&a.out.out, &text)?;
    Ok(diff <= a.tol)
}

fn run(cli: Cli) -> CliResult<u8> {
    match &cli.command {
        Command::Discord(a) => cmd_discord(a)?,
        Command::Spectrum(a) => cmd_spectrum(a)?,
        Command::GhzCurve(a) => cmd_ghz_curve(a)?,
        Command::Dynamics(a) => cmd_dynamics(a)?,
        Command::Validate(a) => cmd_validate(a)?,
        Command::Compare(a) => {
            if !cmd_compare(a)? {
                eprintln!("error: |analytic - numeric| exceeds --tol {}", a.tol);
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let msg = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("error: {}", one_line(msg));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", one_line(&f.message));
            ExitCode::from(f.code)
        }
    }
}
