//! `jwkb`: quasimode certificates, sweeps and oracle checks from the
//! command line.
//!
//! Exit codes: 0 success, 2 usage or input errors, 3 anchor errors
//! (degenerate, infeasible or missing), 4 numerical accuracy failures.

mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use jwkb_core::jwkb::{sweep_h, DEFAULT_DELTA_CAP, DEFAULT_H_GRID};
use jwkb_core::oracle::{validate_quasimode, Discretization, ValidationReport};
use jwkb_core::scaling::{region_u, sector_check, sweep_sigma, AnchorSolver, HighEnergyOperator, DEFAULT_SIGMA_GRID};
use jwkb_core::{Anchor, Certificate, Error, ErrorClass, PotentialFamily, Quasimode, QuasimodeOptions};

use config::{ComplexArg, Config, GridArg, ListArg};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io { path: PathBuf, message: String },
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), message: err.to_string() }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.class() {
                ErrorClass::Usage => 2,
                ErrorClass::Anchor => 3,
                ErrorClass::Numerical => 4,
            },
            CliError::Io { .. } | CliError::Usage(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Io { path, message } => format!("{}: {message}", path.display()),
            CliError::Usage(m) => m.clone(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Parser, Debug)]
#[command(name = "jwkb", version, about = "JWKB quasimodes and resolvent-norm lower bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certificate for one anchor at one h.
    Quasimode(QuasimodeCmd),
    /// Certificates over a list of h values, with the log-log slope of r.
    SweepH(SweepCmd),
    /// Samples of the region U = {eta^2 + V_h(a)}.
    Region(RegionCmd),
    /// Lower bounds on ||(H - sigma z)^{-1}|| over a list of sigma values.
    HighEnergy(HighEnergyCmd),
    /// Compares a certificate against the finite-difference oracle.
    Validate(ValidateCmd),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Potential file (`domain: line|halfline` header, then `c_re c_im p e` lines).
    #[arg(long)]
    potential: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JWKB order n (default 1).
    #[arg(long, alias = "n")]
    order: Option<usize>,
    /// Truncation degree K (default 2n + 16).
    #[arg(long, alias = "K")]
    trunc: Option<usize>,
    /// Upper limit on the cutoff radius (default 4).
    #[arg(long)]
    delta_cap: Option<f64>,
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct AnchorArgs {
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    /// Energy as `re,im`; with `--a`/`--eta` it is checked, otherwise the
    /// anchor is solved for.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<ComplexArg>,
    /// Newton starting point when solving for the anchor.
    #[arg(long, allow_hyphen_values = true)]
    a_init: Option<f64>,
    /// Half-width of the fallback root scan (default 10).
    #[arg(long)]
    scan_range: Option<f64>,
}

#[derive(Args, Debug)]
struct QuasimodeCmd {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    anchor: AnchorArgs,
    /// Semiclassical parameter (default 0.05).
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepCmd {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    /// Comma-separated h values (default 0.2,0.1,0.05,0.025,0.0125).
    #[arg(long)]
    h_list: Option<ListArg>,
}

#[derive(Args, Debug)]
struct RegionCmd {
    #[command(flatten)]
    common: Common,
    /// Semiclassical parameter (default 0).
    #[arg(long)]
    h: Option<f64>,
    /// Grid `lo:hi:n` for a (default -2:2:41).
    #[arg(long, allow_hyphen_values = true)]
    a_grid: Option<GridArg>,
    /// Grid `lo:hi:n` for eta (default 0.25:2:8); zero is skipped.
    #[arg(long, allow_hyphen_values = true)]
    eta_grid: Option<GridArg>,
}

#[derive(Args, Debug)]
struct HighEnergyCmd {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    z: Option<ComplexArg>,
    /// Comma-separated sigma values (default 1e1,1e2,1e3,1e4,1e5).
    #[arg(long)]
    sigma_list: Option<ListArg>,
}

#[derive(Args, Debug)]
struct ValidateCmd {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    anchor: AnchorArgs,
    /// Semiclassical parameter (default 0.05).
    #[arg(long)]
    h: Option<f64>,
    /// Grid start (default a - max(8 sqrt(h), 3 delta)).
    #[arg(long, allow_hyphen_values = true)]
    x_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_hi: Option<f64>,
    /// Interior grid points (default: spacing sqrt(h)/40).
    #[arg(long)]
    points: Option<usize>,
}

/// Common settings after merging flags with the config file.
struct Settings {
    config: Config,
    potential: PathBuf,
    out: Option<PathBuf>,
    format: Option<Format>,
    options: QuasimodeOptions,
}

impl Settings {
    fn resolve(common: Common) -> Result<Self, CliError> {
        let config = match &common.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        let potential: PathBuf = config.require(common.potential, "potential")?;
        let out = config.pick(common.out, "out")?;
        let format = config.pick(common.format, "format")?;
        let order = config.pick(common.order, "order")?.unwrap_or(1);
        let trunc = config.pick(common.trunc, "trunc")?;
        let delta_cap = config.pick(common.delta_cap, "delta-cap")?.unwrap_or(DEFAULT_DELTA_CAP);
        if let Some(k) = trunc {
            if k < 2 {
                return Err(CliError::Usage(format!("--trunc {k} must be >= 2")));
            }
        }
        if !(delta_cap > 0.0) {
            return Err(CliError::Usage(format!("--delta-cap {delta_cap} must be positive")));
        }
        Ok(Self { config, potential, out, format, options: QuasimodeOptions { order, trunc, delta_cap } })
    }

    fn load_potential(&self) -> Result<PotentialFamily, CliError> {
        let text = std::fs::read_to_string(&self.potential).map_err(|e| CliError::io(&self.potential, e))?;
        Ok(text.parse()?)
    }

    fn positive(&self, flag: Option<f64>, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.config.pick(flag, key)?.unwrap_or(default);
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Usage(format!("--{key} {v} must be positive")));
        }
        Ok(v)
    }

    fn anchor(&self, potential: &PotentialFamily, h: f64, args: AnchorArgs) -> Result<Anchor, CliError> {
        let a = self.config.pick(args.a, "a")?;
        let eta = self.config.pick(args.eta, "eta")?;
        let z = self.config.pick(args.z, "z")?.map(|z| z.0);
        match (a, eta, z) {
            (Some(a), Some(eta), None) => Ok(Anchor::new(potential, h, a, eta)?),
            (Some(a), Some(eta), Some(z)) => Ok(Anchor::with_energy(potential, h, a, eta, z)?),
            (_, None, Some(z)) => {
                let a_init = self.config.pick(args.a_init, "a-init")?.or(a);
                let scan_range = self.positive(args.scan_range, "scan-range", jwkb_core::scaling::DEFAULT_SCAN_RANGE)?;
                Ok(AnchorSolver { scan_range }.solve(potential, h, z, a_init)?.anchor)
            }
            _ => Err(CliError::Usage("give --a and --eta, or --z".into())),
        }
    }

    fn write(&self, text: &str) -> Result<(), CliError> {
        match &self.out {
            Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|e| CliError::io(Path::new("<stdout>"), e))
            }
        }
    }
}

/// Seventeen significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn certificate_csv(certs: &[Certificate]) -> String {
    csv(
        &["z_re", "z_im", "h", "n", "r", "lower_bound", "delta", "gamma", "panels"],
        certs.iter().map(|c| {
            vec![
                num(c.z_re),
                num(c.z_im),
                num(c.h),
                c.n.to_string(),
                num(c.r),
                num(c.lower_bound),
                num(c.delta),
                num(c.gamma),
                c.panels.to_string(),
            ]
        }),
    )
}

fn cmd_quasimode(cmd: QuasimodeCmd) -> Result<(), CliError> {
    let settings = Settings::resolve(cmd.common)?;
    let h = settings.positive(cmd.h, "h", 0.05)?;
    let potential = settings.load_potential()?;
    let anchor = settings.anchor(&potential, h, cmd.anchor)?;
    let cert = Quasimode::build(&potential, &anchor, &settings.options)?.residual_ratio()?;
    let text = match settings.format.unwrap_or(Format::Json) {
        Format::Json => json(&cert)?,
        Format::Csv => certificate_csv(std::slice::from_ref(&cert)),
    };
    settings.write(&text)
}

fn cmd_sweep_h(cmd: SweepCmd) -> Result<(), CliError> {
    let settings = Settings::resolve(cmd.common)?;
    let a: f64 = settings.config.require(cmd.a, "a")?;
    let eta: f64 = settings.config.require(cmd.eta, "eta")?;
    let hs = settings.config.pick(cmd.h_list, "h-list")?.map(|l| l.0).unwrap_or_else(|| DEFAULT_H_GRID.to_vec());
    if let Some(h) = hs.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(CliError::Usage(format!("h value {h} must be positive")));
    }
    let potential = settings.load_potential()?;
    let sweep = sweep_h(&potential, a, eta, &hs, &settings.options)?;
    let text = match settings.format.unwrap_or(Format::Csv) {
        Format::Json => json(&sweep)?,
        Format::Csv => {
            eprintln!("slope={} fit_residual={}", num(sweep.slope), num(sweep.fit_residual));
            csv(
                &["h", "r", "lower_bound"],
                sweep.rows.iter().map(|c| vec![num(c.h), num(c.r), num(c.lower_bound)]),
            )
        }
    };
    settings.write(&text)
}

fn cmd_region(cmd: RegionCmd) -> Result<(), CliError> {
    let settings = Settings::resolve(cmd.common)?;
    let h = settings.config.pick(cmd.h, "h")?.unwrap_or(0.0);
    if !(h >= 0.0 && h.is_finite()) {
        return Err(CliError::Usage(format!("--h {h} must be >= 0")));
    }
    let a_grid = settings.config.pick(cmd.a_grid, "a-grid")?.unwrap_or(GridArg { lo: -2.0, hi: 2.0, n: 41 });
    let eta_grid = settings.config.pick(cmd.eta_grid, "eta-grid")?.unwrap_or(GridArg { lo: 0.25, hi: 2.0, n: 8 });
    let potential = settings.load_potential()?;
    let samples = region_u(&potential, h, &a_grid.points(), &eta_grid.points());
    let text = match settings.format.unwrap_or(Format::Csv) {
        Format::Json => json(&samples)?,
        Format::Csv => csv(
            &["a", "eta", "z_re", "z_im"],
            samples.iter().map(|s| vec![num(s.a), num(s.eta), num(s.z.re), num(s.z.im)]),
        ),
    };
    settings.write(&text)
}

fn cmd_high_energy(cmd: HighEnergyCmd) -> Result<(), CliError> {
    let settings = Settings::resolve(cmd.common)?;
    let z: Complex64 = settings.config.require(cmd.z, "z")?.0;
    let sigmas = settings
        .config
        .pick(cmd.sigma_list, "sigma-list")?
        .map(|l| l.0)
        .unwrap_or_else(|| DEFAULT_SIGMA_GRID.to_vec());
    let op = HighEnergyOperator::new(settings.load_potential()?)?;
    let c_n = op.top_coeff();
    if !sector_check(z, c_n)? {
        return Err(CliError::Usage(format!(
            "z = {z} is outside the sector: arg z = {} is not in (0, arg c_n = {})",
            z.arg(),
            c_n.arg()
        )));
    }
    let sweep = sweep_sigma(&op, z, &sigmas, &settings.options)?;
    let text = match settings.format.unwrap_or(Format::Csv) {
        Format::Json => json(&sweep)?,
        Format::Csv => csv(
            &["sigma", "h", "lower_bound"],
            sweep
                .rows
                .iter()
                .map(|c| vec![num(c.sigma.unwrap_or(1.0)), num(c.h), num(c.lower_bound)]),
        ),
    };
    settings.write(&text)
}

fn report_csv(r: &ValidationReport) -> String {
    csv(
        &["oracle_norm", "lower_bound", "discrete_residual", "cert_residual", "pass", "x_lo", "x_hi", "n", "dx"],
        [vec![
            num(r.oracle_norm),
            num(r.lower_bound),
            num(r.discrete_residual),
            num(r.cert_residual),
            r.pass.to_string(),
            num(r.x_lo),
            num(r.x_hi),
            r.n.to_string(),
            num(r.dx),
        ]],
    )
}

fn cmd_validate(cmd: ValidateCmd) -> Result<(), CliError> {
    let settings = Settings::resolve(cmd.common)?;
    let h = settings.positive(cmd.h, "h", 0.05)?;
    let potential = settings.load_potential()?;
    let anchor = settings.anchor(&potential, h, cmd.anchor)?;
    let q = Quasimode::build(&potential, &anchor, &settings.options)?;
    let cert = q.residual_ratio()?;
    let default = Discretization::around(anchor.a, q.delta(), h, potential.domain())?;
    let x_lo = settings.config.pick(cmd.x_lo, "x-lo")?.unwrap_or(default.x_lo);
    let x_hi = settings.config.pick(cmd.x_hi, "x-hi")?.unwrap_or(default.x_hi);
    let points = match settings.config.pick(cmd.points, "points")? {
        Some(n) => n,
        None if (x_lo, x_hi) == (default.x_lo, default.x_hi) => default.n,
        None => ((x_hi - x_lo) * jwkb_core::oracle::POINTS_PER_SCALE / h.sqrt()).ceil() as usize,
    };
    let disc = Discretization::new(x_lo, x_hi, points)?;
    let report = validate_quasimode(&q, &cert, &disc)?;
    let text = match settings.format.unwrap_or(Format::Json) {
        Format::Json => json(&report)?,
        Format::Csv => report_csv(&report),
    };
    settings.write(&text)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Quasimode(c) => cmd_quasimode(c),
        Command::SweepH(c) => cmd_sweep_h(c),
        Command::Region(c) => cmd_region(c),
        Command::HighEnergy(c) => cmd_high_energy(c),
        Command::Validate(c) => cmd_validate(c),
    }
}

fn fail(kind: &str, code: u8, message: &str) -> ExitCode {
    let mut line = String::new();
    let _ = write!(line, "error: kind={kind} code={code} {}", message.replace('\n', " "));
    eprintln!("{line}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return fail("usage", 2, first);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.code(), &e.message()),
    }
}
