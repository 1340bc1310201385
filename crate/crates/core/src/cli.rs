//! Command-line driver.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::harness::config::KeyValueFile;
use crate::harness::output::{self, fmt_f64};
use crate::harness::{kinetic_energy_spectrum, run_convergence, ReferenceKind, ReferenceSettings, RunConfig};
use crate::problems::{self, Problem, SpectralLinear};
use crate::schemes::{integrate, step, step_count, OpCounters, SchemeConfig, SchemeKind, StepState};
use crate::stability::{kappa_set, power_iteration_estimate, region_scan, symmetric_axis, PowerOptions};

pub const OUTPUT_DIR_ENV: &str = "SLEXP_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "slexp", version, about = "Semi-Lagrangian exponential integrator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Time-step convergence study against a reference solution.
    Converge(ConvergeArgs),
    /// Amplification raster over imaginary xi_L and xi_N.
    StabilityScan(ScanArgs),
    /// Dominant growth factor of one step about a steady state.
    PowerMethod(PowerArgs),
    /// Kinetic-energy spectrum of an integrated shallow-water state.
    Spectrum(SpectrumArgs),
    /// Per-step operation counts.
    Counters(CounterArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// key = value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: $SLEXP_OUTPUT_DIR, then the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated, descending.
    #[arg(long)]
    dt: Option<String>,
    /// Comma-separated points per axis.
    #[arg(long)]
    resolution: Option<String>,
    #[arg(long)]
    end: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    viscosity_order: Option<u32>,
    #[arg(long)]
    viscosity_coeff: Option<f64>,
    /// auto, analytic, rk4 or self.
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    reference_dt: Option<f64>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    scheme: Option<String>,
    /// Points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Half-width of both imaginary axes.
    #[arg(long)]
    extent: Option<f64>,
    /// `full` for the 21-value set on [0, 2 pi], `zero` for {0}.
    #[arg(long)]
    kappa: Option<String>,
}

#[derive(Args, Debug)]
struct PowerArgs {
    #[command(flatten)]
    common: Common,
    /// swe-plane-balanced or spectral-linear.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `re,im` rate of the linear part (spectral-linear).
    #[arg(long, allow_hyphen_values = true)]
    lambda_l: Option<String>,
    /// `re,im` rate of the N~ part (spectral-linear).
    #[arg(long, allow_hyphen_values = true)]
    lambda_n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    speed: Option<f64>,
    #[arg(long)]
    viscosity_order: Option<u32>,
    #[arg(long)]
    viscosity_coeff: Option<f64>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    end: Option<f64>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    viscosity_order: Option<u32>,
    #[arg(long)]
    viscosity_coeff: Option<f64>,
}

#[derive(Args, Debug)]
struct CounterArgs {
    #[command(flatten)]
    common: Common,
    /// One scheme; all schemes when omitted.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
}

/// Effective settings: flag, then config file, then default. Records every value for the manifest.
struct Settings {
    file: KeyValueFile,
    manifest: KeyValueFile,
}

impl Settings {
    fn load(common: &Common, command: &str) -> Result<Self> {
        let file = match &common.config {
            Some(p) => KeyValueFile::load(p)?,
            None => KeyValueFile::default(),
        };
        let mut manifest = KeyValueFile::default();
        manifest.insert("run.command", command);
        manifest.insert("run.version", env!("CARGO_PKG_VERSION"));
        if let Some(p) = &common.config {
            manifest.insert("run.config_file", p.display().to_string());
        }
        Ok(Self { file, manifest })
    }

    fn raw(&mut self, key: &str, flag: Option<String>, default: Option<&str>) -> Option<String> {
        let value = flag
            .or_else(|| self.file.get(key).map(str::to_string))
            .or_else(|| default.map(str::to_string));
        if let Some(v) = &value {
            self.manifest.insert(key, v.clone());
        }
        value
    }

    fn value<T: FromStr, F: ToString>(&mut self, key: &str, flag: Option<F>, default: Option<&str>) -> Result<Option<T>> {
        match self.raw(key, flag.map(|v| v.to_string()), default) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| Error::Usage(format!("invalid value '{s}' for {key}"))),
        }
    }

    fn required<T: FromStr, F: ToString>(&mut self, key: &str, flag: Option<F>, default: Option<&str>) -> Result<T> {
        self.value(key, flag, default)?
            .ok_or_else(|| Error::Usage(format!("missing required setting {key}")))
    }

    fn output_dir(&mut self, flag: Option<PathBuf>) -> PathBuf {
        let env = std::env::var(OUTPUT_DIR_ENV).ok();
        let dir = flag
            .map(|p| p.display().to_string())
            .or_else(|| self.file.get("run.out").map(str::to_string))
            .or(env)
            .unwrap_or_else(|| ".".into());
        self.manifest.insert("run.out", dir.clone());
        PathBuf::from(dir)
    }

    fn record_problem(&mut self, problem: &dyn Problem) {
        for (k, v) in problem.parameters() {
            self.manifest.insert(k, v);
        }
    }

    fn write_manifest(&self, dir: &Path) -> Result<()> {
        output::write_text(dir, "manifest.txt", &self.manifest.render())
    }
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::Usage(format!("invalid {what} '{}'", p.trim())))
        })
        .collect()
}

fn parse_complex(s: &str) -> Result<Complex64> {
    let parts: Vec<f64> = parse_list(s, "complex component")?;
    match parts.as_slice() {
        [re] => Ok(Complex64::new(*re, 0.0)),
        [re, im] => Ok(Complex64::new(*re, *im)),
        _ => Err(Error::Usage(format!("expected re,im but got '{s}'"))),
    }
}

/// Runs the driver on `argv` (including the program name) and returns the exit code.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Converge(a) => converge(a),
        Command::StabilityScan(a) => stability_scan(a),
        Command::PowerMethod(a) => power_method(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Counters(a) => counters(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BlowUp { .. } | Error::EmptyStudy => 2,
        _ => 1,
    }
}

fn converge(a: ConvergeArgs) -> Result<i32> {
    let mut s = Settings::load(&a.common, "converge")?;
    let problem: String = s.required("run.problem", a.problem, None)?;
    let scheme: SchemeKind = s.required::<String, _>("run.scheme", a.scheme, None)?.parse()?;
    let dts: Vec<f64> = parse_list(&s.required::<String, _>("run.dt", a.dt, None)?, "time step")?;
    let resolutions = match s.value::<String, _>("run.resolution", a.resolution, None)? {
        Some(r) => parse_list::<usize>(&r, "resolution")?.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let end: f64 = s.required("run.end", a.end, None)?;
    let mut cfg = RunConfig::new(&problem, scheme, dts, end);
    cfg.resolutions = resolutions;
    cfg.seed = s.required("run.seed", a.seed, Some("0"))?;
    cfg.viscosity_order = s.required("viscosity.order", a.viscosity_order, Some("0"))?;
    cfg.viscosity_coeff = s.required("viscosity.coeff", a.viscosity_coeff, Some("0"))?;
    let kind: String = s.required("reference.kind", a.reference, Some("auto"))?;
    cfg.reference = ReferenceSettings {
        kind: ReferenceKind::from_str(&kind)?,
        dt: s.value("reference.dt", a.reference_dt, None)?,
    };
    cfg.output_dir = s.output_dir(a.common.out);
    let probe = problems::build(&cfg.problem, cfg.resolutions[0])?;
    s.record_problem(probe.as_ref());
    cfg.validate()?;

    let result = run_convergence(&cfg)?;
    output::write_text(&cfg.output_dir, "convergence.csv", &output::convergence_csv(&result))?;
    output::write_text(&cfg.output_dir, "timings.csv", &output::timings_csv(&result))?;
    s.write_manifest(&cfg.output_dir)?;
    for fit in &result.fits {
        match fit.order {
            Some(o) => println!("resolution {}: fitted order {o:.4} from {} points", fit.resolution, fit.points_used),
            None => println!("resolution {}: no order fit (errors at the floor)", fit.resolution),
        }
    }
    if result.blow_up_dominated() {
        eprintln!("{} of {} runs blew up", result.blow_up_count(), result.records.len());
        return Ok(2);
    }
    Ok(0)
}

fn stability_scan(a: ScanArgs) -> Result<i32> {
    let mut s = Settings::load(&a.common, "stability-scan")?;
    let scheme: SchemeKind = s.required::<String, _>("stability.scheme", a.scheme, None)?.parse()?;
    let n: usize = s.required("stability.grid", a.grid, Some("401"))?;
    let extent: f64 = s.required("stability.extent", a.extent, Some("4"))?;
    let kappa: String = s.required("stability.kappa", a.kappa, Some("full"))?;
    let ks = match kappa.as_str() {
        "full" => kappa_set(),
        "zero" => vec![0.0],
        other => return Err(Error::Usage(format!("unknown kappa set '{other}', expected full or zero"))),
    };
    if n == 0 || !(extent > 0.0) {
        return Err(Error::Usage("grid must be positive and extent > 0".into()));
    }
    let dir = s.output_dir(a.common.out);
    let axis = symmetric_axis(n, extent);
    let scan = region_scan(scheme, &axis, &axis, &ks)?;
    let stem = format!("stability_{}", scheme.name());
    output::write_text(&dir, &format!("{stem}.csv"), &output::region_csv(&scan))?;
    output::write_bytes(&dir, &format!("{stem}.pgm"), &output::region_pgm(&scan))?;
    s.write_manifest(&dir)?;
    println!("{}: {} of {} cells stable", scheme.name(), scan.stable_count(), n * n);
    Ok(0)
}

fn power_method(a: PowerArgs) -> Result<i32> {
    let mut s = Settings::load(&a.common, "power-method")?;
    let name: String = s.required("run.problem", a.problem, Some("swe-plane-balanced"))?;
    let scheme: SchemeKind = s.required::<String, _>("run.scheme", a.scheme, None)?.parse()?;
    let dt: f64 = s.required("run.dt", a.dt, None)?;
    let seed: u64 = s.required("run.seed", a.seed, Some("0"))?;
    let order: u32 = s.required("viscosity.order", a.viscosity_order, Some("0"))?;
    let coeff: f64 = s.required("viscosity.coeff", a.viscosity_coeff, Some("0"))?;
    let cfg = SchemeConfig::new(scheme, dt)?.with_viscosity(order, coeff)?;
    let problem: Box<dyn Problem> = match name.as_str() {
        "spectral-linear" => {
            let points: usize = s.required("run.resolution", a.resolution, Some("64"))?;
            let ll = parse_complex(&s.required::<String, _>("problem.lambda_l", a.lambda_l, Some("0,1"))?)?;
            let ln = parse_complex(&s.required::<String, _>("problem.lambda_n", a.lambda_n, Some("0,0.5"))?)?;
            let speed: f64 = s.required("problem.speed", a.speed, Some("0"))?;
            Box::new(SpectralLinear::uniform(2.0 * std::f64::consts::PI, points, ll, ln, speed, 1)?)
        }
        "swe-plane-balanced" => {
            let points: usize = s.required("run.resolution", a.resolution, Some("64"))?;
            Box::new(problems::SwePlane::standard(problems::SweSetup::Balanced, points)?)
        }
        other => {
            return Err(Error::Usage(format!(
                "power-method supports problems: spectral-linear, swe-plane-balanced (got '{other}')"
            )))
        }
    };
    s.record_problem(problem.as_ref());
    let dir = s.output_dir(a.common.out);
    let opts = PowerOptions { seed, ..PowerOptions::default() };
    let steady = match name.as_str() {
        "spectral-linear" => crate::field::zeros(1, problem.domain().len()),
        _ => problem.initial_state(),
    };
    let g = power_iteration_estimate(problem.as_ref(), &cfg, &steady, &opts)?;
    let mut csv = String::from("scheme,dt,dominant_eigenvalue,growth_rate,e_folding,iterations,converged\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{}",
        scheme.name(),
        fmt_f64(dt),
        fmt_f64(g.dominant_eigenvalue),
        fmt_f64(g.growth_rate),
        fmt_f64(g.e_folding),
        g.iterations,
        g.converged
    );
    output::write_text(&dir, "power_method.csv", &csv)?;
    s.write_manifest(&dir)?;
    println!(
        "lambda = {:.12}, nu = {:.6e}, tau = {:.6e}, iterations = {}, converged = {}",
        g.dominant_eigenvalue, g.growth_rate, g.e_folding, g.iterations, g.converged
    );
    Ok(0)
}

fn spectrum(a: SpectrumArgs) -> Result<i32> {
    let mut s = Settings::load(&a.common, "spectrum")?;
    let name: String = s.required("run.problem", a.problem, Some("swe-plane-perturbed"))?;
    let scheme: SchemeKind = s.required::<String, _>("run.scheme", a.scheme, Some("SE22"))?.parse()?;
    let dt: f64 = s.required("run.dt", a.dt, Some("0.1"))?;
    let end: f64 = s.required("run.end", a.end, Some("1"))?;
    let points: usize = s.required("run.resolution", a.resolution, Some("64"))?;
    let order: u32 = s.required("viscosity.order", a.viscosity_order, Some("0"))?;
    let coeff: f64 = s.required("viscosity.coeff", a.viscosity_coeff, Some("0"))?;
    let setup = match name.as_str() {
        "swe-plane-balanced" => problems::SweSetup::Balanced,
        "swe-plane-perturbed" => problems::SweSetup::Perturbed,
        other => {
            return Err(Error::Usage(format!(
                "spectrum needs a shallow-water problem: swe-plane-balanced, swe-plane-perturbed (got '{other}')"
            )))
        }
    };
    let problem = problems::SwePlane::standard(setup, points)?;
    s.record_problem(&problem);
    let dir = s.output_dir(a.common.out);
    let cfg = SchemeConfig::new(scheme, dt)?.with_viscosity(order, coeff)?;
    let n = step_count(end, dt)?;
    let state = StepState::initial(&problem, problem.initial_state(), 0.0)?;
    let (last, _) = integrate(&cfg, &problem, state, n)?;
    let shells = kinetic_energy_spectrum(problem.grid(), &last.u)?;
    let mut csv = String::from("shell,energy\n");
    for (k, e) in shells.iter().enumerate() {
        let _ = writeln!(csv, "{k},{}", fmt_f64(*e));
    }
    output::write_text(&dir, "spectrum.csv", &csv)?;
    s.write_manifest(&dir)?;
    println!("total kinetic energy {:.12e} in {} shells", shells.iter().sum::<f64>(), shells.len());
    Ok(0)
}

fn counters(a: CounterArgs) -> Result<i32> {
    let mut s = Settings::load(&a.common, "counters")?;
    let schemes: Vec<SchemeKind> = match s.value::<String, _>("run.scheme", a.scheme, None)? {
        Some(name) => vec![name.parse()?],
        None => SchemeKind::ALL.iter().copied().filter(|k| *k != SchemeKind::Rk4Ref).collect(),
    };
    let name: String = s.required("run.problem", a.problem, Some("swe-plane-perturbed"))?;
    let resolution: usize = s.required("run.resolution", a.resolution, Some("32"))?;
    let dt: f64 = s.required("run.dt", a.dt, Some("0.01"))?;
    let problem = problems::build(&name, Some(resolution))?;
    s.record_problem(problem.as_ref());
    let dir = s.output_dir(a.common.out);
    let mut csv = format!("scheme,{}\n", OpCounters::COLUMNS.join(","));
    println!("{:<14}{}", "scheme", OpCounters::COLUMNS.map(|c| format!("{c:>7}")).join(""));
    for kind in schemes {
        let cfg = SchemeConfig::new(kind, dt)?;
        let state = StepState::initial(problem.as_ref(), problem.initial_state(), 0.0)?;
        let (_, c) = step(&cfg, problem.as_ref(), &state)?;
        let row = c.row();
        println!("{:<14}{}", kind.name(), row.map(|v| format!("{v:>7}")).join(""));
        let _ = writeln!(csv, "{},{}", kind.name(), row.map(|v| v.to_string()).join(","));
    }
    output::write_text(&dir, "counters.csv", &csv)?;
    s.write_manifest(&dir)?;
    Ok(0)
}
