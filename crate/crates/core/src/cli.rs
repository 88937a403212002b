//! The `cauchy-qam` command line.
//!
//! Exit codes: 0 on success or pass, 1 on an analytic failure (fail verdict,
//! no root, indeterminate classification), 2 on usage or input errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::classify::{classify_original, classify_pair, decompose_support, read_sample_pair, ClassifyOptions, Verdict};
use crate::error::{Error, Result};
use crate::families::counterexample_pair;
use crate::funcmodel::{finite_window, Func1D, Interval, SamplePlan, DEFAULT_SPAN};
use crate::qam::{Generator, MeanWeights, QuasiArithmeticMean};
use crate::residual::{locate_mean_points, verify_grid, write_residual_csv, MeanPoints, ResidualReport, DEFAULT_ROOT_GRID};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cauchy-qam", version, about = "Cauchy mean value equation over quasi-arithmetic means")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the equation on a grid of pairs and report the worst residual.
    Verify(SweepCmd),
    /// Decide which solution family a pair belongs to.
    Classify(ClassifyCmd),
    /// Find mean value points of a pair on (a, b).
    Locate(LocateCmd),
    /// Verify the bounded-interval counterexample and print its supports.
    Counterexample(CounterexampleCmd),
    /// Write per-pair residuals as CSV.
    Grid(SweepCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Csv,
    Human,
}

#[derive(Debug, Args)]
struct PairArgs {
    #[arg(long)]
    phi: String,
    #[arg(long)]
    psi: String,
    /// `identity`, `ln`, `exp`, `power:<p>` or an expression in x.
    #[arg(long, default_value = "identity")]
    generator: String,
    /// `lo,hi`; either side may be `inf` / `-inf`. Defaults to the generator's natural domain.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// Width used to clamp infinite sides of the domain.
    #[arg(long, default_value_t = DEFAULT_SPAN)]
    span: f64,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum)]
    output: Option<Output>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepCmd {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 101)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Extra seeded random pairs on top of the uniform grid.
    #[arg(long, default_value_t = 0)]
    random_pairs: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ClassifyCmd {
    #[arg(long, required_unless_present = "samples_file", conflicts_with = "samples_file")]
    phi: Option<String>,
    #[arg(long, required_unless_present = "samples_file", conflicts_with = "samples_file")]
    psi: Option<String>,
    #[arg(long, default_value = "identity")]
    generator: String,
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SPAN)]
    span: f64,
    /// CSV with header `x,F,G` and strictly increasing x.
    #[arg(long)]
    samples_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    grid: usize,
    #[arg(long, default_value_t = 1e-6)]
    fit_tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct LocateCmd {
    #[arg(long)]
    phi: String,
    #[arg(long)]
    psi: String,
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, allow_hyphen_values = true)]
    b: f64,
    /// Domain of phi and psi; defaults to the real line.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    #[arg(long, default_value_t = DEFAULT_ROOT_GRID)]
    grid: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct CounterexampleCmd {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    c1: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    c2: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 101)]
    samples: usize,
    /// Support scan resolution.
    #[arg(long, default_value_t = 1000)]
    grid: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

/// Entry point used by the binary.
pub fn run() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_from(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

/// Parses `args` and runs one command, writing to the given streams.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_INPUT;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Verify(cmd) => cmd_verify(&cmd, stdout),
        Command::Classify(cmd) => cmd_classify(&cmd, stdout),
        Command::Locate(cmd) => cmd_locate(&cmd, stdout, stderr),
        Command::Counterexample(cmd) => cmd_counterexample(&cmd, stdout),
        Command::Grid(cmd) => cmd_grid(&cmd, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INPUT
        }
    }
}

/// Domain as declared and the finite window actually scanned.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
struct Scan {
    domain: Interval,
    window: Interval,
    clamped: bool,
}

impl Scan {
    fn new(domain: Interval, span: f64) -> Result<Scan> {
        if !(span > 0.0 && span.is_finite()) {
            return Err(Error::InvalidPlan(format!("span must be positive, got {span}")));
        }
        let window = finite_window(&domain, span);
        Ok(Scan {
            domain,
            window,
            clamped: window != domain,
        })
    }

    fn note(&self) -> Option<String> {
        self.clamped
            .then(|| format!("domain {} clamped to window {}", self.domain, self.window))
    }
}

fn parse_domain(text: Option<&str>) -> Result<Option<Interval>> {
    text.map(Interval::parse).transpose()
}

struct Problem {
    phi: Func1D,
    psi: Func1D,
    gen: Generator,
    scan: Scan,
}

fn problem(phi: &str, psi: &str, generator: &str, domain: Option<&str>, span: f64) -> Result<Problem> {
    let gen = Generator::resolve(generator, parse_domain(domain)?)?;
    let e = *gen.domain();
    Ok(Problem {
        phi: Func1D::parse(phi, e)?,
        psi: Func1D::parse(psi, e)?,
        scan: Scan::new(e, span)?,
        gen,
    })
}

fn sweep_setup(cmd: &SweepCmd) -> Result<(Problem, QuasiArithmeticMean, SamplePlan)> {
    let p = &cmd.pair;
    let prob = problem(&p.phi, &p.psi, &p.generator, p.domain.as_deref(), p.span)?;
    let q = QuasiArithmeticMean::new(prob.gen.clone(), MeanWeights::new(cmd.alpha)?);
    let mut plan = SamplePlan::uniform(prob.scan.window, cmd.samples);
    if cmd.random_pairs > 0 {
        plan = plan.with_random_pairs(cmd.random_pairs, cmd.seed);
    }
    plan.validate()?;
    Ok((prob, q, plan))
}

/// Writes to `--out` when given, else to stdout.
fn emit(out: &OutputArgs, stdout: &mut dyn Write, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match &out.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write(&mut w)?;
            w.flush()?;
        }
        None => write(stdout)?,
    }
    Ok(())
}

fn write_json<T: Serialize>(w: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

fn human_residual(w: &mut dyn Write, report: &ResidualReport) -> io::Result<()> {
    let verdict = if report.pass { "pass" } else { "fail" };
    writeln!(
        w,
        "{verdict}: max scaled residual {:.3e} over {} pairs (tol {:.1e})",
        report.max_scaled, report.count, report.tolerance
    )?;
    if !report.pass {
        let (x, y) = report.argmax_pair;
        writeln!(w, "witness: x = {x}, y = {y}")?;
    }
    if let Some(e) = &report.error {
        writeln!(w, "evaluation error: {e}")?;
    }
    Ok(())
}

fn cmd_verify(cmd: &SweepCmd, stdout: &mut dyn Write) -> Result<i32> {
    let (prob, q, plan) = sweep_setup(cmd)?;
    let report = verify_grid(&prob.phi, &prob.psi, &q, &plan, cmd.tol)?;
    emit(&cmd.output, stdout, |w| match cmd.output.output.unwrap_or(Output::Json) {
        Output::Json => write_json(
            w,
            &json!({
                "generator": prob.gen.name(),
                "alpha": cmd.alpha,
                "scan": prob.scan,
                "report": report,
            }),
        ),
        Output::Human => {
            if let Some(n) = prob.scan.note() {
                writeln!(w, "{n}")?;
            }
            Ok(human_residual(w, &report)?)
        }
        Output::Csv => write_residual_csv(w, &prob.phi, &prob.psi, &q, &plan).map(|_| ()),
    })?;
    Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_grid(cmd: &SweepCmd, stdout: &mut dyn Write) -> Result<i32> {
    let (prob, q, plan) = sweep_setup(cmd)?;
    match cmd.output.output.unwrap_or(Output::Csv) {
        Output::Csv => {}
        other => {
            return Err(Error::InvalidPlan(format!("grid only writes csv, got {other:?}")));
        }
    }
    emit(&cmd.output, stdout, |w| {
        write_residual_csv(w, &prob.phi, &prob.psi, &q, &plan).map(|_| ())
    })?;
    Ok(EXIT_OK)
}

fn cmd_classify(cmd: &ClassifyCmd, stdout: &mut dyn Write) -> Result<i32> {
    let opts = ClassifyOptions {
        grid_n: cmd.grid,
        fit_tol: cmd.fit_tol,
        ..ClassifyOptions::default()
    };
    let report = match (&cmd.samples_file, &cmd.phi, &cmd.psi) {
        (Some(path), _, _) => {
            let (f, g) = read_sample_pair(File::open(path)?)?;
            let window = *f.domain();
            let mut report = classify_pair(&f, &g, &window, &opts)?;
            report.notes.push(format!("sample-backed pair from {}", path.display()));
            report
        }
        (None, Some(phi), Some(psi)) => {
            let prob = problem(phi, psi, &cmd.generator, cmd.domain.as_deref(), cmd.span)?;
            let mut report = classify_original(&prob.phi, &prob.psi, &prob.gen, &prob.scan.window, &opts)?;
            if let Some(n) = prob.scan.note() {
                report.notes.push(n);
            }
            report
        }
        _ => return Err(Error::InvalidPlan("need --phi and --psi, or --samples-file".into())),
    };
    emit(&cmd.output, stdout, |w| match cmd.output.output.unwrap_or(Output::Json) {
        Output::Json => write_json(w, &report),
        Output::Human => {
            writeln!(w, "case: {:?}", report.case)?;
            if let Some(mu) = report.mu {
                writeln!(w, "mu: {mu}")?;
            }
            if let (Some(cf), Some(cg)) = (report.coeffs_f, report.coeffs_g) {
                writeln!(w, "coefficients of phi: {cf:?}")?;
                writeln!(w, "coefficients of psi: {cg:?}")?;
            }
            for d in &report.per_interval_dependence {
                writeln!(w, "f = {} g on {}", d.c, d.interval)?;
            }
            for n in &report.notes {
                writeln!(w, "note: {n}")?;
            }
            Ok(())
        }
        Output::Csv => Err(Error::InvalidPlan("classify writes json or human output".into())),
    })?;
    Ok(if report.case == Verdict::Indeterminate { EXIT_FAIL } else { EXIT_OK })
}

fn cmd_locate(cmd: &LocateCmd, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let domain = parse_domain(cmd.domain.as_deref())?.unwrap_or_else(Interval::real_line);
    if !(cmd.a < cmd.b) || cmd.a < domain.lo() || cmd.b > domain.hi() {
        return Err(Error::InvalidPlan(format!(
            "need a < b inside the domain {domain}, got a = {}, b = {}",
            cmd.a, cmd.b
        )));
    }
    let phi = Func1D::parse(&cmd.phi, domain)?;
    let psi = Func1D::parse(&cmd.psi, domain)?;
    let points = match locate_mean_points(&phi, &psi, cmd.a, cmd.b, cmd.grid) {
        Ok(p) => p,
        Err(e @ Error::NoSignChange { .. }) => {
            writeln!(stderr, "note: {e}")?;
            return Ok(EXIT_FAIL);
        }
        Err(e) => return Err(e),
    };
    emit(&cmd.output, stdout, |w| match cmd.output.output.unwrap_or(Output::Human) {
        Output::Json => write_json(w, &points),
        Output::Human | Output::Csv => {
            match &points {
                MeanPoints::Roots(roots) => {
                    for r in roots {
                        writeln!(w, "{r:.10}")?;
                    }
                }
                MeanPoints::IdenticallyZero => {
                    writeln!(w, "identically zero residual: every point of ({}, {}) is a mean value point", cmd.a, cmd.b)?;
                }
            }
            Ok(())
        }
    })?;
    Ok(EXIT_OK)
}

fn cmd_counterexample(cmd: &CounterexampleCmd, stdout: &mut dyn Write) -> Result<i32> {
    let pair = counterexample_pair(cmd.c1, cmd.c2);
    let window = Interval::new(0.0, 1.0)?;
    let q = QuasiArithmeticMean::new(Generator::identity(window), MeanWeights::new(cmd.alpha)?);
    let plan = SamplePlan::uniform(window, cmd.samples);
    let report = verify_grid(&pair.f, &pair.g, &q, &plan, cmd.tol)?;
    let tau = ClassifyOptions::default().tau_rel;
    let u_f = decompose_support(|x| pair.f.deriv1(x), &window, cmd.grid, tau)?;
    let u_g = decompose_support(|x| pair.g.deriv1(x), &window, cmd.grid, tau)?;
    let disjoint = !u_f.is_empty() && !u_g.is_empty() && !u_f.overlaps(&u_g);
    emit(&cmd.output, stdout, |w| match cmd.output.output.unwrap_or(Output::Json) {
        Output::Json => write_json(
            w,
            &json!({
                "c1": cmd.c1,
                "c2": cmd.c2,
                "alpha": cmd.alpha,
                "report": report,
                "supportF": u_f,
                "supportG": u_g,
                "supportsDisjoint": disjoint,
            }),
        ),
        Output::Human | Output::Csv => {
            human_residual(w, &report)?;
            let show = |s: &crate::classify::SupportDecomposition| {
                s.intervals.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ∪ ")
            };
            writeln!(w, "U_f = {}", show(&u_f))?;
            writeln!(w, "U_g = {}", show(&u_g))?;
            writeln!(w, "supports disjoint: {disjoint}")?;
            Ok(())
        }
    })?;
    Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
}
