//! `dgauss` command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use dgauss::certify::{
    default_grid, run_check, run_suite, AxisSpec, CertReport, CheckId, ConstantLedger, DEFAULT_SEED,
};
use dgauss::fractional::{
    delta_kernel_ratio, kernel_a_mass, multiplier_reconstruct, p_multiplier, FracParams, GaussFamily,
};
use dgauss::lattice::{convolve_gauss, gauss_kernel_value, ConvolutionPlan, LatticeSignal};
use dgauss::multipliers::{gauss_multiplier_derivative, psi, psi_derivatives, psi_inv, MultiplierQuery, PsiValue};
use dgauss::seminorms::{jump_count, variation, SampledFamily};
use dgauss::theta::{theta1_time_derivative, theta_d, CertifiedValue, ScaleParam, TorusPoint, TruncationPolicy};
use dgauss::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "dgauss", version, about = "Discrete Gaussian kernels, multipliers and inequality certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// theta_t(zeta) (or a time derivative), or Theta_t(xi) in several dimensions.
    Theta(ThetaArgs),
    /// The Fourier multiplier F g_t(xi) or its t-derivatives.
    Multiplier(MultiplierArgs),
    /// The kernel value g_t(n) at a lattice point.
    Kernel(KernelArgs),
    /// Convolve a signal file with g_t.
    Convolve(ConvolveArgs),
    /// r-variation and lambda-jump count of a sampled family.
    Seminorm(SeminormArgs),
    /// Fractional-derivative kernel quantities.
    Frac(FracArgs),
    /// psi(t) = e^{-pi/t}, its inverse or its derivatives.
    Psi(PsiArgs),
    /// Run certification checks and write a report.
    Certify(CertifyArgs),
    /// Tabulate the multiplier over a grid of t.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct Precision {
    /// Absolute truncation target for series tails.
    #[arg(long, default_value_t = 1e-15)]
    eps: f64,
}

impl Precision {
    fn policy(&self) -> Result<TruncationPolicy> {
        TruncationPolicy::with_eps(self.eps)
    }
}

#[derive(Args, Debug)]
struct Frequency {
    /// Frequency coordinates on the torus, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "zeta")]
    xi: Option<Vec<f64>>,
    /// One frequency coordinate, repeated `--dim` times.
    #[arg(long, allow_hyphen_values = true)]
    zeta: Option<f64>,
    /// Dimension used with `--zeta`.
    #[arg(long, default_value_t = 1)]
    dim: usize,
}

impl Frequency {
    fn point(&self) -> Result<TorusPoint> {
        match (&self.xi, self.zeta) {
            (Some(xi), _) => TorusPoint::new(xi.clone()),
            (None, z) => TorusPoint::new(vec![z.unwrap_or(0.0); self.dim]),
        }
    }
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct ThetaArgs {
    /// Scale t > 0.
    #[arg(long)]
    t: f64,
    /// One-dimensional frequency.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "xi")]
    zeta: Option<f64>,
    /// Frequency in several dimensions (product of one-dimensional factors).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    xi: Option<Vec<f64>>,
    /// Order of the t-derivative (one-dimensional only).
    #[arg(long, default_value_t = 0)]
    deriv: usize,
    #[command(flatten)]
    precision: Precision,
    /// Print value and tail bound in this format instead of the bare value.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct MultiplierArgs {
    /// Scale t > 0.
    #[arg(long)]
    t: f64,
    #[command(flatten)]
    freq: Frequency,
    /// Order of the t-derivative.
    #[arg(long, default_value_t = 0)]
    deriv: usize,
    #[command(flatten)]
    precision: Precision,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct KernelArgs {
    /// Scale t > 0.
    #[arg(long)]
    t: f64,
    /// Lattice point, comma separated integers.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    xi: Vec<i64>,
    #[command(flatten)]
    precision: Precision,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct ConvolveArgs {
    /// Scale t > 0.
    #[arg(long)]
    t: f64,
    /// Input signal file.
    #[arg(long)]
    signal: PathBuf,
    /// Output signal file; the signal is printed when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Discarded kernel mass allowed by the direct truncation.
    #[arg(long, default_value_t = 1e-15)]
    eps: f64,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct SeminormArgs {
    /// Family file: one `time re [im]` line per sample, times increasing.
    #[arg(long)]
    signal: PathBuf,
    /// Variation exponent r >= 1.
    #[arg(long)]
    r: Option<f64>,
    /// Jump size lambda > 0.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct FracArgs {
    /// Fractional order in (0, 1).
    #[arg(long)]
    alpha: f64,
    /// Scale t > 0.
    #[arg(long)]
    t: f64,
    /// Increment w in (0, t/2] for the kernel difference ratio.
    #[arg(long)]
    w: Option<f64>,
    /// Frequency for p_t(xi) and the multiplier reconstruction.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    xi: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct PsiArgs {
    /// Evaluate psi and, with `--deriv`, its derivatives at t.
    #[arg(long, required_unless_present = "inv")]
    t: Option<f64>,
    /// Evaluate the inverse at `--u`.
    #[arg(long, requires = "u", conflicts_with = "t")]
    inv: bool,
    /// A value in (0, 1).
    #[arg(long)]
    u: Option<f64>,
    /// Highest derivative order.
    #[arg(long)]
    deriv: Option<usize>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct CertifyArgs {
    /// Named suite: all, explicit, empirical, or a single check name.
    #[arg(long, conflicts_with = "check")]
    suite: Option<String>,
    /// One check, optionally on a custom grid.
    #[arg(long)]
    check: Option<String>,
    /// t axis `start:stop:count[:log|:lin]` replacing the default (with `--check`).
    #[arg(long, requires = "check")]
    grid: Option<String>,
    /// Dimension list replacing the default (with `--check`).
    #[arg(long, value_delimiter = ',', requires = "check")]
    dim: Option<Vec<usize>>,
    /// Sampler seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Report file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    /// t axis `start:stop:count[:log|:lin]`.
    #[arg(long)]
    grid: String,
    #[command(flatten)]
    freq: Frequency,
    /// Order of the t-derivative.
    #[arg(long, default_value_t = 0)]
    deriv: usize,
    #[command(flatten)]
    precision: Precision,
    /// Output file; printed when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Clone, Copy)]
enum Field {
    Real(f64),
    Count(usize),
}

impl Field {
    fn text(self) -> String {
        match self {
            Field::Real(x) => num(x),
            Field::Count(n) => n.to_string(),
        }
    }

    fn json(self) -> serde_json::Value {
        match self {
            Field::Real(x) => json!(x),
            Field::Count(n) => json!(n),
        }
    }
}

/// Named values as `name value` lines, a JSON object or a two-row CSV table.
fn render(fields: &[(&str, Field)], format: Option<Format>) -> String {
    match format {
        None => fields.iter().map(|(k, v)| format!("{k} {}\n", v.text())).collect(),
        Some(Format::Json) => {
            let m: serde_json::Map<String, serde_json::Value> =
                fields.iter().map(|(k, v)| (k.to_string(), v.json())).collect();
            format!("{}\n", serde_json::Value::Object(m))
        }
        Some(Format::Csv) => {
            let head: Vec<&str> = fields.iter().map(|f| f.0).collect();
            let row: Vec<String> = fields.iter().map(|f| f.1.text()).collect();
            format!("{}\n{}\n", head.join(","), row.join(","))
        }
    }
}

fn render_value(c: CertifiedValue, format: Option<Format>) -> String {
    match format {
        None => format!("{}\n", num(c.value)),
        f => render(&[("value", Field::Real(c.value)), ("tail_bound", Field::Real(c.tail_bound))], f),
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidPolicy(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_family(path: &Path) -> Result<SampledFamily> {
    let text = std::fs::read_to_string(path)?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        let (t, v) = match f[..] {
            [t, re] => (t, Complex64::new(re, 0.0)),
            [t, re, im] => (t, Complex64::new(re, im)),
            _ => return Err(Error::Parse(format!("line {}: expected `time re [im]`", i + 1))),
        };
        times.push(t);
        values.push(v);
    }
    SampledFamily::new(times, values)
}

/// Run one subcommand; `Ok(true)` means an explicit check failed.
fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Theta(a) => {
            let pol = a.precision.policy()?;
            let t = ScaleParam::new(a.t)?;
            let v = match &a.xi {
                Some(xi) => {
                    if a.deriv > 0 {
                        return Err(Error::InvalidPolicy(
                            "t-derivatives are available for one-dimensional theta only".into(),
                        ));
                    }
                    theta_d(t, &TorusPoint::new(xi.clone())?, &pol)?
                }
                None => theta1_time_derivative(a.deriv, t, a.zeta.unwrap_or(0.0), &pol)?,
            };
            print!("{}", render_value(v, a.format));
        }
        Command::Multiplier(a) => {
            let q = MultiplierQuery::new(a.t, a.freq.point()?, a.precision.policy()?, a.deriv)?;
            print!("{}", render_value(gauss_multiplier_derivative(&q)?, a.format));
        }
        Command::Kernel(a) => {
            let v = gauss_kernel_value(ScaleParam::new(a.t)?, &a.xi, &a.precision.policy()?)?;
            print!("{}", render_value(v, a.format));
        }
        Command::Convolve(a) => {
            let f = LatticeSignal::read_file(&a.signal)?;
            let plan = ConvolutionPlan::direct(ScaleParam::new(a.t)?, TruncationPolicy::with_eps(a.eps)?, f.dim())?;
            let g = convolve_gauss(&f, &plan)?;
            match &a.out {
                Some(p) => {
                    g.write_file(p)?;
                    println!("error_bound {}", num(plan.error_bound(&f)));
                }
                None => print!("{}", g.to_text()),
            }
        }
        Command::Seminorm(a) => {
            if a.r.is_none() && a.lambda.is_none() {
                return Err(Error::InvalidPolicy("give --r, --lambda or both".into()));
            }
            let fam = read_family(&a.signal)?;
            let mut fields = Vec::new();
            if let Some(r) = a.r {
                fields.push(("variation", Field::Real(variation(&fam, r)?)));
            }
            if let Some(l) = a.lambda {
                fields.push(("jump_count", Field::Count(jump_count(&fam, l)?)));
            }
            print!("{}", render(&fields, a.format));
        }
        Command::Frac(a) => {
            let fp = FracParams::new(a.alpha)?;
            let mut fields = vec![("a_mass", Field::Real(kernel_a_mass(a.t, &fp)?.value))];
            if let Some(w) = a.w {
                fields.push(("delta_ratio", Field::Real(delta_kernel_ratio(a.t, w, &fp)?)));
            }
            if let Some(xi) = &a.xi {
                let x = TorusPoint::new(xi.clone())?;
                let g = GaussFamily::default();
                fields.push(("p", Field::Real(p_multiplier(&g, &fp, a.t, &x)?.value)));
                fields.push(("reconstruct", Field::Real(multiplier_reconstruct(&g, &fp, a.t, &x)?.value)));
            }
            print!("{}", render(&fields, a.format));
        }
        Command::Psi(a) => {
            if a.inv {
                let u = PsiValue::new(a.u.expect("clap requires --u"))?;
                println!("{}", num(psi_inv(u).get()));
            } else {
                let t = a.t.expect("clap requires --t");
                match a.deriv {
                    None => println!("{}", num(psi(ScaleParam::new(t)?)?.get())),
                    Some(n) => {
                        ScaleParam::new(t)?;
                        for (j, v) in psi_derivatives(n, t).into_iter().enumerate() {
                            println!("{j} {}", num(v));
                        }
                    }
                }
            }
        }
        Command::Certify(a) => {
            let ledger = ConstantLedger::standard();
            let report: CertReport = with_jobs(a.jobs, || -> Result<CertReport> {
                match &a.check {
                    Some(name) => {
                        let id = CheckId::parse(name)?;
                        let mut grid = default_grid(id).with_seed(a.seed);
                        if let Some(g) = &a.grid {
                            grid.t = AxisSpec::parse(g)?;
                        }
                        if let Some(d) = &a.dim {
                            grid.dims = d.clone();
                        }
                        let r = run_check(id, &grid, &ledger)?;
                        Ok(CertReport::merge(id.name(), a.seed, vec![r]))
                    }
                    None => run_suite(a.suite.as_deref().unwrap_or("all"), a.seed, &ledger),
                }
            })??;
            if let Some(p) = &a.out {
                let text = match a.format {
                    Format::Json => report.to_json(),
                    Format::Csv => report.to_csv()?,
                };
                std::fs::write(p, text)?;
            }
            print!("{}", report.summary_table());
            println!(
                "total {} failures {} explicit_failures {} errors {}",
                report.summary.total,
                report.summary.failures,
                report.explicit_failures(),
                report.summary.errors
            );
            return Ok(report.explicit_failures() > 0);
        }
        Command::Sweep(a) => {
            let axis = AxisSpec::parse(&a.grid)?;
            let xi = a.freq.point()?;
            let pol = a.precision.policy()?;
            let ts = axis.points();
            let rows = with_jobs(a.jobs, || -> Result<Vec<CertifiedValue>> {
                ts.par_iter()
                    .map(|&t| gauss_multiplier_derivative(&MultiplierQuery::new(t, xi.clone(), pol, a.deriv)?))
                    .collect()
            })??;
            let text = match a.format {
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    let io = |e: csv::Error| Error::Io(e.to_string());
                    w.write_record(["t", "value", "tail_bound"]).map_err(io)?;
                    for (t, c) in ts.iter().zip(&rows) {
                        w.write_record([num(*t), num(c.value), num(c.tail_bound)]).map_err(io)?;
                    }
                    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?)
                        .map_err(|e| Error::Io(e.to_string()))?
                }
                Format::Json => {
                    let rows: Vec<_> = ts
                        .iter()
                        .zip(&rows)
                        .map(|(t, c)| json!({"t": t, "value": c.value, "tail_bound": c.tail_bound}))
                        .collect();
                    let doc = json!({"xi": xi.coords(), "deriv": a.deriv, "rows": rows});
                    format!("{}\n", serde_json::to_string_pretty(&doc).expect("sweep serializes"))
                }
            };
            emit(&text, a.out.as_deref())?;
        }
    }
    Ok(false)
}

fn run(argv: impl IntoIterator<Item = OsString>) -> u8 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let code = match dispatch(cli.command) {
        Ok(false) => 0,
        Ok(true) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    let _ = std::io::stdout().flush();
    code
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
