//! `dirac`: batch front end for the spectral library.
//!
//! Exit codes: 0 success, 2 unreadable or malformed input, 3 numerical failure,
//! 1 for a failed `check` or an unwritable output.

mod check;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dirac::cauchy::SolverConfig;
use dirac::eigen::{evf, Problem, SpectralData};
use dirac::glreconstruct::reconstruct;
use dirac::halfaxis::{
    halfaxis_two_spectra_norming, linear_potential, model_finite_perturbation, surgery, weyl_m0, Flavor,
    HalfAxisProblem, ModelSpectrum,
};
use dirac::io;
use dirac::isospectral::{shift_finite_explicit, shift_finite_recurrent, IsoBase};
use dirac::twospectra::{norming_from_two_spectra, weyl_m, TwoSpectraInput};
use dirac::{Grid, PotentialMatrix};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "dirac", version, about = "Direct and inverse spectral problems for the 1D Dirac operator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Number of grid intervals.
    #[arg(long, default_value_t = 2048)]
    grid: usize,
    #[arg(long, default_value_t = -10, allow_hyphen_values = true)]
    nmin: i64,
    #[arg(long, default_value_t = 10, allow_hyphen_values = true)]
    nmax: i64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Truncation index N of infinite products and series.
    #[arg(long, default_value_t = 200)]
    trunc: i64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta: f64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Recurrent,
    Explicit,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "subcommand")]
enum Cmd {
    /// Eigenvalues and norming constants of L(Ω, α, β) on [0, π].
    Spectrum {
        /// `zero`, `sin` or a potential CSV (x,p,q).
        #[arg(long, default_value = "zero")]
        potential: String,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Norming constants from two spectra with a shared β.
    TwoSpectra {
        #[arg(long)]
        first: PathBuf,
        #[arg(long)]
        second: PathBuf,
        /// Treat the spectra as half-axis spectra.
        #[arg(long)]
        half_axis: bool,
        #[arg(long, default_value_t = 1e3)]
        mu_max: f64,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Potential with prescribed norming-constant shifts aₙ → aₙe^{−tₙ}.
    Isospectral {
        #[arg(long, default_value = "zero")]
        potential: String,
        /// TSequence JSON.
        #[arg(long)]
        shifts: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Recurrent)]
        method: Method,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Potential on [0, π] from spectral data.
    Reconstruct {
        #[arg(long)]
        spectrum: PathBuf,
        /// Allowed Gram defect of the reconstructed eigenfunctions, relative to max aₙ
        #[arg(long, default_value_t = 1e-6)]
        gram_tol: f64,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Remove, add or rescale spectral data of the half-axis Hermite model.
    Surgery {
        #[arg(long)]
        plan: PathBuf,
        /// `half_bc0` or `half_bc_pi2`.
        #[arg(long, default_value = "half_bc0")]
        flavor: String,
        #[arg(long, default_value_t = 12.0)]
        x_max: f64,
        /// Apply the updates one at a time instead of solving jointly.
        #[arg(long)]
        recurrent: bool,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Eigenvalue as a function of the left boundary angle γ.
    Evf {
        #[arg(long, default_value = "zero")]
        potential: String,
        #[arg(long, default_value_t = -1.5, allow_hyphen_values = true)]
        gamma_min: f64,
        #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
        gamma_max: f64,
        #[arg(long, default_value_t = 31)]
        samples: usize,
        /// Use the half-axis model instead of `--potential`.
        #[arg(long)]
        half_axis: bool,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Weyl function at λ = re + i·im.
    Weyl {
        #[arg(long, default_value = "zero")]
        potential: String,
        /// Second left angle ε of m(λ).
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2, allow_hyphen_values = true)]
        eps: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        re: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        im: f64,
        /// m₀ of the half-axis linear model.
        #[arg(long)]
        half_axis: bool,
        #[arg(long, default_value_t = 12.0)]
        x_max: f64,
        #[command(flatten)]
        #[serde(flatten)]
        common: Common,
    },
    /// Run the invariant suite.
    Check,
}

enum Failure {
    Input(String),
    Numeric(String),
    Output(String),
}

impl From<dirac::Error> for Failure {
    fn from(e: dirac::Error) -> Self {
        match e {
            dirac::Error::Parse(_) => Failure::Input(e.to_string()),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: dirac::Result<T>) -> Res<T> {
    r.map_err(|e| match e {
        dirac::Error::Parse(m) => Failure::Input(format!("{}: {m}", path.display())),
        other => other.into(),
    })
}

fn load_potential(spec: &str) -> Res<PotentialMatrix> {
    match spec {
        "zero" => Ok(PotentialMatrix::zero()),
        "sin" => Ok(PotentialMatrix::sin_q()),
        path => {
            let p = Path::new(path);
            in_file(p, io::parse_potential_csv(&read(p)?))
        }
    }
}

fn load_spectrum(path: &Path) -> Res<SpectralData> {
    in_file(path, io::parse_spectral_json(&read(path)?))
}

fn validate(c: &Common) -> Res<()> {
    if !(c.tol > 0.0) {
        return Err(Failure::Input(format!("--tol must be positive, got {}", c.tol)));
    }
    if c.nmin > c.nmax {
        return Err(Failure::Input(format!("empty index window [{}, {}]", c.nmin, c.nmax)));
    }
    if c.grid < 4 {
        return Err(Failure::Input("--grid needs at least 4 intervals".into()));
    }
    if c.trunc < 0 {
        return Err(Failure::Input("--trunc must be nonnegative".into()));
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct PotentialJson {
    x: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

fn potential_out(pot: &PotentialMatrix, grid: &Grid, format: Format) -> Res<String> {
    match format {
        Format::Csv => Ok(io::emit_potential_csv(pot, grid)?),
        Format::Json => {
            let (p, q) = pot.sample(grid)?;
            Ok(json(&PotentialJson { x: grid.nodes(), p, q }))
        }
    }
}

#[derive(Serialize)]
struct NormingOut {
    n: i64,
    a: f64,
}

fn spectrum_csv(s: &SpectralData) -> String {
    let mut out = String::from("n,lambda,a\n");
    for d in s.items.values() {
        let a = d.a.map(|a| format!("{a:.16e}")).unwrap_or_default();
        out.push_str(&format!("{},{:.16e},{a}\n", d.n, d.lambda));
    }
    out
}

fn run(cmd: &Cmd) -> Res<String> {
    match cmd {
        Cmd::Spectrum { potential, common: c } => {
            let pot = load_potential(potential)?;
            let prob = Problem::new(&pot, c.alpha, c.beta, &SolverConfig { m: c.grid })?;
            let s = prob.spectral_data(c.nmin, c.nmax, c.tol)?;
            Ok(match c.format {
                Format::Json => io::emit_spectral_json(&s),
                Format::Csv => spectrum_csv(&s),
            })
        }
        Cmd::TwoSpectra { first, second, half_axis, mu_max, common: c } => {
            let (a, b) = (load_spectrum(first)?, load_spectrum(second)?);
            let items: Vec<NormingOut> = if *half_axis {
                (c.nmin..=c.nmax)
                    .map(|n| Ok(NormingOut { n, a: halfaxis_two_spectra_norming(&a, &b, n, c.trunc, *mu_max)? }))
                    .collect::<Res<_>>()?
            } else {
                let input = TwoSpectraInput::new(a, b, c.trunc)?;
                (c.nmin..=c.nmax)
                    .map(|n| Ok(NormingOut { n, a: norming_from_two_spectra(&input, n)? }))
                    .collect::<Res<_>>()?
            };
            Ok(match c.format {
                Format::Json => json(&items),
                Format::Csv => {
                    let mut out = String::from("n,a\n");
                    for it in &items {
                        out.push_str(&format!("{},{:.16e}\n", it.n, it.a));
                    }
                    out
                }
            })
        }
        Cmd::Isospectral { potential, shifts, method, common: c } => {
            let pot = load_potential(potential)?;
            let t = in_file(shifts, io::parse_tsequence_json(&read(shifts)?))?;
            let base = IsoBase::new(&pot, c.alpha, c.nmin, c.nmax, &SolverConfig { m: c.grid })?;
            let r = match method {
                Method::Recurrent => shift_finite_recurrent(&base, &t)?,
                Method::Explicit => shift_finite_explicit(&base, &t)?,
            };
            potential_out(&r.omega_t, &base.grid, c.format)
        }
        Cmd::Reconstruct { spectrum, gram_tol, common: c } => {
            if !(*gram_tol > 0.0) {
                return Err(Failure::Input("--gram-tol must be positive".into()));
            }
            let data = load_spectrum(spectrum)?;
            let grid = Grid::unit(c.grid)?;
            let rec = reconstruct(&data, &grid, c.trunc, *gram_tol)?;
            potential_out(&rec.potential, &grid, c.format)
        }
        Cmd::Surgery { plan, flavor, x_max, recurrent, common: c } => {
            let flavor = match flavor.as_str() {
                "half_bc0" => Flavor::HalfBc0,
                "half_bc_pi2" => Flavor::HalfBcPi2,
                other => return Err(Failure::Input(format!("--flavor: unknown model `{other}`"))),
            };
            let plan = in_file(plan, io::parse_plan_json(&read(plan)?))?;
            let base = ModelSpectrum::new(flavor, c.nmin, c.nmax)?;
            let grid = Grid::new(0.0, *x_max, c.grid)?;
            let pot = if *recurrent {
                model_finite_perturbation(&base, &plan, &grid)?
            } else {
                surgery(&base, &plan, &grid)?.potential
            };
            potential_out(&pot, &grid, c.format)
        }
        Cmd::Evf { potential, gamma_min, gamma_max, samples, half_axis, common: c } => {
            if *samples < 2 || !(gamma_min < gamma_max) {
                return Err(Failure::Input("--samples must be at least 2 and gamma_min < gamma_max".into()));
            }
            let gammas: Vec<f64> = (0..*samples)
                .map(|i| gamma_min + (gamma_max - gamma_min) * i as f64 / (*samples - 1) as f64)
                .collect();
            let values: Vec<f64> = if *half_axis {
                let prob = HalfAxisProblem::model(12.0, c.grid.max(4096))?;
                gammas.iter().map(|g| prob.evf(*g, c.tol)).collect::<dirac::Result<_>>()?
            } else {
                let pot = load_potential(potential)?;
                let cfg = SolverConfig { m: c.grid };
                gammas.iter().map(|g| evf(&pot, c.beta, *g, c.tol, &cfg).map(|e| e.value)).collect::<dirac::Result<_>>()?
            };
            Ok(match c.format {
                Format::Csv => io::emit_columns_csv("gamma", &gammas, &[("lambda", &values)]),
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out<'a> {
                        gamma: &'a [f64],
                        lambda: &'a [f64],
                    }
                    json(&Out { gamma: &gammas, lambda: &values })
                }
            })
        }
        Cmd::Weyl { potential, eps, re, im, half_axis, x_max, common: c } => {
            let m = if *half_axis {
                weyl_m0(&linear_potential(*x_max), *re, *im, *x_max)?
            } else {
                let pot = load_potential(potential)?;
                weyl_m(&pot, c.alpha, *eps, c.beta, Complex64::new(*re, *im), &SolverConfig { m: c.grid })?.m_value
            };
            Ok(match c.format {
                Format::Csv => format!("re,im\n{:.16e},{:.16e}\n", m.re, m.im),
                Format::Json => {
                    #[derive(Serialize)]
                    struct Out {
                        re: f64,
                        im: f64,
                    }
                    json(&Out { re: m.re, im: m.im })
                }
            })
        }
        Cmd::Check => unreachable!("handled in main"),
    }
}

fn common(cmd: &Cmd) -> Option<&Common> {
    match cmd {
        Cmd::Spectrum { common, .. }
        | Cmd::TwoSpectra { common, .. }
        | Cmd::Isospectral { common, .. }
        | Cmd::Reconstruct { common, .. }
        | Cmd::Surgery { common, .. }
        | Cmd::Evf { common, .. }
        | Cmd::Weyl { common, .. } => Some(common),
        Cmd::Check => None,
    }
}

fn execute(cmd: &Cmd) -> Res<()> {
    let c = common(cmd).expect("check is handled separately");
    validate(c)?;
    let text = run(cmd)?;
    match &c.out {
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    return Err(Failure::Output(format!("stdout: {e}")));
                }
                _ => {}
            }
        }
        Some(path) => {
            let write = |p: &Path, s: &str| fs::write(p, s).map_err(|e| Failure::Output(format!("{}: {e}", p.display())));
            write(path, &text)?;
            let mut echo = path.clone().into_os_string();
            echo.push(".config.json");
            write(Path::new(&echo), &json(cmd))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Cmd::Check = cli.cmd {
        let (passed, total) = check::run_all();
        println!("{passed}/{total} checks passed");
        return if passed == total { ExitCode::SUCCESS } else { ExitCode::from(1) };
    }
    match execute(&cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Output(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
