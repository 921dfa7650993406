//! `fapchan`: command-line frontend for the FAP channel toolkit.
//!
//! Lengths are in μm and times in s; the numerics are unit-agnostic, so any
//! consistent unit system works.

mod svg;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use fapchan::infotheory::uniform_information_bracket;
use fapchan::montecarlo::fitted_sample_tail_rate;
use fapchan::{
    build_cdf, capacity_sweep, cauchy_capacity, classify_regime, interference_sweep, ks_statistic,
    log_pdf, log_spaced, mutual_information_uniform, noise_variance, sample_fap_batch,
    shaping_loss, summarize, tail_decay_rate, Capacity, Kernel, McConfig, Params, Quad,
};

use svg::{Plot, Scale, Series, Style};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_VALIDATION: u8 = 4;
const KS_PASS: f64 = 0.01;
const MIN_MC_SAMPLES: usize = 10_000;

#[derive(Parser, Debug)]
#[command(
    name = "fapchan",
    version,
    about = "Noise statistics, capacity and interference of the drift-diffusion FAP channel",
    after_help = "Lengths are in μm, times in s, velocities in μm/s and diffusion in μm²/s.\n\
                  Without drift (--drift 0) every command uses the Cauchy closed forms,\n\
                  whatever --kernel says."
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Transmitter-receiver distance λ (μm)
    #[arg(long, global = true, env = "FAPCHAN_LAMBDA", default_value_t = 10.0)]
    lambda: f64,
    /// Diffusion scale σ² = 2D (μm²/s) [default: 200]
    #[arg(long, global = true, env = "FAPCHAN_SIGMA2")]
    sigma2: Option<f64>,
    /// Diffusion coefficient D (μm²/s); sets σ² = 2D
    #[arg(long, global = true)]
    diffusion: Option<f64>,
    /// Drift velocity v toward the receiver (μm/s)
    #[arg(long, global = true, default_value_t = 0.0)]
    drift: f64,
    /// Peak amplitude constraint A (μm)
    #[arg(
        long,
        global = true,
        env = "FAPCHAN_AMPLITUDE",
        default_value_t = 200.0
    )]
    amplitude: f64,
    /// Noise kernel for drifted computations
    #[arg(long, global = true, env = "FAPCHAN_KERNEL", value_enum, ignore_case = true,
          default_value_t = KernelArg::Subordination)]
    kernel: KernelArg,
    /// Absolute quadrature tolerance
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Relative quadrature tolerance
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write an SVG plot here
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// Monte-Carlo seed
    #[arg(long, global = true, env = "FAPCHAN_SEED", default_value_t = 42)]
    seed: u64,
    /// Monte-Carlo sample count
    #[arg(long, global = true, default_value_t = 1_000_000)]
    samples: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum KernelArg {
    /// Closed form with the trailing exp(-z) factor
    Eq2,
    /// First-passage subordination law (normalized)
    Subordination,
    /// Zero-drift Cauchy law
    Cauchy,
}

impl From<KernelArg> for Kernel {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Eq2 => Kernel::ExactEq2,
            KernelArg::Subordination => Kernel::Subordination,
            KernelArg::Cauchy => Kernel::CauchyLimit,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate the noise density on a linear grid
    Pdf {
        #[arg(long, default_value_t = -200.0, allow_hyphen_values = true)]
        n_min: f64,
        #[arg(long, default_value_t = 200.0, allow_hyphen_values = true)]
        n_max: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
    /// Uniform-input information and capacity baselines across drift
    Capacity {
        /// Explicit drift grid, comma separated (overrides the log grid)
        #[arg(long, value_delimiter = ',')]
        v_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-3)]
        v_min: f64,
        #[arg(long, default_value_t = 20.0)]
        v_max: f64,
        #[arg(long, default_value_t = 40)]
        v_points: usize,
    },
    /// Interference probability P(|N| > r) across separation
    Interference {
        /// Explicit separation grid, comma separated (overrides the log grid)
        #[arg(long, value_delimiter = ',')]
        r_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0)]
        r_min: f64,
        #[arg(long, default_value_t = 1000.0)]
        r_max: f64,
        #[arg(long, default_value_t = 60)]
        r_points: usize,
        /// Drift values, comma separated
        #[arg(long, value_delimiter = ',', default_value = "0.1,5")]
        v_list: Vec<f64>,
        /// Leave out the zero-drift Cauchy baseline
        #[arg(long)]
        no_zero_drift: bool,
    },
    /// Sample the physical FAP and score both drifted kernels against it
    ValidateMc {
        #[arg(long, default_value_t = 200)]
        bins: usize,
    },
    /// Critical scale, Bessel argument and regime at one offset
    Regime {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        n: f64,
    },
    /// Shaping loss of the uniform input against the Cauchy baseline
    ShapingLoss,
}

#[derive(Debug)]
enum Failure {
    Core(fapchan::Error),
    Usage(String),
    Io(PathBuf, std::io::Error),
    Validation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            Failure::Core(_) | Failure::Usage(_) | Failure::Io(..) => EXIT_USAGE,
            Failure::Validation(_) => EXIT_VALIDATION,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Usage(m) | Failure::Validation(m) => f.write_str(m),
            Failure::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<fapchan::Error> for Failure {
    fn from(e: fapchan::Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

struct Setup {
    params: Params,
    kernel: Kernel,
    quad: Quad,
}

impl Setup {
    /// Drifted kernels are undefined at `v = 0`; the Cauchy law takes over.
    fn kernel_at(&self, v: f64) -> Kernel {
        if v == 0.0 {
            Kernel::CauchyLimit
        } else {
            self.kernel
        }
    }
}

fn explicit(matches: &ArgMatches, id: &str) -> bool {
    let here = matches.value_source(id) == Some(ValueSource::CommandLine);
    here || matches
        .subcommand()
        .is_some_and(|(_, sub)| sub.value_source(id) == Some(ValueSource::CommandLine))
}

fn setup(g: &GlobalArgs, matches: &ArgMatches) -> Outcome<Setup> {
    let from_flag_d = explicit(matches, "diffusion");
    if from_flag_d && explicit(matches, "sigma2") {
        return Err(Failure::Usage(
            "give either --sigma2 or --diffusion, not both".into(),
        ));
    }
    // a command-line flag beats FAPCHAN_SIGMA2
    let params = match (g.diffusion, g.sigma2) {
        (Some(d), _) if from_flag_d => Params::from_diffusion(g.lambda, d, g.drift)?,
        (_, Some(s)) => Params::new(g.lambda, s, g.drift)?,
        (Some(d), None) => Params::from_diffusion(g.lambda, d, g.drift)?,
        (None, None) => Params::new(g.lambda, 200.0, g.drift)?,
    };
    let defaults = Quad::default();
    let quad = Quad::new(
        g.abs_tol.unwrap_or(defaults.abs_tol),
        g.rel_tol.unwrap_or(defaults.rel_tol),
        defaults.max_subdivisions,
    )?;
    Ok(Setup {
        params,
        kernel: g.kernel.into(),
        quad,
    })
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_to(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Outcome {
    match out {
        Some(path) => write_to(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn log_grid(explicit: Option<Vec<f64>>, lo: f64, hi: f64, n: usize) -> Outcome<Vec<f64>> {
    match explicit {
        Some(g) if g.is_empty() => Err(Failure::Usage("empty grid".into())),
        Some(g) => Ok(g),
        None => Ok(log_spaced(lo, hi, n)?),
    }
}

fn cmd_pdf(s: &Setup, n_min: f64, n_max: f64, points: usize) -> Outcome<String> {
    if points < 2 || !n_min.is_finite() || !n_max.is_finite() || n_min >= n_max {
        return Err(Failure::Usage(format!(
            "need n-min < n-max and points >= 2, got {n_min}, {n_max}, {points}"
        )));
    }
    let kernel = s.kernel_at(s.params.drift());
    let step = (n_max - n_min) / (points - 1) as f64;
    let mut csv = String::from("n,pdf,log_pdf,z,regime\n");
    for i in 0..points {
        let n = if i + 1 == points {
            n_max
        } else {
            n_min + step * i as f64
        };
        let lp = log_pdf(&s.params, kernel, n)?;
        let regime = if s.params.drift() == 0.0 {
            "CauchyCore".to_string()
        } else {
            classify_regime(&s.params, n)?.kind.to_string()
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{regime}",
            num(n),
            num(lp.exp()),
            num(lp),
            num(s.params.bessel_argument(n))
        );
    }
    Ok(csv)
}

fn cmd_capacity(
    s: &Setup,
    cap: &Capacity,
    grid: &[f64],
    svg_path: Option<&Path>,
) -> Outcome<String> {
    let rows = capacity_sweep(&s.params, s.kernel, cap, grid, &s.quad)?;
    let mut csv = String::from("v,mi_exact_nats,c_gauss_nats,c_cauchy_nats,noise_variance,n_c\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            num(r.v),
            num(r.mi_exact_nats),
            num(r.c_gauss_nats),
            num(r.c_cauchy_nats),
            num(r.noise_variance),
            num(r.n_c)
        );
    }
    if let Some(path) = svg_path {
        let curve =
            |f: fn(&fapchan::CapacityRow) -> f64| rows.iter().map(|r| (r.v, f(r))).collect();
        let plot = Plot {
            title: format!(
                "Capacity transition (A = {}, λ = {})",
                cap.amplitude(),
                s.params.lambda()
            ),
            x_label: "drift v (μm/s)".into(),
            y_label: "nats".into(),
            x_scale: Scale::Log,
            y_scale: Scale::Linear,
            series: vec![
                Series {
                    label: format!("I uniform ({})", s.kernel),
                    points: curve(|r| r.mi_exact_nats),
                    style: Style::Solid,
                },
                Series {
                    label: "C Gauss".into(),
                    points: curve(|r| r.c_gauss_nats),
                    style: Style::Dashed,
                },
                Series {
                    label: "C Cauchy".into(),
                    points: curve(|r| r.c_cauchy_nats),
                    style: Style::Dotted,
                },
            ],
            markers: vec![],
        };
        write_to(path, &plot.render())?;
    }
    Ok(csv)
}

fn cmd_interference(
    s: &Setup,
    r_grid: &[f64],
    v_list: &[f64],
    svg_path: Option<&Path>,
) -> Outcome<String> {
    let rows = interference_sweep(&s.params, s.kernel, r_grid, v_list, &s.quad)?;
    let mut csv = String::from("v,r,p_int\n");
    for row in &rows {
        let _ = writeln!(csv, "{},{},{}", num(row.v), num(row.r), num(row.p_int));
    }
    if let Some(path) = svg_path {
        let series = v_list
            .iter()
            .map(|&v| Series {
                label: if v == 0.0 {
                    "v = 0 (Cauchy)".into()
                } else {
                    format!("v = {v}")
                },
                points: rows
                    .iter()
                    .filter(|p| p.v == v)
                    .map(|p| (p.r, p.p_int))
                    .collect(),
                style: if v == 0.0 {
                    Style::Dotted
                } else {
                    Style::Solid
                },
            })
            .collect();
        let markers = v_list
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|&v| {
                let n_c = s.params.sigma2() / v;
                (n_c, format!("n_c = {n_c}"))
            })
            .collect();
        let plot = Plot {
            title: format!("Interference probability ({})", s.kernel),
            x_label: "separation r (μm)".into(),
            y_label: "P(|N| > r)".into(),
            x_scale: Scale::Log,
            y_scale: Scale::Log,
            series,
            markers,
        };
        write_to(path, &plot.render())?;
    }
    Ok(csv)
}

fn cmd_regime(s: &Setup, n: f64) -> Outcome<String> {
    if s.params.drift() == 0.0 {
        return Ok("n_c=inf regime=CauchyCore(everywhere)\n".into());
    }
    let regime = classify_regime(&s.params, n)?;
    Ok(format!(
        "n_c={} z={} regime={}\n",
        s.params.critical_scale(),
        regime.z,
        regime.kind
    ))
}

fn cmd_shaping_loss(s: &Setup, cap: &Capacity) -> Outcome<(String, String)> {
    let lambda = s.params.lambda();
    let c_cauchy = cauchy_capacity(cap, lambda)?;
    let kernel = s.kernel_at(s.params.drift());
    let mi = mutual_information_uniform(&s.params, kernel, cap, &s.quad)?;
    let loss = shaping_loss(cap, lambda, mi)?;
    let (lo, hi) = uniform_information_bracket(cap, lambda);
    let mut text = String::new();
    let _ = writeln!(
        text,
        "kernel={kernel} v={} A={} lambda={lambda}",
        s.params.drift(),
        cap.amplitude()
    );
    let _ = writeln!(text, "asymptotic_nats={}", num(loss.asymptotic));
    let _ = writeln!(text, "numeric_nats={}", num(loss.numeric));
    let _ = writeln!(text, "mi_uniform_nats={}", num(mi));
    let _ = writeln!(text, "c_cauchy_nats={}", num(c_cauchy));
    let _ = writeln!(text, "bracket_nats=[{}, {}]", num(lo), num(hi));
    let csv = format!(
        "asymptotic_nats,numeric_nats,mi_uniform_nats,c_cauchy_nats,bracket_lo_nats,bracket_hi_nats\n{},{},{},{},{},{}\n",
        num(loss.asymptotic),
        num(loss.numeric),
        num(mi),
        num(c_cauchy),
        num(lo),
        num(hi)
    );
    Ok((text, csv))
}

struct McReport {
    text: String,
    histogram: String,
    best_ks: f64,
}

fn cmd_validate_mc(s: &Setup, samples: usize, seed: u64, bins: usize) -> Outcome<McReport> {
    if samples < MIN_MC_SAMPLES {
        return Err(Failure::Usage(format!(
            "validate-mc needs at least {MIN_MC_SAMPLES} samples"
        )));
    }
    if bins < 2 {
        return Err(Failure::Usage("need at least 2 histogram bins".into()));
    }
    let p = &s.params;
    let v = p.drift();
    let mut xs = sample_fap_batch(p, &McConfig::new(samples, seed)?);
    xs.sort_by(|a, b| a.total_cmp(b));

    let half_width = if v > 0.0 {
        (5.0 * p.critical_scale()).min(1000.0)
    } else {
        500.0
    }
    .max(10.0 * p.lambda());
    let edges: Vec<f64> = (0..=bins)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / bins as f64)
        .collect();
    let stats = summarize(&xs, &edges, &[p.lambda()])?;

    let mut t = String::new();
    let _ = writeln!(t, "# FAP Monte-Carlo validation");
    let _ = writeln!(
        t,
        "lambda={} sigma2={} v={} samples={samples} seed={seed}",
        p.lambda(),
        p.sigma2(),
        v
    );
    let _ = writeln!(t, "n_c={}", p.critical_scale());
    let _ = writeln!(t, "median_abs={}", num(stats.median_abs));
    let _ = writeln!(
        t,
        "quartiles=[{}, {}]",
        num(stats.quartiles.0),
        num(stats.quartiles.1)
    );

    let best_ks;
    if v == 0.0 {
        let cauchy = build_cdf(p, Kernel::CauchyLimit, &s.quad)?;
        let ks = ks_statistic(&xs, &cauchy)?;
        best_ks = ks;
        let _ = writeln!(t, "mass_cauchy={}", num(cauchy.total_mass()));
        let _ = writeln!(t, "ks_cauchy={}", num(ks));
        let _ = writeln!(
            t,
            "empirical_variance={} (no finite variance without drift)",
            num(stats.variance)
        );
        let _ = writeln!(t, "verdict=cauchy");
    } else {
        let sub = build_cdf(p, Kernel::Subordination, &s.quad)?;
        let eq2 = build_cdf(p, Kernel::ExactEq2, &s.quad)?;
        let ks_sub = ks_statistic(&xs, &sub)?;
        // Eq2 does not integrate to one; score the shape after rescaling
        let ks_eq2 = ks_statistic(&xs, &eq2.renormalized())?;
        let analytic = p.sigma2() * p.lambda() / v;
        let numeric = noise_variance(p, Kernel::Subordination, &s.quad)?;
        let _ = writeln!(t, "mass_subordination={}", num(sub.total_mass()));
        let _ = writeln!(t, "mass_eq2={}", num(eq2.total_mass()));
        let _ = writeln!(t, "ks_subordination={}", num(ks_sub));
        let _ = writeln!(t, "ks_eq2_renormalized={}", num(ks_eq2));
        let _ = writeln!(t, "empirical_variance={}", num(stats.variance));
        let _ = writeln!(t, "analytic_variance={}", num(analytic));
        let _ = writeln!(t, "quadrature_variance_subordination={}", num(numeric));
        let _ = writeln!(
            t,
            "variance_relative_error={}",
            num(stats.variance / analytic - 1.0)
        );
        let (from, to) = (2.0 * p.critical_scale(), 6.0 * p.critical_scale());
        let fitted = fitted_sample_tail_rate(&xs, from, to, 20);
        let _ = writeln!(
            t,
            "tail_rate_fit[{from}, {to}]={}",
            fitted.map(num).unwrap_or_else(|| "n/a".into())
        );
        let _ = writeln!(
            t,
            "tail_rate_eq2={}",
            num(tail_decay_rate(p, Kernel::ExactEq2)?)
        );
        let _ = writeln!(
            t,
            "tail_rate_subordination={}",
            num(tail_decay_rate(p, Kernel::Subordination)?)
        );
        let (winner, ks) = if ks_sub <= ks_eq2 {
            ("subordination", ks_sub)
        } else {
            ("eq2", ks_eq2)
        };
        best_ks = ks;
        let _ = writeln!(t, "verdict={winner}");
    }
    let status = if best_ks < KS_PASS { "PASS" } else { "FAIL" };
    let _ = writeln!(
        t,
        "best_ks={} threshold={KS_PASS} status={status}",
        num(best_ks)
    );

    let mut h = String::from("bin_lo,bin_hi,count,empirical_density\n");
    let n = stats.count as f64;
    for (i, &count) in stats.counts.iter().enumerate() {
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            edges[i - 1]
        };
        let hi = edges.get(i).copied().unwrap_or(f64::INFINITY);
        let density = if lo.is_finite() && hi.is_finite() {
            count as f64 / (n * (hi - lo))
        } else {
            0.0
        };
        let _ = writeln!(h, "{},{},{count},{}", num(lo), num(hi), num(density));
    }
    Ok(McReport {
        text: t,
        histogram: h,
        best_ks,
    })
}

fn run(cli: Cli, matches: &ArgMatches) -> Outcome {
    let g = &cli.global;
    let s = setup(g, matches)?;
    let cap = || Capacity::new(g.amplitude).map_err(Failure::from);
    match cli.command {
        Command::Pdf {
            n_min,
            n_max,
            points,
        } => emit(&g.out, &cmd_pdf(&s, n_min, n_max, points)?),
        Command::Capacity {
            v_grid,
            v_min,
            v_max,
            v_points,
        } => {
            let grid = log_grid(v_grid, v_min, v_max, v_points)?;
            emit(&g.out, &cmd_capacity(&s, &cap()?, &grid, g.svg.as_deref())?)
        }
        Command::Interference {
            r_grid,
            r_min,
            r_max,
            r_points,
            v_list,
            no_zero_drift,
        } => {
            let r = log_grid(r_grid, r_min, r_max, r_points)?;
            let mut vs: Vec<f64> = if no_zero_drift { vec![] } else { vec![0.0] };
            vs.extend(v_list.into_iter().filter(|&v| no_zero_drift || v != 0.0));
            emit(&g.out, &cmd_interference(&s, &r, &vs, g.svg.as_deref())?)
        }
        Command::ValidateMc { bins } => {
            let report = cmd_validate_mc(&s, g.samples, g.seed, bins)?;
            print!("{}", report.text);
            if let Some(path) = &g.out {
                write_to(path, &report.histogram)?;
            }
            if report.best_ks >= KS_PASS {
                return Err(Failure::Validation(format!(
                    "best KS distance {} is not below {KS_PASS}",
                    report.best_ks
                )));
            }
            Ok(())
        }
        Command::Regime { n } => emit(&g.out, &cmd_regime(&s, n)?),
        Command::ShapingLoss => {
            let (text, csv) = cmd_shaping_loss(&s, &cap()?)?;
            print!("{text}");
            match &g.out {
                Some(path) => write_to(path, &csv),
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli, &matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fapchan: {f}");
            ExitCode::from(f.code())
        }
    }
}
