//! Command-line interface.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use quadcusp::approx::ApproxFunction;
use quadcusp::catalog;
use quadcusp::conepoints::{counting_histogram, enumerate_isotropic, fit_exponent, ConeRegion, CuspPool, RegionShape};
use quadcusp::dioph::{approximants, check_lemma_aprox, critical_exponent_upper, default_shell_width, predicted_dimension, uniform_grid};
use quadcusp::excursion::{flow_and_record, flow_grid, generic_grid, rbeta_event_summary, sl_depth_identity, DepthPool, SlSlope};
use quadcusp::json::format_real;
use quadcusp::rational::{fmt_rat, parse_rat, Rat};
use quadcusp::ubiquity::{divergence_classifier, local_ubiquity_stabilized, measure_condition, u_regular_check, PowerDimension, UbiquitySpec};
use serde::Serialize;

use crate::config::{load_file, ConfigOverrides, ExperimentConfig, EXPERIMENTS};
use crate::experiments::load_form;
use crate::{run_experiment, HarnessError};

#[derive(Parser, Debug)]
#[command(name = "quadcusp", version, about = "Rational quadrics, cusps and Diophantine approximation experiments")]
pub struct Cli {
    /// Worker threads (0 uses all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct FormArgs {
    /// Catalog name (circle, sphere, split22, sphere<n>, normal<p>_<q>) or inline form text.
    #[arg(long)]
    pub form: Option<String>,
    #[arg(long)]
    pub qmax: Option<i64>,
    /// Chart region: `box:LO:HI` or `cap:CENTER:ANGLE` with comma-separated coordinates.
    #[arg(long)]
    pub region: Option<String>,
    /// Half-width of the centered chart box.
    #[arg(long)]
    pub patch: Option<f64>,
    #[arg(long)]
    pub base: Option<f64>,
    #[arg(long)]
    pub kmin: Option<i64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct FlowArgs {
    /// Comma-separated rationals.
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List primitive cone vectors with last coordinate up to q_max.
    Enumerate(FormArgs),
    /// Dyadic counting histogram.
    Count(FormArgs),
    /// Fitted counting exponent.
    Fit(FormArgs),
    /// Closed-form geometry checks.
    VerifyGeometry {
        #[command(flatten)]
        form: FormArgs,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Approximants, the rigidity check and the dimension crossover.
    #[command(subcommand)]
    Dioph(DiophCommand),
    /// Regularity, local ubiquity and the divergence classifier.
    #[command(subcommand)]
    Ubiquity(UbiquityCommand),
    /// Cusp-depth traces along geodesics and the SL depth identity.
    #[command(subcommand)]
    Excursion(ExcursionCommand),
    /// Run an acceptance experiment, or `all`.
    Run {
        experiment: Option<String>,
        /// TOML overrides or a manifest.json from a previous run.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        form: FormArgs,
        #[command(flatten)]
        flow: FlowArgs,
        #[arg(long)]
        alpha: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
pub enum DiophCommand {
    /// Approximants of a point of the quadric.
    Approximants {
        #[command(flatten)]
        form: FormArgs,
        /// Point of the quadric, comma-separated.
        #[arg(long)]
        point: String,
        #[arg(long, default_value = "2")]
        alpha: String,
    },
    /// Exhaustive rigidity scan for psi(q) = q^-alpha.
    AproxCheck {
        #[command(flatten)]
        form: FormArgs,
        #[arg(long, default_value = "1/2")]
        alpha: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Critical exponent from shell sums.
    Crossover {
        #[command(flatten)]
        form: FormArgs,
        #[arg(long, default_value = "2")]
        alpha: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum UbiquityCommand {
    /// Regularity of rho and the measure condition.
    Check {
        #[command(flatten)]
        form: FormArgs,
        #[arg(long, default_value_t = 2.0)]
        kappa: f64,
    },
    /// Local ubiquity constant over random balls.
    Kappa {
        #[command(flatten)]
        form: FormArgs,
        #[arg(long, default_value_t = 2.0)]
        kappa: f64,
        #[arg(long, default_value_t = 0.2)]
        r1: f64,
        #[arg(long, default_value_t = 50)]
        balls: usize,
    },
    /// Divergence verdict for psi(q) = q^-alpha at dimension s.
    Classify {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        s: String,
        #[arg(long, default_value_t = 1)]
        delta: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SlopeArg {
    #[value(name = "1")]
    One,
    #[value(name = "n")]
    N,
}

#[derive(Subcommand, Debug)]
pub enum ExcursionCommand {
    /// Depth trace from one chart point, as CSV.
    Trace {
        #[command(flatten)]
        form: FormArgs,
        #[command(flatten)]
        flow: FlowArgs,
        /// Chart point, comma-separated.
        #[arg(long)]
        point: String,
    },
    /// Event summary over a generic grid of chart points.
    Grid {
        #[command(flatten)]
        form: FormArgs,
        #[command(flatten)]
        flow: FlowArgs,
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Both sides of the SL depth identity.
    SlIdentity {
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        p: String,
        #[arg(long, allow_hyphen_values = true)]
        q: i64,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, value_enum, default_value = "1")]
        slope: SlopeArg,
    },
}

fn reals(list: &str) -> Result<Vec<f64>, HarnessError> {
    list.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| HarnessError::Config(format!("`{x}`: {e}"))))
        .collect()
}

fn ints(list: &str) -> Result<Vec<i64>, HarnessError> {
    list.split(',')
        .map(|x| x.trim().parse::<i64>().map_err(|e| HarnessError::Config(format!("`{x}`: {e}"))))
        .collect()
}

fn rat_list(list: &str) -> Result<Vec<String>, HarnessError> {
    list.split(',')
        .map(|x| {
            parse_rat(x.trim())?;
            Ok(x.trim().to_string())
        })
        .collect()
}

fn one_rat(s: &str) -> Result<Rat, HarnessError> {
    Ok(parse_rat(s.trim())?)
}

pub fn parse_region(spec: &str) -> Result<RegionShape, HarnessError> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["box", lo, hi] => Ok(RegionShape::Box { lo: reals(lo)?, hi: reals(hi)? }),
        ["cap", c, a] => Ok(RegionShape::Cap { center: reals(c)?, max_angle: a.parse().map_err(|e| HarnessError::Config(format!("{e}")))? }),
        _ => Err(HarnessError::Config(format!("region `{spec}` is not box:LO:HI or cap:CENTER:ANGLE"))),
    }
}

struct Resolved {
    form: quadcusp::RatSymForm,
    frame: Arc<quadcusp::CuspFrame>,
    region: Option<ConeRegion>,
    q_max: i64,
    base: f64,
}

fn resolve(args: &FormArgs, default_form: &str, default_qmax: i64, default_patch: Option<f64>) -> Result<Resolved, HarnessError> {
    let form = load_form(args.form.as_deref().unwrap_or(default_form))?;
    let frame = Arc::new(catalog::standard_frame(&form)?);
    let region = match (&args.region, args.patch.or(default_patch)) {
        (Some(spec), _) => Some(ConeRegion::from_shape(frame.clone(), parse_region(spec)?)?),
        (None, Some(r)) => Some(ConeRegion::centered_box(frame.clone(), r)?),
        (None, None) => None,
    };
    Ok(Resolved { form, frame, region, q_max: args.qmax.unwrap_or(default_qmax), base: args.base.unwrap_or(2.0) })
}

fn print_json<T: Serialize>(value: &T) -> Result<(), HarnessError> {
    println!("{}", serde_json::to_string_pretty(value).map_err(|e| HarnessError::Io(e.to_string()))?);
    Ok(())
}

fn write_or_print(out: &Option<PathBuf>, name: &str, body: &str) -> Result<(), HarnessError> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), body)?;
            Ok(())
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn overrides(seed: Option<u64>, form: &FormArgs, flow: &FlowArgs, alpha: &Option<String>) -> Result<ConfigOverrides, HarnessError> {
    Ok(ConfigOverrides {
        seed,
        forms: form.form.clone().map(|f| vec![f]),
        q_max: form.qmax.map(|q| vec![q]),
        patch: form.patch.map(|p| vec![p]),
        base: form.base,
        k_min: form.kmin,
        alpha: alpha.as_deref().map(rat_list).transpose()?,
        beta: flow.beta.as_deref().map(rat_list).transpose()?,
        t_max: flow.tmax,
        dt: flow.dt,
        ..Default::default()
    })
}

fn merge(file: ConfigOverrides, cli: ConfigOverrides) -> ConfigOverrides {
    macro_rules! pick {
        ($($f:ident),*) => { ConfigOverrides { $( $f: cli.$f.or(file.$f), )* } };
    }
    pick!(experiment, seed, forms, q_max, patch, base, k_min, alpha, beta, shell_width, t_max, dt, samples, instances, kappa, r1, balls)
}

/// Runs experiments and prints one line per check; returns whether all passed.
fn run_named(names: &[String], file: Option<ConfigOverrides>, cli: ConfigOverrides, out: &std::path::Path) -> Result<bool, HarnessError> {
    let mut all = true;
    for name in names {
        let o = merge(file.clone().unwrap_or_default(), cli.clone());
        let cfg = ExperimentConfig::resolve(Some(name), &o)?;
        let outcome = run_experiment(&cfg, out)?;
        for line in outcome.summary_lines() {
            println!("{line}");
        }
        all &= outcome.pass;
    }
    Ok(all)
}

/// Executes the command and returns whether every acceptance check passed.
pub fn execute(cli: Cli) -> Result<bool, HarnessError> {
    if cli.threads > 0 {
        // A pool may already exist when called repeatedly in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let seed = cli.seed.unwrap_or(1);
    let out = cli.out.clone();
    match cli.command {
        Command::Enumerate(args) => {
            let r = resolve(&args, "circle", 64, None)?;
            let pts = enumerate_isotropic(&r.form, r.q_max, r.region.as_ref())?;
            let s = r.form.dim();
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record((0..s).map(|i| format!("x{i}")))?;
            for v in &pts {
                w.write_record(v.coords().iter().map(|c| c.to_string()))?;
            }
            let body = String::from_utf8(w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?).expect("csv is utf-8");
            write_or_print(&out, "points.csv", &body)?;
            Ok(true)
        }
        Command::Count(args) => {
            let r = resolve(&args, "circle", 1 << 10, Some(1.0))?;
            let pts = enumerate_isotropic(&r.form, r.q_max, r.region.as_ref())?;
            let hist = counting_histogram(&pts, r.base, r.region.as_ref(), r.q_max)?;
            let mut body = String::from("k,count\n");
            for (k, n) in hist.bins.iter().enumerate() {
                body.push_str(&format!("{k},{n}\n"));
            }
            if out.is_some() {
                write_or_print(&out, "histogram.csv", &body)?;
            }
            print_json(&hist)?;
            Ok(true)
        }
        Command::Fit(args) => {
            let r = resolve(&args, "circle", 1 << 10, Some(1.0))?;
            let pts = enumerate_isotropic(&r.form, r.q_max, r.region.as_ref())?;
            let hist = counting_histogram(&pts, r.base, r.region.as_ref(), r.q_max)?;
            let k_min = args.kmin.or(hist.default_k_min()).ok_or(quadcusp::Error::TooFewBins(0))?;
            let (slope, r2) = fit_exponent(&hist, k_min)?;
            #[derive(Serialize)]
            struct Fit {
                k_min: i64,
                slope: quadcusp::json::Real,
                r2: quadcusp::json::Real,
                expected: usize,
            }
            print_json(&Fit { k_min, slope: quadcusp::json::Real(slope), r2: quadcusp::json::Real(r2), expected: r.form.dim() - 2 })?;
            Ok(true)
        }
        Command::VerifyGeometry { form, config } => {
            let file = config.as_deref().map(load_file).transpose()?;
            let o = overrides(cli.seed, &form, &FlowArgs::default(), &None)?;
            run_named(&["geometry".to_string()], file, o, &out.unwrap_or_else(|| PathBuf::from("out")))
        }
        Command::Run { experiment, config, form, flow, alpha } => {
            let file = config.as_deref().map(load_file).transpose()?;
            let name = experiment
                .or_else(|| file.as_ref().and_then(|f| f.experiment.clone()))
                .ok_or_else(|| HarnessError::Config("name an experiment or `all`".into()))?;
            let names: Vec<String> = if name == "all" { EXPERIMENTS.iter().map(|s| s.to_string()).collect() } else { vec![name] };
            let mut file = file;
            if let Some(f) = file.as_mut() {
                f.experiment = None;
            }
            let o = overrides(cli.seed, &form, &flow, &alpha)?;
            run_named(&names, file, o, &out.unwrap_or_else(|| PathBuf::from("out")))
        }
        Command::Dioph(cmd) => match cmd {
            DiophCommand::Approximants { form, point, alpha } => {
                let r = resolve(&form, "circle", 500, None)?;
                let x = reals(&point)?;
                let pool = enumerate_isotropic(&r.form, r.q_max, r.region.as_ref())?;
                let psi = ApproxFunction::power(one_rat(&alpha)?)?;
                print_json(&approximants(&x, &psi, r.q_max, &pool))?;
                Ok(true)
            }
            DiophCommand::AproxCheck { form, alpha, trials } => {
                let r = resolve(&form, "circle", 500, None)?;
                let q = quadcusp::forms::desuspend_form(&r.form)?;
                let psi = ApproxFunction::power(one_rat(&alpha)?)?;
                match check_lemma_aprox(&q, &psi, r.q_max, trials, seed) {
                    Ok(rep) => {
                        print_json(&rep)?;
                        Ok(rep.pass)
                    }
                    Err(e @ quadcusp::Error::ApproxHypothesis(_)) => {
                        eprintln!("{e}");
                        Ok(false)
                    }
                    Err(e) => Err(e.into()),
                }
            }
            DiophCommand::Crossover { form, alpha } => {
                let r = resolve(&form, "circle", 1 << 10, Some(1.0))?;
                let region = r.region.ok_or_else(|| HarnessError::Config("crossover needs a chart box".into()))?;
                let pool = CuspPool::enumerate(r.frame.clone(), region, r.q_max)?;
                let psi = ApproxFunction::power(one_rat(&alpha)?)?;
                let t = 2.0 * std::f64::consts::SQRT_2 * r.base.ln();
                let report = critical_exponent_upper(&pool, &psi.to_weight_side()?, t, &uniform_grid(0.0, 1.5, 0.01))?;
                let predicted = predicted_dimension(&psi, r.form.dim() - 1)?;
                println!("predicted {}", fmt_rat(&predicted));
                print_json(&report)?;
                let ok = report.crossover.is_some_and(|c| (c - quadcusp::rational::to_f64(&predicted)).abs() <= 0.15);
                Ok(ok)
            }
        },
        Command::Ubiquity(cmd) => match cmd {
            UbiquityCommand::Check { form, kappa } => {
                let r = resolve(&form, "circle", 1 << 12, Some(1.0))?;
                let region = r.region.ok_or_else(|| HarnessError::Config("ubiquity needs a chart box".into()))?;
                let pool = Arc::new(CuspPool::enumerate(r.frame.clone(), region, r.q_max)?);
                let t = default_shell_width();
                let spec = UbiquitySpec::new(pool, UbiquitySpec::standard_rho(kappa)?, t, (-t / (2.0 * std::f64::consts::SQRT_2)).exp() * 1.01)?;
                let regular = u_regular_check(&spec, 1)?;
                let m = measure_condition(&spec, seed)?;
                println!("u-regular {regular}");
                print_json(&m)?;
                Ok(regular && m.holds)
            }
            UbiquityCommand::Kappa { form, kappa, r1, balls } => {
                let r = resolve(&form, "circle", 1 << 12, Some(1.0))?;
                let region = r.region.ok_or_else(|| HarnessError::Config("ubiquity needs a chart box".into()))?;
                let pool = Arc::new(CuspPool::enumerate(r.frame.clone(), region, r.q_max)?);
                let t = default_shell_width();
                let n_hi = (pool.complete_depth() / t).floor().max(0.0) as u32;
                let spec = UbiquitySpec::new(pool, UbiquitySpec::standard_rho(kappa)?, t, (-t / (2.0 * std::f64::consts::SQRT_2)).exp() * 1.01)?;
                let rep = local_ubiquity_stabilized(&spec, balls, 10 * balls, (3, n_hi), r1, seed)?;
                print_json(&rep)?;
                Ok(rep.kappa_hat.is_some_and(|k| k > 0.05) && rep.stabilized >= balls)
            }
            UbiquityCommand::Classify { alpha, s, delta } => {
                let psi = ApproxFunction::power(one_rat(&alpha)?)?.to_weight_side()?;
                let rho = UbiquitySpec::standard_rho(1.0)?;
                let c = divergence_classifier(&PowerDimension { s: one_rat(&s)? }, &psi, &rho, delta, default_shell_width())?;
                print_json(&c)?;
                Ok(true)
            }
        },
        Command::Excursion(cmd) => match cmd {
            ExcursionCommand::Trace { form, flow, point } => {
                let r = resolve(&form, "circle", 1 << 10, None)?;
                let pool = DepthPool::enumerate(r.frame.clone(), r.q_max)?;
                let beta = flow.beta.as_deref().map(one_rat).transpose()?.map_or(0.5, |b| quadcusp::rational::to_f64(&b));
                let tr = flow_and_record(&pool, &reals(&point)?, flow.tmax.unwrap_or(60.0), flow.dt.unwrap_or(0.05), beta)?;
                let mut body = String::from("t,depth,witness\n");
                for s in &tr.samples {
                    body.push_str(&format!("{},{},{}\n", format_real(s.t), format_real(s.depth), s.witness));
                }
                write_or_print(&out, "trace.csv", &body)?;
                if out.is_some() {
                    eprintln!("{} events, persistent {}", tr.events.len(), tr.persistent(beta));
                }
                Ok(true)
            }
            ExcursionCommand::Grid { form, flow, points } => {
                let r = resolve(&form, "circle", 1 << 10, None)?;
                let pool = DepthPool::enumerate(r.frame.clone(), r.q_max)?;
                let beta = flow.beta.as_deref().map(one_rat).transpose()?.map_or(0.99, |b| quadcusp::rational::to_f64(&b));
                let delta = r.frame.delta();
                let half = form.patch.unwrap_or(1.0);
                let per_axis = (points as f64).powf(1.0 / delta as f64).round().max(1.0) as usize;
                let traces = flow_grid(&pool, &generic_grid(delta, per_axis, -half, half), flow.tmax.unwrap_or(60.0), flow.dt.unwrap_or(0.05), beta)?;
                print_json(&rbeta_event_summary(&traces, beta))?;
                Ok(true)
            }
            ExcursionCommand::SlIdentity { x, p, q, t, slope } => {
                let slope = match slope {
                    SlopeArg::One => SlSlope::One,
                    SlopeArg::N => SlSlope::N,
                };
                let id = sl_depth_identity(&reals(&x)?, &ints(&p)?, q, t, slope)?;
                print_json(&id)?;
                Ok((id.closed_form - id.matrix_form).abs() <= 1e-9 * (1.0 + id.closed_form.abs()))
            }
        },
    }
}

/// Process entry: exit code 0 when every check passed, 1 when a check failed, 2 on errors.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
