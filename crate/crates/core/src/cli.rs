//! Command-line front end.
//!
//! Every command writes one deterministic artifact to `--out` as CSV (LF line
//! endings, one header row, shortest round-trip floats) or JSON (sorted keys).
//!
//! | command     | output                                                      |
//! |-------------|-------------------------------------------------------------|
//! | `locus`     | `theta,re,im` per sample; flagged samples print `NaN`       |
//! | `region`    | `re,im,stable` per raster cell, rows by increasing `im`     |
//! | `solve`     | `t,x0,x1,...` per step, then a `diverged,<bool>` footer      |
//! | `order`     | `steps,delta,error,q`; `q` is empty on the first row        |
//! | `magnitude` | `row,col,magnitude` per pooled cell, then `score,<value>`   |
//! | `compare`   | `method,steps,final_error,max_norm,diverged` per method     |
//!
//! Diffusion schedules (`--schedule`) are JSON arrays of α values with index 0
//! the most noised step and the last entry `α_0`; without one a 50-step
//! subsample of the linear β schedule (1e-4 to 0.02 over 1000 steps) is used.
//! The diffusion problem integrates the exact noise predictor for Gaussian
//! data `N(0.5, 0.25)` in `(x̄, σ̄)` coordinates on the schedule's own `σ̄`
//! grid, or on a uniform `σ̄` grid with `--grid uniform`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array3;
use serde_json::{json, Value};

use crate::analysis::{
    convergence_study, formal_order, magnitude_score, pooled_magnitudes, MagnitudeConfig, MAX_ORDER_CHECK,
};
use crate::diffusion::{ode_field_from_noise, AlphaSchedule, Coords, GaussianData};
use crate::error::Error;
use crate::methods::{integrate, integrate_on_grid, linear_multistep_form, MethodSpec, Trajectory};
use crate::problems::{test_equation, toy_2x2, Problem};
use crate::stability::{locus, stability_raster};

#[derive(Parser, Debug)]
#[command(name = "momentum-lmm", version, about = "Momentum linear multistep solvers and their stability analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Boundary locus of a method.
    Locus {
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long, default_value_t = 1024)]
        samples: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Stability raster over a rectangle of the complex plane.
    Region {
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
        re_min: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        re_max: f64,
        #[arg(long, default_value_t = -2.5, allow_hyphen_values = true)]
        im_min: f64,
        #[arg(long, default_value_t = 2.5, allow_hyphen_values = true)]
        im_max: f64,
        /// Grid points per axis.
        #[arg(long, default_value_t = 101)]
        resolution: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Integrate a problem and write the trajectory.
    Solve {
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Empirical convergence order over a step-count sweep.
    Order {
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        steps: Vec<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Thresholded magnitude score of an H×W×C grid stored as nested JSON arrays.
    Magnitude {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 3.0)]
        tau: f64,
        #[arg(long, default_value_t = 4)]
        pool: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        means: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        stds: Option<Vec<f64>>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Final errors of several methods on one problem.
    Compare {
        /// Comma list of labels: euler, ab2, ghvb1.8, hb2@0.8, nesterov1@0.5, interp3@0.4.
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<String>,
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Ab,
    Euler,
    Hb,
    Ghvb,
    Nesterov,
    Interp,
}

#[derive(Args, Debug)]
struct MethodArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// GHVB momentum number, e.g. 1.8.
    #[arg(long)]
    momentum: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ProblemKind {
    Toy2x2,
    TestEq,
    Diffusion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GridKind {
    Schedule,
    Uniform,
}

#[derive(Args, Debug)]
struct ProblemArgs {
    #[arg(long, value_enum, default_value = "toy2x2")]
    problem: ProblemKind,
    /// Test-equation rate.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    lambda: f64,
    /// Alpha schedule for the diffusion problem.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Step placement for the diffusion problem.
    #[arg(long, value_enum, default_value = "schedule")]
    grid: GridKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

/// Failure of a command: an argument problem (exit 2) or I/O (exit 1).
#[derive(Debug)]
enum Failure {
    Arg { flag: &'static str, message: String },
    Io(String),
}

fn arg_err(flag: &'static str, e: impl std::fmt::Display) -> Failure {
    Failure::Arg { flag, message: e.to_string() }
}

/// Parse `argv` (including the program name), run the command, return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(Failure::Arg { flag, message }) => {
            eprintln!("error: --{flag}: {message}");
            2
        }
        Err(Failure::Io(message)) => {
            eprintln!("error: {message}");
            1
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Locus { method, samples, output } => {
            let spec = method_spec(&method)?;
            let form = linear_multistep_form(&spec).map_err(|e| arg_err("family", e))?;
            let curve = locus(&form, samples).map_err(|e| arg_err("samples", e))?;
            let body = match output.format {
                Format::Csv => {
                    let mut s = String::from("theta,re,im\n");
                    for (t, z) in curve.thetas.iter().zip(&curve.values) {
                        let _ = writeln!(s, "{t},{},{}", z.re, z.im);
                    }
                    s
                }
                Format::Json => json_text(&json!({
                    "method": spec.label(),
                    "theta": curve.thetas,
                    "re": curve.values.iter().map(|z| z.re).collect::<Vec<_>>(),
                    "im": curve.values.iter().map(|z| z.im).collect::<Vec<_>>(),
                })),
            };
            write_out(&output.out, &body)
        }
        Command::Region { method, re_min, re_max, im_min, im_max, resolution, output } => {
            let spec = method_spec(&method)?;
            if !(re_min < re_max) {
                return Err(arg_err("re-min", format!("{re_min} must be below --re-max {re_max}")));
            }
            if !(im_min < im_max) {
                return Err(arg_err("im-min", format!("{im_min} must be below --im-max {im_max}")));
            }
            if resolution < 2 {
                return Err(arg_err("resolution", "need at least 2 points per axis"));
            }
            let form = linear_multistep_form(&spec).map_err(|e| arg_err("family", e))?;
            let raster = stability_raster(&form, (re_min, re_max), (im_min, im_max), (resolution, resolution))
                .map_err(|e| Failure::Io(e.to_string()))?;
            let body = match output.format {
                Format::Csv => {
                    let mut s = String::from("re,im,stable\n");
                    for (r, im) in raster.im.iter().enumerate() {
                        for (c, re) in raster.re.iter().enumerate() {
                            let _ = writeln!(s, "{re},{im},{}", u8::from(raster.get(r, c)));
                        }
                    }
                    s
                }
                Format::Json => {
                    let rows: Vec<Vec<u8>> = (0..raster.im.len())
                        .map(|r| (0..raster.re.len()).map(|c| u8::from(raster.get(r, c))).collect())
                        .collect();
                    json_text(&json!({
                        "method": spec.label(),
                        "re": raster.re,
                        "im": raster.im,
                        "stable": rows,
                        "stable_fraction": raster.stable_fraction(),
                    }))
                }
            };
            write_out(&output.out, &body)
        }
        Command::Solve { method, problem, steps, output } => {
            let spec = method_spec(&method)?;
            let (traj, exact) = solve(&spec, &problem, steps)?;
            let body = match output.format {
                Format::Csv => {
                    let dim = traj.states.first().map_or(0, Vec::len);
                    let mut s = String::from("t");
                    for i in 0..dim {
                        let _ = write!(s, ",x{i}");
                    }
                    s.push('\n');
                    for (t, x) in traj.times.iter().zip(&traj.states) {
                        let _ = write!(s, "{t}");
                        for v in x {
                            let _ = write!(s, ",{v}");
                        }
                        s.push('\n');
                    }
                    let _ = writeln!(s, "diverged,{}", traj.diverged);
                    s
                }
                Format::Json => json_text(&json!({
                    "method": spec.label(),
                    "problem": problem_name(problem.problem),
                    "times": traj.times,
                    "states": traj.states,
                    "diverged": traj.diverged,
                    "final_error": exact.map(|e| final_error(&traj, &e)),
                })),
            };
            write_out(&output.out, &body)
        }
        Command::Order { method, problem, steps, output } => {
            let spec = method_spec(&method)?;
            if steps.len() < 2 || steps.contains(&0) {
                return Err(arg_err("steps", "need at least two positive step counts"));
            }
            if problem.problem == ProblemKind::Diffusion {
                return Err(arg_err("problem", "order supports toy2x2 and test-eq"));
            }
            let p = ode_problem(&problem)?;
            let study = convergence_study(&spec, &p, &steps).map_err(|e| arg_err("steps", e))?;
            let formal = linear_multistep_form(&spec)
                .ok()
                .and_then(|f| formal_order(&f, MAX_ORDER_CHECK).ok())
                .map(|r| r.formal_order);
            let body = match output.format {
                Format::Csv => {
                    let mut s = String::from("steps,delta,error,q\n");
                    for i in 0..study.steps.len() {
                        let q = if i == 0 { String::new() } else { study.orders[i - 1].to_string() };
                        let _ = writeln!(s, "{},{},{},{q}", study.steps[i], study.deltas[i], study.errors[i]);
                    }
                    s
                }
                Format::Json => json_text(&json!({
                    "method": spec.label(),
                    "problem": problem_name(problem.problem),
                    "steps": study.steps,
                    "deltas": study.deltas,
                    "errors": study.errors,
                    "q": study.orders,
                    "formal_order": formal,
                })),
            };
            write_out(&output.out, &body)
        }
        Command::Magnitude { input, tau, pool, means, stds, output } => {
            let text = fs::read_to_string(&input).map_err(|e| Failure::Io(format!("{}: {e}", input.display())))?;
            let grid = parse_grid(&text).map_err(|e| arg_err("input", e))?;
            let c = grid.dim().2;
            let means = means.unwrap_or_else(|| vec![0.0; c]);
            let stds = stds.unwrap_or_else(|| vec![1.0; c]);
            if means.len() != c {
                return Err(arg_err("means", format!("{} values for {c} channels", means.len())));
            }
            if stds.len() != c {
                return Err(arg_err("stds", format!("{} values for {c} channels", stds.len())));
            }
            let cfg = MagnitudeConfig::new(tau, pool, means, stds).map_err(|e| arg_err("tau", e))?;
            let pooled = pooled_magnitudes(grid.view(), &cfg).map_err(|e| arg_err("pool", e))?;
            let score = magnitude_score(grid.view(), &cfg).map_err(|e| arg_err("pool", e))?;
            let body = match output.format {
                Format::Csv => {
                    let mut s = String::from("row,col,magnitude\n");
                    for ((r, c), v) in pooled.indexed_iter() {
                        let _ = writeln!(s, "{r},{c},{v}");
                    }
                    let _ = writeln!(s, "score,{score}");
                    s
                }
                Format::Json => {
                    let rows: Vec<Vec<f64>> = pooled.outer_iter().map(|r| r.to_vec()).collect();
                    json_text(&json!({ "pooled": rows, "score": score, "tau": tau, "pool": pool }))
                }
            };
            write_out(&output.out, &body)
        }
        Command::Compare { methods, problem, steps, output } => {
            let mut rows = Vec::new();
            for label in &methods {
                let spec = parse_method_label(label).map_err(|e| arg_err("methods", e))?;
                let (traj, exact) = solve(&spec, &problem, steps)?;
                let err = exact.map(|e| final_error(&traj, &e));
                rows.push((spec.label(), traj.len() - 1, err, traj.max_norm(), traj.diverged));
            }
            let body = match output.format {
                Format::Csv => {
                    let mut s = String::from("method,steps,final_error,max_norm,diverged\n");
                    for (m, n, e, mx, d) in &rows {
                        let e = e.map(|v| v.to_string()).unwrap_or_default();
                        let _ = writeln!(s, "{m},{n},{e},{mx},{d}");
                    }
                    s
                }
                Format::Json => json_text(&Value::Array(
                    rows.iter()
                        .map(|(m, n, e, mx, d)| {
                            json!({ "method": m, "steps": n, "final_error": e, "max_norm": mx, "diverged": d })
                        })
                        .collect(),
                )),
            };
            write_out(&output.out, &body)
        }
    }
}

fn method_spec(m: &MethodArgs) -> Result<MethodSpec, Failure> {
    let need_beta = |m: &MethodArgs| m.beta.ok_or_else(|| arg_err("beta", "required for this family"));
    let spec = match m.family {
        FamilyArg::Euler => MethodSpec::euler(),
        FamilyArg::Ab => MethodSpec::ab(m.order.unwrap_or(1)),
        FamilyArg::Hb => MethodSpec::heavy_ball(m.order.unwrap_or(1), need_beta(m)?),
        FamilyArg::Nesterov => MethodSpec::nesterov(m.order.unwrap_or(1), need_beta(m)?),
        FamilyArg::Interp => MethodSpec::interp_ab(m.order.unwrap_or(2), need_beta(m)?),
        FamilyArg::Ghvb => match (m.momentum, m.order, m.beta) {
            (Some(x), None, None) => MethodSpec::ghvb_momentum(x).map_err(|e| arg_err("momentum", e))?,
            (Some(_), _, _) => return Err(arg_err("momentum", "cannot be combined with --order or --beta")),
            (None, Some(r), Some(b)) => MethodSpec::ghvb(r, b),
            (None, _, _) => return Err(arg_err("momentum", "required for ghvb (or give --order and --beta)")),
        },
    };
    if m.momentum.is_some() && m.family != FamilyArg::Ghvb {
        return Err(arg_err("momentum", "only applies to --family ghvb"));
    }
    spec.validate().map_err(|e| match e {
        Error::UnsupportedOrder(_) => arg_err("order", e),
        Error::InvalidBeta(_) => arg_err("beta", e),
        _ => arg_err("momentum", e),
    })?;
    Ok(spec)
}

/// Parse a method label of the form produced by [`MethodSpec::label`].
fn parse_method_label(label: &str) -> Result<MethodSpec, String> {
    let bad = || format!("unrecognized method label `{label}`");
    let label = label.trim();
    let spec = if label == "euler" {
        MethodSpec::euler()
    } else if let Some(m) = label.strip_prefix("ghvb") {
        MethodSpec::ghvb_momentum(m.parse().map_err(|_| bad())?).map_err(|e| e.to_string())?
    } else if let Some(r) = label.strip_prefix("ab") {
        MethodSpec::ab(r.parse().map_err(|_| bad())?)
    } else {
        let (head, beta) = label.split_once('@').ok_or_else(bad)?;
        let beta: f64 = beta.parse().map_err(|_| bad())?;
        let split = head.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?;
        let order: usize = head[split..].parse().map_err(|_| bad())?;
        match &head[..split] {
            "hb" => MethodSpec::heavy_ball(order, beta),
            "nesterov" => MethodSpec::nesterov(order, beta),
            "interp" => MethodSpec::interp_ab(order, beta),
            _ => return Err(bad()),
        }
    };
    spec.validate().map_err(|e| format!("{label}: {e}"))?;
    Ok(spec)
}

fn problem_name(p: ProblemKind) -> &'static str {
    match p {
        ProblemKind::Toy2x2 => "toy2x2",
        ProblemKind::TestEq => "test-eq",
        ProblemKind::Diffusion => "diffusion",
    }
}

fn ode_problem(args: &ProblemArgs) -> Result<Problem, Failure> {
    match args.problem {
        ProblemKind::Toy2x2 => Ok(toy_2x2()),
        ProblemKind::TestEq => {
            if !args.lambda.is_finite() {
                return Err(arg_err("lambda", "must be finite"));
            }
            Ok(test_equation(args.lambda, 1.0, 0.0, 1.0))
        }
        ProblemKind::Diffusion => Err(arg_err("problem", "diffusion is not a plain initial value problem")),
    }
}

type ExactState = Vec<f64>;

fn solve(
    spec: &MethodSpec,
    args: &ProblemArgs,
    steps: Option<usize>,
) -> Result<(Trajectory, Option<ExactState>), Failure> {
    if steps == Some(0) {
        return Err(arg_err("steps", "must be positive"));
    }
    if args.problem != ProblemKind::Diffusion {
        let p = ode_problem(args)?;
        let n = steps.unwrap_or(26);
        let traj = integrate(spec, &p, n).map_err(|e| arg_err("steps", e))?;
        let exact = p.exact(p.t1);
        return Ok((traj, exact));
    }
    let schedule = match &args.schedule {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            AlphaSchedule::from_json(&text).map_err(|e| arg_err("schedule", e))?
        }
        None => AlphaSchedule::linear_beta(1000, 1e-4, 0.02, 50).expect("valid default schedule"),
    };
    let sig = schedule.sigma_bar_grid();
    let (s_hi, s_lo) = (sig[0], sig[sig.len() - 1]);
    let grid = match args.grid {
        GridKind::Schedule => {
            if steps.is_some_and(|n| n != sig.len() - 1) {
                return Err(arg_err("steps", "the schedule grid fixes the step count; use --grid uniform"));
            }
            sig
        }
        GridKind::Uniform => {
            let n = steps.unwrap_or(sig.len() - 1);
            (0..=n).map(|i| s_hi + (s_lo - s_hi) * i as f64 / n as f64).collect()
        }
    };
    let data = GaussianData { mean: vec![0.5, 0.5], std: 0.5 };
    let x_t = [1.0, -1.0];
    let a_t = schedule.alphas()[0];
    let x0: Vec<f64> = x_t.iter().map(|v| v / a_t.sqrt()).collect();
    let field = ode_field_from_noise(data.clone(), Coords::Bar);
    let traj = integrate_on_grid(spec, &field, &x0, &grid).map_err(|e| arg_err("schedule", e))?;
    let exact = data.exact_flow(&x0, s_hi, s_lo);
    Ok((traj, Some(exact)))
}

fn final_error(traj: &Trajectory, exact: &[f64]) -> f64 {
    if traj.diverged {
        return f64::INFINITY;
    }
    traj.final_state().iter().zip(exact).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn parse_grid(text: &str) -> Result<Array3<f64>, String> {
    let nested: Vec<Vec<Vec<f64>>> = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let h = nested.len();
    let w = nested.first().map_or(0, Vec::len);
    let c = nested.first().and_then(|r| r.first()).map_or(0, Vec::len);
    if h == 0 || w == 0 || c == 0 {
        return Err("grid must be a non-empty H x W x C array".into());
    }
    let mut flat = Vec::with_capacity(h * w * c);
    for row in &nested {
        if row.len() != w {
            return Err("ragged grid rows".into());
        }
        for px in row {
            if px.len() != c {
                return Err("ragged grid channels".into());
            }
            flat.extend_from_slice(px);
        }
    }
    Array3::from_shape_vec((h, w, c), flat).map_err(|e| e.to_string())
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn write_out(path: &Path, body: &str) -> Result<(), Failure> {
    fs::write(path, body).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for spec in [
            MethodSpec::euler(),
            MethodSpec::ab(3),
            MethodSpec::ghvb_momentum(1.8).unwrap(),
            MethodSpec::heavy_ball(2, 0.8),
            MethodSpec::nesterov(1, 0.5),
            MethodSpec::interp_ab(3, 0.4),
        ] {
            let parsed = parse_method_label(&spec.label()).unwrap();
            assert_eq!(parsed.family, spec.family);
            assert_eq!(parsed.order, spec.order);
            assert!((parsed.beta - spec.beta).abs() < 1e-12);
        }
        assert!(parse_method_label("rk4").is_err());
        assert!(parse_method_label("hb9@0.5").is_err());
        assert!(parse_method_label("ghvb7").is_err());
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid("[[[1,2],[3,4]],[[5,6],[7,8]]]").unwrap();
        assert_eq!(g.dim(), (2, 2, 2));
        assert_eq!(g[[1, 0, 1]], 6.0);
        assert!(parse_grid("[[[1,2],[3]]]").is_err());
        assert!(parse_grid("[]").is_err());
    }
}
