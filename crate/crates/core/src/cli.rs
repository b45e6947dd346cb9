//! Command-line front end for the `rolling` binary.
//!
//! Exit statuses: 0 success, 1 rejected verdict (report still written),
//! 2 input error, 3 numeric failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve::{curve_from_spec, SampledCurve};
use crate::error::{Error, Result};
use crate::existence::{
    exists_by_curvature, exists_general, extract_euclidean_isometry, loop_check, loop_in_q, ExistenceVerdict, TOL_CURV,
    TOL_GEN, TOL_LOOP,
};
use crate::frenet::{frenet_apparatus, reparametrize_arclength, EPS_REG, UNIT_SPEED_TOL};
use crate::geometry::{check_model, manifold_from_spec, Manifold, ManifoldRef, Point};
use crate::integrate::{IntegratorOptions, DEFAULT_STEPS};
use crate::report::{float, Report};
use crate::rolling::{compose_rollings, roll_along, verify_rolling, RollingTrajectory};
use crate::synthesis::{backend_euclidean, backend_sphere, backend_su2, synthesize_curve, synthesize_rolling, CurvatureProfile};
use crate::transport::{antidevelop, develop};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Default residual bound for `roll --verify` and `compose`.
pub const TOL_VERIFY: f64 = 1e-6;
/// Largest orthogonality defect `check-model` accepts for `Γ_k`.
pub const TOL_MODEL: f64 = 1e-10;
/// Largest deviation from the metric's Levi-Civita symbols `check-model` accepts.
pub const TOL_LEVI_CIVITA: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "rolling", version, about = "Rolling of Riemannian manifolds without slipping or twisting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Anti-develop a curve into ℝⁿ.
    Antidev(AntidevArgs),
    /// Develop an ℝⁿ curve onto a manifold.
    Develop(DevelopArgs),
    /// Roll M̂ along a curve on M.
    Roll(RollArgs),
    /// Frenet frames and geodesic curvatures of a curve.
    Frenet(FrenetArgs),
    /// Build a curve from its curvatures, or a rolling from Frenet data.
    Synth(SynthArgs),
    /// Decide whether a rolling relates two curves.
    Exists(ExistsArgs),
    /// Loop diagnostics on a surface, or loops in the configuration space.
    Loopcheck(LoopArgs),
    /// Compose two rolling trajectories.
    Compose(ComposeArgs),
    /// Check the frame and connection data of a manifold model.
    CheckModel(CheckModelArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StepArgs {
    /// RK4 step size; overrides --steps.
    #[arg(long = "step")]
    pub h: Option<f64>,
    /// Number of RK4 steps over the curve's parameter interval.
    #[arg(long)]
    pub steps: Option<usize>,
}

impl StepArgs {
    pub fn options(&self) -> IntegratorOptions {
        IntegratorOptions {
            steps: self.steps,
            h: self.h,
        }
    }

    fn record(&self, r: &mut Report) {
        let s = r.section("tolerances");
        match (self.h, self.steps) {
            (Some(h), _) => s.set("step", h),
            (None, Some(n)) => s.set("steps", n),
            (None, None) => s.set("steps", DEFAULT_STEPS),
        };
    }
}

#[derive(Debug, Clone, Args)]
pub struct AntidevArgs {
    #[arg(long)]
    pub manifold: String,
    /// Builtin `family:key=value,...` or a curve CSV.
    #[arg(long)]
    pub curve: String,
    /// Initial parallel frame: `identity` or n² row-major entries.
    #[arg(long, default_value = "identity")]
    pub r0: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub step: StepArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DevelopArgs {
    #[arg(long)]
    pub manifold: String,
    /// Curve in ℝⁿ: builtin or CSV.
    #[arg(long)]
    pub curve: String,
    /// Starting point in chart coordinates (comma separated).
    #[arg(long, allow_hyphen_values = true)]
    pub xi0: Option<String>,
    #[arg(long, default_value = "identity")]
    pub r0: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub step: StepArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RollArgs {
    #[arg(long)]
    pub manifold: String,
    #[arg(long)]
    pub manifold_hat: String,
    #[arg(long)]
    pub curve: String,
    /// Initial contact isometry in frame components: `identity` or n² row-major entries.
    #[arg(long, default_value = "identity")]
    pub q0: String,
    /// Starting point on M̂.
    #[arg(long, allow_hyphen_values = true)]
    pub xi_hat0: Option<String>,
    /// Measure the no-slip and no-twist residuals of the result.
    #[arg(long)]
    pub verify: bool,
    #[arg(long, default_value_t = 4)]
    pub probes: usize,
    #[arg(long, default_value_t = TOL_VERIFY)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub step: StepArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FrenetArgs {
    #[arg(long)]
    pub manifold: String,
    #[arg(long)]
    pub curve: String,
    /// Reparametrize by arc length first.
    #[arg(long)]
    pub reparametrize: bool,
    #[arg(long, default_value_t = EPS_REG)]
    pub eps_reg: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Generic,
    Euclidean,
    Sphere,
    Su2,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub manifold_hat: String,
    /// Curvature profile CSV (`t,kappa_1,...`).
    #[arg(long, conflicts_with_all = ["kappa", "curve"])]
    pub profile: Option<PathBuf>,
    /// Constant curvatures, comma separated; needs --length.
    #[arg(long, allow_hyphen_values = true, requires = "length")]
    pub kappa: Option<String>,
    #[arg(long)]
    pub length: Option<f64>,
    /// Synthesize the rolling along this curve on --manifold instead.
    #[arg(long, requires = "manifold")]
    pub curve: Option<String>,
    #[arg(long)]
    pub manifold: Option<String>,
    #[arg(long, value_enum, default_value_t = Backend::Generic)]
    pub backend: Backend,
    #[arg(long, allow_hyphen_values = true)]
    pub xi_hat0: Option<String>,
    /// Initial Frenet frame of the curve (or q0 in rolling mode).
    #[arg(long, default_value = "identity")]
    pub a0: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub step: StepArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExistsMode {
    /// Compare geodesic curvatures.
    Curvature,
    /// Compare anti-developments up to a rotation.
    General,
    /// Fit a rigid motion between two Euclidean curves.
    Isometry,
}

#[derive(Debug, Clone, Args)]
pub struct ExistsArgs {
    #[arg(long, value_enum, default_value_t = ExistsMode::General)]
    pub mode: ExistsMode,
    #[arg(long, default_value = "euclidean:3")]
    pub manifold: String,
    /// Defaults to --manifold.
    #[arg(long)]
    pub manifold_hat: Option<String>,
    #[arg(long)]
    pub curve: String,
    #[arg(long)]
    pub curve_hat: String,
    /// Acceptance tolerance; defaults depend on the mode.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub step: StepArgs,
}

#[derive(Debug, Clone, Args)]
pub struct LoopArgs {
    #[arg(long)]
    pub manifold: String,
    #[arg(long)]
    pub curve: String,
    /// With --curve-hat, test for a loop in the configuration space.
    #[arg(long, requires = "curve_hat")]
    pub manifold_hat: Option<String>,
    #[arg(long, requires = "manifold_hat")]
    pub curve_hat: Option<String>,
    #[arg(long, default_value_t = TOL_LOOP)]
    pub tol: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub step: StepArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ComposeArgs {
    #[arg(long)]
    pub first: PathBuf,
    #[arg(long)]
    pub second: PathBuf,
    #[arg(long, default_value_t = TOL_VERIFY)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckModelArgs {
    #[arg(long)]
    pub manifold: String,
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    /// Radius of the sampling ball around the base point.
    #[arg(long, default_value_t = 0.5)]
    pub radius: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub fd_step: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Report plus exit status of a finished command.
#[derive(Debug)]
pub struct Outcome {
    pub status: i32,
    pub report: Report,
}

impl Outcome {
    fn new(status: i32, report: Report) -> Self {
        Self { status, report }
    }
}

/// Exit status for an error.
pub fn error_status(e: &Error) -> i32 {
    if e.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_INPUT
    }
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli.command) {
        Ok(out) => {
            print!("{}", out.report.render());
            out.status
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_status(&e)
        }
    }
}

/// Runs one command, writing its output files and report.
pub fn run(cmd: &Command) -> Result<Outcome> {
    let (out, path) = match cmd {
        Command::Antidev(a) => (cmd_antidev(a)?, &a.report),
        Command::Develop(a) => (cmd_develop(a)?, &a.report),
        Command::Roll(a) => (cmd_roll(a)?, &a.report),
        Command::Frenet(a) => (cmd_frenet(a)?, &a.report),
        Command::Synth(a) => (cmd_synth(a)?, &a.report),
        Command::Exists(a) => (cmd_exists(a)?, &a.report),
        Command::Loopcheck(a) => (cmd_loop(a)?, &a.report),
        Command::Compose(a) => (cmd_compose(a)?, &a.report),
        Command::CheckModel(a) => (cmd_check_model(a)?, &a.report),
    };
    if let Some(p) = path {
        out.report.write(p)?;
    }
    Ok(out)
}

/// Parses comma- or whitespace-separated numbers.
pub fn parse_vector(s: &str) -> Result<DVector<f64>> {
    let vals: Vec<f64> = s
        .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{p}`"))))
        .collect::<Result<_>>()?;
    if vals.is_empty() {
        return Err(Error::Parse(format!("empty vector `{s}`")));
    }
    Ok(DVector::from_vec(vals))
}

/// `identity` or `n²` row-major entries.
pub fn parse_matrix(s: &str, n: usize) -> Result<DMatrix<f64>> {
    if s.trim() == "identity" {
        return Ok(DMatrix::identity(n, n));
    }
    let v = parse_vector(s)?;
    if v.len() != n * n {
        return Err(Error::InvalidDimension(format!("matrix has {} entries, expected {}", v.len(), n * n)));
    }
    Ok(DMatrix::from_row_slice(n, n, v.as_slice()))
}

/// Base point used when none is given: the identity of SU(2), `(0, 1)` in
/// the half-plane and the chart origin otherwise.
pub fn default_point(m: &dyn Manifold) -> Point {
    let name = m.name();
    let mut p = DVector::zeros(m.coord_dim());
    if name == "su2" {
        p[0] = 1.0;
    } else if name.starts_with("hyperbolic") {
        p[1] = 1.0;
    }
    p
}

fn point_arg(m: &dyn Manifold, arg: &Option<String>) -> Result<Point> {
    let p = match arg {
        Some(s) => parse_vector(s)?,
        None => default_point(m),
    };
    if p.len() != m.coord_dim() {
        return Err(Error::InvalidDimension(format!(
            "point has {} coordinates, {} needs {}",
            p.len(),
            m.name(),
            m.coord_dim()
        )));
    }
    Ok(p)
}

fn load_curve(m: Option<&dyn Manifold>, spec: &str) -> Result<SampledCurve> {
    let c = curve_from_spec(spec)?;
    if let Some(m) = m {
        if c.coord_dim() != m.coord_dim() {
            return Err(Error::InvalidDimension(format!(
                "curve `{spec}` has {} coordinates, {} needs {}",
                c.coord_dim(),
                m.name(),
                m.coord_dim()
            )));
        }
    }
    Ok(c)
}

fn manifold(spec: &str) -> Result<ManifoldRef> {
    manifold_from_spec(spec)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_antidev(a: &AntidevArgs) -> Result<Outcome> {
    let m = manifold(&a.manifold)?;
    let c = load_curve(Some(m.as_ref()), &a.curve)?;
    let r0 = parse_matrix(&a.r0, m.dim())?;
    let ad = antidevelop(m.as_ref(), &c, Some(&r0), &a.step.options())?;
    if let Some(p) = &a.out {
        ad.to_curve()?.write_csv(p)?;
    }
    let mut r = Report::new();
    r.set("command", "antidev")
        .set("manifold", m.name())
        .set("samples", ad.t.len())
        .set("y_end", ad.y.last().unwrap())
        .set("r_end", ad.r.last().unwrap());
    a.step.record(&mut r);
    Ok(Outcome::new(EXIT_OK, r))
}

fn cmd_develop(a: &DevelopArgs) -> Result<Outcome> {
    let m = manifold(&a.manifold)?;
    let y = load_curve(None, &a.curve)?;
    if y.coord_dim() != m.dim() {
        return Err(Error::InvalidDimension(format!("ℝ^{} curve for a {}-manifold", y.coord_dim(), m.dim())));
    }
    let xi0 = point_arg(m.as_ref(), &a.xi0)?;
    let r0 = parse_matrix(&a.r0, m.dim())?;
    let d = develop(m.as_ref(), &y, &xi0, Some(&r0), &a.step.options())?;
    if let Some(p) = &a.out {
        d.to_curve()?.write_csv(p)?;
    }
    let mut r = Report::new();
    r.set("command", "develop")
        .set("manifold", m.name())
        .set("samples", d.t.len())
        .set("complete", d.exit.is_none())
        .set("xi_end", d.xi.last().unwrap());
    if let Some(t) = d.exit {
        r.set("chart_exit", t);
    }
    a.step.record(&mut r);
    Ok(Outcome::new(if d.exit.is_some() { EXIT_NUMERIC } else { EXIT_OK }, r))
}

fn trajectory_report(r: &mut Report, traj: &RollingTrajectory) {
    r.set("samples", traj.len())
        .set("complete", traj.exit.is_none())
        .set("xi_hat_end", traj.xi_hat.last().unwrap())
        .set("q_end", traj.q.last().unwrap());
    if let Some(t) = traj.exit {
        r.set("chart_exit", t);
    }
}

fn cmd_roll(a: &RollArgs) -> Result<Outcome> {
    let m = manifold(&a.manifold)?;
    let mh = manifold(&a.manifold_hat)?;
    let x = load_curve(Some(m.as_ref()), &a.curve)?;
    let q0 = parse_matrix(&a.q0, m.dim())?;
    let xh0 = point_arg(mh.as_ref(), &a.xi_hat0)?;
    let traj = roll_along(m.as_ref(), mh.as_ref(), &x, &q0, &xh0, &a.step.options())?;
    if let Some(p) = &a.out {
        traj.write_csv(p)?;
    }
    let mut r = Report::new();
    r.set("command", "roll").set("manifold", m.name()).set("manifold_hat", mh.name());
    trajectory_report(&mut r, &traj);
    a.step.record(&mut r);
    let mut status = if traj.exit.is_some() { EXIT_NUMERIC } else { EXIT_OK };
    if a.verify && traj.len() >= 5 {
        let rep = verify_rolling(m.as_ref(), mh.as_ref(), &traj, a.probes)?;
        let passes = rep.passes(a.tol);
        r.section("verify")
            .set("passes", passes)
            .set("no_slip", rep.no_slip)
            .set("no_twist", rep.no_twist)
            .set("so_drift", rep.so_drift)
            .set("min_det", rep.min_det)
            .set("probes", rep.probes);
        r.section("tolerances").set("verify", a.tol);
        if !passes && status == EXIT_OK {
            status = EXIT_REJECT;
        }
    }
    Ok(Outcome::new(status, r))
}

fn cmd_frenet(a: &FrenetArgs) -> Result<Outcome> {
    let m = manifold(&a.manifold)?;
    let mut c = load_curve(Some(m.as_ref()), &a.curve)?;
    if a.reparametrize {
        c = reparametrize_arclength(m.as_ref(), &c, None)?;
    }
    let f = frenet_apparatus(m.as_ref(), &c, a.eps_reg)?;
    let n = f.dim();
    if let Some(p) = &a.out {
        let mut out = String::from("t");
        for j in 1..n {
            out.push_str(&format!(",kappa_{j}"));
        }
        for i in 1..=n {
            for j in 1..=n {
                out.push_str(&format!(",v_{i}_{j}"));
            }
        }
        out.push('\n');
        for k in 0..f.t.len() {
            out.push_str(&float(f.t[k]));
            for v in f.kappa[k].iter() {
                out.push(',');
                out.push_str(&float(*v));
            }
            // row i of V holds component i of v_1 .. v_n, so v_i_j is component j of v_i
            let vt = f.v[k].transpose();
            for row in vt.row_iter() {
                for v in row.iter() {
                    out.push(',');
                    out.push_str(&float(*v));
                }
            }
            out.push('\n');
        }
        write_text(p, &out)?;
    }
    let interior = 2..f.t.len().saturating_sub(2);
    let mut kmin = vec![f64::INFINITY; n - 1];
    let mut kmax = vec![f64::NEG_INFINITY; n - 1];
    for i in interior {
        for j in 0..n - 1 {
            kmin[j] = kmin[j].min(f.kappa[i][j]);
            kmax[j] = kmax[j].max(f.kappa[i][j]);
        }
    }
    let mut r = Report::new();
    r.set("command", "frenet")
        .set("manifold", m.name())
        .set("samples", f.t.len())
        .set("regular_order", f.regular_order)
        .set("complete", f.is_complete())
        .set("kappa_min", kmin)
        .set("kappa_max", kmax);
    if let Some(fail) = &f.failure {
        r.set("failure_index", fail.index).set("failure_t", fail.t);
    }
    r.section("tolerances").set("eps_reg", a.eps_reg).set("unit_speed", UNIT_SPEED_TOL);
    Ok(Outcome::new(EXIT_OK, r))
}

fn cmd_synth(a: &SynthArgs) -> Result<Outcome> {
    let mh = manifold(&a.manifold_hat)?;
    let xh0 = point_arg(mh.as_ref(), &a.xi_hat0)?;
    let a0 = parse_matrix(&a.a0, mh.dim())?;
    let opts = a.step.options();
    let mut r = Report::new();
    r.set("command", "synth").set("manifold_hat", mh.name());
    a.step.record(&mut r);
    if let Some(spec) = &a.curve {
        let m = manifold(a.manifold.as_deref().unwrap_or_default())?;
        let x = load_curve(Some(m.as_ref()), spec)?;
        let traj = synthesize_rolling(m.as_ref(), mh.as_ref(), &x, &a0, &xh0, &opts)?;
        if let Some(p) = &a.out {
            traj.write_csv(p)?;
        }
        r.set("mode", "rolling").set("manifold", m.name());
        trajectory_report(&mut r, &traj);
        let status = if traj.exit.is_some() { EXIT_NUMERIC } else { EXIT_OK };
        return Ok(Outcome::new(status, r));
    }
    let profile = match (&a.profile, &a.kappa, a.length) {
        (Some(p), _, _) => CurvatureProfile::read_csv(p)?,
        (None, Some(k), Some(len)) => CurvatureProfile::constant(parse_vector(k)?.as_slice(), len)?,
        _ => return Err(Error::InvalidParameter("synth needs --profile, --kappa with --length, or --curve".into())),
    };
    let syn = match a.backend {
        Backend::Generic => synthesize_curve(mh.as_ref(), &profile, &xh0, &a0, &opts)?,
        Backend::Euclidean => backend_euclidean(&profile, &xh0, &a0, &opts)?,
        Backend::Sphere => backend_sphere(&profile, &xh0, &a0, &opts)?,
        Backend::Su2 => backend_su2(&profile, &xh0, &a0, &opts)?,
    };
    if let Some(p) = &a.out {
        syn.to_curve()?.write_csv(p)?;
    }
    r.set("mode", "curve")
        .set("backend", format!("{:?}", a.backend).to_lowercase())
        .set("samples", syn.t.len())
        .set("complete", syn.exit.is_none())
        .set("xi_end", syn.xi.last().unwrap())
        .set("a_end", syn.a.last().unwrap());
    if let Some(t) = syn.exit {
        r.set("chart_exit", t);
    }
    let status = if syn.exit.is_some() { EXIT_NUMERIC } else { EXIT_OK };
    Ok(Outcome::new(status, r))
}

fn verdict_report(r: &mut Report, v: &ExistenceVerdict) {
    r.set("accepted", v.accepted)
        .set("method", v.method.to_string())
        .set("residual", v.residual)
        .set("orientation_flag", v.orientation_flag)
        .set("degenerate", v.degenerate);
    if let Some(iota) = &v.iota {
        r.set("iota", iota);
    }
    r.section("tolerances").set("tol", v.tolerance);
    let d = r.section("details");
    for (k, val) in &v.details {
        d.set(k, *val);
    }
}

fn cmd_exists(a: &ExistsArgs) -> Result<Outcome> {
    let m = manifold(&a.manifold)?;
    let mh = manifold(a.manifold_hat.as_deref().unwrap_or(&a.manifold))?;
    let x = load_curve(Some(m.as_ref()), &a.curve)?;
    let xh = load_curve(Some(mh.as_ref()), &a.curve_hat)?;
    let mut r = Report::new();
    r.set("command", "exists").set("manifold", m.name()).set("manifold_hat", mh.name());
    let accepted = match a.mode {
        ExistsMode::Curvature => {
            let v = exists_by_curvature(m.as_ref(), mh.as_ref(), &x, &xh, a.tol.unwrap_or(TOL_CURV))?;
            verdict_report(&mut r, &v);
            v.accepted
        }
        ExistsMode::General => {
            let v = exists_general(m.as_ref(), mh.as_ref(), &x, &xh, a.tol.unwrap_or(TOL_GEN), &a.step.options())?;
            verdict_report(&mut r, &v);
            a.step.record(&mut r);
            v.accepted
        }
        ExistsMode::Isometry => {
            let fit = extract_euclidean_isometry(&x, &xh, a.tol.unwrap_or(TOL_GEN))?;
            r.set("accepted", fit.accepted)
                .set("method", "euclidean_isometry")
                .set("residual", fit.residual)
                .set("orientation_flag", fit.orientation_flag)
                .set("iota", &fit.iota)
                .set("translation", &fit.translation);
            r.section("tolerances").set("tol", fit.tolerance);
            fit.accepted
        }
    };
    Ok(Outcome::new(if accepted { EXIT_OK } else { EXIT_REJECT }, r))
}

fn cmd_loop(a: &LoopArgs) -> Result<Outcome> {
    let m = manifold(&a.manifold)?;
    let x = load_curve(Some(m.as_ref()), &a.curve)?;
    let opts = a.step.options();
    let mut r = Report::new();
    r.set("command", "loopcheck").set("manifold", m.name());
    let ok = match (&a.manifold_hat, &a.curve_hat) {
        (Some(mh), Some(ch)) => {
            let mh = manifold(mh)?;
            let xh = load_curve(Some(mh.as_ref()), ch)?;
            let q = loop_in_q(m.as_ref(), &x, mh.as_ref(), &xh, &opts)?;
            r.set("manifold_hat", mh.name())
                .set("loop_in_q", q.loop_in_q)
                .set("closed", q.closed)
                .set("closed_hat", q.closed_hat)
                .set("theta", q.theta)
                .set("theta_hat", q.theta_hat)
                .set("alpha", q.alpha)
                .set("alpha_hat", q.alpha_hat)
                .set("angle", q.angle)
                .set("angle_hat", q.angle_hat)
                .set("theta_gap", q.theta_gap)
                .set("angle_gap", q.angle_gap)
                .set("turning_gap", q.turning_gap);
            r.section("tolerances").set("angle", crate::existence::TOL_ANGLE).set("loop", TOL_LOOP);
            q.loop_in_q
        }
        _ => {
            let l = loop_check(m.as_ref(), &x, a.tol, &opts)?;
            r.set("config_loop", l.config_loop)
                .set("c1_loop", l.c1_loop)
                .set("closed", l.closed)
                .set("theta", l.theta)
                .set("alpha", l.alpha)
                .set("closure_integral", vec![l.closure_integral.re, l.closure_integral.im])
                .set("closure_modulus", l.closure_integral.norm())
                .set("length", l.length);
            r.section("tolerances").set("loop", a.tol);
            l.config_loop
        }
    };
    a.step.record(&mut r);
    Ok(Outcome::new(if ok { EXIT_OK } else { EXIT_REJECT }, r))
}

fn cmd_compose(a: &ComposeArgs) -> Result<Outcome> {
    let first = RollingTrajectory::read_csv(&a.first)?;
    let second = RollingTrajectory::read_csv(&a.second)?;
    let traj = compose_rollings(&first, &second, a.tol)?;
    if let Some(p) = &a.out {
        traj.write_csv(p)?;
    }
    let mut r = Report::new();
    r.set("command", "compose");
    trajectory_report(&mut r, &traj);
    r.section("tolerances").set("match", a.tol);
    Ok(Outcome::new(EXIT_OK, r))
}

fn sample_points(m: &dyn Manifold, count: usize, radius: f64, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = default_point(m);
    (0..count)
        .map(|_| {
            let mut p = base.clone();
            for v in p.iter_mut() {
                *v += radius * rng.gen_range(-1.0..1.0);
            }
            m.project(&mut p);
            p
        })
        .collect()
}

fn cmd_check_model(a: &CheckModelArgs) -> Result<Outcome> {
    let m = manifold(&a.manifold)?;
    let points = sample_points(m.as_ref(), a.samples, a.radius, a.seed);
    let rep = check_model(m.as_ref(), &points, a.fd_step);
    let antisym = rep.antisymmetry.iter().copied().fold(0.0f64, f64::max);
    let lc_ok = rep.levi_civita_residual.is_none_or(|v| v < TOL_LEVI_CIVITA);
    let passes = rep.samples > 0 && antisym < TOL_MODEL && rep.min_det > 0.0 && lc_ok;
    let mut r = Report::new();
    r.set("command", "check-model")
        .set("manifold", rep.manifold.clone())
        .set("passes", passes)
        .set("samples", rep.samples)
        .set("outside", rep.outside)
        .set("antisymmetry", rep.antisymmetry.clone())
        .set("min_det", rep.min_det)
        .set("max_condition", rep.max_condition);
    if let Some(lc) = rep.levi_civita_residual {
        r.set("levi_civita_residual", lc);
    }
    r.section("tolerances")
        .set("antisymmetry", TOL_MODEL)
        .set("levi_civita", TOL_LEVI_CIVITA)
        .set("fd_step", a.fd_step);
    Ok(Outcome::new(if passes { EXIT_OK } else { EXIT_REJECT }, r))
}
