//! One function per subcommand. Each returns the text for stdout together
//! with any failure to report after that text is written.

use std::fs;
use std::path::Path;

use bubble_core::closed_form::{self, check_e_nonneg, compute_paste_constants, owner, ClosedForm};
use bubble_core::hjb::{self, resale_fixed_point, solve_hjb, supersolution_residual};
use bubble_core::market::{bubble_exists, intrinsic_branch, intrinsic_value, thresholds};
use bubble_core::mc::{conditional_mean_check, StoppingRule};
use bubble_core::{Group, ModelParams, PriceCurve, SimConfig, SolveReport};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{emit_curve, fmt_sig, render_curve, render_report};
use crate::parallel::{par_intrinsic, par_stopping_value};

/// Lower bound on the discrete supersolution residual accepted by `solve`.
pub const SUPERSOLUTION_FLOOR: f64 = -1e-6;

#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, failure: None }
    }
}

struct Report(Vec<(String, String)>);

impl Report {
    fn new(cfg: &RunConfig) -> Self {
        let mut r = Report(Vec::new());
        r.push("swapped", cfg.swapped);
        r
    }

    fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    fn num(&mut self, key: &str, value: f64) {
        self.push(key, fmt_sig(value));
    }

    fn render(&self) -> String {
        render_report(&self.0)
    }
}

fn none() -> &'static str {
    "none"
}

pub fn check(cfg: &RunConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let t = thresholds(p);
    let mut r = Report::new(cfg);
    r.push("bubble_exists", bubble_exists(p));
    r.num("d_bar", t.d_bar);
    match t.d_tilde {
        Some(d) => r.num("d_tilde", d),
        None => r.push("d_tilde", none()),
    }
    if bubble_exists(p) && p.equal_volatility() {
        let c = compute_paste_constants(p)?;
        let s = check_e_nonneg(p)?;
        r.num("E", c.e);
        r.num("F", c.f);
        r.push("E_nonneg", s.holds);
        if p.theta1 > p.theta2 {
            r.num("U_ratio", s.ratio);
            r.num("U_ratio_bound", s.bound);
        }
    } else {
        for key in ["E", "F", "E_nonneg"] {
            r.push(key, none());
        }
    }
    Ok(Outcome::ok(r.render()))
}

/// Writes `curve` to `out`, or returns it as text when there is no `out`.
fn deliver(curve: &PriceCurve, out: Option<&Path>, notes: &[String], summary: &Report) -> Result<String> {
    match out {
        Some(path) => {
            emit_curve(curve, path, notes)?;
            let mut text = summary.render();
            text.push_str(&format!("rows={}\nout={}\n", curve.len(), path.display()));
            Ok(text)
        }
        None => render_curve(curve, notes),
    }
}

fn summarize_curve(r: &mut Report, curve: &PriceCurve) {
    let (i, max) =
        curve.relative.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
        );
    r.num("relative_at_0", curve.relative[0]);
    r.num("max_relative", max);
    r.num("argmax_d", curve.grid[i]);
}

pub fn price(cfg: &RunConfig, out: Option<&Path>) -> Result<Outcome> {
    let nodes = cfg.grid()?.nodes();
    let curve = closed_form::price_curve(&cfg.params, &nodes)?;
    let mut r = Report::new(cfg);
    summarize_curve(&mut r, &curve);
    Ok(Outcome::ok(deliver(&curve, out, &cfg.notes(), &r)?))
}

fn min_supersolution_residual(report: &SolveReport, params: &ModelParams) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for j in 1..report.grid.n - 1 {
        worst = worst.min(supersolution_residual(&report.values, &report.grid, params, j)?);
    }
    Ok(worst)
}

pub fn solve(cfg: &RunConfig, out: Option<&Path>) -> Result<Outcome> {
    let p = &cfg.params;
    let report = solve_hjb(p, cfg.grid()?, cfg.tol)?;
    let curve = report.curve(p)?;
    let worst = min_supersolution_residual(&report, p)?;
    let mut r = Report::new(cfg);
    r.push("iterations", report.iterations);
    r.num("residual", report.final_residual);
    r.push("converged", report.converged);
    r.num("min_supersolution_residual", worst);
    summarize_curve(&mut r, &curve);
    let text = deliver(&curve, out, &cfg.notes(), &r)?;
    let failure = if !report.converged {
        Some(CliError::NotConverged(format!(
            "policy iteration stopped after {} iterations with residual {:e}",
            report.iterations, report.final_residual
        )))
    } else if worst < SUPERSOLUTION_FLOOR {
        Some(CliError::CheckFailed(format!(
            "supersolution residual {worst:e} below {SUPERSOLUTION_FLOOR:e}"
        )))
    } else {
        None
    };
    Ok(Outcome { text, failure })
}

pub fn iterate(cfg: &RunConfig, stages: usize, steps: usize, out: Option<&Path>) -> Result<Outcome> {
    let p = &cfg.params;
    let fp = resale_fixed_point(p, cfg.grid()?, cfg.horizon_or_default(), steps, stages, cfg.tol)?;
    let curve = fp.report.curve(p)?;
    let mut r = Report::new(cfg);
    r.push("stages", fp.report.iterations);
    r.num("last_increment", fp.increments.last().copied().unwrap_or(0.0));
    r.push("converged", fp.report.converged);
    summarize_curve(&mut r, &curve);
    let text = deliver(&curve, out, &cfg.notes(), &r)?;
    let failure = (!fp.report.converged).then(|| {
        CliError::NotConverged(format!(
            "resale iteration still moving after {stages} stages (last increment {:e})",
            fp.increments.last().copied().unwrap_or(f64::NAN)
        ))
    });
    Ok(Outcome { text, failure })
}

/// Settings of the `simulate` subcommand beyond the run config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateOptions {
    /// Starting dividend rate; `theta1` when absent.
    pub d0: Option<f64>,
    /// Time of the conditional-mean check.
    pub t: f64,
    /// Step used for the intrinsic-value integral.
    pub intrinsic_dt: f64,
    /// Horizon of the resale-at-boundary estimate.
    pub stop_horizon: f64,
}

pub fn simulate(cfg: &RunConfig, opts: SimulateOptions) -> Result<Outcome> {
    let p = &cfg.params;
    let d0 = opts.d0.unwrap_or(p.theta1);
    if !(d0 >= 0.0 && d0.is_finite()) {
        return Err(CliError::Usage(format!("d0 must be finite and >= 0, got {d0}")));
    }
    if !(opts.t > 0.0 && opts.t.is_finite()) {
        return Err(CliError::Usage(format!("t must be positive, got {}", opts.t)));
    }
    let mut r = Report::new(cfg);
    r.num("d0", d0);
    r.push("paths", cfg.paths);
    r.push("seed", cfg.seed);
    let mut failed = Vec::new();

    for g in Group::BOTH {
        let sim = SimConfig::new(g, d0, cfg.horizon_or_default(), opts.intrinsic_dt, cfg.paths, cfg.seed)?;
        let est = par_intrinsic(p, &sim)?;
        let exact = intrinsic_branch(p, g, d0);
        let pass = est.within(exact, 3.0);
        r.num(&format!("value{g}_mc"), est.mean);
        r.num(&format!("value{g}_se"), est.std_error);
        r.num(&format!("value{g}_exact"), exact);
        r.push(&format!("value{g}_pass"), pass);
        if !pass {
            failed.push(format!("group {g} intrinsic value"));
        }
    }
    r.num("intrinsic", intrinsic_value(p, d0));

    for g in Group::BOTH {
        let sim = SimConfig::new(g, d0, opts.t, cfg.dt.min(opts.t), cfg.paths, cfg.seed)?;
        let c = conditional_mean_check(p, &sim, opts.t)?;
        r.num(&format!("mean{g}_mc"), c.estimate.mean);
        r.num(&format!("mean{g}_se"), c.estimate.std_error);
        r.num(&format!("mean{g}_exact"), c.expected);
        r.push(&format!("mean{g}_pass"), c.passes);
        if !c.passes {
            failed.push(format!("group {g} conditional mean"));
        }
    }

    let closed = if bubble_exists(p) && p.equal_volatility() {
        Some(ClosedForm::new(p)?).filter(ClosedForm::is_equilibrium)
    } else {
        None
    };
    match closed {
        Some(cf) => {
            let holder = owner(p, d0)?;
            let sim = SimConfig::new(holder, d0, opts.stop_horizon, cfg.dt, cfg.paths, cfg.seed)?;
            let rule = StoppingRule::at_trading_boundary(p, d0)?;
            let est = par_stopping_value(p, &sim, rule, |d| cf.phi(d).unwrap_or(f64::NAN))?;
            let want = cf.phi(d0)?;
            let pass = est.within(want, 3.0);
            r.push("resale_holder", holder);
            r.num("resale_mc", est.mean);
            r.num("resale_se", est.std_error);
            r.num("resale_exact", want);
            r.push("resale_pass", pass);
            if !pass {
                failed.push("resale at the trading boundary".into());
            }
        }
        None => r.push("resale_holder", none()),
    }

    let failure = (!failed.is_empty())
        .then(|| CliError::CheckFailed(format!("outside 3 standard errors: {}", failed.join(", "))));
    Ok(Outcome {
        text: r.render(),
        failure,
    })
}

/// A named parameter set reproduced by `figures`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub params: ModelParams,
    pub d_max: f64,
}

fn preset(name: &'static str, theta1: f64, theta2: f64, d_max: f64) -> Preset {
    Preset {
        name,
        params: ModelParams {
            kappa1: 0.2,
            kappa2: 0.1,
            theta1,
            theta2,
            sigma1: 0.02,
            sigma2: 0.02,
            lambda: 0.02,
        },
        d_max,
    }
}

pub fn presets() -> [Preset; 3] {
    [
        preset("theta1_below_theta2", 0.015, 0.02, 0.1),
        preset("theta1_above_theta2", 0.04, 0.02, 1.0),
        preset("equal_theta", 0.04, 0.04, 1.0),
    ]
}

const PLOT_SCRIPT: &str = "\
# gnuplot script for the curves written next to it
set datafile separator ','
set datafile commentschars '#'
set key autotitle columnhead
set terminal pngcairo size 800,500
set xlabel 'D'
do for [name in 'theta1_below_theta2 theta1_above_theta2 equal_theta'] {
    set output name.'_price.png'
    plot name.'.csv' using 1:2 with lines, '' using 1:3 with lines
    set output name.'_relative.png'
    plot name.'.csv' using 1:5 with lines
}
";

pub fn figures(out_dir: &Path, points: usize) -> Result<Outcome> {
    if points < 2 {
        return Err(CliError::Usage(format!(
            "need at least 2 points per curve, got {points}"
        )));
    }
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut summary = String::new();
    for ps in presets() {
        let p = &ps.params;
        let nodes: Vec<f64> = (0..points)
            .map(|i| {
                if i + 1 == points {
                    ps.d_max
                } else {
                    ps.d_max * i as f64 / (points - 1) as f64
                }
            })
            .collect();
        let curve = closed_form::price_curve(p, &nodes)?;
        emit_curve(&curve, &out_dir.join(format!("{}.csv", ps.name)), &[])?;
        let cf = ClosedForm::new(p)?;
        let mut r = Report(Vec::new());
        r.push("set", ps.name);
        r.num("E", cf.consts.e);
        r.num("F", cf.consts.f);
        r.num("d_bar", cf.d_bar);
        r.num("d_tilde", cf.d_tilde);
        r.num("R_at_0", cf.relative_bubble(0.0)?);
        r.num("R_at_d_tilde", cf.relative_bubble(cf.d_tilde)?);
        if cf.d_bar >= 0.0 {
            r.num("R_at_d_bar", cf.relative_bubble(cf.d_bar)?);
        } else {
            r.push("R_at_d_bar", none());
        }
        summarize_curve(&mut r, &curve);
        summary.push_str(&r.render());
        summary.push('\n');
    }
    let path = out_dir.join("summary.txt");
    fs::write(&path, &summary).map_err(|e| CliError::io(&path, e))?;
    let path = out_dir.join("plot.gp");
    fs::write(&path, PLOT_SCRIPT).map_err(|e| CliError::io(&path, e))?;
    Ok(Outcome::ok(summary))
}

/// Default number of time steps per resale stage for `iterate`.
pub const DEFAULT_STEPS: usize = 600;

/// Default number of resale stages for `iterate`.
pub const DEFAULT_STAGES: usize = hjb::DEFAULT_STAGES;
