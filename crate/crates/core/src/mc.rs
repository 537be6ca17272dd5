//! Seeded Monte Carlo under one group's belief.
//!
//! Every path draws from its own ChaCha8 stream selected by the path index, so
//! an ensemble is bit-identical however the paths are scheduled. Per-path
//! samples are aggregated in index order with compensated summation.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::market::{self, Group, ModelParams};

#[allow(unused_imports)]
use num_traits::Float;

/// Transition scheme for one time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Noncentral chi-square transition; no discretization bias.
    #[default]
    Exact,
    /// Full-truncation Euler; cross-check only.
    Euler,
}

/// How the discounted dividend integral is accumulated between grid times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathIntegral {
    /// Integrates the conditional mean of each step given its left endpoint.
    /// Unbiased for any step size.
    #[default]
    StepExpectation,
    /// Trapezoidal rule on the sampled path.
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub group: Group,
    pub d0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub integral: PathIntegral,
}

impl SimConfig {
    pub fn new(group: Group, d0: f64, horizon: f64, dt: f64, paths: usize, seed: u64) -> Result<Self> {
        let cfg = SimConfig {
            group,
            d0,
            horizon,
            dt,
            paths,
            seed,
            scheme: Scheme::Exact,
            integral: PathIntegral::StepExpectation,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(domain(alloc::format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(domain(alloc::format!(
                "horizon {} must be at least dt {}",
                self.horizon,
                self.dt
            )));
        }
        if self.paths == 0 {
            return Err(domain("paths must be at least 1"));
        }
        if !(self.d0 >= 0.0 && self.d0.is_finite()) {
            return Err(domain(alloc::format!("d0 must be finite and >= 0, got {}", self.d0)));
        }
        Ok(())
    }

    /// Number of steps; the step size is `horizon / steps`, i.e. `dt` rounded
    /// so the grid ends exactly at the horizon.
    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps() as f64
    }
}

/// `mean ± std_error` over `paths` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
}

impl McEstimate {
    /// Aggregates samples in order with Neumaier summation.
    pub fn from_samples(samples: &[f64]) -> McEstimate {
        let n = samples.len();
        let mean = neumaier_sum(samples.iter().copied()) / n as f64;
        let ss = neumaier_sum(samples.iter().map(|x| (x - mean) * (x - mean)));
        let std_error = if n > 1 {
            (ss / ((n - 1) as f64) / n as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            mean,
            std_error,
            paths: n,
        }
    }

    /// `|mean − target| ≤ k·std_error` (exact equality when the error is zero).
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + 1e-12 * target.abs().max(1e-300)
    }
}

pub(crate) fn neumaier_sum<I: Iterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Random stream for one path.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Checks `cfg` and the positivity and Feller conditions for `cfg.group`.
pub fn check_inputs(params: &ModelParams, cfg: &SimConfig) -> Result<()> {
    cfg.validate()?;
    for (name, v) in [
        ("kappa", params.kappa(cfg.group)),
        ("theta", params.theta(cfg.group)),
        ("sigma", params.sigma(cfg.group)),
        ("lambda", params.lambda),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositive { name, value: v });
        }
    }
    let ratio = params.feller_ratio(cfg.group);
    if ratio < 1.0 {
        return Err(Error::Feller {
            group: cfg.group,
            ratio,
        });
    }
    Ok(())
}

/// One-step transition sampler for a fixed group and step size.
#[derive(Debug, Clone, Copy)]
pub struct Transition {
    kappa: f64,
    theta: f64,
    sigma: f64,
    h: f64,
    scheme: Scheme,
    // Exact scheme constants: D' = c·χ²_δ(D·decay/c).
    c: f64,
    delta: f64,
    decay: f64,
}

impl Transition {
    pub fn new(params: &ModelParams, g: Group, h: f64, scheme: Scheme) -> Self {
        let (kappa, theta, sigma) = (params.kappa(g), params.theta(g), params.sigma(g));
        let decay = (-kappa * h).exp();
        Transition {
            kappa,
            theta,
            sigma,
            h,
            scheme,
            c: sigma * sigma * (-(-kappa * h).exp_m1()) / (4.0 * kappa),
            delta: 4.0 * kappa * theta / (sigma * sigma),
            decay,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, d: f64, rng: &mut R) -> f64 {
        match self.scheme {
            Scheme::Exact => {
                let half_nc = 0.5 * d * self.decay / self.c;
                let n = if half_nc > 0.0 {
                    Poisson::new(half_nc).expect("positive Poisson mean").sample(rng)
                } else {
                    0.0
                };
                let shape = 0.5 * self.delta + n;
                let chi2 = Gamma::new(shape, 2.0).expect("positive gamma shape").sample(rng);
                self.c * chi2
            }
            Scheme::Euler => {
                let dp = d.max(0.0);
                let z: f64 = StandardNormal.sample(rng);
                d + self.kappa * (self.theta - dp) * self.h + self.sigma * (dp * self.h).sqrt() * z
            }
        }
    }
}

/// Simulated trajectories on `times`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub times: Vec<f64>,
    /// `paths[p][k]` is path `p` at `times[k]`.
    pub paths: Vec<Vec<f64>>,
}

impl PathEnsemble {
    /// Cross-sectional mean at time index `k`.
    pub fn mean_at(&self, k: usize) -> McEstimate {
        let xs: Vec<f64> = self.paths.iter().map(|p| p[k]).collect();
        McEstimate::from_samples(&xs)
    }
}

/// Simulates one path; Euler values below zero are reported as zero.
pub fn simulate_path(params: &ModelParams, cfg: &SimConfig, path: u64) -> Vec<f64> {
    let tr = Transition::new(params, cfg.group, cfg.step_size(), cfg.scheme);
    let mut rng = path_rng(cfg.seed, path);
    let mut out = Vec::with_capacity(cfg.steps() + 1);
    let mut d = cfg.d0;
    out.push(d);
    for _ in 0..cfg.steps() {
        d = tr.sample(d, &mut rng);
        out.push(d.max(0.0));
    }
    out
}

pub fn simulate_paths(params: &ModelParams, cfg: &SimConfig) -> Result<PathEnsemble> {
    check_inputs(params, cfg)?;
    let h = cfg.step_size();
    let times = (0..=cfg.steps()).map(|k| k as f64 * h).collect();
    let paths = (0..cfg.paths as u64).map(|p| simulate_path(params, cfg, p)).collect();
    Ok(PathEnsemble { times, paths })
}

/// `∫_{t}^{t+h} e^{−λs} E[D_s | D_t = d] ds`.
fn step_integral(lam: f64, kappa: f64, theta: f64, t: f64, h: f64, d: f64) -> f64 {
    let a = -(-lam * h).exp_m1() / lam;
    let b = -(-(lam + kappa) * h).exp_m1() / (lam + kappa);
    (-lam * t).exp() * (theta * a + (d - theta) * b)
}

/// `E[∫_T^∞ e^{−λs} D_s ds | D_T = d]`.
fn tail_value(lam: f64, kappa: f64, theta: f64, t: f64, d: f64) -> f64 {
    (-lam * t).exp() * (theta / lam + (d - theta) / (lam + kappa))
}

/// Per-path sample of the discounted dividend stream `∫₀^∞ e^{−λt} D_t dt`.
pub fn intrinsic_sample(params: &ModelParams, cfg: &SimConfig, path: u64) -> f64 {
    let (lam, kappa, theta) = (params.lambda, params.kappa(cfg.group), params.theta(cfg.group));
    let h = cfg.step_size();
    let tr = Transition::new(params, cfg.group, h, cfg.scheme);
    let mut rng = path_rng(cfg.seed, path);
    let mut d = cfg.d0;
    let mut acc = 0.0;
    let mut comp = 0.0;
    for k in 0..cfg.steps() {
        let t = k as f64 * h;
        let next = tr.sample(d, &mut rng);
        let piece = match cfg.integral {
            PathIntegral::StepExpectation => step_integral(lam, kappa, theta, t, h, d),
            PathIntegral::Trapezoid => 0.5 * h * ((-lam * t).exp() * d + (-lam * (t + h)).exp() * next.max(0.0)),
        };
        let s = acc + piece;
        comp += if acc.abs() >= piece.abs() {
            (acc - s) + piece
        } else {
            (piece - s) + acc
        };
        acc = s;
        d = next.max(0.0);
    }
    acc + comp + tail_value(lam, kappa, theta, cfg.horizon, d)
}

/// Minimum horizon for intrinsic-value estimates.
pub fn min_intrinsic_horizon(params: &ModelParams) -> f64 {
    12.0 / params.lambda
}

/// Estimates group `cfg.group`'s buy-and-hold value at `cfg.d0`.
pub fn mc_intrinsic(params: &ModelParams, cfg: &SimConfig) -> Result<McEstimate> {
    check_inputs(params, cfg)?;
    if cfg.horizon < min_intrinsic_horizon(params) * (1.0 - 1e-12) {
        return Err(domain("intrinsic-value horizon must be at least 12/lambda"));
    }
    estimate(cfg.paths, |p| intrinsic_sample(params, cfg, p))
}

/// When the holder resells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingRule {
    /// `τ = 0`.
    Immediate,
    /// `τ = t` (rounded to the grid).
    Fixed(f64),
    /// First grid time with `D ≥ level`.
    UpCrossing(f64),
    /// First grid time with `D ≤ level`.
    DownCrossing(f64),
}

impl StoppingRule {
    /// Resale at the trading boundary `D̃` for a holder starting at `d0`:
    /// group 1 below `D̃` sells when it is reached from below, group 2 above
    /// it sells when it is reached from above.
    pub fn at_trading_boundary(params: &ModelParams, d0: f64) -> Result<StoppingRule> {
        let dt = market::d_tilde(params)?;
        Ok(if d0 <= dt {
            StoppingRule::UpCrossing(dt)
        } else {
            StoppingRule::DownCrossing(dt)
        })
    }

    fn stops(&self, t: f64, d: f64, h: f64) -> bool {
        match *self {
            StoppingRule::Immediate => true,
            StoppingRule::Fixed(s) => t >= s - 0.5 * h,
            StoppingRule::UpCrossing(level) => d >= level,
            StoppingRule::DownCrossing(level) => d <= level,
        }
    }
}

/// Per-path sample of `∫₀^{τ∧T} e^{−λt}D_t dt + e^{−λ(τ∧T)}·continuation(D_{τ∧T})`.
pub fn stopping_sample<C: Fn(f64) -> f64>(
    params: &ModelParams,
    cfg: &SimConfig,
    rule: StoppingRule,
    continuation: &C,
    path: u64,
) -> f64 {
    let (lam, kappa, theta) = (params.lambda, params.kappa(cfg.group), params.theta(cfg.group));
    let h = cfg.step_size();
    let tr = Transition::new(params, cfg.group, h, cfg.scheme);
    let mut rng = path_rng(cfg.seed, path);
    let mut d = cfg.d0;
    let mut acc = 0.0;
    let steps = cfg.steps();
    for k in 0..steps {
        let t = k as f64 * h;
        if rule.stops(t, d, h) {
            return acc + (-lam * t).exp() * continuation(d);
        }
        let next = tr.sample(d, &mut rng).max(0.0);
        acc += match cfg.integral {
            PathIntegral::StepExpectation => step_integral(lam, kappa, theta, t, h, d),
            PathIntegral::Trapezoid => 0.5 * h * ((-lam * t).exp() * d + (-lam * (t + h)).exp() * next),
        };
        d = next;
    }
    acc + (-lam * cfg.horizon).exp() * continuation(d)
}

/// Value to `cfg.group` of holding from `cfg.d0` and reselling at `rule`
/// for `continuation(D_τ)`; paths not stopped by the horizon are valued at
/// `continuation(D_T)`, so the effective rule is `τ ∧ T`.
pub fn mc_stopping_value<C: Fn(f64) -> f64>(
    params: &ModelParams,
    cfg: &SimConfig,
    rule: StoppingRule,
    continuation: C,
) -> Result<McEstimate> {
    check_inputs(params, cfg)?;
    estimate(cfg.paths, |p| stopping_sample(params, cfg, rule, &continuation, p))
}

/// Outcome of comparing the simulated mean of `D_t` with its closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCheck {
    pub estimate: McEstimate,
    pub expected: f64,
    pub passes: bool,
}

/// Samples `D_t` from `cfg.d0` and compares the mean with the conditional
/// mean formula at 3 standard errors. The exact scheme takes a single step
/// of length `t`; Euler uses steps of about `cfg.dt`.
pub fn conditional_mean_check(params: &ModelParams, cfg: &SimConfig, t: f64) -> Result<MeanCheck> {
    check_inputs(params, cfg)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(domain(alloc::format!("t must be finite and >= 0, got {t}")));
    }
    let expected = market::conditional_mean(params, cfg.group, cfg.d0, t);
    let estimate = if t == 0.0 {
        McEstimate {
            mean: cfg.d0,
            std_error: 0.0,
            paths: cfg.paths,
        }
    } else {
        let steps = match cfg.scheme {
            Scheme::Exact => 1,
            Scheme::Euler => ((t / cfg.dt).round() as usize).max(1),
        };
        let tr = Transition::new(params, cfg.group, t / steps as f64, cfg.scheme);
        crate::mc::estimate(cfg.paths, |p| {
            let mut rng = path_rng(cfg.seed, p);
            let mut d = cfg.d0;
            for _ in 0..steps {
                d = tr.sample(d, &mut rng).max(0.0);
            }
            d
        })?
    };
    Ok(MeanCheck {
        estimate,
        expected,
        passes: estimate.within(expected, 3.0),
    })
}

/// CIR conditional variance of `D_t` given `D_0 = d0` under group `g`.
pub fn conditional_variance(params: &ModelParams, g: Group, d0: f64, t: f64) -> f64 {
    let (k, th, s) = (params.kappa(g), params.theta(g), params.sigma(g));
    let e = (-k * t).exp();
    d0 * s * s / k * (e - e * e) + th * s * s / (2.0 * k) * (1.0 - e) * (1.0 - e)
}

/// Runs `sample` for path indices `0..paths` in order and aggregates.
pub fn estimate<F: FnMut(u64) -> f64>(paths: usize, mut sample: F) -> Result<McEstimate> {
    let samples: Vec<f64> = (0..paths as u64).map(&mut sample).collect();
    finish(&samples)
}

/// Aggregates index-ordered samples; rejects non-finite ones.
pub fn finish(samples: &[f64]) -> Result<McEstimate> {
    if samples.is_empty() {
        return Err(domain("no samples"));
    }
    if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
        return Err(Error::Consistency(alloc::format!(
            "path {i} produced a non-finite sample"
        )));
    }
    Ok(McEstimate::from_samples(samples))
}
