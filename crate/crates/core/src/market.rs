//! Model parameters, intrinsic valuation and the regime thresholds.

use core::fmt;

use crate::error::{domain, regime, Error, Result};

#[allow(unused_imports)]
use num_traits::Float;

/// One of the two investor groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    One,
    Two,
}

impl Group {
    pub const BOTH: [Group; 2] = [Group::One, Group::Two];

    pub fn number(self) -> u8 {
        match self {
            Group::One => 1,
            Group::Two => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Group> {
        match n {
            1 => Some(Group::One),
            2 => Some(Group::Two),
            _ => None,
        }
    }

    pub fn other(self) -> Group {
        match self {
            Group::One => Group::Two,
            Group::Two => Group::One,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Beliefs of both groups about `dD = κᵢ(θᵢ − D)dt + σᵢ√D dB`, plus the common
/// discount rate `λ`.
///
/// Operations in this crate expect normalized parameters (`κ₁ ≥ κ₂`, and
/// `θ₁ ≥ θ₂` when `κ₁ = κ₂`); see [`normalize_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub lambda: f64,
}

/// Result of [`normalize_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalized {
    pub params: ModelParams,
    /// The input groups were exchanged to reach `κ₁ ≥ κ₂`.
    pub swapped: bool,
}

impl ModelParams {
    pub fn kappa(&self, g: Group) -> f64 {
        match g {
            Group::One => self.kappa1,
            Group::Two => self.kappa2,
        }
    }

    pub fn theta(&self, g: Group) -> f64 {
        match g {
            Group::One => self.theta1,
            Group::Two => self.theta2,
        }
    }

    pub fn sigma(&self, g: Group) -> f64 {
        match g {
            Group::One => self.sigma1,
            Group::Two => self.sigma2,
        }
    }

    /// `2κᵢθᵢ/σᵢ²`; the Feller condition asks for at least 1.
    pub fn feller_ratio(&self, g: Group) -> f64 {
        2.0 * self.kappa(g) * self.theta(g) / (self.sigma(g) * self.sigma(g))
    }

    /// Drift `κᵢ(θᵢ − d)` under group `g`'s belief.
    pub fn drift(&self, g: Group, d: f64) -> f64 {
        self.kappa(g) * (self.theta(g) - d)
    }

    pub fn equal_volatility(&self) -> bool {
        self.sigma1 == self.sigma2
    }

    fn with_groups_swapped(self) -> ModelParams {
        ModelParams {
            kappa1: self.kappa2,
            kappa2: self.kappa1,
            theta1: self.theta2,
            theta2: self.theta1,
            sigma1: self.sigma2,
            sigma2: self.sigma1,
            lambda: self.lambda,
        }
    }

    fn check_scalars(&self) -> Result<()> {
        let fields = [
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("sigma1", self.sigma1),
            ("sigma2", self.sigma2),
            ("lambda", self.lambda),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositive { name, value });
            }
        }
        for g in Group::BOTH {
            let ratio = self.feller_ratio(g);
            if ratio < 1.0 {
                return Err(Error::Feller { group: g, ratio });
            }
        }
        Ok(())
    }

    /// Checks positivity, Feller and the ordering convention.
    pub fn validate(&self) -> Result<()> {
        self.check_scalars()?;
        if self.kappa1 < self.kappa2 || (self.kappa1 == self.kappa2 && self.theta1 < self.theta2) {
            return Err(domain("parameters are not normalized (need kappa1 >= kappa2)"));
        }
        Ok(())
    }
}

/// Validates raw parameters and orders the groups so that `κ₁ ≥ κ₂` (and
/// `θ₁ ≥ θ₂` when the rates tie).
pub fn normalize_params(raw: ModelParams) -> Result<Normalized> {
    raw.check_scalars()?;
    let swap = raw.kappa1 < raw.kappa2 || (raw.kappa1 == raw.kappa2 && raw.theta1 < raw.theta2);
    Ok(Normalized {
        params: if swap { raw.with_groups_swapped() } else { raw },
        swapped: swap,
    })
}

/// Buy-and-hold value `θᵢ/λ + (d − θᵢ)/(λ + κᵢ)` of group `g`.
pub fn intrinsic_branch(params: &ModelParams, g: Group, d: f64) -> f64 {
    let k = params.kappa(g);
    let th = params.theta(g);
    th / params.lambda + (d - th) / (params.lambda + k)
}

/// Intrinsic value `I(d)`: the larger of the two buy-and-hold valuations.
pub fn intrinsic_value(params: &ModelParams, d: f64) -> f64 {
    intrinsic_branch(params, Group::One, d).max(intrinsic_branch(params, Group::Two, d))
}

/// `(I(d), I'(d))` with the group-1 slope at the kink.
pub(crate) fn intrinsic_with_slope(params: &ModelParams, d: f64) -> (f64, f64) {
    let v1 = intrinsic_branch(params, Group::One, d);
    let v2 = intrinsic_branch(params, Group::Two, d);
    if v1 >= v2 {
        (v1, 1.0 / (params.lambda + params.kappa1))
    } else {
        (v2, 1.0 / (params.lambda + params.kappa2))
    }
}

/// Switch points of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Kink `D̄` of the intrinsic value; `+∞` when `κ₁ = κ₂` (group 1 values
    /// the asset at least as highly everywhere).
    pub d_bar: f64,
    /// Trading boundary `D̃` where the drifts coincide; `None` when `κ₁ = κ₂`.
    pub d_tilde: Option<f64>,
}

pub fn thresholds(params: &ModelParams) -> Thresholds {
    let ModelParams {
        kappa1: k1,
        kappa2: k2,
        theta1: t1,
        theta2: t2,
        lambda: lam,
        ..
    } = *params;
    if k1 == k2 {
        return Thresholds {
            d_bar: f64::INFINITY,
            d_tilde: None,
        };
    }
    Thresholds {
        d_bar: (k1 * k2 * (t1 - t2) + lam * (k1 * t1 - k2 * t2)) / (lam * (k1 - k2)),
        d_tilde: Some((k1 * t1 - k2 * t2) / (k1 - k2)),
    }
}

/// `D̃`, or a regime error when `κ₁ = κ₂`.
pub fn d_tilde(params: &ModelParams) -> Result<f64> {
    thresholds(params)
        .d_tilde
        .ok_or_else(|| regime("kappa1 = kappa2: no trading boundary"))
}

/// A bubble exists iff `κ₁ > κ₂` and `κ₁θ₁ > κ₂θ₂`. Volatilities play no role.
pub fn bubble_exists(params: &ModelParams) -> bool {
    params.kappa1 > params.kappa2 && params.kappa1 * params.theta1 > params.kappa2 * params.theta2
}

/// Group with the larger drift at `d`; ties go to group 1.
pub fn dominant_group(params: &ModelParams, d: f64) -> Group {
    if params.drift(Group::One, d) >= params.drift(Group::Two, d) {
        Group::One
    } else {
        Group::Two
    }
}

/// `E[D_t | D_0 = d0] = d0 e^{-κt} + θ(1 − e^{-κt})` under group `g`.
pub fn conditional_mean(params: &ModelParams, g: Group, d0: f64, t: f64) -> f64 {
    let decay = (-params.kappa(g) * t).exp();
    d0 * decay + params.theta(g) * (1.0 - decay)
}

/// `D*(t)`: below this level a group-1 holder forced to resell at `t` still
/// beats the intrinsic value. Tends to `D̃` as `t → 0⁺`.
pub fn dstar(params: &ModelParams, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain(alloc::format!("dstar needs t > 0, got {t}")));
    }
    let ModelParams {
        kappa1: k1,
        kappa2: k2,
        theta1: t1,
        theta2: t2,
        lambda: lam,
        ..
    } = *params;
    if !(k1 > k2) {
        return Err(regime("dstar needs kappa1 > kappa2"));
    }
    let ratio = (-lam * t).exp_m1() / (-(lam + k1) * t).exp_m1();
    Ok(t1 - k2 * (k1 + lam) * (t2 - t1) / (lam * (k1 - k2)) * ratio)
}
