//! Closed-form minimal equilibrium price when both groups agree on the
//! volatility (`σ₁ = σ₂ = σ`).
//!
//! With `L_i(d) = d/(λ+κᵢ) + θᵢκᵢ/(λ(λ+κᵢ))` the price is
//!
//! ```text
//! Φ(d) = L₁(d) + E·M(a₁, b₁, 2κ₁d/σ²)   for d ≤ D̃
//! Φ(d) = L₂(d) + F·U(a₂, b₂, 2κ₂d/σ²)   for d > D̃
//! ```
//!
//! with `aᵢ = λ/κᵢ`, `bᵢ = 2κᵢθᵢ/σ²`. `E` and `F` are fixed by matching value
//! and slope at `D̃`; curvature then matches through the ODE. `Φ` is the
//! minimal equilibrium price whenever `E ≥ 0`.

use alloc::vec::Vec;

use crate::error::{domain, regime, Error, Result};
use crate::market::{self, Group, ModelParams};
use crate::specfun::{self, HypergeomArgs};

#[allow(unused_imports)]
use num_traits::Float;

/// Relative tolerance of the back-substitution check on `(E, F)`.
const PASTE_CHECK_TOL: f64 = 1e-10;

/// Value and first two derivatives of a price function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
}

/// `max_i{κᵢ(θᵢ−d)φ′ + ½σᵢ²dφ″} − λφ + d`, the residual of the pricing ODE.
pub fn verify_ode_residual(params: &ModelParams, d: f64, jet: Jet) -> f64 {
    let generator = |g: Group| {
        let s = params.sigma(g);
        params.drift(g, d) * jet.slope + 0.5 * s * s * d * jet.curvature
    };
    generator(Group::One).max(generator(Group::Two)) - params.lambda * jet.value + d
}

/// Jet of the intrinsic value (piecewise affine, zero curvature).
pub fn intrinsic_jet(params: &ModelParams, d: f64) -> Jet {
    let (value, slope) = market::intrinsic_with_slope(params, d);
    Jet {
        value,
        slope,
        curvature: 0.0,
    }
}

/// Constants of the smooth-pasting solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PasteConstants {
    pub e: f64,
    pub f: f64,
    /// Determinant-like constant `A = 2m₁U₂/σ² + M₁u₂/(κ₁θ₁)`.
    pub a: f64,
    /// `M(a₁, b₁, x₁)`
    pub m1: f64,
    /// `U(a₂, b₂, x₂)`
    pub u2: f64,
    /// `M(a₁+1, b₁+1, x₁)`
    pub big_m1: f64,
    /// `U(a₂+1, b₂+1, x₂)`
    pub big_u2: f64,
    pub a1: f64,
    pub b1: f64,
    pub x1: f64,
    pub a2: f64,
    pub b2: f64,
    pub x2: f64,
    // E·m₁ and ln m₁ stay finite where m₁ itself overflows.
    e_m1: f64,
    ln_m1: f64,
}

impl PasteConstants {
    /// `E·M(a₁, b₁, x₁)`, the bubble at `D̃` seen from the left branch.
    pub fn e_times_m1(&self) -> f64 {
        self.e_m1
    }
}

fn require_closed_form_regime(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    if !params.equal_volatility() {
        return Err(regime("closed form needs sigma1 = sigma2"));
    }
    if !(params.kappa1 > params.kappa2) {
        return Err(regime(
            "closed form needs kappa1 > kappa2 (no trading boundary otherwise)",
        ));
    }
    if !market::bubble_exists(params) {
        return Err(regime(
            "closed form needs kappa1*theta1 > kappa2*theta2 (no bubble otherwise)",
        ));
    }
    market::d_tilde(params)
}

fn args(a: f64, b: f64, x: f64) -> HypergeomArgs {
    HypergeomArgs { a, b, x }
}

/// Solves the value/slope matching at `D̃` for `E` and `F`.
pub fn compute_paste_constants(params: &ModelParams) -> Result<PasteConstants> {
    let dt = require_closed_form_regime(params)?;
    let ModelParams {
        kappa1: k1,
        kappa2: k2,
        theta1: t1,
        theta2: t2,
        sigma1: s,
        lambda: lam,
        ..
    } = *params;
    let s2 = s * s;
    let (a1, b1, x1) = (lam / k1, 2.0 * k1 * t1 / s2, 2.0 * k1 * dt / s2);
    let (a2, b2, x2) = (lam / k2, 2.0 * k2 * t2 / s2, 2.0 * k2 * dt / s2);

    let ln_m1 = specfun::ln_kummer_m(args(a1, b1, x1))?;
    let ln_big_m1 = specfun::ln_kummer_m(args(a1 + 1.0, b1 + 1.0, x1))?;
    let m_ratio = (ln_big_m1 - ln_m1).exp();
    let u2 = specfun::tricomi_u(args(a2, b2, x2))?;
    let big_u2 = specfun::tricomi_u(args(a2 + 1.0, b2 + 1.0, x2))?;

    // Matching Φ₁ = Φ₂ and Φ₁' = Φ₂' at D̃, divided through by m₁:
    //   (E m₁) − F u₂ = −c κ₁κ₂(θ₁−θ₂)/λ · λ
    //   (E m₁) λ r/(κ₁θ₁) + F 2λU₂/σ² = c λ (κ₁−κ₂)
    // with c = 1/(λ(λ+κ₁)(λ+κ₂)) and r = M₁/m₁.
    let c = 1.0 / (lam * (lam + k1) * (lam + k2));
    let a_over_m1 = 2.0 * big_u2 / s2 + m_ratio * u2 / (k1 * t1);
    let e_m1 = c * (u2 * (k1 - k2) - 2.0 * big_u2 * k1 * k2 * (t1 - t2) / s2) / a_over_m1;
    let f = c * (m_ratio * k2 * (t1 - t2) / t1 + (k1 - k2)) / a_over_m1;

    let m1 = ln_m1.exp();
    let consts = PasteConstants {
        e: e_m1 * (-ln_m1).exp(),
        f,
        a: a_over_m1 * m1,
        m1,
        u2,
        big_m1: ln_big_m1.exp(),
        big_u2,
        a1,
        b1,
        x1,
        a2,
        b2,
        x2,
        e_m1,
        ln_m1,
    };

    // Back-substitution into the matching conditions.
    let left = branch_one_line(params, dt) + e_m1;
    let right = branch_two_line(params, dt) + f * u2;
    let slope_left = 1.0 / (lam + k1) + e_m1 * (2.0 * k1 / s2) * (a1 / b1) * m_ratio;
    let slope_right = 1.0 / (lam + k2) - f * (2.0 * k2 / s2) * a2 * big_u2;
    let value_gap = ((left - right) / right).abs();
    let slope_gap = ((slope_left - slope_right) / slope_right).abs();
    if !(value_gap <= PASTE_CHECK_TOL && slope_gap <= PASTE_CHECK_TOL) {
        return Err(Error::Consistency(alloc::format!(
            "smooth-pasting back-substitution failed: value gap {value_gap:e}, slope gap {slope_gap:e}"
        )));
    }
    Ok(consts)
}

fn branch_one_line(p: &ModelParams, d: f64) -> f64 {
    d / (p.lambda + p.kappa1) + p.theta1 * p.kappa1 / (p.lambda * (p.lambda + p.kappa1))
}

fn branch_two_line(p: &ModelParams, d: f64) -> f64 {
    d / (p.lambda + p.kappa2) + p.theta2 * p.kappa2 / (p.lambda * (p.lambda + p.kappa2))
}

/// Who holds the asset at dividend level `d`: group 1 below `D̃` (and at it),
/// group 2 above.
pub fn owner(params: &ModelParams, d: f64) -> Result<Group> {
    if !(params.kappa1 > params.kappa2) {
        return Err(regime("kappa1 = kappa2: no trading boundary"));
    }
    let dt = market::d_tilde(params)?;
    Ok(if d <= dt { Group::One } else { Group::Two })
}

/// Outcome of the `E ≥ 0` test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ENonneg {
    pub holds: bool,
    /// `(κ₁−κ₂)·U(a₂, b₂, x₂)`
    pub lhs: f64,
    /// `(2κ₁κ₂(θ₁−θ₂)/σ²)·U(a₂+1, b₂+1, x₂)`
    pub rhs: f64,
    /// `U(a₂+1, b₂+1, x₂)/U(a₂, b₂, x₂)`
    pub ratio: f64,
    /// `1/(x₂ − b₂)`; the test is `ratio ≤ bound` when `θ₁ > θ₂`.
    pub bound: f64,
}

/// Ratio `U(a+1, b+1, x)/U(a, b, x)` and the bound `1/(x − b)` it is compared
/// against in the `E ≥ 0` criterion.
pub fn u_ratio_check(a: f64, b: f64, x: f64) -> Result<(f64, f64)> {
    let base = HypergeomArgs::new(a, b, x)?;
    let ratio = specfun::tricomi_u(base.shifted())? / specfun::tricomi_u(base)?;
    Ok((ratio, 1.0 / (x - b)))
}

/// Checks `(κ₁−κ₂)U(a₂,b₂,x₂) ≥ (2κ₁κ₂(θ₁−θ₂)/σ²)U(a₂+1,b₂+1,x₂)`, i.e. `E ≥ 0`.
pub fn check_e_nonneg(params: &ModelParams) -> Result<ENonneg> {
    let dt = require_closed_form_regime(params)?;
    let ModelParams {
        kappa1: k1,
        kappa2: k2,
        theta1: t1,
        theta2: t2,
        sigma1: s,
        lambda: lam,
        ..
    } = *params;
    let s2 = s * s;
    let (a2, b2, x2) = (lam / k2, 2.0 * k2 * t2 / s2, 2.0 * k2 * dt / s2);
    let (ratio, bound) = u_ratio_check(a2, b2, x2)?;
    let u = specfun::tricomi_u(args(a2, b2, x2))?;
    let lhs = (k1 - k2) * u;
    let rhs = 2.0 * k1 * k2 * (t1 - t2) / s2 * ratio * u;
    Ok(ENonneg {
        holds: lhs >= rhs,
        lhs,
        rhs,
        ratio,
        bound,
    })
}

/// The closed-form price for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub params: ModelParams,
    pub consts: PasteConstants,
    pub d_bar: f64,
    pub d_tilde: f64,
}

impl ClosedForm {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let consts = compute_paste_constants(params)?;
        let t = market::thresholds(params);
        Ok(ClosedForm {
            params: *params,
            consts,
            d_bar: t.d_bar,
            d_tilde: t.d_tilde.expect("bubble regime has a trading boundary"),
        })
    }

    /// `Φ` is the minimal equilibrium price only when `E ≥ 0`.
    pub fn is_equilibrium(&self) -> bool {
        self.consts.e_m1 >= 0.0
    }

    fn ensure_equilibrium(&self) -> Result<()> {
        if self.is_equilibrium() {
            Ok(())
        } else {
            Err(regime(alloc::format!(
                "E = {:e} < 0: Phi is not an equilibrium price here; use the HJB solver",
                self.consts.e
            )))
        }
    }

    fn check_d(d: f64) -> Result<()> {
        if d >= 0.0 && d.is_finite() {
            Ok(())
        } else {
            Err(domain(alloc::format!("dividend rate must be finite and >= 0, got {d}")))
        }
    }

    fn s2(&self) -> f64 {
        self.params.sigma1 * self.params.sigma1
    }

    /// `E·m(d)`: the hypergeometric part of the left branch.
    fn left_term(&self, d: f64, shift: f64) -> Result<f64> {
        let c = &self.consts;
        let x = 2.0 * self.params.kappa1 * d / self.s2();
        let ln_m = specfun::ln_kummer_m(args(c.a1 + shift, c.b1 + shift, x))?;
        Ok(c.e_m1 * (ln_m - c.ln_m1).exp())
    }

    /// `F·u(d)`: the hypergeometric part of the right branch.
    fn right_term(&self, d: f64, shift: f64) -> Result<f64> {
        let c = &self.consts;
        let x = 2.0 * self.params.kappa2 * d / self.s2();
        Ok(c.f * specfun::tricomi_u(args(c.a2 + shift, c.b2 + shift, x))?)
    }

    /// `Φ(d)` irrespective of the sign of `E`.
    pub fn phi_unchecked(&self, d: f64) -> Result<f64> {
        Self::check_d(d)?;
        if d <= self.d_tilde {
            Ok(branch_one_line(&self.params, d) + self.left_term(d, 0.0)?)
        } else {
            Ok(branch_two_line(&self.params, d) + self.right_term(d, 0.0)?)
        }
    }

    /// Left (`Φ₁`) and right (`Φ₂`) branch jets evaluated at the same point;
    /// used for pasting diagnostics at `D̃`.
    pub fn branch_jets(&self, d: f64) -> Result<(Jet, Jet)> {
        Self::check_d(d)?;
        Ok((self.left_jet(d)?, self.right_jet(d)?))
    }

    fn left_jet(&self, d: f64) -> Result<Jet> {
        let p = &self.params;
        let c = &self.consts;
        let scale = 2.0 * p.kappa1 / self.s2();
        Ok(Jet {
            value: branch_one_line(p, d) + self.left_term(d, 0.0)?,
            slope: 1.0 / (p.lambda + p.kappa1) + scale * (c.a1 / c.b1) * self.left_term(d, 1.0)?,
            curvature: scale * scale * (c.a1 / c.b1) * ((c.a1 + 1.0) / (c.b1 + 1.0)) * self.left_term(d, 2.0)?,
        })
    }

    fn right_jet(&self, d: f64) -> Result<Jet> {
        let p = &self.params;
        let c = &self.consts;
        let scale = 2.0 * p.kappa2 / self.s2();
        Ok(Jet {
            value: branch_two_line(p, d) + self.right_term(d, 0.0)?,
            slope: 1.0 / (p.lambda + p.kappa2) - scale * c.a2 * self.right_term(d, 1.0)?,
            curvature: scale * scale * c.a2 * (c.a2 + 1.0) * self.right_term(d, 2.0)?,
        })
    }

    /// `(Φ, Φ', Φ'')` from the derivative recurrences, irrespective of `E`'s sign.
    pub fn jet_unchecked(&self, d: f64) -> Result<Jet> {
        Self::check_d(d)?;
        if d <= self.d_tilde {
            self.left_jet(d)
        } else {
            self.right_jet(d)
        }
    }

    /// Minimal equilibrium price `P*(d) = Φ(d)`.
    pub fn phi(&self, d: f64) -> Result<f64> {
        self.ensure_equilibrium()?;
        self.phi_unchecked(d)
    }

    pub fn jet(&self, d: f64) -> Result<Jet> {
        self.ensure_equilibrium()?;
        self.jet_unchecked(d)
    }

    /// `max(Φ(d), I(d))`, a lower bound on `P*` valid for either sign of `E`.
    pub fn lower_bound(&self, d: f64) -> Result<f64> {
        Ok(self.phi_unchecked(d)?.max(market::intrinsic_value(&self.params, d)))
    }

    /// Bubble `B(d) = P*(d) − I(d)` from the piecewise case formulas.
    pub fn bubble_size(&self, d: f64) -> Result<f64> {
        self.ensure_equilibrium()?;
        Self::check_d(d)?;
        let p = &self.params;
        let tilt = (p.kappa1 - p.kappa2) * (d - self.d_bar) / ((p.lambda + p.kappa1) * (p.lambda + p.kappa2));
        if p.theta1 <= p.theta2 {
            if d <= self.d_bar {
                self.left_term(d, 0.0)
            } else if d <= self.d_tilde {
                Ok(-tilt + self.left_term(d, 0.0)?)
            } else {
                self.right_term(d, 0.0)
            }
        } else if d <= self.d_tilde {
            self.left_term(d, 0.0)
        } else if d <= self.d_bar {
            Ok(tilt + self.right_term(d, 0.0)?)
        } else {
            self.right_term(d, 0.0)
        }
    }

    /// `R(d) = P*(d)/I(d) − 1`.
    pub fn relative_bubble(&self, d: f64) -> Result<f64> {
        Ok(self.phi(d)? / market::intrinsic_value(&self.params, d) - 1.0)
    }

    /// ODE residual of `Φ` at `d` with analytic derivatives.
    pub fn ode_residual(&self, d: f64) -> Result<f64> {
        Ok(verify_ode_residual(&self.params, d, self.jet_unchecked(d)?))
    }

    pub fn curve(&self, grid: &[f64]) -> Result<PriceCurve> {
        self.ensure_equilibrium()?;
        let prices = grid.iter().map(|&d| self.phi(d)).collect::<Result<Vec<_>>>()?;
        PriceCurve::from_prices(&self.params, grid, prices)
    }
}

/// Sampled price, intrinsic value, bubble and relative bubble.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceCurve {
    pub grid: Vec<f64>,
    pub intrinsic: Vec<f64>,
    pub price: Vec<f64>,
    pub bubble: Vec<f64>,
    pub relative: Vec<f64>,
}

/// Slack allowed when checking `price ≥ intrinsic` on computed prices.
const CURVE_DOMINANCE_TOL: f64 = 1e-9;

impl PriceCurve {
    /// Builds a curve from prices on `grid`, checking the curve invariants.
    pub fn from_prices(params: &ModelParams, grid: &[f64], price: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(domain("price curve needs a non-empty grid"));
        }
        if price.len() != grid.len() {
            return Err(domain("price and grid lengths differ"));
        }
        if grid[0] < 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain("grid must be strictly increasing and nonnegative"));
        }
        let intrinsic: Vec<f64> = grid.iter().map(|&d| market::intrinsic_value(params, d)).collect();
        for ((&d, &p), &i) in grid.iter().zip(&price).zip(&intrinsic) {
            if p < i - CURVE_DOMINANCE_TOL * i.abs().max(1.0) {
                return Err(Error::Consistency(alloc::format!(
                    "price {p} below intrinsic value {i} at d = {d}"
                )));
            }
        }
        let bubble = price.iter().zip(&intrinsic).map(|(p, i)| p - i).collect();
        let relative = price.iter().zip(&intrinsic).map(|(p, i)| p / i - 1.0).collect();
        Ok(PriceCurve {
            grid: grid.to_vec(),
            intrinsic,
            price,
            bubble,
            relative,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Minimal equilibrium price curve wherever a closed form applies: `I` itself
/// when no bubble exists, `Φ` in the equal-volatility bubble regime with
/// `E ≥ 0`.
pub fn price_curve(params: &ModelParams, grid: &[f64]) -> Result<PriceCurve> {
    params.validate()?;
    if !market::bubble_exists(params) {
        let price = grid.iter().map(|&d| market::intrinsic_value(params, d)).collect();
        return PriceCurve::from_prices(params, grid, price);
    }
    ClosedForm::new(params)?.curve(grid)
}
