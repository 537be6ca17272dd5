//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::fmt::Display;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use bubble_cli::parallel::{par_intrinsic, par_stopping_value};
use bubble_core::closed_form::{owner, u_ratio_check, ClosedForm};
use bubble_core::hjb::{resale_fixed_point, solve_hjb, supersolution_residual, DEFAULT_TOL};
use bubble_core::market::{bubble_exists, intrinsic_branch, intrinsic_value, normalize_params};
use bubble_core::mc::{conditional_mean_check, min_intrinsic_horizon, StoppingRule};
use bubble_core::specfun::{
    kummer_m, kummer_m_prime, kummer_m_second, m_ratio_cf, tricomi_u, tricomi_u_prime, tricomi_u_second, HypergeomArgs,
    CF_MAX_DEPTH,
};
use bubble_core::{Grid, Group, ModelParams, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Collects failed checks and a few headline numbers for the summary line.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Display) {
        if !ok {
            self.failures.push(what.to_string());
        }
    }

    fn note(&mut self, what: impl Display) {
        self.notes.push(what.to_string());
    }
}

fn set(kappa1: f64, kappa2: f64, theta1: f64, theta2: f64, sigma: f64) -> ModelParams {
    ModelParams {
        kappa1,
        kappa2,
        theta1,
        theta2,
        sigma1: sigma,
        sigma2: sigma,
        lambda: 0.02,
    }
}

fn below_kink() -> ModelParams {
    set(0.2, 0.1, 0.015, 0.02, 0.02)
}

fn above_kink() -> ModelParams {
    set(0.2, 0.1, 0.04, 0.02, 0.02)
}

fn equal_means() -> ModelParams {
    set(0.2, 0.1, 0.04, 0.04, 0.02)
}

fn reference_sets() -> [(&'static str, ModelParams); 3] {
    [
        ("theta1<theta2", below_kink()),
        ("theta1>theta2", above_kink()),
        ("theta1=theta2", equal_means()),
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Parameters with Feller holding for both groups; about a quarter of the
/// draws have `κ₁ = κ₂`. The bubble shrinks continuously to zero as
/// `κ₁θ₁ → κ₂θ₂`, so draws with `κ₁θ₁/κ₂θ₂` within 5% of one are rejected.
fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    let k2 = rng.random_range(0.02..0.3f64);
    let k1 = if rng.random_bool(0.25) {
        k2
    } else {
        k2 * rng.random_range(1.05..3.0)
    };
    let (t1, t2) = loop {
        let t1 = rng.random_range(0.01..0.08f64);
        let t2 = rng.random_range(0.01..0.08f64);
        let r = k1 * t1 / (k2 * t2);
        if !(1.0 / 1.05..1.05).contains(&r) {
            break (t1, t2);
        }
    };
    let s1 = rng.random_range(0.2..1.0) * (2.0 * k1 * t1).sqrt();
    let s2 = rng.random_range(0.2..1.0) * (2.0 * k2 * t2).sqrt();
    ModelParams {
        kappa1: k1,
        kappa2: k2,
        theta1: t1,
        theta2: t2,
        sigma1: s1,
        sigma2: s2,
        lambda: rng.random_range(0.01..0.1),
    }
}

/// Equal-volatility parameters inside the bubble region.
fn random_bubble_params(rng: &mut ChaCha8Rng) -> ModelParams {
    let k2 = rng.random_range(0.02..0.3f64);
    let k1 = k2 + rng.random_range(0.01..0.5);
    let t2 = rng.random_range(0.01..0.08f64);
    let lo = k2 * t2 / k1 * 1.01;
    let t1 = rng.random_range(lo..0.1);
    let s = rng.random_range(0.1..1.0) * (2.0 * (k1 * t1).min(k2 * t2)).sqrt();
    ModelParams {
        lambda: rng.random_range(0.01..0.1),
        ..set(k1, k2, t1, t2, s)
    }
}

fn existence_truth_table() -> Checks {
    let mut c = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut n_true, mut max_false, mut min_true) = (0, 0.0f64, f64::INFINITY);
    for i in 0..200 {
        let p = normalize_params(random_params(&mut rng)).unwrap().params;
        let want = p.kappa1 > p.kappa2 && p.kappa1 * p.theta1 > p.kappa2 * p.theta2;
        c.check(
            bubble_exists(&p) == want,
            format_args!("sweep {i}: predicate disagrees for {p:?}"),
        );
        let r = match solve_hjb(&p, Grid::with_default_extent(&p, 801).unwrap(), DEFAULT_TOL) {
            Ok(r) => r,
            Err(e) => {
                c.check(false, format_args!("sweep {i}: solve failed: {e}"));
                continue;
            }
        };
        c.check(r.converged, format_args!("sweep {i}: solve did not converge"));
        let b = r.max_bubble(&p);
        if want {
            n_true += 1;
            min_true = min_true.min(b);
            c.check(b > 1e-4, format_args!("sweep {i}: bubble {b:.3e} <= 1e-4 for {p:?}"));
        } else {
            max_false = max_false.max(b.abs());
            c.check(
                b.abs() < 1e-5,
                format_args!("sweep {i}: spurious bubble {b:.3e} for {p:?}"),
            );
        }
    }
    // κ₁θ₁ = κ₂θ₂ holds exactly in binary here; neighbours are one ulp of θ₁ away.
    let t1 = 0.02f64;
    let ulp = |x: f64, k: i64| f64::from_bits((x.to_bits() as i64 + k) as u64);
    for (k1, t1, want) in [
        (0.5, t1, false),
        (0.5, ulp(t1, 1), true),
        (0.5, ulp(t1, -1), false),
        (0.25, 0.05, false),
    ] {
        let p = set(k1, 0.25, t1, 0.04, 0.02);
        c.check(
            bubble_exists(&p) == want,
            format_args!("predicate wrong at the boundary for {p:?}"),
        );
    }
    c.note(format_args!(
        "{n_true}/200 with bubble, min {min_true:.2e}; max spurious {max_false:.2e}"
    ));
    c
}

fn below_kink_figures() -> Checks {
    let mut c = Checks::default();
    let cf = ClosedForm::new(&below_kink()).unwrap();
    c.check((cf.d_bar + 0.04).abs() <= 1e-12, format_args!("d_bar {}", cf.d_bar));
    c.check(
        (cf.d_tilde - 0.01).abs() <= 1e-12,
        format_args!("d_tilde {}", cf.d_tilde),
    );
    let r0 = cf.relative_bubble(0.0).unwrap();
    let r1 = cf.relative_bubble(0.01).unwrap();
    c.check((r0 - 0.0271).abs() <= 5e-4, format_args!("R(0) = {:.4}%", 100.0 * r0));
    c.check(
        (r1 - 0.0035).abs() <= 5e-4,
        format_args!("R(0.01) = {:.4}%", 100.0 * r1),
    );
    let tail: Vec<(f64, f64)> = (0..=970)
        .map(|i| {
            let d = 0.03 + 0.001 * i as f64;
            (d, cf.relative_bubble(d).unwrap())
        })
        .collect();
    let worst = tail
        .iter()
        .copied()
        .fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let first_ok = tail.iter().find(|&&(_, r)| r < 5e-4).map_or(f64::NAN, |&(d, _)| d);
    c.check(
        worst.1 < 5e-4,
        format_args!(
            "R(d) < 0.05% for d >= 0.03 fails: R({}) = {:.4}%, first below at d = {first_ok:.3}",
            worst.0,
            100.0 * worst.1
        ),
    );
    c.note(format_args!("R(0) = {:.3}%, R(0.01) = {:.3}%", 100.0 * r0, 100.0 * r1));
    c
}

fn above_kink_figures() -> Checks {
    let mut c = Checks::default();
    let cf = ClosedForm::new(&above_kink()).unwrap();
    c.check(
        (cf.consts.e - 1.15e-4).abs() <= 0.01e-4,
        format_args!("E = {:.4e}", cf.consts.e),
    );
    c.check((cf.d_bar - 0.26).abs() <= 1e-12, format_args!("d_bar {}", cf.d_bar));
    c.check(
        (cf.d_tilde - 0.06).abs() <= 1e-12,
        format_args!("d_tilde {}", cf.d_tilde),
    );
    let grid = Grid::new(&above_kink(), 1.0, 1001).unwrap();
    let curve = cf.curve(&grid.nodes()).unwrap();
    let (i, max) = curve
        .relative
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a });
    let at = curve.grid[i];
    c.check(
        (at - cf.d_bar).abs() <= grid.spacing() * (1.0 + 1e-9),
        format_args!("argmax R at {at}"),
    );
    c.check((max - 0.18).abs() <= 0.01, format_args!("max R = {:.3}%", 100.0 * max));
    c.note(format_args!(
        "E = {:.4e}, max R = {:.2}% at d = {at}",
        cf.consts.e,
        100.0 * max
    ));
    c
}

fn equal_means_regime() -> Checks {
    let mut c = Checks::default();
    let cf = ClosedForm::new(&equal_means()).unwrap();
    c.check((cf.d_bar - 0.04).abs() <= 1e-12, format_args!("d_bar {}", cf.d_bar));
    c.check(
        (cf.d_tilde - 0.04).abs() <= 1e-12,
        format_args!("d_tilde {}", cf.d_tilde),
    );
    c.check(cf.consts.e > 0.0, format_args!("E = {}", cf.consts.e));
    c.check(cf.consts.f > 0.0, format_args!("F = {}", cf.consts.f));
    let grid = Grid::new(&equal_means(), 1.0, 1001).unwrap();
    let curve = cf.curve(&grid.nodes()).unwrap();
    let min_b = curve.bubble.iter().copied().fold(f64::INFINITY, f64::min);
    c.check(min_b > 0.0, format_args!("min B = {min_b:e}"));
    c.note(format_args!(
        "E = {:.4e}, F = {:.4e}, min B = {min_b:.3e}",
        cf.consts.e, cf.consts.f
    ));
    c
}

fn pasting_and_slope_bounds() -> Checks {
    let mut c = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut accepted, mut worst) = (0, [0.0f64; 3]);
    while accepted < 50 {
        let p = random_bubble_params(&mut rng);
        let cf = ClosedForm::new(&p).unwrap();
        if !cf.is_equilibrium() {
            continue;
        }
        accepted += 1;
        let (l, r) = cf.branch_jets(cf.d_tilde).unwrap();
        let gaps = [
            rel(l.value, r.value),
            rel(l.slope, r.slope),
            rel(l.curvature, r.curvature),
        ];
        for (k, (&g, limit)) in gaps.iter().zip([1e-9, 1e-7, 1e-5]).enumerate() {
            worst[k] = worst[k].max(g);
            c.check(g < limit, format_args!("pasting gap {k} = {g:e} for {p:?}"));
        }
        let lo = 1.0 / (p.lambda + p.kappa1);
        let hi = 1.0 / (p.lambda + p.kappa2);
        let span = 4.0 * cf.d_tilde.max(p.theta1).max(p.theta2);
        for i in 1..=100 {
            let d = span * i as f64 / 100.0;
            let j = cf.jet(d).unwrap();
            // Φ′ reaches a bound only once the bubble is below one ulp of Φ.
            let resolvable = cf.bubble_size(d).unwrap() > 1e-14 * cf.phi(d).unwrap();
            let strict = (lo < j.slope && j.slope < hi) || !resolvable;
            c.check(
                lo <= j.slope && j.slope <= hi && strict,
                format_args!("slope {} outside ({lo}, {hi}) at {d}", j.slope),
            );
            c.check(j.curvature >= 0.0, format_args!("curvature {} at {d}", j.curvature));
        }
    }
    c.note(format_args!(
        "worst pasting gaps {:.1e} / {:.1e} / {:.1e}",
        worst[0], worst[1], worst[2]
    ));
    c
}

fn ode_and_viscosity() -> Checks {
    let mut c = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut sets: Vec<ModelParams> = reference_sets().iter().map(|s| s.1).collect();
    while sets.len() < 23 {
        let p = random_bubble_params(&mut rng);
        if ClosedForm::new(&p).unwrap().is_equilibrium() {
            sets.push(p);
        }
    }
    let mut worst = 0.0f64;
    for p in &sets {
        let cf = ClosedForm::new(p).unwrap();
        let span = 4.0 * cf.d_tilde.max(p.theta1).max(p.theta2);
        for i in 0..1000 {
            let d = span * (i as f64 + 0.5) / 1000.0;
            let r = cf.ode_residual(d).unwrap().abs();
            worst = worst.max(r);
            c.check(r < 1e-7, format_args!("ODE residual {r:e} at {d} for {p:?}"));
        }
    }
    let mut solved: Vec<ModelParams> = reference_sets().iter().map(|s| s.1).collect();
    solved.push(ModelParams {
        sigma2: 0.03,
        ..below_kink()
    });
    solved.push(ModelParams {
        sigma1: 0.01,
        ..above_kink()
    });
    let mut min_res = f64::INFINITY;
    for p in &solved {
        let r = solve_hjb(p, Grid::with_default_extent(p, 1001).unwrap(), DEFAULT_TOL).unwrap();
        c.check(r.converged, format_args!("solve did not converge for {p:?}"));
        for j in 1..r.grid.n - 1 {
            let s = supersolution_residual(&r.values, &r.grid, p, j).unwrap();
            min_res = min_res.min(s);
            c.check(
                s >= -1e-6,
                format_args!("supersolution residual {s:e} at node {j} for {p:?}"),
            );
        }
    }
    c.note(format_args!(
        "max |ODE residual| {worst:.1e}; min supersolution residual {min_res:.1e}"
    ));
    c
}

fn solver_gap(p: &ModelParams, n: usize) -> f64 {
    let cf = ClosedForm::new(p).unwrap();
    let r = solve_hjb(p, Grid::with_default_extent(p, n).unwrap(), DEFAULT_TOL).unwrap();
    assert!(r.converged, "solve did not converge at n = {n}");
    r.grid
        .nodes()
        .iter()
        .zip(&r.values)
        .map(|(&d, &v)| (v - cf.phi(d).unwrap()).abs())
        .fold(0.0, f64::max)
}

fn solver_matches_closed_form() -> Checks {
    let mut c = Checks::default();
    for (name, p) in reference_sets() {
        let coarse = solver_gap(&p, 2001);
        let fine = solver_gap(&p, 4001);
        c.check(fine < 1e-4, format_args!("{name}: gap {fine:e} at n = 4001"));
        c.check(
            coarse / fine >= 1.8,
            format_args!("{name}: refinement ratio {}", coarse / fine),
        );
        c.note(format_args!("{name}: gap {fine:.1e}, ratio {:.2}", coarse / fine));
    }
    c
}

fn resale_fixed_point_limit() -> Checks {
    let mut c = Checks::default();
    for (name, p) in reference_sets() {
        let grid = Grid::with_default_extent(&p, 401).unwrap();
        let fp = resale_fixed_point(&p, grid, 12.0 / p.lambda, 600, 400, 1e-10).unwrap();
        let mut worst_drop = 0.0f64;
        for w in fp.iterates.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                worst_drop = worst_drop.max(a - b);
            }
        }
        c.check(
            worst_drop <= 1e-12,
            format_args!("{name}: iterate decreased by {worst_drop:e}"),
        );
        let hjb = solve_hjb(&p, grid, DEFAULT_TOL).unwrap();
        let dt = ClosedForm::new(&p).unwrap().d_tilde;
        let mut gap = 0.0f64;
        for d in [0.0, dt, 2.0 * dt] {
            gap = gap.max((fp.report.interpolate(d) - hjb.interpolate(d)).abs());
        }
        c.check(gap < 5e-4, format_args!("{name}: limit differs from solver by {gap:e}"));
        c.note(format_args!("{name}: {} stages, gap {gap:.1e}", fp.iterates.len() - 1));
    }
    c
}

fn monte_carlo() -> Checks {
    let mut c = Checks::default();
    let mut worst_z = 0.0f64;
    for (s, (name, p)) in reference_sets().into_iter().enumerate() {
        for k in 0..10 {
            let d0 = 0.005 + 0.035 * k as f64;
            let g = if intrinsic_branch(&p, Group::One, d0) >= intrinsic_branch(&p, Group::Two, d0) {
                Group::One
            } else {
                Group::Two
            };
            let seed = 100 * s as u64 + k;
            let cfg = SimConfig::new(g, d0, min_intrinsic_horizon(&p), 5.0, 100_000, seed).unwrap();
            let est = par_intrinsic(&p, &cfg).unwrap();
            let exact = intrinsic_value(&p, d0);
            worst_z = worst_z.max((est.mean - exact).abs() / est.std_error);
            c.check(
                est.within(exact, 3.0),
                format_args!(
                    "{name}: intrinsic at {d0}: {} +- {} vs {exact}",
                    est.mean, est.std_error
                ),
            );
        }
    }

    let p = below_kink();
    let pairs = [
        (Group::One, 0.0, 1.0),
        (Group::One, 0.1, 5.0),
        (Group::Two, 0.05, 2.0),
        (Group::Two, 0.005, 10.0),
        (Group::One, 0.03, 0.5),
    ];
    for (i, (g, d0, t)) in pairs.into_iter().enumerate() {
        let cfg = SimConfig::new(g, d0, t, 0.01, 100_000, 200 + i as u64).unwrap();
        let m = conditional_mean_check(&p, &cfg, t).unwrap();
        c.check(
            m.passes,
            format_args!("mean at ({d0}, {t}): {:?} vs {}", m.estimate, m.expected),
        );
    }

    let mut worst_stop = 0.0f64;
    for (s, (name, p)) in reference_sets().into_iter().enumerate() {
        let cf = ClosedForm::new(&p).unwrap();
        for (k, d0) in [0.5 * cf.d_tilde, 2.0 * cf.d_tilde].into_iter().enumerate() {
            let holder = owner(&p, d0).unwrap();
            let rule = StoppingRule::at_trading_boundary(&p, d0).unwrap();
            let cfg = SimConfig::new(holder, d0, 20.0, 0.01, 20_000, 300 + 10 * s as u64 + k as u64).unwrap();
            let est = par_stopping_value(&p, &cfg, rule, |d| cf.phi(d).unwrap()).unwrap();
            let want = cf.phi(d0).unwrap();
            worst_stop = worst_stop.max((est.mean - want).abs() / est.std_error);
            c.check(
                est.within(want, 3.0),
                format_args!(
                    "{name}: resale value at {d0}: {} +- {} vs {want}",
                    est.mean, est.std_error
                ),
            );
        }
    }
    c.note(format_args!("worst |z| intrinsic {worst_z:.2}, resale {worst_stop:.2}"));
    c
}

fn args(a: f64, b: f64, x: f64) -> HypergeomArgs {
    HypergeomArgs::new(a, b, x).unwrap()
}

fn series_m(a: f64, b: f64, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 0..2000 {
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        let nf = n as f64;
        term *= (a + nf) * x / ((b + nf) * (nf + 1.0));
    }
    sum
}

/// Large-`x` asymptotic series for `U`, truncated before its smallest term.
fn asymptotic_u(a: f64, b: f64, x: f64) -> f64 {
    let mut term = 1.0_f64;
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    for k in 0..200 {
        if term.abs() >= last {
            break;
        }
        sum += term;
        last = term.abs();
        let kf = k as f64;
        term *= -(a + kf) * (a - b + 1.0 + kf) / ((kf + 1.0) * x);
    }
    x.powf(-a) * sum
}

const U_1_4_5_1000: f64 = 1.002_503_751_874_064e-3;
const U_2_5_5_1000: f64 = 1.005_011_257_495_321e-6;

fn special_functions() -> Checks {
    let mut c = Checks::default();
    let (mut worst_res, mut worst_cf) = (0.0f64, 0.0f64);
    for a in [0.05, 0.1, 0.2, 0.5, 1.0] {
        for b in [1.0, 1.5, 2.5, 4.0] {
            for x in [0.5, 1.0, 2.0, 4.0, 8.0] {
                let p = args(a, b, x);
                let m = kummer_m(p).unwrap();
                let rm = x * kummer_m_second(p).unwrap() + (b - x) * kummer_m_prime(p).unwrap() - a * m;
                let u = tricomi_u(p).unwrap();
                let ru = x * tricomi_u_second(p).unwrap() + (b - x) * tricomi_u_prime(p).unwrap() - a * u;
                let res = (rm.abs() / m.max(1.0)).max(ru.abs() / u.max(1.0));
                worst_res = worst_res.max(res);
                c.check(res < 1e-8, format_args!("Kummer residual {res:e} at ({a}, {b}, {x})"));

                let want = series_m(a, b, x) / series_m(a + 1.0, b + 1.0, x);
                let e = rel(m_ratio_cf(p, CF_MAX_DEPTH).unwrap(), want);
                worst_cf = worst_cf.max(e);
                c.check(e < 1e-10, format_args!("CF ratio error {e:e} at ({a}, {b}, {x})"));
            }
        }
    }
    for (a, x) in [(1.0, 3.0), (1.5, 1.0), (2.5, 10.0), (4.0, 0.5)] {
        let em = rel(kummer_m(args(a, a, x)).unwrap(), x.exp());
        let eu = rel(tricomi_u(args(a, a + 1.0, x)).unwrap(), x.powf(-a));
        c.check(
            em < 1e-12 && eu < 1e-12,
            format_args!("identities at ({a}, {x}): {em:e}, {eu:e}"),
        );
    }

    let (u1, u2) = (asymptotic_u(1.0, 4.5, 1000.0), asymptotic_u(2.0, 5.5, 1000.0));
    c.check(
        rel(u1, U_1_4_5_1000) < 1e-14 && rel(u2, U_2_5_5_1000) < 1e-14,
        "U oracle drifted",
    );
    let (ratio, bound) = u_ratio_check(1.0, 4.5, 1000.0).unwrap();
    c.check(
        rel(ratio, u2 / u1) < 1e-6,
        format_args!("U ratio {ratio} vs oracle {}", u2 / u1),
    );
    c.check(rel(bound, 1.0 / 995.5) < 1e-15, format_args!("bound {bound}"));
    // Truth value recorded from the oracle: the inequality holds at this point.
    c.check(ratio <= bound, format_args!("U ratio {ratio} > bound {bound}"));
    c.note(format_args!(
        "max residual {worst_res:.1e}, CF error {worst_cf:.1e}, U ratio {ratio:.9e} <= {bound:.9e}"
    ));
    c
}

type Criterion = (&'static str, fn() -> Checks);

fn main() {
    let criteria: [Criterion; 10] = [
        ("existence truth table", existence_truth_table),
        ("theta1 < theta2 reference curve", below_kink_figures),
        ("theta1 > theta2 reference curve", above_kink_figures),
        ("equal long-run means", equal_means_regime),
        ("smooth pasting and slope bounds", pasting_and_slope_bounds),
        ("ODE and viscosity consistency", ode_and_viscosity),
        ("solver against closed form", solver_matches_closed_form),
        ("resale fixed point", resale_fixed_point_limit),
        ("Monte Carlo verification", monte_carlo),
        ("special-function kernel", special_functions),
    ];
    // Numeric arguments select criteria; anything else (libtest flags) is ignored.
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (mut failed, mut ran) = (0, 0);
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        if !selected.is_empty() && !selected.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Checks {
                failures: vec![format!("panicked: {msg}")],
                notes: vec![],
            }
        });
        let secs = start.elapsed().as_secs_f64();
        if outcome.failures.is_empty() {
            println!(
                "criterion {:>2} PASS  {name} [{secs:.1}s]: {}",
                i + 1,
                outcome.notes.join("; ")
            );
        } else {
            failed += 1;
            let shown: Vec<&str> = outcome.failures.iter().take(3).map(String::as_str).collect();
            let more = outcome.failures.len().saturating_sub(3);
            let extra = if more > 0 {
                format!(" (+{more} more)")
            } else {
                String::new()
            };
            println!(
                "criterion {:>2} FAIL  {name} [{secs:.1}s]: {}{extra}",
                i + 1,
                shown.join("; ")
            );
        }
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
