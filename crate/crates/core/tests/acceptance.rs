//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criterion 10(i) is a known failure. For `ẍ + x = ε sin t` from rest,
//! `x = (ε/2)(sin t − t cos t)` and the window supremum of `|x| + |ẋ|` grows
//! like `√2·εt/2`, so its slope is `√2·ε/2`, not `ε/2`. The Euclidean radius
//! `√(x² + ẋ²)` has slope `ε/2` and is reported next to it. The suite
//! fails if the set of failing checks differs from [`KNOWN_FAILURES`].

use std::collections::BTreeSet;
use std::f64::consts::{PI, SQRT_2, TAU};
use std::process::ExitCode;
use std::time::Instant;

use isochron::acw::{
    acw_first_integral, acw_multiplier, acw_numeric_check, acw_orbit, acw_poincare, phi_lambda,
    AcwState,
};
use isochron::autonomous::{
    bouncing_limit_audit, dx_dI_rofe_beketov, from_action_angle, minimal_period,
    negative_semiperiod, phi_orbit, pinney_phi, pinney_psi, psi_solution, ActionAngle,
    VariationalSolution,
};
use isochron::dynamics::{find_periodic_solution, resonance_run, shooting_config, Verdict};
use isochron::forcing::ForcingTerm;
use isochron::integrate::{integrate_forced, IntegratorConfig, State};
use isochron::phi::{
    corollary_bound, default_r_grid, phi_scan, pinney_fourier_constants, winding_number, Rect,
};
use isochron::potentials::Potential;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const KNOWN_FAILURES: &[&str] = &["10(i)"];

struct Check {
    label: &'static str,
    pass: bool,
    detail: String,
}

fn check(label: &'static str, pass: bool, detail: String) -> Check {
    Check {
        label,
        pass,
        detail,
    }
}

/// Envelope slacks of every forced run made by the suite.
#[derive(Default)]
struct Envelope {
    runs: usize,
    min_slack: f64,
}

impl Envelope {
    fn record(&mut self, slack: f64) {
        if self.runs == 0 || slack < self.min_slack {
            self.min_slack = slack;
        }
        self.runs += 1;
    }
}

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn c1_harmonic_oracle() -> Vec<Check> {
    let h = Potential::harmonic(1).unwrap();
    let r_grid: Vec<f64> = (0..16).map(|k| 0.25 * k as f64).collect();
    let field = phi_scan(&h, &ForcingTerm::sin(), 64, &r_grid, &cfg()).unwrap();
    let err = field
        .values
        .iter()
        .map(|z| (z.norm() - 0.5).abs())
        .fold(0.0, f64::max);
    vec![check(
        "1",
        err <= 1e-8,
        format!("max ||Φ| − 1/2| = {err:.2e}"),
    )]
}

fn c2_two_sided_bound() -> Vec<Check> {
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let mut coef = |k: usize| {
            (0..k)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect::<Vec<f64>>()
        };
        let (cos, sin) = (coef(3), coef(3));
        let f = ForcingTerm::trig(rng.gen_range(-1.0..1.0), cos, sin).unwrap();
        for n in 1..=3u32 {
            let h = Potential::harmonic(n).unwrap();
            let i_n = f.fourier_coefficient(n as usize).norm();
            let field = phi_scan(&h, &f, 64, &grid(0.0, 5.0, 7), &cfg()).unwrap();
            for z in &field.values {
                let m = z.norm();
                worst = worst.min(m - i_n / (TAU * n as f64)).min(i_n / TAU - m);
            }
        }
    }
    vec![check(
        "2",
        worst >= -1e-9,
        format!("min slack over 20 forcings × n ∈ {{1,2,3}} = {worst:.2e}"),
    )]
}

fn c3_isochrony() -> Vec<Check> {
    let err = [0.1, 1.0, 10.0, 100.0]
        .iter()
        .map(|&r| (minimal_period(&Potential::Pinney, r, &cfg()).unwrap() - TAU).abs())
        .fold(0.0, f64::max);
    vec![check("3", err <= 1e-6, format!("max |T − 2π| = {err:.2e}"))]
}

fn c4_closed_forms(solutions: &mut Vec<VariationalSolution>) -> Vec<Check> {
    let ts = grid(0.0, TAU, 2000);
    let (mut phi_err, mut psi_err) = (0.0f64, 0.0f64);
    for r in [0.5, 1.0, 5.0] {
        let orbit = phi_orbit(&Potential::Pinney, r, &cfg()).unwrap();
        let vs = psi_solution(&Potential::Pinney, r, &cfg()).unwrap();
        for &t in &ts {
            let t_orbit = t.min(orbit.period);
            phi_err = phi_err.max(orbit.state_at(t_orbit).dist(&pinney_phi(t_orbit, r)));
            let (p, dp) = vs.eval(t);
            let (q, dq) = pinney_psi(t, r);
            psi_err = psi_err.max((p - q).norm()).max((dp - dq).norm());
        }
        solutions.push(vs);
    }
    vec![check(
        "4",
        phi_err <= 1e-8 && psi_err <= 1e-8,
        format!("sup error φ = {phi_err:.2e}, ψ = {psi_err:.2e}"),
    )]
}

fn c5_rofe_beketov() -> Vec<Check> {
    let p = Potential::Pinney;
    let ts: Vec<f64> = grid(-PI, PI, 120)
        .into_iter()
        .filter(|t| (t.abs() - PI).abs() >= 0.2)
        .collect();
    let mut worst = 0.0f64;
    for r in [0.5, 1.0, 5.0] {
        let action = p.v(r).unwrap();
        let h = 1e-4 * action;
        let x_at = |i: f64, t: f64| pinney_phi(t, p.right_turning_point(i).unwrap()).x;
        let rb = dx_dI_rofe_beketov(&p, r, &ts, &cfg()).unwrap();
        for (&t, d) in ts.iter().zip(&rb) {
            let fd = (x_at(action + h, t) - x_at(action - h, t)) / (2.0 * h);
            worst = worst.max((d - fd).abs() / fd.abs());
        }
    }
    vec![check(
        "5",
        worst <= 1e-4,
        format!("max relative difference = {worst:.2e}"),
    )]
}

fn c6_wronskian(solutions: &mut Vec<VariationalSolution>) -> Vec<Check> {
    for r in [0.0, 0.2, 2.0] {
        solutions.push(psi_solution(&Potential::Pinney, r, &cfg()).unwrap());
    }
    solutions.push(psi_solution(&Potential::harmonic(2).unwrap(), 1.0, &cfg()).unwrap());
    let (mut w_err, mut lower) = (0.0f64, f64::INFINITY);
    for vs in solutions.iter() {
        let ts = grid(0.0, vs.t_end(), 2000);
        let sup_dpsi = ts.iter().map(|&t| vs.eval(t).1.norm()).fold(0.0, f64::max);
        for &t in &ts {
            w_err = w_err.max((vs.wronskian(t) - 1.0).abs());
            lower = lower.min(vs.psi(t).norm() * sup_dpsi);
        }
    }
    vec![check(
        "6",
        w_err <= 1e-8 && lower >= 1.0 - 1e-6,
        format!(
            "{} solutions: max |W − 1| = {w_err:.2e}, min |ψ|·sup|ψ̇| = {lower:.6}",
            solutions.len()
        ),
    )]
}

fn c7_negative_semiperiod() -> Vec<Check> {
    let p = Potential::Pinney;
    let got = negative_semiperiod(&p, p.v(1.0).unwrap()).unwrap();
    let oracle = TAU - 4.0 * (1.0 / 5f64.sqrt()).acos();
    let values: Vec<f64> = (0..=24)
        .map(|k| negative_semiperiod(&p, 1e-2 * 10f64.powf(k as f64 / 4.0)).unwrap())
        .collect();
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let at_top = values[values.len() - 1];
    vec![check(
        "7",
        (got - oracle).abs() <= 1e-7 && decreasing && at_top < 0.1,
        format!(
            "|T₋ − oracle| = {:.2e}, decreasing = {decreasing}, T₋(1e4) = {at_top:.4}",
            (got - oracle).abs()
        ),
    )]
}

fn c8_bouncing() -> Vec<Check> {
    let recs =
        bouncing_limit_audit(&Potential::Pinney, &[1e2, 1e3, 1e4], 0.1, 401, &cfg()).unwrap();
    let last = &recs[2];
    let at0: Vec<f64> = recs.iter().map(|r| (r.dxdi_at_0 - SQRT_2).abs()).collect();
    let decreasing = recs.windows(2).all(|w| {
        w[1].sup_x_defect < w[0].sup_x_defect && w[1].sup_dxdi_defect < w[0].sup_dxdi_defect
    }) && at0.windows(2).all(|w| w[1] < w[0]);
    vec![check(
        "8",
        last.sup_x_defect <= 0.05 && at0[2] <= 1e-2 && decreasing,
        format!(
            "I = 1e4: sup x defect = {:.4}, √I·∂x/∂I(0) = {:.5}; defects decrease = {decreasing}",
            last.sup_x_defect, last.dxdi_at_0
        ),
    )]
}

fn c9_corollary() -> Vec<Check> {
    let fc0 = pinney_fourier_constants(0.0).unwrap();
    let far = pinney_fourier_constants(1e3).unwrap();
    let log_grid: Vec<f64> = (0..20)
        .map(|k| 1e-2 * 10f64.powf(5.0 * k as f64 / 19.0))
        .collect();
    let consts: Vec<_> = log_grid
        .iter()
        .map(|&r| pinney_fourier_constants(r).unwrap())
        .collect();
    let monotone = consts
        .windows(2)
        .all(|w| w[1].d_plus < w[0].d_plus && w[1].c0 > w[0].c0);
    let constants_ok = (fc0.d_minus - 0.5).abs() <= 1e-9
        && (far.d_plus - 2.0 / (3.0 * PI)).abs() <= 1e-3
        && (far.c0 - 2.0 / PI).abs() <= 1e-3;
    let r_grid = default_r_grid(1e3, 60).unwrap();
    let mut slack = f64::INFINITY;
    for (a0, a1, b1) in [(0.0, 0.0, 1.0), (0.1, 1.0, 0.0), (0.2, 0.5, 0.5)] {
        let bound = corollary_bound(a0, a1, b1).phi_lower_bound;
        let f = ForcingTerm::trig(a0, vec![a1], vec![b1]).unwrap();
        let field = phi_scan(&Potential::Pinney, &f, 256, &r_grid, &cfg()).unwrap();
        let mins = field
            .values
            .iter()
            .chain(field.infinity_slice.iter().flatten());
        slack = slack.min(mins.map(|z| z.norm() - bound).fold(f64::INFINITY, f64::min));
    }
    vec![check(
        "9",
        constants_ok && monotone && slack >= -1e-6,
        format!(
            "d₋(0) = {:.10}, d₊(1e3) = {:.5}, c₀(1e3) = {:.5}, monotone = {monotone}, min |Φ| − bound = {slack:.4}",
            fc0.d_minus, far.d_plus, far.c0
        ),
    )]
}

fn c10_resonance(env: &mut Envelope) -> Vec<Check> {
    let eps = 0.05;
    let origin = State::new(0.0, 0.0);
    let h = Potential::harmonic(1).unwrap();

    let lin = resonance_run(&h, &ForcingTerm::sin(), eps, origin, 100, &cfg()).unwrap();
    env.record(lin.min_envelope_slack());
    let (slope, radius) = (lin.sup_slope(), lin.radius_slope());
    let target = eps / 2.0;

    let pin = resonance_run(
        &Potential::Pinney,
        &ForcingTerm::sin(),
        eps,
        origin,
        200,
        &cfg(),
    )
    .unwrap();
    env.record(pin.min_envelope_slack());
    let tail = &pin.window_sup[100..];
    let increasing = tail.windows(2).all(|w| w[1] > w[0]);

    let off = resonance_run(
        &h,
        &ForcingTerm::harmonic(2, 1.0, 0.0),
        eps,
        origin,
        200,
        &cfg(),
    )
    .unwrap();
    env.record(off.min_envelope_slack());

    vec![
        check(
            "10(i)",
            (slope - target).abs() <= 0.1 * target,
            format!("window_sup slope = {slope:.6} vs ε/2 = {target} (radius slope = {radius:.6})"),
        ),
        check(
            "10(ii)",
            pin.verdict == Verdict::Growing && increasing,
            format!(
                "verdict = {}, last 100 suprema strictly increasing = {increasing}",
                pin.verdict.label()
            ),
        ),
        check(
            "10(iii)",
            off.verdict == Verdict::Bounded,
            format!("verdict = {}", off.verdict.label()),
        ),
    ]
}

fn c11_periodic(env: &mut Envelope) -> Vec<Check> {
    let p = Potential::Pinney;
    let fc = pinney_fourier_constants(1.0).unwrap();
    let f = ForcingTerm::trig(fc.d_plus / fc.c0, vec![1.0], vec![]).unwrap();
    let rect = Rect {
        theta0: PI - 0.5,
        theta1: PI + 0.5,
        r0: 0.5,
        r1: 2.0,
    };
    let winding = winding_number(&p, &f, rect, &cfg()).unwrap();
    let seed = from_action_angle(
        &p,
        ActionAngle {
            theta: -PI,
            action: p.v(1.0).unwrap(),
        },
        &cfg(),
    )
    .unwrap();
    let found = find_periodic_solution(&p, &f, 0.01, seed, &cfg()).unwrap();
    let tight = shooting_config(&cfg());
    let mut s = found.state;
    let mut closure = 0.0f64;
    for k in 0..10 {
        let tr = integrate_forced(
            &p,
            &f,
            0.01,
            s,
            TAU * k as f64,
            TAU * (k + 1) as f64,
            &tight,
        )
        .unwrap();
        env.record(tr.envelope_slack.unwrap());
        s = tr.end();
        closure = closure.max(s.dist(&found.state));
    }
    vec![check(
        "11",
        winding.abs() == 1 && found.converged && found.residual <= 1e-8 && closure <= 1e-7,
        format!(
            "winding = {winding}, residual = {:.2e} after {} iterations, 10-period closure = {closure:.2e}",
            found.residual, found.iterations
        ),
    )]
}

fn c12_acw() -> Vec<Check> {
    let mut rng = StdRng::seed_from_u64(12);
    let (mut comp, mut drift, mut growth) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let c = rng.gen_range(0.05..20.0);
        let s = AcwState::new(rng.gen_range(0.1..5.0), rng.gen_range(-3.0..3.0)).unwrap();
        let a = acw_poincare(c, s).unwrap();
        let b = phi_lambda(c, phi_lambda(1.0, s).unwrap()).unwrap();
        comp = comp.max((a.x - b.x).abs().max((a.y - b.y).abs()));
        let orbit = acw_orbit(c, s, 20).unwrap();
        let i0 = acw_first_integral(s);
        drift = drift.max(
            orbit
                .iter()
                .map(|q| (acw_first_integral(*q) - i0).abs())
                .fold(0.0, f64::max),
        );
        if c > 1.0 {
            let slope = acw_multiplier(c, s).unwrap().ln();
            for (n, q) in orbit.iter().enumerate() {
                growth = growth.max((q.x.ln() - s.x.ln() - n as f64 * slope).abs());
            }
        }
    }
    let mut flow = 0.0f64;
    for c in [0.25, 1.0, 4.0] {
        for i in 0..5 {
            for j in 0..5 {
                let s = AcwState::new(0.5 + 2.5 * i as f64 / 4.0, -2.0 + j as f64).unwrap();
                flow = flow.max(acw_numeric_check(c, s, &cfg()).unwrap().max_err);
            }
        }
    }
    let s = AcwState::new(1.3, -0.4).unwrap();
    let constant = acw_orbit(1.0, s, 100).unwrap().iter().all(|q| *q == s);
    vec![check(
        "12",
        comp <= 1e-12 && drift <= 1e-12 && growth <= 1e-9 && flow <= 1e-6 && constant,
        format!(
            "composition = {comp:.1e}, xy drift = {drift:.1e}, log-slope error = {growth:.1e}, map/flow = {flow:.1e}, c = 1 constant = {constant}"
        ),
    )]
}

fn c13_appendix() -> Vec<Check> {
    let p = Potential::Pinney;
    let iso = p.appendix_audit(&[0.5, 1.0, 2.0, 10.0]).unwrap();
    let iso_err = iso
        .iso_residuals
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let at100 = p.appendix_audit(&[100.0]).unwrap().slope_defects[0];
    let want = 0.25 - 0.25 / 101f64.powi(3);
    let ladder = p
        .appendix_audit(&[1.0, 10.0, 100.0, 1e3, 1e4])
        .unwrap()
        .slope_defects;
    let monotone = ladder
        .windows(2)
        .all(|w| w[1] > w[0] && w[1] <= 0.25 + 1e-12);
    vec![check(
        "13",
        iso_err <= 1e-9 && (at100 - want).abs() <= 1e-9 && monotone,
        format!("max iso residual = {iso_err:.1e}, slope_defect(100) = {at100:.11}, monotone to 1/4 = {monotone}"),
    )]
}

fn c14_envelope(env: &Envelope) -> Vec<Check> {
    vec![check(
        "14",
        env.runs > 0 && env.min_slack >= -1e-6,
        format!(
            "{} forced runs, min envelope slack = {:.3e}",
            env.runs, env.min_slack
        ),
    )]
}

fn main() -> ExitCode {
    let mut solutions = Vec::new();
    let mut env = Envelope::default();
    let mut failed = BTreeSet::new();
    let mut report = |n: usize, started: Instant, checks: Vec<Check>| {
        let pass = checks.iter().all(|c| c.pass);
        let detail: Vec<String> = checks
            .iter()
            .map(|c| {
                if checks.len() > 1 {
                    format!(
                        "{} {}: {}",
                        c.label,
                        if c.pass { "ok" } else { "FAIL" },
                        c.detail
                    )
                } else {
                    c.detail.clone()
                }
            })
            .collect();
        println!(
            "criterion {n:>2} {} [{:.2}s] {}",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            detail.join("; ")
        );
        failed.extend(checks.iter().filter(|c| !c.pass).map(|c| c.label));
    };
    macro_rules! run {
        ($n:expr, $e:expr) => {{
            let started = Instant::now();
            let checks = $e;
            report($n, started, checks);
        }};
    }
    run!(1, c1_harmonic_oracle());
    run!(2, c2_two_sided_bound());
    run!(3, c3_isochrony());
    run!(4, c4_closed_forms(&mut solutions));
    run!(5, c5_rofe_beketov());
    run!(6, c6_wronskian(&mut solutions));
    run!(7, c7_negative_semiperiod());
    run!(8, c8_bouncing());
    run!(9, c9_corollary());
    run!(10, c10_resonance(&mut env));
    run!(11, c11_periodic(&mut env));
    run!(12, c12_acw());
    run!(13, c13_appendix());
    run!(14, c14_envelope(&env));

    let known: BTreeSet<&str> = KNOWN_FAILURES.iter().copied().collect();
    if failed == known {
        println!("acceptance: failing checks match the known set {known:?}");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing checks {failed:?} differ from the known set {known:?}");
        ExitCode::FAILURE
    }
}
