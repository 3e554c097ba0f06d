//! Adaptive Dormand–Prince 8(5,3) integration with continuous output.
//!
//! The solver is generic over the state dimension; phase-plane runs
//! (`x, ẋ`) are wrapped in [`Trajectory`], which adds the event log and the
//! energy bookkeeping.

use std::fmt;
use std::io::{self, Write};

use crate::dop853;
use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::forcing::ForcingTerm;
use crate::potentials::Potential;
use crate::quadrature::kronrod15;
use crate::roots::bisect;

/// Phase point `(x, ẋ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x: f64,
    pub v: f64,
}

impl State {
    pub const fn new(x: f64, v: f64) -> Self {
        Self { x, v }
    }

    pub fn dist(&self, other: &State) -> f64 {
        (self.x - other.x).hypot(self.v - other.v)
    }

    fn to_array(self) -> [f64; 2] {
        [self.x, self.v]
    }

    fn from_array(y: [f64; 2]) -> Self {
        Self { x: y[0], v: y[1] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Smallest admissible distance `x − a` to a singular left endpoint.
    pub singularity_margin: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.1,
            singularity_margin: 1e-9,
            max_steps: 5_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.rel_tol) || !positive(self.abs_tol) {
            return Err(Error::invalid("integrator tolerances must be positive"));
        }
        if !positive(self.singularity_margin) {
            return Err(Error::invalid("singularity margin must be positive"));
        }
        if !positive(self.max_step) || self.max_steps == 0 {
            return Err(Error::invalid("max_step and max_steps must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FailureKind {
    StepLimit {
        max_steps: usize,
    },
    Singularity {
        x: f64,
        distance: f64,
    },
    StepUnderflow {
        h: f64,
    },
    /// The right-hand side could not be evaluated at the start of a segment.
    InvalidStart,
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureKind::StepLimit { max_steps } => write!(f, "step limit {max_steps} exceeded"),
            FailureKind::Singularity { x, distance } => {
                write!(
                    f,
                    "approached the singular endpoint (x = {x}, distance {distance:e})"
                )
            }
            FailureKind::StepUnderflow { h } => write!(f, "step size underflow (h = {h:e})"),
            FailureKind::InvalidStart => write!(f, "right-hand side undefined at segment start"),
        }
    }
}

/// Integration failure carrying everything computed before it.
#[derive(Debug, Clone)]
pub struct IntegrationFailure<P> {
    pub kind: FailureKind,
    pub t: f64,
    pub partial: P,
}

impl<P> fmt::Display for IntegrationFailure<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at t = {}", self.kind, self.t)
    }
}

/// Knots and per-step interpolation coefficients of an accepted solution.
#[derive(Debug, Clone)]
pub struct DenseSolution<const N: usize> {
    times: Vec<f64>,
    states: Vec<[f64; N]>,
    cont: Vec<[[f64; N]; 8]>,
    pub stats: StepStats,
}

impl<const N: usize> DenseSolution<N> {
    fn start(t0: f64, y0: [f64; N]) -> Self {
        Self {
            times: vec![t0],
            states: vec![y0],
            cont: Vec::new(),
            stats: StepStats::default(),
        }
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[[f64; N]] {
        &self.states
    }

    pub fn last(&self) -> [f64; N] {
        self.states[self.states.len() - 1]
    }

    /// Index of the step containing `t` (clamped to the covered range).
    pub fn step_index(&self, t: f64) -> usize {
        let n_steps = self.cont.len();
        if n_steps == 0 {
            return 0;
        }
        let idx = self.times.partition_point(|&k| k <= t);
        idx.saturating_sub(1).min(n_steps - 1)
    }

    pub fn step_bounds(&self, k: usize) -> (f64, f64) {
        (self.times[k], self.times[k + 1])
    }

    /// Interpolated state; exact at knots. Clamps `t` to the covered range.
    pub fn eval(&self, t: f64) -> [f64; N] {
        if self.cont.is_empty() || t <= self.times[0] {
            return self.states[0];
        }
        if t >= self.t_end() {
            return self.last();
        }
        self.eval_in_step(self.step_index(t), t)
    }

    pub fn eval_in_step(&self, k: usize, t: f64) -> [f64; N] {
        let (ta, tb) = (self.times[k], self.times[k + 1]);
        dop853::interpolate(&self.cont[k], (t - ta) / (tb - ta))
    }
}

/// Right-hand side `f(t, y, segment_midpoint)`; `None` marks a stage outside
/// the domain, which rejects the step.
pub(crate) type Rhs<'a, const N: usize> = dyn Fn(f64, &[f64; N], f64) -> Option<[f64; N]> + 'a;

/// Guard applied to every accepted state.
pub(crate) type Guard<'a, const N: usize> = dyn Fn(&[f64; N]) -> Option<FailureKind> + 'a;

fn weighted_norm<const N: usize>(v: &[f64; N], y: &[f64; N], cfg: &IntegratorConfig) -> f64 {
    let mut sum = 0.0;
    for i in 0..N {
        let sk = cfg.abs_tol + cfg.rel_tol * y[i].abs();
        sum += (v[i] / sk).powi(2);
    }
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize>(
    rhs: &Rhs<'_, N>,
    t: f64,
    y: &[f64; N],
    f0: &[f64; N],
    mid: f64,
    span: f64,
    cfg: &IntegratorConfig,
) -> f64 {
    let d0 = weighted_norm(y, y, cfg);
    let d1 = weighted_norm(f0, y, cfg);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(span).min(cfg.max_step);
    let mut y1 = *y;
    for i in 0..N {
        y1[i] += h0 * f0[i];
    }
    let d2 = match rhs(t + h0, &y1, mid) {
        Some(f1) => {
            let mut diff = [0.0; N];
            for i in 0..N {
                diff[i] = f1[i] - f0[i];
            }
            weighted_norm(&diff, y, cfg) / h0
        }
        None => return h0 * 0.1,
    };
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 8.0)
    };
    // near-zero states make the heuristic collapse; error control rejects
    // an overly large proposal anyway
    let floor = 1e-10 * t.abs().max(1.0);
    (100.0 * h0).min(h1).max(floor).min(span).min(cfg.max_step)
}

/// Integrates from `t0` to `t1 ≥ t0`, ending steps exactly at every
/// breakpoint. With `kink = Some(i)`, a step across a sign change of
/// component `i` is retaken so that it ends just past the crossing.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve<const N: usize>(
    rhs: &Rhs<'_, N>,
    guard: &Guard<'_, N>,
    kink: Option<usize>,
    y0: [f64; N],
    t0: f64,
    t1: f64,
    breakpoints: &[f64],
    cfg: &IntegratorConfig,
) -> std::result::Result<DenseSolution<N>, IntegrationFailure<DenseSolution<N>>> {
    let mut sol = DenseSolution::start(t0, y0);
    if t1 <= t0 {
        return Ok(sol);
    }
    let mut nodes = vec![t0];
    nodes.extend(breakpoints.iter().copied().filter(|&b| b > t0 && b < t1));
    nodes.push(t1);

    let fail = |sol: DenseSolution<N>, kind, t| IntegrationFailure {
        kind,
        t,
        partial: sol,
    };

    // proposed step, carried across segments
    let mut h_next = 0.0;
    let mut y = y0;
    for seg in nodes.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let mid = 0.5 * (a + b);
        let f = |t: f64, y: &[f64; N]| rhs(t, y, mid);
        let mut t = a;
        let Some(mut k1) = f(t, &y) else {
            return Err(fail(sol, FailureKind::InvalidStart, t));
        };
        sol.stats.evaluations += 1;
        if h_next == 0.0 {
            h_next = initial_step(rhs, t, &y, &k1, mid, b - a, cfg);
            sol.stats.evaluations += 1;
        }
        let mut last_rejected = false;
        let mut kink_retry = false;
        while t < b {
            if sol.stats.accepted >= cfg.max_steps {
                return Err(fail(
                    sol,
                    FailureKind::StepLimit {
                        max_steps: cfg.max_steps,
                    },
                    t,
                ));
            }
            let h_min = 1e-14 * t.abs().max(1.0);
            if h_next < h_min {
                return Err(fail(sol, FailureKind::StepUnderflow { h: h_next }, t));
            }
            h_next = h_next.min(cfg.max_step);
            let mut h = h_next;
            let mut last = false;
            if t + h * (1.0 + 1e-12) >= b {
                h = b - t;
                last = true;
            }
            let Some(step) = dop853::attempt(&f, t, &y, &k1, h, cfg.rel_tol, cfg.abs_tol) else {
                sol.stats.rejected += 1;
                sol.stats.evaluations += 12;
                h_next = 0.25 * h;
                last_rejected = true;
                continue;
            };
            sol.stats.evaluations += 12;
            if !step.err.is_finite() || step.err > 1.0 {
                sol.stats.rejected += 1;
                h_next = if step.err.is_finite() {
                    h / (step.err.powf(1.0 / 8.0) / 0.9).min(3.0)
                } else {
                    0.25 * h
                };
                last_rejected = true;
                continue;
            }
            let Some(coeffs) = dop853::dense(&f, t, &y, &step, h) else {
                sol.stats.rejected += 1;
                h_next = 0.25 * h;
                last_rejected = true;
                continue;
            };
            sol.stats.evaluations += 3;
            if let Some(c) = kink {
                if !kink_retry && y[c] * step.y1[c] < 0.0 {
                    let comp = |theta: f64| dop853::interpolate_component(&coeffs, theta, c);
                    if let Ok(theta) = bisect(comp, 0.0, 1.0, 1e-14) {
                        let h_cut = h * (theta + 1e-9);
                        if h_cut < 0.999 * h && h_cut > h_min {
                            h_next = h_cut;
                            kink_retry = true;
                            continue;
                        }
                    }
                }
            }
            let t_new = if last { b } else { t + h };
            sol.times.push(t_new);
            sol.states.push(step.y1);
            sol.cont.push(coeffs);
            sol.stats.accepted += 1;
            if let Some(kind) = guard(&step.y1) {
                return Err(fail(sol, kind, t_new));
            }
            t = t_new;
            y = step.y1;
            k1 = step.k[12];
            let mut fac = if step.err == 0.0 {
                6.0
            } else {
                (0.9 / step.err.powf(1.0 / 8.0)).clamp(1.0 / 3.0, 6.0)
            };
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            // a step shortened to reach a segment end or a kink does not
            // limit the next proposal
            if !(last || kink_retry) {
                h_next = h * fac;
            } else {
                h_next = h_next.max(h * fac);
            }
            kink_retry = false;
        }
    }
    Ok(sol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// `x` changes sign.
    PositionZero,
    /// `ẋ` changes sign (turning point).
    VelocityZero,
    /// Forcing discontinuity where the step grid was split.
    Breakpoint,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::PositionZero => "x_zero",
            EventKind::VelocityZero => "v_zero",
            EventKind::Breakpoint => "breakpoint",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
    /// +1 for an upward crossing, −1 downward, 0 for breakpoints.
    pub direction: i8,
}

/// Phase-plane solution with events and energy-envelope bookkeeping.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dense: DenseSolution<2>,
    events: Vec<Event>,
    /// Smallest slack of the a-priori energy bound over all knots (forced runs).
    pub envelope_slack: Option<f64>,
}

impl Trajectory {
    fn from_dense(dense: DenseSolution<2>, breakpoints: &[f64]) -> Self {
        let mut events = detect_events(&dense);
        let (t0, t1) = (dense.t_start(), dense.t_end());
        events.extend(
            breakpoints
                .iter()
                .filter(|&&b| b > t0 && b <= t1)
                .map(|&t| Event {
                    kind: EventKind::Breakpoint,
                    t,
                    direction: 0,
                }),
        );
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
        Self {
            dense,
            events,
            envelope_slack: None,
        }
    }

    pub fn t_start(&self) -> f64 {
        self.dense.t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.dense.t_end()
    }

    pub fn eval(&self, t: f64) -> State {
        State::from_array(self.dense.eval(t))
    }

    pub fn start(&self) -> State {
        State::from_array(self.dense.states[0])
    }

    pub fn end(&self) -> State {
        State::from_array(self.dense.last())
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, State)> + '_ {
        self.dense
            .times
            .iter()
            .zip(&self.dense.states)
            .map(|(&t, y)| (t, State::from_array(*y)))
    }

    pub fn knot_times(&self) -> &[f64] {
        self.dense.times()
    }

    pub fn len(&self) -> usize {
        self.dense.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dense.times.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn stats(&self) -> StepStats {
        self.dense.stats
    }

    pub fn dense(&self) -> &DenseSolution<2> {
        &self.dense
    }

    /// Sup of `f(state)` over `[a, b]`, sampling knots plus `per_step`
    /// interior points of every overlapping step.
    pub fn sup_over<F: Fn(State) -> f64>(&self, a: f64, b: f64, per_step: usize, f: F) -> f64 {
        let mut best = f(self.eval(a)).max(f(self.eval(b)));
        let d = &self.dense;
        if d.cont.is_empty() {
            return best;
        }
        let k0 = d.step_index(a);
        let k1 = d.step_index(b);
        for k in k0..=k1 {
            let (ta, tb) = d.step_bounds(k);
            for j in 0..=per_step {
                let t = ta + (tb - ta) * j as f64 / (per_step + 1) as f64;
                if t >= a && t <= b {
                    best = best.max(f(State::from_array(d.eval_in_step(k, t))));
                }
            }
        }
        best
    }

    /// CSV with columns `t,x,v,E` at the knots.
    pub fn write_csv<W: Write>(&self, pot: &Potential, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x,v,E")?;
        for (t, s) in self.knots() {
            let e = energy(pot, s).unwrap_or(f64::NAN);
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(t),
                fmt_f64(s.x),
                fmt_f64(s.v),
                fmt_f64(e)
            )?;
        }
        Ok(())
    }

    /// CSV with columns `kind,t`.
    pub fn write_events_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "kind,t")?;
        for e in &self.events {
            writeln!(w, "{},{}", e.kind.label(), fmt_f64(e.t))?;
        }
        Ok(())
    }
}

fn refine_crossing(dense: &DenseSolution<2>, k: usize, comp: usize) -> f64 {
    let (ta, tb) = dense.step_bounds(k);
    bisect(|t| dense.eval_in_step(k, t)[comp], ta, tb, 1e-12).unwrap_or(tb)
}

fn detect_events(dense: &DenseSolution<2>) -> Vec<Event> {
    let mut events = Vec::new();
    for k in 0..dense.cont.len() {
        let (ya, yb) = (dense.states[k], dense.states[k + 1]);
        for (comp, kind) in [(0, EventKind::PositionZero), (1, EventKind::VelocityZero)] {
            let (a, b) = (ya[comp], yb[comp]);
            // a zero exactly at a knot is attributed to the step ending there
            let crosses = (a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0);
            if crosses {
                events.push(Event {
                    kind,
                    t: refine_crossing(dense, k, comp),
                    direction: if b > a { 1 } else { -1 },
                });
            }
        }
    }
    events
}

fn phase_guard(
    pot: &Potential,
    cfg: &IntegratorConfig,
) -> impl Fn(&[f64; 2]) -> Option<FailureKind> {
    let a = pot.domain_left();
    let margin = cfg.singularity_margin;
    move |y: &[f64; 2]| {
        let distance = y[0] - a;
        (a.is_finite() && distance < margin)
            .then_some(FailureKind::Singularity { x: y[0], distance })
    }
}

fn wrap_failure(f: IntegrationFailure<DenseSolution<2>>, breakpoints: &[f64]) -> Error {
    Error::Integration(Box::new(IntegrationFailure {
        kind: f.kind,
        t: f.t,
        partial: Trajectory::from_dense(f.partial, breakpoints),
    }))
}

fn check_start(pot: &Potential, s0: State, t0: f64, t1: f64, cfg: &IntegratorConfig) -> Result<()> {
    cfg.validate()?;
    if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
        return Err(Error::invalid(format!(
            "need finite t0 <= t1, got [{t0}, {t1}]"
        )));
    }
    if !s0.v.is_finite() {
        return Err(Error::invalid("initial velocity must be finite"));
    }
    pot.v(s0.x).map(|_| ())
}

/// Solves `ẍ + V′(x) = 0` on `[t0, t1]`.
pub fn integrate_autonomous(
    pot: &Potential,
    s0: State,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    check_start(pot, s0, t0, t1, cfg)?;
    let rhs = |_t: f64, y: &[f64; 2], _mid: f64| Some([y[1], -pot.try_dv(y[0])?]);
    let guard = phase_guard(pot, cfg);
    let kink = pot.has_kink_at_origin().then_some(0);
    solve(&rhs, &guard, kink, s0.to_array(), t0, t1, &[], cfg)
        .map(|d| Trajectory::from_dense(d, &[]))
        .map_err(|f| wrap_failure(f, &[]))
}

/// Slack tolerance of the runtime energy-envelope check.
pub const ENVELOPE_TOLERANCE: f64 = 1e-6;

/// Solves `ẍ + V′(x) = ε p(t)` on `[t0, t1]`, splitting steps at every
/// forcing breakpoint and checking `|√E(t) − √E(t0)| ≤ (|ε|/√2)∫|p|` at
/// every knot.
pub fn integrate_forced(
    pot: &Potential,
    forcing: &ForcingTerm,
    eps: f64,
    s0: State,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if eps == 0.0 {
        let mut traj = integrate_autonomous(pot, s0, t0, t1, cfg)?;
        traj.envelope_slack = Some(envelope_slack(pot, forcing, eps, &traj)?);
        return Ok(traj);
    }
    check_start(pot, s0, t0, t1, cfg)?;
    if !eps.is_finite() {
        return Err(Error::invalid("eps must be finite"));
    }
    let breakpoints = forcing.breakpoints_in(t0, t1);
    let rhs = |t: f64, y: &[f64; 2], mid: f64| {
        Some([y[1], -pot.try_dv(y[0])? + eps * forcing.local(mid).eval(t)])
    };
    let guard = phase_guard(pot, cfg);
    let kink = pot.has_kink_at_origin().then_some(0);
    let mut traj = solve(&rhs, &guard, kink, s0.to_array(), t0, t1, &breakpoints, cfg)
        .map(|d| Trajectory::from_dense(d, &breakpoints))
        .map_err(|f| wrap_failure(f, &breakpoints))?;
    let slack = envelope_slack(pot, forcing, eps, &traj)?;
    traj.envelope_slack = Some(slack);
    Ok(traj)
}

/// Minimum over the knots after `t0` of `(|ε|/√2)∫|p| − |√E(t) − √E(t0)|`
/// (infinite for an empty run). A knot whose slack falls below `−tol` is
/// reported as [`Error::EnvelopeViolation`].
fn envelope_slack(
    pot: &Potential,
    forcing: &ForcingTerm,
    eps: f64,
    traj: &Trajectory,
) -> Result<f64> {
    let d = traj.dense();
    let sqrt_e0 = energy(pot, traj.start())?.sqrt();
    let mut cumulative = 0.0;
    let mut min_slack = f64::INFINITY;
    let mut violation: Option<(f64, f64)> = None;
    for k in 1..d.times.len() {
        let (ta, tb) = (d.times[k - 1], d.times[k]);
        let local = forcing.local(0.5 * (ta + tb));
        cumulative += kronrod15(|t| local.eval(t).abs(), ta, tb);
        let s = State::from_array(d.states[k]);
        let sqrt_e = energy(pot, s)?.sqrt();
        let tol = ENVELOPE_TOLERANCE + 1e-9 * sqrt_e;
        let slack = eps.abs() / std::f64::consts::SQRT_2 * cumulative - (sqrt_e - sqrt_e0).abs();
        min_slack = min_slack.min(slack);
        if slack < -tol && violation.is_none_or(|(_, worst)| slack < worst) {
            violation = Some((d.times[k], slack));
        }
    }
    if let Some((t, slack)) = violation {
        return Err(Error::EnvelopeViolation { t, slack });
    }
    Ok(min_slack)
}

/// `E = v²/2 + V(x)`.
pub fn energy(pot: &Potential, s: State) -> Result<f64> {
    Ok(0.5 * s.v * s.v + pot.v(s.x)?)
}
