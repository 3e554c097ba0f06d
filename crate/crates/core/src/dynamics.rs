//! Forced experiments for `ẍ + V′(x) = ε p(t)`: long resonance runs with
//! windowed growth diagnostics, the period map and Newton shooting for
//! 2π-periodic solutions.
//!
//! A growing verdict is numerical evidence of unboundedness over the
//! simulated horizon and a converged shooting run is evidence of a periodic
//! solution; neither is a proof.

use std::f64::consts::{SQRT_2, TAU};
use std::io::{self, Write};

use serde_json::json;

use crate::error::{Error, Result};
use crate::export::{fmt_f64, json_f64};
use crate::forcing::ForcingTerm;
use crate::integrate::{energy, integrate_forced, IntegratorConfig, State};
use crate::potentials::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Growing,
    Bounded,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Growing => "growing",
            Verdict::Bounded => "bounded",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub potential: String,
    pub eps: f64,
    pub periods: usize,
    pub s0: State,
    pub cfg: IntegratorConfig,
}

/// Per-window growth record of a forced run. Window k covers
/// `[2πk, 2π(k+1)]`; the energy and envelope sequences are indexed by window
/// end, with entry 0 at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceDiagnostics {
    /// `sup (|x| + |ẋ|)` over each window.
    pub window_sup: Vec<f64>,
    /// `sup √(x² + ẋ²)` over each window.
    pub window_radius: Vec<f64>,
    /// `√E` at t = 0 and at every window end.
    pub energy_sqrt: Vec<f64>,
    /// `(|ε|/√2)∫₀ᵗ|p|` at t = 0 and at every window end.
    pub envelope_bound: Vec<f64>,
    pub verdict: Verdict,
    pub meta: RunMeta,
}

impl ResonanceDiagnostics {
    /// Smallest `envelope_bound[k] − |energy_sqrt[k] − energy_sqrt[0]|` over
    /// the window ends (infinite before the first window completes).
    pub fn min_envelope_slack(&self) -> f64 {
        let e0 = self.energy_sqrt[0];
        self.energy_sqrt
            .iter()
            .zip(&self.envelope_bound)
            .skip(1)
            .map(|(e, b)| b - (e - e0).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Least-squares slope of `window_sup` against window end time.
    pub fn sup_slope(&self) -> f64 {
        time_slope(&self.window_sup)
    }

    /// Least-squares slope of `window_radius` against window end time.
    pub fn radius_slope(&self) -> f64 {
        time_slope(&self.window_radius)
    }

    /// CSV with columns `window_index,window_sup,sqrtE,envelope`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "window_index,window_sup,sqrtE,envelope")?;
        for (k, sup) in self.window_sup.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{}",
                k,
                fmt_f64(*sup),
                fmt_f64(self.energy_sqrt[k + 1]),
                fmt_f64(self.envelope_bound[k + 1])
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "verdict": self.verdict.label(),
            "potential": self.meta.potential,
            "eps": json_f64(self.meta.eps),
            "periods": self.meta.periods,
            "completed_windows": self.window_sup.len(),
            "x0": json_f64(self.meta.s0.x),
            "v0": json_f64(self.meta.s0.v),
            "rel_tol": json_f64(self.meta.cfg.rel_tol),
            "abs_tol": json_f64(self.meta.cfg.abs_tol),
            "sup_slope": json_f64(self.sup_slope()),
            "radius_slope": json_f64(self.radius_slope()),
            "min_envelope_slack": json_f64(self.min_envelope_slack()),
            "first_window_sup": self.window_sup.first().map_or(serde_json::Value::Null, |v| json_f64(*v)),
            "last_window_sup": self.window_sup.last().map_or(serde_json::Value::Null, |v| json_f64(*v)),
        })
    }
}

fn time_slope(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let ts: Vec<f64> = (1..=n).map(|k| TAU * k as f64).collect();
    let mt = ts.iter().sum::<f64>() / n as f64;
    let mv = values.iter().sum::<f64>() / n as f64;
    let num: f64 = ts
        .iter()
        .zip(values)
        .map(|(t, v)| (t - mt) * (v - mv))
        .sum();
    let den: f64 = ts.iter().map(|t| (t - mt) * (t - mt)).sum();
    num / den
}

/// Growing: the last ⌈n/2⌉ suprema strictly increase and the last exceeds
/// twice the first. Bounded: the run maximum is at most 1.5 times the maximum
/// over the first ⌈n/4⌉ windows.
pub fn classify(window_sup: &[f64]) -> Verdict {
    let n = window_sup.len();
    if n == 0 {
        return Verdict::Inconclusive;
    }
    let tail = &window_sup[n - n.div_ceil(2)..];
    if tail.windows(2).all(|w| w[1] > w[0]) && window_sup[n - 1] > 2.0 * window_sup[0] {
        return Verdict::Growing;
    }
    let head_max = window_sup[..n.div_ceil(4)]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let run_max = window_sup.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if run_max <= 1.5 * head_max {
        Verdict::Bounded
    } else {
        Verdict::Inconclusive
    }
}

/// Samples per accepted step when taking window suprema from dense output.
const SUP_SAMPLES: usize = 8;

/// Integrates `n_periods` windows of length 2π from `s0` at t = 0.
///
/// An integration failure part-way returns [`Error::RunAborted`] with the
/// diagnostics of the completed windows.
pub fn resonance_run(
    pot: &Potential,
    f: &ForcingTerm,
    eps: f64,
    s0: State,
    n_periods: usize,
    cfg: &IntegratorConfig,
) -> Result<ResonanceDiagnostics> {
    if n_periods < 10 {
        return Err(Error::invalid(format!(
            "resonance runs need at least 10 periods, got {n_periods}"
        )));
    }
    f.validate()?;
    let e0 = energy(pot, s0)?;
    let l1 = f.l1_norm();
    let mut diag = ResonanceDiagnostics {
        window_sup: Vec::with_capacity(n_periods),
        window_radius: Vec::with_capacity(n_periods),
        energy_sqrt: vec![e0.sqrt()],
        envelope_bound: vec![0.0],
        verdict: Verdict::Inconclusive,
        meta: RunMeta {
            potential: pot.name(),
            eps,
            periods: n_periods,
            s0,
            cfg: *cfg,
        },
    };
    let mut s = s0;
    for k in 0..n_periods {
        let (t0, t1) = (TAU * k as f64, TAU * (k + 1) as f64);
        let tr = match integrate_forced(pot, f, eps, s, t0, t1, cfg) {
            Ok(tr) => tr,
            Err(e) => {
                return Err(Error::RunAborted {
                    reason: e.to_string(),
                    partial: Box::new(diag),
                })
            }
        };
        diag.window_sup
            .push(tr.sup_over(t0, t1, SUP_SAMPLES, |st| st.x.abs() + st.v.abs()));
        diag.window_radius
            .push(tr.sup_over(t0, t1, SUP_SAMPLES, |st| st.x.hypot(st.v)));
        s = tr.end();
        diag.energy_sqrt.push(energy(pot, s)?.sqrt());
        diag.envelope_bound
            .push(eps.abs() / SQRT_2 * l1 * (k + 1) as f64);
    }
    diag.verdict = classify(&diag.window_sup);
    Ok(diag)
}

/// Right-hand side of the a-priori energy estimate:
/// `√E₀ + (|ε|/√2)∫₀ᵗ|p|`.
pub fn envelope_bound(e0: f64, eps: f64, f: &ForcingTerm, t: f64) -> f64 {
    let integral = if t >= 0.0 {
        f.abs_integral(0.0, t)
    } else {
        f.abs_integral(t, 0.0)
    };
    e0.sqrt() + eps.abs() / SQRT_2 * integral
}

/// State at t = 2π of the forced solution through `s` at t = 0.
pub fn stroboscopic_map(
    pot: &Potential,
    f: &ForcingTerm,
    eps: f64,
    s: State,
    cfg: &IntegratorConfig,
) -> Result<State> {
    Ok(integrate_forced(pot, f, eps, s, 0.0, TAU, cfg)?.end())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicSearch {
    /// Best iterate (the converged fixed point on success).
    pub state: State,
    /// `|P(state) − state|`.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    /// The Jacobian of `P − id` at the final iterate is numerically singular.
    pub singular_jacobian: bool,
    /// Condition number of that Jacobian (infinite when it vanishes).
    pub condition: f64,
}

impl PeriodicSearch {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "x": json_f64(self.state.x),
            "v": json_f64(self.state.v),
            "residual": json_f64(self.residual),
            "converged": self.converged,
            "iterations": self.iterations,
            "singular_jacobian": self.singular_jacobian,
            "condition": json_f64(self.condition),
        })
    }
}

pub const SHOOTING_TOLERANCE: f64 = 1e-10;
pub const SHOOTING_MAX_ITER: usize = 50;
/// Condition number above which the shooting Jacobian counts as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;
/// Largest singular value of `DP − I` indistinguishable from finite-difference noise.
pub const JACOBIAN_NOISE_FLOOR: f64 = 1e-5;

/// Integrator settings used inside the shooting loop.
pub fn shooting_config(cfg: &IntegratorConfig) -> IntegratorConfig {
    IntegratorConfig {
        rel_tol: cfg.rel_tol.min(1e-12),
        abs_tol: cfg.abs_tol.min(1e-13),
        ..*cfg
    }
}

type Mat2 = [[f64; 2]; 2];

fn singular_values(m: &Mat2) -> (f64, f64) {
    let [[a, b], [c, d]] = *m;
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    let big = (0.5 * (s + disc)).sqrt();
    let small = if big > 0.0 { det.abs() / big } else { 0.0 };
    (big, small)
}

/// Damped Newton iteration on `G(s) = P(s) − s`, P the period map, with a
/// central-difference Jacobian.
pub fn find_periodic_solution(
    pot: &Potential,
    f: &ForcingTerm,
    eps: f64,
    seed: State,
    cfg: &IntegratorConfig,
) -> Result<PeriodicSearch> {
    pot.v(seed.x)?;
    let scfg = shooting_config(cfg);
    let g = |s: State| -> Result<[f64; 2]> {
        let p = stroboscopic_map(pot, f, eps, s, &scfg)?;
        Ok([p.x - s.x, p.v - s.v])
    };
    let norm = |v: [f64; 2]| v[0].hypot(v[1]);
    let jacobian = |s: State| -> Result<Mat2> {
        let h = 1e-6 * (s.x.abs() + s.v.abs() + 1.0);
        let mut j = [[0.0; 2]; 2];
        for col in 0..2 {
            let shift = |d: f64| {
                if col == 0 {
                    State::new(s.x + d, s.v)
                } else {
                    State::new(s.x, s.v + d)
                }
            };
            let (gp, gm) = (g(shift(h))?, g(shift(-h))?);
            for row in 0..2 {
                j[row][col] = (gp[row] - gm[row]) / (2.0 * h);
            }
        }
        Ok(j)
    };
    let mut s = seed;
    let mut gs = g(s)?;
    let mut iterations = 0;
    loop {
        let j = jacobian(s)?;
        let (big, small) = singular_values(&j);
        let condition = if small > 0.0 {
            big / small
        } else {
            f64::INFINITY
        };
        let singular = condition > SINGULAR_CONDITION || big < JACOBIAN_NOISE_FLOOR;
        let residual = norm(gs);
        if residual <= SHOOTING_TOLERANCE || singular || iterations >= SHOOTING_MAX_ITER {
            return Ok(PeriodicSearch {
                state: s,
                residual,
                converged: residual <= SHOOTING_TOLERANCE,
                iterations,
                singular_jacobian: singular,
                condition,
            });
        }
        iterations += 1;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let dx = -(j[1][1] * gs[0] - j[0][1] * gs[1]) / det;
        let dv = -(-j[1][0] * gs[0] + j[0][0] * gs[1]) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let trial = State::new(s.x + lambda * dx, s.v + lambda * dv);
            if let Ok(gt) = g(trial) {
                if norm(gt) < residual {
                    s = trial;
                    gs = gt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Ok(PeriodicSearch {
                state: s,
                residual,
                converged: false,
                iterations,
                singular_jacobian: false,
                condition,
            });
        }
    }
}
