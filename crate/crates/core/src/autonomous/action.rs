use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};

use crate::error::{Error, Result};
use crate::integrate::{integrate_autonomous, IntegratorConfig, State};
use crate::potentials::Potential;
use crate::quadrature::{integrate, QuadOptions};
use crate::roots::{bisect, brent};

use super::{linear_period, minimal_period};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionAngle {
    /// Angle in `[0, 2π)`, measured from the positive x-axis crossing.
    pub theta: f64,
    pub action: f64,
}

fn quad_opts() -> QuadOptions {
    QuadOptions::new(1e-15, 1e-13)
}

/// `I = (1/π)∫ √(2(V(r) − V(x))) dx` between the turning points.
pub fn action_of_amplitude(pot: &Potential, r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!(
            "amplitude r = {r} must be finite and non-negative"
        )));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let e = pot.v(r)?;
    let xm = pot.left_turning_point(e)?;
    let (mid, half) = (0.5 * (r + xm), 0.5 * (r - xm));
    // x = mid + half·sin u removes the square-root endpoint behaviour
    let integrand = |u: f64| {
        let (s, c) = u.sin_cos();
        let x = mid + half * s;
        let gap = (e - pot.v_unchecked(x)).max(0.0);
        (2.0 * gap).sqrt() * half * c
    };
    let res = integrate(integrand, -FRAC_PI_2, FRAC_PI_2, &quad_opts())?;
    Ok(res.value / PI)
}

/// Inverse of [`action_of_amplitude`]: `V(r) = N·I` when the potential's
/// isochrony integer is known, root finding on the action otherwise.
pub fn amplitude_of_action(pot: &Potential, action: f64) -> Result<f64> {
    if !(action >= 0.0) || !action.is_finite() {
        return Err(Error::invalid(format!(
            "action {action} must be finite and non-negative"
        )));
    }
    if action == 0.0 {
        return Ok(0.0);
    }
    if let Some(n) = pot.isochrony() {
        return pot.right_turning_point(n as f64 * action);
    }
    let mut hi = 1.0;
    while action_of_amplitude(pot, hi)? < action {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Bracket(format!(
                "no amplitude reaches action {action}"
            )));
        }
    }
    brent(
        |r| action_of_amplitude(pot, r).map_or(f64::NAN, |i| i - action),
        0.0,
        hi,
        0.0,
        1e-13,
    )
}

fn period_of(pot: &Potential, r: f64, cfg: &IntegratorConfig) -> Result<f64> {
    match pot.isochrony() {
        Some(n) => Ok(TAU / n as f64),
        None if r == 0.0 => linear_period(pot),
        None => minimal_period(pot, r, cfg),
    }
}

/// Polar angle measured clockwise from the positive x-axis, in `[0, 2π)`.
fn clockwise_angle(s: State) -> f64 {
    (-s.v.atan2(s.x)).rem_euclid(TAU)
}

/// Angle coordinate from the travel time τ along the orbit from `(r, 0)`:
/// θ = 2πτ/T.
pub fn to_action_angle(pot: &Potential, s: State, cfg: &IntegratorConfig) -> Result<ActionAngle> {
    if s.x == 0.0 && s.v == 0.0 {
        return Err(Error::CenterPoint);
    }
    let e = 0.5 * s.v * s.v + pot.v(s.x)?;
    let r = pot.right_turning_point(e)?;
    let action = action_of_amplitude(pot, r)?;
    let period = period_of(pot, r, cfg)?;
    let target = clockwise_angle(s);
    if target == 0.0 {
        return Ok(ActionAngle { theta: 0.0, action });
    }
    let tr = integrate_autonomous(pot, State::new(r, 0.0), 0.0, period, cfg)?;
    // the clockwise angle increases monotonically along the orbit
    // (x V′(x) > 0), so unwrap it knot by knot
    let mut prev_t = 0.0;
    let mut prev_angle = 0.0;
    let mut prev_raw = 0.0;
    for (t, st) in tr.knots().skip(1) {
        let raw = clockwise_angle(st);
        let mut inc = raw - prev_raw;
        if inc < -PI {
            inc += TAU;
        }
        let angle = prev_angle + inc;
        if angle >= target {
            let base = prev_angle - prev_raw;
            let f = |tt: f64| {
                let mut a = clockwise_angle(tr.eval(tt)) + base;
                if a < prev_angle - PI {
                    a += TAU;
                }
                a - target
            };
            let tau = bisect(f, prev_t, t, 1e-14)?;
            return Ok(ActionAngle {
                theta: (TAU * tau / period).rem_euclid(TAU),
                action,
            });
        }
        prev_t = t;
        prev_angle = angle;
        prev_raw = raw;
    }
    // target within rounding of a full turn
    Ok(ActionAngle { theta: 0.0, action })
}

/// Phase point at angle θ on the orbit of action I.
pub fn from_action_angle(
    pot: &Potential,
    aa: ActionAngle,
    cfg: &IntegratorConfig,
) -> Result<State> {
    if !aa.theta.is_finite() {
        return Err(Error::invalid("angle must be finite"));
    }
    let r = amplitude_of_action(pot, aa.action)?;
    if r == 0.0 {
        return Ok(State::new(0.0, 0.0));
    }
    let period = period_of(pot, r, cfg)?;
    let tau = aa.theta.rem_euclid(TAU) / TAU * period;
    if tau == 0.0 {
        return Ok(State::new(r, 0.0));
    }
    Ok(integrate_autonomous(pot, State::new(r, 0.0), 0.0, tau, cfg)?.end())
}

/// Time per period spent in `x < 0`:
/// `T₋ = √2 ∫_{x₋}^0 dx / √(E − V(x))` with `E = V(r(I))`.
pub fn negative_semiperiod(pot: &Potential, action: f64) -> Result<f64> {
    if !(action > 0.0) {
        return Err(Error::invalid(format!(
            "negative semi-period needs I > 0, got {action}"
        )));
    }
    let r = amplitude_of_action(pot, action)?;
    let e = pot.v(r)?;
    let xm = pot.left_turning_point(e)?;
    // x = x₋(1 − u²) makes the integrand regular at the turning point
    let integrand = |u: f64| {
        let x = xm * (1.0 - u * u);
        let gap = e - pot.v_unchecked(x);
        if gap <= 0.0 {
            return 0.0;
        }
        -2.0 * xm * u / gap.sqrt()
    };
    let res = integrate(integrand, 0.0, 1.0, &quad_opts())?;
    Ok(SQRT_2 * res.value)
}
