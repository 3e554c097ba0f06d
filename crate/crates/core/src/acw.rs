//! `ẍ + x = R(t)/x³` with π-periodic two-piece `R`: `R = 1` on `[0, π/2)`
//! and `R = c` on `[π/2, π)`.
//!
//! Each piece is an explicitly solvable Pinney equation whose time-π/2 map
//! is `Φ_λ(x, y) = (xφ_λ, −y/φ_λ)` with `φ_λ = √(y²/x² + λ/x⁴)`. The period
//! map `P = Φ_c ∘ Φ_1` scales `x` by `Π = √((x²y² + c)/(x²y² + 1))` and
//! keeps `xy` fixed, so for `c ≠ 1` every orbit grows geometrically in `x`
//! or in `y`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::integrate::{solve, FailureKind, IntegratorConfig};

/// Point of the half-plane `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcwState {
    pub x: f64,
    pub y: f64,
}

impl AcwState {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::invalid(format!(
                "state ({x}, {y}) must have finite x > 0 and finite y"
            )));
        }
        Ok(Self { x, y })
    }
}

fn check_coefficient(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::invalid(format!(
            "{name} = {v} must be positive and finite"
        )));
    }
    Ok(())
}

/// Time-π/2 map of `ẍ + x = λ/x³`.
pub fn phi_lambda(lambda: f64, s: AcwState) -> Result<AcwState> {
    check_coefficient("lambda", lambda)?;
    AcwState::new(s.x, s.y)?;
    let (x2, ratio) = (s.x * s.x, s.y / s.x);
    let phi = (ratio * ratio + lambda / (x2 * x2)).sqrt();
    Ok(AcwState {
        x: s.x * phi,
        y: -s.y / phi,
    })
}

/// Period map for `R = r1` on the first half-period and `r2` on the second.
pub fn two_piece_poincare(r1: f64, r2: f64, s: AcwState) -> Result<AcwState> {
    phi_lambda(r2, phi_lambda(r1, s)?)
}

/// The multiplier `Π(x, y)`.
pub fn acw_multiplier(c: f64, s: AcwState) -> Result<f64> {
    check_coefficient("c", c)?;
    AcwState::new(s.x, s.y)?;
    let q = (s.x * s.y).powi(2);
    Ok(((q + c) / (q + 1.0)).sqrt())
}

/// Closed form of `Φ_c ∘ Φ_1`.
pub fn acw_poincare(c: f64, s: AcwState) -> Result<AcwState> {
    let pi = acw_multiplier(c, s)?;
    Ok(AcwState {
        x: s.x * pi,
        y: s.y / pi,
    })
}

/// `n_steps + 1` points `s0, P(s0), …, Pⁿ(s0)`.
pub fn acw_orbit(c: f64, s0: AcwState, n_steps: usize) -> Result<Vec<AcwState>> {
    if n_steps == 0 {
        return Err(Error::invalid("orbit needs at least one step"));
    }
    let mut orbit = Vec::with_capacity(n_steps + 1);
    orbit.push(AcwState::new(s0.x, s0.y)?);
    for k in 0..n_steps {
        orbit.push(acw_poincare(c, orbit[k])?);
    }
    Ok(orbit)
}

/// `x·y`, invariant under the period map.
pub fn acw_first_integral(s: AcwState) -> f64 {
    s.x * s.y
}

/// CSV with columns `n,x,y,xy`.
pub fn write_orbit_csv<W: Write>(orbit: &[AcwState], mut w: W) -> io::Result<()> {
    writeln!(w, "n,x,y,xy")?;
    for (n, s) in orbit.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{}",
            n,
            fmt_f64(s.x),
            fmt_f64(s.y),
            fmt_f64(acw_first_integral(*s))
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcwCheck {
    pub analytic: AcwState,
    pub numeric: AcwState,
    /// `max(|Δx|, |Δy|)`.
    pub max_err: f64,
}

/// Smallest `x` tolerated by the direct integration.
pub const ACW_X_GUARD: f64 = 1e-9;

/// Integrates the equation over one period `[0, π]`, with a step boundary at
/// π/2, and compares the endpoint with [`acw_poincare`].
pub fn acw_numeric_check(c: f64, s0: AcwState, cfg: &IntegratorConfig) -> Result<AcwCheck> {
    let analytic = acw_poincare(c, s0)?;
    cfg.validate()?;
    let tight = IntegratorConfig {
        rel_tol: cfg.rel_tol.min(1e-12),
        abs_tol: cfg.abs_tol.min(1e-13),
        ..*cfg
    };
    let rhs = |_t: f64, y: &[f64; 2], mid: f64| {
        let r = if mid < FRAC_PI_2 { 1.0 } else { c };
        Some([y[1], -y[0] + r / y[0].powi(3)])
    };
    let guard = |y: &[f64; 2]| {
        (y[0] < ACW_X_GUARD).then_some(FailureKind::Singularity {
            x: y[0],
            distance: y[0],
        })
    };
    let dense = solve(
        &rhs,
        &guard,
        None,
        [s0.x, s0.y],
        0.0,
        PI,
        &[FRAC_PI_2],
        &tight,
    )
    .map_err(|f| Error::Auxiliary {
        t: f.t,
        reason: f.kind.to_string(),
    })?;
    let end = dense.last();
    let numeric = AcwState {
        x: end[0],
        y: end[1],
    };
    Ok(AcwCheck {
        analytic,
        numeric,
        max_err: (numeric.x - analytic.x)
            .abs()
            .max((numeric.y - analytic.y).abs()),
    })
}
