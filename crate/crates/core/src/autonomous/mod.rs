//! The unforced system `ẍ + V′(x) = 0`: orbits φ(t, r), periods,
//! action-angle coordinates, the variational solution ψ(t, r) and the
//! large-action asymptotics.
//!
//! The action is normalised as the enclosed phase area divided by 2π, so that
//! `Ω(I) = V(r)` and, for minimal period 2π/N, `N·I = V(r)`.

mod action;
pub mod closed;
mod derivative;
mod variational;

use std::f64::consts::TAU;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::integrate::{integrate_autonomous, EventKind, IntegratorConfig, State, Trajectory};
use crate::potentials::Potential;

pub use action::{
    action_of_amplitude, amplitude_of_action, from_action_angle, negative_semiperiod,
    to_action_angle, ActionAngle,
};
pub use closed::{harmonic_phi, harmonic_psi, phi_closed, pinney_phi, pinney_psi, psi_closed};
pub use derivative::{
    bouncing_limit_audit, dx_dI_rofe_beketov, write_bouncing_csv, BouncingRecord,
};
pub use variational::{
    psi_solution, psi_solution_on, sturm_argument, SturmArgument, VariationalSolution,
};

/// One period of the free orbit through `(r, 0)`.
#[derive(Debug, Clone)]
pub struct AutonomousOrbit {
    pub r: f64,
    pub period: f64,
    pub energy: f64,
    pub trajectory: Trajectory,
}

impl AutonomousOrbit {
    /// φ(t, r) for any t, by periodic extension of the stored period.
    pub fn state_at(&self, t: f64) -> State {
        self.trajectory.eval(t.rem_euclid(self.period))
    }

    /// CSV with columns `t,x,v` at the knots.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x,v")?;
        for (t, s) in self.trajectory.knots() {
            writeln!(w, "{},{},{}", fmt_f64(t), fmt_f64(s.x), fmt_f64(s.v))?;
        }
        Ok(())
    }
}

/// Linearised period `2π/√V″(0)`.
pub(crate) fn linear_period(pot: &Potential) -> Result<f64> {
    let w2 = pot.d2v(0.0)?;
    if !(w2 > 0.0) {
        return Err(Error::invalid(
            "V″(0) must be positive for an oscillatory center",
        ));
    }
    Ok(TAU / w2.sqrt())
}

/// Numerically integrated orbit of amplitude r over one measured period.
pub fn phi_orbit(pot: &Potential, r: f64, cfg: &IntegratorConfig) -> Result<AutonomousOrbit> {
    if !(r >= 0.0) {
        return Err(Error::invalid(format!(
            "amplitude r = {r} must be non-negative"
        )));
    }
    let period = if r == 0.0 {
        linear_period(pot)?
    } else {
        minimal_period(pot, r, cfg)?
    };
    let trajectory = integrate_autonomous(pot, State::new(r, 0.0), 0.0, period, cfg)?;
    Ok(AutonomousOrbit {
        r,
        period,
        energy: pot.v(r)?,
        trajectory,
    })
}

/// First return time to the section `{ẋ = 0, x > 0}` from `(r, 0)`.
pub fn minimal_period(pot: &Potential, r: f64, cfg: &IntegratorConfig) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!(
            "minimal_period needs r > 0, got {r}"
        )));
    }
    let limit = 10.0 * TAU;
    // chunk length chosen so that 2π/N never falls on a chunk boundary
    let chunk = 1.25 * TAU;
    let mut t0 = 0.0;
    let mut s0 = State::new(r, 0.0);
    while t0 < limit {
        let t1 = (t0 + chunk).min(limit);
        let tr = integrate_autonomous(pot, s0, t0, t1, cfg)?;
        let hit = tr
            .events()
            .iter()
            .find(|e| e.kind == EventKind::VelocityZero && e.direction < 0 && tr.eval(e.t).x > 0.0);
        if let Some(e) = hit {
            return Ok(e.t);
        }
        t0 = t1;
        s0 = tr.end();
    }
    Err(Error::NoReturn { limit })
}
