//! ∂x/∂I through the Rofe-Beketov representation of the second solution of
//! the variational equation, and the large-action limit audit.

use std::f64::consts::{PI, SQRT_2};
use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::integrate::{solve, FailureKind, IntegratorConfig};
use crate::potentials::Potential;

use super::action::amplitude_of_action;

/// `∂x/∂I(t, I(r))` on `t_grid`, from
///
/// `(1/ω) ∂x/∂I = −ẍ/(ẋ² + ẍ²) + ẋ ∫₀ᵗ (1 − V″(x))(ẋ² − ẍ²)/(ẋ² + ẍ²)² ds`
///
/// with ω = N. The orbit and the running integral are integrated together;
/// negative times use the evenness of x(t).
#[allow(non_snake_case)]
pub fn dx_dI_rofe_beketov(
    pot: &Potential,
    r: f64,
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let omega = pot.isochrony().ok_or(Error::NotIsochronous)? as f64;
    if !(r > 0.0) || !pot.in_domain(r) {
        return Err(Error::invalid(format!(
            "amplitude r = {r} must be positive and in the domain"
        )));
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("time grid must be finite"));
    }
    let t_max = t_grid.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let rhs = |_t: f64, y: &[f64; 3], _mid: f64| {
        let acc = -pot.try_dv(y[0])?;
        let a = pot.try_d2v(y[0])?;
        let (v2, a2) = (y[1] * y[1], acc * acc);
        let den = v2 + a2;
        Some([y[1], acc, (1.0 - a) * (v2 - a2) / (den * den)])
    };
    let left = pot.domain_left();
    let margin = cfg.singularity_margin;
    let guard = move |y: &[f64; 3]| {
        let distance = y[0] - left;
        (left.is_finite() && distance < margin)
            .then_some(FailureKind::Singularity { x: y[0], distance })
    };
    let kink = pot.has_kink_at_origin().then_some(0);
    let dense = solve(&rhs, &guard, kink, [r, 0.0, 0.0], 0.0, t_max, &[], cfg).map_err(|f| {
        Error::Auxiliary {
            t: f.t,
            reason: f.kind.to_string(),
        }
    })?;
    t_grid
        .iter()
        .map(|&t| {
            let y = dense.eval(t.abs());
            let acc = -pot.dv(y[0])?;
            let den = y[1] * y[1] + acc * acc;
            Ok(omega * (-acc / den + y[1] * y[2]))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BouncingRecord {
    pub action: f64,
    pub amplitude: f64,
    /// `sup_t |x(t, I)/√I − 2√2 |cos(t/2)||` over `[−π, π]`.
    pub sup_x_defect: f64,
    /// `sup_t |√I ∂x/∂I(t, I) − √2 |cos(t/2)||` over `[−π + δ, π − δ]`.
    pub sup_dxdi_defect: f64,
    /// `√I ∂x/∂I(0, I)`, which tends to √2.
    pub dxdi_at_0: f64,
}

/// Rescaled orbit and derivative against their large-action limits, one
/// record per action (computed in parallel).
pub fn bouncing_limit_audit(
    pot: &Potential,
    actions: &[f64],
    delta: f64,
    samples: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<BouncingRecord>> {
    if !(delta > 0.0 && delta < PI) {
        return Err(Error::invalid(format!(
            "delta = {delta} must lie in (0, π)"
        )));
    }
    if samples < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    actions
        .par_iter()
        .map(|&action| audit_one(pot, action, delta, samples, cfg))
        .collect()
}

fn audit_one(
    pot: &Potential,
    action: f64,
    delta: f64,
    samples: usize,
    cfg: &IntegratorConfig,
) -> Result<BouncingRecord> {
    if !(action > 0.0) {
        return Err(Error::invalid(format!("action {action} must be positive")));
    }
    let r = amplitude_of_action(pot, action)?;
    let sqrt_i = action.sqrt();
    let grid = |lo: f64, hi: f64| -> Vec<f64> {
        (0..samples)
            .map(|k| lo + (hi - lo) * k as f64 / (samples - 1) as f64)
            .collect()
    };
    let x_grid = grid(0.0, PI);
    let d_grid = grid(0.0, PI - delta);
    // x(t) and ∂x/∂I are even in t: the half interval covers [−π, π]
    let orbit = crate::integrate::integrate_autonomous(
        pot,
        crate::integrate::State::new(r, 0.0),
        0.0,
        PI,
        cfg,
    )?;
    let sup_x_defect = x_grid
        .iter()
        .map(|&t| (orbit.eval(t).x / sqrt_i - 2.0 * SQRT_2 * (0.5 * t).cos().abs()).abs())
        .fold(0.0, f64::max);
    let mut d_times = d_grid.clone();
    d_times.push(0.0);
    let dxdi = dx_dI_rofe_beketov(pot, r, &d_times, cfg)?;
    let sup_dxdi_defect = d_grid
        .iter()
        .zip(&dxdi)
        .map(|(&t, d)| (sqrt_i * d - SQRT_2 * (0.5 * t).cos().abs()).abs())
        .fold(0.0, f64::max);
    Ok(BouncingRecord {
        action,
        amplitude: r,
        sup_x_defect,
        sup_dxdi_defect,
        dxdi_at_0: sqrt_i * dxdi[dxdi.len() - 1],
    })
}

/// CSV with columns `I,r,sup_x_defect,sup_dxdI_defect,dxdI_at_0`.
pub fn write_bouncing_csv<W: Write>(records: &[BouncingRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "I,r,sup_x_defect,sup_dxdI_defect,dxdI_at_0")?;
    for rec in records {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(rec.action),
            fmt_f64(rec.amplitude),
            fmt_f64(rec.sup_x_defect),
            fmt_f64(rec.sup_dxdi_defect),
            fmt_f64(rec.dxdi_at_0)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_at_zero() {
        let cfg = IntegratorConfig::default();
        let p = Potential::Pinney;
        let d = dx_dI_rofe_beketov(&p, 1.0, &[0.0, PI], &cfg).unwrap();
        assert!((d[0] - 32.0 / 15.0).abs() < 1e-10);
        assert!(d[1] < 0.0);
        let h = Potential::harmonic(1).unwrap();
        let d = dx_dI_rofe_beketov(&h, 2.0, &[0.0, 1.0], &cfg).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-12);
        assert!((d[1] - 1f64.cos() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn harmonic_two_matches_closed_form() {
        // x = √I cos 2t for N = 2, so ∂x/∂I = cos 2t / (2√I)
        let h = Potential::harmonic(2).unwrap();
        let r = 0.8;
        let action = r * r;
        let grid = [0.0, 0.3, 1.1, 2.0, -0.7];
        let d = dx_dI_rofe_beketov(&h, r, &grid, &IntegratorConfig::default()).unwrap();
        for (t, got) in grid.iter().zip(d) {
            let want = (2.0 * t).cos() / (2.0 * action.sqrt());
            assert!((got - want).abs() < 1e-8, "t = {t}: {got} vs {want}");
        }
    }
}
