//! 2π-periodic forcing terms p(t).

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_split, QuadOptions};

/// A 2π-periodic, locally integrable forcing term.
///
/// Build through the checked constructors; every method assumes the
/// invariants they enforce.
#[derive(Debug, Clone, PartialEq)]
pub enum ForcingTerm {
    /// `a0 + Σ_k (cos[k-1] cos kt + sin[k-1] sin kt)`.
    TrigPoly {
        a0: f64,
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
    /// Right-continuous step function of period `period` (which divides 2π).
    /// `values[i]` holds on `[breaks[i], breaks[i+1])`; the last value wraps
    /// around to `breaks[0]`.
    PiecewiseConst {
        breaks: Vec<f64>,
        values: Vec<f64>,
        period: f64,
    },
    /// Linear interpolation of samples on the uniform grid `2πk/M`, k < M.
    Sampled { values: Vec<f64> },
}

impl ForcingTerm {
    pub fn trig(a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        let f = ForcingTerm::TrigPoly { a0, cos, sin };
        f.validate()?;
        Ok(f)
    }

    pub fn zero() -> Self {
        ForcingTerm::TrigPoly {
            a0: 0.0,
            cos: vec![],
            sin: vec![],
        }
    }

    pub fn sin() -> Self {
        Self::harmonic(1, 0.0, 1.0)
    }

    pub fn cos() -> Self {
        Self::harmonic(1, 1.0, 0.0)
    }

    /// `a cos kt + b sin kt`.
    pub fn harmonic(k: usize, a: f64, b: f64) -> Self {
        assert!(k >= 1, "harmonic index starts at 1");
        let mut cos = vec![0.0; k];
        let mut sin = vec![0.0; k];
        cos[k - 1] = a;
        sin[k - 1] = b;
        ForcingTerm::TrigPoly { a0: 0.0, cos, sin }
    }

    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>, period: f64) -> Result<Self> {
        let f = ForcingTerm::PiecewiseConst {
            breaks,
            values,
            period,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn sampled(values: Vec<f64>) -> Result<Self> {
        let f = ForcingTerm::Sampled { values };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ForcingTerm::TrigPoly { a0, cos, sin } => {
                if !a0.is_finite() || cos.iter().chain(sin).any(|c| !c.is_finite()) {
                    return Err(Error::invalid("trigonometric coefficients must be finite"));
                }
            }
            ForcingTerm::PiecewiseConst {
                breaks,
                values,
                period,
            } => {
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::invalid("piecewise period must be positive"));
                }
                let ratio = TAU / period;
                if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
                    return Err(Error::invalid(format!(
                        "piecewise period {period} does not divide 2π"
                    )));
                }
                if breaks.is_empty() || breaks.len() != values.len() {
                    return Err(Error::invalid(
                        "piecewise forcing needs one value per breakpoint (at least one)",
                    ));
                }
                if breaks
                    .iter()
                    .any(|b| !b.is_finite() || *b < 0.0 || *b >= *period)
                {
                    return Err(Error::invalid("breakpoints must lie in [0, period)"));
                }
                if breaks.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid("breakpoints must be strictly increasing"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("piecewise values must be finite"));
                }
            }
            ForcingTerm::Sampled { values } => {
                if values.is_empty() {
                    return Err(Error::invalid("sampled forcing needs at least one sample"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("samples must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ForcingTerm::TrigPoly { a0, cos, sin } => {
                let mut acc = *a0;
                for (k, c) in cos.iter().enumerate() {
                    acc += c * ((k + 1) as f64 * t).cos();
                }
                for (k, s) in sin.iter().enumerate() {
                    acc += s * ((k + 1) as f64 * t).sin();
                }
                acc
            }
            ForcingTerm::PiecewiseConst {
                breaks,
                values,
                period,
            } => {
                let s = t.rem_euclid(*period);
                let idx = breaks.partition_point(|b| *b <= s);
                if idx == 0 {
                    values[values.len() - 1]
                } else {
                    values[idx - 1]
                }
            }
            ForcingTerm::Sampled { values } => {
                let m = values.len();
                let u = t.rem_euclid(TAU) / TAU * m as f64;
                let i = (u.floor() as usize).min(m - 1);
                let frac = u - i as f64;
                values[i] * (1.0 - frac) + values[(i + 1) % m] * frac
            }
        }
    }

    /// Points in the open interval `(t0, t1)` where p is discontinuous or has
    /// a kink, sorted ascending.
    pub fn breakpoints_in(&self, t0: f64, t1: f64) -> Vec<f64> {
        let (spacing, offsets): (f64, Vec<f64>) = match self {
            ForcingTerm::TrigPoly { .. } => return Vec::new(),
            ForcingTerm::PiecewiseConst { breaks, period, .. } => (*period, breaks.clone()),
            ForcingTerm::Sampled { values } => (TAU / values.len() as f64, vec![0.0]),
        };
        if t1 <= t0 {
            return Vec::new();
        }
        let guard = 1e-12 * (1.0 + t0.abs().max(t1.abs()));
        let mut out = Vec::new();
        let k_start = ((t0 - spacing) / spacing).floor() as i64;
        let k_end = (t1 / spacing).ceil() as i64;
        for k in k_start..=k_end {
            for off in &offsets {
                let t = k as f64 * spacing + off;
                if t > t0 + guard && t < t1 - guard {
                    out.push(t);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= guard);
        out
    }

    /// `[t0, breakpoints..., t1]`, ready for split quadrature.
    pub fn split_points(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut pts = vec![t0];
        pts.extend(self.breakpoints_in(t0, t1));
        pts.push(t1);
        pts
    }

    /// Evaluator for the smooth piece containing `mid`, extended to the whole
    /// segment. Integrators use it so stages evaluated exactly at a segment
    /// end see the piece's one-sided value.
    pub fn local(&self, mid: f64) -> LocalForcing<'_> {
        match self {
            ForcingTerm::TrigPoly { .. } => LocalForcing::Smooth(self),
            ForcingTerm::PiecewiseConst { .. } => LocalForcing::Constant(self.eval(mid)),
            ForcingTerm::Sampled { values } => {
                let m = values.len();
                let h = TAU / m as f64;
                let k = (mid / h).floor();
                let i = (k as i64).rem_euclid(m as i64) as usize;
                let v0 = values[i];
                let v1 = values[(i + 1) % m];
                LocalForcing::Linear {
                    t0: k * h,
                    v0,
                    slope: (v1 - v0) / h,
                }
            }
        }
    }

    /// ‖p‖_{L¹} over one period, by split adaptive quadrature.
    pub fn l1_norm(&self) -> f64 {
        let opts = QuadOptions::new(1e-14, 1e-10);
        let pts = self.split_points(0.0, TAU);
        integrate_split(|t| self.eval(t).abs(), &pts, &opts)
            .map(|r| r.value)
            .unwrap_or_else(|_| {
                // |p| for a trig polynomial only has kinks; a looser
                // tolerance always converges.
                integrate_split(|t| self.eval(t).abs(), &pts, &QuadOptions::new(1e-10, 1e-8))
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN)
            })
    }

    /// `∫_{t0}^{t1} |p(s)| ds` for `t1 ≥ t0`.
    pub fn abs_integral(&self, t0: f64, t1: f64) -> f64 {
        if t1 <= t0 {
            return 0.0;
        }
        let span = t1 - t0;
        let whole = (span / TAU).floor();
        let rest_start = t0 + whole * TAU;
        let mut acc = whole * self.l1_norm();
        if t1 > rest_start {
            let pts = self.split_points(rest_start, t1);
            acc += integrate_split(
                |t| self.eval(t).abs(),
                &pts,
                &QuadOptions::new(1e-14, 1e-10),
            )
            .map(|r| r.value)
            .unwrap_or(f64::NAN);
        }
        acc
    }

    /// `I_n(p) = ∫₀^{2π} p(t) e^{int} dt`; closed form for trig polynomials.
    pub fn fourier_coefficient(&self, n: usize) -> Complex64 {
        match self {
            ForcingTerm::TrigPoly { cos, sin, .. } if n >= 1 => {
                let a = cos.get(n - 1).copied().unwrap_or(0.0);
                let b = sin.get(n - 1).copied().unwrap_or(0.0);
                Complex64::new(PI * a, PI * b)
            }
            _ => self.fourier_coefficient_quadrature(n),
        }
    }

    /// `I_n(p)` by split quadrature regardless of representation.
    pub fn fourier_coefficient_quadrature(&self, n: usize) -> Complex64 {
        let nf = n as f64;
        let pts = self.split_points(0.0, TAU);
        let opts = QuadOptions::new(1e-13, 1e-11);
        integrate_split(
            |t| Complex64::new(0.0, nf * t).exp() * self.eval(t),
            &pts,
            &opts,
        )
        .map(|r| r.value)
        .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    }

    /// Mean value `(1/2π)∫p`.
    pub fn mean(&self) -> f64 {
        match self {
            ForcingTerm::TrigPoly { a0, .. } => *a0,
            _ => {
                let pts = self.split_points(0.0, TAU);
                integrate_split(|t| self.eval(t), &pts, &QuadOptions::new(1e-14, 1e-11))
                    .map(|r| r.value / TAU)
                    .unwrap_or(f64::NAN)
            }
        }
    }
}

/// One smooth piece of a forcing, see [`ForcingTerm::local`].
#[derive(Debug, Clone, Copy)]
pub enum LocalForcing<'a> {
    Smooth(&'a ForcingTerm),
    Constant(f64),
    Linear { t0: f64, v0: f64, slope: f64 },
}

impl LocalForcing<'_> {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            LocalForcing::Smooth(f) => f.eval(t),
            LocalForcing::Constant(c) => *c,
            LocalForcing::Linear { t0, v0, slope } => v0 + slope * (t - t0),
        }
    }
}
