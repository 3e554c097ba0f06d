//! Potential families V with their derivatives and domain metadata.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::roots::brent;

/// Evaluators closer than this to a finite left endpoint reject the point.
pub const DOMAIN_GUARD: f64 = 1e-14;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied potential. Isochrony is never assumed: `isochrony` is only
/// the caller's claim, audit it with `autonomous::minimal_period`.
#[derive(Clone)]
pub struct CustomPotential {
    pub name: String,
    pub v: ScalarFn,
    pub dv: ScalarFn,
    pub d2v: ScalarFn,
    /// Left endpoint `a` of the domain, `-inf` when unbounded.
    pub domain_left: f64,
    pub isochrony: Option<u32>,
}

impl fmt::Debug for CustomPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPotential")
            .field("name", &self.name)
            .field("domain_left", &self.domain_left)
            .field("isochrony", &self.isochrony)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Potential {
    /// `V = n² x² / 2`.
    Harmonic {
        n: u32,
    },
    /// `V = ((x+1)² + (x+1)⁻²)/8 − 1/4` on `(−1, ∞)`.
    Pinney,
    /// `V = (α (x⁺)² + β (x⁻)²)/2`.
    Asymmetric {
        alpha: f64,
        beta: f64,
    },
    Custom(CustomPotential),
}

impl Potential {
    pub fn harmonic(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("harmonic index n must be positive"));
        }
        Ok(Potential::Harmonic { n })
    }

    pub fn asymmetric(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0) {
            return Err(Error::invalid(
                "asymmetric coefficients must be positive and finite",
            ));
        }
        Ok(Potential::Asymmetric { alpha, beta })
    }

    pub fn name(&self) -> String {
        match self {
            Potential::Harmonic { n } => format!("harmonic:{n}"),
            Potential::Pinney => "pinney".into(),
            Potential::Asymmetric { alpha, beta } => format!("asymmetric:{alpha},{beta}"),
            Potential::Custom(c) => c.name.clone(),
        }
    }

    pub fn domain_left(&self) -> f64 {
        match self {
            Potential::Pinney => -1.0,
            Potential::Custom(c) => c.domain_left,
            _ => f64::NEG_INFINITY,
        }
    }

    /// Integer N with every free orbit of minimal period 2π/N, when known.
    pub fn isochrony(&self) -> Option<u32> {
        match self {
            Potential::Harmonic { n } => Some(*n),
            Potential::Pinney => Some(1),
            Potential::Asymmetric { alpha, beta } => {
                // period π(1/√α + 1/√β) = 2π/N
                let n = 2.0 / (1.0 / alpha.sqrt() + 1.0 / beta.sqrt());
                let rounded = n.round();
                ((n - rounded).abs() < 1e-9 * n.max(1.0) && rounded >= 1.0)
                    .then_some(rounded as u32)
            }
            Potential::Custom(c) => c.isochrony,
        }
    }

    /// V″ jumps at x = 0; integrators end steps there.
    pub fn has_kink_at_origin(&self) -> bool {
        matches!(self, Potential::Asymmetric { alpha, beta } if alpha != beta)
    }

    pub fn in_domain(&self, x: f64) -> bool {
        x.is_finite() && x > self.domain_left() + DOMAIN_GUARD
    }

    fn check(&self, x: f64) -> Result<()> {
        if self.in_domain(x) {
            Ok(())
        } else {
            Err(Error::Domain {
                x,
                left: self.domain_left(),
            })
        }
    }

    pub fn v(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.v_unchecked(x))
    }

    pub fn dv(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.dv_unchecked(x))
    }

    pub fn d2v(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.d2v_unchecked(x))
    }

    /// V′ for integrator stages: `None` outside the domain.
    #[inline]
    pub fn try_dv(&self, x: f64) -> Option<f64> {
        self.in_domain(x).then(|| self.dv_unchecked(x))
    }

    #[inline]
    pub fn try_d2v(&self, x: f64) -> Option<f64> {
        self.in_domain(x).then(|| self.d2v_unchecked(x))
    }

    pub(crate) fn v_unchecked(&self, x: f64) -> f64 {
        match self {
            Potential::Harmonic { n } => 0.5 * (*n as f64).powi(2) * x * x,
            Potential::Pinney => {
                // ((y² − 1)/y)²/8 with y = x + 1, free of cancellation at 0
                let y = x + 1.0;
                let w = x * (x + 2.0) / y;
                w * w / 8.0
            }
            Potential::Asymmetric { alpha, beta } => {
                if x >= 0.0 {
                    0.5 * alpha * x * x
                } else {
                    0.5 * beta * x * x
                }
            }
            Potential::Custom(c) => (c.v)(x),
        }
    }

    pub(crate) fn dv_unchecked(&self, x: f64) -> f64 {
        match self {
            Potential::Harmonic { n } => (*n as f64).powi(2) * x,
            Potential::Pinney => {
                // (y⁴ − 1)/(4y³) = x(x+2)(y²+1)/(4y³)
                let y = x + 1.0;
                x * (x + 2.0) * (y * y + 1.0) / (4.0 * y * y * y)
            }
            Potential::Asymmetric { alpha, beta } => {
                if x >= 0.0 {
                    alpha * x
                } else {
                    beta * x
                }
            }
            Potential::Custom(c) => (c.dv)(x),
        }
    }

    pub(crate) fn d2v_unchecked(&self, x: f64) -> f64 {
        match self {
            Potential::Harmonic { n } => (*n as f64).powi(2),
            Potential::Pinney => {
                let y2 = (x + 1.0) * (x + 1.0);
                0.25 + 0.75 / (y2 * y2)
            }
            // α at the origin by convention
            Potential::Asymmetric { alpha, beta } => {
                if x >= 0.0 {
                    *alpha
                } else {
                    *beta
                }
            }
            Potential::Custom(c) => (c.d2v)(x),
        }
    }

    /// Positive turning point r with V(r) = energy.
    pub fn right_turning_point(&self, energy: f64) -> Result<f64> {
        if energy < 0.0 || !energy.is_finite() {
            return Err(Error::invalid(format!(
                "energy {energy} must be finite and non-negative"
            )));
        }
        if energy == 0.0 {
            return Ok(0.0);
        }
        if let Potential::Harmonic { n } = self {
            return Ok((2.0 * energy).sqrt() / *n as f64);
        }
        let mut hi = 1.0;
        while self.v_unchecked(hi) < energy {
            hi *= 2.0;
            if hi > 1e150 {
                return Err(Error::Bracket(format!("V never reaches {energy} on x > 0")));
            }
        }
        brent(
            |x| self.v_unchecked(x) - energy,
            0.0,
            hi,
            0.0,
            4.0 * f64::EPSILON,
        )
    }

    /// Negative turning point x₋ with V(x₋) = energy.
    pub fn left_turning_point(&self, energy: f64) -> Result<f64> {
        if energy < 0.0 || !energy.is_finite() {
            return Err(Error::invalid(format!(
                "energy {energy} must be finite and non-negative"
            )));
        }
        if energy == 0.0 {
            return Ok(0.0);
        }
        let a = self.domain_left();
        let lo = if a.is_finite() {
            let lo = a + 2.0 * DOMAIN_GUARD * a.abs().max(1.0);
            if self.v_unchecked(lo) < energy {
                return Err(Error::Bracket(format!(
                    "V stays below {energy} on the negative half of the domain"
                )));
            }
            lo
        } else {
            let mut lo = -1.0;
            while self.v_unchecked(lo) < energy {
                lo *= 2.0;
                if lo < -1e150 {
                    return Err(Error::Bracket(format!("V never reaches {energy} on x < 0")));
                }
            }
            lo
        };
        brent(
            |x| self.v_unchecked(x) - energy,
            lo,
            0.0,
            0.0,
            4.0 * f64::EPSILON,
        )
    }

    /// σ(x) = V₋⁻¹(V₊(x)): the negative point on the same energy level.
    pub fn sigma_map(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !self.in_domain(x) {
            return Err(Error::invalid(format!(
                "sigma map needs x > 0 in the domain, got {x}"
            )));
        }
        self.left_turning_point(self.v_unchecked(x))
    }

    /// Residuals of `V(x) = (x − σ(x))²/8` and the defects `V′(x) − x/4` on a grid.
    pub fn appendix_audit(&self, x_grid: &[f64]) -> Result<AppendixAudit> {
        let mut iso_residuals = Vec::with_capacity(x_grid.len());
        let mut slope_defects = Vec::with_capacity(x_grid.len());
        for &x in x_grid {
            let sigma = self.sigma_map(x)?;
            iso_residuals.push(self.v_unchecked(x) - (x - sigma).powi(2) / 8.0);
            slope_defects.push(self.dv_unchecked(x) - x / 4.0);
        }
        Ok(AppendixAudit {
            x: x_grid.to_vec(),
            iso_residuals,
            slope_defects,
            slope_limit: -self.domain_left() / 4.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixAudit {
    pub x: Vec<f64>,
    pub iso_residuals: Vec<f64>,
    pub slope_defects: Vec<f64>,
    /// Expected limit of the slope defect, `−a/4`.
    pub slope_limit: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::bisect;

    #[test]
    fn pinney_values() {
        let p = Potential::Pinney;
        assert_eq!(p.v(0.0).unwrap(), 0.0);
        assert_eq!(p.dv(0.0).unwrap(), 0.0);
        assert!((p.d2v(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((p.dv(1.0).unwrap() - 15.0 / 32.0).abs() < 1e-15);
        assert!((p.v(1.0).unwrap() - 9.0 / 32.0).abs() < 1e-15);
        // singular wall at −1
        assert!(p.v(-1.0 + 1e-6).unwrap() > 1e10);
        assert!(matches!(p.v(-1.0), Err(Error::Domain { .. })));
        assert!(p.dv(-2.0).is_err());
        assert!(p.try_dv(-1.0 - 1e-3).is_none());
    }

    #[test]
    fn pinney_matches_textbook_form() {
        let p = Potential::Pinney;
        for &x in &[-0.9, -0.3, 0.2, 1.0, 7.5] {
            let y: f64 = x + 1.0;
            let v = (y * y + 1.0 / (y * y)) / 8.0 - 0.25;
            let dv = 0.25 * (y - 1.0 / y.powi(3));
            assert!((p.v(x).unwrap() - v).abs() < 1e-14 * (1.0 + v.abs()));
            assert!((p.dv(x).unwrap() - dv).abs() < 1e-14 * (1.0 + dv.abs()));
        }
    }

    #[test]
    fn harmonic_values() {
        let h = Potential::harmonic(2).unwrap();
        assert_eq!(h.v(3.0).unwrap(), 18.0);
        assert_eq!(h.dv(3.0).unwrap(), 12.0);
        assert_eq!(h.d2v(3.0).unwrap(), 4.0);
        assert!(Potential::harmonic(0).is_err());
    }

    #[test]
    fn asymmetric_conventions() {
        let a = Potential::asymmetric(4.0, 4.0 / 9.0).unwrap();
        assert_eq!(a.d2v(0.0).unwrap(), 4.0);
        assert_eq!(a.d2v(-1.0).unwrap(), 4.0 / 9.0);
        assert_eq!(a.isochrony(), Some(1));
        assert!(a.has_kink_at_origin());
        assert_eq!(
            Potential::asymmetric(1.0, 1.0).unwrap().isochrony(),
            Some(1)
        );
        assert_eq!(Potential::asymmetric(1.0, 2.0).unwrap().isochrony(), None);
    }

    fn sigma_by_bisection(p: &Potential, x: f64) -> f64 {
        let target = p.v(x).unwrap();
        bisect(|s| p.v(s).unwrap() - target, -1.0 + 1e-12, 0.0, 1e-15).unwrap()
    }

    #[test]
    fn sigma_map_examples() {
        let p = Potential::Pinney;
        assert!(p.sigma_map(1e-9).unwrap().abs() < 1e-8);
        let s1 = p.sigma_map(1.0).unwrap();
        assert!((s1 - sigma_by_bisection(&p, 1.0)).abs() < 1e-12);
        assert!((p.v(s1).unwrap() - 9.0 / 32.0).abs() < 1e-13);
        let s100 = p.sigma_map(100.0).unwrap();
        assert!((s100 - sigma_by_bisection(&p, 100.0)).abs() < 1e-3);
        assert!(s100 > -1.0 && s100 < -0.98);
        assert!(p.sigma_map(-1.0).is_err());
    }

    #[test]
    fn appendix_audit_examples() {
        let p = Potential::Pinney;
        let audit = p.appendix_audit(&[2.0, 100.0, 1e-6]).unwrap();
        assert!(audit.iso_residuals[0].abs() < 1e-9);
        let expected = 0.25 - 0.25 / 101f64.powi(3);
        assert!((audit.slope_defects[1] - expected).abs() < 1e-12);
        assert!(audit.slope_defects[2].abs() < 1e-6);
        assert_eq!(audit.slope_limit, 0.25);
    }
}
