//! The resonance functional
//! `Φ_p(θ, r) = (1/2π) ∫₀^{2π} p(t − θ) ψ(t, r) dt`
//! over the cylinder, its large-amplitude limit for the Pinney potential and
//! the zero-counting diagnostics built on it.
//!
//! A positive lower bound of |Φ_p| over a scanned grid is numerical evidence
//! of resonance, not a proof: the cylinder is unbounded in r and only the
//! Pinney potential has an analytic r → ∞ slice to close the tail.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use crate::autonomous::{psi_closed, psi_solution, VariationalSolution};
use crate::error::{Error, Result};
use crate::export::{fmt_f64, json_f64};
use crate::forcing::ForcingTerm;
use crate::integrate::IntegratorConfig;
use crate::potentials::Potential;
use crate::quadrature::{integrate_split, QuadOptions};

fn quad_opts() -> QuadOptions {
    QuadOptions::new(1e-13, 1e-11)
}

/// ψ(·, r) from a closed form when available, otherwise integrated once.
enum PsiSource<'a> {
    Closed(&'a Potential, f64),
    Numeric(VariationalSolution),
}

impl<'a> PsiSource<'a> {
    fn new(pot: &'a Potential, r: f64, cfg: &IntegratorConfig) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::invalid(format!(
                "amplitude r = {r} must be finite and non-negative"
            )));
        }
        if r > 0.0 && !pot.in_domain(r) {
            return Err(Error::Domain {
                x: r,
                left: pot.domain_left(),
            });
        }
        if psi_closed(pot, 0.0, r).is_some() {
            Ok(PsiSource::Closed(pot, r))
        } else {
            Ok(PsiSource::Numeric(psi_solution(pot, r, cfg)?))
        }
    }

    fn psi(&self, t: f64) -> Complex64 {
        match self {
            PsiSource::Closed(pot, r) => psi_closed(pot, t, *r).map(|p| p.0).unwrap_or_default(),
            PsiSource::Numeric(vs) => vs.psi(t),
        }
    }
}

/// Split points on `[0, 2π]` for `t ↦ p(t − θ) ψ(t)`.
fn split_points(pot: &Potential, f: &ForcingTerm, theta: f64) -> Vec<f64> {
    let mut pts = vec![0.0, TAU];
    pts.extend(
        f.breakpoints_in(-theta, TAU - theta)
            .into_iter()
            .map(|b| b + theta),
    );
    if matches!(pot, Potential::Pinney) {
        // ψ(·, r) sharpens around t = π as r grows
        pts.push(PI);
    }
    pts.retain(|t| (0.0..=TAU).contains(t));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn phi_from_source(
    pot: &Potential,
    src: &PsiSource<'_>,
    f: &ForcingTerm,
    theta: f64,
) -> Result<Complex64> {
    let pts = split_points(pot, f, theta);
    let res = integrate_split(|t| src.psi(t) * f.eval(t - theta), &pts, &quad_opts())?;
    Ok(res.value / TAU)
}

/// Φ_p(θ, r) by adaptive quadrature.
pub fn eval_phi(
    pot: &Potential,
    f: &ForcingTerm,
    theta: f64,
    r: f64,
    cfg: &IntegratorConfig,
) -> Result<Complex64> {
    if !theta.is_finite() {
        return Err(Error::invalid("theta must be finite"));
    }
    let src = PsiSource::new(pot, r, cfg)?;
    phi_from_source(pot, &src, f, theta)
}

/// Φ for the harmonic oscillator of frequency n through `I_n(p)`:
/// with `I_n = A + iB`,
/// `2πΦ = (A cos nθ − B sin nθ) + (i/n)(B cos nθ + A sin nθ)`.
pub fn harmonic_phi_closed(n: u32, f: &ForcingTerm, theta: f64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::invalid("harmonic index n must be positive"));
    }
    let i_n = f.fourier_coefficient(n as usize);
    let nf = n as f64;
    let (s, c) = (nf * theta).sin_cos();
    let (a, b) = (i_n.re, i_n.im);
    Ok(Complex64::new(a * c - b * s, (b * c + a * s) / nf) / TAU)
}

/// Limit of ψ(t, r) as r → ∞ for the Pinney potential.
pub fn pinney_psi_limit(t: f64) -> Complex64 {
    let (s, c) = (0.5 * t).sin_cos();
    let sign = if c > 0.0 {
        1.0
    } else if c < 0.0 {
        -1.0
    } else {
        0.0
    };
    Complex64::new(c.abs(), 2.0 * s * sign)
}

/// `lim_{r→∞} Φ_p(θ, r)` for the Pinney potential.
pub fn phi_at_infinity_pinney(f: &ForcingTerm, theta: f64) -> Result<Complex64> {
    let pts = split_points(&Potential::Pinney, f, theta);
    let res = integrate_split(
        |t| pinney_psi_limit(t) * f.eval(t - theta),
        &pts,
        &quad_opts(),
    )?;
    Ok(res.value / TAU)
}

/// Fourier constants of the Pinney ψ:
/// `c₀ = (1/2π)∫Re ψ`, `d₊ = (1/2π)∫cos t Re ψ`, `d₋ = (1/2π)∫sin t Im ψ`,
/// so that for `p = a₀ + a₁ cos t + b₁ sin t`
/// `Φ = a₀c₀ + d₊(a₁ cos θ − b₁ sin θ) + i d₋(a₁ sin θ + b₁ cos θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierConstants {
    pub c0: f64,
    pub d_plus: f64,
    pub d_minus: f64,
}

/// Accepts `r = f64::INFINITY` for the limit values.
pub fn pinney_fourier_constants(r: f64) -> Result<FourierConstants> {
    if !(r >= 0.0) {
        return Err(Error::invalid(format!(
            "amplitude r = {r} must be non-negative"
        )));
    }
    let psi = |t: f64| {
        if r.is_infinite() {
            pinney_psi_limit(t)
        } else {
            crate::autonomous::pinney_psi(t, r).0
        }
    };
    let pts = [0.0, PI, TAU];
    let opts = QuadOptions::new(1e-13, 1e-12);
    let c0 = integrate_split(|t| psi(t).re, &pts, &opts)?.value / TAU;
    let d_plus = integrate_split(|t| t.cos() * psi(t).re, &pts, &opts)?.value / TAU;
    let d_minus = integrate_split(|t| t.sin() * psi(t).im, &pts, &opts)?.value / TAU;
    Ok(FourierConstants {
        c0,
        d_plus,
        d_minus,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorollaryBound {
    /// `√(a₁² + b₁²) − 3|a₀|`.
    pub margin: f64,
    /// `margin/(3π²)` when positive, else 0.
    pub phi_lower_bound: f64,
    pub resonant: bool,
}

/// Sufficient resonance condition for `p = a₀ + a₁ cos t + b₁ sin t` on the
/// Pinney potential, with the accompanying lower bound of |Φ_p|.
pub fn corollary_bound(a0: f64, a1: f64, b1: f64) -> CorollaryBound {
    let margin = a1.hypot(b1) - 3.0 * a0.abs();
    let resonant = margin > 0.0;
    CorollaryBound {
        margin,
        phi_lower_bound: if resonant {
            margin / (3.0 * PI * PI)
        } else {
            0.0
        },
        resonant,
    }
}

/// Amplitude coordinate of a cylinder point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RPoint {
    Finite(f64),
    Infinity,
}

impl RPoint {
    /// CSV/JSON encoding: −1 stands for r = ∞.
    pub fn sentinel(&self) -> f64 {
        match self {
            RPoint::Finite(r) => *r,
            RPoint::Infinity => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Confidence {
    /// Only the finite grid was scanned.
    GridOnly,
    /// The analytic r → ∞ slice closes the tail of the cylinder.
    WithInfinitySlice,
}

impl Confidence {
    pub fn label(&self) -> &'static str {
        match self {
            Confidence::GridOnly => "grid-only",
            Confidence::WithInfinitySlice => "grid+infinity",
        }
    }
}

/// Φ_p sampled over `theta_grid × r_grid`, stored row-major by r.
#[derive(Debug, Clone)]
pub struct PhiField {
    pub theta_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub infinity_slice: Option<Vec<Complex64>>,
    pub min_modulus: f64,
    pub argmin: (f64, RPoint),
}

impl PhiField {
    pub fn value(&self, i_theta: usize, i_r: usize) -> Complex64 {
        self.values[i_r * self.theta_grid.len() + i_theta]
    }

    pub fn confidence(&self) -> Confidence {
        if self.infinity_slice.is_some() {
            Confidence::WithInfinitySlice
        } else {
            Confidence::GridOnly
        }
    }

    /// CSV rows `theta,r,re,im,abs`; the infinity slice uses r = −1.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "theta,r,re,im,abs")?;
        let row = |w: &mut W, th: f64, r: f64, z: Complex64| {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f64(th),
                fmt_f64(r),
                fmt_f64(z.re),
                fmt_f64(z.im),
                fmt_f64(z.norm())
            )
        };
        for (ir, &r) in self.r_grid.iter().enumerate() {
            for (it, &th) in self.theta_grid.iter().enumerate() {
                row(&mut w, th, r, self.value(it, ir))?;
            }
        }
        if let Some(slice) = &self.infinity_slice {
            for (&th, &z) in self.theta_grid.iter().zip(slice) {
                row(&mut w, th, RPoint::Infinity.sentinel(), z)?;
            }
        }
        Ok(())
    }
}

/// `[0]` followed by `count − 1` log-spaced amplitudes from 10⁻² to `r_max`.
pub fn default_r_grid(r_max: f64, count: usize) -> Result<Vec<f64>> {
    if !(r_max > 0.01) || !r_max.is_finite() || count < 2 {
        return Err(Error::invalid(
            "r grid needs r_max > 0.01 and at least two points",
        ));
    }
    let (lo, hi) = (0.01f64.ln(), r_max.ln());
    let m = count - 1;
    let mut grid = vec![0.0];
    grid.extend((0..m).map(|k| {
        if k + 1 == m {
            r_max
        } else {
            (lo + (hi - lo) * k as f64 / (m - 1) as f64).exp()
        }
    }));
    Ok(grid)
}

/// Default scan resolution in θ.
pub const DEFAULT_THETA_POINTS: usize = 256;
/// Default number of amplitudes (including r = 0).
pub const DEFAULT_R_POINTS: usize = 60;
pub const DEFAULT_R_MAX: f64 = 1e3;

/// Φ over the cylinder grid, in parallel over r. Trigonometric forcings
/// reuse the moments `(1/2π)∫ψ(t) cos kt dt`, `(1/2π)∫ψ(t) sin kt dt` per r.
pub fn phi_scan(
    pot: &Potential,
    f: &ForcingTerm,
    theta_count: usize,
    r_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<PhiField> {
    if theta_count == 0 || r_grid.is_empty() {
        return Err(Error::invalid("phi_scan needs non-empty grids"));
    }
    if r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("r grid must be strictly increasing"));
    }
    f.validate()?;
    let theta_grid: Vec<f64> = (0..theta_count)
        .map(|k| TAU * k as f64 / theta_count as f64)
        .collect();
    let rows: Vec<Vec<Complex64>> = r_grid
        .par_iter()
        .map(|&r| {
            let src = PsiSource::new(pot, r, cfg)?;
            match f {
                ForcingTerm::TrigPoly { a0, cos, sin } => {
                    let moments = psi_moments(pot, &src, cos.len().max(sin.len()))?;
                    Ok(theta_grid
                        .iter()
                        .map(|&th| phi_from_moments(&moments, *a0, cos, sin, th))
                        .collect())
                }
                _ => theta_grid
                    .iter()
                    .map(|&th| phi_from_source(pot, &src, f, th))
                    .collect(),
            }
        })
        .collect::<Result<_>>()?;
    let infinity_slice = if matches!(pot, Potential::Pinney) {
        Some(
            theta_grid
                .par_iter()
                .map(|&th| phi_at_infinity_pinney(f, th))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let values: Vec<Complex64> = rows.into_iter().flatten().collect();
    let n = theta_grid.len();
    let mut min_modulus = f64::INFINITY;
    let mut argmin = (0.0, RPoint::Finite(r_grid[0]));
    for (k, z) in values.iter().enumerate() {
        if z.norm() < min_modulus {
            min_modulus = z.norm();
            argmin = (theta_grid[k % n], RPoint::Finite(r_grid[k / n]));
        }
    }
    if let Some(slice) = &infinity_slice {
        for (&th, z) in theta_grid.iter().zip(slice) {
            if z.norm() < min_modulus {
                min_modulus = z.norm();
                argmin = (th, RPoint::Infinity);
            }
        }
    }
    if !min_modulus.is_finite() {
        return Err(Error::invalid("non-finite Φ values in scan"));
    }
    Ok(PhiField {
        theta_grid,
        r_grid: r_grid.to_vec(),
        values,
        infinity_slice,
        min_modulus,
        argmin,
    })
}

/// `(C_k, S_k)` for k = 0..=K, with `C_k = (1/2π)∫ψ cos kt`, `S_k = (1/2π)∫ψ sin kt`.
fn psi_moments(
    pot: &Potential,
    src: &PsiSource<'_>,
    k_max: usize,
) -> Result<Vec<(Complex64, Complex64)>> {
    let pts = split_points(pot, &ForcingTerm::zero(), 0.0);
    (0..=k_max)
        .map(|k| {
            let kf = k as f64;
            let c =
                integrate_split(|t| src.psi(t) * (kf * t).cos(), &pts, &quad_opts())?.value / TAU;
            let s = if k == 0 {
                Complex64::default()
            } else {
                integrate_split(|t| src.psi(t) * (kf * t).sin(), &pts, &quad_opts())?.value / TAU
            };
            Ok((c, s))
        })
        .collect()
}

fn phi_from_moments(
    m: &[(Complex64, Complex64)],
    a0: f64,
    cos: &[f64],
    sin: &[f64],
    theta: f64,
) -> Complex64 {
    // cos k(t−θ) = cos kt cos kθ + sin kt sin kθ, sin k(t−θ) = sin kt cos kθ − cos kt sin kθ
    let mut acc = m[0].0 * a0;
    for k in 1..m.len() {
        let (ck, sk) = m[k];
        let (s, c) = (k as f64 * theta).sin_cos();
        let a = cos.get(k - 1).copied().unwrap_or(0.0);
        let b = sin.get(k - 1).copied().unwrap_or(0.0);
        acc += (ck * c + sk * s) * a + (sk * c - ck * s) * b;
    }
    acc
}

/// Grid-level resonance certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceVerdict {
    pub certified_resonant: bool,
    pub min_modulus: f64,
    pub argmin: (f64, RPoint),
    pub threshold: f64,
    pub confidence: Confidence,
}

impl ResonanceVerdict {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "certified_resonant": self.certified_resonant,
            "min_modulus": json_f64(self.min_modulus),
            "argmin_theta": json_f64(self.argmin.0),
            "argmin_r": json_f64(self.argmin.1.sentinel()),
            "argmin_r_is_infinite": matches!(self.argmin.1, RPoint::Infinity),
            "threshold": json_f64(self.threshold),
            "confidence": self.confidence.label(),
        })
    }
}

pub const DEFAULT_VERDICT_THRESHOLD: f64 = 1e-4;

pub fn resonance_verdict(field: &PhiField, threshold: f64) -> ResonanceVerdict {
    ResonanceVerdict {
        certified_resonant: field.min_modulus >= threshold,
        min_modulus: field.min_modulus,
        argmin: field.argmin,
        threshold,
        confidence: field.confidence(),
    }
}

/// Axis-aligned rectangle in the (θ, r) plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub theta0: f64,
    pub theta1: f64,
    pub r0: f64,
    pub r1: f64,
}

/// Smallest |Φ| accepted on a winding boundary.
pub const WINDING_FLOOR: f64 = 1e-9;

/// Winding number of `eval` along the counter-clockwise boundary of `rect`.
/// Each edge starts from 16 samples and is bisected until every argument
/// increment is below π/2.
pub fn winding_number_with<F>(eval: F, rect: Rect) -> Result<i32>
where
    F: Fn(f64, f64) -> Result<Complex64>,
{
    if !(rect.theta1 > rect.theta0 && rect.r1 > rect.r0) {
        return Err(Error::invalid("rectangle must have positive extent"));
    }
    let corners = [
        (rect.theta0, rect.r0),
        (rect.theta1, rect.r0),
        (rect.theta1, rect.r1),
        (rect.theta0, rect.r1),
        (rect.theta0, rect.r0),
    ];
    let point = |p: (f64, f64)| -> Result<Complex64> {
        let z = eval(p.0, p.1)?;
        if !(z.norm() >= WINDING_FLOOR) {
            return Err(Error::BoundaryNearZero {
                modulus: z.norm(),
                theta: p.0,
                r: p.1,
            });
        }
        Ok(z)
    };
    let mut total = 0.0;
    for edge in corners.windows(2) {
        let (a, b) = (edge[0], edge[1]);
        let lerp = |s: f64| (a.0 + (b.0 - a.0) * s, a.1 + (b.1 - a.1) * s);
        let samples = 16;
        let mut prev_s = 0.0;
        let mut prev_z = point(a)?;
        for k in 1..=samples {
            let s = k as f64 / samples as f64;
            let z = point(lerp(s))?;
            total += refine_increment(&point, &lerp, prev_s, s, prev_z, z, 0)?;
            prev_s = s;
            prev_z = z;
        }
    }
    Ok((total / TAU).round() as i32)
}

fn refine_increment<P, L>(
    point: &P,
    lerp: &L,
    s0: f64,
    s1: f64,
    z0: Complex64,
    z1: Complex64,
    depth: u32,
) -> Result<f64>
where
    P: Fn((f64, f64)) -> Result<Complex64>,
    L: Fn(f64) -> (f64, f64),
{
    let inc = (z1 / z0).arg();
    if inc.abs() < 0.5 * PI {
        return Ok(inc);
    }
    if depth >= 30 {
        let (theta, r) = lerp(0.5 * (s0 + s1));
        return Err(Error::BoundaryNearZero {
            modulus: z0.norm().min(z1.norm()),
            theta,
            r,
        });
    }
    let sm = 0.5 * (s0 + s1);
    let zm = point(lerp(sm))?;
    Ok(refine_increment(point, lerp, s0, sm, z0, zm, depth + 1)?
        + refine_increment(point, lerp, sm, s1, zm, z1, depth + 1)?)
}

/// Winding number of Φ_p itself along `rect`.
pub fn winding_number(
    pot: &Potential,
    f: &ForcingTerm,
    rect: Rect,
    cfg: &IntegratorConfig,
) -> Result<i32> {
    winding_number_with(|theta, r| eval_phi(pot, f, theta, r, cfg), rect)
}
