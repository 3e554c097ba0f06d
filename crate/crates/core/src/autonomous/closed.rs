//! Closed-form orbits and variational solutions.
//!
//! Pinney: with λ = 1 + r, c = cos(t/2), s = sin(t/2) and
//! S = √(λ²c² + λ⁻²s²), the orbit is φ = S − 1. The real part of ψ is ∂φ/∂r
//! and the imaginary part is −φ̇ / V′(r), which simplifies to 2λsc/S.

use num_complex::Complex64;

use crate::integrate::State;
use crate::potentials::Potential;

/// Pinney orbit `(φ, φ̇)` at time t and amplitude r.
pub fn pinney_phi(t: f64, r: f64) -> State {
    let lam = 1.0 + r;
    let (s, c) = (0.5 * t).sin_cos();
    let big_s = (lam * lam * c * c + s * s / (lam * lam)).sqrt();
    let phi_dot = s * c * (lam.powi(-2) - lam * lam) / (2.0 * big_s);
    State::new(big_s - 1.0, phi_dot)
}

/// Pinney variational solution `(ψ, ψ̇)`.
pub fn pinney_psi(t: f64, r: f64) -> (Complex64, Complex64) {
    let lam = 1.0 + r;
    let (s, c) = (0.5 * t).sin_cos();
    let l2 = lam * lam;
    let big_s = (l2 * c * c + s * s / l2).sqrt();
    let s_lam = (lam * c * c - s * s / (l2 * lam)) / big_s;
    let s_dot = s * c * (1.0 / l2 - l2) / (2.0 * big_s);

    let re = s_lam;
    let im = 2.0 * lam * s * c / big_s;

    let re_dot = 0.5
        * s
        * c
        * ((-2.0 / (l2 * lam) - 2.0 * lam) / big_s - (1.0 / l2 - l2) * s_lam / (big_s * big_s));
    // d/dt of λ sin t / S
    let (st, ct) = t.sin_cos();
    let im_dot = lam * (ct * big_s - st * s_dot) / (big_s * big_s);
    (Complex64::new(re, im), Complex64::new(re_dot, im_dot))
}

pub fn harmonic_phi(n: u32, t: f64, r: f64) -> State {
    let n = n as f64;
    let (s, c) = (n * t).sin_cos();
    State::new(r * c, -r * n * s)
}

/// `ψ = cos nt + (i/n) sin nt`, independent of r.
pub fn harmonic_psi(n: u32, t: f64) -> (Complex64, Complex64) {
    let n = n as f64;
    let (s, c) = (n * t).sin_cos();
    (Complex64::new(c, s / n), Complex64::new(-n * s, c))
}

/// Closed-form orbit where one exists.
pub fn phi_closed(pot: &Potential, t: f64, r: f64) -> Option<State> {
    match pot {
        Potential::Harmonic { n } => Some(harmonic_phi(*n, t, r)),
        Potential::Pinney => Some(pinney_phi(t, r)),
        _ => None,
    }
}

/// Closed-form `(ψ, ψ̇)` where one exists.
pub fn psi_closed(pot: &Potential, t: f64, r: f64) -> Option<(Complex64, Complex64)> {
    match pot {
        Potential::Harmonic { n } => Some(harmonic_psi(*n, t)),
        Potential::Pinney => Some(pinney_psi(t, r)),
        _ => None,
    }
}

/// Pinney amplitude for a given action: solves `V(r) = I` through
/// `λ² + λ⁻² = 8I + 2`.
pub fn pinney_amplitude_of_action(action: f64) -> f64 {
    let b = 8.0 * action + 2.0;
    // larger root of q² − b q + 1 = 0, written without cancellation
    let q = 0.5 * (b + (b * b - 4.0).max(0.0).sqrt());
    q.sqrt() - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn pinney_phi_examples() {
        let s = pinney_phi(FRAC_PI_2, 1.0);
        assert!((s.x - (-1.0 + (2.0f64 + 0.125).sqrt())).abs() < 1e-15);
        assert!((s.x - 0.457738).abs() < 1e-6);
        assert_eq!(pinney_phi(1.3, 0.0).x, 0.0);
        assert!((pinney_phi(PI, 1.0).x + 0.5).abs() < 1e-15);
    }

    #[test]
    fn pinney_psi_examples() {
        let (psi, _) = pinney_psi(PI, 1.0);
        assert!((psi - Complex64::new(-0.25, 0.0)).norm() < 1e-15);
        for r in [0.0, 0.5, 3.0] {
            let (psi0, dpsi0) = pinney_psi(0.0, r);
            assert!((psi0 - Complex64::new(1.0, 0.0)).norm() < 1e-15);
            assert!((dpsi0 - Complex64::new(0.0, 1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn pinney_psi_derivative_matches_finite_difference() {
        let h = 1e-6;
        for &(t, r) in &[(0.3, 0.5), (2.0, 1.0), (4.0, 5.0)] {
            let (p1, _) = pinney_psi(t + h, r);
            let (p0, _) = pinney_psi(t - h, r);
            let (_, d) = pinney_psi(t, r);
            assert!(((p1 - p0) / (2.0 * h) - d).norm() < 1e-6 * (1.0 + d.norm()));
        }
    }

    #[test]
    fn harmonic_psi_example() {
        let (psi, _) = harmonic_psi(2, FRAC_PI_4);
        assert!((psi - Complex64::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn amplitude_inverts_potential() {
        let p = Potential::Pinney;
        for r in [1e-3, 0.5, 1.0, 50.0, 2e3] {
            let i = p.v(r).unwrap();
            let back = pinney_amplitude_of_action(i);
            assert!((back - r).abs() < 1e-9 * r.max(1.0), "{r} {back}");
        }
    }
}
