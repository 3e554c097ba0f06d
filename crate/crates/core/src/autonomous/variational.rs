use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::integrate::{solve, DenseSolution, FailureKind, IntegratorConfig};
use crate::potentials::Potential;

/// ψ = u + iv solving `ÿ + V″(φ(t, r)) y = 0`, `ψ(0) = 1`, `ψ̇(0) = i`.
#[derive(Debug, Clone)]
pub struct VariationalSolution {
    pub r: f64,
    repr: Repr,
}

#[derive(Debug, Clone)]
enum Repr {
    /// State `[x, ẋ, u, u̇, v, v̇]` integrated jointly with the orbit.
    Numeric(DenseSolution<6>),
    /// r = 0: constant coefficient ω², ψ = cos ωt + (i/ω) sin ωt.
    Linear { omega: f64, t_end: f64 },
}

impl VariationalSolution {
    pub fn t_end(&self) -> f64 {
        match &self.repr {
            Repr::Numeric(d) => d.t_end(),
            Repr::Linear { t_end, .. } => *t_end,
        }
    }

    /// `(ψ(t), ψ̇(t))`, with t clamped to the computed interval.
    pub fn eval(&self, t: f64) -> (Complex64, Complex64) {
        match &self.repr {
            Repr::Numeric(d) => {
                let y = d.eval(t);
                (Complex64::new(y[2], y[4]), Complex64::new(y[3], y[5]))
            }
            Repr::Linear { omega, t_end } => {
                let t = t.clamp(0.0, *t_end);
                let (s, c) = (omega * t).sin_cos();
                (Complex64::new(c, s / omega), Complex64::new(-omega * s, c))
            }
        }
    }

    pub fn psi(&self, t: f64) -> Complex64 {
        self.eval(t).0
    }

    /// `u v̇ − u̇ v`, identically 1 in exact arithmetic.
    pub fn wronskian(&self, t: f64) -> f64 {
        let (p, dp) = self.eval(t);
        p.re * dp.im - dp.re * p.im
    }

    /// Integration knots, or a uniform grid for the closed-form case.
    pub fn sample_times(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Numeric(d) => d.times().to_vec(),
            Repr::Linear { t_end, .. } => (0..=256).map(|k| t_end * k as f64 / 256.0).collect(),
        }
    }

    /// CSV with columns `t,u,du,v,dv`.
    pub fn write_csv<W: Write>(&self, times: &[f64], mut w: W) -> io::Result<()> {
        writeln!(w, "t,u,du,v,dv")?;
        for &t in times {
            let (p, dp) = self.eval(t);
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f64(t),
                fmt_f64(p.re),
                fmt_f64(dp.re),
                fmt_f64(p.im),
                fmt_f64(dp.im)
            )?;
        }
        Ok(())
    }
}

/// ψ(t, r) on `[0, 2π]`.
pub fn psi_solution(
    pot: &Potential,
    r: f64,
    cfg: &IntegratorConfig,
) -> Result<VariationalSolution> {
    psi_solution_on(pot, r, TAU, cfg)
}

/// ψ(t, r) on `[0, t_end]`.
pub fn psi_solution_on(
    pot: &Potential,
    r: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<VariationalSolution> {
    cfg.validate()?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!(
            "amplitude r = {r} must be finite and non-negative"
        )));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::invalid("t_end must be positive"));
    }
    if r == 0.0 {
        let w2 = pot.d2v(0.0)?;
        if !(w2 > 0.0) {
            return Err(Error::invalid("V″(0) must be positive"));
        }
        return Ok(VariationalSolution {
            r,
            repr: Repr::Linear {
                omega: w2.sqrt(),
                t_end,
            },
        });
    }
    pot.v(r)?;
    let rhs = |_t: f64, y: &[f64; 6], _mid: f64| {
        let a = pot.try_d2v(y[0])?;
        Some([y[1], -pot.try_dv(y[0])?, y[3], -a * y[2], y[5], -a * y[4]])
    };
    let left = pot.domain_left();
    let margin = cfg.singularity_margin;
    let guard = move |y: &[f64; 6]| {
        let distance = y[0] - left;
        (left.is_finite() && distance < margin)
            .then_some(FailureKind::Singularity { x: y[0], distance })
    };
    let kink = pot.has_kink_at_origin().then_some(0);
    let y0 = [r, 0.0, 1.0, 0.0, 0.0, 1.0];
    let dense =
        solve(&rhs, &guard, kink, y0, 0.0, t_end, &[], cfg).map_err(|f| Error::Auxiliary {
            t: f.t,
            reason: f.kind.to_string(),
        })?;
    Ok(VariationalSolution {
        r,
        repr: Repr::Numeric(dense),
    })
}

/// Unwrapped arguments of `u + iu̇` and `v + iv̇`.
#[derive(Debug, Clone, PartialEq)]
pub struct SturmArgument {
    pub times: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

fn wrap(d: f64) -> f64 {
    (d + PI).rem_euclid(TAU) - PI
}

/// Accumulates the argument of `z(t)` from `a` to `b`, halving the interval
/// while a single increment exceeds π/2.
fn accumulate<F: Fn(f64) -> Complex64>(z: &F, a: f64, b: f64, za: Complex64, depth: u32) -> f64 {
    let zb = z(b);
    let inc = wrap(zb.arg() - za.arg());
    if inc.abs() <= FRAC_PI_2 || depth >= 40 {
        return inc;
    }
    let m = 0.5 * (a + b);
    let zm = z(m);
    accumulate(z, a, m, za, depth + 1) + accumulate(z, m, b, zm, depth + 1)
}

/// Continuous arguments along `t_grid` (sorted ascending, inside the
/// solution interval); the first value is the principal argument.
pub fn sturm_argument(vs: &VariationalSolution, t_grid: &[f64]) -> SturmArgument {
    let zu = |t: f64| {
        let (p, dp) = vs.eval(t);
        Complex64::new(p.re, dp.re)
    };
    let zv = |t: f64| {
        let (p, dp) = vs.eval(t);
        Complex64::new(p.im, dp.im)
    };
    let mut u = Vec::with_capacity(t_grid.len());
    let mut v = Vec::with_capacity(t_grid.len());
    if let Some(&t0) = t_grid.first() {
        u.push(zu(t0).arg());
        v.push(zv(t0).arg());
    }
    for w in t_grid.windows(2) {
        let du = accumulate(&zu, w[0], w[1], zu(w[0]), 0);
        let dv = accumulate(&zv, w[0], w[1], zv(w[0]), 0);
        u.push(u[u.len() - 1] + du);
        v.push(v[v.len() - 1] + dv);
    }
    SturmArgument {
        times: t_grid.to_vec(),
        u,
        v,
    }
}
