//! Textual descriptions of forcings, potentials and run configurations.
//!
//! Forcings and potentials are accepted either as JSON objects tagged by
//! `kind` or in a compact shorthand:
//!
//! - potentials: `pinney`, `harmonic:N`, `asymmetric:ALPHA,BETA`
//! - forcings: a signed sum of terms `[COEF*]BASIS` or `COEF`, where `BASIS` is
//!   `sin`, `cos`, `sinKt`, `cosKt`, `sin(Kt)` or `cos(Kt)`,
//!   e.g. `0.2+0.5*cos+0.5*sin` or `-cos2t+0.1*sin(3t)`

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::ForcingTerm;
use crate::potentials::Potential;

/// Largest harmonic index accepted by the shorthand.
pub const MAX_SHORTHAND_HARMONIC: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ForcingDescriptor {
    Trig {
        #[serde(default)]
        a0: f64,
        #[serde(default)]
        a: Vec<f64>,
        #[serde(default)]
        b: Vec<f64>,
    },
    Piecewise {
        #[serde(default = "two_pi")]
        period: f64,
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    Sampled {
        values: Vec<f64>,
    },
}

fn two_pi() -> f64 {
    2.0 * PI
}

impl ForcingDescriptor {
    pub fn build(&self) -> Result<ForcingTerm> {
        match self {
            ForcingDescriptor::Trig { a0, a, b } => ForcingTerm::trig(*a0, a.clone(), b.clone()),
            ForcingDescriptor::Piecewise {
                period,
                breaks,
                values,
            } => ForcingTerm::piecewise(breaks.clone(), values.clone(), *period),
            ForcingDescriptor::Sampled { values } => ForcingTerm::sampled(values.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialDescriptor {
    Harmonic { n: u32 },
    Pinney,
    Asymmetric { alpha: f64, beta: f64 },
}

impl PotentialDescriptor {
    pub fn build(&self) -> Result<Potential> {
        match self {
            PotentialDescriptor::Harmonic { n } => Potential::harmonic(*n),
            PotentialDescriptor::Pinney => Ok(Potential::Pinney),
            PotentialDescriptor::Asymmetric { alpha, beta } => Potential::asymmetric(*alpha, *beta),
        }
    }
}

/// Forcing in either textual form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ForcingSpec {
    Shorthand(String),
    Full(ForcingDescriptor),
}

impl ForcingSpec {
    pub fn build(&self) -> Result<ForcingTerm> {
        match self {
            ForcingSpec::Shorthand(s) => parse_forcing(s),
            ForcingSpec::Full(d) => d.build(),
        }
    }
}

/// Potential in either textual form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSpec {
    Shorthand(String),
    Full(PotentialDescriptor),
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential> {
        match self {
            PotentialSpec::Shorthand(s) => parse_potential(s),
            PotentialSpec::Full(d) => d.build(),
        }
    }
}

/// Parses a forcing from JSON (leading `{`) or shorthand.
pub fn parse_forcing(text: &str) -> Result<ForcingTerm> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        parse_forcing_json(trimmed)
    } else {
        parse_forcing_shorthand(trimmed)
    }
}

pub fn parse_forcing_json(text: &str) -> Result<ForcingTerm> {
    let d: ForcingDescriptor =
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("forcing JSON: {e}")))?;
    d.build()
}

/// Parses a potential from JSON (leading `{`) or shorthand.
pub fn parse_potential(text: &str) -> Result<Potential> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        let d: PotentialDescriptor = serde_json::from_str(trimmed)
            .map_err(|e| Error::invalid(format!("potential JSON: {e}")))?;
        return d.build();
    }
    let lower = trimmed.to_ascii_lowercase();
    let (name, args) = match lower.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (lower.as_str(), None),
    };
    match (name, args) {
        ("pinney", None) => Ok(Potential::Pinney),
        ("harmonic", None) => Potential::harmonic(1),
        ("harmonic", Some(a)) => {
            let n = a.trim().parse::<u32>().map_err(|_| {
                Error::invalid(format!("harmonic index `{a}` is not a positive integer"))
            })?;
            Potential::harmonic(n)
        }
        ("asymmetric", Some(a)) => {
            let parts: Vec<&str> = a.split(',').collect();
            let [alpha, beta] = parts.as_slice() else {
                return Err(Error::invalid(
                    "asymmetric potential needs `asymmetric:ALPHA,BETA`",
                ));
            };
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("`{s}` is not a number")))
            };
            Potential::asymmetric(num(alpha)?, num(beta)?)
        }
        _ => Err(Error::invalid(format!(
            "unknown potential `{trimmed}` (expected pinney, harmonic:N or asymmetric:ALPHA,BETA)"
        ))),
    }
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.s[self.pos..].starts_with(w.as_bytes()) {
            self.pos += w.len();
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.pos - start
    }

    fn number(&mut self) -> Option<f64> {
        let start = self.pos;
        let int = self.digits();
        let mut frac = 0;
        if self.eat(b'.') {
            frac = self.digits();
        }
        if int + frac == 0 {
            self.pos = start;
            return None;
        }
        let mark = self.pos;
        if self.eat(b'e') || self.eat(b'E') {
            let _ = self.eat(b'+') || self.eat(b'-');
            if self.digits() == 0 {
                self.pos = mark;
            }
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }

    /// `sin` or `cos` with an optional `t`, `Kt`, `(t)` or `(Kt)` argument.
    fn basis(&mut self) -> Result<Option<(bool, usize)>> {
        let is_sin = if self.eat_word("sin") {
            true
        } else if self.eat_word("cos") {
            false
        } else {
            return Ok(None);
        };
        let paren = self.eat(b'(');
        let start = self.pos;
        let k = if self.digits() > 0 {
            let k: usize = std::str::from_utf8(&self.s[start..self.pos])
                .ok()
                .and_then(|d| d.parse().ok())
                .unwrap_or(0);
            if !self.eat(b't') {
                return Err(self.error("expected `t` after the harmonic index"));
            }
            k
        } else {
            let had_t = self.eat(b't');
            if paren && !had_t {
                return Err(self.error("expected `t` or `Kt` inside parentheses"));
            }
            1
        };
        if paren && !self.eat(b')') {
            return Err(self.error("missing `)`"));
        }
        if k == 0 || k > MAX_SHORTHAND_HARMONIC {
            return Err(self.error(&format!(
                "harmonic index must be in 1..={MAX_SHORTHAND_HARMONIC}"
            )));
        }
        Ok(Some((is_sin, k)))
    }

    fn error(&self, msg: &str) -> Error {
        Error::invalid(format!("forcing shorthand at offset {}: {msg}", self.pos))
    }
}

/// Parses the coefficient shorthand into a trigonometric polynomial.
pub fn parse_forcing_shorthand(text: &str) -> Result<ForcingTerm> {
    let chars: Vec<char> = text.trim().chars().collect();
    let word = |c: char| c.is_ascii_alphanumeric() || c == '.';
    for (i, c) in chars.iter().enumerate() {
        if c.is_whitespace() {
            let before = chars[..i].iter().rev().find(|c| !c.is_whitespace());
            let after = chars[i..].iter().find(|c| !c.is_whitespace());
            if let (Some(&b), Some(&a)) = (before, after) {
                if word(b) && word(a) {
                    return Err(Error::invalid(
                        "forcing shorthand: whitespace inside a term",
                    ));
                }
            }
        }
    }
    let compact: String = chars.into_iter().filter(|c| !c.is_whitespace()).collect();
    let compact = compact.to_ascii_lowercase();
    if compact.is_empty() {
        return Err(Error::invalid("empty forcing"));
    }
    let mut cur = Cursor {
        s: compact.as_bytes(),
        pos: 0,
    };
    let (mut a0, mut cos, mut sin) = (0.0, Vec::new(), Vec::new());
    let mut first = true;
    while cur.peek().is_some() {
        let sign = if cur.eat(b'-') {
            -1.0
        } else if cur.eat(b'+') || first {
            1.0
        } else {
            return Err(cur.error("expected `+` or `-` between terms"));
        };
        first = false;
        let coef = cur.number();
        let basis = if coef.is_none() || cur.eat(b'*') {
            match cur.basis()? {
                Some(b) => Some(b),
                None => return Err(cur.error("expected a number, `sin` or `cos`")),
            }
        } else {
            None
        };
        let value = sign * coef.unwrap_or(1.0);
        match basis {
            None => a0 += value,
            Some((is_sin, k)) => {
                let target: &mut Vec<f64> = if is_sin { &mut sin } else { &mut cos };
                if target.len() < k {
                    target.resize(k, 0.0);
                }
                target[k - 1] += value;
            }
        }
    }
    ForcingTerm::trig(a0, cos, sin)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Parameters shared by all commands; every field is optional so that a
/// config file and command-line flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: Option<PotentialSpec>,
    pub forcing: Option<ForcingSpec>,
    pub eps: Option<f64>,
    pub periods: Option<usize>,
    pub theta_points: Option<usize>,
    pub r_points: Option<usize>,
    pub r_max: Option<f64>,
    pub threshold: Option<f64>,
    pub x0: Option<f64>,
    pub v0: Option<f64>,
    pub y0: Option<f64>,
    pub c: Option<f64>,
    pub steps: Option<usize>,
    pub r: Option<f64>,
    pub actions: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub samples: Option<usize>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub out: Option<String>,
    pub format: Option<OutputFormat>,
}

macro_rules! overlay_fields {
    ($base:expr, $over:expr, $($f:ident),*) => {
        RunConfig { $($f: $over.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fields set in `over` replace those of `self`.
    pub fn overlay(self, over: RunConfig) -> RunConfig {
        overlay_fields!(
            self,
            over,
            potential,
            forcing,
            eps,
            periods,
            theta_points,
            r_points,
            r_max,
            threshold,
            x0,
            v0,
            y0,
            c,
            steps,
            r,
            actions,
            delta,
            samples,
            rel_tol,
            abs_tol,
            out,
            format
        )
    }

    /// Field-level checks of every field that is set.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: Option<f64>| match v {
            Some(x) if !x.is_finite() => Err(Error::config(name, format!("{x} is not finite"))),
            _ => Ok(()),
        };
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                Err(Error::config(name, format!("{x} must be positive")))
            }
            _ => Ok(()),
        };
        let at_least = |name: &str, v: Option<usize>, min: usize| match v {
            Some(n) if n < min => Err(Error::config(
                name,
                format!("{n} is below the minimum {min}"),
            )),
            _ => Ok(()),
        };
        if let Some(p) = &self.potential {
            p.build()
                .map_err(|e| Error::config("potential", e.to_string()))?;
        }
        if let Some(f) = &self.forcing {
            f.build()
                .map_err(|e| Error::config("forcing", e.to_string()))?;
        }
        finite("eps", self.eps)?;
        at_least("periods", self.periods, 10)?;
        at_least("theta_points", self.theta_points, 1)?;
        at_least("r_points", self.r_points, 2)?;
        match self.r_max {
            Some(r) if !(r > 0.01 && r.is_finite()) => {
                return Err(Error::config("r_max", format!("{r} must exceed 0.01")));
            }
            _ => {}
        }
        match self.threshold {
            Some(t) if !(t >= 0.0 && t.is_finite()) => {
                return Err(Error::config(
                    "threshold",
                    format!("{t} must be non-negative"),
                ));
            }
            _ => {}
        }
        finite("x0", self.x0)?;
        finite("v0", self.v0)?;
        finite("y0", self.y0)?;
        positive("c", self.c)?;
        at_least("steps", self.steps, 1)?;
        match self.r {
            Some(r) if !(r >= 0.0 && r.is_finite()) => {
                return Err(Error::config("r", format!("{r} must be non-negative")));
            }
            _ => {}
        }
        if let Some(actions) = &self.actions {
            if actions.is_empty() {
                return Err(Error::config("actions", "list is empty"));
            }
            if let Some(bad) = actions.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
                return Err(Error::config("actions", format!("{bad} must be positive")));
            }
        }
        match self.delta {
            Some(d) if !(d > 0.0 && d < PI) => {
                return Err(Error::config("delta", format!("{d} must lie in (0, π)")));
            }
            _ => {}
        }
        at_least("samples", self.samples, 2)?;
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol", self.abs_tol)?;
        if let Some(out) = &self.out {
            if out.is_empty() {
                return Err(Error::config("out", "path is empty"));
            }
        }
        Ok(())
    }
}
