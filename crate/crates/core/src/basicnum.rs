//! The basic number `[n]`: `n`, `sinh(αn)/sinh(α)` or `sin(αn)/sin(α)`
//! depending on the sign of `r11 = [2] - 2`.

use num::rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::RealField;

/// Arguments of `[·]` are small rationals (integers, halves, quarters).
pub type Arg = Ratio<i64>;

/// `|r11|` below this is classified as the linear regime.
pub const LINEAR_TOLERANCE: f64 = 1e-12;

pub fn arg(num: i64, den: i64) -> Arg {
    Ratio::new(num, den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    Linear,
    Hyperbolic { alpha: f64 },
    Trigonometric { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketContext {
    r11: f64,
    regime: Regime,
}

impl BracketContext {
    pub fn linear() -> Self {
        Self {
            r11: 0.0,
            regime: Regime::Linear,
        }
    }

    pub fn from_r11(r11: f64) -> Result<Self> {
        if !r11.is_finite() || r11 <= -4.0 {
            return Err(Error::InvalidParameter(format!("r11 = {r11} must exceed -4")));
        }
        if r11.abs() < LINEAR_TOLERANCE {
            return Ok(Self::linear());
        }
        let c = 1.0 + r11 / 2.0;
        let regime = if r11 > 0.0 {
            Regime::Hyperbolic { alpha: c.acosh() }
        } else {
            Regime::Trigonometric { alpha: c.acos() }
        };
        Ok(Self { r11, regime })
    }

    /// `r11 = q + 1/q - 2`, i.e. `α = -ln q`.
    pub fn from_q(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!("q = {q} must lie in (0, 1)")));
        }
        let alpha = -q.ln();
        Ok(Self {
            r11: q + 1.0 / q - 2.0,
            regime: Regime::Hyperbolic { alpha },
        })
    }

    pub fn from_trig_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < std::f64::consts::PI) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, pi)")));
        }
        Ok(Self {
            r11: 2.0 * alpha.cos() - 2.0,
            regime: Regime::Trigonometric { alpha },
        })
    }

    pub fn r11(&self) -> f64 {
        self.r11
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.regime, Regime::Linear)
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.regime {
            Regime::Linear => None,
            Regime::Hyperbolic { alpha } | Regime::Trigonometric { alpha } => Some(alpha),
        }
    }

    /// `r11` recomputed from `α`.
    pub fn r11_from_alpha(&self) -> f64 {
        match self.regime {
            Regime::Linear => 0.0,
            Regime::Hyperbolic { alpha } => {
                let s = (alpha / 2.0).exp() - (-alpha / 2.0).exp();
                s * s
            }
            Regime::Trigonometric { alpha } => -4.0 * (alpha / 2.0).sin().powi(2),
        }
    }

    pub fn bracket(&self, n: f64) -> f64 {
        match self.regime {
            Regime::Linear => n,
            Regime::Hyperbolic { alpha } => (alpha * n).sinh() / alpha.sinh(),
            Regime::Trigonometric { alpha } => (alpha * n).sin() / alpha.sin(),
        }
    }

    /// `[n]` in the requested backend. Exact only in the linear regime.
    pub fn bracket_in<R: RealField>(&self, n: Arg) -> Result<R> {
        match self.regime {
            Regime::Linear => Ok(R::from_ratio(*n.numer(), *n.denom())),
            _ if R::EXACT => Err(Error::InexactBackend("the q-deformed bracket".into())),
            _ => Ok(R::from_f64(self.bracket(*n.numer() as f64 / *n.denom() as f64))),
        }
    }

    /// `r11` in the requested backend.
    pub fn r11_in<R: RealField>(&self) -> Result<R> {
        match self.regime {
            Regime::Linear => Ok(R::zero()),
            _ if R::EXACT => Err(Error::InexactBackend("r11 outside the linear regime".into())),
            _ => Ok(R::from_f64(self.r11)),
        }
    }

    /// `Σ_{r=m}^{n} [r] = [(n+m)/2][(n-m+1)/2] / [1/2]`.
    pub fn bracket_sum(&self, m: i64, n: i64) -> Result<f64> {
        self.bracket_sum_in::<f64>(m, n)
    }

    pub fn bracket_sum_in<R: RealField>(&self, m: i64, n: i64) -> Result<R> {
        if n < m - 1 {
            return Err(Error::Domain(format!("bracket_sum needs n >= m - 1 (m = {m}, n = {n})")));
        }
        let a: R = self.bracket_in(arg(n + m, 2))?;
        let b: R = self.bracket_in(arg(n - m + 1, 2))?;
        let h: R = self.bracket_in(arg(1, 2))?;
        Ok(a * b / h)
    }
}
