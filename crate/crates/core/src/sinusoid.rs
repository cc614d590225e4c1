//! Sinusoidal coordinates η(x), their shift constants and the expansion
//! coefficients of `g_n = (η(x-iβ)^{n+1} - η(x+iβ)^{n+1}) / (η(x-iβ) - η(x+iβ))`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num::complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basicnum::BracketContext;
use crate::error::{Error, Result};
use crate::poly::PolyEta;
use crate::scalar::{Field, RealField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    D1,
    D2,
    D3,
    D4,
    D5,
    /// `x + sinh 2πx`: satisfies both shift axioms but not the half-shift relation.
    NX,
}

impl Kind {
    pub const CATALOG: [Kind; 13] = [
        Kind::C1,
        Kind::C2,
        Kind::C3,
        Kind::C4,
        Kind::C5,
        Kind::C6,
        Kind::C7,
        Kind::C8,
        Kind::D1,
        Kind::D2,
        Kind::D3,
        Kind::D4,
        Kind::D5,
    ];

    pub fn is_discrete(self) -> bool {
        matches!(self, Kind::D1 | Kind::D2 | Kind::D3 | Kind::D4 | Kind::D5)
    }

    pub fn is_continuous(self) -> bool {
        !self.is_discrete()
    }

    pub fn uses_q(self) -> bool {
        matches!(self, Kind::D3 | Kind::D4 | Kind::D5)
    }

    pub fn uses_d(self) -> bool {
        matches!(self, Kind::D2 | Kind::D5)
    }

    /// Kinds whose η and shift constants are polynomial in the parameters,
    /// so the exact backend applies.
    pub fn is_polynomial(self) -> bool {
        matches!(self, Kind::C1 | Kind::C2 | Kind::D1 | Kind::D2)
    }

    pub fn formula(self) -> &'static str {
        match self {
            Kind::C1 => "x",
            Kind::C2 => "x^2",
            Kind::C3 => "1 - cos x",
            Kind::C4 => "sin x",
            Kind::C5 => "1 - e^(-x)",
            Kind::C6 => "e^x - 1",
            Kind::C7 => "cosh x - 1",
            Kind::C8 => "sinh x",
            Kind::D1 => "x",
            Kind::D2 => "eps' x (x + d)",
            Kind::D3 => "1 - q^x",
            Kind::D4 => "q^(-x) - 1",
            Kind::D5 => "eps' (q^(-x) - 1)(1 - d q^x)",
            Kind::NX => "x + sinh(2 pi x)",
        }
    }

    pub fn domain(self) -> &'static str {
        match self {
            Kind::C1 | Kind::C5 | Kind::C6 | Kind::C8 | Kind::NX => "(-inf, inf)",
            Kind::C2 | Kind::C7 => "(0, inf)",
            Kind::C3 => "(0, pi)",
            Kind::C4 => "(-pi/2, pi/2)",
            _ => "{0, 1, ..., N} or {0, 1, ...}",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let all = Kind::CATALOG.iter().copied().chain([Kind::NX]);
        for k in all {
            if k.to_string().eq_ignore_ascii_case(s) {
                return Ok(k);
            }
        }
        Err(Error::Schema(format!("unknown coordinate kind {s:?}")))
    }
}

/// Raw coordinate parameters as they appear in a model file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CoordinateParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_prime: Option<i8>,
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub n_bound: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinusoidalCoordinate {
    kind: Kind,
    gamma: f64,
    q: f64,
    d: f64,
    eps_prime: i8,
    n_bound: Option<u32>,
}

/// `r11`, `rm12` and the product `η(-iβ)η(iβ)` in a scalar backend.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftParams<R> {
    pub r11: R,
    pub rm12: R,
    pub prod: R,
}

/// Float shift data including the two constants `η(-iβ)` and `η(iβ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftData {
    pub r11: f64,
    pub rm12: f64,
    pub eta_mib: Complex64,
    pub eta_pib: Complex64,
}

impl SinusoidalCoordinate {
    pub fn new(kind: Kind, p: CoordinateParams) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let mut c = Self {
            kind,
            gamma: 1.0,
            q: 0.0,
            d: 0.0,
            eps_prime: 1,
            n_bound: p.n_bound,
        };
        if kind.is_discrete() && p.gamma.is_some() {
            return bad(format!("{kind} takes no gamma"));
        }
        if kind.is_continuous() {
            if p.q.is_some() || p.d.is_some() || p.eps_prime.is_some() || p.n_bound.is_some() {
                return bad(format!("{kind} takes only gamma"));
            }
            let g = p.gamma.unwrap_or(1.0);
            if !g.is_finite() || g == 0.0 {
                return bad(format!("gamma = {g} must be a nonzero real"));
            }
            if kind == Kind::NX && g != 1.0 {
                return bad("the x + sinh 2πx coordinate is defined for gamma = 1".into());
            }
            if matches!(kind, Kind::C5 | Kind::C6 | Kind::C7 | Kind::C8) && (g.cos() + 1.0).abs() < 1e-12 {
                return bad(format!("gamma = {g} gives r11 = -4"));
            }
            c.gamma = g;
            return Ok(c);
        }
        if kind.uses_q() {
            let q = p.q.ok_or_else(|| Error::InvalidParameter(format!("{kind} requires q")))?;
            if !(q > 0.0 && q < 1.0) {
                return bad(format!("q = {q} must lie in (0, 1)"));
            }
            c.q = q;
        } else if p.q.is_some() {
            return bad(format!("{kind} takes no q"));
        }
        if kind.uses_d() {
            let d = p.d.ok_or_else(|| Error::InvalidParameter(format!("{kind} requires d")))?;
            if !d.is_finite() {
                return bad(format!("d = {d} must be finite"));
            }
            c.d = d;
            c.eps_prime = c.resolve_eps_prime(p.eps_prime)?;
        } else if p.d.is_some() || p.eps_prime.is_some() {
            return bad(format!("{kind} takes no d or eps_prime"));
        }
        Ok(c)
    }

    /// Catalog entry with default parameters.
    pub fn with_kind(kind: Kind) -> Self {
        let p = match kind {
            Kind::D3 | Kind::D4 => CoordinateParams {
                q: Some(0.5),
                ..Default::default()
            },
            Kind::D2 => CoordinateParams {
                d: Some(0.5),
                ..Default::default()
            },
            Kind::D5 => CoordinateParams {
                q: Some(0.5),
                d: Some(0.25),
                ..Default::default()
            },
            Kind::C3 | Kind::C4 | Kind::C5 | Kind::C6 | Kind::C7 | Kind::C8 => CoordinateParams {
                gamma: Some(0.7),
                ..Default::default()
            },
            _ => CoordinateParams::default(),
        };
        Self::new(kind, p).expect("catalog defaults are valid")
    }

    fn resolve_eps_prime(&self, given: Option<i8>) -> Result<i8> {
        let (d, n) = (self.d, self.n_bound);
        let (plus_ok, minus_ok) = match self.kind {
            Kind::D2 => (d > -1.0, n.is_some_and(|n| d < -(n as f64))),
            Kind::D5 => (
                d < 1.0 / self.q,
                n.is_some_and(|n| d > self.q.powi(-(n as i32))),
            ),
            _ => unreachable!(),
        };
        match given {
            Some(1) if plus_ok => Ok(1),
            Some(-1) if minus_ok => Ok(-1),
            Some(e @ (1 | -1)) => Err(Error::InvalidParameter(format!(
                "eps_prime = {e} is incompatible with d = {d} (N = {n:?})"
            ))),
            Some(e) => Err(Error::InvalidParameter(format!("eps_prime = {e} must be +1 or -1"))),
            None if plus_ok => Ok(1),
            None if minus_ok => Ok(-1),
            None => Err(Error::InvalidParameter(format!(
                "d = {d} (N = {n:?}) admits no monotone orientation"
            ))),
        }
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn eps_prime(&self) -> i8 {
        self.eps_prime
    }
    pub fn n_bound(&self) -> Option<u32> {
        self.n_bound
    }

    pub fn is_discrete(&self) -> bool {
        self.kind.is_discrete()
    }

    pub fn is_nonstandard(&self) -> bool {
        self.kind == Kind::NX
    }

    pub fn params(&self) -> CoordinateParams {
        let k = self.kind;
        CoordinateParams {
            gamma: k.is_continuous().then_some(self.gamma),
            q: k.uses_q().then_some(self.q),
            d: k.uses_d().then_some(self.d),
            eps_prime: k.uses_d().then_some(self.eps_prime),
            n_bound: self.n_bound,
        }
    }

    /// Copy with a different `d` (kinds D2 and D5), keeping the orientation.
    pub fn with_d(&self, d: f64) -> Result<Self> {
        let mut p = self.params();
        p.d = Some(d);
        Self::new(self.kind, p)
    }

    pub fn with_n_bound(&self, n: Option<u32>) -> Result<Self> {
        let mut p = self.params();
        p.n_bound = n;
        Self::new(self.kind, p)
    }

    /// `ε = +1` for imaginary shifts, `-1` for real shifts.
    pub fn epsilon(&self) -> i8 {
        if self.is_discrete() {
            -1
        } else {
            1
        }
    }

    /// `β = γ` (real) for C-kinds and `β = i` for D-kinds.
    pub fn beta(&self) -> Complex64 {
        if self.is_discrete() {
            Complex64::i()
        } else {
            Complex64::new(self.gamma, 0.0)
        }
    }

    pub fn bracket_context(&self) -> BracketContext {
        let ctx = match self.kind {
            Kind::C1 | Kind::C2 | Kind::D1 | Kind::D2 | Kind::NX => Ok(BracketContext::linear()),
            Kind::C3 | Kind::C4 => BracketContext::from_q((-self.gamma.abs()).exp()),
            Kind::D3 | Kind::D4 | Kind::D5 => BracketContext::from_q(self.q),
            Kind::C5 | Kind::C6 | Kind::C7 | Kind::C8 => BracketContext::from_r11(2.0 * self.gamma.cos() - 2.0),
        };
        ctx.expect("validated at construction")
    }

    /// The point `x - k iβ`; for D-kinds this is `x + k`.
    pub fn shift_point<C: Field>(&self, x: &C, k: f64) -> Result<C> {
        if self.is_discrete() {
            return Ok(x.clone() + C::from_f64(k));
        }
        let i = C::imaginary_unit()
            .ok_or_else(|| Error::Domain("an imaginary shift needs a complex scalar field".into()))?;
        Ok(x.clone() - i * C::from_f64(k * self.gamma))
    }

    pub fn eta<C: Field>(&self, x: &C) -> Result<C> {
        let t = |o: Option<C>| o.ok_or_else(|| Error::InexactBackend(format!("eta for kind {}", self.kind)));
        let one = C::one();
        let qpow = |s: f64| -> Result<C> { t((C::from_f64(s * self.q.ln()) * x.clone()).exp()) };
        let d = C::from_f64(self.d);
        let ep = C::from_i64(self.eps_prime as i64);
        Ok(match self.kind {
            Kind::C1 | Kind::D1 => x.clone(),
            Kind::C2 => x.clone() * x.clone(),
            Kind::C3 => one - t(x.cos())?,
            Kind::C4 => t(x.sin())?,
            Kind::C5 => one - t((-x.clone()).exp())?,
            Kind::C6 => t(x.exp())? - one,
            Kind::C7 => t(x.cosh())? - one,
            Kind::C8 => t(x.sinh())?,
            Kind::NX => x.clone() + t((C::from_f64(2.0 * PI) * x.clone()).sinh())?,
            Kind::D2 => ep * x.clone() * (x.clone() + d),
            Kind::D3 => one - qpow(1.0)?,
            Kind::D4 => qpow(-1.0)? - one,
            Kind::D5 => ep * (qpow(-1.0)? - one.clone()) * (one - d * qpow(1.0)?),
        })
    }

    /// `η(x - k iβ)`.
    pub fn eta_shifted<C: Field>(&self, x: &C, k: f64) -> Result<C> {
        self.eta(&self.shift_point(x, k)?)
    }

    /// `η(-k iβ)`; for D-kinds `η(k)`.
    pub fn eta_shift_const<C: Field>(&self, k: f64) -> Result<C> {
        self.eta_shifted(&C::zero(), k)
    }

    pub fn shift_params_in<R: RealField>(&self) -> Result<ShiftParams<R>> {
        let inexact = || Error::InexactBackend(format!("shift constants for kind {}", self.kind));
        let g = R::from_f64(self.gamma);
        let (two, one) = (R::from_i64(2), R::one());
        let ep = R::from_i64(self.eps_prime as i64);
        if self.kind.uses_q() {
            if R::EXACT {
                return Err(inexact());
            }
            let qq = R::from_f64(self.q + 1.0 / self.q);
            let d = R::from_f64(self.d);
            let (r11, rm12, prod) = match self.kind {
                Kind::D3 => (qq.clone() - two.clone(), two.clone() - qq.clone(), two - qq),
                Kind::D4 => (qq.clone() - two.clone(), qq.clone() - two.clone(), two - qq),
                _ => {
                    let e1: R = self.eta_shift_const(1.0)?;
                    let em1: R = self.eta_shift_const(-1.0)?;
                    (qq.clone() - two.clone(), ep * (one + d) * (qq - two), e1 * em1)
                }
            };
            return Ok(ShiftParams { r11, rm12, prod });
        }
        let ch = || g.cosh().ok_or_else(inexact);
        let cs = || g.cos().ok_or_else(inexact);
        Ok(match self.kind {
            Kind::C1 => ShiftParams {
                r11: R::zero(),
                rm12: R::zero(),
                prod: g.clone() * g,
            },
            Kind::C2 => {
                let g2 = g.clone() * g;
                ShiftParams {
                    r11: R::zero(),
                    rm12: -(two * g2.clone()),
                    prod: g2.clone() * g2,
                }
            }
            Kind::NX => ShiftParams {
                r11: R::zero(),
                rm12: R::zero(),
                prod: one,
            },
            Kind::C3 => {
                let c = ch()?;
                ShiftParams {
                    r11: two.clone() * c.clone() - two.clone(),
                    rm12: two - R::from_i64(2) * c.clone(),
                    prod: (one.clone() - c.clone()) * (one - c),
                }
            }
            Kind::C4 => {
                let c = ch()?;
                let s = g.sinh().ok_or_else(inexact)?;
                ShiftParams {
                    r11: two.clone() * c - two,
                    rm12: R::zero(),
                    prod: s.clone() * s,
                }
            }
            Kind::C5 | Kind::C6 => {
                let c = cs()?;
                let r11 = two.clone() * c.clone() - two.clone();
                let rm12 = if self.kind == Kind::C5 { -r11.clone() } else { r11.clone() };
                ShiftParams {
                    r11,
                    rm12,
                    prod: two.clone() - two * c,
                }
            }
            Kind::C7 => {
                let c = cs()?;
                let r11 = two.clone() * c.clone() - two;
                ShiftParams {
                    rm12: r11.clone(),
                    r11,
                    prod: (one.clone() - c.clone()) * (one - c),
                }
            }
            Kind::C8 => {
                let c = cs()?;
                let s = g.sin().ok_or_else(inexact)?;
                ShiftParams {
                    r11: two.clone() * c - two,
                    rm12: R::zero(),
                    prod: s.clone() * s,
                }
            }
            Kind::D1 => ShiftParams {
                r11: R::zero(),
                rm12: R::zero(),
                prod: -one,
            },
            Kind::D2 => {
                let d = R::from_f64(self.d);
                ShiftParams {
                    r11: R::zero(),
                    rm12: two * ep,
                    prod: one - d.clone() * d,
                }
            }
            Kind::D3 | Kind::D4 | Kind::D5 => unreachable!(),
        })
    }

    pub fn shift_params(&self) -> ShiftData {
        let sp = self.shift_params_in::<f64>().expect("float backend");
        ShiftData {
            r11: sp.r11,
            rm12: sp.rm12,
            eta_mib: self.eta_shift_const(1.0).expect("float backend"),
            eta_pib: self.eta_shift_const(-1.0).expect("float backend"),
        }
    }

    /// `g_{-1}, g_0, ..., g_{n_max}` as polynomials in η (index shifted by one).
    pub fn g_polys_in<R: RealField>(&self, n_max: usize) -> Result<Vec<PolyEta<R>>> {
        g_polys(&self.shift_params_in::<R>()?, n_max)
    }

    /// `[g_n^(0), ..., g_n^(n)]`, with `g_n^(k)` the coefficient of `η^(n-k)`.
    pub fn g_coeffs_in<R: RealField>(&self, n: i64) -> Result<Vec<R>> {
        if n < -1 {
            return Err(Error::Domain(format!("g_n needs n >= -1 (got {n})")));
        }
        if n == -1 {
            return Ok(Vec::new());
        }
        let n = n as usize;
        let g = self.g_polys_in::<R>(n)?;
        Ok((0..=n).map(|k| g[n + 1].coeff(n - k)).collect())
    }

    /// Fixed-seed sample points for functional identity checks.
    ///
    /// C-kinds: 20 real points inside the domain and 5 off-axis points.
    /// D-kinds: the integers `1..=min(N-1, 20)`, topped up with non-lattice
    /// dyadic reals to at least 12 points. All values are multiples of 1/1024.
    pub fn sample_points(&self, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (self.kind as u64).wrapping_mul(0x9e37_79b9));
        let dy = |v: f64| (v * 1024.0).round() / 1024.0;
        if self.is_discrete() {
            // q^{±x} beyond about 2^6 makes nested differences lose too many digits
            let cap = if self.kind.uses_q() {
                ((4.2 / self.q.ln().abs()).floor() as i64).clamp(3, 20)
            } else {
                20
            };
            let top = self.n_bound.map_or(cap, |n| (n as i64 - 1).clamp(0, cap));
            let mut pts: Vec<Complex64> = (1..=top).map(|x| Complex64::new(x as f64, 0.0)).collect();
            let hi = self.n_bound.map_or(cap as f64, |n| (n as f64).clamp(1.0, cap as f64));
            let mut j = 0;
            while pts.len() < 12 {
                pts.push(Complex64::new(dy(0.375 + (0.5 * j as f64) % hi), 0.0));
                j += 1;
            }
            return pts;
        }
        let (lo, hi) = match self.kind {
            Kind::C1 => (-3.0, 3.0),
            Kind::C2 | Kind::C7 => (0.2, 2.5),
            Kind::C3 => (0.2, PI - 0.2),
            Kind::C4 => (-PI / 2.0 + 0.2, PI / 2.0 - 0.2),
            Kind::NX => (-0.8, 0.8),
            _ => (-2.0, 2.0),
        };
        let mut pts = Vec::with_capacity(25);
        for _ in 0..20 {
            pts.push(Complex64::new(dy(rng.random_range(lo..hi)), 0.0));
        }
        let span = 0.3 * self.gamma.abs().min(1.0);
        for _ in 0..5 {
            let im = rng.random_range(-span..span);
            let im = if im.abs() < 0.02 { 0.05 } else { im };
            pts.push(Complex64::new(dy(rng.random_range(lo..hi)), dy(im)));
        }
        pts
    }
}

/// `g_{-1}, ..., g_{n_max}` from the three-term recurrence.
pub fn g_polys<R: RealField>(sp: &ShiftParams<R>, n_max: usize) -> Result<Vec<PolyEta<R>>> {
    let two = R::from_i64(2);
    let a = PolyEta::from_coeffs(vec![sp.rm12.clone(), two + sp.r11.clone()]);
    let b = PolyEta::from_coeffs(vec![sp.prod.clone(), -sp.rm12.clone(), R::one()]);
    let mut out = vec![PolyEta::zero(), PolyEta::one()];
    for n in 0..n_max {
        let next = &(&a * &out[n + 1]) - &(&b * &out[n]);
        out.push(next);
    }
    Ok(out)
}
