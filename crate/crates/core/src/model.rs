//! Model files: a coordinate, a potential, and optional QES and lattice blocks.
//!
//! ```json
//! {
//!   "coordinate": {"kind": "D1", "N": 4},
//!   "potential": {"L": 2, "v": {"2,0": 1, "1,1": -1, "1,0": -2, "0,1": 2, "0,0": 2}},
//!   "qes": {"M": 3},
//!   "lattice": {"N": 4}
//! }
//! ```
//!
//! Coefficients are JSON numbers or strings such as `"-3/4"`. Numbers are
//! read from their decimal text, so `0.3` is exactly `3/10` in the rational
//! backend. For real-shift coordinates a missing `"0,0"` is filled in from
//! the boundary condition `D(0) = 0`.

use std::collections::BTreeMap;
use std::str::FromStr;

use num::{BigInt, BigRational, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{canonicalize, PotentialSpec, RawCoeffs};
use crate::qes::V31Policy;
use crate::scalar::RealField;
use crate::sinusoid::{CoordinateParams, Kind, SinusoidalCoordinate};
use crate::verify::ClosureCoeffs;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateBlock {
    pub kind: Kind,
    #[serde(flatten)]
    pub params: CoordinateParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    #[serde(rename = "L")]
    pub degree: usize,
    pub v: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum V31Mode {
    #[default]
    Enforce,
    Keep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QesBlock {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default)]
    pub v31: V31Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeBlock {
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, rename = "K_tr", skip_serializing_if = "Option::is_none")]
    pub k_tr: Option<usize>,
}

/// Closure coefficients recorded alongside a model, checked by `verify`
/// instead of being recomputed from the potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateBlock {
    /// `[r1_1, r1_0]`
    pub r1: Vec<serde_json::Value>,
    /// `[r0_2, r0_1, r0_0]`
    pub r0: Vec<serde_json::Value>,
    /// `[rm1_2, rm1_1, rm1_0]`
    pub rm1: Vec<serde_json::Value>,
}

impl CertificateBlock {
    pub fn from_coeffs<R: RealField>(c: &ClosureCoeffs<R>) -> Self {
        let enc = |v: &R| {
            if R::EXACT {
                serde_json::Value::String(v.to_string())
            } else {
                serde_json::json!(v.to_f64())
            }
        };
        Self {
            r1: c.r1.iter().map(enc).collect(),
            r0: c.r0.iter().map(enc).collect(),
            rm1: c.rm1.iter().map(enc).collect(),
        }
    }

    pub fn coeffs<R: RealField>(&self) -> Result<ClosureCoeffs<R>> {
        fn take<R: RealField, const N: usize>(name: &str, v: &[serde_json::Value]) -> Result<[R; N]> {
            if v.len() != N {
                return Err(Error::Schema(format!("certificate {name} needs {N} entries, got {}", v.len())));
            }
            let parsed: Vec<R> = v
                .iter()
                .map(|x| Ok(R::from_rational(&parse_rational(&value_text(name, x)?)?)))
                .collect::<Result<_>>()?;
            Ok(parsed.try_into().unwrap_or_else(|_| unreachable!("length checked")))
        }
        Ok(ClosureCoeffs {
            r1: take("r1", &self.r1)?,
            r0: take("r0", &self.r0)?,
            rm1: take("rm1", &self.rm1)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub coordinate: CoordinateBlock,
    pub potential: PotentialBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qes: Option<QesBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeBlock>,
}

/// A validated model in backend `R`.
#[derive(Debug, Clone)]
pub struct Model<R: RealField> {
    pub coord: SinusoidalCoordinate,
    pub spec: PotentialSpec<R>,
    pub qes: Option<QesBlock>,
    pub lattice: Option<LatticeBlock>,
    pub certificate: Option<ClosureCoeffs<R>>,
}

impl V31Mode {
    pub fn policy(self) -> V31Policy {
        match self {
            V31Mode::Enforce => V31Policy::Enforce,
            V31Mode::Keep => V31Policy::Keep,
        }
    }
}

/// Exact value of `"-3/4"`, `"2"`, `"0.125"` or `"1.5e-3"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Schema(format!("{s:?} is not a number"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Schema(format!("{s:?} has a zero denominator")));
        }
        return Ok(BigRational::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if frac.starts_with(['+', '-']) || (int.is_empty() && frac.is_empty()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let digits = if digits == "-" || digits == "+" { format!("{digits}0") } else { digits };
    let num = BigInt::from_str(&digits).map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let r = BigRational::from_integer(num);
    Ok(if scale >= 0 {
        r * BigRational::from_integer(num::pow(ten, scale as usize))
    } else {
        r / BigRational::from_integer(num::pow(ten, (-scale) as usize))
    })
}

fn parse_key(key: &str) -> Result<(usize, usize)> {
    let bad = || Error::Schema(format!("coefficient key {key:?} must look like \"k,l\""));
    let (k, l) = key.split_once(',').ok_or_else(bad)?;
    Ok((k.trim().parse().map_err(|_| bad())?, l.trim().parse().map_err(|_| bad())?))
}

fn value_text(key: &str, v: &serde_json::Value) -> Result<String> {
    match v {
        serde_json::Value::Number(n) => Ok(n.to_string()),
        serde_json::Value::String(s) => Ok(s.clone()),
        other => Err(Error::Schema(format!("v[{key:?}] = {other} is not a number"))),
    }
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files serialize")
    }

    /// Cross-field checks that do not depend on the backend.
    pub fn validate(&self) -> Result<()> {
        if self.lattice.is_some() && !self.coordinate.kind.is_discrete() {
            return Err(Error::Schema(format!(
                "a lattice block needs a real-shift coordinate, not {}",
                self.coordinate.kind
            )));
        }
        if let Some(l) = &self.lattice {
            match (l.n, l.k_tr) {
                (Some(_), Some(_)) => return Err(Error::Schema("lattice block takes N or K_tr, not both".into())),
                (None, None) => return Err(Error::Schema("lattice block needs N or K_tr".into())),
                (Some(n), None) => {
                    if self.coordinate.params.n_bound.is_some_and(|c| c != n) {
                        return Err(Error::Schema("lattice N disagrees with the coordinate N".into()));
                    }
                }
                (None, Some(_)) => {
                    if self.coordinate.params.n_bound.is_some() {
                        return Err(Error::Schema("K_tr is for semi-infinite lattices; the coordinate has N".into()));
                    }
                }
            }
        }
        for (key, v) in &self.potential.v {
            parse_key(key)?;
            parse_rational(&value_text(key, v)?)?;
        }
        if let Some(c) = &self.certificate {
            c.coeffs::<BigRational>()?;
        }
        Ok(())
    }

    pub fn coordinate(&self) -> Result<SinusoidalCoordinate> {
        let mut p = self.coordinate.params;
        if let Some(n) = self.lattice.as_ref().and_then(|l| l.n) {
            p.n_bound = Some(n);
        }
        SinusoidalCoordinate::new(self.coordinate.kind, p)
    }

    /// Coefficients in backend `R`, with `v_{k,l}`, `l >= 2`, rewritten.
    pub fn spec<R: RealField>(&self, coord: &SinusoidalCoordinate) -> Result<PotentialSpec<R>> {
        let mut raw: RawCoeffs<R> = BTreeMap::new();
        for (key, v) in &self.potential.v {
            let q = parse_rational(&value_text(key, v)?)?;
            raw.insert(parse_key(key)?, R::from_rational(&q));
        }
        let has_v00 = raw.contains_key(&(0, 0));
        let spec = canonicalize(&raw, self.potential.degree, coord)?;
        if coord.is_discrete() && !has_v00 {
            return spec.apply_discrete_boundary(coord, None);
        }
        Ok(spec)
    }

    pub fn load<R: RealField>(&self) -> Result<Model<R>> {
        let coord = self.coordinate()?;
        let spec = self.spec(&coord)?;
        Ok(Model {
            coord,
            spec,
            qes: self.qes.clone(),
            lattice: self.lattice.clone(),
            certificate: self.certificate.as_ref().map(|c| c.coeffs()).transpose()?,
        })
    }
}
