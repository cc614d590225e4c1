//! Quasi-exact solvability: `H̃' = H̃ - Σ_m e_m(M) η^{L-2-m}` keeps
//! `Span[1, η, ..., η^M]` invariant for `L = 3, 4`. No such modification
//! exists for `L >= 5`.

use nalgebra::Complex;
use serde::Serialize;

use crate::basicnum::{arg, BracketContext};
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::poly::PolyEta;
use crate::polyop::{Flavor, HtOperator, OperatorMatrix};
use crate::potential::PotentialSpec;
use crate::scalar::RealField;
use crate::sinusoid::SinusoidalCoordinate;

/// What to do when `v_{3,1}` disagrees with `-[M-1]/[M] v_{4,0}` (`L = 4`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum V31Policy {
    /// Overwrite `v_{3,1}` and record a warning.
    Enforce,
    /// Keep the caller's value; the invariance check will then fail.
    Keep,
}

#[derive(Debug, Clone)]
pub struct QesModel<R: RealField> {
    op: HtOperator<R>,
    m: usize,
    e0: R,
    e1: Option<R>,
    closed_e0: R,
    closed_e1: Option<R>,
    warnings: Vec<String>,
}

impl<R: RealField> QesModel<R> {
    pub fn build(spec: &PotentialSpec<R>, coord: &SinusoidalCoordinate, m: usize, policy: V31Policy) -> Result<Self> {
        let degree = spec.degree();
        if !(3..=4).contains(&degree) {
            return Err(Error::Unsupported(format!(
                "quasi-exact solvability needs L = 3 or 4 (got L = {degree})"
            )));
        }
        let ctx = coord.bracket_context();
        let b = |num: i64, den: i64| ctx.bracket_in::<R>(arg(num, den));
        let mi = m as i64;
        let mut spec = spec.clone();
        let mut warnings = Vec::new();
        if degree == 4 {
            let (bm, bm3) = (b(mi, 1)?, b(mi + 3, 1)?);
            for (name, v) in [("[M]", &bm), ("[M+3]", &bm3)] {
                if is_negligible(v) {
                    return Err(Error::SingularBracket(format!("{name} = 0 at M = {m}")));
                }
            }
            let (v40, v31) = (spec.get(4, 0), spec.get(3, 1));
            if v40.is_zero() && !v31.is_zero() {
                return Err(Error::InconsistentConstraint(
                    "v_(4,0) = 0 forces v_(3,1) = 0 but v_(3,1) is nonzero".into(),
                ));
            }
            let forced = -(b(mi - 1, 1)? / bm * v40);
            if policy == V31Policy::Enforce && !close(&forced, &v31) {
                warnings.push(format!("v_(3,1) overwritten: {v31} -> {forced}"));
                spec.set(3, 1, forced)?;
            }
        }
        let op = HtOperator::new(&spec, coord)?;
        let e0 = op.emjn(0, 0, m);
        let e1 = (degree == 4).then(|| op.emjn(1, 0, m) + op.emjn(1, 1, m));
        let (closed_e0, closed_e1) = closed_forms(&op, &ctx, m)?;
        Ok(Self {
            op,
            m,
            e0,
            e1,
            closed_e0,
            closed_e1,
            warnings,
        })
    }

    pub fn spec(&self) -> &PotentialSpec<R> {
        self.op.spec()
    }

    pub fn operator(&self) -> &HtOperator<R> {
        &self.op
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> usize {
        self.op.degree()
    }

    pub fn e0(&self) -> &R {
        &self.e0
    }

    pub fn e1(&self) -> Option<&R> {
        self.e1.as_ref()
    }

    /// Closed-form `e_0(M)` as printed in the literature.
    pub fn closed_e0(&self) -> &R {
        &self.closed_e0
    }

    /// Closed-form `e_1(M)` (`L = 4` only).
    pub fn closed_e1(&self) -> Option<&R> {
        self.closed_e1.as_ref()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `e_0 η^{L-2} + e_1 η^{L-3}`.
    pub fn compensation(&self) -> PolyEta<R> {
        let l = self.degree();
        let mut c = vec![R::zero(); l - 1];
        c[l - 2] = self.e0.clone();
        if let Some(e1) = &self.e1 {
            c[l - 3] = e1.clone();
        }
        PolyEta::from_coeffs(c)
    }

    /// `H̃' f`.
    pub fn apply(&self, f: &PolyEta<R>) -> PolyEta<R> {
        &self.op.apply(f) - &(&self.compensation() * f)
    }

    /// `H̃'` on `Span[1, ..., η^M]`, after checking that rows `M+1..M+L-2` vanish.
    pub fn matrix(&self) -> Result<OperatorMatrix<R>> {
        let m = self.m;
        let mut entries = Matrix::zeros(m + 1, m + 1);
        for n in 0..=m {
            let col = self.apply(&PolyEta::monomial(n));
            let scale = col.max_abs_coeff().max(1.0);
            for row in m + 1..=m + self.degree() - 2 {
                let r = col.coeff(row);
                let broken = if R::EXACT { !r.is_zero() } else { r.to_f64().abs() > 1e-12 * scale };
                if broken {
                    return Err(Error::QesBroken {
                        column: n,
                        residual: r.to_f64(),
                    });
                }
            }
            for row in 0..=m {
                entries[(row, n)] = col.coeff(row);
            }
        }
        Ok(OperatorMatrix {
            entries,
            k: m,
            degree: self.degree(),
            flavor: Flavor::QesModified,
            truncated: vec![false; m + 1],
        })
    }

    /// The `M + 1` eigenvalues of the invariant block, sorted by real part.
    pub fn spectrum(&self) -> Result<Vec<Complex<f64>>> {
        let h = self.matrix()?.entries.to_dmatrix();
        let mut ev: Vec<Complex<f64>> = h.complex_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(ev)
    }
}

fn is_negligible<R: RealField>(v: &R) -> bool {
    if R::EXACT {
        v.is_zero()
    } else {
        v.to_f64().abs() < 1e-12
    }
}

fn close<R: RealField>(a: &R, b: &R) -> bool {
    if R::EXACT {
        a == b
    } else {
        (a.to_f64() - b.to_f64()).abs() <= 1e-14 * a.to_f64().abs().max(b.to_f64().abs()).max(1e-300)
    }
}

fn closed_forms<R: RealField>(op: &HtOperator<R>, ctx: &BracketContext, m: usize) -> Result<(R, Option<R>)> {
    let b = |num: i64, den: i64| ctx.bracket_in::<R>(arg(num, den));
    let spec = op.spec();
    let eps = op.epsilon().clone();
    let mi = m as i64;
    let lead = |hi: usize| -> Result<R> {
        let inner = b(mi - 1, 2)? * spec.get(hi, 0) + b(mi + 1, 2)? * spec.get(hi - 1, 1);
        Ok(eps.clone() * b(mi, 2)? / b(1, 2)? * inner)
    };
    if spec.degree() == 3 {
        return Ok((lead(3)?, None));
    }
    let v40 = spec.get(4, 0);
    let base = b(mi, 2)? * b(mi - 1, 2)? / (b(1, 2)? * b(mi + 3, 1)?);
    let e0 = -(eps.clone() * b(4, 1)? * base.clone() * v40.clone());
    let rm12 = op.shift_params().rm12.clone();
    let tail = if ctx.is_linear() {
        let mr = R::from_i64(mi);
        mr.clone() * (mr.clone() - R::one()) * (mr.clone() * mr.clone() + R::from_i64(5) * mr.clone() + R::from_i64(8))
            / (mr + R::from_i64(3))
    } else {
        let r11 = ctx.r11_in::<R>()?;
        let paren = b(4, 1)? - R::from_i64(2) * b(3, 1)? + R::from_i64(2) * b(1, 2)? * b(2 * mi + 5, 1)? / b(2 * mi + 5, 2)?;
        R::from_i64(2) * base / r11 * paren
    };
    let e1 = lead(3)? - eps * rm12 * v40 * tail;
    Ok((e0, Some(e1)))
}

/// Outcome of the feasibility test for a given `L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QesFeasibility {
    pub degree: usize,
    pub feasible: bool,
    /// For `L >= 5`: `[[M-1], [M]; [M-3/2], [M-1/2]]` and its determinant `[1/2]`.
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub matrix: [[f64; 2]; 2],
    pub det: f64,
    /// Exact determinant when the regime is linear.
    pub det_exact: Option<String>,
}

pub fn qes_feasible(degree: usize, ctx: &BracketContext, m: usize) -> Result<QesFeasibility> {
    if degree < 2 {
        return Err(Error::InvalidParameter(format!("degree L = {degree} must be at least 2")));
    }
    if degree < 5 {
        return Ok(QesFeasibility {
            degree,
            feasible: (3..=4).contains(&degree),
            witness: None,
        });
    }
    let mi = 2 * m as i64;
    let cells = [[(mi - 2, 2), (mi, 2)], [(mi - 3, 2), (mi - 1, 2)]];
    let det_exact = if ctx.is_linear() {
        let e = |(n, d): (i64, i64)| ctx.bracket_in::<crate::scalar::Rational>(arg(n, d));
        let det = e(cells[0][0])? * e(cells[1][1])? - e(cells[0][1])? * e(cells[1][0])?;
        Some(det.to_string())
    } else {
        None
    };
    let f = |(n, d): (i64, i64)| ctx.bracket(n as f64 / d as f64);
    let matrix = cells.map(|row| row.map(f));
    let det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
    Ok(QesFeasibility {
        degree,
        feasible: false,
        witness: Some(Witness { matrix, det, det_exact }),
    })
}

/// `v_{3,1} = -[M-1]/[M] v_{4,0}`.
pub fn forced_v31<R: RealField>(ctx: &BracketContext, m: usize, v40: &R) -> Result<R> {
    let mi = m as i64;
    let bm: R = ctx.bracket_in(arg(mi, 1))?;
    if is_negligible(&bm) {
        return Err(Error::SingularBracket(format!("[M] = 0 at M = {m}")));
    }
    Ok(-(ctx.bracket_in::<R>(arg(mi - 1, 1))? / bm * v40.clone()))
}
