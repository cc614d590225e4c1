//! The operator `H̃ = ε(V₊(e^{βp} - 1) + V₋(e^{-βp} - 1))` acting on
//! polynomials in η: matrix elements, exact eigenvalues and eigenpolynomials.

use std::sync::RwLock;

use serde::Serialize;

use crate::basicnum::{arg, BracketContext};
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::poly::PolyEta;
use crate::potential::PotentialSpec;
use crate::scalar::{Field, RealField};
use crate::sinusoid::{g_polys, ShiftParams, SinusoidalCoordinate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Flavor {
    /// Plain `H̃`, upper triangular when `L = 2`.
    #[serde(rename = "ES")]
    Es,
    /// `H̃'` with compensation terms, restricted to the invariant space.
    #[serde(rename = "QES-modified")]
    QesModified,
}

/// `H̃ η^n = Σ_m H_{m,n} η^m` for `0 <= m, n <= K`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix<R> {
    pub entries: Matrix<R>,
    pub k: usize,
    pub degree: usize,
    pub flavor: Flavor,
    /// Column `n` lost rows above `K` (`n + L - 2 > K`).
    pub truncated: Vec<bool>,
}

impl<R: RealField> OperatorMatrix<R> {
    pub fn get(&self, m: usize, n: usize) -> &R {
        &self.entries[(m, n)]
    }

    pub fn diagonal(&self) -> Vec<R> {
        (0..=self.k).map(|i| self.entries[(i, i)].clone()).collect()
    }

    /// Columns whose image fits inside the truncation.
    pub fn complete_columns(&self) -> impl Iterator<Item = usize> + '_ {
        (0..=self.k).filter(|&n| !self.truncated[n])
    }
}

pub struct HtOperator<R> {
    coord: SinusoidalCoordinate,
    spec: PotentialSpec<R>,
    eps: R,
    ctx: BracketContext,
    shift: ShiftParams<R>,
    /// `g_{-1}, g_0, ...`, grown on demand.
    g: RwLock<Vec<PolyEta<R>>>,
}

impl<R: RealField> Clone for HtOperator<R> {
    fn clone(&self) -> Self {
        Self {
            coord: self.coord,
            spec: self.spec.clone(),
            eps: self.eps.clone(),
            ctx: self.ctx,
            shift: self.shift.clone(),
            g: RwLock::new(self.g.read().expect("g cache").clone()),
        }
    }
}

impl<R: RealField> std::fmt::Debug for HtOperator<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HtOperator")
            .field("coord", &self.coord)
            .field("spec", &self.spec)
            .finish()
    }
}

impl<R: RealField> HtOperator<R> {
    pub fn new(spec: &PotentialSpec<R>, coord: &SinusoidalCoordinate) -> Result<Self> {
        let shift = coord.shift_params_in::<R>()?;
        let g = g_polys(&shift, 8)?;
        Ok(Self {
            coord: *coord,
            spec: spec.clone(),
            eps: R::from_i64(coord.epsilon() as i64),
            ctx: coord.bracket_context(),
            shift,
            g: RwLock::new(g),
        })
    }

    pub fn spec(&self) -> &PotentialSpec<R> {
        &self.spec
    }

    pub fn coord(&self) -> &SinusoidalCoordinate {
        &self.coord
    }

    pub fn degree(&self) -> usize {
        self.spec.degree()
    }

    pub fn epsilon(&self) -> &R {
        &self.eps
    }

    pub fn bracket_context(&self) -> &BracketContext {
        &self.ctx
    }

    pub fn shift_params(&self) -> &ShiftParams<R> {
        &self.shift
    }

    /// `g_p^{(j)}`, the coefficient of `η^{p-j}` in `g_p`; zero outside `0 <= j <= p`.
    pub fn g_coeff(&self, p: i64, j: usize) -> R {
        if p < 0 || j as i64 > p {
            return R::zero();
        }
        let p = p as usize;
        {
            let g = self.g.read().expect("g cache");
            if p + 1 < g.len() {
                return g[p + 1].coeff(p - j);
            }
        }
        let mut g = self.g.write().expect("g cache");
        if p + 1 >= g.len() {
            *g = g_polys(&self.shift, p + 8).expect("recurrence is infallible");
        }
        g[p + 1].coeff(p - j)
    }

    /// `g_p` as a polynomial.
    pub fn g_poly(&self, p: i64) -> PolyEta<R> {
        if p < 0 {
            return PolyEta::zero();
        }
        PolyEta::from_coeffs((0..=p as usize).map(|k| self.g_coeff(p, p as usize - k)).collect())
    }

    /// `e_{m,j,n} = ε Σ_l v_{L-m+j-l,l} Σ_{r=0}^{n-1} g^{(j)}_{n+l-r-2}`.
    pub fn emjn(&self, m: usize, j: usize, n: usize) -> R {
        let big_l = self.degree() as i64;
        let mut acc = R::zero();
        for l in 0..=1i64 {
            let k = big_l - m as i64 + j as i64 - l;
            if k < 0 || k > big_l - l {
                continue;
            }
            let v = self.spec.get(k as usize, l as usize);
            if v.is_zero() {
                continue;
            }
            let mut s = R::zero();
            for r in 0..n as i64 {
                s = s + self.g_coeff(n as i64 + l - r - 2, j);
            }
            acc = acc + v * s;
        }
        self.eps.clone() * acc
    }

    /// `H_{m,n}`: coefficient of `η^m` in `H̃ η^n`.
    pub fn element(&self, m: usize, n: usize) -> R {
        let top = n + self.degree() - 2;
        if m > top {
            return R::zero();
        }
        let mm = top - m;
        (0..=mm).fold(R::zero(), |acc, j| acc + self.emjn(mm, j, n))
    }

    /// `H̃ η^n` in full, of degree at most `n + L - 2`.
    pub fn column(&self, n: usize) -> PolyEta<R> {
        let top = n + self.degree() - 2;
        PolyEta::from_coeffs((0..=top).map(|m| self.element(m, n)).collect())
    }

    /// `H̃ f` for a polynomial `f`.
    pub fn apply(&self, f: &PolyEta<R>) -> PolyEta<R> {
        f.coeffs()
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .fold(PolyEta::zero(), |acc, (n, c)| &acc + &self.column(n).scale(c))
    }

    pub fn ht_matrix(&self, k: usize) -> Result<OperatorMatrix<R>> {
        if k < 1 {
            return Err(Error::InvalidParameter("truncation degree K must be at least 1".into()));
        }
        let l = self.degree();
        let entries = Matrix::from_fn(k + 1, k + 1, |m, n| self.element(m, n));
        Ok(OperatorMatrix {
            entries,
            k,
            degree: l,
            flavor: Flavor::Es,
            truncated: (0..=k).map(|n| n + l - 2 > k).collect(),
        })
    }

    fn require_es(&self) -> Result<()> {
        if self.degree() != 2 {
            return Err(Error::NotExactlySolvable { degree: self.degree() });
        }
        Ok(())
    }

    /// `E(n) = ε [n/2]/[1/2] (v_{2,0}[(n-1)/2] + v_{1,1}[(n+1)/2])`.
    pub fn energy(&self, n: usize) -> Result<R> {
        self.require_es()?;
        let n = n as i64;
        let b = |num: i64, den: i64| self.ctx.bracket_in::<R>(arg(num, den));
        let inner = self.spec.get(2, 0) * b(n - 1, 2)? + self.spec.get(1, 1) * b(n + 1, 2)?;
        Ok(self.eps.clone() * b(n, 2)? / b(1, 2)? * inner)
    }

    /// Monic `P_n` with `H̃ P_n = E(n) P_n`, by back substitution.
    pub fn eigenpoly(&self, n: usize) -> Result<PolyEta<R>> {
        self.require_es()?;
        if n == 0 {
            return Ok(PolyEta::one());
        }
        let h = self.ht_matrix(n)?;
        let e_n = h.get(n, n).clone();
        let mut c = vec![R::zero(); n + 1];
        c[n] = R::one();
        for i in (0..n).rev() {
            let gap = e_n.clone() - h.get(i, i).clone();
            if degenerate(&gap, &e_n) {
                return Err(Error::Degenerate { i, n });
            }
            let s = (i + 1..=n).fold(R::zero(), |acc, j| acc + h.get(i, j).clone() * c[j].clone());
            c[i] = s / gap;
        }
        Ok(PolyEta::from_coeffs(c))
    }

    /// `ε[V₊(x)(f(η(x-iβ)) - f(η(x))) + V₋(x)(f(η(x+iβ)) - f(η(x)))]`.
    pub fn apply_pointwise<C: Field>(&self, f: &PolyEta<R>, x: &C) -> Result<C> {
        let (vp, vm) = self.spec.v_pair(&self.coord, x)?;
        let f0 = f.eval_in(&self.coord.eta(x)?);
        let fm = f.eval_in(&self.coord.eta_shifted(x, 1.0)?);
        let fp = f.eval_in(&self.coord.eta_shifted(x, -1.0)?);
        let eps: C = self.eps.lift();
        Ok(eps * (vp * (fm - f0.clone()) + vm * (fp - f0)))
    }
}

fn degenerate<R: RealField>(gap: &R, e: &R) -> bool {
    if R::EXACT {
        gap.is_zero()
    } else {
        gap.to_f64().abs() < 1e-12 * e.to_f64().abs().max(1.0)
    }
}
