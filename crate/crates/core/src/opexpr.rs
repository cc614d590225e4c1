//! Noncommutative words in `H̃` and multiplication by `η`, evaluated
//! pointwise on polynomial test functions.
//!
//! `H̃` is a difference operator, so `(H̃ g)(x)` needs `g` at `x` and
//! `x ∓ iβ`. A word with `d` factors of `H̃` is evaluated on the grid of
//! shifted points `x - k iβ`, `|k| <= d`, one generator at a time.

use crate::error::Result;
use crate::poly::PolyEta;
use crate::polyop::HtOperator;
use crate::scalar::{Field, RealField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gen {
    H,
    Eta,
}

/// `Σ c_i w_i` with words written as operator products (rightmost acts first).
#[derive(Debug, Clone, PartialEq)]
pub struct OpExpr<C> {
    terms: Vec<(C, Vec<Gen>)>,
}

impl<C: Field> Default for OpExpr<C> {
    fn default() -> Self {
        Self::new()
    }
}

impl<C: Field> OpExpr<C> {
    pub fn new() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn term(mut self, c: C, word: &[Gen]) -> Self {
        self.push(c, word);
        self
    }

    pub fn push(&mut self, c: C, word: &[Gen]) {
        if !c.is_zero() {
            self.terms.push((c, word.to_vec()));
        }
    }

    /// Appends every term of `other` multiplied by `c`.
    pub fn extend_scaled(&mut self, other: &Self, c: &C) {
        for (a, w) in &other.terms {
            self.push(a.clone() * c.clone(), w);
        }
    }

    /// `self · w` for every term (right multiplication by a word).
    pub fn then(&self, word: &[Gen]) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(c, w)| {
                let mut w = w.clone();
                w.extend_from_slice(word);
                (c.clone(), w)
            })
            .collect();
        Self { terms }
    }

    pub fn terms(&self) -> &[(C, Vec<Gen>)] {
        &self.terms
    }

    fn depth(&self) -> usize {
        self.terms
            .iter()
            .map(|(_, w)| w.iter().filter(|g| **g == Gen::H).count())
            .max()
            .unwrap_or(0)
    }

    /// `(Σ c_i w_i f)(x)` together with `Σ |c_i (w_i f)(x)|` as a residual scale.
    pub fn eval<R: RealField>(&self, op: &HtOperator<R>, f: &PolyEta<R>, x: &C) -> Result<(C, f64)> {
        let grid = Grid::new(op, f, x, self.depth())?;
        let mut total = C::zero();
        let mut scale = 0.0;
        for (c, w) in &self.terms {
            let t = c.clone() * grid.word(op, w);
            scale += t.magnitude();
            total = total + t;
        }
        Ok((total, scale))
    }
}

/// `η`, `V₊`, `V₋` and `f(η)` on the shifted points `x - k iβ`.
struct Grid<C> {
    radius: usize,
    eta: Vec<C>,
    vp: Vec<C>,
    vm: Vec<C>,
    f: Vec<C>,
}

impl<C: Field> Grid<C> {
    fn new<R: RealField>(op: &HtOperator<R>, f: &PolyEta<R>, x: &C, radius: usize) -> Result<Self> {
        let coord = op.coord();
        let r = radius as i64;
        let mut eta = Vec::new();
        let mut fv = Vec::new();
        let mut vp = Vec::new();
        let mut vm = Vec::new();
        for k in -r..=r {
            let xk = coord.shift_point(x, k as f64)?;
            let e = coord.eta(&xk)?;
            fv.push(f.eval_in(&e));
            eta.push(e);
            if k.abs() < r {
                let (p, m) = op.spec().v_pair(coord, &xk)?;
                vp.push(p);
                vm.push(m);
            } else {
                vp.push(C::zero());
                vm.push(C::zero());
            }
        }
        Ok(Self {
            radius,
            eta,
            vp,
            vm,
            f: fv,
        })
    }

    fn word<R: RealField>(&self, op: &HtOperator<R>, w: &[Gen]) -> C {
        let eps: C = op.epsilon().lift();
        let mut vals = self.f.clone();
        // vals[i] lives at k = i - radius; `lo..=hi` is the valid index range
        let (mut lo, mut hi) = (0usize, 2 * self.radius);
        for g in w.iter().rev() {
            match g {
                Gen::Eta => {
                    for i in lo..=hi {
                        vals[i] = vals[i].clone() * self.eta[i].clone();
                    }
                }
                Gen::H => {
                    let mut next = vals.clone();
                    for i in lo + 1..hi {
                        let d_minus = vals[i + 1].clone() - vals[i].clone();
                        let d_plus = vals[i - 1].clone() - vals[i].clone();
                        next[i] = eps.clone() * (self.vp[i].clone() * d_minus + self.vm[i].clone() * d_plus);
                    }
                    vals = next;
                    lo += 1;
                    hi -= 1;
                }
            }
        }
        vals[self.radius].clone()
    }
}
