//! Potential functions `V±(x) = Ṽ±(x) / ((η(x∓iβ) - η(x))(η(x∓iβ) - η(x±iβ)))`
//! with `Ṽ±(x) = Σ v_{k,l} η(x)^k η(x∓iβ)^l`, `l ∈ {0, 1}`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Field, RealField};
use crate::sinusoid::SinusoidalCoordinate;

/// Coefficients `v_{k,l}` keyed by `(k, l)`, possibly with `l >= 2`.
pub type RawCoeffs<R> = BTreeMap<(usize, usize), R>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    /// `V₊`, which is `V` or `B`.
    Plus,
    /// `V₋`, which is `V*` or `D`.
    Minus,
}

impl Sign {
    /// Shift step `k` in `x - k iβ` used inside `Ṽ±`.
    fn step(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec<R> {
    degree: usize,
    v0: Vec<R>,
    v1: Vec<R>,
}

impl<R: RealField> PotentialSpec<R> {
    /// `v0[k] = v_{k,0}` for `k <= L`, `v1[k] = v_{k,1}` for `k < L`.
    pub fn new(degree: usize, v0: Vec<R>, v1: Vec<R>) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidParameter(format!("degree L = {degree} must be at least 2")));
        }
        if v0.len() != degree + 1 || v1.len() != degree {
            return Err(Error::InvalidParameter(format!(
                "degree {degree} needs {} v_(k,0) and {degree} v_(k,1) coefficients",
                degree + 1
            )));
        }
        let s = Self { degree, v0, v1 };
        let lead = s.v0[degree].magnitude().max(s.v1[degree - 1].magnitude());
        let tiny = if R::EXACT { 0.0 } else { 1e-12 * s.max_abs() };
        if lead <= tiny {
            return Err(Error::DegreeConstraint);
        }
        Ok(s)
    }

    pub fn from_map(degree: usize, map: &RawCoeffs<R>) -> Result<Self> {
        let mut v0 = vec![R::zero(); degree + 1];
        let mut v1 = vec![R::zero(); degree];
        for ((k, l), v) in map {
            match l {
                0 if *k <= degree => v0[*k] = v.clone(),
                1 if k + 1 <= degree => v1[*k] = v.clone(),
                _ if k + l > degree => {
                    return Err(Error::Domain(format!("v_({k},{l}) exceeds degree L = {degree}")))
                }
                _ => return Err(Error::Domain(format!("v_({k},{l}) is not canonical (l >= 2)"))),
            }
        }
        Self::new(degree, v0, v1)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, k: usize, l: usize) -> R {
        let c = match l {
            0 => self.v0.get(k),
            1 => self.v1.get(k),
            _ => None,
        };
        c.cloned().unwrap_or_else(R::zero)
    }

    /// Sets a coefficient inside the degree bound without revalidating.
    pub fn set(&mut self, k: usize, l: usize, v: R) -> Result<()> {
        let slot = match l {
            0 => self.v0.get_mut(k),
            1 => self.v1.get_mut(k),
            _ => None,
        };
        *slot.ok_or_else(|| Error::Domain(format!("v_({k},{l}) is outside the degree bound")))? = v;
        Ok(())
    }

    pub fn to_map(&self) -> RawCoeffs<R> {
        let mut m = BTreeMap::new();
        for (k, v) in self.v0.iter().enumerate() {
            m.insert((k, 0), v.clone());
        }
        for (k, v) in self.v1.iter().enumerate() {
            m.insert((k, 1), v.clone());
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.v0.iter().chain(&self.v1).map(|v| v.magnitude()).fold(0.0, f64::max)
    }

    pub fn map<S: RealField>(&self, f: impl Fn(&R) -> S) -> PotentialSpec<S> {
        PotentialSpec {
            degree: self.degree,
            v0: self.v0.iter().map(&f).collect(),
            v1: self.v1.iter().map(&f).collect(),
        }
    }

    pub fn to_f64(&self) -> PotentialSpec<f64> {
        self.map(|v| v.to_f64())
    }

    pub fn lift<S: RealField>(&self) -> PotentialSpec<S> {
        self.map(|v| v.lift())
    }

    /// `Ṽ±` from `η(x)` and `s = η(x∓iβ)`.
    pub fn vt_from<C: Field>(&self, eta: &C, s: &C) -> C {
        let p0 = horner(&self.v0, eta);
        let p1 = horner(&self.v1, eta);
        p0 + p1 * s.clone()
    }

    /// `V₊(x)` or `V₋(x)`.
    pub fn v_eval<C: Field>(&self, coord: &SinusoidalCoordinate, x: &C, sign: Sign) -> Result<C> {
        let k = sign.step();
        let eta = coord.eta(x)?;
        let s = coord.eta_shifted(x, k)?;
        let so = coord.eta_shifted(x, -k)?;
        let den = (s.clone() - eta.clone()) * (s.clone() - so.clone());
        check_denominator(&den, &[&eta, &s, &so], x)?;
        Ok(self.vt_from(&eta, &s) / den)
    }

    /// `V₊(x) + V₋(x)` sharing the three η evaluations.
    pub fn v_pair<C: Field>(&self, coord: &SinusoidalCoordinate, x: &C) -> Result<(C, C)> {
        let eta = coord.eta(x)?;
        let sm = coord.eta_shifted(x, 1.0)?;
        let sp = coord.eta_shifted(x, -1.0)?;
        let den_p = (sm.clone() - eta.clone()) * (sm.clone() - sp.clone());
        let den_m = (sp.clone() - eta.clone()) * (sp.clone() - sm.clone());
        check_denominator(&den_p, &[&eta, &sm, &sp], x)?;
        check_denominator(&den_m, &[&eta, &sm, &sp], x)?;
        Ok((self.vt_from(&eta, &sm) / den_p, self.vt_from(&eta, &sp) / den_m))
    }

    /// Sets `v_{0,0} = -v_{0,1} η(-1)` so that `D(0) = 0`; with `n_max` also
    /// checks `B(N) = 0` and positivity of `B` on `[0, N-1]` and `D` on `[1, N]`.
    pub fn apply_discrete_boundary(&self, coord: &SinusoidalCoordinate, n_max: Option<u32>) -> Result<Self> {
        if !coord.is_discrete() {
            return Err(Error::Precondition(format!(
                "boundary conditions apply to real-shift coordinates, not {}",
                coord.kind()
            )));
        }
        let em1: R = coord.eta_shift_const(-1.0)?;
        let mut out = self.clone();
        out.v0[0] = -(self.v1[0].clone() * em1);
        if let Some(n) = n_max {
            out.check_lattice(coord, n)?;
        }
        Ok(out)
    }

    /// `B(N) = 0` and strict positivity inside the lattice.
    pub fn check_lattice(&self, coord: &SinusoidalCoordinate, n: u32) -> Result<()> {
        let mut b = Vec::with_capacity(n as usize + 1);
        let mut d = Vec::with_capacity(n as usize + 1);
        for x in 0..=n {
            let (bx, dx) = self.v_pair(coord, &R::from_i64(x as i64))?;
            b.push(bx);
            d.push(dx);
        }
        let scale = b
            .iter()
            .chain(&d)
            .map(|v| v.magnitude())
            .fold(self.max_abs().max(1.0), f64::max);
        let bn = &b[n as usize];
        let bn_ok = if R::EXACT { bn.is_zero() } else { bn.magnitude() < 1e-10 * scale };
        if !bn_ok {
            return Err(Error::ConstraintViolation(format!("B(N) = {bn} at N = {n}")));
        }
        let bad_b: Vec<i64> = (0..n).filter(|&x| b[x as usize] <= R::zero()).map(i64::from).collect();
        if !bad_b.is_empty() {
            return Err(Error::Positivity {
                function: "B",
                points: bad_b,
            });
        }
        let bad_d: Vec<i64> = (1..=n).filter(|&x| d[x as usize] <= R::zero()).map(i64::from).collect();
        if !bad_d.is_empty() {
            return Err(Error::Positivity {
                function: "D",
                points: bad_d,
            });
        }
        Ok(())
    }
}

fn horner<R: RealField, C: Field>(c: &[R], x: &C) -> C {
    c.iter().rev().fold(C::zero(), |acc, v| acc * x.clone() + v.lift::<C>())
}

fn check_denominator<C: Field>(den: &C, parts: &[&C], x: &C) -> Result<()> {
    let singular = if C::EXACT {
        den.is_zero()
    } else {
        let s = parts.iter().map(|p| p.magnitude()).fold(1.0, f64::max);
        den.magnitude() <= 1e-12 * s * s || !den.magnitude().is_finite()
    };
    if singular {
        Err(Error::SingularPoint { x: x.to_c64() })
    } else {
        Ok(())
    }
}

/// `Ṽ±` for coefficients with arbitrary `l`.
pub fn vt_raw<R: RealField, C: Field>(raw: &RawCoeffs<R>, eta: &C, s: &C) -> C {
    raw.iter().fold(C::zero(), |acc, ((k, l), v)| {
        acc + v.lift::<C>() * eta.powi(*k as u32) * s.powi(*l as u32)
    })
}

/// `V±` for coefficients with arbitrary `l`.
pub fn v_eval_raw<R: RealField, C: Field>(
    raw: &RawCoeffs<R>,
    coord: &SinusoidalCoordinate,
    x: &C,
    sign: Sign,
) -> Result<C> {
    let k = sign.step();
    let eta = coord.eta(x)?;
    let s = coord.eta_shifted(x, k)?;
    let so = coord.eta_shifted(x, -k)?;
    let den = (s.clone() - eta.clone()) * (s.clone() - so.clone());
    check_denominator(&den, &[&eta, &s, &so], x)?;
    Ok(vt_raw(raw, &eta, &s) / den)
}

/// Rewrites `η(x∓iβ)^2` through the shift axioms until only `l <= 1` remains.
pub fn canonicalize<R: RealField>(
    raw: &RawCoeffs<R>,
    degree: usize,
    coord: &SinusoidalCoordinate,
) -> Result<PotentialSpec<R>> {
    if let Some(((k, l), _)) = raw.iter().find(|((k, l), _)| k + l > degree) {
        return Err(Error::Domain(format!("v_({k},{l}) exceeds degree L = {degree}")));
    }
    let sp = coord.shift_params_in::<R>()?;
    let two_r = R::from_i64(2) + sp.r11.clone();
    let mut work = raw.clone();
    loop {
        let Some((&(k, l), _)) = work.iter().rev().find(|((_, l), v)| *l >= 2 && !v.is_zero()) else {
            break;
        };
        let c = work.remove(&(k, l)).expect("present");
        // s^2 = (2 + r11) η s - η^2 + rm12 (η + s) - prod
        let terms = [
            ((k + 1, l - 1), two_r.clone()),
            ((k + 2, l - 2), -R::one()),
            ((k + 1, l - 2), sp.rm12.clone()),
            ((k, l - 1), sp.rm12.clone()),
            ((k, l - 2), -sp.prod.clone()),
        ];
        for (key, f) in terms {
            let e = work.entry(key).or_insert_with(R::zero);
            *e = e.clone() + c.clone() * f;
        }
        work.retain(|&(_, l), v| l < 2 || !v.is_zero());
    }
    let map = work.into_iter().filter(|((_, l), _)| *l < 2).collect();
    PotentialSpec::from_map(degree, &map)
}

/// Least-squares recovery of a degree-`L` potential from samples of `V₊` and `V₋`.
pub fn fit_potential(
    plus: &[(Complex64, Complex64)],
    minus: &[(Complex64, Complex64)],
    coord: &SinusoidalCoordinate,
    degree: usize,
) -> Result<PotentialSpec<f64>> {
    let unknowns = 2 * degree + 1;
    if plus.len() + minus.len() < unknowns {
        return Err(Error::Underdetermined {
            rank: plus.len() + minus.len(),
            unknowns,
        });
    }
    let mut rows: Vec<(Vec<Complex64>, Complex64)> = Vec::new();
    for (samples, sign) in [(plus, Sign::Plus), (minus, Sign::Minus)] {
        for &(x, v) in samples {
            let k = sign.step();
            let eta: Complex64 = coord.eta(&x)?;
            let s: Complex64 = coord.eta_shifted(&x, k)?;
            let so: Complex64 = coord.eta_shifted(&x, -k)?;
            let den = (s - eta) * (s - so);
            check_denominator(&den, &[&eta, &s, &so], &x)?;
            let mut row = Vec::with_capacity(unknowns);
            for k in 0..=degree {
                row.push(eta.powu(k as u32));
            }
            for k in 0..degree {
                row.push(eta.powu(k as u32) * s);
            }
            rows.push((row, v * den));
        }
    }
    let complex = rows.iter().any(|(r, b)| b.im != 0.0 || r.iter().any(|z| z.im != 0.0));
    let m = if complex { 2 * rows.len() } else { rows.len() };
    let mut a = DMatrix::<f64>::zeros(m, unknowns);
    let mut b = DVector::<f64>::zeros(m);
    for (i, (row, rhs)) in rows.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            a[(i, j)] = z.re;
            if complex {
                a[(rows.len() + i, j)] = z.im;
            }
        }
        b[i] = rhs.re;
        if complex {
            b[rows.len() + i] = rhs.im;
        }
    }
    let norms: Vec<f64> = (0..unknowns).map(|j| a.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    for (j, n) in norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / n);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax;
    let rank = svd.rank(tol);
    if rank < unknowns {
        return Err(Error::Underdetermined { rank, unknowns });
    }
    let y = svd
        .solve(&b, tol)
        .map_err(|e| Error::Numerical(format!("least squares: {e}")))?;
    let residual = (&a * &y - &b).norm() / b.norm().max(f64::MIN_POSITIVE);
    if b.norm() > 0.0 && residual > 1e-8 {
        return Err(Error::NotRepresentable { degree, residual });
    }
    let v: Vec<f64> = (0..unknowns).map(|j| y[j] / norms[j]).collect();
    PotentialSpec::new(degree, v[..=degree].to_vec(), v[degree + 1..].to_vec())
}
