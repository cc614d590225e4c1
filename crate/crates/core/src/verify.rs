//! Pointwise verification of the identities satisfied by exactly solvable
//! potentials: coordinate axioms, closure and dual closure relations, the
//! Askey-Wilson Casimir, ladder operators, shape invariance and the Crum step.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basicnum::arg;
use crate::error::{Error, Result};
use crate::opexpr::{Gen, OpExpr};
use crate::poly::PolyEta;
use crate::polyop::HtOperator;
use crate::potential::{PotentialSpec, Sign};
use crate::scalar::{Field, RealField};
use crate::sinusoid::{Kind, SinusoidalCoordinate};

/// Surviving sample points required for a pointwise check to count.
pub const MIN_SAMPLES: usize = 10;
pub const AXIOM_TOL: f64 = 1e-10;
pub const CLOSURE_TOL: f64 = 1e-9;
pub const CASIMIR_TOL: f64 = 1e-8;
pub const SHAPE_TOL: f64 = 1e-8;
pub const LADDER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub status: Status,
    pub max_residual: f64,
    pub tolerance: f64,
    pub samples_used: usize,
    pub skipped: usize,
    /// Largest residual per component equation.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub residuals: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

struct Tally {
    check: String,
    tol: f64,
    residuals: BTreeMap<String, f64>,
    used: usize,
    skipped: usize,
    notes: Vec<String>,
}

impl Tally {
    fn new(check: &str, tol: f64) -> Self {
        Self {
            check: check.to_string(),
            tol,
            residuals: BTreeMap::new(),
            used: 0,
            skipped: 0,
            notes: Vec::new(),
        }
    }

    fn record(&mut self, name: &str, r: f64) {
        let r = if r.is_nan() { f64::INFINITY } else { r };
        let e = self.residuals.entry(name.to_string()).or_insert(0.0);
        *e = e.max(r);
    }

    fn note(&mut self, s: String) {
        if self.notes.len() < 20 {
            self.notes.push(s);
        }
    }

    /// Runs `f` at every sample, skipping singular points.
    fn over_samples<C: Field>(
        &mut self,
        samples: &[Complex64],
        mut f: impl FnMut(&C) -> Result<Vec<(&'static str, f64)>>,
    ) -> Result<()> {
        for z in samples {
            let Some(x) = C::from_c64(*z) else {
                self.skipped += 1;
                self.note(format!("x = {z} is not representable in this backend"));
                continue;
            };
            match f(&x) {
                Ok(rs) => {
                    for (name, r) in rs {
                        self.record(name, r);
                    }
                    self.used += 1;
                }
                Err(e @ Error::SingularPoint { .. }) => {
                    self.skipped += 1;
                    self.note(format!("skipped: {e}"));
                }
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    fn finish(self, min_samples: usize) -> CheckReport {
        let max = self.residuals.values().copied().fold(0.0, f64::max);
        let mut notes = self.notes;
        let enough = self.used >= min_samples;
        if !enough {
            notes.push(format!("only {} usable samples (need {min_samples})", self.used));
        }
        CheckReport {
            check: self.check,
            status: if enough && max <= self.tol { Status::Pass } else { Status::Fail },
            max_residual: max,
            tolerance: self.tol,
            samples_used: self.used,
            skipped: self.skipped,
            residuals: self.residuals,
            notes,
        }
    }
}

/// `|lhs - rhs|` relative to the sum of the magnitudes of the terms involved.
fn rel<C: Field>(lhs: &C, rhs: &C, terms: &[&C]) -> f64 {
    let d = lhs.clone() - rhs.clone();
    if d.is_zero() {
        return 0.0;
    }
    let scale = terms.iter().map(|t| t.magnitude()).sum::<f64>();
    d.magnitude() / scale.max(f64::MIN_POSITIVE)
}

/// `(value, scale)` from an [`OpExpr`] evaluation, as a relative residual.
fn rel_expr<C: Field>(v: &(C, f64)) -> f64 {
    if v.0.is_zero() {
        0.0
    } else {
        v.0.magnitude() / v.1.max(f64::MIN_POSITIVE)
    }
}

fn require_l2<R: RealField>(spec: &PotentialSpec<R>) -> Result<()> {
    if spec.degree() != 2 {
        return Err(Error::Unsupported(format!(
            "this identity needs the exactly solvable degree L = 2 (got L = {})",
            spec.degree()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// coordinate axioms

/// Addition, multiplication and (for continuous kinds) half-shift relations.
pub fn verify_axioms<R: RealField>(coord: &SinusoidalCoordinate, samples: &[Complex64]) -> Result<Vec<CheckReport>> {
    let sp = coord.shift_params_in::<R>()?;
    let two_r: R::Complex = (R::from_i64(2) + sp.r11.clone()).lift();
    let rm12: R::Complex = sp.rm12.lift();
    let e_mib: R::Complex = coord.eta_shift_const(1.0)?;
    let e_pib: R::Complex = coord.eta_shift_const(-1.0)?;

    let mut add = Tally::new("addition", AXIOM_TOL);
    add.over_samples::<R::Complex>(samples, |x| {
        let (e, em, ep) = (coord.eta(x)?, coord.eta_shifted(x, 1.0)?, coord.eta_shifted(x, -1.0)?);
        let lhs = em.clone() + ep.clone();
        let rhs = two_r.clone() * e.clone() + rm12.clone();
        Ok(vec![("addition", rel(&lhs, &rhs, &[&em, &ep, &rhs]))])
    })?;
    let mut mul = Tally::new("multiplication", AXIOM_TOL);
    mul.over_samples::<R::Complex>(samples, |x| {
        let (e, em, ep) = (coord.eta(x)?, coord.eta_shifted(x, 1.0)?, coord.eta_shifted(x, -1.0)?);
        let lhs = em * ep;
        let rhs = (e.clone() - e_mib.clone()) * (e - e_pib.clone());
        Ok(vec![("multiplication", rel(&lhs, &rhs, &[&lhs, &rhs]))])
    })?;
    let mut out = vec![add.finish(MIN_SAMPLES), mul.finish(MIN_SAMPLES)];
    if coord.kind().is_continuous() {
        out.push(verify_half_shift::<R>(coord, samples)?);
    }
    Ok(out)
}

/// `η(x) = [1/2](η(x - iγ/2) + η(x + iγ/2) - η(-iγ/2) - η(iγ/2))`.
pub fn verify_half_shift<R: RealField>(coord: &SinusoidalCoordinate, samples: &[Complex64]) -> Result<CheckReport> {
    let half: R::Complex = coord.bracket_context().bracket_in::<R>(arg(1, 2))?.lift();
    let c: R::Complex = coord.eta_shift_const::<R::Complex>(0.5)? + coord.eta_shift_const::<R::Complex>(-0.5)?;
    let mut t = Tally::new("half_shift", AXIOM_TOL);
    t.over_samples::<R::Complex>(samples, |x| {
        let e = coord.eta(x)?;
        let (a, b) = (coord.eta_shifted(x, 0.5)?, coord.eta_shifted(x, -0.5)?);
        let rhs = half.clone() * (a.clone() + b.clone() - c.clone());
        Ok(vec![("half_shift", rel(&e, &rhs, &[&e, &a, &b, &c]))])
    })?;
    Ok(t.finish(MIN_SAMPLES))
}

// ---------------------------------------------------------------------------
// closure relation

/// Coefficients of `R_1(z) = r1[0] z + r1[1]`, `R_0(z) = r0[0] z^2 + r0[1] z + r0[2]`
/// and `R_{-1}(z) = rm1[0] z^2 + rm1[1] z + rm1[2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureCoeffs<R> {
    pub r1: [R; 2],
    pub r0: [R; 3],
    pub rm1: [R; 3],
}

impl<R: RealField> ClosureCoeffs<R> {
    pub fn r1_at(&self, z: &R) -> R {
        self.r1[0].clone() * z.clone() + self.r1[1].clone()
    }

    pub fn r0_at(&self, z: &R) -> R {
        (self.r0[0].clone() * z.clone() + self.r0[1].clone()) * z.clone() + self.r0[2].clone()
    }

    pub fn rm1_at(&self, z: &R) -> R {
        (self.rm1[0].clone() * z.clone() + self.rm1[1].clone()) * z.clone() + self.rm1[2].clone()
    }

    pub fn to_f64(&self) -> ClosureCoeffs<f64> {
        ClosureCoeffs {
            r1: self.r1.clone().map(|v| v.to_f64()),
            r0: self.r0.clone().map(|v| v.to_f64()),
            rm1: self.rm1.clone().map(|v| v.to_f64()),
        }
    }

    /// Named coefficients for reports.
    pub fn named(&self) -> BTreeMap<&'static str, f64> {
        let f = self.to_f64();
        BTreeMap::from([
            ("r1_1", f.r1[0]),
            ("r1_0", f.r1[1]),
            ("r0_2", f.r0[0]),
            ("r0_1", f.r0[1]),
            ("r0_0", f.r0[2]),
            ("rm1_2", f.rm1[0]),
            ("rm1_1", f.rm1[1]),
            ("rm1_0", f.rm1[2]),
        ])
    }
}

pub fn closure_coeffs<R: RealField>(spec: &PotentialSpec<R>, coord: &SinusoidalCoordinate) -> Result<ClosureCoeffs<R>> {
    require_l2(spec)?;
    let sp = coord.shift_params_in::<R>()?;
    let eps = R::from_i64(coord.epsilon() as i64);
    let eps2 = eps.clone() * eps.clone();
    let v = |k, l| spec.get(k, l);
    let r10 = eps.clone() * (v(2, 0) + v(1, 1));
    Ok(ClosureCoeffs {
        r1: [sp.r11.clone(), r10.clone()],
        r0: [sp.r11, R::from_i64(2) * r10, -(eps2.clone() * v(2, 0) * v(1, 1))],
        rm1: [sp.rm12, eps * (v(1, 0) + v(0, 1)), -(eps2 * v(2, 0) * v(0, 1))],
    })
}

/// `[H,[H,η]] - η R_0(H) - [H,η] R_1(H) - R_{-1}(H)` as a word expression.
pub fn closure_expr<R: RealField, C: Field>(c: &ClosureCoeffs<R>) -> OpExpr<C> {
    use Gen::{Eta as E, H};
    let l = |r: &R| r.lift::<C>();
    let one = C::one();
    let two = C::from_i64(2);
    OpExpr::new()
        .term(one.clone(), &[H, H, E])
        .term(-two, &[H, E, H])
        .term(one, &[E, H, H])
        .term(-l(&c.r0[0]), &[E, H, H])
        .term(-l(&c.r0[1]), &[E, H])
        .term(-l(&c.r0[2]), &[E])
        .term(-l(&c.r1[0]), &[H, E, H])
        .term(l(&c.r1[0]), &[E, H, H])
        .term(-l(&c.r1[1]), &[H, E])
        .term(l(&c.r1[1]), &[E, H])
        .term(-l(&c.rm1[0]), &[H, H])
        .term(-l(&c.rm1[1]), &[H])
        .term(-l(&c.rm1[2]), &[])
}

/// The five component equations and the operator form on `η^n`, `n <= 4`.
pub fn verify_closure<R: RealField>(
    spec: &PotentialSpec<R>,
    coord: &SinusoidalCoordinate,
    samples: &[Complex64],
) -> Result<CheckReport> {
    let c = closure_coeffs(spec, coord)?;
    verify_closure_with(spec, coord, &c, samples)
}

/// Same as [`verify_closure`] with externally supplied coefficients.
pub fn verify_closure_with<R: RealField>(
    spec: &PotentialSpec<R>,
    coord: &SinusoidalCoordinate,
    c: &ClosureCoeffs<R>,
    samples: &[Complex64],
) -> Result<CheckReport> {
    require_l2(spec)?;
    let op = HtOperator::new(spec, coord)?;
    let l = |r: &R| r.lift::<R::Complex>();
    let (r11, r10) = (l(&c.r1[0]), l(&c.r1[1]));
    let (r02, r01, r00) = (l(&c.r0[0]), l(&c.r0[1]), l(&c.r0[2]));
    let (rm12, rm11, rm10) = (l(&c.rm1[0]), l(&c.rm1[1]), l(&c.rm1[2]));
    let eps_inv = R::Complex::one() / R::Complex::from_i64(coord.epsilon() as i64);
    let expr: OpExpr<R::Complex> = closure_expr(c);
    let two = R::Complex::from_i64(2);

    let mut t = Tally::new("closure", CLOSURE_TOL);
    t.over_samples::<R::Complex>(samples, |x| {
        let eta = |k: f64| coord.eta_shifted(x, k);
        let (e0, em, ep, emm, epp) = (eta(0.0)?, eta(1.0)?, eta(-1.0)?, eta(2.0)?, eta(-2.0)?);
        let at = |k: f64| -> Result<(R::Complex, R::Complex)> { spec.v_pair(coord, &coord.shift_point(x, k)?) };
        let (vp0, vm0) = at(0.0)?;
        let (vpm, vmm) = at(1.0)?;
        let (vpp, vmp) = at(-1.0)?;
        let s0 = vp0.clone() + vm0.clone();
        let base = r02.clone() * e0.clone() + rm12.clone();
        let mut out = Vec::new();

        for (name, e1, e2) in [("eq1", &em, &emm), ("eq1p", &ep, &epp)] {
            let lhs = e2.clone() - two.clone() * e1.clone() + e0.clone();
            let rhs = base.clone() + r11.clone() * (e1.clone() - e0.clone());
            out.push((name, rel(&lhs, &rhs, &[e2, e1, &e0, &base, &rhs])));
        }

        for (name, e1, s1) in [
            ("eq2", &em, vpm.clone() + vmm.clone()),
            ("eq2p", &ep, vpp.clone() + vmp.clone()),
        ] {
            let d = e1.clone() - e0.clone();
            let lhs = d.clone() * (s1.clone() - s0.clone());
            let t1 = -(base.clone() * (s1.clone() + s0.clone()));
            let t2 = -(r11.clone() * d.clone() * s1.clone());
            let t3 = eps_inv.clone() * (r01.clone() * e0.clone() + rm11.clone() + r10.clone() * d);
            let rhs = t1.clone() + t2.clone() + t3.clone();
            out.push((name, rel(&lhs, &rhs, &[&lhs, &t1, &t2, &t3])));
        }

        let pm = vp0.clone() * vmm.clone();
        let mp = vm0.clone() * vpp.clone();
        let lhs = two.clone() * (e0.clone() - em.clone()) * pm.clone() + two.clone() * (e0.clone() - ep.clone()) * mp.clone();
        let t1 = base.clone() * (pm.clone() + mp.clone() + s0.clone() * s0.clone());
        let t2 = r11.clone() * (em.clone() - e0.clone()) * pm;
        let t3 = r11.clone() * (ep.clone() - e0.clone()) * mp;
        let t4 = -(eps_inv.clone() * (r01.clone() * e0.clone() + rm11.clone()) * s0);
        let t5 = eps_inv.clone() * eps_inv.clone() * (r00.clone() * e0.clone() + rm10.clone());
        let rhs = t1.clone() + t2.clone() + t3.clone() + t4.clone() + t5.clone();
        out.push(("eq3", rel(&lhs, &rhs, &[&lhs, &t1, &t2, &t3, &t4, &t5])));

        let mut worst: f64 = 0.0;
        for n in 0..=4 {
            worst = worst.max(rel_expr(&expr.eval(&op, &PolyEta::monomial(n), x)?));
        }
        out.push(("operator_form", worst));
        Ok(out)
    })?;
    Ok(t.finish(MIN_SAMPLES))
}

/// Sign `s` with `α± = (R_1 ± s sqrt(R_1^2 + 4 R_0))/2`: `+1` for an
/// increasing spectrum and `-1` for a decreasing one.
fn alpha_sign<R: RealField>(op: &HtOperator<R>) -> Result<f64> {
    let e1 = op.energy(1)?.to_f64();
    Ok(if e1 < 0.0 { -1.0 } else { 1.0 })
}

/// Number of leading steps `E(n) -> E(n+1)` that move in the direction `sign`.
/// Past that point (trigonometric brackets) the two roots swap roles.
fn monotone_steps(e: &[f64], sign: f64) -> usize {
    e.windows(2).take_while(|w| (w[1] - w[0]) * sign > 0.0).count()
}

/// `(α₊(z), α₋(z))`.
pub fn alpha_pm(c: &ClosureCoeffs<f64>, z: f64, sign: f64) -> Result<(f64, f64)> {
    let r1 = c.r1_at(&z);
    let disc = r1 * r1 + 4.0 * c.r0_at(&z);
    if disc < 0.0 {
        return Err(Error::Domain(format!("alpha is complex at E = {z} (R1^2 + 4 R0 = {disc})")));
    }
    let s = sign * disc.sqrt();
    Ok(((r1 + s) / 2.0, (r1 - s) / 2.0))
}

/// `E(n+1) - E(n) = α₊(E(n))` and `E(n-1) - E(n) = α₋(E(n))` for `n <= n_max`.
pub fn verify_alpha<R: RealField>(spec: &PotentialSpec<R>, coord: &SinusoidalCoordinate, n_max: usize) -> Result<CheckReport> {
    let c = closure_coeffs(spec, coord)?.to_f64();
    let op = HtOperator::new(&spec.to_f64(), coord)?;
    let sign = alpha_sign(&op)?;
    let e: Vec<f64> = (0..=n_max + 1).map(|n| op.energy(n)).collect::<Result<_>>()?;
    let mut t = Tally::new("alpha", CLOSURE_TOL);
    let steps = monotone_steps(&e, sign);
    if steps <= n_max {
        t.note(format!("spectrum turns after n = {steps}; checked n < {steps}"));
    }
    for n in 0..steps.min(n_max + 1) {
        let (ap, am) = match alpha_pm(&c, e[n], sign) {
            Ok(v) => v,
            Err(err) => {
                t.record("alpha_plus", f64::INFINITY);
                t.note(format!("n = {n}: {err}"));
                continue;
            }
        };
        let scale = e[n].abs().max(e[n + 1].abs()).max(1.0);
        t.record("alpha_plus", (e[n + 1] - e[n] - ap).abs() / scale);
        if n > 0 {
            t.record("alpha_minus", (e[n - 1] - e[n] - am).abs() / scale);
        }
        t.used += 1;
    }
    Ok(t.finish(0))
}

// ---------------------------------------------------------------------------
// dual closure relation

#[derive(Debug, Clone, PartialEq)]
pub struct DualClosureCoeffs<R> {
    pub r1: PolyEta<R>,
    pub r0: PolyEta<R>,
    pub rm1: PolyEta<R>,
}

pub fn dual_closure_coeffs<R: RealField>(spec: &PotentialSpec<R>, coord: &SinusoidalCoordinate) -> Result<DualClosureCoeffs<R>> {
    let sp = coord.shift_params_in::<R>()?;
    let eps = R::from_i64(coord.epsilon() as i64);
    let l = spec.degree();
    let mut rm1 = vec![spec.get(0, 0)];
    for k in 1..=l {
        rm1.push(spec.get(k, 0) + spec.get(k - 1, 1));
    }
    Ok(DualClosureCoeffs {
        r1: PolyEta::from_coeffs(vec![sp.rm12.clone(), sp.r11.clone()]),
        r0: PolyEta::from_coeffs(vec![-sp.prod, R::from_i64(2) * sp.rm12, sp.r11]),
        rm1: PolyEta::from_coeffs(rm1).scale(&eps),
    })
}

/// `[η,[η,H]] - H R0d(η) - [η,H] R1d(η) - Rm1d(η)`.
pub fn dual_closure_expr<R: RealField, C: Field>(c: &DualClosureCoeffs<R>) -> OpExpr<C> {
    use Gen::{Eta as E, H};
    let pow = |k: usize| vec![E; k];
    let mut e = OpExpr::new()
        .term(C::one(), &[E, E, H])
        .term(-C::from_i64(2), &[E, H, E])
        .term(C::one(), &[H, E, E]);
    for (k, a) in c.r0.coeffs().iter().enumerate() {
        let mut w = vec![H];
        w.extend(pow(k));
        e.push(-a.lift::<C>(), &w);
    }
    for (k, a) in c.r1.coeffs().iter().enumerate() {
        let mut w = vec![E, H];
        w.extend(pow(k));
        e.push(-a.lift::<C>(), &w);
        let mut w = vec![H];
        w.extend(pow(k + 1));
        e.push(a.lift::<C>(), &w);
    }
    for (k, a) in c.rm1.coeffs().iter().enumerate() {
        e.push(-a.lift::<C>(), &pow(k));
    }
    e
}

/// Three component equations and the operator form on `η^n`, `n <= 4`, any `L`.
pub fn verify_dual_closure<R: RealField>(
    spec: &PotentialSpec<R>,
    coord: &SinusoidalCoordinate,
    samples: &[Complex64],
) -> Result<CheckReport> {
    let c = dual_closure_coeffs(spec, coord)?;
    verify_dual_closure_with(spec, coord, &c, samples)
}

pub fn verify_dual_closure_with<R: RealField>(
    spec: &PotentialSpec<R>,
    coord: &SinusoidalCoordinate,
    c: &DualClosureCoeffs<R>,
    samples: &[Complex64],
) -> Result<CheckReport> {
    let op = HtOperator::new(spec, coord)?;
    let eps: R::Complex = R::from_i64(coord.epsilon() as i64).lift();
    let expr: OpExpr<R::Complex> = dual_closure_expr(c);
    let mut t = Tally::new("dual", CLOSURE_TOL);
    t.over_samples::<R::Complex>(samples, |x| {
        let e0 = coord.eta(x)?;
        let mut out = Vec::new();
        for (name, k) in [("dual_eq1", 1.0), ("dual_eq1p", -1.0)] {
            let es = coord.eta_shifted(x, k)?;
            let d = e0.clone() - es.clone();
            let lhs = d.clone() * d.clone();
            let a = c.r0.eval_in(&es);
            let b = d * c.r1.eval_in(&es);
            let rhs = a.clone() + b.clone();
            out.push((name, rel(&lhs, &rhs, &[&lhs, &a, &b])));
        }
        let (vp, vm) = spec.v_pair(coord, x)?;
        let lhs = c.rm1.eval_in(&e0);
        let rhs = eps.clone() * (vp + vm) * c.r0.eval_in(&e0);
        out.push(("dual_eq2", rel(&lhs, &rhs, &[&lhs, &rhs])));
        let mut worst: f64 = 0.0;
        for n in 0..=4 {
            worst = worst.max(rel_expr(&expr.eval(&op, &PolyEta::monomial(n), x)?));
        }
        out.push(("dual_operator_form", worst));
        Ok(out)
    })?;
    Ok(t.finish(MIN_SAMPLES))
}

// ---------------------------------------------------------------------------
// Askey-Wilson Casimir

/// `Q = ε^2 (v11 v00 - v10 v01 - r_{-1}^{(2)} v20 v01)`.
pub fn aw_casimir<R: RealField>(spec: &PotentialSpec<R>, coord: &SinusoidalCoordinate) -> Result<R> {
    require_l2(spec)?;
    let sp = coord.shift_params_in::<R>()?;
    let eps = R::from_i64(coord.epsilon() as i64);
    let v = |k, l| spec.get(k, l);
    Ok(eps.clone() * eps * (v(1, 1) * v(0, 0) - v(1, 0) * v(0, 1) - sp.rm12 * v(2, 0) * v(0, 1)))
}

/// The Casimir word combination with `K1 = H`, `K2 = η`.
pub fn casimir_expr<R: RealField, C: Field>(spec: &PotentialSpec<R>, coord: &SinusoidalCoordinate) -> Result<OpExpr<C>> {
    use Gen::{Eta as K2, H as K1};
    let c = closure_coeffs(spec, coord)?;
    let sp = coord.shift_params_in::<R>()?;
    let eps = R::from_i64(coord.epsilon() as i64);
    let l = |r: R| r.lift::<C>();
    let rho = l(-sp.r11.clone() / R::from_i64(2));
    let a2 = l(-c.r1[1].clone());
    let a1 = l(-c.rm1[0].clone());
    let c2 = l(-c.r0[2].clone());
    let c1 = l(sp.prod.clone());
    let d = l(-c.rm1[1].clone());
    let g2 = l(-c.rm1[2].clone());
    let g1 = l(-(eps * spec.get(0, 0)));
    let one = C::one();
    let two = C::from_i64(2);
    let om = one.clone() - rho.clone();
    let tm = two - rho;
    Ok(OpExpr::new()
        .term(one.clone(), &[K1, K2, K1, K2])
        .term(one, &[K2, K1, K2, K1])
        .term(-om.clone(), &[K1, K2, K2, K1])
        .term(-om.clone(), &[K2, K1, K1, K2])
        .term(tm.clone() * a1.clone(), &[K1, K2, K1])
        .term(tm.clone() * a2.clone(), &[K2, K1, K2])
        .term(om.clone() * c1.clone(), &[K1, K1])
        .term(om * c2.clone(), &[K2, K2])
        .term(d.clone() - a1.clone() * a2.clone(), &[K1, K2])
        .term(d - a1.clone() * a2.clone(), &[K2, K1])
        .term(tm.clone() * g1 - a2 * c1, &[K1])
        .term(tm * g2 - a1 * c2, &[K2]))
}

/// `(Q f)(x) = Q f(x)` for `f = η^n`, `n <= 3`.
pub fn verify_casimir<R: RealField>(
    spec: &PotentialSpec<R>,
    coord: &SinusoidalCoordinate,
    samples: &[Complex64],
) -> Result<CheckReport> {
    let q: R::Complex = aw_casimir(spec, coord)?.lift();
    let op = HtOperator::new(spec, coord)?;
    let expr: OpExpr<R::Complex> = casimir_expr(spec, coord)?;
    let mut t = Tally::new("casimir", CASIMIR_TOL);
    t.over_samples::<R::Complex>(samples, |x| {
        let e = coord.eta(x)?;
        let mut worst: f64 = 0.0;
        for n in 0..=3u32 {
            let (v, scale) = expr.eval(&op, &PolyEta::monomial(n as usize), x)?;
            let want = q.clone() * e.powi(n);
            let d = v - want.clone();
            let r = if d.is_zero() { 0.0 } else { d.magnitude() / (scale + want.magnitude()).max(f64::MIN_POSITIVE) };
            worst = worst.max(r);
        }
        Ok(vec![("casimir", worst)])
    })?;
    Ok(t.finish(MIN_SAMPLES))
}

// ---------------------------------------------------------------------------
// ladder operators

#[derive(Debug, Clone)]
pub struct Ladder {
    pub a_plus: DMatrix<f64>,
    pub a_minus: DMatrix<f64>,
    /// Entrywise magnitudes of the two parts of each operator, for residual scales.
    pub a_plus_mag: DMatrix<f64>,
    pub a_minus_mag: DMatrix<f64>,
    /// Columns are the monic eigenpolynomials `P_0..P_K`.
    pub basis: DMatrix<f64>,
    pub energies: Vec<f64>,
}

/// `a^(±)` on `Span[1..η^K]` in the monomial basis.
pub fn ladder_matrices<R: RealField>(spec: &PotentialSpec<R>, coord: &SinusoidalCoordinate, k: usize) -> Result<Ladder> {
    let spec = spec.to_f64();
    let c = closure_coeffs(&spec, coord)?;
    let op = HtOperator::new(&spec, coord)?;
    let sign = alpha_sign(&op)?;
    let dim = k + 1;
    let h = op.ht_matrix(k)?.entries.to_dmatrix();
    let energies: Vec<f64> = (0..dim).map(|n| op.energy(n)).collect::<Result<_>>()?;
    let mut s = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        let p = op.eigenpoly(n)?;
        for (i, a) in p.coeffs().iter().enumerate() {
            s[(i, n)] = *a;
        }
    }
    let s_inv = crate::dense::Matrix::from_fn(dim, dim, |i, j| s[(i, j)]).upper_inverse()?.to_dmatrix();
    let func = |f: &dyn Fn(f64) -> Result<f64>| -> Result<DMatrix<f64>> {
        let d: Vec<f64> = energies.iter().map(|&e| f(e)).collect::<Result<_>>()?;
        Ok(&s * DMatrix::from_diagonal(&DVector::from_vec(d)) * &s_inv)
    };
    let ratio = func(&|e| {
        let r0 = c.r0_at(&e);
        if r0 == 0.0 {
            return Err(Error::Domain(format!("R0(E) = 0 at E = {e}")));
        }
        Ok(c.rm1_at(&e) / r0)
    })?;
    let ap = func(&|e| alpha_pm(&c, e, sign).map(|a| a.0))?;
    let am = func(&|e| alpha_pm(&c, e, sign).map(|a| a.1))?;
    let inv_gap = func(&|e| {
        let (p, m) = alpha_pm(&c, e, sign)?;
        Ok(1.0 / (p - m))
    })?;
    let mut t = DMatrix::zeros(dim, dim);
    for i in 0..k {
        t[(i + 1, i)] = 1.0;
    }
    let comm = &h * &t - &t * &h;
    let shifted = &t + &ratio;
    let cg = &comm * &inv_gap;
    let (sm, sp) = (&shifted * &am * &inv_gap, &shifted * &ap * &inv_gap);
    Ok(Ladder {
        a_plus: &cg - &sm,
        a_minus: &sp - &cg,
        a_plus_mag: cg.abs() + sm.abs(),
        a_minus_mag: cg.abs() + sp.abs(),
        basis: s,
        energies,
    })
}

/// `a⁺P_n ∝ P_{n+1}` and `a⁻P_n ∝ P_{n-1}` (`a⁻P_0 = 0`) for `n <= K - 3`.
pub fn verify_ladder<R: RealField>(spec: &PotentialSpec<R>, coord: &SinusoidalCoordinate, k: usize) -> Result<CheckReport> {
    let lad = ladder_matrices(spec, coord, k)?;
    let mut t = Tally::new("ladder", LADDER_TOL);
    let sign = if lad.energies.len() > 1 && lad.energies[1] < lad.energies[0] { -1.0 } else { 1.0 };
    let steps = monotone_steps(&lad.energies, sign);
    let top = k.saturating_sub(3);
    if steps <= top {
        t.note(format!("spectrum turns after n = {steps}; checked n < {steps}"));
    }
    for n in 0..steps.min(top + 1) {
        let p = lad.basis.column(n).into_owned();
        let scale = |m: &DMatrix<f64>| (m * p.abs()).norm().max(f64::MIN_POSITIVE);
        let up = &lad.a_plus * &p;
        let next = lad.basis.column(n + 1);
        let res_up = &up - next * up[n + 1];
        t.record("a_plus", res_up.norm() / scale(&lad.a_plus_mag));
        if up[n + 1].abs() < 1e-12 * scale(&lad.a_plus_mag) {
            t.record("a_plus_nonzero", f64::INFINITY);
            t.note(format!("a+ P_{n} vanishes"));
        }
        let down = &lad.a_minus * &p;
        let res_down = if n == 0 {
            down.clone()
        } else {
            &down - lad.basis.column(n - 1) * down[n - 1]
        };
        t.record("a_minus", res_down.norm() / scale(&lad.a_minus_mag));
        t.used += 1;
    }
    Ok(t.finish(0))
}

// ---------------------------------------------------------------------------
// shape invariance

/// One step `λ -> λ'` of the shape-invariance map.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeStep<R> {
    pub spec: PotentialSpec<R>,
    pub coord: SinusoidalCoordinate,
    /// `E(1; λ)`.
    pub e1: R,
    pub kappa: R,
}

pub fn shape_step<R: RealField>(spec: &PotentialSpec<R>, coord: &SinusoidalCoordinate, kappa: &R) -> Result<ShapeStep<R>> {
    if coord.is_discrete() {
        shape_step_discrete(spec, coord, kappa)
    } else {
        shape_step_continuous(spec, coord, kappa)
    }
}

pub fn shape_step_continuous<R: RealField>(
    spec: &PotentialSpec<R>,
    coord: &SinusoidalCoordinate,
    kappa: &R,
) -> Result<ShapeStep<R>> {
    require_l2(spec)?;
    if coord.is_discrete() {
        return Err(Error::Precondition(format!("{} is a real-shift coordinate", coord.kind())));
    }
    if coord.is_nonstandard() {
        return Err(Error::Precondition(format!(
            "{} does not satisfy the half-shift relation",
            coord.kind()
        )));
    }
    let ctx = coord.bracket_context();
    let b = |n: i64, d: i64| ctx.bracket_in::<R>(arg(n, d));
    let sp = coord.shift_params_in::<R>()?;
    let v = |k, l| spec.get(k, l);
    let (q1, q3, h, h3, two) = (b(1, 4)?, b(3, 4)?, b(1, 2)?, b(3, 2)?, b(2, 1)?);
    let rm = sp.rm12.clone();
    let rm2 = rm.clone() * rm.clone();
    let prod = sp.prod.clone();
    let a = q1.clone() * q1.clone() / h.clone();
    let bb = q1.clone() * q3.clone() / (h.clone() * h.clone());
    let k20 = -v(1, 1);
    let k11 = v(2, 0) + two * v(1, 1);
    let k10 = h.clone() * (v(1, 0) - v(0, 1)) + rm.clone() * (a.clone() * v(2, 0) + v(1, 1));
    let k01 = h.clone() * v(1, 0) + h3.clone() * v(0, 1) + rm.clone() * (a.clone() * v(2, 0) + bb * v(1, 1));
    let h2 = h.clone() * h.clone();
    let k00 = v(0, 0) + rm.clone() * (q1.clone() * q3.clone() / h.clone() * v(0, 1) - a * v(1, 0))
        + h2.clone() * (q1.clone().powi(4) / h2.clone().powi(2) * rm2.clone() - prod.clone()) * v(2, 0)
        - h.clone() * (q1.clone().powi(3) * q3 / h.powi(3) * rm2 + h3 * prod) * v(1, 1);
    let inv = R::one() / kappa.clone();
    let spec2 = PotentialSpec::new(
        2,
        vec![k00 * inv.clone(), k10 * inv.clone(), k20 * inv.clone()],
        vec![k01 * inv.clone(), k11 * inv],
    )?;
    Ok(ShapeStep {
        spec: spec2,
        coord: *coord,
        e1: v(1, 1),
        kappa: kappa.clone(),
    })
}

/// `μ` and `ν` of the real-shift map.
fn mu_nu<R: RealField>(coord: &SinusoidalCoordinate) -> (R, R) {
    let q = coord.q();
    match coord.kind() {
        Kind::D3 => (R::from_f64(q.powf(-0.5)), R::one()),
        Kind::D4 => (R::from_f64(q.sqrt()), R::one()),
        Kind::D5 => {
            let d = coord.d();
            (R::from_f64(q.sqrt()), R::from_f64((1.0 + d * q) / (1.0 + d)))
        }
        _ => (R::one(), R::one()),
    }
}

pub fn shape_step_discrete<R: RealField>(
    spec: &PotentialSpec<R>,
    coord: &SinusoidalCoordinate,
    kappa: &R,
) -> Result<ShapeStep<R>> {
    require_l2(spec)?;
    if !coord.is_discrete() {
        return Err(Error::Precondition(format!("{} is not a real-shift coordinate", coord.kind())));
    }
    let em1: R = coord.eta_shift_const(-1.0)?;
    let e1: R = coord.eta_shift_const(1.0)?;
    let want_v00 = -(spec.get(0, 1) * em1.clone());
    let v00_ok = if R::EXACT {
        want_v00 == spec.get(0, 0)
    } else {
        (want_v00.to_f64() - spec.get(0, 0).to_f64()).abs() <= 1e-12 * spec.max_abs().max(1.0)
    };
    if !v00_ok {
        return Err(Error::Precondition("the boundary condition D(0) = 0 is not applied".into()));
    }
    let ctx = coord.bracket_context();
    let b = |n: i64, d: i64| ctx.bracket_in::<R>(arg(n, d));
    let (mu, nu) = mu_nu::<R>(coord);
    let rm = coord.shift_params_in::<R>()?.rm12;
    let v = |k, l| spec.get(k, l);
    let (h, h3, two) = (b(1, 2)?, b(3, 2)?, b(2, 1)?);
    let k20 = -v(1, 1);
    let k11 = v(2, 0) + two * v(1, 1);
    let k10 = mu.clone() * h.clone() * (v(1, 0) - v(0, 1))
        + mu.clone() * h.clone() * e1.clone() * v(2, 0)
        + nu.clone() * rm.clone() * v(1, 1);
    let k01 = mu.clone() * (h.clone() * v(1, 0) + h3 * v(0, 1))
        + mu.clone() * h.clone() * e1.clone() * v(2, 0)
        + (nu * rm + mu * h * (e1 - em1)) * v(1, 1);
    let n2 = match coord.n_bound() {
        Some(0) => return Err(Error::Domain("no shape step below N = 0".into())),
        Some(n) => Some(n - 1),
        None => None,
    };
    let mut c2 = coord.with_n_bound(n2)?;
    c2 = match coord.kind() {
        Kind::D2 => c2.with_d(coord.d() + 1.0)?,
        Kind::D5 => c2.with_d(coord.d() * coord.q())?,
        _ => c2,
    };
    let inv = R::one() / kappa.clone();
    let k01 = k01 * inv.clone();
    let em1_new: R = c2.eta_shift_const(-1.0)?;
    let spec2 = PotentialSpec::new(
        2,
        vec![-(k01.clone() * em1_new), k10 * inv.clone(), k20 * inv.clone()],
        vec![k01, k11 * inv],
    )?;
    if let Some(n) = n2 {
        let bn = spec2.v_eval(&c2, &R::from_i64(n as i64), Sign::Plus)?;
        let ok = if R::EXACT {
            bn.is_zero()
        } else {
            bn.to_f64().abs() < 1e-10 * spec2.max_abs().max(1.0)
        };
        if !ok {
            return Err(Error::ConstraintViolation(format!("B(N') = {bn} at N' = {n} after the shape step")));
        }
    }
    Ok(ShapeStep {
        spec: spec2,
        coord: c2,
        e1: -v(1, 1),
        kappa: kappa.clone(),
    })
}

/// `(|a| + |b|)^2 + |κ|^2 (|c| + |d|)^2` as a real scale for `ab = κ^2 cd`.
/// One factor vanishes at a boundary, so the products alone are no scale.
fn factor_scale<C: Field>(a: &C, b: &C, c: &C, d: &C, kappa: &C) -> C {
    let l = a.magnitude() + b.magnitude();
    let r = kappa.magnitude() * (c.magnitude() + d.magnitude());
    C::from_f64(l * l + r * r)
}

/// The two functional conditions linking `λ` and `λ'`.
pub fn verify_shape<R: RealField>(
    spec: &PotentialSpec<R>,
    coord: &SinusoidalCoordinate,
    step: &ShapeStep<R>,
    samples: &[Complex64],
) -> Result<CheckReport> {
    let kappa: R::Complex = step.kappa.lift();
    let e1: R::Complex = step.e1.lift();
    let (s2, c2) = (&step.spec, &step.coord);
    let mut t = Tally::new("shape", SHAPE_TOL);
    if coord.is_discrete() {
        t.over_samples::<R::Complex>(samples, |x| {
            let one = R::Complex::one();
            let x1 = x.clone() + one;
            let (b0, _) = spec.v_pair(coord, x)?;
            let (b1, d1) = spec.v_pair(coord, &x1)?;
            let (bp0, dp0) = s2.v_pair(c2, x)?;
            let dp1 = s2.v_eval(c2, &x1, Sign::Minus)?;
            let scale1 = factor_scale(&b1, &d1, &bp0, &dp1, &kappa);
            let lhs1 = b1 * d1.clone();
            let rhs1 = kappa.clone() * kappa.clone() * bp0.clone() * dp1;
            let lhs2 = b0.clone() + d1.clone();
            let rhs2 = kappa.clone() * (bp0.clone() + dp0.clone()) + e1.clone();
            Ok(vec![
                ("shape_product", rel(&lhs1, &rhs1, &[&scale1])),
                ("shape_sum", rel(&lhs2, &rhs2, &[&b0, &d1, &bp0, &dp0, &e1])),
            ])
        })?;
    } else {
        t.over_samples::<R::Complex>(samples, |x| {
            let xm = coord.shift_point(x, 0.5)?;
            let xp = coord.shift_point(x, -0.5)?;
            let xmm = coord.shift_point(x, 1.0)?;
            let (vm_p, vm_m) = spec.v_pair(coord, &xm)?;
            let vp_p = spec.v_eval(coord, &xp, Sign::Plus)?;
            let (w_p, w_m) = s2.v_pair(c2, x)?;
            let w_mm = s2.v_eval(c2, &xmm, Sign::Minus)?;
            let scale1 = factor_scale(&vm_p, &vm_m, &w_p, &w_mm, &kappa);
            let lhs1 = vm_p.clone() * vm_m.clone();
            let rhs1 = kappa.clone() * kappa.clone() * w_p.clone() * w_mm;
            let lhs2 = vp_p.clone() + vm_m.clone();
            let rhs2 = kappa.clone() * (w_p.clone() + w_m.clone()) - e1.clone();
            Ok(vec![
                ("shape_product", rel(&lhs1, &rhs1, &[&scale1])),
                ("shape_sum", rel(&lhs2, &rhs2, &[&vp_p, &vm_m, &w_p, &w_m, &e1])),
            ])
        })?;
    }
    Ok(t.finish(MIN_SAMPLES))
}

/// `V(x + iγ/2; λ') = κ⁻¹ V(x; λ) (η(x - iγ) - η(x)) / (η(x) - η(x + iγ))`.
pub fn verify_crum<R: RealField>(
    spec: &PotentialSpec<R>,
    coord: &SinusoidalCoordinate,
    step: &ShapeStep<R>,
    samples: &[Complex64],
) -> Result<CheckReport> {
    if coord.is_discrete() {
        return Err(Error::Precondition("the Crum check applies to imaginary shifts".into()));
    }
    let kappa: R::Complex = step.kappa.lift();
    let mut t = Tally::new("crum", SHAPE_TOL);
    t.over_samples::<R::Complex>(samples, |x| {
        let lhs = step.spec.v_eval(&step.coord, &coord.shift_point(x, -0.5)?, Sign::Plus)?;
        let e0 = coord.eta(x)?;
        let em = coord.eta_shifted(x, 1.0)?;
        let ep = coord.eta_shifted(x, -1.0)?;
        let den = e0.clone() - ep.clone();
        let tiny = 1e-12 * e0.magnitude().max(ep.magnitude()).max(1.0);
        if den.is_zero() || den.magnitude() <= tiny {
            return Err(Error::SingularPoint { x: x.to_c64() });
        }
        let v = spec.v_eval(coord, x, Sign::Plus)?;
        let rhs = v * (em - e0) / den / kappa.clone();
        Ok(vec![("crum", rel(&lhs, &rhs, &[&lhs, &rhs]))])
    })?;
    Ok(t.finish(MIN_SAMPLES))
}

/// `Σ_{s<n} κ^s E(1; λ^[s])` from repeated shape steps.
pub fn telescoped_energy<R: RealField>(
    spec: &PotentialSpec<R>,
    coord: &SinusoidalCoordinate,
    kappa: &R,
    n: usize,
) -> Result<R> {
    Ok(telescoped_terms(spec, coord, kappa, n)?.into_iter().fold(R::zero(), |a, t| a + t))
}

/// The individual terms `κ^s E(1; λ^[s])`, `s < n`.
pub fn telescoped_terms<R: RealField>(
    spec: &PotentialSpec<R>,
    coord: &SinusoidalCoordinate,
    kappa: &R,
    n: usize,
) -> Result<Vec<R>> {
    let mut out = Vec::with_capacity(n);
    let (mut s, mut c) = (spec.clone(), *coord);
    let mut kp = R::one();
    for _ in 0..n {
        let step = shape_step(&s, &c, kappa)?;
        out.push(kp.clone() * step.e1.clone());
        kp = kp * kappa.clone();
        s = step.spec;
        c = step.coord;
    }
    Ok(out)
}

/// Telescoped spectrum against the closed-form energies for `n <= n_max`.
pub fn verify_telescoping<R: RealField>(
    spec: &PotentialSpec<R>,
    coord: &SinusoidalCoordinate,
    kappa: &R,
    n_max: usize,
) -> Result<CheckReport> {
    let op = HtOperator::new(spec, coord)?;
    let mut t = Tally::new("telescoping", SHAPE_TOL);
    let terms = telescoped_terms(spec, coord, kappa, n_max)?;
    let mut acc = R::zero();
    for n in 0..=n_max {
        let e = op.energy(n)?;
        t.record("telescoping", rel(&acc, &e, &[&e, &R::one()]));
        if n < n_max {
            acc = acc + terms[n].clone();
        }
        t.used += 1;
    }
    Ok(t.finish(0))
}

// ---------------------------------------------------------------------------
// suites

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Axioms,
    Closure,
    Alpha,
    Dual,
    Casimir,
    Ladder,
    Shape,
    Telescoping,
    Crum,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::Axioms,
        Check::Closure,
        Check::Alpha,
        Check::Dual,
        Check::Casimir,
        Check::Ladder,
        Check::Shape,
        Check::Telescoping,
        Check::Crum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Axioms => "axioms",
            Check::Closure => "closure",
            Check::Alpha => "alpha",
            Check::Dual => "dual",
            Check::Casimir => "casimir",
            Check::Ladder => "ladder",
            Check::Shape => "shape",
            Check::Telescoping => "telescoping",
            Check::Crum => "crum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Checks that only make sense for `L = 2`.
    pub fn needs_l2(self) -> bool {
        !matches!(self, Check::Axioms | Check::Dual)
    }
}

/// Runs `checks` in a fixed order. Checks that do not apply to the
/// coordinate (Crum on a real-shift coordinate) produce a note-only PASS.
pub fn run_suite<R: RealField>(
    spec: &PotentialSpec<R>,
    coord: &SinusoidalCoordinate,
    checks: &[Check],
    seed: u64,
) -> Result<Vec<CheckReport>> {
    let samples = coord.sample_points(seed);
    let mut checks = checks.to_vec();
    checks.sort();
    checks.dedup();
    let mut out = Vec::new();
    let kappa = R::one();
    for c in checks {
        match c {
            Check::Axioms => out.extend(verify_axioms::<R>(coord, &samples)?),
            Check::Closure => out.push(verify_closure(spec, coord, &samples)?),
            Check::Alpha => out.push(verify_alpha(spec, coord, 10)?),
            Check::Dual => out.push(verify_dual_closure(spec, coord, &samples)?),
            Check::Casimir => out.push(verify_casimir(spec, coord, &samples)?),
            Check::Ladder => out.push(verify_ladder(spec, coord, 8)?),
            Check::Shape => {
                let step = shape_step(spec, coord, &kappa)?;
                out.push(verify_shape(spec, coord, &step, &samples)?);
            }
            Check::Telescoping => {
                let n = coord.n_bound().map_or(6, |n| (n as usize).min(6));
                out.push(verify_telescoping(spec, coord, &kappa, n)?);
            }
            Check::Crum => {
                if coord.is_discrete() {
                    let mut r = Tally::new("crum", SHAPE_TOL).finish(0);
                    r.notes.push("not applicable to real shifts".into());
                    out.push(r);
                } else {
                    let step = shape_step(spec, coord, &kappa)?;
                    out.push(verify_crum(spec, coord, &step, &samples)?);
                }
            }
        }
    }
    Ok(out)
}
