//! Acceptance criteria AC1-AC9.
//!
//! Prints one PASS/FAIL line per criterion and exits nonzero when any
//! criterion fails. Closed forms (brackets, energies, g coefficients,
//! closure coefficients, the QES compensation constants and the
//! determinant eigenpolynomial) are recomputed here from scratch rather
//! than taken from the library.

use std::f64::consts::PI;
use std::process::ExitCode;

use nalgebra::SymmetricEigen;
use num::Complex;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solvkit::basicnum::BracketContext;
use solvkit::lattice::{build_lattice, groundstate_squared, qes_lattice, sample_admissible, spectrum_check};
use solvkit::poly::PolyEta;
use solvkit::polyop::HtOperator;
use solvkit::potential::PotentialSpec;
use solvkit::qes::{qes_feasible, QesModel, V31Policy};
use solvkit::scalar::{Field, Rational, RealField};
use solvkit::sinusoid::{CoordinateParams, Kind, SinusoidalCoordinate};
use solvkit::verify::{
    aw_casimir, closure_coeffs, dual_closure_coeffs, shape_step, verify_axioms, verify_casimir, verify_closure,
    verify_closure_with, verify_dual_closure, verify_dual_closure_with, verify_shape, verify_telescoping,
};

const SPECS_PER_KIND: usize = 50;
const EIGEN_N_MAX: usize = 6;

#[derive(Default)]
struct Outcome {
    checked: usize,
    worst: f64,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(msg());
        }
    }

    /// Records `value` against `tol` and fails when it is not below it.
    fn below(&mut self, value: f64, tol: f64, what: impl FnOnce() -> String) {
        self.worst = self.worst.max(value);
        self.check(value < tol, || format!("{}: {value:e} >= {tol:e}", what()));
    }

    fn error(&mut self, what: &str, e: impl std::fmt::Display) {
        self.checked += 1;
        self.failures.push(format!("{what}: {e}"));
    }
}

// ---------------------------------------------------------------------------
// oracles

/// `[x]` from `r11` alone.
#[derive(Debug, Clone, Copy)]
enum Bracket {
    Linear,
    Hyperbolic(f64),
    Trig(f64),
}

impl Bracket {
    fn from_r11(r11: f64) -> Self {
        if r11.abs() < 1e-14 {
            Bracket::Linear
        } else if r11 > 0.0 {
            Bracket::Hyperbolic(2.0 * (r11.sqrt() / 2.0).asinh())
        } else {
            Bracket::Trig(2.0 * ((-r11).sqrt() / 2.0).asin())
        }
    }

    fn at(self, x: f64) -> f64 {
        match self {
            Bracket::Linear => x,
            Bracket::Hyperbolic(a) => (a * x).sinh() / a.sinh(),
            Bracket::Trig(a) => (a * x).sin() / a.sin(),
        }
    }

    /// Exact value in backend `R`; only the linear case is exact.
    fn at_in<R: RealField>(self, num: i64, den: i64) -> R {
        match self {
            Bracket::Linear => R::from_ratio(num, den),
            _ => R::from_f64(self.at(num as f64 / den as f64)),
        }
    }
}

fn bracket_of(coord: &SinusoidalCoordinate) -> Bracket {
    Bracket::from_r11(coord.shift_params().r11)
}

fn eps<R: RealField>(coord: &SinusoidalCoordinate) -> R {
    R::from_i64(coord.epsilon() as i64)
}

/// `ε [n/2]/[1/2] (v20 [(n-1)/2] + v11 [(n+1)/2])`, valid for negative `n` too.
fn energy_oracle<R: RealField>(spec: &PotentialSpec<R>, coord: &SinusoidalCoordinate, n: i64) -> R {
    let b = bracket_of(coord);
    eps::<R>(coord) * b.at_in::<R>(n, 2) / b.at_in::<R>(1, 2)
        * (spec.get(2, 0) * b.at_in::<R>(n - 1, 2) + spec.get(1, 1) * b.at_in::<R>(n + 1, 2))
}

fn det<R: RealField>(mut a: Vec<Vec<R>>) -> R {
    let n = a.len();
    let mut acc = R::one();
    for c in 0..n {
        let pivot = (c..n).max_by(|&i, &j| a[i][c].magnitude().total_cmp(&a[j][c].magnitude()));
        let Some(p) = pivot.filter(|&p| !a[p][c].is_zero()) else {
            return R::zero();
        };
        if p != c {
            a.swap(p, c);
            acc = -acc;
        }
        acc = acc * a[c][c].clone();
        for r in c + 1..n {
            let f = a[r][c].clone() / a[c][c].clone();
            for k in c..n {
                let v = a[r][k].clone() - f.clone() * a[c][k].clone();
                a[r][k] = v;
            }
        }
    }
    acc
}

/// Eigenpolynomial from the bordered determinant, expanded along the η row.
fn det_eigenpoly<R: RealField>(op: &HtOperator<R>, n: usize) -> PolyEta<R> {
    let e = |i: usize| op.element(i, i);
    let en = e(n);
    let lower = |i: usize, j: usize| -> R {
        if j == i {
            e(i) - en.clone()
        } else if j > i {
            op.element(i, j)
        } else {
            R::zero()
        }
    };
    let mut coeffs = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let minor: Vec<Vec<R>> = (0..n).map(|i| (0..=n).filter(|&j| j != k).map(|j| lower(i, j)).collect()).collect();
        let sign = if k % 2 == 0 { R::one() } else { -R::one() };
        coeffs.push(sign * det(minor));
    }
    PolyEta::from_coeffs(coeffs)
}

fn rel_err<R: RealField>(a: &R, b: &R) -> f64 {
    if R::EXACT {
        if a == b {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a.to_f64() - b.to_f64()).abs() / a.to_f64().abs().max(b.to_f64().abs()).max(1.0)
    }
}

fn poly_err<R: RealField>(a: &PolyEta<R>, b: &PolyEta<R>) -> f64 {
    let d = a - b;
    if R::EXACT {
        if d.is_zero() {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        d.max_abs_coeff() / a.max_abs_coeff().max(b.max_abs_coeff()).max(1.0)
    }
}

fn coord_with(kind: Kind, p: CoordinateParams) -> SinusoidalCoordinate {
    SinusoidalCoordinate::new(kind, p).expect("valid coordinate")
}

/// `e^x - 1` with an imaginary shift of `π/5`: trigonometric brackets.
fn trig_sample() -> SinusoidalCoordinate {
    coord_with(
        Kind::C6,
        CoordinateParams {
            gamma: Some(PI / 5.0),
            ..Default::default()
        },
    )
}

/// Random `L`-degree spec with coefficients on a 1/8 grid in [-2, 2].
fn random_spec<R: RealField>(degree: usize, rng: &mut ChaCha8Rng) -> PotentialSpec<R> {
    loop {
        let mut draw = || R::from_ratio(rng.random_range(-16..=16), 8);
        let v0: Vec<R> = (0..=degree).map(|_| draw()).collect();
        let v1: Vec<R> = (0..degree).map(|_| draw()).collect();
        if let Ok(s) = PotentialSpec::new(degree, v0, v1) {
            return s;
        }
    }
}

/// Random `L = 2` spec whose energies `E(0..=n_max)` are well separated.
fn separated_spec<R: RealField>(coord: &SinusoidalCoordinate, rng: &mut ChaCha8Rng) -> PotentialSpec<R> {
    loop {
        let s = random_spec::<R>(2, rng);
        let e: Vec<f64> = (0..=EIGEN_N_MAX as i64).map(|n| energy_oracle(&s, coord, n).to_f64()).collect();
        let scale = e.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let separated = (0..e.len()).all(|i| (0..i).all(|j| (e[i] - e[j]).abs() > 1e-3 * scale));
        if separated {
            return s;
        }
    }
}

fn axiom_samples(coord: &SinusoidalCoordinate) -> Vec<Complex<f64>> {
    if coord.is_discrete() {
        (0..20).map(|j| Complex::new((2 * j + 1) as f64 / 8.0, 0.0)).collect()
    } else {
        coord.sample_points(7).into_iter().take(20).collect()
    }
}

// ---------------------------------------------------------------------------
// criteria

fn ac1() -> Outcome {
    let mut o = Outcome::default();
    for kind in Kind::CATALOG {
        let coord = SinusoidalCoordinate::with_kind(kind);
        let samples = axiom_samples(&coord);
        o.check(samples.len() == 20, || format!("{kind}: {} samples", samples.len()));
        match verify_axioms::<f64>(&coord, &samples) {
            Ok(reports) => {
                let names: Vec<&str> = reports.iter().map(|r| r.check.as_str()).collect();
                let want: &[&str] = if kind.is_continuous() {
                    &["addition", "multiplication", "half_shift"]
                } else {
                    &["addition", "multiplication"]
                };
                o.check(names == want, || format!("{kind}: checks {names:?}"));
                for r in &reports {
                    o.below(r.max_residual, 1e-10, || format!("{kind} {}", r.check));
                    o.check(r.samples_used == 20, || format!("{kind} {}: {} samples used", r.check, r.samples_used));
                }
            }
            Err(e) => o.error(&format!("{kind}"), e),
        }
        if kind.is_polynomial() {
            match verify_axioms::<Rational>(&coord, &samples) {
                Ok(reports) => {
                    for r in &reports {
                        o.check(r.max_residual == 0.0, || format!("{kind} {} exact: {:e}", r.check, r.max_residual));
                    }
                }
                Err(e) => o.error(&format!("{kind} exact"), e),
            }
        }
    }
    let nx = SinusoidalCoordinate::with_kind(Kind::NX);
    match verify_axioms::<f64>(&nx, &axiom_samples(&nx)) {
        Ok(reports) => {
            let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.check.as_str()).collect();
            o.check(failed == ["half_shift"], || format!("negative control failed {failed:?}"));
        }
        Err(e) => o.error("negative control", e),
    }
    o.notes.push("13 kinds x 20 samples, exact for C1 C2 D1 D2".into());
    o
}

fn g_closed_forms<R: RealField>(coord: &SinusoidalCoordinate, o: &mut Outcome) {
    let b = bracket_of(coord);
    let sp = match coord.shift_params_in::<R>() {
        Ok(sp) => sp,
        Err(e) => return o.error(&format!("{}", coord.kind()), e),
    };
    let (r11, rm12) = (sp.r11, sp.rm12);
    let linear = matches!(b, Bracket::Linear);
    let bn = |n: i64| b.at_in::<R>(n, 1);
    let g1_closed = |n: i64| -> R {
        if linear {
            R::from_i64(n * (n + 1) * (2 * n + 1)) / R::from_i64(6) * rm12.clone()
        } else {
            (R::from_i64(n) * bn(n + 1) - R::from_i64(n + 1) * bn(n)) / r11.clone() * rm12.clone()
        }
    };
    let sum_closed = |m: i64, n: i64| -> R {
        if linear {
            R::from_i64((n + m + 1) * (n - m + 1) * (n * n + 2 * n + m * m)) / R::from_i64(12) * rm12.clone()
        } else {
            let half = b.at_in::<R>(1, 2);
            (R::from_i64(n + 1) * bn(n + 1) - R::from_i64(m) * bn(m)
                - b.at_in::<R>(n + m + 1, 2) * b.at_in::<R>(n - m + 1, 2) / (half.clone() * half))
                / r11.clone()
                * rm12.clone()
        }
    };
    let mut g1 = Vec::new();
    for n in 0..=10i64 {
        let g = match coord.g_coeffs_in::<R>(n) {
            Ok(g) => g,
            Err(e) => return o.error(&format!("{} g_{n}", coord.kind()), e),
        };
        o.below(rel_err(&g[0], &bn(n + 1)), 1e-12, || format!("{} g_{n}^(0)", coord.kind()));
        let got1 = g.get(1).cloned().unwrap_or_else(R::zero);
        o.below(rel_err(&got1, &g1_closed(n)), 1e-12, || format!("{} g_{n}^(1)", coord.kind()));
        g1.push(got1);
    }
    for n in 0..=10i64 {
        for m in 0..=n + 1 {
            let direct = (m..=n).fold(R::zero(), |acc, r| acc + g1[r as usize].clone());
            o.below(rel_err(&direct, &sum_closed(m, n)), 1e-12, || {
                format!("{} sum g^(1) m={m} n={n}", coord.kind())
            });
        }
    }
}

fn ac2() -> Outcome {
    let mut o = Outcome::default();
    // linear regime, exactly
    for kind in [Kind::C2, Kind::D2] {
        g_closed_forms::<Rational>(&SinusoidalCoordinate::with_kind(kind), &mut o);
    }
    // q = 1/2
    for kind in [Kind::D3, Kind::D5] {
        let coord = SinusoidalCoordinate::with_kind(kind);
        o.check(coord.q() == 0.5, || format!("{kind}: q = {}", coord.q()));
        g_closed_forms::<f64>(&coord, &mut o);
    }
    // α = π/5
    let trig = trig_sample();
    match bracket_of(&trig) {
        Bracket::Trig(a) => o.below((a - PI / 5.0).abs(), 1e-12, || "trig sample alpha".into()),
        other => o.error("trig sample", format!("regime {other:?}")),
    }
    g_closed_forms::<f64>(&trig, &mut o);

    let grid = [-2.0, -0.5, 1.0 / 3.0, 1.0, 2.5];
    let contexts = [
        BracketContext::linear(),
        BracketContext::from_q(0.5).expect("q context"),
        BracketContext::from_trig_alpha(PI / 5.0).expect("trig context"),
    ];
    for ctx in &contexts {
        let br = |x: f64| ctx.bracket(x);
        for a in grid {
            for b in grid {
                for c in grid {
                    let lhs = br(a) * br(a + c) - br(b) * br(b + c);
                    let rhs = br(a - b) * br(a + b + c);
                    let scale = (br(a) * br(a + c)).abs().max((br(b) * br(b + c)).abs()).max(1.0);
                    o.below((lhs - rhs).abs() / scale, 1e-12, || format!("bracket identity a={a} b={b} c={c}"));
                }
            }
        }
    }
    o.notes.push("n <= 10 in linear, q = 1/2 and alpha = pi/5 regimes; 125-point identity grid x 3".into());
    o
}

fn exact_solvability<R: RealField>(coord: &SinusoidalCoordinate, rng: &mut ChaCha8Rng, o: &mut Outcome) {
    let kind = coord.kind();
    let tol = if R::EXACT { f64::MIN_POSITIVE } else { 1e-10 };
    for s in 0..SPECS_PER_KIND {
        let spec = separated_spec::<R>(coord, rng);
        let op = match HtOperator::new(&spec, coord) {
            Ok(op) => op,
            Err(e) => return o.error(&format!("{kind} spec {s}"), e),
        };
        let h = match op.ht_matrix(EIGEN_N_MAX) {
            Ok(h) => h,
            Err(e) => return o.error(&format!("{kind} spec {s}"), e),
        };
        o.check(h.entries.is_upper_triangular(), || format!("{kind} spec {s}: not upper triangular"));
        let h_scale = h.entries.max_abs().max(1.0);
        for n in 0..=EIGEN_N_MAX {
            let want = energy_oracle(&spec, coord, n as i64);
            let diag = h.get(n, n).clone();
            let err = rel_err(&diag, &want);
            o.worst = o.worst.max(err);
            o.check(err < tol.max(1e-12), || format!("{kind} spec {s}: H[{n},{n}] vs energy formula {err:e}"));
            let p = match op.eigenpoly(n) {
                Ok(p) => p,
                Err(e) => {
                    o.error(&format!("{kind} spec {s} n={n}"), e);
                    continue;
                }
            };
            let r = &op.apply(&p) - &p.scale(&want);
            let res = if R::EXACT {
                if r.is_zero() {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                r.max_abs_coeff() / (p.max_abs_coeff() * h_scale)
            };
            o.worst = o.worst.max(res);
            o.check(res < tol, || format!("{kind} spec {s} n={n}: eigen-relation residual {res:e}"));
            let err = poly_err(&det_eigenpoly(&op, n).monic(), &p.monic());
            o.worst = o.worst.max(err);
            o.check(err < tol, || format!("{kind} spec {s} n={n}: determinant oracle {err:e}"));
        }
    }
}

fn ac3() -> Outcome {
    let mut o = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in Kind::CATALOG {
        let coord = SinusoidalCoordinate::with_kind(kind);
        if kind.is_polynomial() {
            exact_solvability::<Rational>(&coord, &mut rng, &mut o);
        } else {
            exact_solvability::<f64>(&coord, &mut rng, &mut o);
        }
    }
    o.notes.push(format!("13 kinds x {SPECS_PER_KIND} specs, n <= {EIGEN_N_MAX}, exact for C1 C2 D1 D2"));
    o
}

fn closure_formulas<R: RealField>(coord: &SinusoidalCoordinate, rng: &mut ChaCha8Rng, o: &mut Outcome) {
    let kind = coord.kind();
    let samples = coord.sample_points(4);
    for s in 0..5 {
        let spec = separated_spec::<R>(coord, rng);
        let e = eps::<R>(coord);
        let e2 = e.clone() * e.clone();
        let (v20, v11, v10, v01) = (spec.get(2, 0), spec.get(1, 1), spec.get(1, 0), spec.get(0, 1));
        let sp = match coord.shift_params_in::<R>() {
            Ok(sp) => sp,
            Err(e) => return o.error(&format!("{kind}"), e),
        };
        let r10 = e.clone() * (v20.clone() + v11.clone());
        let want = [
            ("r1^(1)", sp.r11.clone()),
            ("r1^(0)", r10.clone()),
            ("r0^(2)", sp.r11.clone()),
            ("r0^(1)", R::from_i64(2) * r10.clone()),
            ("r0^(0)", -(e2.clone() * v20.clone() * v11.clone())),
            ("r-1^(2)", sp.rm12.clone()),
            ("r-1^(1)", e.clone() * (v10 + v01.clone())),
            ("r-1^(0)", -(e2.clone() * v20.clone() * v01)),
        ];
        let c = match closure_coeffs(&spec, coord) {
            Ok(c) => c,
            Err(e) => return o.error(&format!("{kind} spec {s}"), e),
        };
        let got = [
            c.r1[0].clone(),
            c.r1[1].clone(),
            c.r0[0].clone(),
            c.r0[1].clone(),
            c.r0[2].clone(),
            c.rm1[0].clone(),
            c.rm1[1].clone(),
            c.rm1[2].clone(),
        ];
        for ((name, w), g) in want.iter().zip(&got) {
            o.below(rel_err(g, w), 1e-9, || format!("{kind} spec {s} {name}"));
        }
        match verify_closure(&spec, coord, &samples) {
            Ok(r) => {
                for key in ["eq1", "eq1p", "eq2", "eq2p", "eq3"] {
                    let v = r.residuals.get(key).copied().unwrap_or(f64::INFINITY);
                    o.below(v, 1e-9, || format!("{kind} spec {s} {key}"));
                }
                o.check(r.samples_used >= 10, || format!("{kind} spec {s}: {} samples", r.samples_used));
            }
            Err(e) => o.error(&format!("{kind} spec {s} closure"), e),
        }

        // α±(E(n)) against E(n±1) - E(n)
        let r1 = |z: f64| sp.r11.to_f64() * z + r10.to_f64();
        let r0 = |z: f64| sp.r11.to_f64() * z * z + 2.0 * r10.to_f64() * z - (e2.clone() * v20.clone() * v11.clone()).to_f64();
        let en = |n: i64| energy_oracle(&spec, coord, n).to_f64();
        for n in 0..=10i64 {
            let z = en(n);
            let disc = r1(z) * r1(z) + 4.0 * r0(z);
            let root = disc.max(0.0).sqrt();
            let (ap, am) = (0.5 * (r1(z) + root), 0.5 * (r1(z) - root));
            let (up, down) = (en(n + 1) - z, en(n - 1) - z);
            let scale = z.abs().max(up.abs()).max(down.abs()).max(1.0);
            let straight = (up - ap).abs().max((down - am).abs());
            let swapped = (up - am).abs().max((down - ap).abs());
            o.below(straight.min(swapped) / scale, 1e-9, || format!("{kind} spec {s} alpha at n={n}"));
            o.below((-disc / (scale * scale)).max(0.0), 1e-9, || format!("{kind} spec {s} alpha discriminant n={n}"));
        }
    }
}

fn ac4() -> Outcome {
    let mut o = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for kind in Kind::CATALOG {
        let coord = SinusoidalCoordinate::with_kind(kind);
        if kind.is_polynomial() {
            closure_formulas::<Rational>(&coord, &mut rng, &mut o);
        } else {
            closure_formulas::<f64>(&coord, &mut rng, &mut o);
        }
    }
    o.notes.push("13 kinds x 5 specs; five component equations, eight r coefficients, alpha for n <= 10".into());
    o
}

fn ac5() -> Outcome {
    let mut o = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in Kind::CATALOG {
        let coord = SinusoidalCoordinate::with_kind(kind);
        let samples = coord.sample_points(5);
        for degree in 2..=4 {
            for s in 0..3 {
                let spec = random_spec::<f64>(degree, &mut rng);
                match verify_dual_closure(&spec, &coord, &samples) {
                    Ok(r) => {
                        o.below(r.max_residual, 1e-9, || format!("{kind} L={degree} spec {s} dual"));
                        o.check(r.samples_used >= 10, || format!("{kind} L={degree}: {} samples", r.samples_used));
                    }
                    Err(e) => o.error(&format!("{kind} L={degree} spec {s} dual"), e),
                }
            }
        }
        for s in 0..3 {
            let spec = random_spec::<f64>(2, &mut rng);
            let e = coord.epsilon() as f64;
            let rm12 = coord.shift_params().rm12;
            let (v20, v11, v10, v01, v00) = (spec.get(2, 0), spec.get(1, 1), spec.get(1, 0), spec.get(0, 1), spec.get(0, 0));
            let want = e * e * (v11 * v00 - v10 * v01 - rm12 * v20 * v01);
            match aw_casimir(&spec, &coord) {
                Ok(q) => o.below((q - want).abs() / want.abs().max(1.0), 1e-12, || format!("{kind} spec {s} Casimir value")),
                Err(e) => o.error(&format!("{kind} Casimir"), e),
            }
            match verify_casimir(&spec, &coord, &samples) {
                Ok(r) => o.below(r.max_residual, 1e-8, || format!("{kind} spec {s} Casimir constancy")),
                Err(e) => o.error(&format!("{kind} Casimir constancy"), e),
            }
        }
    }
    o.notes.push("13 kinds x L in {2,3,4} x 3 specs; Casimir 13 x 3".into());
    o
}

fn shape_checks(spec: &PotentialSpec<f64>, coord: &SinusoidalCoordinate, label: &str, o: &mut Outcome) {
    let samples = coord.sample_points(6);
    match shape_step(spec, coord, &1.0).and_then(|step| verify_shape(spec, coord, &step, &samples)) {
        Ok(r) => {
            o.below(r.max_residual, 1e-8, || format!("{label} shape conditions"));
            o.check(r.samples_used >= 10, || format!("{label}: {} samples", r.samples_used));
        }
        Err(e) => o.error(&format!("{label} shape"), e),
    }
    let n = coord.n_bound().map_or(6, |n| (n as usize).min(6));
    match verify_telescoping(spec, coord, &1.0, n) {
        Ok(r) => o.below(r.max_residual, 1e-8, || format!("{label} telescoped spectrum")),
        Err(e) => o.error(&format!("{label} telescoping"), e),
    }
}

fn ac6() -> Outcome {
    let mut o = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for kind in Kind::CATALOG {
        let coord = SinusoidalCoordinate::with_kind(kind);
        for s in 0..5u64 {
            if kind.is_discrete() {
                match sample_admissible(&coord, 8, 60 + s) {
                    Ok((spec, c)) => shape_checks(&spec, &c, &format!("{kind} spec {s}"), &mut o),
                    Err(e) => o.error(&format!("{kind} admissible spec"), e),
                }
            } else {
                let spec = separated_spec::<f64>(&coord, &mut rng);
                shape_checks(&spec, &coord, &format!("{kind} spec {s}"), &mut o);
            }
        }
    }
    o.notes.push("13 kinds x 5 specs (real shifts with N = 8), telescoping n <= 6".into());
    o
}

/// `-[M-1]/[M] v40`.
fn forced_v31<R: RealField>(b: Bracket, m: usize, v40: &R) -> R {
    -(b.at_in::<R>(m as i64 - 1, 1) / b.at_in::<R>(m as i64, 1) * v40.clone())
}

fn qes_case<R: RealField>(coord: &SinusoidalCoordinate, degree: usize, m: usize, rng: &mut ChaCha8Rng, o: &mut Outcome, closed_fail: &mut Vec<String>) {
    let kind = coord.kind();
    let b = bracket_of(coord);
    let mut spec = random_spec::<R>(degree, rng);
    if degree == 4 {
        let v31 = forced_v31(b, m, &spec.get(4, 0));
        spec.set(3, 1, v31).expect("v31 slot");
    }
    let label = format!("{kind} L={degree} M={m}");
    let q = match QesModel::build(&spec, coord, m, V31Policy::Enforce) {
        Ok(q) => q,
        Err(e) => return o.error(&label, e),
    };
    o.below(rel_err(&q.spec().get(3, 1), &spec.get(3, 1)), 1e-12, || format!("{label} v31"));
    let op = match HtOperator::new(&spec, coord) {
        Ok(op) => op,
        Err(e) => return o.error(&label, e),
    };
    let e0 = op.emjn(0, 0, m);
    let e1 = (degree == 4).then(|| op.emjn(1, 0, m) + op.emjn(1, 1, m));
    o.below(rel_err(q.e0(), &e0), 1e-12, || format!("{label} e0 vs defining sum"));
    if let (Some(a), Some(b)) = (q.e1(), &e1) {
        o.below(rel_err(a, b), 1e-12, || format!("{label} e1 vs defining sum"));
    }

    // invariance of span{1, ..., η^M}
    for n in 0..=m {
        let mut col = op.apply(&PolyEta::monomial(n));
        col = &col - &PolyEta::monomial(n + degree - 2).scale(&e0);
        if let Some(e1) = &e1 {
            col = &col - &PolyEta::monomial(n + 1).scale(e1);
        }
        let scale = col.max_abs_coeff().max(1.0);
        let leak = (m + 1..col.coeffs().len()).map(|k| col.coeff(k)).fold(0.0f64, |acc, c| {
            if R::EXACT && !c.is_zero() {
                f64::INFINITY
            } else {
                acc.max(c.to_f64().abs() / scale)
            }
        });
        let tol = if R::EXACT { f64::MIN_POSITIVE } else { 1e-12 };
        o.worst = o.worst.max(leak);
        o.check(leak < tol, || format!("{label} column {n} leaves the subspace ({leak:e})"));
    }

    // closed forms
    let e = eps::<R>(coord);
    let half = b.at_in::<R>(1, 2);
    let br = |num: i64, den: i64| b.at_in::<R>(num, den);
    let mi = m as i64;
    let (closed_e0, closed_e1) = if degree == 3 {
        let c = e.clone() * br(mi, 2) / half.clone() * (br(mi - 1, 2) * spec.get(3, 0) + br(mi + 1, 2) * spec.get(2, 1));
        (c, None)
    } else {
        let v40 = spec.get(4, 0);
        let c0 = -(e.clone() * br(4, 1) * br(mi, 2) * br(mi - 1, 2) / (half.clone() * br(mi + 3, 1)) * v40.clone());
        let lead = e.clone() * br(mi, 2) / half.clone() * (br(mi - 1, 2) * spec.get(3, 0) + br(mi + 1, 2) * spec.get(2, 1));
        let sp = coord.shift_params_in::<R>().expect("shift constants");
        let tail = match b {
            Bracket::Linear => R::from_i64(mi * (mi - 1) * (mi * mi + 5 * mi + 8)) / R::from_i64(mi + 3),
            _ => {
                R::from_i64(2) * br(mi, 2) * br(mi - 1, 2) / (sp.r11.clone() * half.clone() * br(mi + 3, 1))
                    * (br(4, 1) - R::from_i64(2) * br(3, 1) + R::from_i64(2) * half.clone() * br(2 * mi + 5, 1) / br(2 * mi + 5, 2))
            }
        };
        (c0, Some(lead - e.clone() * sp.rm12 * v40 * tail))
    };
    let err0 = rel_err(&closed_e0, &e0);
    o.checked += 1;
    if err0 >= 1e-12 {
        closed_fail.push(format!("{label}: closed e0 {closed_e0} vs defining sum {e0}"));
    }
    if let (Some(c), Some(g)) = (closed_e1, &e1) {
        o.checked += 1;
        if rel_err(&c, g) >= 1e-12 {
            closed_fail.push(format!("{label}: closed e1 {c} vs defining sum {g}"));
        }
    }
}

fn ac7() -> Outcome {
    let mut o = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut closed_fail: [Vec<String>; 2] = Default::default();
    for kind in Kind::CATALOG {
        let coord = SinusoidalCoordinate::with_kind(kind);
        for degree in [3usize, 4] {
            // [M] = 0 at M = 0 leaves the v31 constraint undefined
            let lo = if degree == 4 { 1 } else { 0 };
            for m in lo..=8 {
                let sink = &mut closed_fail[degree - 3];
                if kind.is_polynomial() {
                    qes_case::<Rational>(&coord, degree, m, &mut rng, &mut o, sink);
                } else {
                    qes_case::<f64>(&coord, degree, m, &mut rng, &mut o, sink);
                }
            }
        }
    }
    for (degree, fails) in [(3, &closed_fail[0]), (4, &closed_fail[1])] {
        if fails.is_empty() {
            o.notes.push(format!("L={degree} closed forms match"));
        } else {
            o.notes.push(format!("L={degree} closed forms disagree in {} cases", fails.len()));
            o.failures.extend(fails.iter().take(3).cloned());
        }
    }

    // L >= 5
    let cases = [SinusoidalCoordinate::with_kind(Kind::D1), SinusoidalCoordinate::with_kind(Kind::D3), trig_sample()];
    for coord in &cases {
        let half = bracket_of(coord).at(0.5);
        for degree in [5usize, 6] {
            for m in 1..=8 {
                match qes_feasible(degree, &coord.bracket_context(), m) {
                    Ok(f) => {
                        o.check(!f.feasible, || format!("{} L={degree} M={m} reported feasible", coord.kind()));
                        match f.witness {
                            Some(w) => {
                                // relative to the two products whose difference is the determinant
                                let scale = (w.matrix[0][0] * w.matrix[1][1]).abs().max(1.0);
                                o.below((w.det - half).abs() / scale, 1e-12, || {
                                    format!("{} L={degree} M={m} det {} vs {half}", coord.kind(), w.det)
                                });
                                if coord.kind() == Kind::D1 {
                                    o.check(w.det_exact.as_deref() == Some("1/2"), || format!("exact det {:?}", w.det_exact));
                                }
                            }
                            None => o.error(&format!("{} L={degree}", coord.kind()), "no witness"),
                        }
                    }
                    Err(e) => o.error(&format!("{} L={degree}", coord.kind()), e),
                }
            }
        }
    }
    for degree in [3, 4] {
        let ok = qes_feasible(degree, &BracketContext::linear(), 2).is_ok_and(|f| f.feasible);
        o.check(ok, || format!("L={degree} should be feasible"));
    }
    o
}

fn ac8() -> Outcome {
    let mut o = Outcome::default();
    let q = |n: i64| Rational::from_i64(n);
    let exact = PotentialSpec::new(2, vec![q(2), q(-2), q(1)], vec![q(2), q(-1)]).expect("spec");
    let coord = SinusoidalCoordinate::with_kind(Kind::D1).with_n_bound(Some(4)).expect("N = 4");
    let spec = exact.to_f64();
    let lat = match build_lattice(&spec, &coord, None) {
        Ok(l) => l,
        Err(e) => {
            o.error("Krawtchouk lattice", e);
            return o;
        }
    };
    o.check(lat.h.nrows() == 5 && lat.h.ncols() == 5, || format!("H is {}x{}", lat.h.nrows(), lat.h.ncols()));
    o.check(lat.h == lat.h.transpose(), || "H not symmetric".into());
    o.below((&lat.h - lat.a.transpose() * &lat.a).amax(), 1e-12, || "H - A^T A".into());
    let phi0 = nalgebra::DVector::from_vec(lat.phi0.clone());
    o.below((&lat.h * &phi0).amax() / phi0.amax(), 1e-12, || "H phi0".into());

    let op = HtOperator::new(&exact, &coord).expect("operator");
    for n in 0..=4 {
        let e = op.energy(n).expect("energy");
        o.check(e == q(n as i64), || format!("E({n}) = {e}"));
    }
    let eig = SymmetricEigen::new(lat.h.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    for (n, v) in vals.iter().enumerate() {
        o.below((v - n as f64).abs(), 1e-12, || format!("lattice eigenvalue {n}"));
    }

    // φ0² weights and eigenpolynomials, exactly
    let w = groundstate_squared(&exact, &coord, 4).expect("weights");
    let polys: Vec<PolyEta<Rational>> = (0..=4).map(|n| op.eigenpoly(n).expect("eigenpoly")).collect();
    for n in 0..=4 {
        for m in 0..n {
            let s = (0..=4).fold(q(0), |acc, x| {
                let eta = q(x as i64);
                acc + w[x].clone() * polys[n].eval(&eta) * polys[m].eval(&eta)
            });
            o.check(s.is_zero(), || format!("<P{n}, P{m}> = {s}"));
        }
    }
    match spectrum_check(&lat) {
        Ok(r) => {
            o.check(r.passed_status(), || format!("spectrum check: {:?}", r.notes));
            o.below(r.max_orthogonality, 1e-10, || "orthogonality".into());
            o.below(1.0 - r.min_cosine, 1e-10, || "eigenvector alignment".into());
        }
        Err(e) => o.error("spectrum check", e),
    }

    for (label, degree, ms, v0, v1) in qes_models() {
        let coord = SinusoidalCoordinate::with_kind(Kind::D1).with_n_bound(Some(8)).expect("N = 8");
        let spec = PotentialSpec::new(degree, v0, v1).expect("qes spec").to_f64();
        for m in ms {
            let qm = match QesModel::build(&spec, &coord, m, V31Policy::Keep) {
                Ok(q) => q,
                Err(e) => {
                    o.error(&format!("{label} M={m}"), e);
                    continue;
                }
            };
            let lat = match build_lattice(qm.spec(), &coord, None) {
                Ok(l) => l,
                Err(e) => {
                    o.error(&format!("{label} lattice"), e);
                    continue;
                }
            };
            match qes_lattice(&lat, &qm) {
                Ok(r) => {
                    o.check(r.status == solvkit::verify::Status::Pass, || format!("{label} M={m}: {:?}", r.notes));
                    o.below(r.max_eigenvalue_error, 1e-7, || format!("{label} M={m} report"));
                }
                Err(e) => o.error(&format!("{label} M={m}"), e),
            }
            // H' = H - diag(compensation(η(x))), diagonalized here
            let comp = qm.compensation();
            let mut h = lat.h.clone();
            for x in 0..lat.dim() {
                h[(x, x)] -= comp.eval(&(x as f64));
            }
            let mut lattice_vals: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
            lattice_vals.sort_by(f64::total_cmp);
            let block = qm.spectrum().expect("block spectrum");
            for z in &block {
                let near = lattice_vals.iter().map(|v| (v - z.re).abs()).fold(f64::INFINITY, f64::min);
                let err = near.max(z.im.abs()) / z.re.abs().max(1.0);
                o.below(err, 1e-7, || format!("{label} M={m} eigenvalue {}", z.re));
            }
        }
    }
    o
}

type QesCase = (&'static str, usize, Vec<usize>, Vec<f64>, Vec<f64>);

/// Lattice-positive cubic and quartic D1 models with N = 8.
fn qes_models() -> Vec<QesCase> {
    vec![
        ("cubic", 3, vec![0, 1, 2], vec![0.8, 0.9, 0.3, 0.2], vec![0.8, 0.5, -0.3]),
        ("quartic", 4, vec![3], vec![0.48, 3.84, 3.9, 0.48, -0.06], vec![0.48, -2.68, -0.48, 0.04]),
    ]
}

trait StatusExt {
    fn passed_status(&self) -> bool;
}

impl StatusExt for solvkit::lattice::SpectrumReport {
    fn passed_status(&self) -> bool {
        self.status == solvkit::verify::Status::Pass
    }
}

fn tamper<R: RealField>(label: &str, spec: &PotentialSpec<R>, coord: &SinusoidalCoordinate, o: &mut Outcome) {
    let samples = coord.sample_points(9);
    let (cert, dual) = match (closure_coeffs(spec, coord), dual_closure_coeffs(spec, coord)) {
        (Ok(c), Ok(d)) => (c, d),
        (Err(e), _) | (_, Err(e)) => return o.error(label, e),
    };
    for (k, l) in [(2, 0), (1, 1), (1, 0), (0, 1), (0, 0)] {
        let mut bad = spec.clone();
        bad.set(k, l, spec.get(k, l) + R::from_ratio(1, 1000)).expect("slot");
        let closure = verify_closure_with(&bad, coord, &cert, &samples).map(|r| r.max_residual);
        let dual = verify_dual_closure_with(&bad, coord, &dual, &samples).map(|r| r.max_residual);
        match (closure, dual) {
            (Ok(c), Ok(d)) => {
                let worst = c.max(d);
                o.worst = o.worst.max(worst);
                o.check(worst > 1e-5, || format!("{label} v_({k},{l}) + 1e-3: closure {c:e}, dual {d:e}"));
            }
            (Err(e), _) | (_, Err(e)) => o.error(&format!("{label} v_({k},{l})"), e),
        }
    }
}

fn ac9() -> Outcome {
    let mut o = Outcome::default();
    let q = |n: i64| Rational::from_i64(n);
    let kr = PotentialSpec::new(2, vec![q(2), q(-2), q(1)], vec![q(2), q(-1)]).expect("spec");
    let d1 = SinusoidalCoordinate::with_kind(Kind::D1).with_n_bound(Some(4)).expect("N = 4");
    tamper("Krawtchouk", &kr, &d1, &mut o);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for kind in Kind::CATALOG {
        let coord = SinusoidalCoordinate::with_kind(kind);
        let spec = separated_spec::<f64>(&coord, &mut rng);
        tamper(&format!("{kind}"), &spec, &coord, &mut o);
    }
    // worst is the smallest detection margin here, so report it separately
    o.notes.push("5 coefficients x 14 models, closure and dual certificates frozen".into());
    o.worst = f64::NAN;
    o
}

fn main() -> ExitCode {
    type Criterion = (&'static str, &'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("AC1", "coordinate axioms", ac1),
        ("AC2", "g coefficients and bracket identity", ac2),
        ("AC3", "exact solvability", ac3),
        ("AC4", "closure relation and alpha", ac4),
        ("AC5", "dual closure and Casimir", ac5),
        ("AC6", "shape invariance", ac6),
        ("AC7", "quasi-exact solvability", ac7),
        ("AC8", "lattice reconstruction", ac8),
        ("AC9", "perturbation sensitivity", ac9),
    ];
    let mut failed = 0;
    for (id, title, run) in criteria {
        let start = std::time::Instant::now();
        let o = std::panic::catch_unwind(run).unwrap_or_else(|_| Outcome {
            failures: vec!["panicked".into()],
            ..Default::default()
        });
        let status = if o.failures.is_empty() { "PASS" } else { "FAIL" };
        let worst = if o.worst.is_nan() { String::new() } else { format!(", worst {:.1e}", o.worst) };
        println!(
            "{id} {status} {title}: {} checks{worst} [{:.1}s] {}",
            o.checked,
            start.elapsed().as_secs_f64(),
            o.notes.join("; ")
        );
        if !o.failures.is_empty() {
            failed += 1;
            for f in o.failures.iter().take(5) {
                println!("    {f}");
            }
            if o.failures.len() > 5 {
                println!("    ... {} more", o.failures.len() - 5);
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
