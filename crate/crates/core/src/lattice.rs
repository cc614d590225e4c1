//! Real-shift models on the lattice `x = 0, 1, ..., N`: the tridiagonal
//! Hamiltonian, its factorization `H = AᵀA`, the zero mode `φ0`, and
//! spectral checks against the closed-form energies.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polyop::HtOperator;
use crate::potential::PotentialSpec;
use crate::qes::QesModel;
use crate::scalar::RealField;
use crate::sinusoid::SinusoidalCoordinate;

pub const EIGEN_TOL: f64 = 1e-8;
pub const QES_TOL: f64 = 1e-7;
pub const ORTHO_TOL: f64 = 1e-10;
/// Largest normalized `φ0(K_tr)^2` accepted for a truncated semi-infinite model.
pub const TAIL_TOL: f64 = 1e-12;
pub const MAX_SAMPLING_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct LatticeModel {
    pub coord: SinusoidalCoordinate,
    pub spec: PotentialSpec<f64>,
    /// Last lattice point: `N`, or `K_tr` for a truncated model.
    pub size: usize,
    /// Semi-infinite model cut off by a hard wall at `K_tr`.
    pub approximate: bool,
    pub b: Vec<f64>,
    pub d: Vec<f64>,
    /// `φ0` with `φ0(0) = 1`.
    pub phi0: Vec<f64>,
    pub h: DMatrix<f64>,
    pub a: DMatrix<f64>,
    /// Normalized `φ0(K_tr)^2` for truncated models.
    pub tail: Option<f64>,
}

/// `B` and `D` on `0..=n`.
fn lattice_bd<R: RealField>(spec: &PotentialSpec<R>, coord: &SinusoidalCoordinate, n: usize) -> Result<(Vec<R>, Vec<R>)> {
    let mut b = Vec::with_capacity(n + 1);
    let mut d = Vec::with_capacity(n + 1);
    for x in 0..=n {
        let (bx, dx) = spec.v_pair(coord, &R::from_i64(x as i64))?;
        b.push(bx);
        d.push(dx);
    }
    Ok((b, d))
}

/// `φ0(x)^2 = Π_{y<x} B(y)/D(y+1)`, exact in the rational backend.
pub fn groundstate_squared<R: RealField>(spec: &PotentialSpec<R>, coord: &SinusoidalCoordinate, n: usize) -> Result<Vec<R>> {
    let (b, d) = lattice_bd(spec, coord, n)?;
    let mut out = vec![R::one()];
    for y in 0..n {
        if d[y + 1].is_zero() {
            return Err(Error::Positivity {
                function: "D",
                points: vec![y as i64 + 1],
            });
        }
        let next = out[y].clone() * b[y].clone() / d[y + 1].clone();
        out.push(next);
    }
    Ok(out)
}

/// Finite model when `coord` carries `N`, otherwise a hard-wall truncation at `k_tr`.
pub fn build_lattice(spec: &PotentialSpec<f64>, coord: &SinusoidalCoordinate, k_tr: Option<usize>) -> Result<LatticeModel> {
    if !coord.is_discrete() {
        return Err(Error::Precondition(format!("{} is not a real-shift coordinate", coord.kind())));
    }
    let (size, approximate) = match (coord.n_bound(), k_tr) {
        (Some(n), _) => (n as usize, false),
        (None, Some(k)) => (k, true),
        (None, None) => {
            return Err(Error::InvalidParameter(
                "a semi-infinite lattice needs a truncation point K_tr".into(),
            ))
        }
    };
    let em1: f64 = coord.eta_shift_const(-1.0)?;
    let want_v00 = -spec.get(0, 1) * em1;
    if (want_v00 - spec.get(0, 0)).abs() > 1e-12 * spec.max_abs().max(1.0) {
        return Err(Error::Precondition("the boundary condition D(0) = 0 is not applied".into()));
    }
    if approximate {
        // positivity on the retained points; the wall replaces B(K_tr)
        let (b, d) = lattice_bd(spec, coord, size)?;
        let bad_b: Vec<i64> = (0..size).filter(|&x| b[x] <= 0.0).map(|x| x as i64).collect();
        if !bad_b.is_empty() {
            return Err(Error::Positivity {
                function: "B",
                points: bad_b,
            });
        }
        let bad_d: Vec<i64> = (1..=size).filter(|&x| d[x] <= 0.0).map(|x| x as i64).collect();
        if !bad_d.is_empty() {
            return Err(Error::Positivity {
                function: "D",
                points: bad_d,
            });
        }
    } else {
        spec.check_lattice(coord, size as u32)?;
    }
    let (mut b, mut d) = lattice_bd(spec, coord, size)?;
    d[0] = 0.0;
    b[size] = 0.0;
    let phi2 = groundstate_squared(spec, coord, size)?;
    let phi0: Vec<f64> = phi2.iter().map(|&v| v.sqrt()).collect();
    let dim = size + 1;
    let mut h = DMatrix::zeros(dim, dim);
    let mut a = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        h[(x, x)] = b[x] + d[x];
        a[(x, x)] = b[x].sqrt();
        if x + 1 < dim {
            let off = -(b[x] * d[x + 1]).sqrt();
            h[(x, x + 1)] = off;
            h[(x + 1, x)] = off;
            a[(x, x + 1)] = -d[x + 1].sqrt();
        }
    }
    let scale = h.amax().max(1.0);
    let recon = (a.transpose() * &a - &h).amax();
    if recon > 1e-12 * scale {
        return Err(Error::Numerical(format!("H differs from AᵀA by {recon:e}")));
    }
    let phi = DVector::from_vec(phi0.clone());
    let hphi = (&h * &phi).amax() / phi.amax().max(1.0);
    if hphi > 1e-12 * scale {
        return Err(Error::Numerical(format!("H φ0 = {hphi:e}, not zero")));
    }
    let tail = if approximate {
        let norm: f64 = phi2.iter().sum();
        let t = phi2[size] / norm;
        if !(t < TAIL_TOL) {
            return Err(Error::Precondition(format!(
                "truncation at K_tr = {size} keeps φ0(K_tr)^2 = {t:e} of the norm (need < {TAIL_TOL:e})"
            )));
        }
        Some(t)
    } else {
        None
    };
    Ok(LatticeModel {
        coord: *coord,
        spec: spec.clone(),
        size,
        approximate,
        b,
        d,
        phi0,
        h,
        a,
        tail,
    })
}

impl LatticeModel {
    pub fn dim(&self) -> usize {
        self.size + 1
    }

    /// `φ0 / ||φ0||`.
    pub fn phi0_normalized(&self) -> Vec<f64> {
        let n = self.phi0.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.phi0.iter().map(|v| v / n).collect()
    }

    /// `η(x)` at the lattice points.
    pub fn eta_points(&self) -> Result<Vec<f64>> {
        (0..self.dim()).map(|x| self.coord.eta(&(x as f64))).collect()
    }

    /// `CSV` with `x, B, D, φ0` and optionally the eigenvector columns of `H`.
    pub fn to_csv(&self, with_eigenvectors: bool) -> String {
        let vecs = with_eigenvectors.then(|| sorted_eigen(&self.h));
        let mut out = String::from("x,B,D,phi0");
        if let Some((vals, _)) = &vecs {
            for n in 0..vals.len() {
                let _ = write!(out, ",psi{n}");
            }
        }
        out.push('\n');
        for x in 0..self.dim() {
            let _ = write!(out, "{x},{},{},{}", self.b[x], self.d[x], self.phi0[x]);
            if let Some((_, v)) = &vecs {
                for n in 0..v.ncols() {
                    let _ = write!(out, ",{}", v[(x, n)]);
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Eigenvalues ascending; eigenvector columns with first nonzero component positive.
pub fn sorted_eigen(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(h.nrows(), h.ncols());
    for (c, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        let tiny = 1e-12 * v.amax();
        if v.iter().find(|z| z.abs() > tiny).is_some_and(|z| *z < 0.0) {
            v = -v;
        }
        vecs.set_column(c, &v);
    }
    (vals, vecs)
}

fn cosine(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a.dot(b) / (a.norm() * b.norm())).abs()
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumPair {
    pub n: usize,
    pub formula: f64,
    pub computed: f64,
    pub cosine: f64,
    /// `||φ0 Σ|c_i||η|^i|| / ||φ0 P_n(η)||`, the rounding amplification of the monomial form.
    pub condition: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub status: crate::verify::Status,
    pub approximate: bool,
    pub eigenvalues: Vec<f64>,
    pub pairs: Vec<SpectrumPair>,
    pub max_eigenvalue_error: f64,
    pub min_cosine: f64,
    pub max_orthogonality: f64,
    pub min_eigenvalue: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Dense diagonalization of `H` against `E(n)` and `φ0 P_n(η)`.
pub fn spectrum_check(model: &LatticeModel) -> Result<SpectrumReport> {
    let op = HtOperator::new(&model.spec, &model.coord)?;
    if op.degree() != 2 {
        return Err(Error::Unsupported(format!(
            "closed-form spectrum needs L = 2 (got L = {})",
            op.degree()
        )));
    }
    let (vals, vecs) = sorted_eigen(&model.h);
    let eta = model.eta_points()?;
    let count = if model.approximate { 5.min(model.dim()) } else { model.dim() };
    let energies: Vec<f64> = (0..count).map(|n| op.energy(n)).collect::<Result<_>>()?;
    let scale = energies.iter().chain(&vals).fold(1.0f64, |m, v| m.max(v.abs()));
    let mut notes = Vec::new();

    let polys: Vec<_> = (0..count).map(|n| op.eigenpoly(n)).collect::<Result<_>>()?;
    let all_states: Vec<DVector<f64>> = polys
        .iter()
        .map(|p| DVector::from_iterator(model.dim(), (0..model.dim()).map(|x| model.phi0[x] * p.eval(&eta[x]))))
        .collect();
    // φ0 Σ|c_i||η|^i bounds the rounding of the monomial evaluation
    let abs_states: Vec<DVector<f64>> = polys
        .iter()
        .map(|p| {
            DVector::from_iterator(
                model.dim(),
                (0..model.dim()).map(|x| {
                    let e = eta[x].abs();
                    model.phi0[x] * p.coeffs().iter().rev().fold(0.0, |acc, c| acc * e + c.abs())
                }),
            )
        })
        .collect();
    // behind a hard wall only levels that have decayed at K_tr are comparable
    let mut levels = Vec::new();
    for (n, s) in all_states.iter().enumerate() {
        let tail = s[model.size].powi(2) / s.norm_squared();
        if model.approximate && !(tail < TAIL_TOL) {
            notes.push(format!("level {n} skipped: weight {tail:e} at the wall K_tr = {}", model.size));
        } else {
            levels.push(n);
        }
    }
    if model.approximate {
        notes.push(format!("hard wall at K_tr = {}; compared {} levels", model.size, levels.len()));
    }

    let mut pairs = Vec::new();
    let mut used = vec![false; vals.len()];
    let mut max_err: f64 = 0.0;
    let mut min_cos: f64 = 1.0;
    let mut cos_ok = true;
    for &n in &levels {
        let e = energies[n];
        let best = (0..vals.len())
            .filter(|&i| !used[i])
            .min_by(|&i, &j| (vals[i] - e).abs().total_cmp(&(vals[j] - e).abs()))
            .expect("as many eigenvalues as levels");
        used[best] = true;
        let err = (vals[best] - e).abs() / scale;
        let cos = cosine(&vecs.column(best).into_owned(), &all_states[n]);
        let condition = abs_states[n].norm() / all_states[n].norm();
        max_err = max_err.max(err);
        min_cos = min_cos.min(cos);
        cos_ok &= 1.0 - cos <= 1e-10 * condition * condition;
        pairs.push(SpectrumPair {
            n,
            formula: e,
            computed: vals[best],
            cosine: cos,
            condition,
        });
    }

    // Σ_x φ0² P_n P_m relative to the same sum with |P| evaluated term by term
    let mut ortho: f64 = 0.0;
    for (i, &n) in levels.iter().enumerate() {
        for &m in &levels[..i] {
            let mag = abs_states[n].dot(&abs_states[m]);
            if mag > 0.0 {
                ortho = ortho.max(all_states[n].dot(&all_states[m]).abs() / mag);
            }
        }
    }
    let min_eig = vals.first().copied().unwrap_or(0.0);
    if min_eig < -1e-12 * scale {
        notes.push(format!("H has a negative eigenvalue {min_eig:e}"));
    }
    let ok = max_err <= EIGEN_TOL && cos_ok && ortho <= ORTHO_TOL && min_eig >= -1e-12 * scale;
    Ok(SpectrumReport {
        status: if ok { crate::verify::Status::Pass } else { crate::verify::Status::Fail },
        approximate: model.approximate,
        eigenvalues: vals,
        pairs,
        max_eigenvalue_error: max_err,
        min_cosine: min_cos,
        max_orthogonality: ortho,
        min_eigenvalue: min_eig,
        notes,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct QesLatticeReport {
    pub status: crate::verify::Status,
    /// Spectrum of the `(M+1)`-dimensional invariant block.
    pub qes_eigenvalues: Vec<f64>,
    /// Matched eigenvalues of `H'`.
    pub matched: Vec<f64>,
    pub max_eigenvalue_error: f64,
    /// `||H' u - λ u|| / ||u||` with `u = φ0 Q(η)` built from the block eigenvector.
    pub max_eigenvector_residual: f64,
    pub lattice_eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// `H' = H - diag(e0 η^{L-2} + e1 η^{L-3})` against the invariant block.
pub fn qes_lattice(model: &LatticeModel, qes: &QesModel<f64>) -> Result<QesLatticeReport> {
    if model.approximate {
        return Err(Error::Precondition("the QES comparison needs a finite lattice".into()));
    }
    if qes.m() > model.size {
        return Err(Error::Precondition(format!(
            "M = {} exceeds the lattice size N = {}",
            qes.m(),
            model.size
        )));
    }
    if qes.spec() != &model.spec {
        return Err(Error::Precondition("QES model and lattice use different potentials".into()));
    }
    let eta = model.eta_points()?;
    let comp = qes.compensation();
    let mut hp = model.h.clone();
    for x in 0..model.dim() {
        hp[(x, x)] -= comp.eval(&eta[x]);
    }
    let (vals, _) = sorted_eigen(&hp);
    let block = qes.matrix()?.entries.to_dmatrix();
    let spectrum = qes.spectrum()?;
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut notes = vec!["φ0 is a zero mode of H but not an eigenvector of H'".to_string()];
    let mut errs: f64 = 0.0;
    let mut vec_res: f64 = 0.0;
    let mut matched = Vec::new();
    let mut qvals = Vec::new();
    let mut used = vec![false; vals.len()];
    for z in &spectrum {
        if z.im.abs() > 1e-9 * scale {
            notes.push(format!("complex block eigenvalue {z} cannot appear in a symmetric spectrum"));
            errs = f64::INFINITY;
            continue;
        }
        let lam = z.re;
        qvals.push(lam);
        let best = (0..vals.len())
            .filter(|&i| !used[i])
            .min_by(|&i, &j| (vals[i] - lam).abs().total_cmp(&(vals[j] - lam).abs()))
            .expect("lattice has at least M + 1 points");
        used[best] = true;
        matched.push(vals[best]);
        errs = errs.max((vals[best] - lam).abs() / scale);

        // block eigenvector: right singular vector of the smallest singular value
        let shifted = &block - DMatrix::identity(block.nrows(), block.ncols()) * lam;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.expect("requested");
        let k = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("nonempty");
        let coeffs = vt.row(k).transpose();
        let u = DVector::from_iterator(
            model.dim(),
            (0..model.dim()).map(|x| {
                let p: f64 = coeffs.iter().rev().fold(0.0, |acc, c| acc * eta[x] + c);
                model.phi0[x] * p
            }),
        );
        let r = (&hp * &u - &u * lam).norm() / (u.norm() * scale);
        vec_res = vec_res.max(r);
    }
    let min_eig = vals.first().copied().unwrap_or(0.0);
    if min_eig < 0.0 {
        notes.push(format!("H' is not positive semi-definite (lowest eigenvalue {min_eig})"));
    }
    let ok = errs <= QES_TOL && vec_res <= QES_TOL;
    Ok(QesLatticeReport {
        status: if ok { crate::verify::Status::Pass } else { crate::verify::Status::Fail },
        qes_eigenvalues: qvals,
        matched,
        max_eigenvalue_error: errs,
        max_eigenvector_residual: vec_res,
        lattice_eigenvalues: vals,
        min_eigenvalue: min_eig,
        notes,
    })
}

/// Rejection-samples an `L = 2` spec with `B(N) = 0` and positive `B`, `D`.
/// `v_{2,0}, v_{1,1}, v_{1,0}` are drawn from `[-2, 2]`; `v_{0,1}` is solved
/// from `B(N) = 0` and `v_{0,0}` from `D(0) = 0`.
pub fn sample_admissible(coord: &SinusoidalCoordinate, n: u32, seed: u64) -> Result<(PotentialSpec<f64>, SinusoidalCoordinate)> {
    if !coord.is_discrete() {
        return Err(Error::Precondition(format!("{} is not a real-shift coordinate", coord.kind())));
    }
    let coord = coord.with_n_bound(Some(n))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = n as f64;
    let eta_n: f64 = coord.eta(&x)?;
    let eta_n1: f64 = coord.eta_shifted(&x, 1.0)?;
    let em1: f64 = coord.eta_shift_const(-1.0)?;
    let lever = eta_n1 - em1;
    if lever.abs() < 1e-12 {
        return Err(Error::Degenerate { i: n as usize, n: n as usize });
    }
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let mut draw = || (rng.random_range(-2.0..2.0) * 64.0f64).round() / 64.0;
        let (v20, v11, v10) = (draw(), draw(), draw());
        // B(N) = 0: v20 η² + v11 η η⁺ + v10 η + v01 (η⁺ - η(-1)) = 0
        let v01 = -(v20 * eta_n * eta_n + v11 * eta_n * eta_n1 + v10 * eta_n) / lever;
        let Ok(spec) = PotentialSpec::new(2, vec![-v01 * em1, v10, v20], vec![v01, v11]) else {
            continue;
        };
        if spec.check_lattice(&coord, n).is_ok() {
            return Ok((spec, coord));
        }
    }
    Err(Error::InvalidParameter(format!(
        "no admissible {} spec with N = {n} in {MAX_SAMPLING_ATTEMPTS} attempts",
        coord.kind()
    )))
}
