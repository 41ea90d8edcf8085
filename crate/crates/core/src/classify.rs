//! Petrov classification, Bel–Debever residuals and the electric/magnetic
//! split of the Weyl tensor in four Lorentzian dimensions.

use std::fmt;

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::Serialize;

use crate::compat::{vector_compat_of, vector_permutability_of, Curvature, SymmetricField};
use crate::error::{Error, Result};
use crate::geometry::{GeometryAt, FLOOR_WEIGHT};
use crate::linalg::complex_eigenvalues;
use crate::residual::ratio;
use crate::tensor::{levi_civita, DenseTensor, MetricAt, Variance::Co};

/// Orthonormal frame with `e_0` timelike, stored as contravariant vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameAt {
    pub vectors: Vec<Vec<f64>>,
    /// Largest deviation of `e_a·e_b` from `diag(−1, 1, …, 1)`.
    pub gram_residual: f64,
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn require_lorentzian4(m: &MetricAt) -> Result<()> {
    if m.dim() != 4 {
        return Err(Error::precondition(format!("needs n = 4, got {}", m.dim())));
    }
    if !m.is_lorentzian() {
        return Err(Error::Signature {
            expected: (3, 1),
            found: m.signature,
        });
    }
    Ok(())
}

/// Gram–Schmidt from a timelike seed; `e_0 ∝ seed`.
pub fn orthonormal_frame(m: &MetricAt, seed: &[f64]) -> Result<FrameAt> {
    let n = m.dim();
    if !m.is_lorentzian() {
        return Err(Error::Signature {
            expected: (n - 1, 1),
            found: m.signature,
        });
    }
    let s2 = m.dot(seed, seed);
    let gscale = m.g.norm();
    if !(s2 < -1e-10 * euclid(seed).powi(2) * gscale) {
        return Err(Error::precondition(format!("frame seed is not timelike (u² = {s2:.3e})")));
    }
    let e0: Vec<f64> = seed.iter().map(|x| x / (-s2).sqrt()).collect();
    let mut vectors = vec![e0];
    let mut pool: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    while vectors.len() < n {
        let projected: Vec<Vec<f64>> = pool
            .iter()
            .map(|v| {
                let mut w = v.clone();
                for e in &vectors {
                    let c = m.dot(e, v) / m.dot(e, e);
                    for (wi, ei) in w.iter_mut().zip(e) {
                        *wi -= c * ei;
                    }
                }
                w
            })
            .collect();
        let norms: Vec<f64> = projected.iter().map(|w| m.dot(w, w)).collect();
        let top = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top <= 1e-12 * gscale {
            return Err(Error::precondition("frame construction broke down on a null or dependent vector"));
        }
        // first coordinate direction that is not nearly dependent
        let idx = norms.iter().position(|&x| x >= 0.1 * top).expect("top is attained");
        let best = norms[idx];
        let w: Vec<f64> = projected[idx].iter().map(|x| x / best.sqrt()).collect();
        pool.remove(idx);
        vectors.push(w);
    }
    let mut gram_residual: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let eta = if a != b { 0.0 } else if a == 0 { -1.0 } else { 1.0 };
            gram_residual = gram_residual.max((m.dot(&vectors[a], &vectors[b]) - eta).abs());
        }
    }
    Ok(FrameAt { vectors, gram_residual })
}

/// Timelike eigenvector of the component matrix of `g`.
pub fn timelike_seed(m: &MetricAt) -> Result<Vec<f64>> {
    let eig = m.g.to_matrix()?.symmetric_eigen();
    let (i, lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &l)| if l < acc.1 { (i, l) } else { acc });
    if lam >= 0.0 {
        return Err(Error::precondition("metric has no timelike direction"));
    }
    Ok(eig.eigenvectors.column(i).iter().copied().collect())
}

/// Frame seeded by [`timelike_seed`].
pub fn default_frame(m: &MetricAt) -> Result<FrameAt> {
    orthonormal_frame(m, &timelike_seed(m)?)
}

/// Components `T(e_a, e_b, …)` of a covariant tensor in a frame.
pub fn frame_components(t: &DenseTensor, frame: &FrameAt) -> Result<DenseTensor> {
    let n = t.dim();
    let mut cur = t.clone();
    for slot in 0..t.rank() {
        let src = cur.clone();
        cur = DenseTensor::from_fn(n, t.variance(), |i| {
            let mut idx = i.to_vec();
            let mut s = 0.0;
            for k in 0..n {
                idx[slot] = k;
                s += frame.vectors[i[slot]][k] * src.get(&idx);
            }
            s
        })?;
    }
    Ok(cur)
}

/// Left dual `C̃_jklm = ½ ε_jk^pq C_pqlm` of a covariant rank-4 tensor.
pub fn left_dual(c: &DenseTensor, m: &MetricAt) -> Result<DenseTensor> {
    let eps = levi_civita(m)?;
    let eps_up = eps.raise_lower(2, m)?.raise_lower(3, m)?;
    DenseTensor::from_fn(4, &[Co; 4], |i| {
        let mut s = 0.0;
        for p in 0..4 {
            for q in 0..4 {
                let e = eps_up.get(&[i[0], i[1], p, q]);
                if *e != 0.0 {
                    s += e * c.get(&[p, q, i[2], i[3]]);
                }
            }
        }
        0.5 * s
    })
}

/// Electric and magnetic parts with their consistency residuals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EHPair {
    pub e: DenseTensor,
    pub h: DenseTensor,
    pub symmetry_residual: f64,
    pub trace_residual: f64,
    /// `‖E·u‖ + ‖H·u‖`, relative; zero when built from a general `T`.
    pub orthogonality_residual: f64,
    /// Frame norms relative to the curvature scale.
    pub e_norm: f64,
    pub h_norm: f64,
}

/// `‖C‖` in a frame plus a small share of `‖R‖ + ‖∂Γ‖ + ‖Γ‖²`.
fn frame_curvature_scale(geo: &GeometryAt, frame: &FrameAt) -> Result<f64> {
    let r = frame_components(&geo.riemann_cov, frame)?.norm() + geo.scales[0];
    Ok(frame_components(&geo.weyl_cov, frame)?.norm() + FLOOR_WEIGHT * r)
}

fn eh_from_tensor(geo: &GeometryAt, t_up: &DenseTensor, frame: &FrameAt, u: Option<&[f64]>) -> Result<EHPair> {
    let m = &geo.metric;
    let c = &geo.weyl_cov;
    let cd = left_dual(c, m)?;
    let contract = |k: &DenseTensor| {
        DenseTensor::from_fn(4, &[Co, Co], |i| {
            let mut s = 0.0;
            for j in 0..4 {
                for mm in 0..4 {
                    s += t_up.get(&[j, mm]) * k.get(&[j, i[0], i[1], mm]);
                }
            }
            s
        })
    };
    let e = contract(c)?;
    let h = contract(&cd)?;
    let scale = frame_curvature_scale(geo, frame)? * frame_components(&t_up.all_lowered(m)?, frame)?.norm().max(1e-300);
    let ef = frame_components(&e, frame)?;
    let hf = frame_components(&h, frame)?;
    let asym = |x: &DenseTensor| x.try_sub(&x.permute(&[1, 0]).expect("rank 2")).expect("shape").norm();
    let tr = |x: &DenseTensor| (1..4).map(|a| x.get(&[a, a])).sum::<f64>() - x.get(&[0, 0]);
    let symmetry_residual = ratio(asym(&ef) + asym(&hf), scale);
    let trace_residual = ratio(tr(&ef).abs() + tr(&hf).abs(), scale);
    let orthogonality_residual = match u {
        Some(u) => {
            let dot = |x: &DenseTensor| euclid(&(0..4).map(|a| (0..4).map(|b| x.get(&[a, b]) * u[b]).sum::<f64>()).collect::<Vec<_>>());
            ratio(dot(&e) + dot(&h), scale * euclid(u))
        }
        None => 0.0,
    };
    Ok(EHPair {
        e_norm: ratio(ef.norm(), scale),
        h_norm: ratio(hf.norm(), scale),
        e,
        h,
        symmetry_residual,
        trace_residual,
        orthogonality_residual,
    })
}

/// `E_ab = u^j u^m C_jabm`, `H_ab = u^j u^m C̃_jabm` for a unit timelike `u`.
pub fn electric_magnetic(geo: &GeometryAt, u: &[f64]) -> Result<EHPair> {
    let m = &geo.metric;
    require_lorentzian4(m)?;
    let u2 = m.dot(u, u);
    if (u2 + 1.0).abs() > 1e-9 {
        return Err(Error::precondition(format!("observer must be unit timelike (u² = {u2:.6e})")));
    }
    let frame = orthonormal_frame(m, u)?;
    let t = DenseTensor::from_fn(4, &[crate::tensor::Variance::Contra; 2], |i| u[i[0]] * u[i[1]])?;
    eh_from_tensor(geo, &t, &frame, Some(u))
}

/// `E_ab = T^jm C_jabm`, `H_ab = T^jm C̃_jabm` for a symmetric `T`.
pub fn generalized_eh(geo: &GeometryAt, t: &SymmetricField) -> Result<EHPair> {
    let m = &geo.metric;
    require_lorentzian4(m)?;
    let t_up = t.value(geo)?.all_raised(m)?;
    eh_from_tensor(geo, &t_up, &default_frame(m)?, None)
}

/// Relative norm of `E g⁻¹ T − T g⁻¹ E`.
pub fn e_commutator(eh: &EHPair, t: &SymmetricField, geo: &GeometryAt) -> Result<f64> {
    crate::constructs::kn::commutator_residual(&eh.e, &t.value(geo)?, &geo.metric)
}

/// `(‖H‖, Weyl vector-compatibility residual)` for a unit timelike `u`.
pub fn h_equals_weyl_compat(geo: &GeometryAt, u: &[f64]) -> Result<(f64, f64)> {
    let eh = electric_magnetic(geo, u)?;
    let lo = geo.metric.lower(u);
    Ok((eh.h_norm, vector_compat_of(&lo, geo, Curvature::Weyl)?))
}

/// Rebuilds `C` from `E` and `H` for a unit timelike `u`:
/// `C = −(G∘G − ε∘ε)(u, u, E) + (ε∘G + G∘ε)(u, u, H)` with `G_abcd = g_ac g_bd − g_ad g_bc`.
pub fn weyl_from_eh(eh: &EHPair, u: &[f64], m: &MetricAt) -> Result<DenseTensor> {
    let g = &m.g;
    let eps = levi_civita(m)?;
    let gg = DenseTensor::from_fn(4, &[Co; 4], |i| {
        g.get(&[i[0], i[2]]) * g.get(&[i[1], i[3]]) - g.get(&[i[0], i[3]]) * g.get(&[i[1], i[2]])
    })?;
    let e_up = eh.e.all_raised(m)?;
    let h_up = eh.h.all_raised(m)?;
    // X_abq = T_abpq u^p
    let with_u = |t: &DenseTensor| {
        DenseTensor::from_fn(4, &[Co; 3], |i| (0..4).map(|p| t.get(&[i[0], i[1], p, i[2]]) * u[p]).sum::<f64>())
    };
    let gu = with_u(&gg)?;
    let eu = with_u(&eps)?;
    let pair = |x: &DenseTensor, y: &DenseTensor, s: &DenseTensor| {
        DenseTensor::from_fn(4, &[Co; 4], |i| {
            let mut acc = 0.0;
            for q in 0..4 {
                for r in 0..4 {
                    acc += x.get(&[i[0], i[1], q]) * y.get(&[i[2], i[3], r]) * s.get(&[q, r]);
                }
            }
            acc
        })
    };
    let elec = pair(&gu, &gu, &e_up)?.try_sub(&pair(&eu, &eu, &e_up)?)?;
    let mag = pair(&eu, &gu, &h_up)?.try_add(&pair(&gu, &eu, &h_up)?)?;
    mag.try_sub(&elec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PetrovType {
    I,
    II,
    D,
    III,
    N,
    O,
}

impl fmt::Display for PetrovType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PetrovType::I => "I",
            PetrovType::II => "II",
            PetrovType::D => "D",
            PetrovType::III => "III",
            PetrovType::N => "N",
            PetrovType::O => "O",
        };
        f.write_str(s)
    }
}

/// Result of [`petrov_type`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PetrovReport {
    /// Eigenvalues of `Q`, as `[re, im]`, sorted.
    pub eigenvalues: Vec<[f64; 2]>,
    pub petrov_type: PetrovType,
    pub degeneracy_tol: f64,
    pub minimal_poly_degree: usize,
    /// `‖Q‖` relative to the frame curvature scale.
    pub q_norm: f64,
    /// `|tr Q|` relative to `‖Q‖`.
    pub trace_residual: f64,
    /// `|I³ − 6J²| / (|I|³ + 6|J|²)` with `I = tr Q²`, `J = tr Q³`.
    pub speciality: f64,
}

/// `Q_ij = E(e_i, e_j) + i H(e_i, e_j)`, `i, j = 1..3`, observer `e_0`.
pub fn q_matrix(geo: &GeometryAt, frame: &FrameAt) -> Result<DMatrix<Complex<f64>>> {
    let eh = electric_magnetic(geo, &frame.vectors[0])?;
    let ef = frame_components(&eh.e, frame)?;
    let hf = frame_components(&eh.h, frame)?;
    Ok(DMatrix::from_fn(3, 3, |i, j| Complex::new(*ef.get(&[i + 1, j + 1]), *hf.get(&[i + 1, j + 1]))))
}

fn classify_q(q: &DMatrix<Complex<f64>>, floor: f64, tol: f64) -> PetrovReport {
    let qn = q.norm();
    let mut eig: Vec<[f64; 2]> = complex_eigenvalues(q).iter().map(|z| [z.re, z.im]).collect();
    eig.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let q2 = q * q;
    let q3 = &q2 * q;
    let (i2, j3) = (q2.trace(), q3.trace());
    let speciality = ratio((i2.powi(3) - j3.powi(2) * 6.0).norm(), i2.norm().powi(3) + 6.0 * j3.norm_sqr());
    let trace_residual = ratio(q.trace().norm(), qn + floor);
    let (petrov_type, degree) = if qn <= 1e-9 * floor {
        (PetrovType::O, 1)
    } else if i2.norm() <= tol * qn * qn && j3.norm() <= tol * qn.powi(3) {
        if q2.norm() <= tol * qn * qn {
            (PetrovType::N, 2)
        } else {
            (PetrovType::III, 3)
        }
    } else if speciality < tol {
        let lam = -j3 / i2;
        let id = DMatrix::<Complex<f64>>::identity(3, 3);
        let mp = (q - &id * lam) * (q + &id * (lam * 2.0));
        if mp.norm() <= tol.sqrt() * qn * qn {
            (PetrovType::D, 2)
        } else {
            (PetrovType::II, 3)
        }
    } else {
        (PetrovType::I, 3)
    };
    PetrovReport {
        eigenvalues: eig,
        petrov_type,
        degeneracy_tol: tol,
        minimal_poly_degree: degree,
        q_norm: ratio(qn, floor),
        trace_residual,
        speciality,
    }
}

/// Petrov type in a given frame.
pub fn petrov_in_frame(geo: &GeometryAt, frame: &FrameAt, tol: f64) -> Result<PetrovReport> {
    require_lorentzian4(&geo.metric)?;
    let q = q_matrix(geo, frame)?;
    Ok(classify_q(&q, frame_curvature_scale(geo, frame)?, tol))
}

pub fn petrov_type(geo: &GeometryAt, tol: f64) -> Result<PetrovReport> {
    require_lorentzian4(&geo.metric)?;
    petrov_in_frame(geo, &default_frame(&geo.metric)?, tol)
}

/// Bel–Debever residuals for a null vector, from weakest to strongest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BelDebever {
    /// `k_[b C_a]rs[q k_d] k^r k^s`
    pub res_i: f64,
    /// `k_[b C_a]rsq k^r k^s`
    pub res_iid: f64,
    /// `k_[b C_a]rsq k^r`
    pub res_iii: f64,
    /// `C_arsq k^r`
    pub res_n: f64,
    /// `C`
    pub res_o: f64,
}

impl BelDebever {
    /// Deepest level whose residual is below `tol`, if any.
    pub fn deepest(&self, tol: f64) -> Option<&'static str> {
        [("O", self.res_o), ("N", self.res_n), ("III", self.res_iii), ("II/D", self.res_iid), ("I", self.res_i)]
            .into_iter()
            .find(|(_, r)| *r < tol)
            .map(|(s, _)| s)
    }
}

fn require_null(k: &[f64], m: &MetricAt) -> Result<Vec<f64>> {
    let lo = m.lower(k);
    let k2 = m.dot(k, k);
    if euclid(k) == 0.0 || k2.abs() > 1e-10 * euclid(k) * euclid(&lo) {
        return Err(Error::precondition(format!("vector is not null (k² = {k2:.3e})")));
    }
    Ok(lo)
}

pub fn bel_debever(geo: &GeometryAt, k: &[f64]) -> Result<BelDebever> {
    let m = &geo.metric;
    let n = m.dim();
    let kl = require_null(k, m)?;
    let c = &geo.weyl_cov;
    let cn = c.norm() + geo.floor();
    let (ku, kd) = (euclid(k), euclid(&kl));
    // V_asq = C_arsq k^r, W_aq = V_asq k^s
    let v = DenseTensor::from_fn(n, &[Co; 3], |i| (0..n).map(|r| c.get(&[i[0], r, i[1], i[2]]) * k[r]).sum::<f64>())?;
    let w = DenseTensor::from_fn(n, &[Co; 2], |i| (0..n).map(|s| v.get(&[i[0], s, i[1]]) * k[s]).sum::<f64>())?;
    let iid = DenseTensor::from_fn(n, &[Co; 3], |i| {
        let (b, a, q) = (i[0], i[1], i[2]);
        kl[b] * w.get(&[a, q]) - kl[a] * w.get(&[b, q])
    })?;
    let one = DenseTensor::from_fn(n, &[Co; 4], |i| {
        let (b, a, q, d) = (i[0], i[1], i[2], i[3]);
        iid.get(&[b, a, q]) * kl[d] - iid.get(&[b, a, d]) * kl[q]
    })?;
    let iii = DenseTensor::from_fn(n, &[Co; 4], |i| {
        let (b, a, s, q) = (i[0], i[1], i[2], i[3]);
        kl[b] * v.get(&[a, s, q]) - kl[a] * v.get(&[b, s, q])
    })?;
    Ok(BelDebever {
        res_i: ratio(one.norm(), cn * kd * kd * ku * ku),
        res_iid: ratio(iid.norm(), cn * kd * ku * ku),
        res_iii: ratio(iii.norm(), cn * kd * ku),
        res_n: ratio(v.norm(), cn * ku),
        res_o: ratio(c.norm(), cn),
    })
}

/// `(Weyl vector-compatibility residual, res_IID)` for a null `k`.
pub fn special_via_compat(geo: &GeometryAt, k: &[f64]) -> Result<(f64, f64)> {
    let lo = require_null(k, &geo.metric)?;
    Ok((vector_compat_of(&lo, geo, Curvature::Weyl)?, bel_debever(geo, k)?.res_iid))
}

/// `(type-III residual, Weyl permutability residual)` for a null `k`.
pub fn type_iii_vs_permutable(geo: &GeometryAt, k: &[f64]) -> Result<(f64, f64)> {
    let lo = require_null(k, &geo.metric)?;
    Ok((bel_debever(geo, k)?.res_iii, vector_permutability_of(&lo, geo, Curvature::Weyl)?))
}

/// `(Weyl permutability residual of u, ‖C‖ relative)` for a non-null `u`.
pub fn weyl_permutable_flat_check(geo: &GeometryAt, u: &[f64]) -> Result<(f64, f64)> {
    let m = &geo.metric;
    if m.dim() != 4 {
        return Err(Error::precondition("needs n = 4"));
    }
    let lo = m.lower(u);
    let u2 = m.dot(u, u);
    if u2.abs() <= 1e-10 * euclid(u) * euclid(&lo) {
        return Err(Error::precondition("vector must be non-null"));
    }
    let perm = vector_permutability_of(&lo, geo, Curvature::Weyl)?;
    Ok((perm, ratio(geo.weyl_cov.norm(), geo.riemann_cov.norm() + geo.floor())))
}

/// `‖C̃̃ + C‖`, relative.
pub fn duality_residual(geo: &GeometryAt) -> Result<f64> {
    let m = &geo.metric;
    require_lorentzian4(m)?;
    let d2 = left_dual(&left_dual(&geo.weyl_cov, m)?, m)?;
    Ok(ratio(d2.try_add(&geo.weyl_cov)?.norm(), geo.weyl_cov.norm() + geo.floor()))
}

/// A local minimum of `res_IID` on the future null cone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullDirection {
    /// Spatial unit direction in the frame.
    pub direction: [f64; 3],
    /// `k = e_0 + n^i e_i` in coordinates.
    pub k: Vec<f64>,
    pub residual: f64,
}

struct PndCost<'a> {
    geo: &'a GeometryAt,
    frame: &'a FrameAt,
}

fn sphere(x: &[f64]) -> [f64; 3] {
    let (th, ph) = (x[0], x[1]);
    [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
}

fn null_from(frame: &FrameAt, n: &[f64; 3]) -> Vec<f64> {
    let e = &frame.vectors;
    (0..4).map(|c| e[0][c] + n[0] * e[1][c] + n[1] * e[2][c] + n[2] * e[3][c]).collect()
}

impl CostFunction for PndCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let k = null_from(self.frame, &sphere(x));
        Ok(bel_debever(self.geo, &k).map(|b| b.res_iid).unwrap_or(f64::INFINITY))
    }
}

/// Multi-start Nelder–Mead search for principal null directions from the 26
/// lattice directions of the cube. Minima closer than 1e-4 are merged; the
/// result is ordered by residual, then direction.
pub fn principal_null_directions(geo: &GeometryAt, frame: &FrameAt) -> Result<Vec<NullDirection>> {
    require_lorentzian4(&geo.metric)?;
    let mut starts = Vec::new();
    for a in -1i32..=1 {
        for b in -1i32..=1 {
            for c in -1i32..=1 {
                if (a, b, c) != (0, 0, 0) {
                    let v = [a as f64, b as f64, c as f64];
                    let r = euclid(&v);
                    starts.push([v[0] / r, v[1] / r, v[2] / r]);
                }
            }
        }
    }
    let found: Vec<NullDirection> = starts
        .par_iter()
        .map(|s| {
            let th = s[2].clamp(-1.0, 1.0).acos();
            let ph = s[1].atan2(s[0]);
            let simplex = vec![vec![th, ph], vec![th + 0.15, ph], vec![th, ph + 0.15]];
            let solver = NelderMead::new(simplex).with_sd_tolerance(1e-15).expect("valid tolerance");
            let res = Executor::new(PndCost { geo, frame }, solver).configure(|st| st.max_iters(400)).run();
            let (x, r) = match res {
                Ok(r) => (r.state.best_param.unwrap_or_else(|| vec![th, ph]), r.state.best_cost),
                Err(_) => (vec![th, ph], f64::INFINITY),
            };
            let d = sphere(&x);
            NullDirection {
                direction: d,
                k: null_from(frame, &d),
                residual: r,
            }
        })
        .collect();
    let mut sorted = found;
    sorted.sort_by(|a, b| {
        a.residual
            .total_cmp(&b.residual)
            .then(a.direction.partial_cmp(&b.direction).unwrap_or(std::cmp::Ordering::Equal))
    });
    let mut out: Vec<NullDirection> = Vec::new();
    for d in sorted {
        let close = out.iter().any(|o| {
            let dot: f64 = o.direction.iter().zip(&d.direction).map(|(a, b)| a * b).sum();
            dot > 1.0 - 5e-9
        });
        if !close {
            out.push(d);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::VectorField;
    use crate::constructs::catalog;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn geo(name: &str, p: &[f64]) -> GeometryAt {
        GeometryAt::new(catalog(name).unwrap().source(), p).unwrap()
    }

    fn static_observer(g: &GeometryAt) -> Vec<f64> {
        let gtt = g.metric.g.get(&[0, 0]);
        vec![1.0 / (-gtt).sqrt(), 0.0, 0.0, 0.0]
    }

    #[test]
    fn purely_electric_weyl_has_eight_times_e_squared() {
        // in an orthonormal frame with H = 0, ‖C‖² = 8‖E‖²
        let g = geo("schwarzschild", &[0.0, 3.5, 1.2, 0.5]);
        let eh = electric_magnetic(&g, &static_observer(&g)).unwrap();
        assert!(eh.h_norm < 1e-12);
        assert!((eh.e_norm - 8f64.sqrt().recip()).abs() < 1e-3, "{}", eh.e_norm);
    }

    #[test]
    fn frames() {
        let m = MetricAt::minkowski(4);
        let f = orthonormal_frame(&m, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        for (a, v) in f.vectors.iter().enumerate() {
            assert_eq!(v.iter().filter(|x| **x != 0.0).count(), 1);
            assert_eq!(v[a].abs(), 1.0);
        }
        assert!(orthonormal_frame(&m, &[1.0, 1.0, 0.0, 0.0]).is_err());
        let g = geo("schwarzschild", &[0.0, 4.0, 1.0, 0.2]);
        let f = orthonormal_frame(&g.metric, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((f.vectors[0][0] - 1.0 / (0.5f64).sqrt()).abs() < 1e-14);
        assert!(f.gram_residual < 1e-12);
    }

    #[test]
    fn schwarzschild_static_observer_is_purely_electric() {
        let g = geo("schwarzschild", &[0.0, 4.0, 1.0, 0.2]);
        let u = static_observer(&g);
        let eh = electric_magnetic(&g, &u).unwrap();
        assert!(eh.h_norm < 1e-12, "{}", eh.h_norm);
        assert!(eh.e_norm > 1e-4, "{}", eh.e_norm);
        let f = orthonormal_frame(&g.metric, &u).unwrap();
        let (ef, hf) = (frame_components(&eh.e, &f).unwrap(), frame_components(&eh.h, &f).unwrap());
        assert!(hf.norm() < 1e-12 * ef.norm());
        assert!(eh.trace_residual < 1e-12 && eh.symmetry_residual < 1e-12 && eh.orthogonality_residual < 1e-12);
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    assert!(eh.e.get(&[a, b]).abs() < 1e-14);
                }
            }
        }
        // radial tidal component E_rr = −2M/r³ · g_rr with E = u u C, i.e. the sign of C_trrt
        let err = eh.e.get(&[1, 1]) / g.metric.g.get(&[1, 1]);
        assert!((err.abs() - 2.0 / 64.0).abs() < 1e-12, "{err}");
        let (h, c) = h_equals_weyl_compat(&g, &u).unwrap();
        assert!(h < 1e-12 && c < 1e-12);
    }

    fn boosted(g: &GeometryAt, v: [f64; 3]) -> Vec<f64> {
        let f = default_frame(&g.metric).unwrap();
        let gamma = 1.0 / (1.0 - v.iter().map(|x| x * x).sum::<f64>()).sqrt();
        (0..4).map(|c| gamma * (f.vectors[0][c] + v[0] * f.vectors[1][c] + v[1] * f.vectors[2][c] + v[2] * f.vectors[3][c])).collect()
    }

    #[test]
    fn godel_boosted_observer_is_not_purely_electric() {
        let g = geo("godel", &[0.1, 0.3, -0.2, 0.4]);
        let u = boosted(&g, [0.3, -0.2, 0.4]);
        let (h, c) = h_equals_weyl_compat(&g, &u).unwrap();
        assert!(h > 1e-3 && c > 1e-3, "{h} {c}");
    }

    #[test]
    fn reconstruction_and_duality() {
        for (name, p) in [("schwarzschild", [0.0, 4.0, 1.0, 0.2]), ("godel", [0.1, 0.3, -0.2, 0.4]), ("pp_wave", [0.5, 0.1, 0.3, -0.2])] {
            let g = geo(name, &p);
            let u = boosted(&g, [0.2, 0.1, -0.3]);
            let eh = electric_magnetic(&g, &u).unwrap();
            let c = weyl_from_eh(&eh, &u, &g.metric).unwrap();
            let r = ratio(c.try_sub(&g.weyl_cov).unwrap().norm(), g.weyl_cov.norm());
            assert!(r < 1e-10, "{name}: {r}");
            assert!(duality_residual(&g).unwrap() < 1e-12);
        }
    }

    #[test]
    fn generalized_eh_special_cases() {
        let g = geo("godel", &[0.1, 0.3, -0.2, 0.4]);
        let eh = generalized_eh(&g, &SymmetricField::metric()).unwrap();
        assert!(eh.e_norm < 1e-12 && eh.h_norm < 1e-12);
        let u = boosted(&g, [0.1, 0.2, 0.0]);
        let lo = g.metric.lower(&u);
        let t = DenseTensor::from_fn(4, &[Co, Co], |i| lo[i[0]] * lo[i[1]]).unwrap();
        let a = generalized_eh(&g, &SymmetricField::point_values(t, "uu").unwrap()).unwrap();
        let b = electric_magnetic(&g, &u).unwrap();
        assert!(a.e.try_sub(&b.e).unwrap().norm() < 1e-13 && a.h.try_sub(&b.h).unwrap().norm() < 1e-13);
        assert!(a.trace_residual < 1e-12 && a.symmetry_residual < 1e-12);
    }

    #[test]
    fn petrov_types_of_the_catalog() {
        let tol = 1e-7;
        let s = petrov_type(&geo("schwarzschild", &[0.0, 4.0, 1.0, 0.2]), tol).unwrap();
        assert_eq!(s.petrov_type, PetrovType::D, "{s:?}");
        assert!(s.trace_residual < 1e-12);
        let p = petrov_type(&geo("pp_wave", &[0.5, 0.1, 0.3, -0.2]), tol).unwrap();
        assert_eq!(p.petrov_type, PetrovType::N, "{p:?}");
        let d = petrov_type(&geo("de_sitter_static", &[0.0, 1.0, 1.0, 0.2]), tol).unwrap();
        assert_eq!(d.petrov_type, PetrovType::O);
        let m = petrov_type(&geo("minkowski", &[0.0, 1.0, 1.0, 0.2]), tol).unwrap();
        assert_eq!(m.petrov_type, PetrovType::O);
        let f = petrov_type(&geo("frw_flat", &[1.2, 0.0, 0.1, 0.2]), tol).unwrap();
        assert_eq!(f.petrov_type, PetrovType::O);
        let gd = petrov_type(&geo("godel", &[0.1, 0.3, -0.2, 0.4]), tol).unwrap();
        assert_eq!(gd.petrov_type, PetrovType::D, "{gd:?}");
    }

    #[test]
    fn type_is_invariant_under_spatial_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (name, p, ty) in [("schwarzschild", [0.0, 5.0, 1.3, 0.2], PetrovType::D), ("pp_wave", [0.5, 0.1, 0.3, -0.2], PetrovType::N)] {
            let g = geo(name, &p);
            let f = default_frame(&g.metric).unwrap();
            let base = petrov_in_frame(&g, &f, 1e-7).unwrap();
            for _ in 0..20 {
                let axis: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let r = euclid(&axis);
                let (x, y, z) = (axis[0] / r, axis[1] / r, axis[2] / r);
                let t: f64 = rng.gen_range(0.0..6.0);
                let (c, s) = (t.cos(), t.sin());
                let rot = [
                    [c + x * x * (1.0 - c), x * y * (1.0 - c) - z * s, x * z * (1.0 - c) + y * s],
                    [y * x * (1.0 - c) + z * s, c + y * y * (1.0 - c), y * z * (1.0 - c) - x * s],
                    [z * x * (1.0 - c) - y * s, z * y * (1.0 - c) + x * s, c + z * z * (1.0 - c)],
                ];
                let mut vectors = vec![f.vectors[0].clone()];
                for row in &rot {
                    vectors.push((0..4).map(|k| (0..3).map(|j| row[j] * f.vectors[j + 1][k]).sum()).collect());
                }
                let rf = FrameAt { vectors, gram_residual: 0.0 };
                let rep = petrov_in_frame(&g, &rf, 1e-7).unwrap();
                assert_eq!(rep.petrov_type, ty);
                if ty != PetrovType::N {
                    for (a, b) in rep.eigenvalues.iter().zip(&base.eigenvalues) {
                        assert!((a[0] - b[0]).abs() + (a[1] - b[1]).abs() < 1e-9 * base.q_norm.max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn bel_debever_chain() {
        let g = geo("pp_wave", &[0.5, 0.1, 0.3, -0.2]);
        let k = [0.0, 1.0, 0.0, 0.0];
        let b = bel_debever(&g, &k).unwrap();
        assert!(b.res_n < 1e-12 && b.res_iii < 1e-12 && b.res_iid < 1e-12 && b.res_i < 1e-12, "{b:?}");
        assert!(b.res_o > 0.1);
        assert_eq!(b.deepest(1e-9), Some("N"));
        // radial null direction of Schwarzschild: k = (1/f, 1, 0, 0)
        let s = geo("schwarzschild", &[0.0, 4.0, 1.0, 0.2]);
        let k = [2.0, 1.0, 0.0, 0.0];
        let b = bel_debever(&s, &k).unwrap();
        assert!(b.res_iid < 1e-12 && b.res_iii > 1e-2, "{b:?}");
        let m = geo("minkowski", &[0.0, 1.0, 1.0, 0.2]);
        let b = bel_debever(&m, &[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!((b.res_i, b.res_iid, b.res_iii, b.res_n, b.res_o), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(bel_debever(&m, &[1.0, 0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn algebraically_special_from_compatibility() {
        let g = geo("pp_wave", &[0.5, 0.1, 0.3, -0.2]);
        let (c, r) = special_via_compat(&g, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(c < 1e-12 && r < 1e-12);
        let (iii, perm) = type_iii_vs_permutable(&g, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(iii < 1e-12 && perm < 1e-12);
        let gd = geo("godel", &[0.1, 0.3, -0.2, 0.4]);
        let f = default_frame(&gd.metric).unwrap();
        let k = null_from(&f, &[0.48, 0.6, 0.64]);
        let (c, _) = special_via_compat(&gd, &k).unwrap();
        assert!(c > 1e-3);
    }

    #[test]
    fn weyl_permutable_vectors_and_flatness() {
        let d = geo("de_sitter_static", &[0.0, 1.0, 1.0, 0.2]);
        let (p, c) = weyl_permutable_flat_check(&d, &[1.0, 0.3, 0.0, 0.1]).unwrap();
        assert!(p < 1e-9 && c < 1e-12, "{p} {c}");
        let s = geo("schwarzschild", &[0.0, 4.0, 1.0, 0.2]);
        let (p, c) = weyl_permutable_flat_check(&s, &static_observer(&s)).unwrap();
        assert!(p > 1e-3 && c > 1e-3);
    }

    #[test]
    fn principal_null_directions_of_schwarzschild_are_radial() {
        let g = geo("schwarzschild", &[0.0, 4.0, 1.0, 0.2]);
        let f = default_frame(&g.metric).unwrap();
        let pnds = principal_null_directions(&g, &f).unwrap();
        let good: Vec<_> = pnds.iter().filter(|d| d.residual < 1e-8).collect();
        assert_eq!(good.len(), 2, "{pnds:?}");
        for d in good {
            // no angular components
            assert!(d.k[2].abs() < 1e-7 * euclid(&d.k) && d.k[3].abs() < 1e-7 * euclid(&d.k), "{d:?}");
        }
    }

    #[test]
    fn non_lorentzian_rejected() {
        let spec = catalog("sphere_embedding").unwrap();
        let p: Vec<f64> = crate::geometry::MetricSource::sample_ranges(spec.source()).iter().map(|r| 0.5 * (r.0 + r.1)).collect();
        let g = GeometryAt::new(spec.source(), &p).unwrap();
        assert!(matches!(petrov_type(&g, 1e-7), Err(Error::Signature { .. })));
        let _ = VectorField::constant(&[1.0, 0.0, 0.0, 0.0]);
    }
}
