//! Compatibility, permutability and the curvature identities tied to them.
//!
//! Cyclic sums run over the first three slots:
//! `cyc(b, K)_ijkl = b_im K_jkl^m + b_jm K_kil^m + b_km K_ijl^m`.
//! A symmetric `b` is K-compatible when `cyc(b, K) = 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{CompiledExpr, Expr, Taylor};
use crate::geometry::{GeometryAt, MetricSource, METRIC_ORDER};
use crate::linalg;
use crate::residual::ratio;
use crate::tensor::{DenseTensor, Scalar, Variance};

use Variance::{Co, Contra};

/// Which generalized curvature tensor a check runs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Curvature {
    Riemann,
    Weyl,
}

impl Curvature {
    /// `K_jkl^m`
    pub fn mixed(self, geo: &GeometryAt) -> &DenseTensor {
        match self {
            Curvature::Riemann => &geo.riemann_mixed,
            Curvature::Weyl => &geo.weyl_mixed,
        }
    }

    /// `K_jklm`
    pub fn covariant(self, geo: &GeometryAt) -> &DenseTensor {
        match self {
            Curvature::Riemann => &geo.riemann_cov,
            Curvature::Weyl => &geo.weyl_cov,
        }
    }
}

#[derive(Debug, Clone)]
enum FieldSource {
    Metric,
    Ricci,
    /// Components constant in the chart.
    Constant(DenseTensor),
    /// Values known only at one point; not differentiable.
    PointValues(DenseTensor),
    Expressions(Vec<CompiledExpr>),
    Jet(DenseTensor<Taylor>),
}

/// A symmetric covariant rank-2 field `b_ij`.
#[derive(Debug, Clone)]
pub struct SymmetricField {
    pub description: String,
    source: FieldSource,
}

fn check_symmetric(t: &DenseTensor) -> Result<()> {
    if t.rank() != 2 || t.variance() != [Co, Co] {
        return Err(Error::shape("a symmetric field must be a covariant rank-2 tensor"));
    }
    let asym = t.antisymmetrize_pair(0, 1)?.norm();
    if asym > 1e-10 * t.norm() {
        return Err(Error::shape(format!("tensor is not symmetric (‖b − bᵀ‖ = {asym:.3e})")));
    }
    Ok(())
}

impl SymmetricField {
    pub fn metric() -> SymmetricField {
        SymmetricField {
            description: "metric".into(),
            source: FieldSource::Metric,
        }
    }

    pub fn ricci() -> SymmetricField {
        SymmetricField {
            description: "Ricci".into(),
            source: FieldSource::Ricci,
        }
    }

    /// Field whose chart components are the given constants.
    pub fn constant(t: DenseTensor, description: &str) -> Result<SymmetricField> {
        check_symmetric(&t)?;
        Ok(SymmetricField {
            description: description.into(),
            source: FieldSource::Constant(t),
        })
    }

    /// Values at a single point; algebraic checks only.
    pub fn point_values(t: DenseTensor, description: &str) -> Result<SymmetricField> {
        check_symmetric(&t)?;
        Ok(SymmetricField {
            description: description.into(),
            source: FieldSource::PointValues(t),
        })
    }

    pub fn from_jet(t: DenseTensor<Taylor>, description: &str) -> Result<SymmetricField> {
        check_symmetric(&t.values())?;
        Ok(SymmetricField {
            description: description.into(),
            source: FieldSource::Jet(t),
        })
    }

    /// Full `n × n` table of component expressions in the chart of `source`.
    /// The table must be textually symmetric.
    pub fn from_expressions(source: &dyn MetricSource, table: &[Vec<Expr>], description: &str) -> Result<SymmetricField> {
        let n = source.dim();
        if table.len() != n || table.iter().any(|r| r.len() != n) {
            return Err(Error::shape(format!("expected a {n}×{n} table of expressions")));
        }
        for (i, row) in table.iter().enumerate() {
            for j in i + 1..n {
                if row[j] != table[j][i] {
                    return Err(Error::shape(format!(
                        "components ({i},{j}) and ({j},{i}) differ: `{}` vs `{}`",
                        row[j], table[j][i]
                    )));
                }
            }
        }
        let bindings = source.bindings();
        let compiled = table
            .iter()
            .flatten()
            .map(|e| CompiledExpr::compile(e, &bindings))
            .collect::<Result<Vec<_>>>()?;
        Ok(SymmetricField {
            description: description.into(),
            source: FieldSource::Expressions(compiled),
        })
    }

    pub fn value(&self, geo: &GeometryAt) -> Result<DenseTensor> {
        match &self.source {
            FieldSource::Metric => Ok(geo.metric.g.clone()),
            FieldSource::Ricci => Ok(geo.ricci.clone()),
            FieldSource::Constant(t) | FieldSource::PointValues(t) => {
                if t.dim() != geo.dim() {
                    return Err(Error::shape("field dimension does not match the chart"));
                }
                Ok(t.clone())
            }
            FieldSource::Expressions(e) => {
                let data = e.iter().map(|c| c.eval_real(&geo.point)).collect::<Result<Vec<_>>>()?;
                DenseTensor::from_data(geo.dim(), &[Co, Co], data)
            }
            FieldSource::Jet(t) => Ok(t.values()),
        }
    }

    /// Components as a jet around the point, truncated at `order` where the
    /// source allows it.
    pub fn jet(&self, geo: &GeometryAt, order: usize) -> Result<DenseTensor<Taylor>> {
        let trunc = |t: &DenseTensor<Taylor>| t.map(|x| if x.is_constant() { x.clone() } else { x.truncate(order.min(x.order())) });
        match &self.source {
            FieldSource::Metric => Ok(trunc(geo.metric_jet())),
            FieldSource::Ricci => Ok(trunc(geo.ricci_jet())),
            FieldSource::Constant(t) => Ok(t.map(|&v| Taylor::constant(v))),
            FieldSource::PointValues(_) => Err(Error::precondition(format!(
                "`{}` is known only at a point and cannot be differentiated",
                self.description
            ))),
            FieldSource::Expressions(e) => {
                let data = e
                    .iter()
                    .map(|c| c.eval_jet(&geo.point, order))
                    .collect::<Result<Vec<_>>>()?;
                DenseTensor::from_data(geo.dim(), &[Co, Co], data)
            }
            FieldSource::Jet(t) => Ok(trunc(t)),
        }
    }
}

#[derive(Debug, Clone)]
enum VectorSource {
    Constant(Vec<f64>),
    Expressions(Vec<CompiledExpr>),
}

/// A vector field, given by contravariant or covariant components.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub variance: Variance,
    source: VectorSource,
}

/// Causal character of `u` from the sign of `u² = u^a u_a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Causal {
    Timelike,
    Null,
    Spacelike,
}

impl VectorField {
    /// Constant contravariant components `u^a`.
    pub fn constant(v: &[f64]) -> VectorField {
        VectorField {
            variance: Contra,
            source: VectorSource::Constant(v.to_vec()),
        }
    }

    /// Constant covariant components `u_a`.
    pub fn constant_covector(v: &[f64]) -> VectorField {
        VectorField {
            variance: Co,
            source: VectorSource::Constant(v.to_vec()),
        }
    }

    pub fn from_expressions(source: &dyn MetricSource, comps: &[Expr], variance: Variance) -> Result<VectorField> {
        if comps.len() != source.dim() {
            return Err(Error::shape(format!("expected {} vector components", source.dim())));
        }
        let b = source.bindings();
        let compiled = comps.iter().map(|e| CompiledExpr::compile(e, &b)).collect::<Result<Vec<_>>>()?;
        Ok(VectorField {
            variance,
            source: VectorSource::Expressions(compiled),
        })
    }

    fn raw(&self, geo: &GeometryAt) -> Result<Vec<f64>> {
        let v = match &self.source {
            VectorSource::Constant(v) => v.clone(),
            VectorSource::Expressions(e) => e.iter().map(|c| c.eval_real(&geo.point)).collect::<Result<_>>()?,
        };
        if v.len() != geo.dim() {
            return Err(Error::shape("vector dimension does not match the chart"));
        }
        Ok(v)
    }

    /// `u_a`
    pub fn covector(&self, geo: &GeometryAt) -> Result<Vec<f64>> {
        let v = self.raw(geo)?;
        Ok(match self.variance {
            Co => v,
            Contra => geo.metric.lower(&v),
        })
    }

    /// `u^a`
    pub fn vector(&self, geo: &GeometryAt) -> Result<Vec<f64>> {
        let v = self.raw(geo)?;
        Ok(match self.variance {
            Contra => v,
            Co => geo.metric.raise(&v),
        })
    }

    /// `u_a` as a jet.
    pub fn covector_jet(&self, geo: &GeometryAt, order: usize) -> Result<DenseTensor<Taylor>> {
        let n = geo.dim();
        let comps: Vec<Taylor> = match &self.source {
            VectorSource::Constant(v) => v.iter().map(|&x| Taylor::constant(x)).collect(),
            VectorSource::Expressions(e) => e.iter().map(|c| c.eval_jet(&geo.point, order)).collect::<Result<_>>()?,
        };
        if comps.len() != n {
            return Err(Error::shape("vector dimension does not match the chart"));
        }
        let data = match self.variance {
            Co => comps,
            Contra => {
                let g = geo.metric_jet();
                (0..n)
                    .map(|a| {
                        let mut acc = Taylor::constant(0.0);
                        for (b, c) in comps.iter().enumerate() {
                            acc.add_prod(g.get(&[a, b]), c);
                        }
                        acc
                    })
                    .collect()
            }
        };
        DenseTensor::from_data(n, &[Co], data)
    }

    pub fn causal(&self, geo: &GeometryAt) -> Result<Causal> {
        let (lo, up) = (self.covector(geo)?, self.vector(geo)?);
        Ok(causal_of(&lo, &up))
    }
}

pub(crate) fn causal_of(lo: &[f64], up: &[f64]) -> Causal {
    let u2: f64 = lo.iter().zip(up).map(|(a, b)| a * b).sum();
    let size: f64 = lo.iter().map(|x| x * x).sum::<f64>().sqrt() * up.iter().map(|x| x * x).sum::<f64>().sqrt();
    if u2.abs() < 1e-10 * size {
        Causal::Null
    } else if u2 < 0.0 {
        Causal::Timelike
    } else {
        Causal::Spacelike
    }
}

fn vnorm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(bK)_ijkl = b_im K_jkl^m`
pub fn b_dot_k(b: &DenseTensor, k_mixed: &DenseTensor) -> Result<DenseTensor> {
    let n = b.dim();
    DenseTensor::from_fn(n, &[Co, Co, Co, Co], |i| {
        (0..n).map(|m| b.get(&[i[0], m]) * k_mixed.get(&[i[1], i[2], i[3], m])).sum()
    })
}

/// `t_ijkl + t_jkil + t_kijl`
pub fn cyclic3(t: &DenseTensor) -> Result<DenseTensor> {
    DenseTensor::from_fn(t.dim(), t.variance(), |i| {
        let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
        t.get(&[a, b, c, d]) + t.get(&[b, c, a, d]) + t.get(&[c, a, b, d])
    })
}

/// `cyc(b, K)` and the norm of one `bK` term.
pub fn cyclic_sum(b: &DenseTensor, k_mixed: &DenseTensor) -> Result<(DenseTensor, f64)> {
    let bk = b_dot_k(b, k_mixed)?;
    Ok((cyclic3(&bk)?, bk.norm()))
}

fn compat_of(b: &DenseTensor, geo: &GeometryAt, which: Curvature) -> Result<f64> {
    let (cyc, term) = cyclic_sum(b, which.mixed(geo))?;
    Ok(ratio(cyc.norm(), 3.0 * term + b.norm() * geo.floor()))
}

pub fn compat_residual(b: &SymmetricField, geo: &GeometryAt, which: Curvature) -> Result<f64> {
    compat_of(&b.value(geo)?, geo, which)
}

pub fn riemann_compat_residual(b: &SymmetricField, geo: &GeometryAt) -> Result<f64> {
    compat_residual(b, geo, Curvature::Riemann)
}

pub fn weyl_compat_residual(b: &SymmetricField, geo: &GeometryAt) -> Result<f64> {
    compat_residual(b, geo, Curvature::Weyl)
}

/// `(b g⁻¹ Ric)_ab − (Ric g⁻¹ b)_ab`
fn ricci_commutator_tensor(b: &DenseTensor, geo: &GeometryAt) -> Result<(DenseTensor, f64)> {
    let n = geo.dim();
    let gi = &geo.metric.g_inv;
    let prod = |x: &DenseTensor, y: &DenseTensor| {
        DenseTensor::from_fn(n, &[Co, Co], |i| {
            let mut s = 0.0;
            for p in 0..n {
                for q in 0..n {
                    s += x.get(&[i[0], p]) * gi.get(&[p, q]) * y.get(&[q, i[1]]);
                }
            }
            s
        })
    };
    let br = prod(b, &geo.ricci)?;
    let rb = prod(&geo.ricci, b)?;
    let scale = br.norm() + rb.norm();
    Ok((br.try_sub(&rb)?, scale))
}

/// Relative norm of the commutator `[b, Ric]`.
pub fn ricci_commutator_norm(b: &SymmetricField, geo: &GeometryAt) -> Result<f64> {
    let bv = b.value(geo)?;
    let (c, scale) = ricci_commutator_tensor(&bv, geo)?;
    Ok(ratio(c.norm(), scale + bv.norm() * geo.floor()))
}

/// Residual of the algebraic identity linking `cyc(b, C)`, `cyc(b, R)` and
/// the Ricci commutator. It holds for every symmetric `b`.
pub fn bridge_identity_residual(b: &SymmetricField, geo: &GeometryAt) -> Result<f64> {
    let bv = b.value(geo)?;
    let n = geo.dim();
    if n < 3 {
        return Err(Error::precondition("the Weyl tensor needs n >= 3"));
    }
    let (cyc_c, tc) = cyclic_sum(&bv, &geo.weyl_mixed)?;
    let (cyc_r, tr) = cyclic_sum(&bv, &geo.riemann_mixed)?;
    let ric_up = geo.ricci_mixed()?; // R_a^m
    // w_ij = b_im R_j^m
    let w = DenseTensor::from_fn(n, &[Co, Co], |i| (0..n).map(|m| bv.get(&[i[0], m]) * ric_up.get(&[i[1], m])).sum::<f64>())?;
    let g = &geo.metric.g;
    let anti = |x: usize, y: usize| -> f64 { w.get(&[x, y]) - w.get(&[y, x]) };
    let extra = DenseTensor::from_fn(n, &[Co, Co, Co, Co], |i| {
        let (ii, j, k, l) = (i[0], i[1], i[2], i[3]);
        (g.get(&[k, l]) * anti(ii, j) + g.get(&[ii, l]) * anti(j, k) + g.get(&[j, l]) * anti(k, ii)) / (n as f64 - 2.0)
    })?;
    let rhs = cyc_r.try_add(&extra)?;
    let diff = cyc_c.try_sub(&rhs)?;
    let den = 3.0 * (tc + tr) + extra.norm() + bv.norm() * geo.floor();
    Ok(ratio(diff.norm(), den))
}

/// Codazzi deviation `𝒞_ijk = ∇_i b_jk − ∇_j b_ik`.
pub fn codazzi_deviation(b: &SymmetricField, geo: &GeometryAt) -> Result<DenseTensor> {
    let jet = b.jet(geo, METRIC_ORDER - 1)?;
    geo.cov_deriv(&jet)?.antisymmetrize_pair(0, 1)
}

/// `‖𝒞‖ / (‖∂b‖ + ‖Γ‖‖b‖)`
pub fn codazzi_residual(b: &SymmetricField, geo: &GeometryAt) -> Result<f64> {
    let jet = b.jet(geo, METRIC_ORDER - 1)?;
    let dev = geo.cov_deriv(&jet)?.antisymmetrize_pair(0, 1)?;
    Ok(ratio(dev.norm(), geo.derivative_scale(&jet)?))
}

/// The Codazzi deviation of Ricci against `−∇_m R_abc^m`.
pub fn contracted_bianchi_residual(geo: &GeometryAt) -> Result<f64> {
    let dev = codazzi_deviation(&SymmetricField::ricci(), geo)?;
    let div = geo.riemann_divergence_jet()?.values().scale(-1.0);
    let den = dev.norm() + div.norm() + geo.scales[1];
    Ok(ratio(dev.try_sub(&div)?.norm(), den))
}

/// `∇_i𝒞_jkl + cyclic = cyc(b, R)` for a field known to second order.
pub fn codazzi_cyclic_identity_residual(b: &SymmetricField, geo: &GeometryAt) -> Result<f64> {
    let jet = b.jet(geo, METRIC_ORDER - 1)?;
    let dev = geo.cov_deriv_field(&jet)?.antisymmetrize_pair(0, 1)?;
    let d = geo.cov_deriv(&dev)?; // [i][j][k][l] = ∇_i 𝒞_jkl
    let lhs = cyclic3(&d)?;
    let (rhs, term) = cyclic_sum(&jet.values(), &geo.riemann_mixed)?;
    let den = 3.0 * d.norm() + 3.0 * term + jet.values().norm() * geo.scales[2];
    Ok(ratio(lhs.try_sub(&rhs)?.norm(), den))
}

/// Lovelock's identity:
/// `−(∇_a∇_m R_bcd^m + cyclic) = R_am R_bcd^m + cyclic`.
pub fn lovelock_residual(geo: &GeometryAt) -> Result<f64> {
    let div = geo.riemann_divergence_jet()?;
    let d = geo.cov_deriv(&div)?;
    let lhs = cyclic3(&d)?.scale(-1.0);
    let (rhs, term) = cyclic_sum(&geo.ricci, &geo.riemann_mixed)?;
    let den = 3.0 * d.norm() + 3.0 * term + geo.scales[2];
    Ok(ratio(lhs.try_sub(&rhs)?.norm(), den))
}

/// Energy-momentum tensor from Einstein's equation, `T = (Ric − R g/2)/(8π)`.
pub fn stress_energy(geo: &GeometryAt) -> Result<DenseTensor> {
    let eight_pi = 8.0 * std::f64::consts::PI;
    Ok(geo.ricci.try_sub(&geo.metric.g.scale(geo.scalar / 2.0))?.scale(1.0 / eight_pi))
}

/// `∇_i∇_m C_jkl^m + cyclic = −8π (n−3)/(n−2) cyc(T, C)`.
pub fn dpi_residual(geo: &GeometryAt) -> Result<f64> {
    let n = geo.dim() as f64;
    if n < 3.0 {
        return Err(Error::precondition("the Weyl tensor needs n >= 3"));
    }
    let d = geo.cov_deriv(&geo.weyl_divergence_jet()?)?;
    let lhs = cyclic3(&d)?;
    let t = stress_energy(geo)?;
    let (cyc, term) = cyclic_sum(&t, &geo.weyl_mixed)?;
    let k = -8.0 * std::f64::consts::PI * (n - 3.0) / (n - 2.0);
    let rhs = cyc.scale(k);
    let den = 3.0 * d.norm() + 3.0 * k.abs() * term + geo.scales[2];
    Ok(ratio(lhs.try_sub(&rhs)?.norm(), den))
}

/// Outcome of the `b_im K_jkl^m = ω b_lm K_jki^m` test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PermClass {
    /// ω = +1
    Permutable,
    /// ω = −1
    Skew,
    /// `b_im K_jkl^m = 0`
    Annihilating,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Permutability {
    pub class: PermClass,
    pub residual_annihilating: f64,
    pub residual_plus: f64,
    pub residual_minus: f64,
}

pub fn permutability_class(b: &SymmetricField, geo: &GeometryAt, which: Curvature, tol: f64) -> Result<Permutability> {
    let bv = b.value(geo)?;
    permutability_of(&bv, which.mixed(geo), bv.norm() * geo.floor(), tol)
}

pub(crate) fn permutability_of(b: &DenseTensor, k_mixed: &DenseTensor, floor: f64, tol: f64) -> Result<Permutability> {
    let bk = b_dot_k(b, k_mixed)?;
    let swapped = bk.permute(&[3, 1, 2, 0])?; // b_lm K_jki^m
    let scale = bk.norm();
    let residual_annihilating = ratio(scale, b.norm() * k_mixed.norm() + floor);
    let residual_plus = ratio(bk.try_sub(&swapped)?.norm(), 2.0 * scale + floor);
    let residual_minus = ratio(bk.try_add(&swapped)?.norm(), 2.0 * scale + floor);
    let class = if residual_annihilating < tol {
        PermClass::Annihilating
    } else if residual_plus < tol {
        PermClass::Permutable
    } else if residual_minus < tol {
        PermClass::Skew
    } else {
        PermClass::None
    };
    Ok(Permutability {
        class,
        residual_annihilating,
        residual_plus,
        residual_minus,
    })
}

/// Eigenpairs of `b^i_j`.
pub fn mixed_eigenpairs(b: &DenseTensor, geo: &GeometryAt) -> Result<Vec<(f64, Vec<f64>)>> {
    let mixed = b.raise_lower(0, &geo.metric)?;
    Ok(linalg::real_eigenvectors(&mixed.to_matrix()?))
}

/// Largest `|K_jklm X^l Y^m|` over eigenvector pairs with `λ + μ ≠ 0`,
/// relative to `‖K‖|X||Y|`. Vanishes for permutable `b`.
pub fn permutable_eigen_check(b: &SymmetricField, geo: &GeometryAt, which: Curvature) -> Result<f64> {
    let bv = b.value(geo)?;
    let pairs = mixed_eigenpairs(&bv, geo)?;
    let scale = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let k = which.covariant(geo);
    let n = geo.dim();
    let mut worst: f64 = 0.0;
    for (l, x) in &pairs {
        for (m, y) in &pairs {
            if (l + m).abs() <= 1e-6 * scale {
                continue;
            }
            let v = DenseTensor::from_fn(n, &[Co, Co], |i| {
                let mut s = 0.0;
                for a in 0..n {
                    for c in 0..n {
                        s += k.get(&[i[0], i[1], a, c]) * x[a] * y[c];
                    }
                }
                s
            })?;
            worst = worst.max(ratio(v.norm(), (k.norm() + geo.floor()) * vnorm(x) * vnorm(y)));
        }
    }
    Ok(worst)
}

/// `K_jkl^m u_m`
fn k_dot_u(k_mixed: &DenseTensor, u: &[f64]) -> Result<DenseTensor> {
    let n = k_mixed.dim();
    DenseTensor::from_fn(n, &[Co, Co, Co], |i| (0..n).map(|m| k_mixed.get(&[i[0], i[1], i[2], m]) * u[m]).sum())
}

fn vector_cyclic(u: &[f64], k_mixed: &DenseTensor) -> Result<(DenseTensor, f64)> {
    let ku = k_dot_u(k_mixed, u)?;
    let n = u.len();
    let t = DenseTensor::from_fn(n, &[Co, Co, Co, Co], |i| u[i[0]] * ku.get(&[i[1], i[2], i[3]]))?;
    Ok((cyclic3(&t)?, t.norm()))
}

/// `(u_i K_jkl^m + u_j K_kil^m + u_k K_ijl^m) u_m`
pub fn vector_compat_residual(u: &VectorField, geo: &GeometryAt, which: Curvature) -> Result<f64> {
    let lo = u.covector(geo)?;
    vector_compat_of(&lo, geo, which)
}

pub(crate) fn vector_compat_of(lo: &[f64], geo: &GeometryAt, which: Curvature) -> Result<f64> {
    let (cyc, term) = vector_cyclic(lo, which.mixed(geo))?;
    let un = vnorm(lo);
    Ok(ratio(cyc.norm(), 3.0 * term + un * un * geo.floor()))
}

/// `u_[a R_b]^m u_m`, relative.
pub fn vector_ricci_residual(u: &VectorField, geo: &GeometryAt) -> Result<f64> {
    let lo = u.covector(geo)?;
    let (t, scale) = ricci_wedge(&lo, geo)?;
    let un = vnorm(&lo);
    Ok(ratio(t.norm(), scale + un * un * geo.floor()))
}

fn ricci_wedge(lo: &[f64], geo: &GeometryAt) -> Result<(DenseTensor, f64)> {
    let n = lo.len();
    let up = geo.metric.raise(lo);
    let ru: Vec<f64> = (0..n).map(|a| (0..n).map(|m| geo.ricci.get(&[a, m]) * up[m]).sum()).collect();
    let t = DenseTensor::from_fn(n, &[Co, Co], |i| lo[i[0]] * ru[i[1]] - lo[i[1]] * ru[i[0]])?;
    Ok((t, 2.0 * vnorm(lo) * vnorm(&ru)))
}

/// The identity for `u⊗u` relating the Weyl and Riemann vector cyclic sums.
/// Holds for every `u`.
pub fn vector_identity_residual(u: &VectorField, geo: &GeometryAt) -> Result<f64> {
    let lo = u.covector(geo)?;
    let n = geo.dim();
    if n < 3 {
        return Err(Error::precondition("the Weyl tensor needs n >= 3"));
    }
    let (lhs, tc) = vector_cyclic(&lo, &geo.weyl_mixed)?;
    let (cyc_r, tr) = vector_cyclic(&lo, &geo.riemann_mixed)?;
    let (w, _) = ricci_wedge(&lo, geo)?; // u_[a R_b]m u^m
    let g = &geo.metric.g;
    let extra = DenseTensor::from_fn(n, &[Co, Co, Co, Co], |i| {
        let (a, b, c, l) = (i[0], i[1], i[2], i[3]);
        (g.get(&[c, l]) * w.get(&[a, b]) + g.get(&[a, l]) * w.get(&[b, c]) + g.get(&[b, l]) * w.get(&[c, a])) / (n as f64 - 2.0)
    })?;
    let diff = lhs.try_sub(&cyc_r.try_add(&extra)?)?;
    let un = vnorm(&lo);
    Ok(ratio(diff.norm(), 3.0 * (tc + tr) + extra.norm() + un * un * geo.floor()))
}

/// Symmetric `D` of a compatible non-null vector with its checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DTensor {
    pub d: DenseTensor,
    /// `K_abcm u^m − (u_a D_bc − u_b D_ac)`, relative.
    pub reconstruction_residual: f64,
    /// `D_ab u^b − λ u_a` with the Rayleigh quotient `λ`, relative.
    pub eigen_residual: f64,
    pub eigenvalue: f64,
}

/// `D_jl = K_ijlm u^i u^m / u²` and the reconstruction of `K_abcm u^m`.
pub fn d_tensor(u: &VectorField, geo: &GeometryAt, which: Curvature) -> Result<DTensor> {
    let lo = u.covector(geo)?;
    let up = u.vector(geo)?;
    let u2 = dot(&lo, &up);
    if u2.abs() <= 1e-10 * vnorm(&lo) * vnorm(&up) {
        return Err(Error::precondition("the D tensor needs u² ≠ 0"));
    }
    let n = geo.dim();
    let k = which.covariant(geo);
    let d = DenseTensor::from_fn(n, &[Co, Co], |i| {
        let mut s = 0.0;
        for a in 0..n {
            for m in 0..n {
                s += k.get(&[a, i[0], i[1], m]) * up[a] * up[m];
            }
        }
        s / u2
    })?;
    let ku = DenseTensor::from_fn(n, &[Co, Co, Co], |i| (0..n).map(|m| k.get(&[i[0], i[1], i[2], m]) * up[m]).sum())?;
    let rebuilt = DenseTensor::from_fn(n, &[Co, Co, Co], |i| {
        let (a, b, c) = (i[0], i[1], i[2]);
        lo[a] * d.get(&[b, c]) - lo[b] * d.get(&[a, c])
    })?;
    let un = vnorm(&lo);
    let reconstruction_residual = ratio(
        ku.try_sub(&rebuilt)?.norm(),
        ku.norm() + rebuilt.norm() + un * vnorm(&up) * geo.floor(),
    );
    let du: Vec<f64> = (0..n).map(|a| (0..n).map(|b| d.get(&[a, b]) * up[b]).sum()).collect();
    let eigenvalue = dot(&du, &up) / u2;
    let dev: Vec<f64> = du.iter().zip(&lo).map(|(x, y)| x - eigenvalue * y).collect();
    let eigen_residual = ratio(vnorm(&dev), vnorm(&du) + eigenvalue.abs() * un + d.norm() * vnorm(&up) * 1e-3);
    Ok(DTensor {
        d,
        reconstruction_residual,
        eigen_residual,
        eigenvalue,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerdzinskiShen {
    /// Largest relative `|C_abcd X^a Y^b Z^c|` over admissible triples.
    pub max_contraction: f64,
    pub admissible_triples: usize,
    /// Complex eigenvalues of `b^i_j` were present and skipped.
    pub skipped_complex: bool,
    /// No admissible triple exists.
    pub vacuous: bool,
}

/// Checks `C_abcd X^a Y^b Z^c = 0` for eigenvectors with `ν ≠ λ, μ`.
pub fn derdzinski_shen_check(b: &SymmetricField, geo: &GeometryAt) -> Result<DerdzinskiShen> {
    let bv = b.value(geo)?;
    let pairs = mixed_eigenpairs(&bv, geo)?;
    let n = geo.dim();
    let skipped_complex = pairs.len() < n;
    let spread = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let c = &geo.weyl_cov;
    let cscale = c.norm() + geo.floor();
    let mut max_contraction: f64 = 0.0;
    let mut admissible_triples = 0;
    for (l, x) in &pairs {
        for (m, y) in &pairs {
            for (nu, z) in &pairs {
                let gap = 1e-6 * spread;
                if (nu - l).abs() <= gap || (nu - m).abs() <= gap {
                    continue;
                }
                admissible_triples += 1;
                let v: Vec<f64> = (0..n)
                    .map(|d| {
                        let mut s = 0.0;
                        for a in 0..n {
                            for bb in 0..n {
                                for cc in 0..n {
                                    s += c.get(&[a, bb, cc, d]) * x[a] * y[bb] * z[cc];
                                }
                            }
                        }
                        s
                    })
                    .collect();
                max_contraction = max_contraction.max(ratio(vnorm(&v), cscale * vnorm(x) * vnorm(y) * vnorm(z)));
            }
        }
    }
    Ok(DerdzinskiShen {
        max_contraction,
        admissible_triples,
        skipped_complex,
        vacuous: admissible_triples == 0,
    })
}

/// `K_abcd w^a v^b u^c`, relative to `‖K‖|w||v||u|`.
pub fn orthogonal_contraction(u: &[f64], v: &[f64], w: &[f64], geo: &GeometryAt, which: Curvature) -> Result<f64> {
    let n = geo.dim();
    let k = which.covariant(geo);
    let out: Vec<f64> = (0..n)
        .map(|d| {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        s += k.get(&[a, b, c, d]) * w[a] * v[b] * u[c];
                    }
                }
            }
            s
        })
        .collect();
    Ok(ratio(vnorm(&out), (k.norm() + geo.floor()) * vnorm(u) * vnorm(v) * vnorm(w)))
}

/// The three conditions of Hall's theorem as relative residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hall {
    /// `u_[a R_b]clm u^c u^m + u² R_ablm u^m`
    pub a: f64,
    /// Same with the Weyl tensor.
    pub b: f64,
    /// `u_[a R_b]m u^m`
    pub c: f64,
}

fn hall_form(lo: &[f64], up: &[f64], k: &DenseTensor) -> Result<(f64, f64)> {
    let n = lo.len();
    let u2 = dot(lo, up);
    // q_bl = K_bclm u^c u^m, s_abl = K_ablm u^m
    let q = DenseTensor::from_fn(n, &[Co, Co], |i| {
        let mut s = 0.0;
        for c in 0..n {
            for m in 0..n {
                s += k.get(&[i[0], c, i[1], m]) * up[c] * up[m];
            }
        }
        s
    })?;
    let s = DenseTensor::from_fn(n, &[Co, Co, Co], |i| (0..n).map(|m| k.get(&[i[0], i[1], i[2], m]) * up[m]).sum())?;
    let wedge = DenseTensor::from_fn(n, &[Co, Co, Co], |i| lo[i[0]] * q.get(&[i[1], i[2]]) - lo[i[1]] * q.get(&[i[0], i[2]]))?;
    let total = wedge.try_add(&s.scale(u2))?;
    Ok((total.norm(), wedge.norm() + u2.abs() * s.norm()))
}

pub fn hall_conditions(u: &VectorField, geo: &GeometryAt) -> Result<Hall> {
    let lo = u.covector(geo)?;
    let up = u.vector(geo)?;
    let un = vnorm(&lo) * vnorm(&up);
    let floor = un * un.sqrt() * geo.floor();
    let (na, sa) = hall_form(&lo, &up, &geo.riemann_cov)?;
    let (nb, sb) = hall_form(&lo, &up, &geo.weyl_cov)?;
    let (w, sc) = ricci_wedge(&lo, geo)?;
    Ok(Hall {
        a: ratio(na, sa + floor),
        b: ratio(nb, sb + floor),
        c: ratio(w.norm(), sc + un * geo.floor()),
    })
}

/// One pair of the pureness relation `R_ij^kl X^i∧Y^j = λ X^k∧Y^l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PurePair {
    pub a: usize,
    pub b: usize,
    pub lambda: f64,
    pub residual: f64,
}

pub fn pureness_check(geo: &GeometryAt, basis: &[Vec<f64>]) -> Result<Vec<PurePair>> {
    let n = geo.dim();
    if basis.len() != n || basis.iter().any(|v| v.len() != n) {
        return Err(Error::shape(format!("pureness needs {n} basis vectors of length {n}")));
    }
    for (a, x) in basis.iter().enumerate() {
        for (b, y) in basis.iter().enumerate() {
            let d = geo.metric.dot(x, y);
            let ok = if a == b { (d.abs() - 1.0).abs() < 1e-9 } else { d.abs() < 1e-9 };
            if !ok {
                return Err(Error::precondition(format!("basis is not orthonormal at ({a},{b}): {d:.3e}")));
            }
        }
    }
    // R_ij^kl
    let r = geo.riemann_cov.raise_lower(2, &geo.metric)?.raise_lower(3, &geo.metric)?;
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let (x, y) = (&basis[a], &basis[b]);
            let f = DenseTensor::from_fn(n, &[Contra, Contra], |i| x[i[0]] * y[i[1]] - x[i[1]] * y[i[0]])?;
            let m = DenseTensor::from_fn(n, &[Contra, Contra], |kl| {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += r.get(&[i, j, kl[0], kl[1]]) * f.get(&[i, j]);
                    }
                }
                s
            })?;
            let ff: f64 = f.data().iter().map(|v| v * v).sum();
            let lambda = m.data().iter().zip(f.data()).map(|(p, q)| p * q).sum::<f64>() / ff;
            let dev = m.try_sub(&f.scale(lambda))?;
            let residual = ratio(dev.norm(), m.norm() + lambda.abs() * f.norm() + geo.floor() * f.norm());
            out.push(PurePair { a, b, lambda, residual });
        }
    }
    Ok(out)
}

/// Residuals of `∇_k u_l = A g_kl + B u_k u_l` and of its integrability
/// condition `R_jkl^m u_m = AB(u_k g_jl − u_j g_kl)` (the sign follows from
/// `[∇_a,∇_b]u_c = R_abc^m u_m`).
pub fn concircular_residual(u: &VectorField, a: f64, b: f64, geo: &GeometryAt) -> Result<(f64, f64)> {
    let n = geo.dim();
    let jet = u.covector_jet(geo, METRIC_ORDER - 1)?;
    let lo = jet.values();
    let lo = lo.data();
    let du = geo.cov_deriv(&jet)?;
    let g = &geo.metric.g;
    let model = DenseTensor::from_fn(n, &[Co, Co], |i| a * g.get(&[i[0], i[1]]) + b * lo[i[0]] * lo[i[1]])?;
    let defining = ratio(du.try_sub(&model)?.norm(), du.norm() + model.norm() + geo.derivative_scale(&jet)?);
    let ru = k_dot_u(&geo.riemann_mixed, lo)?;
    let model = DenseTensor::from_fn(n, &[Co, Co, Co], |i| {
        let (j, k, l) = (i[0], i[1], i[2]);
        a * b * (lo[k] * g.get(&[j, l]) - lo[j] * g.get(&[k, l]))
    })?;
    let curvature = ratio(ru.try_sub(&model)?.norm(), ru.norm() + model.norm() + vnorm(lo) * geo.floor());
    Ok((defining, curvature))
}

/// `R_abc^m x_dm + R_abd^m x_cm`, relative.
pub fn parallel_solution_residual(x: &SymmetricField, geo: &GeometryAt) -> Result<f64> {
    let xv = x.value(geo)?;
    let n = geo.dim();
    let r = &geo.riemann_mixed;
    let t = DenseTensor::from_fn(n, &[Co, Co, Co, Co], |i| {
        (0..n).map(|m| r.get(&[i[0], i[1], i[2], m]) * xv.get(&[i[3], m])).sum()
    })?;
    let sum = t.try_add(&t.permute(&[0, 1, 3, 2])?)?;
    Ok(ratio(sum.norm(), 2.0 * t.norm() + xv.norm() * geo.floor()))
}

/// `K_kl[i^m u_j] u_m`, relative; zero for permutable vectors.
pub fn vector_permutability_residual(u: &VectorField, geo: &GeometryAt, which: Curvature) -> Result<f64> {
    let lo = u.covector(geo)?;
    vector_permutability_of(&lo, geo, which)
}

pub(crate) fn vector_permutability_of(lo: &[f64], geo: &GeometryAt, which: Curvature) -> Result<f64> {
    let n = geo.dim();
    let ku = k_dot_u(which.mixed(geo), lo)?;
    let t = DenseTensor::from_fn(n, &[Co, Co, Co, Co], |i| ku.get(&[i[0], i[1], i[2]]) * lo[i[3]])?;
    let anti = t.antisymmetrize_pair(2, 3)?;
    let un = vnorm(lo);
    Ok(ratio(anti.norm(), 2.0 * t.norm() + un * un * geo.floor()))
}

/// Summary of one symmetric tensor against the curvature at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatReport {
    pub description: String,
    pub residual_riemann: f64,
    pub residual_weyl: f64,
    pub ricci_commutator_norm: f64,
    pub bridge_residual: f64,
    pub permutability_riemann: Permutability,
    pub permutability_weyl: Permutability,
    pub riemann_compatible: bool,
    pub weyl_compatible: bool,
    pub commutes_with_ricci: bool,
}

pub fn compat_report(b: &SymmetricField, geo: &GeometryAt, tol: f64) -> Result<CompatReport> {
    let residual_riemann = riemann_compat_residual(b, geo)?;
    let residual_weyl = weyl_compat_residual(b, geo)?;
    let ricci_commutator_norm = ricci_commutator_norm(b, geo)?;
    Ok(CompatReport {
        description: b.description.clone(),
        residual_riemann,
        residual_weyl,
        ricci_commutator_norm,
        bridge_residual: bridge_identity_residual(b, geo)?,
        permutability_riemann: permutability_class(b, geo, Curvature::Riemann, tol)?,
        permutability_weyl: permutability_class(b, geo, Curvature::Weyl, tol)?,
        riemann_compatible: residual_riemann < tol,
        weyl_compatible: residual_weyl < tol,
        commutes_with_ricci: ricci_commutator_norm < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::MetricSpec;

    fn spec(coords: &[&str], params: &[(&str, f64)], entries: &[(usize, usize, &str)], sig: (usize, usize)) -> MetricSpec {
        let n = coords.len();
        let entries = entries.iter().map(|(i, j, s)| (*i, *j, parse(s).unwrap())).collect();
        MetricSpec::new("test", coords, params, entries, sig, vec![(0.5, 1.0); n]).unwrap()
    }

    fn schwarzschild() -> MetricSpec {
        spec(
            &["t", "r", "theta", "phi"],
            &[("M", 1.0)],
            &[
                (0, 0, "-(1 - 2*M/r)"),
                (1, 1, "1/(1 - 2*M/r)"),
                (2, 2, "r^2"),
                (3, 3, "r^2*sin(theta)^2"),
            ],
            (3, 1),
        )
    }

    fn generic() -> MetricSpec {
        spec(
            &["t", "x", "y", "z"],
            &[],
            &[
                (0, 0, "-(1 + 0.1*x^2 + 0.05*y*z)"),
                (0, 1, "0.1*sin(y)"),
                (1, 1, "1 + 0.2*t*t"),
                (1, 2, "0.05*x*z"),
                (2, 2, "exp(0.1*x)"),
                (3, 3, "1 + 0.1*cos(t + y)"),
                (2, 3, "0.03*t"),
            ],
            (3, 1),
        )
    }

    fn sym(vals: &[f64]) -> DenseTensor {
        let n = (vals.len() as f64).sqrt() as usize;
        let t = DenseTensor::from_data(n, &[Co, Co], vals.to_vec()).unwrap();
        t.try_add(&t.permute(&[1, 0]).unwrap()).unwrap().scale(0.5)
    }

    #[test]
    fn metric_is_compatible_and_skew() {
        let geo = GeometryAt::new(&schwarzschild(), &[0.0, 4.0, 1.0, 0.3]).unwrap();
        let g = SymmetricField::metric();
        assert!(riemann_compat_residual(&g, &geo).unwrap() < 1e-12);
        assert!(weyl_compat_residual(&g, &geo).unwrap() < 1e-12);
        let p = permutability_class(&g, &geo, Curvature::Riemann, 1e-9).unwrap();
        assert_eq!(p.class, PermClass::Skew);
    }

    #[test]
    fn identities_hold_for_arbitrary_b() {
        let geo = GeometryAt::new(&generic(), &[0.3, 0.2, -0.4, 0.5]).unwrap();
        let b = SymmetricField::point_values(
            sym(&[1.0, 0.3, -0.2, 0.5, 0.7, 2.0, 0.1, -0.6, 0.2, 0.4, 3.0, 0.9, -1.1, 0.8, 0.25, -0.5]),
            "b",
        )
        .unwrap();
        assert!(bridge_identity_residual(&b, &geo).unwrap() < 1e-12);
        assert!(riemann_compat_residual(&b, &geo).unwrap() > 1e-3);
        let u = VectorField::constant(&[1.0, 0.2, -0.3, 0.4]);
        assert!(vector_identity_residual(&u, &geo).unwrap() < 1e-12);
        assert!(lovelock_residual(&geo).unwrap() < 1e-10);
        assert!(dpi_residual(&geo).unwrap() < 1e-10);
        assert!(contracted_bianchi_residual(&geo).unwrap() < 1e-10);
    }

    #[test]
    fn codazzi_cyclic_identity_on_expression_field() {
        let s = generic();
        let geo = GeometryAt::new(&s, &[0.3, 0.2, -0.4, 0.5]).unwrap();
        let e = |t: &str| parse(t).unwrap();
        let table = vec![
            vec![e("x*y"), e("sin(t)"), e("0"), e("z^2")],
            vec![e("sin(t)"), e("1 + y^3"), e("t*z"), e("0")],
            vec![e("0"), e("t*z"), e("exp(x)"), e("y")],
            vec![e("z^2"), e("0"), e("y"), e("2")],
        ];
        let b = SymmetricField::from_expressions(&s, &table, "b").unwrap();
        assert!(codazzi_cyclic_identity_residual(&b, &geo).unwrap() < 1e-10);
        assert!(codazzi_residual(&SymmetricField::metric(), &geo).unwrap() < 1e-12);
        assert!(codazzi_residual(&b, &geo).unwrap() > 1e-3);
    }

    #[test]
    fn static_observer_is_weyl_compatible() {
        let geo = GeometryAt::new(&schwarzschild(), &[0.0, 5.0, 1.2, 0.0]).unwrap();
        let u = VectorField::constant(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(u.causal(&geo).unwrap(), Causal::Timelike);
        assert!(vector_compat_residual(&u, &geo, Curvature::Weyl).unwrap() < 1e-12);
        let d = d_tensor(&u, &geo, Curvature::Weyl).unwrap();
        assert!(d.reconstruction_residual < 1e-12, "{}", d.reconstruction_residual);
        assert!(d.eigen_residual < 1e-12);
        let boosted = VectorField::constant(&[1.0, 0.1, 0.05, 0.02]);
        assert!(vector_compat_residual(&boosted, &geo, Curvature::Weyl).unwrap() > 1e-3);
        assert!(d_tensor(&boosted, &geo, Curvature::Weyl).unwrap().reconstruction_residual > 1e-3);
    }

    #[test]
    fn hyperbolic_concircular_sign() {
        // dx² + e^{2x}(dy² + dz²): u = dx has ∇u = g − u⊗u and K = −1
        let s = spec(&["x", "y", "z"], &[], &[(0, 0, "1"), (1, 1, "exp(2*x)"), (2, 2, "exp(2*x)")], (3, 0));
        let geo = GeometryAt::new(&s, &[0.3, 0.1, -0.2]).unwrap();
        let u = VectorField::constant_covector(&[1.0, 0.0, 0.0]);
        let (d, c) = concircular_residual(&u, 1.0, -1.0, &geo).unwrap();
        assert!(d < 1e-13 && c < 1e-13, "{d} {c}");
        let (_, wrong) = concircular_residual(&u, 1.0, 1.0, &geo).unwrap();
        assert!(wrong > 0.1);
        assert!(vector_compat_residual(&u, &geo, Curvature::Riemann).unwrap() < 1e-13);
    }

    #[test]
    fn pureness_of_constant_curvature() {
        let s = spec(&["x", "y", "z"], &[], &[(0, 0, "1"), (1, 1, "exp(2*x)"), (2, 2, "exp(2*x)")], (3, 0));
        let p = [0.3, 0.1, -0.2];
        let geo = GeometryAt::new(&s, &p).unwrap();
        let e = (0.3f64).exp();
        let basis = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0 / e, 0.0], vec![0.0, 0.0, 1.0 / e]];
        for pair in pureness_check(&geo, &basis).unwrap() {
            assert!(pair.residual < 1e-12);
            assert!((pair.lambda - 2.0 * geo.scalar / 6.0).abs() < 1e-12);
        }
        assert!(pureness_check(&geo, &vec![vec![1.0, 0.0, 0.0]; 3]).is_err());
    }

    #[test]
    fn parallel_solution_trivial_case() {
        let geo = GeometryAt::new(&generic(), &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let x = SymmetricField::point_values(geo.metric.g.scale(2.5), "phi g").unwrap();
        assert!(parallel_solution_residual(&x, &geo).unwrap() < 1e-13);
        let r = SymmetricField::point_values(sym(&[1.0, 2.0, 0.0, 0.0, 2.0, -1.0, 0.3, 0.0, 0.0, 0.3, 0.5, 0.1, 0.0, 0.0, 0.1, 4.0]), "x").unwrap();
        assert!(parallel_solution_residual(&r, &geo).unwrap() > 1e-3);
    }

    #[test]
    fn asymmetric_field_rejected() {
        let t = DenseTensor::from_data(2, &[Co, Co], vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(SymmetricField::constant(t, "bad").is_err());
    }
}
