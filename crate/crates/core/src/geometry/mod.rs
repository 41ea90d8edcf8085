//! Curvature of a coordinate metric at a point.
//!
//! Sign conventions: `[∇_a, ∇_b] u_c = R_abc^m u_m`, `R_ab = R_amb^m`,
//! `R_jklm = R_jkl^p g_pm`. With these the Ricci scalar of a round sphere is
//! positive. Curvature is obtained from truncated Taylor jets of the metric,
//! so every derivative is exact up to rounding.

pub mod fd;

use crate::error::{Error, Result};
use crate::expr::{Bindings, CompiledExpr, Expr, Taylor};
use crate::residual::ratio;
use crate::tensor::{DenseTensor, MetricAt, Scalar, Variance};

use Variance::{Co, Contra};

/// Anything that yields metric components as Taylor jets around a point.
pub trait MetricSource: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn coords(&self) -> &[String];
    /// Covariant metric components, every coordinate seeded, truncated at `order`.
    fn metric_jet(&self, point: &[f64], order: usize) -> Result<DenseTensor<Taylor>>;
    fn expected_signature(&self) -> Option<(usize, usize)>;
    /// Names resolvable inside auxiliary expressions (fields, potentials).
    fn bindings(&self) -> Bindings;
    /// Default sampling box per coordinate.
    fn sample_ranges(&self) -> Vec<(f64, f64)>;

    fn metric_at(&self, point: &[f64]) -> Result<MetricAt> {
        let g = self.metric_jet(point, 0)?.values();
        let m = MetricAt::new(g)?;
        if let Some(sig) = self.expected_signature() {
            if sig != m.signature {
                return Err(Error::Signature {
                    expected: sig,
                    found: m.signature,
                });
            }
        }
        Ok(m)
    }
}

/// Metric given by expression components in a coordinate chart.
#[derive(Debug, Clone)]
pub struct MetricSpec {
    pub name: String,
    pub coords: Vec<String>,
    pub params: Vec<(String, f64)>,
    /// Full symmetric table of component expressions.
    pub components: Vec<Vec<Expr>>,
    pub signature: (usize, usize),
    pub ranges: Vec<(f64, f64)>,
    compiled: Vec<Vec<CompiledExpr>>,
}

impl MetricSpec {
    /// `entries` lists `(i, j, expr)` for the upper or lower triangle; the
    /// table is closed symmetrically and missing entries are zero.
    pub fn new(
        name: &str,
        coords: &[&str],
        params: &[(&str, f64)],
        entries: Vec<(usize, usize, Expr)>,
        signature: (usize, usize),
        ranges: Vec<(f64, f64)>,
    ) -> Result<MetricSpec> {
        let n = coords.len();
        if !(2..=6).contains(&n) {
            return Err(Error::shape(format!("chart dimension {n} outside 2..=6")));
        }
        if signature.0 + signature.1 != n {
            return Err(Error::shape("signature counts must sum to the dimension"));
        }
        if ranges.len() != n {
            return Err(Error::shape("one sampling range per coordinate is required"));
        }
        let mut table: Vec<Vec<Option<Expr>>> = vec![vec![None; n]; n];
        for (i, j, e) in entries {
            if i >= n || j >= n {
                return Err(Error::shape(format!("component ({i}, {j}) outside dimension {n}")));
            }
            for (a, b) in [(i, j), (j, i)] {
                match &table[a][b] {
                    Some(prev) if *prev != e => {
                        return Err(Error::shape(format!("conflicting components for g {i} {j}")));
                    }
                    _ => table[a][b] = Some(e.clone()),
                }
            }
        }
        let components: Vec<Vec<Expr>> = table
            .into_iter()
            .map(|row| row.into_iter().map(|e| e.unwrap_or(Expr::Num(0.0))).collect())
            .collect();
        let bindings = Bindings::new(coords, params);
        let compiled = components
            .iter()
            .map(|row| row.iter().map(|e| CompiledExpr::compile(e, &bindings)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(MetricSpec {
            name: name.to_string(),
            coords: coords.iter().map(|s| s.to_string()).collect(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            components,
            signature,
            ranges,
            compiled,
        })
    }
}

impl MetricSource for MetricSpec {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.coords.len()
    }

    fn coords(&self) -> &[String] {
        &self.coords
    }

    fn metric_jet(&self, point: &[f64], order: usize) -> Result<DenseTensor<Taylor>> {
        let n = self.dim();
        check_point(point, n)?;
        let mut data = vec![Taylor::constant(0.0); n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.compiled[i][j].eval_jet(point, order)?;
                data[j * n + i] = v.clone();
                data[i * n + j] = v;
            }
        }
        DenseTensor::from_data(n, &[Co, Co], data)
    }

    fn expected_signature(&self) -> Option<(usize, usize)> {
        Some(self.signature)
    }

    fn bindings(&self) -> Bindings {
        Bindings {
            coords: self.coords.clone(),
            params: self.params.clone(),
        }
    }

    fn sample_ranges(&self) -> Vec<(f64, f64)> {
        self.ranges.clone()
    }
}

pub(crate) fn check_point(point: &[f64], n: usize) -> Result<()> {
    if point.len() != n {
        return Err(Error::shape(format!("point has {} coordinates, chart has {n}", point.len())));
    }
    if point.iter().any(|x| !x.is_finite()) {
        return Err(Error::shape("point coordinates must be finite"));
    }
    Ok(())
}

/// Number of algebraically independent curvature scalars, `n(n−1)(n−2)(n+3)/12`.
pub fn scalar_count(n: usize) -> Result<usize> {
    if n < 3 {
        return Err(Error::precondition(format!("scalar count needs n >= 3, got {n}")));
    }
    Ok(n * (n - 1) * (n - 2) * (n + 3) / 12)
}

fn taylor_min_order(t: &DenseTensor<Taylor>) -> Option<usize> {
    t.data().iter().filter(|x| !x.is_constant()).map(|x| x.order()).min()
}

/// Partial derivative of every component, prepended as slot 0.
pub fn partial_jet(t: &DenseTensor<Taylor>) -> Result<DenseTensor<Taylor>> {
    if taylor_min_order(t) == Some(0) {
        return Err(Error::OrderExhausted("cannot differentiate an order-0 field".into()));
    }
    let n = t.dim();
    let mut variance = vec![Co];
    variance.extend_from_slice(t.variance());
    let len = t.data().len();
    let mut data = Vec::with_capacity(n * len);
    for a in 0..n {
        for x in t.data() {
            data.push(x.derivative(a));
        }
    }
    DenseTensor::from_data(n, &variance, data)
}

/// `∇_a T` as a jet one order lower; the derivative slot comes first.
pub fn cov_deriv_jet(t: &DenseTensor<Taylor>, gamma: &DenseTensor<Taylor>) -> Result<DenseTensor<Taylor>> {
    let n = t.dim();
    if gamma.dim() != n {
        return Err(Error::shape("cov_deriv: dimension mismatch"));
    }
    let mut out = partial_jet(t)?;
    let r = t.rank();
    let len = t.data().len();
    let stride: Vec<usize> = (0..r).map(|s| n.pow((r - 1 - s) as u32)).collect();
    let g = gamma.data();
    let td = t.data();
    let mut idx = vec![0usize; r];
    for flat in 0..len {
        let mut rem = flat;
        for s in 0..r {
            idx[s] = rem / stride[s];
            rem %= stride[s];
        }
        for a in 0..n {
            let target = &mut out.data_mut()[a * len + flat];
            for s in 0..r {
                let base = flat - idx[s] * stride[s];
                for p in 0..n {
                    let src = &td[base + p * stride[s]];
                    match t.variance()[s] {
                        // + Γ^{i_s}_{a p} T^{..p..}
                        Contra => {
                            let gam = &g[(idx[s] * n + a) * n + p];
                            target.add_prod(gam, src);
                        }
                        // − Γ^p_{a i_s} T_{..p..}
                        Co => {
                            let gam = g[(p * n + a) * n + idx[s]].scale(-1.0);
                            target.add_prod(&gam, src);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Inverse metric jet from the point inverse by the Neumann series.
fn inverse_jet(g: &DenseTensor<Taylor>, g0_inv: &DenseTensor, order: usize) -> Result<DenseTensor<Taylor>> {
    let n = g.dim();
    let g0inv: Vec<Taylor> = g0_inv.data().iter().map(|&v| Taylor::constant(v)).collect();
    // A = g0⁻¹ δ with δ = g − g(x0)
    let delta: Vec<Taylor> = g.data().iter().map(|x| x.truncate(order).with_value(0.0)).collect();
    let mut a = vec![Taylor::constant(0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = Taylor::constant(0.0);
            for k in 0..n {
                acc.add_prod(&g0inv[i * n + k], &delta[k * n + j]);
            }
            a[i * n + j] = acc;
        }
    }
    let mut result = g0inv.clone();
    let mut term = g0inv.clone();
    for _ in 0..order {
        let mut next = vec![Taylor::constant(0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Taylor::constant(0.0);
                for k in 0..n {
                    acc.add_prod(&a[i * n + k], &term[k * n + j]);
                }
                next[i * n + j] = acc.scale(-1.0);
            }
        }
        for (r, x) in result.iter_mut().zip(&next) {
            *r = &*r + x;
        }
        term = next;
    }
    DenseTensor::from_data(n, &[Contra, Contra], result)
}

/// Jets of the connection and curvature around a point.
#[derive(Debug, Clone)]
pub(crate) struct Jets {
    pub g: DenseTensor<Taylor>,
    pub g_inv: DenseTensor<Taylor>,
    /// Γ^k_ij stored `[k][i][j]`.
    pub gamma: DenseTensor<Taylor>,
    /// R_abc^m stored `[a][b][c][m]`.
    pub riemann: DenseTensor<Taylor>,
    pub ricci: DenseTensor<Taylor>,
    pub scalar: Taylor,
}

/// Metric Taylor order used for full curvature data; four derivatives of
/// the metric reach second covariant derivatives of the curvature.
pub const METRIC_ORDER: usize = 4;

/// Weight of the coordinate curvature scale in residual denominators.
pub const FLOOR_WEIGHT: f64 = 1e-5;

pub(crate) fn curvature_jets(source: &dyn MetricSource, point: &[f64], metric: &MetricAt, order: usize) -> Result<Jets> {
    if order < 2 {
        return Err(Error::OrderExhausted("curvature needs at least second derivatives of the metric".into()));
    }
    let n = source.dim();
    let g = source.metric_jet(point, order)?;
    let g_inv = inverse_jet(&g, &metric.g_inv, order - 1)?;
    let dg = partial_jet(&g)?; // [a][b][c] = ∂_a g_bc
    let dgd = dg.data();
    let gi = g_inv.data();
    let mut first = vec![Taylor::constant(0.0); n * n * n]; // Γ_{m i j}
    for m in 0..n {
        for i in 0..n {
            for j in i..n {
                let v = (&(&dgd[(i * n + j) * n + m] + &dgd[(j * n + i) * n + m]) - &dgd[(m * n + i) * n + j]).scale(0.5);
                first[(m * n + j) * n + i] = v.clone();
                first[(m * n + i) * n + j] = v;
            }
        }
    }
    let mut gamma = vec![Taylor::constant(0.0); n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = Taylor::constant(0.0);
                for m in 0..n {
                    acc.add_prod(&gi[k * n + m], &first[(m * n + i) * n + j]);
                }
                gamma[(k * n + j) * n + i] = acc.clone();
                gamma[(k * n + i) * n + j] = acc;
            }
        }
    }
    let gamma = DenseTensor::from_data(n, &[Contra, Co, Co], gamma)?;
    let dgam = partial_jet(&gamma)?; // [a][m][b][c] = ∂_a Γ^m_bc
    let dg = dgam.data();
    let gm = gamma.data();
    let mut riem = vec![Taylor::constant(0.0); n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            for c in 0..n {
                for m in 0..n {
                    // −∂_aΓ^m_bc + ∂_bΓ^m_ac + Γ^p_ac Γ^m_bp − Γ^p_bc Γ^m_ap
                    let mut acc = &dg[((b * n + m) * n + a) * n + c] - &dg[((a * n + m) * n + b) * n + c];
                    for p in 0..n {
                        acc.add_prod(&gm[(p * n + a) * n + c], &gm[(m * n + b) * n + p]);
                        let neg = gm[(p * n + b) * n + c].scale(-1.0);
                        acc.add_prod(&neg, &gm[(m * n + a) * n + p]);
                    }
                    riem[((a * n + b) * n + c) * n + m] = acc;
                }
            }
        }
    }
    let riemann = DenseTensor::from_data(n, &[Co, Co, Co, Contra], riem)?;
    let ricci = riemann.contract(1, 3)?;
    let mut scalar = Taylor::constant(0.0);
    for a in 0..n {
        for b in 0..n {
            scalar.add_prod(&gi[a * n + b], ricci.get(&[a, b]));
        }
    }
    Ok(Jets {
        g,
        g_inv,
        gamma,
        riemann,
        ricci,
        scalar,
    })
}

/// `T_a^m = T_ab g^bm` for a covariant rank-2 jet.
fn mixed_jet(t: &DenseTensor<Taylor>, g_inv: &DenseTensor<Taylor>) -> Vec<Taylor> {
    let n = t.dim();
    let mut out = vec![Taylor::constant(0.0); n * n];
    for a in 0..n {
        for m in 0..n {
            let mut acc = Taylor::constant(0.0);
            for b in 0..n {
                acc.add_prod(t.get(&[a, b]), g_inv.get(&[b, m]));
            }
            out[a * n + m] = acc;
        }
    }
    out
}

/// Weyl tensor `C_jkl^m` from Riemann, Ricci and the metric (n ≥ 3).
pub(crate) fn weyl_jet(j: &Jets) -> Result<DenseTensor<Taylor>> {
    let n = j.g.dim();
    if n < 3 {
        return Err(Error::precondition("the Weyl tensor needs n >= 3"));
    }
    let nf = n as f64;
    let c1 = 1.0 / (nf - 2.0);
    let c2 = 1.0 / ((nf - 1.0) * (nf - 2.0));
    let ric_up = mixed_jet(&j.ricci, &j.g_inv);
    let rs = j.scalar.scale(c2);
    DenseTensor::from_fn(n, &[Co, Co, Co, Contra], |i| {
        let (a, b, l, m) = (i[0], i[1], i[2], i[3]);
        let mut acc = j.riemann.get(i).clone();
        let mut bracket = Taylor::constant(0.0);
        if a == m {
            bracket = &bracket + j.ricci.get(&[b, l]);
        }
        if b == m {
            bracket = &bracket - j.ricci.get(&[a, l]);
        }
        bracket.add_product(&ric_up[a * n + m], j.g.get(&[b, l]));
        let neg = ric_up[b * n + m].scale(-1.0);
        bracket.add_product(&neg, j.g.get(&[a, l]));
        acc = &acc + &bracket.scale(c1);
        let mut last = Taylor::constant(0.0);
        if a == m {
            last = &last + j.g.get(&[b, l]);
        }
        if b == m {
            last = &last - j.g.get(&[a, l]);
        }
        if a == m || b == m {
            acc = &acc - &(&rs * &last);
        }
        acc
    })
}

/// Lowers the last (contravariant) slot of a rank-4 jet.
fn lower_last(t: &DenseTensor, m: &MetricAt) -> Result<DenseTensor> {
    t.raise_lower(3, m)
}

/// All curvature data at one point.
#[derive(Debug, Clone)]
pub struct GeometryAt {
    pub point: Vec<f64>,
    pub metric: MetricAt,
    pub gamma: DenseTensor,
    pub riemann_mixed: DenseTensor,
    pub riemann_cov: DenseTensor,
    pub ricci: DenseTensor,
    pub scalar: f64,
    pub weyl_mixed: DenseTensor,
    pub weyl_cov: DenseTensor,
    /// Natural magnitudes of curvature-like quantities with 0, 1 and 2
    /// covariant derivatives, built from `Γ` and its partials. Used as
    /// residual floors so that rounding noise in nearly flat charts reads as
    /// small.
    pub scales: [f64; 3],
    pub(crate) jets: Jets,
    pub(crate) weyl_jet: DenseTensor<Taylor>,
}

fn connection_scales(gamma: &DenseTensor<Taylor>) -> Result<[f64; 3]> {
    let n = gamma.dim();
    let norm = |v: &[Taylor]| v.iter().map(|x| x.value() * x.value()).sum::<f64>().sqrt();
    let grad = |v: &[Taylor]| -> Vec<Taylor> { v.iter().flat_map(|x| (0..n).map(move |a| x.derivative(a))).collect() };
    let d1 = grad(gamma.data());
    let d2 = grad(&d1);
    let d3 = grad(&d2);
    let (g0, g1, g2, g3) = (norm(gamma.data()), norm(&d1), norm(&d2), norm(&d3));
    let s0 = g1 + g0 * g0;
    let s1 = g2 + g0 * g1 + g0 * s0;
    let s2 = g3 + g0 * g2 + g1 * g1 + g0 * s1 + s0 * s0;
    Ok([s0, s1, s2])
}

impl GeometryAt {
    pub fn new(source: &dyn MetricSource, point: &[f64]) -> Result<GeometryAt> {
        check_point(point, source.dim())?;
        let metric = source.metric_at(point)?;
        let jets = curvature_jets(source, point, &metric, METRIC_ORDER)?;
        // every 2-manifold is conformally flat
        let weyl_jet = if source.dim() == 2 {
            DenseTensor::zeros(2, &[Co, Co, Co, Contra])?
        } else {
            weyl_jet(&jets)?
        };
        let scales = connection_scales(&jets.gamma)?;
        let riemann_mixed = jets.riemann.values();
        let weyl_mixed = weyl_jet.values();
        Ok(GeometryAt {
            point: point.to_vec(),
            riemann_cov: lower_last(&riemann_mixed, &metric)?,
            weyl_cov: lower_last(&weyl_mixed, &metric)?,
            gamma: jets.gamma.values(),
            ricci: jets.ricci.values(),
            scalar: jets.scalar.value(),
            metric,
            riemann_mixed,
            weyl_mixed,
            scales,
            jets,
            weyl_jet,
        })
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Curvature magnitude floor for residuals built from pieces of the
    /// curvature: `‖R‖ + ‖∂Γ‖ + ‖Γ‖²`.
    pub fn kappa(&self) -> f64 {
        self.riemann_cov.norm() + self.scales[0]
    }

    /// Roundoff allowance for relative residuals: `FLOOR_WEIGHT · κ`.
    pub fn floor(&self) -> f64 {
        FLOOR_WEIGHT * self.kappa()
    }

    /// `‖∂T‖ + ‖Γ‖‖T‖` for a tensor jet: the size of the terms that make up `∇T`.
    pub fn derivative_scale(&self, t: &DenseTensor<Taylor>) -> Result<f64> {
        Ok(partial_jet(t)?.values().norm() + self.gamma.norm() * t.values().norm())
    }

    pub fn gamma_jet(&self) -> &DenseTensor<Taylor> {
        &self.jets.gamma
    }

    pub fn metric_jet(&self) -> &DenseTensor<Taylor> {
        &self.jets.g
    }

    pub fn inverse_metric_jet(&self) -> &DenseTensor<Taylor> {
        &self.jets.g_inv
    }

    pub fn ricci_jet(&self) -> &DenseTensor<Taylor> {
        &self.jets.ricci
    }

    pub fn riemann_jet(&self) -> &DenseTensor<Taylor> {
        &self.jets.riemann
    }

    pub fn weyl_jet(&self) -> &DenseTensor<Taylor> {
        &self.weyl_jet
    }

    pub fn scalar_jet(&self) -> &Taylor {
        &self.jets.scalar
    }

    /// `∇_a T` at the point for a tensor field given as a jet.
    pub fn cov_deriv(&self, field: &DenseTensor<Taylor>) -> Result<DenseTensor> {
        Ok(cov_deriv_jet(field, &self.jets.gamma)?.values())
    }

    pub fn cov_deriv_field(&self, field: &DenseTensor<Taylor>) -> Result<DenseTensor<Taylor>> {
        cov_deriv_jet(field, &self.jets.gamma)
    }

    /// `∇_m C_abc^m` as a jet.
    pub fn weyl_divergence_jet(&self) -> Result<DenseTensor<Taylor>> {
        self.cov_deriv_field(&self.weyl_jet)?.contract(0, 4)
    }

    pub fn weyl_divergence(&self) -> Result<DenseTensor> {
        Ok(self.weyl_divergence_jet()?.values())
    }

    /// `∇_m R_abc^m` as a jet.
    pub fn riemann_divergence_jet(&self) -> Result<DenseTensor<Taylor>> {
        self.cov_deriv_field(&self.jets.riemann)?.contract(0, 4)
    }

    /// `R_a^m`
    pub fn ricci_mixed(&self) -> Result<DenseTensor> {
        self.ricci.raise_lower(1, &self.metric)
    }

    /// Residual of the Weyl divergence identity
    /// `−∇_m C_abc^m = (n−3)/(n−2) [∇_[a R_b]c − ∇_[a g_b]c R / (2(n−1))]`.
    pub fn weyl_divergence_residual(&self) -> Result<f64> {
        let n = self.dim();
        let nf = n as f64;
        let lhs = self.weyl_divergence()?.scale(-1.0);
        let dric = self.cov_deriv(&self.jets.ricci)?; // [a][b][c]
        let dr: Vec<f64> = (0..n).map(|a| self.jets.scalar.derivative(a).value()).collect();
        let g = &self.metric.g;
        let k = (nf - 3.0) / (nf - 2.0);
        let w = 1.0 / (2.0 * (nf - 1.0));
        let rhs = DenseTensor::from_fn(n, &[Co, Co, Co], |i| {
            let (a, b, c) = (i[0], i[1], i[2]);
            let curl = dric.get(&[a, b, c]) - dric.get(&[b, a, c]);
            let grad = g.get(&[b, c]) * dr[a] - g.get(&[a, c]) * dr[b];
            k * (curl - w * grad)
        })?;
        let g_dr = DenseTensor::from_fn(n, &[Co, Co, Co], |i| g.get(&[i[1], i[2]]) * dr[i[0]])?;
        let diff = lhs.try_sub(&rhs)?;
        let dweyl = self.cov_deriv(&self.weyl_jet)?;
        let den = dweyl.norm() + dric.norm() + g_dr.norm() + self.scales[1];
        Ok(ratio(diff.norm(), den))
    }
}

/// Point Christoffel symbols `Γ^k_ij` (any n ≥ 2).
pub fn christoffel(source: &dyn MetricSource, point: &[f64]) -> Result<DenseTensor> {
    check_point(point, source.dim())?;
    let metric = source.metric_at(point)?;
    Ok(curvature_jets(source, point, &metric, 2)?.gamma.values())
}

/// `(R_jkl^m, R_jklm)` at a point (any n ≥ 2).
pub fn riemann(source: &dyn MetricSource, point: &[f64]) -> Result<(DenseTensor, DenseTensor)> {
    check_point(point, source.dim())?;
    let metric = source.metric_at(point)?;
    let mixed = curvature_jets(source, point, &metric, 2)?.riemann.values();
    let cov = lower_last(&mixed, &metric)?;
    Ok((mixed, cov))
}

/// `(R_ab, R)` at a point (any n ≥ 2).
pub fn ricci_scalar(source: &dyn MetricSource, point: &[f64]) -> Result<(DenseTensor, f64)> {
    check_point(point, source.dim())?;
    let metric = source.metric_at(point)?;
    let j = curvature_jets(source, point, &metric, 2)?;
    Ok((j.ricci.values(), j.scalar.value()))
}

/// `(C_jkl^m, C_jklm)` at a point (n ≥ 3).
pub fn weyl(source: &dyn MetricSource, point: &[f64]) -> Result<(DenseTensor, DenseTensor)> {
    check_point(point, source.dim())?;
    if source.dim() < 3 {
        return Err(Error::precondition("the Weyl tensor needs n >= 3"));
    }
    let metric = source.metric_at(point)?;
    let j = curvature_jets(source, point, &metric, 2)?;
    let mixed = weyl_jet(&j)?.values();
    let cov = lower_last(&mixed, &metric)?;
    Ok((mixed, cov))
}

/// Residual of the cyclic sum over the first three slots of a covariant rank-4 tensor.
pub fn first_bianchi_residual(r: &DenseTensor) -> f64 {
    let n = r.dim();
    let mut sum = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let s = r.get(&[a, b, c, d]) + r.get(&[b, c, a, d]) + r.get(&[c, a, b, d]);
                    sum += s * s;
                }
            }
        }
    }
    ratio(sum.sqrt(), r.norm())
}

/// Largest relative deviation from the pair symmetries `R_jklm = −R_kjlm = −R_jkml = R_lmjk`.
pub fn pair_symmetry_residual(r: &DenseTensor) -> f64 {
    let a = r.permute(&[1, 0, 2, 3]).expect("rank 4").scale(-1.0);
    let b = r.permute(&[0, 1, 3, 2]).expect("rank 4").scale(-1.0);
    let c = r.permute(&[2, 3, 0, 1]).expect("rank 4");
    [a, b, c]
        .iter()
        .map(|p| ratio(r.try_sub(p).expect("same shape").norm(), r.norm()))
        .fold(0.0, f64::max)
}

/// Largest relative single trace of a mixed rank-4 tensor `K_jkl^m`, over
/// all slot pairs (lowered/raised through the metric as needed).
pub fn trace_residual(k_mixed: &DenseTensor, m: &MetricAt, scale: f64) -> Result<f64> {
    let cov = k_mixed.raise_lower(3, m)?;
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in a + 1..4 {
            let mut t = cov.raise_lower(b, m)?;
            t = t.contract(a, b)?;
            worst = worst.max(ratio(t.norm(), scale));
        }
    }
    Ok(worst)
}

/// `‖∇_a g_bc‖` relative to `‖∂g‖`.
pub fn metricity_residual(geo: &GeometryAt) -> Result<f64> {
    let dg = geo.cov_deriv(&geo.jets.g)?;
    let partial = partial_jet(&geo.jets.g)?.values();
    Ok(ratio(dg.norm(), partial.norm() + geo.metric.g.norm() * geo.gamma.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

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

    fn sphere2() -> MetricSpec {
        spec(&["theta", "phi"], &[], &[(0, 0, "1"), (1, 1, "sin(theta)^2")], (2, 0))
    }

    #[test]
    fn scalar_counts() {
        assert_eq!(scalar_count(3).unwrap(), 3);
        assert_eq!(scalar_count(4).unwrap(), 14);
        assert_eq!(scalar_count(5).unwrap(), 40);
        assert!(scalar_count(2).is_err());
    }

    #[test]
    fn schwarzschild_christoffel_oracle() {
        // Γ^r_tt = M(r − 2M)/r³
        let g = christoffel(&schwarzschild(), &[0.0, 4.0, std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        assert!((g.get(&[1, 0, 0]) - 0.03125).abs() < 1e-15);
        // Γ^t_tr = M / (r(r − 2M))
        assert!((g.get(&[0, 0, 1]) - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn two_sphere() {
        let theta = 0.7f64;
        let g = christoffel(&sphere2(), &[theta, 0.2]).unwrap();
        assert!((g.get(&[0, 1, 1]) + theta.sin() * theta.cos()).abs() < 1e-15);
        assert!((g.get(&[1, 0, 1]) - theta.cos() / theta.sin()).abs() < 1e-14);
        let (_, r) = ricci_scalar(&sphere2(), &[theta, 0.2]).unwrap();
        assert!((r - 2.0).abs() < 1e-13);
    }

    #[test]
    fn schwarzschild_vacuum_and_weyl_profile() {
        let s = schwarzschild();
        let r = 5.0;
        let geo = GeometryAt::new(&s, &[0.3, r, 1.1, 0.4]).unwrap();
        assert!(geo.ricci.norm() < 1e-14);
        // C_trtr = R_trtr = −2M/r³ for the vacuum solution
        assert!((geo.weyl_cov.get(&[0, 1, 0, 1]) + 2.0 / r.powi(3)).abs() < 1e-14);
        assert!(first_bianchi_residual(&geo.riemann_cov) < 1e-14);
        assert!(pair_symmetry_residual(&geo.riemann_cov) < 1e-14);
        assert!(geo.weyl_divergence_residual().unwrap() < 1e-12);
        assert!(metricity_residual(&geo).unwrap() < 1e-14);
    }

    #[test]
    fn weyl_is_traceless_on_a_generic_metric() {
        let s = spec(
            &["t", "x", "y", "z"],
            &[],
            &[
                (0, 0, "-(1 + x^2*y)"),
                (0, 1, "0.1*sin(t*z)"),
                (1, 1, "1 + 0.2*t*t"),
                (2, 2, "exp(0.3*x)"),
                (2, 3, "0.05*x*y"),
                (3, 3, "2 + cos(y)"),
            ],
            (3, 1),
        );
        let geo = GeometryAt::new(&s, &[0.3, 0.4, -0.2, 0.7]).unwrap();
        let tr = trace_residual(&geo.weyl_mixed, &geo.metric, geo.weyl_cov.norm() + geo.kappa()).unwrap();
        assert!(tr < 1e-13, "{tr}");
        assert!(first_bianchi_residual(&geo.weyl_cov) < 1e-13);
        assert!(geo.weyl_divergence_residual().unwrap() < 1e-12);
    }

    #[test]
    fn signature_mismatch_is_reported() {
        let s = spec(&["x", "y", "z"], &[], &[(0, 0, "1"), (1, 1, "1"), (2, 2, "1")], (2, 1));
        assert!(matches!(s.metric_at(&[0.0; 3]), Err(Error::Signature { .. })));
    }

    #[test]
    fn conflicting_components_rejected() {
        let e = MetricSpec::new(
            "bad",
            &["x", "y"],
            &[],
            vec![(0, 1, parse("x").unwrap()), (1, 0, parse("-x").unwrap())],
            (2, 0),
            vec![(0.0, 1.0); 2],
        );
        assert!(e.is_err());
    }
}
