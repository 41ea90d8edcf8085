//! Geodesic (projective) maps generated by a gradient `X = ∇ψ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compat::cyclic_sum;
use crate::error::{Error, Result};
use crate::expr::{parse, CompiledExpr, Expr};
use crate::geometry::{GeometryAt, MetricSource};
use crate::residual::ratio;
use crate::tensor::{DenseTensor, MetricAt, Variance::Co, Variance::Contra};

/// Number of random symmetric tensors in the identity panel.
pub const PANEL_SIZE: usize = 20;
const PANEL_SEED: u64 = 30;

/// A base metric together with the potential `ψ`.
#[derive(Debug, Clone)]
pub struct GeodesicMapSpec {
    pub psi: Expr,
    compiled: CompiledExpr,
}

impl GeodesicMapSpec {
    pub fn new(base: &dyn MetricSource, psi: Expr) -> Result<GeodesicMapSpec> {
        let compiled = CompiledExpr::compile(&psi, &base.bindings())?;
        Ok(GeodesicMapSpec { psi, compiled })
    }

    pub fn parse(base: &dyn MetricSource, psi: &str) -> Result<GeodesicMapSpec> {
        GeodesicMapSpec::new(base, parse(psi)?)
    }

    pub(crate) fn psi_jet(&self, point: &[f64], order: usize) -> Result<crate::expr::Taylor> {
        self.compiled.eval_jet(point, order)
    }
}

/// The deformation at one point.
#[derive(Debug, Clone)]
pub struct Deformation {
    /// `X_l = ∂_l ψ`
    pub x: Vec<f64>,
    /// `P_kl = ∇_k X_l − X_k X_l`
    pub p: DenseTensor,
    /// `R̃_jkl^m = R_jkl^m + δ_j^m P_kl − δ_k^m P_jl`
    pub riemann: DenseTensor,
    /// `R̃_kl = R_kl − (n − 1) P_kl`
    pub ricci: DenseTensor,
    /// `‖∇_[a X_b]‖`, relative
    pub closedness: f64,
    /// Asymmetry of `P`, relative
    pub p_symmetry: f64,
    /// Contraction of `R̃` against the stated `R̃_kl`, relative
    pub ricci_trace: f64,
    /// Largest `cyc(b, R̃) − cyc(b, R)` over the panel
    pub identity_residual: f64,
}

/// Reproducible panel of random symmetric tensors with entries in [−1, 1].
pub fn symmetric_panel(n: usize, count: usize, seed: u64) -> Vec<DenseTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut t = DenseTensor::zeros(n, &[Co, Co]).expect("rank 2");
            for i in 0..n {
                for j in i..n {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    t.set(&[i, j], v);
                    t.set(&[j, i], v);
                }
            }
            t
        })
        .collect()
}

/// Deformed Riemann tensor from a base mixed Riemann tensor and `P`.
pub fn deform_riemann(riemann_mixed: &DenseTensor, p: &DenseTensor) -> Result<DenseTensor> {
    let n = p.dim();
    DenseTensor::from_fn(n, &[Co, Co, Co, Contra], |i| {
        let (j, k, l, m) = (i[0], i[1], i[2], i[3]);
        let mut v = *riemann_mixed.get(i);
        if j == m {
            v += p.get(&[k, l]);
        }
        if k == m {
            v -= p.get(&[j, l]);
        }
        v
    })
}

fn identity_of(b: &DenseTensor, base: &DenseTensor, deformed: &DenseTensor, floor: f64) -> Result<f64> {
    let (cyc, t0) = cyclic_sum(b, base)?;
    let (cyc_t, t1) = cyclic_sum(b, deformed)?;
    Ok(ratio(cyc_t.try_sub(&cyc)?.norm(), 3.0 * (t0 + t1) + b.norm() * floor))
}

pub fn geodesic_map_deform(gm: &GeodesicMapSpec, geo: &GeometryAt) -> Result<Deformation> {
    let n = geo.dim();
    let psi = gm.psi_jet(&geo.point, 2)?;
    let x: Vec<f64> = (0..n).map(|a| psi.partial(&[a])).collect();
    let gamma = &geo.gamma;
    // ∇_k X_l = ∂_k∂_l ψ − Γ^m_kl X_m
    let nabla_x = DenseTensor::from_fn(n, &[Co, Co], |i| {
        psi.partial(&[i[0], i[1]]) - (0..n).map(|m| gamma.get(&[m, i[0], i[1]]) * x[m]).sum::<f64>()
    })?;
    let scale_x = nabla_x.norm() + x.iter().map(|v| v * v).sum::<f64>();
    let closedness = ratio(nabla_x.try_sub(&nabla_x.permute(&[1, 0])?)?.norm(), scale_x);
    let p = DenseTensor::from_fn(n, &[Co, Co], |i| nabla_x.get(i) - x[i[0]] * x[i[1]])?;
    let p_symmetry = ratio(p.try_sub(&p.permute(&[1, 0])?)?.norm(), p.norm());
    let riemann = deform_riemann(&geo.riemann_mixed, &p)?;
    let ricci = geo.ricci.try_sub(&p.scale(n as f64 - 1.0))?;
    let contracted = riemann.contract(1, 3)?;
    let ricci_trace = ratio(contracted.try_sub(&ricci)?.norm(), geo.ricci.norm() + n as f64 * p.norm() + geo.floor());
    let floor = geo.floor() + p.norm();
    let mut identity_residual: f64 = 0.0;
    for b in symmetric_panel(n, PANEL_SIZE, PANEL_SEED) {
        identity_residual = identity_residual.max(identity_of(&b, &geo.riemann_mixed, &riemann, floor)?);
    }
    Ok(Deformation {
        x,
        p,
        riemann,
        ricci,
        closedness,
        p_symmetry,
        ricci_trace,
        identity_residual,
    })
}

/// `cyc(b, R̃) − cyc(b, R)` for a single symmetric `b`.
pub fn identity_residual(b: &DenseTensor, d: &Deformation, geo: &GeometryAt) -> Result<f64> {
    identity_of(b, &geo.riemann_mixed, &d.riemann, geo.floor() + d.p.norm())
}

/// Riemann compatibility residuals of `b` before and after the map.
pub fn compat_before_after(b: &DenseTensor, d: &Deformation, geo: &GeometryAt) -> Result<(f64, f64)> {
    let (c0, t0) = cyclic_sum(b, &geo.riemann_mixed)?;
    let (c1, t1) = cyclic_sum(b, &d.riemann)?;
    Ok((
        ratio(c0.norm(), 3.0 * t0 + b.norm() * geo.floor()),
        ratio(c1.norm(), 3.0 * t1 + b.norm() * (geo.floor() + d.p.norm())),
    ))
}

/// `(g_kl A_ij + g_il A_jk + g_jl A_ki) / (n − 2)` with `A = w − wᵀ`, `w_ij = b_im S_j^m`.
fn bridge_term(b: &DenseTensor, s: &DenseTensor, m: &MetricAt) -> Result<DenseTensor> {
    let n = b.dim();
    let s_up = s.raise_lower(1, m)?;
    let w = DenseTensor::from_fn(n, &[Co, Co], |i| (0..n).map(|k| b.get(&[i[0], k]) * s_up.get(&[i[1], k])).sum::<f64>())?;
    let g = &m.g;
    let anti = |x: usize, y: usize| -> f64 { w.get(&[x, y]) - w.get(&[y, x]) };
    DenseTensor::from_fn(n, &[Co, Co, Co, Co], |i| {
        let (ii, j, k, l) = (i[0], i[1], i[2], i[3]);
        (g.get(&[k, l]) * anti(ii, j) + g.get(&[ii, l]) * anti(j, k) + g.get(&[j, l]) * anti(k, ii)) / (n as f64 - 2.0)
    })
}

/// Relative norm of `b g⁻¹ S − S g⁻¹ b`.
fn commutator(b: &DenseTensor, s: &DenseTensor, m: &MetricAt) -> Result<f64> {
    crate::constructs::kn::commutator_residual(b, s, m)
}

/// Weyl cyclic sums of `b` before and after the map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylTransfer {
    pub commutator_ricci: f64,
    pub commutator_p: f64,
    /// `‖cyc(b, C̃) − cyc(b, C)‖`, relative, with `cyc(b, C̃)` transported
    /// through the bridge identity from `R̃` and `R̃_kl`.
    pub residual: f64,
}

pub fn geodesic_map_weyl_transfer(d: &Deformation, b: &DenseTensor, geo: &GeometryAt) -> Result<WeylTransfer> {
    let n = geo.dim();
    if n < 3 {
        return Err(Error::precondition("the Weyl tensor needs n >= 3"));
    }
    let m = &geo.metric;
    let (cyc_c, tc) = cyclic_sum(b, &geo.weyl_mixed)?;
    let (cyc_rt, trt) = cyclic_sum(b, &d.riemann)?;
    let extra = bridge_term(b, &d.ricci, m)?;
    let transported = cyc_rt.try_add(&extra)?;
    let den = 3.0 * (tc + trt) + extra.norm() + b.norm() * (geo.floor() + d.p.norm());
    Ok(WeylTransfer {
        commutator_ricci: commutator(b, &geo.ricci, m)?,
        commutator_p: commutator(b, &d.p, m)?,
        residual: ratio(transported.try_sub(&cyc_c)?.norm(), den),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructs::catalog;
    use crate::expr::Taylor;
    use crate::geometry::{partial_jet, METRIC_ORDER};

    fn setup(name: &str, psi: &str, p: &[f64]) -> (GeometryAt, Deformation) {
        let spec = catalog(name).unwrap();
        let geo = GeometryAt::new(spec.source(), p).unwrap();
        let gm = GeodesicMapSpec::parse(spec.source(), psi).unwrap();
        let d = geodesic_map_deform(&gm, &geo).unwrap();
        (geo, d)
    }

    #[test]
    fn zero_potential_is_the_identity() {
        let (geo, d) = setup("schwarzschild", "0", &[0.0, 4.0, 1.0, 0.3]);
        assert_eq!(d.p.norm(), 0.0);
        assert_eq!(d.riemann.try_sub(&geo.riemann_mixed).unwrap().norm(), 0.0);
        assert_eq!(d.identity_residual, 0.0);
    }

    #[test]
    fn flat_linear_potential() {
        let (_, d) = setup("minkowski", "t + x + y + z", &[0.1, 0.2, -0.3, 0.4]);
        for k in 0..4 {
            for l in 0..4 {
                assert_eq!(*d.p.get(&[k, l]), -1.0);
            }
        }
        assert!(d.identity_residual < 1e-12);
        assert!(d.ricci_trace < 1e-14);
    }

    #[test]
    fn schwarzschild_log_r() {
        let (_, d) = setup("schwarzschild", "log(r)", &[0.0, 5.0, 1.2, 0.3]);
        assert!(d.identity_residual < 1e-9, "{}", d.identity_residual);
        assert!(d.closedness < 1e-14 && d.p_symmetry < 1e-14);
        assert!(d.p.norm() > 1e-3);
    }

    /// Curvature of `Γ̃ = Γ + δ X + X δ` computed from scratch.
    #[test]
    fn deformed_riemann_matches_the_projective_connection() {
        let spec = catalog("schwarzschild").unwrap();
        let pt = [0.0, 4.5, 1.1, 0.2];
        let geo = GeometryAt::new(spec.source(), &pt).unwrap();
        let gm = GeodesicMapSpec::parse(spec.source(), "log(r) + 0.3*sin(theta)*r").unwrap();
        let n = 4;
        let psi = gm.psi_jet(&pt, METRIC_ORDER).unwrap();
        let x: Vec<Taylor> = (0..n).map(|a| psi.derivative(a)).collect();
        let g = geo.gamma_jet();
        let mut gt = g.clone();
        for m in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut v = g.get(&[m, b, c]).clone();
                    if m == b {
                        v = &v + &x[c];
                    }
                    if m == c {
                        v = &v + &x[b];
                    }
                    gt.set(&[m, b, c], v);
                }
            }
        }
        let dg = partial_jet(&gt).unwrap().values(); // [a][m][b][c]
        let gv = gt.values();
        let want = DenseTensor::from_fn(n, &[Co, Co, Co, Contra], |i| {
            let (a, b, c, m) = (i[0], i[1], i[2], i[3]);
            let mut v = -dg.get(&[a, m, b, c]) + dg.get(&[b, m, a, c]);
            for p in 0..n {
                v += gv.get(&[p, a, c]) * gv.get(&[m, b, p]) - gv.get(&[p, b, c]) * gv.get(&[m, a, p]);
            }
            v
        })
        .unwrap();
        let d = geodesic_map_deform(&gm, &geo).unwrap();
        let diff = d.riemann.try_sub(&want).unwrap().norm();
        assert!(diff < 1e-12 * want.norm(), "{diff}");
    }

    #[test]
    fn special_map_transfers_weyl_sums() {
        // e^{−ψ} = 2 − |x|²/2 has Hessian −δ, so P = g / (2 − |x|²/2)
        let (geo, d) = setup("minkowski", "-log(2 + (t^2 - x^2 - y^2 - z^2)/2)", &[0.3, 0.2, -0.1, 0.4]);
        let f = 2.0 + (0.09 - 0.04 - 0.01 - 0.16) / 2.0;
        let want = geo.metric.g.scale(1.0 / f);
        assert!(d.p.try_sub(&want).unwrap().norm() < 1e-12);
        let t = geodesic_map_weyl_transfer(&d, &d.p, &geo).unwrap();
        assert!(t.commutator_ricci < 1e-12 && t.commutator_p < 1e-12);
        assert!(t.residual < 1e-9, "{}", t.residual);
    }

    #[test]
    fn metric_transfers_trivially() {
        let (geo, d) = setup("godel", "x*y + 0.1*t^2", &[0.1, 0.2, -0.3, 0.4]);
        let t = geodesic_map_weyl_transfer(&d, &geo.metric.g, &geo).unwrap();
        assert!(t.commutator_ricci < 1e-14 && t.commutator_p < 1e-14);
        assert!(t.residual < 1e-12, "{}", t.residual);
    }

    #[test]
    fn compatibility_verdicts_survive_the_map() {
        let (geo, d) = setup("schwarzschild", "log(r) + 0.2*cos(theta)", &[0.0, 5.0, 1.2, 0.3]);
        let (before, after) = compat_before_after(&geo.metric.g, &d, &geo).unwrap();
        assert!(before < 1e-12 && after < 1e-12, "{before} {after}");
        for b in symmetric_panel(4, 10, 1) {
            let (before, after) = compat_before_after(&b, &d, &geo).unwrap();
            assert!(before > 1e-3 && after > 1e-3, "{before} {after}");
        }
    }
}
