//! Per-point work of each subcommand.

use serde_json::json;

use super::report::PointBlock;
use crate::classify::{
    bel_debever, default_frame, duality_residual, electric_magnetic, h_equals_weyl_compat, petrov_type, principal_null_directions,
    special_via_compat, PetrovType,
};
use crate::compat::{
    codazzi_cyclic_identity_residual, compat_report, contracted_bianchi_residual, d_tensor, dpi_residual, hall_conditions,
    lovelock_residual, vector_compat_residual, vector_identity_residual, Causal, Curvature, SymmetricField, VectorField,
};
use crate::constructs::geodesic::{compat_before_after, identity_residual};
use crate::constructs::{
    fluid_form, geodesic_map_deform, geodesic_map_weyl_transfer, hypersurface_compat_suite, hypersurface_geometry,
    omega_codazzi_from_gauss, EmbeddingSpec, GeodesicMapSpec, OmegaSource,
};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::geometry::fd::christoffel_fd;
use crate::geometry::{first_bianchi_residual, metricity_residual, pair_symmetry_residual, trace_residual, GeometryAt, MetricSource};
use crate::residual::ratio;
use crate::tensor::Variance;

/// A labelled symmetric field and whether it carries derivatives.
pub struct Field {
    pub label: String,
    pub field: SymmetricField,
}

/// `metric`, `ricci`, or component expressions (full `n × n` or upper
/// triangle, row-major).
pub fn parse_tensors(src: &dyn MetricSource, specs: &[String]) -> Result<Vec<Field>> {
    let n = src.dim();
    let mut out = Vec::new();
    for (k, text) in specs.iter().enumerate() {
        let field = match text.trim() {
            "metric" => SymmetricField::metric(),
            "ricci" => SymmetricField::ricci(),
            t => {
                let exprs = t.split(',').map(|s| parse(s.trim())).collect::<Result<Vec<Expr>>>()?;
                let mut table = vec![vec![Expr::num(0.0); n]; n];
                if exprs.len() == n * n {
                    for (i, e) in exprs.into_iter().enumerate() {
                        table[i / n][i % n] = e;
                    }
                } else if exprs.len() == n * (n + 1) / 2 {
                    let mut it = exprs.into_iter();
                    for i in 0..n {
                        for j in i..n {
                            let e = it.next().expect("counted");
                            table[i][j] = e.clone();
                            table[j][i] = e;
                        }
                    }
                } else {
                    return Err(Error::precondition(format!(
                        "tensor `{t}` needs {} or {} components, got {}",
                        n * n,
                        n * (n + 1) / 2,
                        exprs.len()
                    )));
                }
                SymmetricField::from_expressions(src, &table, t)?
            }
        };
        let label = match text.trim() {
            "metric" | "ricci" => text.trim().to_string(),
            _ => format!("b{}", k + 1),
        };
        out.push(Field { label, field });
    }
    Ok(out)
}

pub fn curvature(src: &dyn MetricSource, p: &[f64]) -> Result<PointBlock> {
    let geo = GeometryAt::new(src, p)?;
    let kappa = geo.kappa();
    let mut b = PointBlock::default();
    b.check("first_bianchi", first_bianchi_residual(&geo.riemann_cov));
    b.check("pair_symmetry", pair_symmetry_residual(&geo.riemann_cov));
    b.check("weyl_trace", trace_residual(&geo.weyl_mixed, &geo.metric, geo.weyl_cov.norm() + kappa)?);
    b.check("metricity", metricity_residual(&geo)?);
    let fd = christoffel_fd(src, p)?;
    b.check("christoffel_fd", ratio(fd.try_sub(&geo.gamma)?.norm(), geo.gamma.norm()));
    if geo.dim() >= 3 {
        b.check("weyl_divergence_identity", geo.weyl_divergence_residual()?);
    }
    b.check("contracted_bianchi", contracted_bianchi_residual(&geo)?);
    b.check("lovelock", lovelock_residual(&geo)?);
    b.info("scalar", geo.scalar);
    b.info("riemann_norm", geo.riemann_cov.norm());
    b.info("ricci_norm", ratio(geo.ricci.norm(), kappa));
    b.info("weyl_norm", ratio(geo.weyl_cov.norm(), kappa));
    b.info("signature", [geo.metric.signature.0, geo.metric.signature.1]);
    Ok(b)
}

pub fn compat(
    src: &dyn MetricSource,
    p: &[f64],
    fields: &[Field],
    vectors: &[Vec<Expr>],
    vector_text: &[String],
    tol: f64,
) -> Result<PointBlock> {
    let geo = GeometryAt::new(src, p)?;
    let mut b = PointBlock::default();
    b.check("lovelock", lovelock_residual(&geo)?);
    if geo.dim() >= 3 {
        b.check("dpi_identity", dpi_residual(&geo)?);
    }
    let mut tensors = serde_json::Map::new();
    for f in fields {
        let r = compat_report(&f.field, &geo, tol)?;
        b.check(&format!("bridge_identity:{}", f.label), r.bridge_residual);
        b.check(
            &format!("codazzi_cyclic_identity:{}", f.label),
            codazzi_cyclic_identity_residual(&f.field, &geo)?,
        );
        tensors.insert(f.label.clone(), serde_json::to_value(&r).unwrap_or_default());
    }
    b.info("tensors", tensors);
    let mut vecs = serde_json::Map::new();
    for (k, (exprs, text)) in vectors.iter().zip(vector_text).enumerate() {
        let u = VectorField::from_expressions(src, exprs, Variance::Contra)?;
        let label = format!("u{}", k + 1);
        b.check(&format!("vector_identity:{label}"), vector_identity_residual(&u, &geo)?);
        let causal = u.causal(&geo)?;
        let riemann = vector_compat_residual(&u, &geo, Curvature::Riemann)?;
        let weyl = vector_compat_residual(&u, &geo, Curvature::Weyl)?;
        let d = if causal != Causal::Null && weyl < tol {
            let d = d_tensor(&u, &geo, Curvature::Weyl)?;
            json!({"reconstruction_residual": d.reconstruction_residual, "eigen_residual": d.eigen_residual, "eigenvalue": d.eigenvalue})
        } else {
            serde_json::Value::Null
        };
        vecs.insert(
            label,
            json!({
                "components": text,
                "causal": causal,
                "riemann_compat": riemann,
                "weyl_compat": weyl,
                "riemann_compatible": riemann < tol,
                "weyl_compatible": weyl < tol,
                "hall": hall_conditions(&u, &geo)?,
                "d_tensor": d,
            }),
        );
    }
    b.info("vectors", vecs);
    Ok(b)
}

pub struct ClassifyOpts<'a> {
    pub observer: Option<&'a [Expr]>,
    pub null: Option<&'a [Expr]>,
    pub expect: Option<PetrovType>,
    pub pnd: bool,
    pub tol: f64,
}

fn eval_vector(src: &dyn MetricSource, exprs: &[Expr], geo: &GeometryAt) -> Result<Vec<f64>> {
    VectorField::from_expressions(src, exprs, Variance::Contra)?.vector(geo)
}

pub fn classify(src: &dyn MetricSource, p: &[f64], o: &ClassifyOpts<'_>) -> Result<PointBlock> {
    let geo = GeometryAt::new(src, p)?;
    let m = &geo.metric;
    let mut b = PointBlock::default();
    let report = petrov_type(&geo, o.tol)?;
    b.check("duality", duality_residual(&geo)?);
    b.check("q_trace", report.trace_residual);
    if let Some(t) = o.expect {
        b.check("expected_type", if report.petrov_type == t { 0.0 } else { 1.0 });
    }
    b.info("petrov_type", report.petrov_type.to_string());
    b.info("petrov", &report);
    let mut null = o.null.map(|e| eval_vector(src, e, &geo)).transpose()?;
    if let Some(exprs) = o.observer {
        let u = eval_vector(src, exprs, &geo)?;
        let u2 = m.dot(&u, &u);
        let size = u.iter().map(|x| x * x).sum::<f64>().sqrt() * m.lower(&u).iter().map(|x| x * x).sum::<f64>().sqrt();
        if u2.abs() <= 1e-10 * size {
            null.get_or_insert(u);
        } else if u2 < 0.0 {
            let u: Vec<f64> = u.iter().map(|x| x / (-u2).sqrt()).collect();
            let eh = electric_magnetic(&geo, &u)?;
            b.check("eh_symmetry", eh.symmetry_residual);
            b.check("eh_trace", eh.trace_residual);
            b.check("eh_orthogonality", eh.orthogonality_residual);
            let (_, weyl_compat) = h_equals_weyl_compat(&geo, &u)?;
            b.info(
                "observer",
                json!({
                    "u": u,
                    "e": eh.e,
                    "h": eh.h,
                    "e_norm": eh.e_norm,
                    "h_norm": eh.h_norm,
                    "purely_electric": eh.h_norm < o.tol,
                    "weyl_vector_compat": weyl_compat,
                }),
            );
        } else {
            return Err(Error::precondition("the observer must be timelike or null"));
        }
    }
    if let Some(k) = null {
        let bd = bel_debever(&geo, &k)?;
        let (compat, _) = special_via_compat(&geo, &k)?;
        b.info(
            "null",
            json!({
                "k": k,
                "bel_debever": bd,
                "deepest": bd.deepest(o.tol),
                "weyl_vector_compat": compat,
            }),
        );
    }
    if o.pnd {
        let frame = default_frame(m)?;
        b.info("principal_null_directions", principal_null_directions(&geo, &frame)?);
    }
    Ok(b)
}

pub fn hypersurface(emb: &EmbeddingSpec, p: &[f64]) -> Result<PointBlock> {
    let suite = hypersurface_compat_suite(emb, p)?;
    let hs = hypersurface_geometry(emb, p)?;
    let geo = &hs.geometry;
    let mut b = PointBlock::default();
    b.check("gauss", suite.gauss_residual);
    b.check("codazzi", suite.codazzi_residual);
    b.check("suite_compat", suite.max_compat());
    match omega_codazzi_from_gauss(OmegaSource::Embedding(emb), p) {
        Ok(v) => b.check("omega_codazzi", v),
        Err(Error::Precondition(msg)) => b.info("omega_codazzi_skipped", msg),
        Err(e) => return Err(e),
    }
    if geo.metric.signature == (3, 1) {
        match fluid_form(geo)? {
            Some(f) if f.residual < 1e-8 => {
                let eh = electric_magnetic(geo, &f.u)?;
                b.check("purely_electric", eh.h_norm);
                b.info("fluid", json!({"u": f.u, "a": f.a, "b": f.b, "residual": f.residual, "e_norm": eh.e_norm}));
            }
            Some(f) => b.info("fluid", json!({"residual": f.residual})),
            None => b.info("fluid", serde_json::Value::Null),
        }
    }
    b.info("normal_sign", hs.normal_sign);
    b.info("omega", &hs.omega);
    b.info("scalar", geo.scalar);
    b.info(
        "suite",
        json!({
            "weyl_compat_omega": suite.weyl_compat_omega,
            "riemann_compat_omega": suite.riemann_compat_omega,
            "eigenvector_weyl_compat": suite.eigenvector_weyl_compat,
            "eigenvector_riemann_compat": suite.eigenvector_riemann_compat,
            "weyl_compat_ricci": suite.weyl_compat_ricci,
            "riemann_compat_omega_squared": suite.riemann_compat_omega_squared,
            "ricci_formula_residual": suite.ricci_formula_residual,
        }),
    );
    Ok(b)
}

pub fn geodesic(src: &dyn MetricSource, p: &[f64], gm: &GeodesicMapSpec, fields: &[Field], tol: f64) -> Result<PointBlock> {
    let geo = GeometryAt::new(src, p)?;
    let d = geodesic_map_deform(gm, &geo)?;
    let mut b = PointBlock::default();
    b.check("closedness", d.closedness);
    b.check("p_symmetry", d.p_symmetry);
    b.check("ricci_trace", d.ricci_trace);
    b.check("geodesic_identity", d.identity_residual);
    b.info("x", &d.x);
    b.info("p", &d.p);
    let mut tensors = serde_json::Map::new();
    for f in fields {
        let bv = f.field.value(&geo)?;
        b.check(&format!("geodesic_identity:{}", f.label), identity_residual(&bv, &d, &geo)?);
        let (before, after) = compat_before_after(&bv, &d, &geo)?;
        let mut entry = json!({"riemann_compat_before": before, "riemann_compat_after": after});
        if geo.dim() >= 3 {
            let t = geodesic_map_weyl_transfer(&d, &bv, &geo)?;
            let applies = t.commutator_ricci < tol && t.commutator_p < tol;
            if applies {
                b.check(&format!("weyl_transfer:{}", f.label), t.residual);
            }
            entry["commutator_ricci"] = json!(t.commutator_ricci);
            entry["commutator_p"] = json!(t.commutator_p);
            entry["weyl_transfer"] = json!(t.residual);
            entry["transfer_applies"] = json!(applies);
        }
        tensors.insert(f.label.clone(), entry);
    }
    b.info("tensors", tensors);
    Ok(b)
}
