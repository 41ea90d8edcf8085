//! Hypersurfaces of flat ambient spaces: induced metric, unit normal, second
//! fundamental form, and the Gauss and Codazzi equations.
//!
//! The ambient metric is `diag(−1, …, −1, +1, …, +1)` with the negative entries
//! first. The normal is oriented so that its last nonzero contravariant
//! component is positive, and the sign in the Gauss equation is `ε = N·N`.

use crate::compat::{self, SymmetricField, VectorField};
use crate::error::{Error, Result};
use crate::expr::{Bindings, CompiledExpr, Expr, Taylor};
use crate::geometry::{check_point, cov_deriv_jet, partial_jet, GeometryAt, MetricSource};
use crate::linalg;
use crate::residual::ratio;
use crate::tensor::{DenseTensor, MetricAt, Scalar, Variance};

use Variance::Co;

/// A hypersurface `X^μ(u¹…uⁿ)` in flat `(n+1)`-space.
#[derive(Debug, Clone)]
pub struct EmbeddingSpec {
    pub name: String,
    pub coords: Vec<String>,
    pub params: Vec<(String, f64)>,
    pub maps: Vec<Expr>,
    /// (positive, negative) counts of the flat ambient metric.
    pub ambient_signature: (usize, usize),
    /// Expected signature of the induced metric.
    pub signature: (usize, usize),
    pub ranges: Vec<(f64, f64)>,
    compiled: Vec<CompiledExpr>,
}

/// Taylor order of the embedding maps; the induced metric is one lower.
const MAP_ORDER: usize = 5;

impl EmbeddingSpec {
    pub fn new(
        name: &str,
        coords: &[&str],
        params: &[(&str, f64)],
        maps: Vec<Expr>,
        ambient_signature: (usize, usize),
        signature: (usize, usize),
        ranges: Vec<(f64, f64)>,
    ) -> Result<EmbeddingSpec> {
        let n = coords.len();
        if !(2..=5).contains(&n) {
            return Err(Error::shape(format!("hypersurface dimension {n} outside 2..=5")));
        }
        if maps.len() != n + 1 {
            return Err(Error::shape(format!("expected {} embedding maps, got {}", n + 1, maps.len())));
        }
        if ambient_signature.0 + ambient_signature.1 != n + 1 || signature.0 + signature.1 != n {
            return Err(Error::shape("signature counts do not match the dimensions"));
        }
        if ranges.len() != n {
            return Err(Error::shape("one sampling range per coordinate is required"));
        }
        let bindings = Bindings::new(coords, params);
        let compiled = maps
            .iter()
            .map(|e| CompiledExpr::compile(e, &bindings))
            .collect::<Result<Vec<_>>>()?;
        Ok(EmbeddingSpec {
            name: name.to_string(),
            coords: coords.iter().map(|s| s.to_string()).collect(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            maps,
            ambient_signature,
            signature,
            ranges,
            compiled,
        })
    }

    /// Diagonal of the flat ambient metric.
    pub fn ambient_metric(&self) -> Vec<f64> {
        let (p, q) = self.ambient_signature;
        (0..p + q).map(|i| if i < q { -1.0 } else { 1.0 }).collect()
    }

    fn map_jets(&self, point: &[f64], order: usize) -> Result<Vec<Taylor>> {
        check_point(point, self.coords.len())?;
        self.compiled.iter().map(|e| e.eval_jet(point, order)).collect()
    }

    /// Tangent vectors `B^μ_i` as jets, indexed `[μ][i]`.
    fn tangent_jets(&self, point: &[f64], order: usize) -> Result<Vec<Vec<Taylor>>> {
        let x = self.map_jets(point, order + 1)?;
        let n = self.coords.len();
        Ok(x.iter().map(|xm| (0..n).map(|i| xm.derivative(i)).collect()).collect())
    }
}

impl MetricSource for EmbeddingSpec {
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
        if order + 1 > MAP_ORDER {
            return Err(Error::OrderExhausted(format!("induced metric order {order} exceeds {}", MAP_ORDER - 1)));
        }
        let n = self.dim();
        let b = self.tangent_jets(point, order)?;
        let eta = self.ambient_metric();
        let mut data = vec![Taylor::constant(0.0); n * n];
        for i in 0..n {
            for j in i..n {
                let mut acc = Taylor::constant(0.0);
                for (mu, row) in b.iter().enumerate() {
                    acc.add_prod(&row[i].scale(eta[mu]), &row[j]);
                }
                data[j * n + i] = acc.clone();
                data[i * n + j] = acc;
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

/// Determinant of a small square matrix of jets by cofactor expansion.
fn det_jet(m: &[Vec<Taylor>]) -> Taylor {
    let n = m.len();
    match n {
        0 => Taylor::constant(1.0),
        1 => m[0][0].clone(),
        2 => &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]),
        _ => {
            let mut acc = Taylor::constant(0.0);
            for col in 0..n {
                let minor: Vec<Vec<Taylor>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(c, _)| *c != col).map(|(_, v)| v.clone()).collect())
                    .collect();
                let cof = det_jet(&minor);
                let term = if col % 2 == 0 { m[0][col].clone() } else { m[0][col].scale(-1.0) };
                acc.add_prod(&term, &cof);
            }
            acc
        }
    }
}

/// Extrinsic data of a hypersurface at one point.
#[derive(Debug, Clone)]
pub struct HypersurfaceAt {
    pub geometry: GeometryAt,
    /// Unit normal, contravariant ambient components.
    pub normal: Vec<f64>,
    /// `ε = N·N = ±1`.
    pub normal_sign: f64,
    /// Second fundamental form `Ω_ij = N_μ ∂_i∂_j X^μ`.
    pub omega: DenseTensor,
    pub omega_jet: DenseTensor<Taylor>,
    pub gauss_residual: f64,
    pub codazzi_residual: f64,
}

/// `ε(Ω_jl Ω_km − Ω_jm Ω_kl)`
pub fn gauss_form(omega: &DenseTensor, eps: f64, k: f64, g: &DenseTensor) -> Result<DenseTensor> {
    let n = omega.dim();
    DenseTensor::from_fn(n, &[Co; 4], |i| {
        let (j, kk, l, m) = (i[0], i[1], i[2], i[3]);
        let o = |a: usize, b: usize| *omega.get(&[a, b]);
        let gg = |a: usize, b: usize| *g.get(&[a, b]);
        k * (gg(j, l) * gg(kk, m) - gg(j, m) * gg(kk, l)) + eps * (o(j, l) * o(kk, m) - o(j, m) * o(kk, l))
    })
}

/// Codazzi deviation `∇_k Ω_jl − ∇_j Ω_kl` and its natural scale `‖∂Ω‖ + ‖Γ‖‖Ω‖`.
pub fn codazzi_of_jet(omega: &DenseTensor<Taylor>, geo: &GeometryAt) -> Result<(DenseTensor, f64)> {
    let d = cov_deriv_jet(omega, geo.gamma_jet())?.values();
    let dev = d.antisymmetrize_pair(0, 1)?;
    let scale = partial_jet(omega)?.values().norm() + geo.gamma.norm() * omega.values().norm();
    Ok((dev, scale))
}

pub fn hypersurface_geometry(emb: &EmbeddingSpec, point: &[f64]) -> Result<HypersurfaceAt> {
    let n = emb.dim();
    let geometry = GeometryAt::new(emb, point)?;
    let order = MAP_ORDER - 1;
    let x = emb.map_jets(point, MAP_ORDER)?;
    let b: Vec<Vec<Taylor>> = x.iter().map(|xm| (0..n).map(|i| xm.derivative(i)).collect()).collect();
    let eta = emb.ambient_metric();
    // covector normal n_μ = (−1)^μ det(B without row μ)
    let mut cov: Vec<Taylor> = (0..=n)
        .map(|mu| {
            let minor: Vec<Vec<Taylor>> = b
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != mu)
                .map(|(_, row)| row.iter().map(|t| t.truncate(order)).collect())
                .collect();
            let d = det_jet(&minor);
            if mu % 2 == 0 {
                d
            } else {
                d.scale(-1.0)
            }
        })
        .collect();
    let mut nn = Taylor::constant(0.0);
    for (mu, c) in cov.iter().enumerate() {
        nn.add_prod(&c.scale(eta[mu]), c);
    }
    let nn0 = nn.value();
    let size: f64 = cov.iter().map(|c| c.value() * c.value()).sum::<f64>();
    if nn0.abs() <= 1e-10 * size || size == 0.0 {
        return Err(Error::precondition("the hypersurface normal is null or undefined at this point"));
    }
    let eps = nn0.signum();
    let inv_len = nn
        .scale(eps)
        .powf(-0.5)
        .ok_or_else(|| Error::precondition("normal length is not positive"))?;
    for c in cov.iter_mut() {
        *c = &*c * &inv_len;
    }
    let contra: Vec<f64> = cov.iter().enumerate().map(|(mu, c)| eta[mu] * c.value()).collect();
    let big = contra.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let last = contra.iter().rposition(|v| v.abs() > 1e-12 * big).expect("nonzero normal");
    let orient = contra[last].signum();
    let normal: Vec<f64> = contra.iter().map(|v| v * orient).collect();
    let omega_jet = DenseTensor::from_fn(n, &[Co, Co], |ij| {
        let mut acc = Taylor::constant(0.0);
        for (mu, c) in cov.iter().enumerate() {
            let second = x[mu].derivative(ij[0]).derivative(ij[1]);
            acc.add_prod(&c.scale(orient), &second);
        }
        acc
    })?;
    let omega = omega_jet.values();
    let gf = gauss_form(&omega, eps, 0.0, &geometry.metric.g)?;
    let gauss_residual = ratio(geometry.riemann_cov.try_sub(&gf)?.norm(), geometry.riemann_cov.norm() + gf.norm());
    let (dev, scale) = codazzi_of_jet(&omega_jet, &geometry)?;
    let codazzi_residual = ratio(dev.norm(), scale);
    Ok(HypersurfaceAt {
        geometry,
        normal,
        normal_sign: eps,
        omega,
        omega_jet,
        gauss_residual,
        codazzi_residual,
    })
}

/// Compatibility residuals that hold on every hypersurface of a flat space.
#[derive(Debug, Clone, PartialEq)]
pub struct HypersurfaceSuite {
    pub gauss_residual: f64,
    pub codazzi_residual: f64,
    pub weyl_compat_omega: f64,
    pub riemann_compat_omega: f64,
    /// Weyl vector compatibility of each real eigenvector of `Ω^i_j`.
    pub eigenvector_weyl_compat: Vec<f64>,
    /// Riemann vector compatibility of the same eigenvectors.
    pub eigenvector_riemann_compat: Vec<f64>,
    pub weyl_compat_ricci: f64,
    pub riemann_compat_omega_squared: f64,
    /// `R_kl = ε(Ω_p^p Ω_kl − Ω²_kl)` residual, the contraction of the Gauss form.
    pub ricci_formula_residual: f64,
}

impl HypersurfaceSuite {
    pub fn max_compat(&self) -> f64 {
        self.eigenvector_weyl_compat
            .iter()
            .chain(&self.eigenvector_riemann_compat)
            .copied()
            .chain([
                self.weyl_compat_omega,
                self.riemann_compat_omega,
                self.weyl_compat_ricci,
                self.riemann_compat_omega_squared,
                self.ricci_formula_residual,
            ])
            .fold(0.0, f64::max)
    }
}

fn omega_squared(omega: &DenseTensor, m: &MetricAt) -> Result<DenseTensor> {
    omega.outer(&omega.raise_lower(1, m)?)?.contract(1, 3).and_then(|t| t.permute(&[0, 1]))
}

pub fn hypersurface_compat_suite(emb: &EmbeddingSpec, point: &[f64]) -> Result<HypersurfaceSuite> {
    let hs = hypersurface_geometry(emb, point)?;
    let geo = &hs.geometry;
    let m = &geo.metric;
    let omega = SymmetricField::point_values(hs.omega.clone(), "second fundamental form")?;
    let weyl_compat_omega = compat::weyl_compat_residual(&omega, geo)?;
    let riemann_compat_omega = compat::riemann_compat_residual(&omega, geo)?;
    let mixed = hs.omega.raise_lower(0, m)?; // Ω^i_j
    let eig = linalg::real_eigenvectors(&mixed.to_matrix()?);
    let mut eigenvector_weyl_compat = Vec::new();
    let mut eigenvector_riemann_compat = Vec::new();
    for (_, v) in eig {
        let u = VectorField::constant(&v);
        eigenvector_weyl_compat.push(compat::vector_compat_residual(&u, geo, compat::Curvature::Weyl)?);
        eigenvector_riemann_compat.push(compat::vector_compat_residual(&u, geo, compat::Curvature::Riemann)?);
    }
    let ricci = SymmetricField::ricci();
    let weyl_compat_ricci = compat::weyl_compat_residual(&ricci, geo)?;
    let o2 = omega_squared(&hs.omega, m)?;
    let riemann_compat_omega_squared =
        compat::riemann_compat_residual(&SymmetricField::point_values(o2.clone(), "Ω²")?, geo)?;
    let trace = hs.omega.raise_lower(1, m)?.contract(0, 1)?.data()[0];
    let predicted = hs.omega.scale(trace).try_sub(&o2)?.scale(hs.normal_sign);
    let ricci_formula_residual = ratio(
        geo.ricci.try_sub(&predicted)?.norm(),
        geo.ricci.norm() + o2.norm() + hs.omega.norm() * trace.abs(),
    );
    Ok(HypersurfaceSuite {
        gauss_residual: hs.gauss_residual,
        codazzi_residual: hs.codazzi_residual,
        weyl_compat_omega,
        riemann_compat_omega,
        eigenvector_weyl_compat,
        eigenvector_riemann_compat,
        weyl_compat_ricci,
        riemann_compat_omega_squared,
        ricci_formula_residual,
    })
}

/// Source of a second fundamental form for the invertible-Ω theorem.
pub enum OmegaSource<'a> {
    /// Use the embedding's own `Ω`.
    Embedding(&'a EmbeddingSpec),
    /// A metric together with an explicit `Ω` field and the constant `k` of
    /// the ambient space (`R = k(gg − gg) + ε(ΩΩ − ΩΩ)`).
    Synthetic {
        source: &'a dyn MetricSource,
        omega: &'a SymmetricField,
        eps: f64,
        k: f64,
    },
}

/// For a Riemann tensor of Gauss form with invertible `Ω` (n > 3), returns the
/// Codazzi deviation of `Ω`, which must vanish.
pub fn omega_codazzi_from_gauss(src: OmegaSource<'_>, point: &[f64]) -> Result<f64> {
    let (geo, omega_jet, eps, k) = match src {
        OmegaSource::Embedding(emb) => {
            let hs = hypersurface_geometry(emb, point)?;
            (hs.geometry, hs.omega_jet, hs.normal_sign, 0.0)
        }
        OmegaSource::Synthetic { source, omega, eps, k } => {
            let geo = GeometryAt::new(source, point)?;
            let jet = omega.jet(&geo, 3)?;
            (geo, jet, eps, k)
        }
    };
    let n = geo.dim();
    if n <= 3 {
        return Err(Error::precondition("the invertible-Ω theorem needs n > 3"));
    }
    let omega = omega_jet.values();
    let det = omega.to_matrix()?.determinant();
    if det.abs() <= 1e-10 * omega.max_abs().powi(n as i32) || omega.norm() == 0.0 {
        return Err(Error::precondition("Ω is not invertible at this point"));
    }
    let gf = gauss_form(&omega, eps, k, &geo.metric.g)?;
    let mismatch = ratio(geo.riemann_cov.try_sub(&gf)?.norm(), geo.riemann_cov.norm() + gf.norm());
    if mismatch > 1e-8 {
        return Err(Error::precondition(format!(
            "the Riemann tensor is not of Gauss form (residual {mismatch:.3e})"
        )));
    }
    let (dev, scale) = codazzi_of_jet(&omega_jet, &geo)?;
    Ok(ratio(dev.norm(), scale))
}

/// `Ric = a u⊗u + b g` for a unit timelike eigenvector `u` of `Ric^a_b`.
/// Einstein's equation then gives `T` of the same form.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidForm {
    pub u: Vec<f64>,
    pub a: f64,
    pub b: f64,
    /// `‖Ric − a u⊗u − b g‖`, relative.
    pub residual: f64,
}

/// Best perfect-fluid fit of the Ricci tensor, or `None` without a timelike
/// eigenvector.
pub fn fluid_form(geo: &GeometryAt) -> Result<Option<FluidForm>> {
    let m = &geo.metric;
    let n = geo.dim();
    let mixed = geo.ricci.raise_lower(0, m)?;
    let mut best: Option<FluidForm> = None;
    for (lambda, v) in linalg::real_eigenvectors(&mixed.to_matrix()?) {
        let v2 = m.dot(&v, &v);
        if v2 >= 0.0 {
            continue;
        }
        let u: Vec<f64> = v.iter().map(|x| x / (-v2).sqrt()).collect();
        let lo = m.lower(&u);
        // Ric·u = (b − a) u and tr Ric = −a + n b
        let b = (geo.scalar - lambda) / (n as f64 - 1.0);
        let a = b - lambda;
        let model = DenseTensor::from_fn(n, &[Co, Co], |i| a * lo[i[0]] * lo[i[1]] + b * m.g.get(&[i[0], i[1]]))?;
        let residual = ratio(geo.ricci.try_sub(&model)?.norm(), geo.ricci.norm() + geo.floor());
        if best.as_ref().is_none_or(|f| residual < f.residual) {
            best = Some(FluidForm { u, a, b, residual });
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn emb(coords: &[&str], params: &[(&str, f64)], maps: &[&str], amb: (usize, usize), sig: (usize, usize)) -> EmbeddingSpec {
        let maps = maps.iter().map(|m| parse(m).unwrap()).collect();
        EmbeddingSpec::new("test", coords, params, maps, amb, sig, vec![(0.5, 1.0); coords.len()]).unwrap()
    }

    fn sphere4() -> EmbeddingSpec {
        emb(
            &["a", "b", "c", "p"],
            &[("r", 1.5)],
            &[
                "r*cos(a)",
                "r*sin(a)*cos(b)",
                "r*sin(a)*sin(b)*cos(c)",
                "r*sin(a)*sin(b)*sin(c)*cos(p)",
                "r*sin(a)*sin(b)*sin(c)*sin(p)",
            ],
            (5, 0),
            (4, 0),
        )
    }

    #[test]
    fn round_two_sphere() {
        let r = 2.0;
        let e = emb(&["th", "ph"], &[("r", r)], &["r*sin(th)*cos(ph)", "r*sin(th)*sin(ph)", "r*cos(th)"], (3, 0), (2, 0));
        let hs = hypersurface_geometry(&e, &[1.1, 0.4]).unwrap();
        assert!((hs.geometry.scalar - 2.0 / (r * r)).abs() < 1e-12);
        // the orientation rule picks the inward normal here
        let expected = hs.geometry.metric.g.scale(-1.0 / r);
        assert!(hs.omega.try_sub(&expected).unwrap().norm() < 1e-12);
        assert!(hs.gauss_residual < 1e-12 && hs.codazzi_residual < 1e-12);
        assert_eq!(hs.normal_sign, 1.0);
    }

    #[test]
    fn paraboloid_apex_and_hyperplane() {
        let p = emb(&["u", "v"], &[], &["u", "v", "(u^2 + v^2)/2"], (3, 0), (2, 0));
        let hs = hypersurface_geometry(&p, &[0.0, 0.0]).unwrap();
        let id = DenseTensor::from_fn(2, &[Co, Co], |i| if i[0] == i[1] { 1.0 } else { 0.0 }).unwrap();
        assert!(hs.omega.try_sub(&id).unwrap().norm() < 1e-14);
        let plane = emb(&["u", "v", "w"], &[], &["u + v", "v - w", "2*w", "u"], (4, 0), (3, 0));
        let hs = hypersurface_geometry(&plane, &[0.2, 0.3, 0.4]).unwrap();
        assert_eq!(hs.omega.norm(), 0.0);
        assert_eq!(hs.gauss_residual, 0.0);
        assert_eq!(hs.codazzi_residual, 0.0);
        assert!(omega_codazzi_from_gauss(OmegaSource::Embedding(&plane), &[0.2, 0.3, 0.4]).is_err());
    }

    #[test]
    fn four_sphere_suite_and_invertible_omega() {
        let s = sphere4();
        let pt = [0.9, 1.2, 0.7, 0.3];
        let hs = hypersurface_geometry(&s, &pt).unwrap();
        assert!(hs.gauss_residual < 1e-12 && hs.codazzi_residual < 1e-12);
        assert!((hs.geometry.scalar - 12.0 / 2.25).abs() < 1e-10);
        let suite = hypersurface_compat_suite(&s, &pt).unwrap();
        assert!(suite.max_compat() < 1e-10, "{suite:?}");
        assert!(omega_codazzi_from_gauss(OmegaSource::Embedding(&s), &pt).unwrap() < 1e-12);
    }

    #[test]
    fn three_dimensional_case_is_rejected() {
        let s = emb(
            &["a", "b", "p"],
            &[],
            &["cos(a)", "sin(a)*cos(b)", "sin(a)*sin(b)*cos(p)", "sin(a)*sin(b)*sin(p)"],
            (4, 0),
            (3, 0),
        );
        assert!(matches!(
            omega_codazzi_from_gauss(OmegaSource::Embedding(&s), &[0.9, 1.0, 0.2]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn lorentzian_hyperboloid() {
        let h = emb(
            &["tau", "a", "b", "p"],
            &[],
            &[
                "sinh(tau)",
                "cosh(tau)*cos(a)",
                "cosh(tau)*sin(a)*cos(b)",
                "cosh(tau)*sin(a)*sin(b)*cos(p)",
                "cosh(tau)*sin(a)*sin(b)*sin(p)",
            ],
            (4, 1),
            (3, 1),
        );
        let pt = [0.3, 1.0, 0.8, 0.5];
        let hs = hypersurface_geometry(&h, &pt).unwrap();
        assert!(hs.gauss_residual < 1e-12 && hs.codazzi_residual < 1e-12);
        assert_eq!(hs.normal_sign, 1.0);
        assert!(hypersurface_compat_suite(&h, &pt).unwrap().max_compat() < 1e-10);
    }

    #[test]
    fn sine_profile_rotation_is_a_purely_electric_fluid() {
        // profile ρ = A sin(t/A) makes the profile curvature cancel the sphere curvature
        let h = emb(
            &["t", "z", "a", "b"],
            &[("A", 1.0)],
            &["t", "z", "A*sin(t/A)*cos(a)", "A*sin(t/A)*sin(a)*cos(b)", "A*sin(t/A)*sin(a)*sin(b)"],
            (4, 1),
            (3, 1),
        );
        let hs = hypersurface_geometry(&h, &[0.8, 0.3, 1.0, 0.5]).unwrap();
        let geo = &hs.geometry;
        let f = fluid_form(geo).unwrap().unwrap();
        assert!(f.residual < 1e-10, "{}", f.residual);
        let eh = crate::classify::electric_magnetic(geo, &f.u).unwrap();
        assert!(eh.h_norm < 1e-10, "{}", eh.h_norm);
        assert!(eh.e_norm > 1e-3, "{}", eh.e_norm);
        // u = ∂_t up to normalization
        assert!(f.u[1].abs() + f.u[2].abs() + f.u[3].abs() < 1e-10);
        assert!(f.b.abs() < 1e-10 * f.a.abs(), "{} {}", f.a, f.b);
    }
}
