//! The acceptance suite behind `weylkit verify-all`.
//!
//! Each criterion collects items of the form "largest value over the
//! instances is below a bound" or "smallest value is above a bound". An item
//! with no instances fails.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classify::{
    bel_debever, default_frame, electric_magnetic, h_equals_weyl_compat, petrov_in_frame, petrov_type, special_via_compat,
    FrameAt, PetrovType,
};
use crate::cli::sampler::sample_points;
use crate::compat::{
    bridge_identity_residual, d_tensor, hall_conditions, lovelock_residual, ricci_commutator_norm, riemann_compat_residual,
    vector_compat_residual, vector_identity_residual, vector_ricci_residual, weyl_compat_residual, Curvature, SymmetricField,
    VectorField,
};
use crate::constructs::geodesic::symmetric_panel;
use crate::constructs::kn::{kn_pair_compat, kulkarni_nomizu, solve_kn_potential};
use crate::constructs::{
    catalog, fluid_form, geodesic_map_deform, hypersurface_compat_suite, hypersurface_geometry, omega_codazzi_from_gauss,
    GeodesicMapSpec, OmegaSource, CATALOG_NAMES,
};
use crate::error::{Error, Result};
use crate::expr::{parse, BinOp, Expr, Func};
use crate::geometry::fd::christoffel_fd;
use crate::geometry::{first_bianchi_residual, metricity_residual, trace_residual, GeometryAt, MetricSource};
use crate::linalg;
use crate::residual::ratio;
use crate::spec_file::{parse_spec, Spec};
use crate::tensor::{DenseTensor, MetricAt, Variance};

use Variance::Co;

/// One judged quantity of a criterion.
#[derive(Debug, Clone, Serialize)]
pub struct Item {
    pub name: String,
    /// `"<"` or `">"`.
    pub relation: &'static str,
    /// Largest value for `<`, smallest for `>`.
    pub value: f64,
    pub bound: f64,
    pub count: usize,
    pub pass: bool,
}

impl Item {
    pub fn below(name: &str, values: &[f64], bound: f64) -> Item {
        let value = values.iter().fold(0.0f64, |m, &v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) });
        Item {
            name: name.into(),
            relation: "<",
            value,
            bound,
            count: values.len(),
            pass: !values.is_empty() && value < bound,
        }
    }

    pub fn above(name: &str, values: &[f64], bound: f64) -> Item {
        let value = values.iter().fold(f64::INFINITY, |m, &v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.min(v) });
        Item {
            name: name.into(),
            relation: ">",
            value,
            bound,
            count: values.len(),
            pass: !values.is_empty() && value > bound,
        }
    }

    fn error(e: &Error) -> Item {
        Item {
            name: format!("error: {e}"),
            relation: "<",
            value: f64::NAN,
            bound: 0.0,
            count: 0,
            pass: false,
        }
    }
}

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    pub items: Vec<Item>,
}

impl Criterion {
    fn new(id: usize, name: &str, items: Result<Vec<Item>>) -> Criterion {
        let items = items.unwrap_or_else(|e| vec![Item::error(&e)]);
        Criterion {
            id,
            name: name.into(),
            pass: !items.is_empty() && items.iter().all(|i| i.pass),
            items,
        }
    }

    /// One summary line, e.g. `PASS 1 curvature correctness (4 items)`.
    pub fn line(&self) -> String {
        let mut s = format!(
            "{} {} {} ({} items, {} instances)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.items.len(),
            self.items.iter().map(|i| i.count).sum::<usize>()
        );
        for i in self.items.iter().filter(|i| !i.pass) {
            s += &format!("; {} = {:.3e} not {} {:.1e}", i.name, i.value, i.relation, i.bound);
        }
        s
    }
}

/// Runs every criterion in order.
pub fn run_all() -> Vec<Criterion> {
    (1..=9).map(run).collect()
}

/// Runs criterion `id` (1 through 9).
pub fn run(id: usize) -> Criterion {
    match id {
        1 => Criterion::new(1, "curvature correctness", curvature_correctness()),
        2 => Criterion::new(2, "identity suite", identity_suite()),
        3 => Criterion::new(3, "theorem equivalences", theorem_equivalences()),
        4 => Criterion::new(4, "Hall conditions", hall_theorem()),
        5 => Criterion::new(5, "classification", classification()),
        6 => Criterion::new(6, "algebraically special null vectors", algebraically_special()),
        7 => Criterion::new(7, "hypersurfaces", hypersurfaces()),
        8 => Criterion::new(8, "Kulkarni-Nomizu constructions", kn_constructions()),
        9 => Criterion::new(9, "parser and CLI", parser_and_cli()),
        _ => Criterion::new(id, "unknown criterion", Err(Error::precondition(format!("no criterion {id}")))),
    }
}

fn points(spec: &Spec, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let src = spec.source();
    sample_points(src, &src.sample_ranges(), count, seed)
}

fn geometries(name: &str, count: usize, seed: u64) -> Result<Vec<GeometryAt>> {
    let spec = catalog(name)?;
    points(&spec, count, seed)?.iter().map(|p| GeometryAt::new(spec.source(), p)).collect()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn unit_timelike(m: &MetricAt, u: &[f64]) -> Vec<f64> {
    let u2 = m.dot(u, u);
    u.iter().map(|x| x / (-u2).sqrt()).collect()
}

fn curvature_correctness() -> Result<Vec<Item>> {
    let (mut bianchi, mut trace, mut metricity, mut fd) = (vec![], vec![], vec![], vec![]);
    for (ci, name) in CATALOG_NAMES.iter().enumerate() {
        let spec = catalog(name)?;
        let src = spec.source();
        for p in points(&spec, 20, 100 + ci as u64)? {
            let geo = GeometryAt::new(src, &p)?;
            bianchi.push(first_bianchi_residual(&geo.riemann_cov));
            trace.push(trace_residual(&geo.weyl_mixed, &geo.metric, geo.weyl_cov.norm() + geo.kappa())?);
            metricity.push(metricity_residual(&geo)?);
            let gamma_fd = christoffel_fd(src, &p)?;
            fd.push(ratio(gamma_fd.try_sub(&geo.gamma)?.norm(), geo.gamma.norm()));
        }
    }
    Ok(vec![
        Item::below("first Bianchi", &bianchi, 1e-9),
        Item::below("Weyl total trace", &trace, 1e-9),
        Item::below("metricity", &metricity, 1e-9),
        Item::below("Christoffel vs finite differences", &fd, 1e-5),
    ])
}

/// Three potentials in the chart's own coordinate names.
fn potentials(src: &dyn MetricSource) -> Vec<String> {
    let c = src.coords();
    vec![
        format!("0.3*{} - 0.2*{} + 0.1*{} + 0.25*{}", c[0], c[1], c[2], c[3]),
        format!("0.1*{}*{} + 0.2*sin({}) - 0.05*{}^2", c[0], c[1], c[2], c[3]),
        format!("log(3 + 0.02*{}^2 + 0.1*{}*{})", c[1], c[0], c[3]),
    ]
}

fn identity_suite() -> Result<Vec<Item>> {
    let (mut div, mut lovelock, mut bridge, mut vector, mut geodesic) = (vec![], vec![], vec![], vec![], vec![]);
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for (ci, name) in CATALOG_NAMES.iter().enumerate() {
        let spec = catalog(name)?;
        let src = spec.source();
        let n = src.dim();
        let maps = potentials(src)
            .iter()
            .map(|t| GeodesicMapSpec::parse(src, t))
            .collect::<Result<Vec<_>>>()?;
        for p in points(&spec, 3, 200 + ci as u64)? {
            let geo = GeometryAt::new(src, &p)?;
            div.push(geo.weyl_divergence_residual()?);
            lovelock.push(lovelock_residual(&geo)?);
            for b in symmetric_panel(n, 50, 300 + ci as u64) {
                bridge.push(bridge_identity_residual(&SymmetricField::point_values(b, "b")?, &geo)?);
            }
            for _ in 0..50 {
                let u = VectorField::constant(&random_vec(&mut rng, n));
                vector.push(vector_identity_residual(&u, &geo)?);
            }
            for gm in &maps {
                geodesic.push(geodesic_map_deform(gm, &geo)?.identity_residual);
            }
        }
    }
    Ok(vec![
        Item::below("Weyl divergence identity", &div, 1e-8),
        Item::below("Lovelock identity", &lovelock, 1e-8),
        Item::below("bridge identity, 50 random b", &bridge, 1e-8),
        Item::below("vector identity, 50 random u", &vector, 1e-8),
        Item::below("geodesic-map identity, 20 b x 3 potentials", &geodesic, 1e-8),
    ])
}

/// Second fundamental forms and eigenvectors on the ellipsoid.
fn ellipsoid_samples(count: usize, seed: u64) -> Result<Vec<(GeometryAt, DenseTensor)>> {
    let spec = catalog("ellipsoid_embedding")?;
    let emb = spec.embedding().expect("embedding entry");
    points(&spec, count, seed)?
        .iter()
        .map(|p| hypersurface_geometry(emb, p).map(|h| (h.geometry, h.omega)))
        .collect()
}

fn omega_eigenvectors(geo: &GeometryAt, omega: &DenseTensor) -> Result<Vec<Vec<f64>>> {
    let mixed = omega.raise_lower(0, &geo.metric)?;
    Ok(linalg::real_eigenvectors(&mixed.to_matrix()?).into_iter().map(|(_, v)| v).collect())
}

fn static_observer(geo: &GeometryAt) -> Vec<f64> {
    unit_timelike(&geo.metric, &[1.0, 0.0, 0.0, 0.0])
}

fn theorem_equivalences() -> Result<Vec<Item>> {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let ellipsoid = ellipsoid_samples(10, 400)?;
    let schw = geometries("schwarzschild", 10, 401)?;
    let frw = geometries("frw_flat", 10, 402)?;
    let godel = geometries("godel", 5, 403)?;
    let fluid = sine_rotation(5, 404)?;
    let random_b = |rng: &mut ChaCha8Rng| -> Result<SymmetricField> {
        let v = random_vec(rng, 16);
        let t = DenseTensor::from_fn(4, &[Co, Co], |i| v[4 * i[0] + i[1]] + v[4 * i[1] + i[0]])?;
        SymmetricField::point_values(t, "random")
    };
    // Riemann compatibility versus Weyl compatibility plus commutation
    let (mut pos, mut neg) = (vec![], vec![]);
    for (geo, omega) in &ellipsoid {
        let b = SymmetricField::point_values(omega.clone(), "omega")?;
        let rhs = weyl_compat_residual(&b, geo)?.max(ricci_commutator_norm(&b, geo)?);
        pos.push(riemann_compat_residual(&b, geo)?.max(rhs));
    }
    for geo in schw.iter().take(5).chain(frw.iter().take(5)).chain(ellipsoid.iter().take(5).map(|x| &x.0)) {
        let b = random_b(&mut rng)?;
        let rhs = weyl_compat_residual(&b, geo)?.max(ricci_commutator_norm(&b, geo)?);
        neg.push(riemann_compat_residual(&b, geo)?.min(rhs));
    }
    let mut items = vec![
        Item::below("tensor theorem, positive", &pos, 1e-8),
        Item::above("tensor theorem, negative", &neg, 1e-3),
    ];
    // vector version
    let vector_sides = |u: &VectorField, geo: &GeometryAt| -> Result<(f64, f64)> {
        let lhs = vector_compat_residual(u, geo, Curvature::Riemann)?;
        let rhs = vector_compat_residual(u, geo, Curvature::Weyl)?.max(vector_ricci_residual(u, geo)?);
        Ok((lhs, rhs))
    };
    let (mut pos, mut neg) = (vec![], vec![]);
    for (geo, omega) in ellipsoid.iter().take(3) {
        for v in omega_eigenvectors(geo, omega)? {
            let (l, r) = vector_sides(&VectorField::constant(&v), geo)?;
            pos.push(l.max(r));
        }
    }
    for geo in schw.iter().take(5).chain(frw.iter().take(5)) {
        let (l, r) = vector_sides(&VectorField::constant(&[1.0, 0.0, 0.0, 0.0]), geo)?;
        pos.push(l.max(r));
    }
    for geo in schw.iter().take(5).chain(frw.iter().take(5)).chain(ellipsoid.iter().take(5).map(|x| &x.0)) {
        let (l, r) = vector_sides(&VectorField::constant(&random_vec(&mut rng, 4)), geo)?;
        neg.push(l.min(r));
    }
    items.push(Item::below("vector theorem, positive", &pos, 1e-8));
    items.push(Item::above("vector theorem, negative", &neg, 1e-3));
    // H = 0 against Weyl vector compatibility
    let (mut pos, mut neg) = (vec![], vec![]);
    for geo in &schw {
        let (h, c) = h_equals_weyl_compat(geo, &static_observer(geo))?;
        pos.push(h.max(c));
    }
    for geo in &fluid {
        let f = fluid_form(geo)?.ok_or_else(|| Error::precondition("no timelike Ricci eigenvector"))?;
        let (h, c) = h_equals_weyl_compat(geo, &f.u)?;
        pos.push(h.max(c));
    }
    for geo in &schw {
        // tangential boost
        let u = unit_timelike(&geo.metric, &[1.0, 0.0, 0.08, 0.03]);
        let (h, c) = h_equals_weyl_compat(geo, &u)?;
        neg.push(h.min(c));
    }
    for geo in &godel {
        let u = unit_timelike(&geo.metric, &[1.0, 0.3, 0.2, 0.0]);
        let (h, c) = h_equals_weyl_compat(geo, &u)?;
        neg.push(h.min(c));
    }
    items.push(Item::below("purely electric theorem, positive", &pos, 1e-8));
    items.push(Item::above("purely electric theorem, negative", &neg, 1e-3));
    // D-tensor reconstruction for non-null compatible vectors
    let (mut pos, mut neg) = (vec![], vec![]);
    for geo in &schw {
        let d = d_tensor(&VectorField::constant(&[1.0, 0.0, 0.0, 0.0]), geo, Curvature::Weyl)?;
        pos.push(d.reconstruction_residual);
    }
    for geo in &fluid {
        let f = fluid_form(geo)?.ok_or_else(|| Error::precondition("no timelike Ricci eigenvector"))?;
        pos.push(d_tensor(&VectorField::constant(&f.u), geo, Curvature::Weyl)?.reconstruction_residual);
    }
    for (geo, omega) in ellipsoid.iter().take(3) {
        for v in omega_eigenvectors(geo, omega)? {
            pos.push(d_tensor(&VectorField::constant(&v), geo, Curvature::Riemann)?.reconstruction_residual);
        }
    }
    for geo in schw.iter().chain(&godel) {
        let mut u = random_vec(&mut rng, 4);
        u[0] += 3.0;
        neg.push(d_tensor(&VectorField::constant(&u), geo, Curvature::Weyl)?.reconstruction_residual);
    }
    items.push(Item::below("D-tensor reconstruction, positive", &pos, 1e-8));
    items.push(Item::above("D-tensor reconstruction, negative", &neg, 1e-3));
    Ok(items)
}

fn hall_theorem() -> Result<Vec<Item>> {
    const HOLDS: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut instances: Vec<(GeometryAt, Vec<f64>)> = Vec::new();
    for geo in geometries("de_sitter_static", 5, 500)? {
        let k = {
            let f = 1.0 - geo.point[1] * geo.point[1] / 4.0;
            vec![1.0 / f, 1.0, 0.0, 0.0]
        };
        for _ in 0..3 {
            instances.push((geo.clone(), random_vec(&mut rng, 4)));
        }
        instances.push((geo, k));
    }
    for geo in geometries("pp_wave", 5, 501)? {
        instances.push((geo.clone(), vec![0.0, 1.0, 0.0, 0.0]));
        for _ in 0..2 {
            instances.push((geo.clone(), random_vec(&mut rng, 4)));
        }
    }
    for geo in geometries("frw_flat", 5, 502)? {
        instances.push((geo, vec![1.0, 0.0, 0.0, 0.0]));
    }
    let (mut ab_c, mut ac_b, mut bc_a, mut a_bc) = (vec![], vec![], vec![], vec![]);
    for (geo, u) in &instances {
        let h = hall_conditions(&VectorField::constant(u), geo)?;
        if h.a < HOLDS && h.b < HOLDS {
            ab_c.push(h.c);
        }
        if h.a < HOLDS && h.c < HOLDS {
            ac_b.push(h.b);
        }
        if h.b < HOLDS && h.c < HOLDS {
            bc_a.push(h.a);
        }
        let lo = geo.metric.lower(u);
        let u2: f64 = lo.iter().zip(u).map(|(x, y)| x * y).sum();
        if h.a < HOLDS && u2.abs() > 1e-6 {
            a_bc.push(h.b.max(h.c));
        }
    }
    Ok(vec![
        Item::below("A and B force C", &ab_c, 1e-7),
        Item::below("A and C force B", &ac_b, 1e-7),
        Item::below("B and C force A", &bc_a, 1e-7),
        Item::below("A forces B and C for non-null u", &a_bc, 1e-7),
    ])
}

fn rotated(frame: &FrameAt, rng: &mut ChaCha8Rng) -> FrameAt {
    let axis = random_vec(rng, 3);
    let r = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (x, y, z) = (axis[0] / r, axis[1] / r, axis[2] / r);
    let t: f64 = rng.gen_range(0.0..6.0);
    let (c, s) = (t.cos(), t.sin());
    let rot = [
        [c + x * x * (1.0 - c), x * y * (1.0 - c) - z * s, x * z * (1.0 - c) + y * s],
        [y * x * (1.0 - c) + z * s, c + y * y * (1.0 - c), y * z * (1.0 - c) - x * s],
        [z * x * (1.0 - c) - y * s, z * y * (1.0 - c) + x * s, c + z * z * (1.0 - c)],
    ];
    let mut vectors = vec![frame.vectors[0].clone()];
    for row in &rot {
        vectors.push((0..4).map(|k| (0..3).map(|j| row[j] * frame.vectors[j + 1][k]).sum()).collect());
    }
    FrameAt {
        vectors,
        gram_residual: frame.gram_residual,
    }
}

fn mismatches(geos: &[GeometryAt], want: PetrovType) -> Result<Vec<f64>> {
    geos.iter()
        .map(|g| Ok(if petrov_type(g, 1e-7)?.petrov_type == want { 0.0 } else { 1.0 }))
        .collect()
}

fn classification() -> Result<Vec<Item>> {
    let schw = geometries("schwarzschild", 20, 600)?;
    let pp = geometries("pp_wave", 20, 601)?;
    let ds = geometries("de_sitter_static", 20, 602)?;
    let mut items = vec![
        Item::below("Schwarzschild is type D (mismatches)", &mismatches(&schw, PetrovType::D)?, 0.5),
        Item::below("pp-wave is type N (mismatches)", &mismatches(&pp, PetrovType::N)?, 0.5),
        Item::below("de Sitter is type O (mismatches)", &mismatches(&ds, PetrovType::O)?, 0.5),
    ];
    let res_n: Vec<f64> = pp.iter().map(|g| bel_debever(g, &[0.0, 1.0, 0.0, 0.0]).map(|b| b.res_n)).collect::<Result<_>>()?;
    items.push(Item::below("pp-wave res_N for k = d/dv", &res_n, 1e-9));
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut rot = Vec::new();
    for geo in [&schw[0], &pp[0], &geometries("godel", 1, 603)?[0]] {
        let frame = default_frame(&geo.metric)?;
        let base = petrov_in_frame(geo, &frame, 1e-7)?.petrov_type;
        for _ in 0..20 {
            let t = petrov_in_frame(geo, &rotated(&frame, &mut rng), 1e-7)?.petrov_type;
            rot.push(if t == base { 0.0 } else { 1.0 });
        }
    }
    items.push(Item::below("type invariant under 20 rotations (mismatches)", &rot, 0.5));
    let (mut h, mut tr, mut orth) = (vec![], vec![], vec![]);
    for geo in &schw {
        let eh = electric_magnetic(geo, &static_observer(geo))?;
        h.push(eh.h_norm);
        tr.push(eh.trace_residual);
        orth.push(eh.orthogonality_residual);
    }
    items.push(Item::below("static observer |H|", &h, 1e-9));
    items.push(Item::below("static observer E traceless", &tr, 1e-9));
    items.push(Item::below("static observer E.u = 0", &orth, 1e-9));
    Ok(items)
}

fn algebraically_special() -> Result<Vec<Item>> {
    let mut candidates: Vec<(GeometryAt, Vec<f64>)> = Vec::new();
    for geo in geometries("pp_wave", 10, 700)? {
        candidates.push((geo, vec![0.0, 1.0, 0.0, 0.0]));
    }
    for geo in geometries("schwarzschild", 10, 701)? {
        let f = 1.0 - 2.0 / geo.point[1];
        candidates.push((geo.clone(), vec![1.0 / f, 1.0, 0.0, 0.0]));
        candidates.push((geo, vec![1.0 / f, -1.0, 0.0, 0.0]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for geo in geometries("frw_flat", 5, 702)? {
        let mut n = random_vec(&mut rng, 3);
        let r = n.iter().map(|x| x * x).sum::<f64>().sqrt();
        n.iter_mut().for_each(|x| *x /= r);
        let a = geo.point[0].powf(2.0 / 3.0);
        candidates.push((geo, vec![1.0, n[0] / a, n[1] / a, n[2] / a]));
    }
    let (mut compat, mut iid) = (vec![], vec![]);
    for (geo, k) in &candidates {
        let (c, r) = special_via_compat(geo, k)?;
        compat.push(c);
        iid.push(r);
    }
    Ok(vec![
        Item::below("constructed null vectors are Weyl compatible", &compat, 1e-8),
        Item::below("res_IID of Weyl-compatible null vectors", &iid, 1e-8),
    ])
}

/// Rotation surface with profile `ρ = A sin(t/A)`: its induced Ricci tensor is
/// a dust fluid and its Weyl tensor does not vanish.
const SINE_ROTATION: &str = "\
[meta]
name = sine_rotation
dim = 4
signature = 3,1
ambient_signature = 4,1

[coords]
t z a b

[params]
A = 1

[embedding]
X 0 = t
X 1 = z
X 2 = A*sin(t/A)*cos(a)
X 3 = A*sin(t/A)*sin(a)*cos(b)
X 4 = A*sin(t/A)*sin(a)*sin(b)

[sample]
t = 0.3 .. 2.8
z = -1 .. 1
a = 0.4 .. pi - 0.4
b = 0.3 .. 2.8
";

fn sine_rotation(count: usize, seed: u64) -> Result<Vec<GeometryAt>> {
    let spec = parse_spec(SINE_ROTATION, "sine_rotation")?;
    let emb = spec.embedding().expect("embedding entry");
    points(&spec, count, seed)?
        .iter()
        .map(|p| hypersurface_geometry(emb, p).map(|h| h.geometry))
        .collect()
}

fn hypersurfaces() -> Result<Vec<Item>> {
    let (mut gauss, mut codazzi, mut suite, mut inv) = (vec![], vec![], vec![], vec![]);
    let (mut fluid, mut h, mut e) = (vec![], vec![], vec![]);
    for (si, name) in ["sphere_embedding", "hyperboloid_embedding", "ellipsoid_embedding"].iter().enumerate() {
        let spec = catalog(name)?;
        let emb = spec.embedding().expect("embedding entry");
        for p in points(&spec, 10, 800 + si as u64)? {
            let s = hypersurface_compat_suite(emb, &p)?;
            if si < 2 {
                gauss.push(s.gauss_residual);
                codazzi.push(s.codazzi_residual);
            }
            suite.push(s.max_compat());
            inv.push(omega_codazzi_from_gauss(OmegaSource::Embedding(emb), &p)?);
        }
    }
    for geo in sine_rotation(10, 810)? {
        let f = fluid_form(&geo)?.ok_or_else(|| Error::precondition("no timelike Ricci eigenvector"))?;
        let eh = electric_magnetic(&geo, &f.u)?;
        fluid.push(f.residual);
        h.push(eh.h_norm);
        e.push(eh.e_norm);
    }
    Ok(vec![
        Item::below("Gauss equation, sphere and hyperboloid", &gauss, 1e-9),
        Item::below("Codazzi equation, sphere and hyperboloid", &codazzi, 1e-9),
        Item::below("compatibility suite", &suite, 1e-8),
        Item::below("invertible second fundamental form is Codazzi", &inv, 1e-8),
        Item::below("induced Ricci has perfect-fluid form", &fluid, 1e-8),
        Item::below("perfect-fluid observer |H|", &h, 1e-8),
        Item::above("perfect-fluid observer |E| (non-trivial Weyl)", &e, 1e-3),
    ])
}

fn random_rotation(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}

/// Random proper boost composed with a spatial rotation.
fn random_lorentz(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut rot = DMatrix::<f64>::identity(4, 4);
    let q = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
    rot.view_mut((1, 1), (3, 3)).copy_from(&q);
    let phi: f64 = rng.gen_range(-1.0..1.0);
    let mut boost = DMatrix::<f64>::identity(4, 4);
    boost[(0, 0)] = phi.cosh();
    boost[(1, 1)] = phi.cosh();
    boost[(0, 1)] = phi.sinh();
    boost[(1, 0)] = phi.sinh();
    boost * rot
}

/// `Lᵀ diag(d) L` as a covariant tensor.
fn conjugated(l: &DMatrix<f64>, d: &[f64]) -> Result<DenseTensor> {
    let m = l.transpose() * DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(d)) * l;
    DenseTensor::from_matrix(&m, [Co, Co])
}

fn kn_constructions() -> Result<Vec<Item>> {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let euclid = MetricAt::euclidean(4);
    let mink = MetricAt::minkowski(4);
    let mut pair = Vec::new();
    for k in 0..20 {
        let (da, db) = (random_vec(&mut rng, 4), random_vec(&mut rng, 4));
        let (a, b, m) = if k % 2 == 0 {
            let q = random_rotation(&mut rng);
            (conjugated(&q, &da)?, conjugated(&q, &db)?, &euclid)
        } else {
            // L η Lᵀ = η keeps the pair commuting with respect to η
            let l = random_lorentz(&mut rng);
            (conjugated(&l, &da)?, conjugated(&l, &db)?, &mink)
        };
        let (ra, rb) = kn_pair_compat(&a, &b, m)?;
        pair.push(ra.max(rb));
    }
    let (mut eq, mut traceless) = (vec![], vec![]);
    for k in 0..10 {
        let (b, m) = if k % 2 == 0 {
            let s: f64 = rng.gen_range(0.5..2.0);
            (conjugated(&random_rotation(&mut rng), &[s, -s, 0.0, 0.0])?, &euclid)
        } else {
            (conjugated(&random_lorentz(&mut rng), &[1.0, -1.0, 1.0, -1.0])?, &mink)
        };
        let p = solve_kn_potential(&b, m)?;
        eq.push(p.residual);
        let kn = kulkarni_nomizu(&p.a, &b)?;
        traceless.push(trace_residual(&kn.raise_lower(3, m)?, m, kn.norm())?);
    }
    Ok(vec![
        Item::below("commuting pairs are compatible with their product", &pair, 1e-12),
        Item::below("potential solves the trace condition", &eq, 1e-10),
        Item::below("product with the potential is traceless", &traceless, 1e-10),
    ])
}

/// Random expression tree over a few identifiers.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    const IDENTS: [&str; 4] = ["x", "r", "theta", "M"];
    const NUMS: [f64; 6] = [0.5, 1.0, 2.0, 3.25, 1e-3, 12.0];
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..3) {
            0 => Expr::num(NUMS[rng.gen_range(0..NUMS.len())]),
            1 => Expr::Pi,
            _ => Expr::ident(IDENTS[rng.gen_range(0..IDENTS.len())]),
        };
    }
    match rng.gen_range(0..4) {
        0 => Expr::neg(random_expr(rng, depth - 1)),
        1 => Expr::call(Func::ALL[rng.gen_range(0..Func::ALL.len())], random_expr(rng, depth - 1)),
        _ => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][rng.gen_range(0..5)];
            Expr::binary(op, random_expr(rng, depth - 1), random_expr(rng, depth - 1))
        }
    }
}

/// Spec-file inputs and their exact error text.
pub const SPEC_GOLDEN: &[(&str, &str)] = &[
    ("[meta]\nname = a\ndim = 2\nsignature = 2,0\n[metric]\ng 0 0 = 1\n", "bad.spec:6:1: missing section [coords]"),
    (
        "[meta]\nname = a\ndim = 2\nsignature = 2,0\n[coords]\nx y\n[metric]\ng 0 1 = x\ng 1 0 = -x\ng 0 0 = 1\ng 1 1 = 1\n",
        "bad.spec:9:1: symmetry conflict: g 1 0 = -x but g 0 1 = x on line 8",
    ),
    (
        "[meta]\nname = a\ndim = 2\nsignature = 2,0\n[coords]\nx y\n[metric]\ng 0 0 = 1 + *x\ng 1 1 = 1\n",
        "bad.spec:8:13: expected operand, found `*`",
    ),
];

fn parser_and_cli() -> Result<Vec<Item>> {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let mut round = Vec::new();
    for _ in 0..500 {
        let e = random_expr(&mut rng, 5);
        let back = parse(&e.to_string())?;
        round.push(if back == e { 0.0 } else { 1.0 });
    }
    let mut golden = Vec::new();
    for (text, want) in SPEC_GOLDEN {
        let got = match parse_spec(text, "bad.spec") {
            Ok(_) => "parsed".to_string(),
            Err(e) => e.to_string(),
        };
        golden.push(if got == *want { 0.0 } else { 1.0 });
    }
    for name in CATALOG_NAMES {
        golden.push(if catalog(name).map(|s| s.name() == *name).unwrap_or(false) { 0.0 } else { 1.0 });
    }
    let run = |args: &[&str]| -> (i32, Vec<u8>) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = crate::cli::run(std::iter::once("weylkit").chain(args.iter().copied()), &mut out, &mut err);
        (code, out)
    };
    let args = ["curvature", "--catalog", "schwarzschild", "--points", "3", "--seed", "7", "--quiet"];
    let (c1, r1) = run(&args);
    let (c2, r2) = run(&args);
    let (_, r3) = run(&["curvature", "--catalog", "schwarzschild", "--points", "3", "--seed", "8", "--quiet"]);
    let identical = vec![if c1 == 0 && c2 == 0 && r1 == r2 && !r1.is_empty() && r1 != r3 { 0.0 } else { 1.0 }];
    let bad_spec = std::env::temp_dir().join(format!("weylkit-verify-{}.spec", std::process::id()));
    std::fs::write(&bad_spec, SPEC_GOLDEN[2].0).map_err(|e| Error::precondition(e.to_string()))?;
    let bad_path = bad_spec.to_string_lossy().to_string();
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["classify", "--catalog", "pp_wave", "--points", "2", "--observer", "0,1,0,0", "--expect-type", "N", "--quiet"], 0),
        (vec!["classify", "--catalog", "schwarzschild", "--points", "2", "--expect-type", "N", "--quiet"], 1),
        (vec!["curvature", "--spec", &bad_path, "--quiet"], 2),
        (vec!["geodesic-map", "--catalog", "minkowski", "--psi", "1 +", "--quiet"], 2),
        (vec!["curvature", "--catalog", "no_such_metric", "--quiet"], 2),
        (vec!["curvature", "--catalog", "schwarzschild", "--point", "0,2,1,0", "--quiet"], 3),
        (vec!["curvature", "--catalog", "schwarzschild", "--range", "r=2:2", "--quiet"], 3),
    ];
    let mut codes = Vec::new();
    for (args, want) in &cases {
        let (code, _) = run(args);
        codes.push(if code == *want { 0.0 } else { 1.0 });
    }
    let _ = std::fs::remove_file(&bad_spec);
    Ok(vec![
        Item::below("expression round trip, 500 random trees (failures)", &round, 0.5),
        Item::below("spec-file golden cases (failures)", &golden, 0.5),
        Item::below("byte-identical reports for a fixed seed (failures)", &identical, 0.5),
        Item::below("documented exit codes (failures)", &codes, 0.5),
    ])
}
