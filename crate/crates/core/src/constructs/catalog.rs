//! Built-in metrics and embeddings, stored as spec-file text.
//!
//! `sphere_embedding` defaults to the 4-sphere; `sphere_embedding:n` selects
//! the n-sphere for n in 2..=5.

use crate::error::{Error, Result};
use crate::spec_file::{parse_spec, Spec};

/// Names accepted by [`catalog`] (the sphere also takes a `:n` suffix).
pub const CATALOG_NAMES: &[&str] = &[
    "minkowski",
    "schwarzschild",
    "de_sitter_static",
    "godel",
    "pp_wave",
    "frw_flat",
    "sphere_embedding",
    "hyperboloid_embedding",
    "ellipsoid_embedding",
];

const MINKOWSKI: &str = "\
[meta]
name = minkowski
dim = 4
signature = 3,1

[coords]
t x y z

[metric]
g 0 0 = -1
g 1 1 = 1
g 2 2 = 1
g 3 3 = 1

[sample]
t = -1 .. 1
x = -1 .. 1
y = -1 .. 1
z = -1 .. 1
";

const SCHWARZSCHILD: &str = "\
[meta]
name = schwarzschild
dim = 4
signature = 3,1

[coords]
t r theta phi

[params]
M = 1

[metric]
g 0 0 = -(1 - 2*M/r)
g 1 1 = 1/(1 - 2*M/r)
g 2 2 = r^2
g 3 3 = r^2*sin(theta)^2

[sample]
t = 0 .. 1
r = 3 .. 10
theta = 0.4 .. pi - 0.4
phi = 0 .. 2*pi
";

const DE_SITTER_STATIC: &str = "\
# constant curvature 1/L^2
[meta]
name = de_sitter_static
dim = 4
signature = 3,1

[coords]
t r theta phi

[params]
L = 2

[metric]
g 0 0 = -(1 - r^2/L^2)
g 1 1 = 1/(1 - r^2/L^2)
g 2 2 = r^2
g 3 3 = r^2*sin(theta)^2

[sample]
t = 0 .. 1
r = 0.3 .. 1.6
theta = 0.4 .. pi - 0.4
phi = 0 .. 2*pi
";

const GODEL: &str = "\
# a^2 [ -(dt + e^x dz)^2 + dx^2 + dy^2 + e^(2x) dz^2 / 2 ]
[meta]
name = godel
dim = 4
signature = 3,1

[coords]
t x y z

[params]
omega = 0.5
a2 = 1/(2*omega^2)

[metric]
g 0 0 = -a2
g 0 3 = -a2*exp(x)
g 1 1 = a2
g 2 2 = a2
g 3 3 = -a2*exp(2*x)/2

[sample]
t = -1 .. 1
x = -1 .. 1
y = -1 .. 1
z = -1 .. 1
";

const PP_WAVE: &str = "\
# vacuum plane-fronted wave, k = d/dv
[meta]
name = pp_wave
dim = 4
signature = 3,1

[coords]
u v x y

[params]
A = 1

[metric]
g 0 0 = A*(1 + 0.5*sin(u))*(x^2 - y^2)
g 0 1 = 1
g 2 2 = 1
g 3 3 = 1

[sample]
u = 0 .. 2
v = -1 .. 1
x = -1 .. 1
y = -1 .. 1
";

const FRW_FLAT: &str = "\
# dust-filled spatially flat expansion
[meta]
name = frw_flat
dim = 4
signature = 3,1

[coords]
t x y z

[metric]
g 0 0 = -1
g 1 1 = t^(4/3)
g 2 2 = t^(4/3)
g 3 3 = t^(4/3)

[sample]
t = 0.5 .. 2
x = -1 .. 1
y = -1 .. 1
z = -1 .. 1
";

const HYPERBOLOID: &str = "\
# timelike hypersurface of revolution -X0^2/A^2 + |X|^2/B^2 = 1
[meta]
name = hyperboloid_embedding
dim = 4
signature = 3,1
ambient_signature = 4,1

[coords]
tau a b p

[params]
A = 1
B = 1.5

[embedding]
X 0 = A*sinh(tau)
X 1 = B*cosh(tau)*cos(a)
X 2 = B*cosh(tau)*sin(a)*cos(b)
X 3 = B*cosh(tau)*sin(a)*sin(b)*cos(p)
X 4 = B*cosh(tau)*sin(a)*sin(b)*sin(p)

[sample]
tau = -0.5 .. 0.5
a = 0.4 .. pi - 0.4
b = 0.4 .. pi - 0.4
p = 0.3 .. 2.8
";

/// Hyperspherical embedding text for the n-sphere of radius `r`, or with
/// semi-axes `axes` (length n + 1) for an ellipsoid.
fn round_text(name: &str, n: usize, axes: Option<&[f64]>) -> String {
    let coords: Vec<String> = (1..=n).map(|i| format!("a{i}")).collect();
    let mut s = format!("[meta]\nname = {name}\ndim = {n}\nsignature = {n},0\nambient_signature = {},0\n\n", n + 1);
    s += &format!("[coords]\n{}\n\n[params]\n", coords.join(" "));
    match axes {
        None => s += "r = 1.5\n",
        Some(ax) => {
            for (i, a) in ax.iter().enumerate() {
                s += &format!("c{i} = {a}\n");
            }
        }
    }
    s += "\n[embedding]\n";
    for mu in 0..=n {
        let mut factors: Vec<String> = coords[..mu.min(n)].iter().map(|c| format!("sin({c})")).collect();
        if mu < n {
            factors.push(format!("cos({})", coords[mu]));
        } else {
            factors.pop();
            factors.push(format!("sin({})", coords[n - 1]));
        }
        let scale = if axes.is_some() { format!("c{mu}") } else { "r".to_string() };
        s += &format!("X {mu} = {scale}*{}\n", factors.join("*"));
    }
    s += "\n[sample]\n";
    for (i, c) in coords.iter().enumerate() {
        if i + 1 < n {
            s += &format!("{c} = 0.4 .. pi - 0.4\n");
        } else {
            s += &format!("{c} = 0.3 .. 2.8\n");
        }
    }
    s
}

/// Spec-file text for a catalog name.
pub fn catalog_text(name: &str) -> Result<String> {
    let unknown = || Error::UnknownCatalog(name.to_string());
    Ok(match name {
        "minkowski" => MINKOWSKI.to_string(),
        "schwarzschild" => SCHWARZSCHILD.to_string(),
        "de_sitter_static" => DE_SITTER_STATIC.to_string(),
        "godel" => GODEL.to_string(),
        "pp_wave" => PP_WAVE.to_string(),
        "frw_flat" => FRW_FLAT.to_string(),
        "hyperboloid_embedding" => HYPERBOLOID.to_string(),
        "ellipsoid_embedding" => round_text(name, 4, Some(&[1.0, 1.3, 1.7, 2.2, 2.8])),
        "sphere_embedding" => round_text(name, 4, None),
        _ => {
            let n = name
                .strip_prefix("sphere_embedding:")
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|n| (2..=5).contains(n))
                .ok_or_else(unknown)?;
            round_text(name, n, None)
        }
    })
}

/// Loads a catalog entry.
pub fn catalog(name: &str) -> Result<Spec> {
    let text = catalog_text(name)?;
    parse_spec(&text, &format!("catalog:{name}"))
}
