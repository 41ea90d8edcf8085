//! Curvature generators and verifiers: Kulkarni–Nomizu products,
//! hypersurfaces of flat spaces, geodesic maps and the example catalog.

pub mod catalog;
pub mod geodesic;
pub mod hypersurface;
pub mod kn;

pub use catalog::{catalog, catalog_text, CATALOG_NAMES};
pub use geodesic::{geodesic_map_deform, geodesic_map_weyl_transfer, Deformation, GeodesicMapSpec, WeylTransfer};
pub use hypersurface::{
    fluid_form, hypersurface_compat_suite, hypersurface_geometry, omega_codazzi_from_gauss, EmbeddingSpec, FluidForm, HypersurfaceAt,
    HypersurfaceSuite, OmegaSource,
};
pub use kn::{kn_weyl_condition_residual, kulkarni_nomizu, solve_kn_potential, KnPotential};
