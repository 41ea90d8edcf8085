//! Seeded uniform sampling of chart points.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::MetricSource;

/// Rejections tolerated before sampling gives up.
pub const MAX_REJECTIONS: usize = 1000;

/// `|det g| < DET_FLOOR · max|g_ij|^n` counts as a coordinate singularity.
pub const DET_FLOOR: f64 = 1e-10;

/// Why a point was rejected: the metric error, or a near-zero determinant.
fn check(source: &dyn MetricSource, p: &[f64]) -> Result<()> {
    let m = source.metric_at(p)?;
    let scale = m.g.max_abs().powi(source.dim() as i32);
    if m.det_g.is_finite() && m.det_g.abs() >= DET_FLOOR * scale {
        Ok(())
    } else {
        Err(Error::DegenerateMetric { det: m.det_g })
    }
}

/// Whether the metric at `p` is usable: finite, non-degenerate and of the
/// expected signature.
pub fn admissible(source: &dyn MetricSource, p: &[f64]) -> bool {
    check(source, p).is_ok()
}

/// Draws `count` points uniformly in `ranges`, rejecting inadmissible ones.
/// After [`MAX_REJECTIONS`] rejections the last rejection reason is returned.
pub fn sample_points(source: &dyn MetricSource, ranges: &[(f64, f64)], count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut rejected = 0;
    while out.len() < count {
        let p: Vec<f64> = ranges
            .iter()
            .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo })
            .collect();
        match check(source, &p) {
            Ok(()) => out.push(p),
            Err(e) => {
                rejected += 1;
                if rejected >= MAX_REJECTIONS {
                    return Err(e);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructs::catalog;

    #[test]
    fn seed_determines_points() {
        let s = catalog("schwarzschild").unwrap();
        let r = s.source().sample_ranges();
        let a = sample_points(s.source(), &r, 5, 7).unwrap();
        let b = sample_points(s.source(), &r, 5, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_points(s.source(), &r, 5, 8).unwrap());
        for p in &a {
            assert!((3.0..10.0).contains(&p[1]));
        }
    }

    #[test]
    fn horizon_box_is_rejected() {
        let s = catalog("schwarzschild").unwrap();
        let ranges = [(0.0, 0.0), (2.0, 2.0), (1.0, 1.0), (0.0, 0.0)];
        assert!(matches!(sample_points(s.source(), &ranges, 1, 0), Err(Error::Domain { .. })));
        let on_axis = [(0.0, 0.0), (4.0, 4.0), (0.0, 0.0), (0.0, 0.0)];
        assert!(matches!(sample_points(s.source(), &on_axis, 1, 0), Err(Error::DegenerateMetric { .. })));
    }

    #[test]
    fn wrong_signature_is_reported_as_such() {
        let text = "[meta]\nname = s\ndim = 2\nsignature = 2,0\n[coords]\nx y\n[metric]\ng 0 0 = -1\ng 1 1 = 1\n";
        let s = crate::spec_file::parse_spec(text, "s.spec").unwrap();
        let ranges = [(0.0, 1.0), (0.0, 1.0)];
        assert!(matches!(sample_points(s.source(), &ranges, 1, 0), Err(Error::Signature { .. })));
    }
}
