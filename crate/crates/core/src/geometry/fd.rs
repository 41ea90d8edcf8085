//! Central finite-difference oracle for the connection and curvature.
//!
//! Independent of the Taylor engine's derivative propagation: only point
//! values of the metric (for Γ) or of the AD connection (for R) are sampled.

use super::{check_point, christoffel, MetricSource};
use crate::error::Result;
use crate::tensor::{DenseTensor, Variance};

fn step(x: f64, rel: f64) -> f64 {
    rel * x.abs().max(1.0)
}

/// Γ^k_ij from central differences of the metric components.
pub fn christoffel_fd(source: &dyn MetricSource, point: &[f64]) -> Result<DenseTensor> {
    let n = source.dim();
    check_point(point, n)?;
    let m = source.metric_at(point)?;
    let mut dg = vec![0.0; n * n * n]; // [a][b][c] = ∂_a g_bc
    for a in 0..n {
        let h = step(point[a], 1e-5);
        let mut p = point.to_vec();
        p[a] = point[a] + h;
        let plus = source.metric_jet(&p, 0)?.values();
        p[a] = point[a] - h;
        let minus = source.metric_jet(&p, 0)?.values();
        for bc in 0..n * n {
            dg[a * n * n + bc] = (plus.data()[bc] - minus.data()[bc]) / (2.0 * h);
        }
    }
    let gi = m.g_inv.data();
    DenseTensor::from_fn(n, &[Variance::Contra, Variance::Co, Variance::Co], |idx| {
        let (k, i, j) = (idx[0], idx[1], idx[2]);
        let mut acc = 0.0;
        for l in 0..n {
            let first = dg[(i * n + j) * n + l] + dg[(j * n + i) * n + l] - dg[(l * n + i) * n + j];
            acc += 0.5 * gi[k * n + l] * first;
        }
        acc
    })
}

/// R_abc^m from central differences of the connection.
pub fn riemann_fd(source: &dyn MetricSource, point: &[f64]) -> Result<DenseTensor> {
    let n = source.dim();
    let gamma = christoffel(source, point)?;
    let mut dgam = Vec::with_capacity(n);
    for a in 0..n {
        let h = step(point[a], 1e-4);
        let mut p = point.to_vec();
        p[a] = point[a] + h;
        let plus = christoffel(source, &p)?;
        p[a] = point[a] - h;
        let minus = christoffel(source, &p)?;
        dgam.push(plus.try_sub(&minus)?.scale(0.5 / h));
    }
    DenseTensor::from_fn(
        n,
        &[Variance::Co, Variance::Co, Variance::Co, Variance::Contra],
        |i| {
            let (a, b, c, m) = (i[0], i[1], i[2], i[3]);
            let mut acc = -dgam[a].get(&[m, b, c]) + dgam[b].get(&[m, a, c]);
            for p in 0..n {
                acc += gamma.get(&[p, a, c]) * gamma.get(&[m, b, p]) - gamma.get(&[p, b, c]) * gamma.get(&[m, a, p]);
            }
            acc
        },
    )
}
