//! Kulkarni–Nomizu curvature builders and the trace condition on their
//! potentials.

use nalgebra::{DMatrix, DVector};

use crate::compat::cyclic_sum;
use crate::error::{Error, Result};
use crate::linalg::{nullspace, real_eigenvectors};
use crate::residual::ratio;
use crate::tensor::{DenseTensor, MetricAt, Variance::Co};

/// `R_jklm = b_lj a_km − b_lk a_jm + b_mk a_jl − b_mj a_kl`
pub fn kulkarni_nomizu(a: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    check_pair(a, b)?;
    DenseTensor::from_fn(a.dim(), &[Co, Co, Co, Co], |i| {
        let (j, k, l, m) = (i[0], i[1], i[2], i[3]);
        b.get(&[l, j]) * a.get(&[k, m]) - b.get(&[l, k]) * a.get(&[j, m]) + b.get(&[m, k]) * a.get(&[j, l])
            - b.get(&[m, j]) * a.get(&[k, l])
    })
}

fn check_pair(a: &DenseTensor, b: &DenseTensor) -> Result<()> {
    for t in [a, b] {
        if t.rank() != 2 || t.variance() != [Co, Co] {
            return Err(Error::shape("expected covariant rank-2 tensors"));
        }
    }
    if a.dim() != b.dim() {
        return Err(Error::shape("dimension mismatch"));
    }
    Ok(())
}

/// `(x g⁻¹ y)_kl`
fn product(x: &DenseTensor, y: &DenseTensor, m: &MetricAt) -> Result<DenseTensor> {
    let n = x.dim();
    DenseTensor::from_fn(n, &[Co, Co], |i| {
        let mut s = 0.0;
        for p in 0..n {
            for q in 0..n {
                s += x.get(&[i[0], p]) * m.g_inv.get(&[p, q]) * y.get(&[q, i[1]]);
            }
        }
        s
    })
}

fn trace(x: &DenseTensor, m: &MetricAt) -> f64 {
    let n = x.dim();
    (0..n).flat_map(|p| (0..n).map(move |q| (p, q))).map(|(p, q)| m.g_inv.get(&[p, q]) * x.get(&[p, q])).sum()
}

/// Relative norm of `a g⁻¹ b − b g⁻¹ a`.
pub fn commutator_residual(a: &DenseTensor, b: &DenseTensor, m: &MetricAt) -> Result<f64> {
    check_pair(a, b)?;
    let ab = product(a, b, m)?;
    let ba = product(b, a, m)?;
    Ok(ratio(ab.try_sub(&ba)?.norm(), ab.norm() + ba.norm() + a.norm() * b.norm()))
}

/// Compatibility residual of `b` against a covariant rank-4 tensor.
pub fn compat_against(b: &DenseTensor, k_cov: &DenseTensor, m: &MetricAt) -> Result<f64> {
    let mixed = k_cov.raise_lower(3, m)?;
    let (cyc, term) = cyclic_sum(b, &mixed)?;
    Ok(ratio(cyc.norm(), 3.0 * term + b.norm() * mixed.norm()))
}

/// Compatibility residuals of both factors against their product.
pub fn kn_pair_compat(a: &DenseTensor, b: &DenseTensor, m: &MetricAt) -> Result<(f64, f64)> {
    let k = kulkarni_nomizu(a, b)?;
    Ok((compat_against(a, &k, m)?, compat_against(b, &k, m)?))
}

/// `b^m_m a_kl + a^m_m b_kl − 2 b_km a^m_l`, relative. Inputs must commute.
pub fn kn_weyl_condition_residual(a: &DenseTensor, b: &DenseTensor, m: &MetricAt) -> Result<f64> {
    let comm = commutator_residual(a, b, m)?;
    if comm > 1e-9 {
        return Err(Error::precondition(format!("a and b do not commute (residual {comm:.3e})")));
    }
    let (ta, tb) = (trace(a, m), trace(b, m));
    let ba = product(b, a, m)?;
    let lhs = a.scale(tb).try_add(&b.scale(ta))?.try_sub(&ba.scale(2.0))?;
    Ok(ratio(lhs.norm(), tb.abs() * a.norm() + ta.abs() * b.norm() + 2.0 * ba.norm() + a.norm() * b.norm()))
}

/// A solution of the trace condition for a given `b`.
#[derive(Debug, Clone)]
pub struct KnPotential {
    /// Covariant, unit Frobenius norm, largest component positive.
    pub a: DenseTensor,
    /// Eigenvalues of `b^i_j` in the frame used.
    pub beta: Vec<f64>,
    /// Coefficients of `a` on the same frame.
    pub alpha: Vec<f64>,
    /// Dimension of the solution space.
    pub dimension: usize,
    pub residual: f64,
}

/// Eigenframe of `b^i_j`: columns are g-orthogonal eigenvectors.
fn eigenframe(b: &DenseTensor, m: &MetricAt) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = b.dim();
    let mixed = b.raise_lower(0, m)?.to_matrix()?;
    let pairs = real_eigenvectors(&mixed);
    if pairs.len() != n {
        return Err(Error::precondition("b is not diagonalizable with real eigenvalues"));
    }
    let mut beta = Vec::with_capacity(n);
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let lam = pairs[start].0;
        let end = (start..n).find(|&i| pairs[i].0 != lam).unwrap_or(n);
        // g-Gram–Schmidt inside the eigenspace, pivoting on |g(v, v)|
        let mut pool: Vec<Vec<f64>> = pairs[start..end].iter().map(|p| p.1.clone()).collect();
        while !pool.is_empty() {
            let (idx, best) = pool
                .iter()
                .enumerate()
                .map(|(i, v)| (i, m.dot(v, v).abs()))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best < 1e-12 {
                return Err(Error::precondition("an eigenspace of b is degenerate for g"));
            }
            let v = pool.swap_remove(idx);
            let vv = m.dot(&v, &v);
            for w in pool.iter_mut() {
                let c = m.dot(&v, w) / vv;
                for (wi, vi) in w.iter_mut().zip(&v) {
                    *wi -= c * vi;
                }
            }
            beta.push(lam);
            frame.push(v);
        }
        start = end;
    }
    Ok((beta, frame))
}

/// Solves `(Σβ)α_i + (Σα)β_i − 2β_iα_i = 0` in the eigenframe of `b`.
pub fn solve_kn_potential(b: &DenseTensor, m: &MetricAt) -> Result<KnPotential> {
    let n = b.dim();
    if b.norm() == 0.0 {
        return Err(Error::precondition("b vanishes"));
    }
    let (beta, frame) = eigenframe(b, m)?;
    let sb: f64 = beta.iter().sum();
    let sys = DMatrix::from_fn(n, n, |i, j| beta[i] + if i == j { sb - 2.0 * beta[i] } else { 0.0 });
    let null = nullspace(&sys, 1e-10);
    let Some(first) = null.first() else {
        return Err(Error::NoPotential);
    };
    let alpha: DVector<f64> = first.clone();
    // a_kl = Σ α_i w_k w_l / g(w, w) with w = g e_i
    let mut a = DenseTensor::zeros(n, &[Co, Co])?;
    for (i, e) in frame.iter().enumerate() {
        let w = m.lower(e);
        let c = alpha[i] / m.dot(e, e);
        for k in 0..n {
            for l in 0..n {
                *a.get_mut(&[k, l]) += c * w[k] * w[l];
            }
        }
    }
    let norm = a.norm();
    let peak = a.data().iter().copied().fold(0.0, |acc: f64, x| if x.abs() > acc.abs() { x } else { acc });
    let s = peak.signum() / norm;
    let a = a.scale(s);
    let residual = kn_weyl_condition_residual(&a, b, m)?;
    Ok(KnPotential {
        a,
        beta,
        alpha: alpha.iter().map(|x| x * s).collect(),
        dimension: null.len(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{first_bianchi_residual, pair_symmetry_residual, trace_residual};
    use proptest::prelude::*;

    fn diag(v: &[f64]) -> DenseTensor {
        let n = v.len();
        DenseTensor::from_fn(n, &[Co, Co], |i| if i[0] == i[1] { v[i[0]] } else { 0.0 }).unwrap()
    }

    #[test]
    fn metric_square_is_constant_curvature_shape() {
        let m = MetricAt::minkowski(4);
        let k = kulkarni_nomizu(&m.g, &m.g).unwrap();
        let g = &m.g;
        for j in 0..4 {
            for kk in 0..4 {
                for l in 0..4 {
                    for mm in 0..4 {
                        let want = 2.0 * (g.get(&[l, j]) * g.get(&[kk, mm]) - g.get(&[l, kk]) * g.get(&[j, mm]));
                        assert_eq!(*k.get(&[j, kk, l, mm]), want);
                    }
                }
            }
        }
        let r = kn_weyl_condition_residual(&m.g, &m.g, &m).unwrap();
        assert!(r > 0.1, "{r}");
    }

    #[test]
    fn commuting_diagonal_pair_is_compatible() {
        let m = MetricAt::euclidean(4);
        let (a, b) = (diag(&[1.0, 2.0, 3.0, 4.0]), diag(&[4.0, 3.0, 2.0, 1.0]));
        let (ra, rb) = kn_pair_compat(&a, &b, &m).unwrap();
        assert!(ra < 1e-12 && rb < 1e-12, "{ra} {rb}");
    }

    #[test]
    fn non_commuting_pair_fails() {
        let m = MetricAt::euclidean(4);
        let a = diag(&[1.0, 2.0, 3.0, 4.0]);
        let mut b = diag(&[4.0, 3.0, 2.0, 1.0]);
        b.set(&[0, 1], 1.5);
        b.set(&[1, 0], 1.5);
        let (ra, rb) = kn_pair_compat(&a, &b, &m).unwrap();
        assert!(ra.max(rb) > 1e-3, "{ra} {rb}");
        assert!(kn_weyl_condition_residual(&a, &b, &m).is_err());
    }

    #[test]
    fn zero_pair_satisfies_the_condition() {
        let m = MetricAt::euclidean(4);
        let z = diag(&[0.0; 4]);
        assert_eq!(kn_weyl_condition_residual(&z, &z, &m).unwrap(), 0.0);
    }

    #[test]
    fn metric_and_zero_have_no_potential() {
        let m = MetricAt::euclidean(4);
        assert_eq!(solve_kn_potential(&m.g, &m).unwrap_err(), Error::NoPotential);
        assert!(matches!(solve_kn_potential(&diag(&[0.0; 4]), &m), Err(Error::Precondition(_))));
    }

    #[test]
    fn two_parameter_family_for_a_split_b() {
        // β = (1, −1, 0, 0): α_1 = α_2 = S/2 and α_3 + α_4 = 0, so α = (c, c, d, −d)
        let m = MetricAt::euclidean(4);
        let b = diag(&[1.0, -1.0, 0.0, 0.0]);
        let p = solve_kn_potential(&b, &m).unwrap();
        assert_eq!(p.dimension, 2);
        let a = &p.a;
        assert!((a.get(&[0, 0]) - a.get(&[1, 1])).abs() < 1e-12);
        assert!((a.get(&[2, 2]) + a.get(&[3, 3])).abs() < 1e-12);
        assert!(p.residual < 1e-10);
        assert!((a.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lorentzian_potential_gives_a_traceless_tensor() {
        let m = MetricAt::minkowski(4);
        let b = diag(&[1.0, -1.0, 1.0, -1.0]);
        let p = solve_kn_potential(&b, &m).unwrap();
        assert!(p.residual < 1e-10, "{}", p.residual);
        let k = kulkarni_nomizu(&p.a, &b).unwrap();
        let tr = trace_residual(&k.raise_lower(3, &m).unwrap(), &m, k.norm()).unwrap();
        assert!(tr < 1e-10, "{tr}");
        // Euclidean signature admits only the zero solution for the same b
        assert_eq!(solve_kn_potential(&b, &MetricAt::euclidean(4)).unwrap_err(), Error::NoPotential);
    }

    #[test]
    fn potential_in_a_rotated_frame() {
        let m = MetricAt::euclidean(4);
        let (c, s) = (0.6f64, 0.8f64);
        // b = R diag(1, −1, 0, 0) Rᵀ with a rotation in the (0, 2) plane
        let d = [1.0, -1.0, 0.0, 0.0];
        let rot = |i: usize, j: usize| -> f64 {
            match (i, j) {
                (0, 0) | (2, 2) => c,
                (0, 2) => -s,
                (2, 0) => s,
                (a, b) if a == b => 1.0,
                _ => 0.0,
            }
        };
        let b = DenseTensor::from_fn(4, &[Co, Co], |i| (0..4).map(|k| rot(i[0], k) * d[k] * rot(i[1], k)).sum()).unwrap();
        let p = solve_kn_potential(&b, &m).unwrap();
        assert!(p.residual < 1e-10);
        let k = kulkarni_nomizu(&p.a, &b).unwrap();
        assert!(trace_residual(&k.raise_lower(3, &m).unwrap(), &m, k.norm()).unwrap() < 1e-10);
        assert!(commutator_residual(&p.a, &b, &m).unwrap() < 1e-12);
    }

    fn sym4() -> impl Strategy<Value = DenseTensor> {
        proptest::collection::vec(-2.0f64..2.0, 16).prop_map(|v| {
            DenseTensor::from_fn(4, &[Co, Co], |i| v[4 * i[0] + i[1]] + v[4 * i[1] + i[0]]).unwrap()
        })
    }

    proptest! {
        #[test]
        fn product_has_riemann_symmetries(a in sym4(), b in sym4()) {
            let k = kulkarni_nomizu(&a, &b).unwrap();
            prop_assume!(k.norm() > 1e-6);
            prop_assert!(first_bianchi_residual(&k) < 1e-13);
            prop_assert!(pair_symmetry_residual(&k) < 1e-13);
        }

        #[test]
        fn commuting_pairs_are_compatible(x in proptest::collection::vec(-2.0f64..2.0, 8), angle in 0.0f64..3.0) {
            let m = MetricAt::euclidean(4);
            let (c, s) = (angle.cos(), angle.sin());
            let rot = |i: usize, j: usize| -> f64 {
                match (i, j) {
                    (1, 1) | (3, 3) => c,
                    (1, 3) => -s,
                    (3, 1) => s,
                    (p, q) if p == q => 1.0,
                    _ => 0.0,
                }
            };
            let conj = |d: &[f64]| DenseTensor::from_fn(4, &[Co, Co], |i| (0..4).map(|k| rot(i[0], k) * d[k] * rot(i[1], k)).sum()).unwrap();
            let (a, b) = (conj(&x[..4]), conj(&x[4..]));
            let (ra, rb) = kn_pair_compat(&a, &b, &m).unwrap();
            prop_assert!(ra < 1e-12 && rb < 1e-12);
        }
    }
}
