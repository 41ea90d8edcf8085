//! Small dense linear algebra helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector};

/// Orthonormal basis of the numerical nullspace of `m`: right singular
/// vectors whose singular value is below `rel_tol · σ_max` (or exactly zero).
pub fn nullspace(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let (r, c) = m.shape();
    let sq = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let smax = svd.singular_values.max();
    let cut = rel_tol * smax;
    (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= cut)
        .map(|i| v_t.row(i).transpose())
        .collect()
}

/// Numerical rank with threshold `abs_tol` on singular values.
pub fn rank_complex(m: &DMatrix<Complex<f64>>, abs_tol: f64) -> usize {
    m.clone().singular_values().iter().filter(|s| **s > abs_tol).count()
}

/// Eigenvalues of a complex square matrix via the Schur form.
pub fn complex_eigenvalues(m: &DMatrix<Complex<f64>>) -> Vec<Complex<f64>> {
    let t = m.clone().schur().unpack().1;
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Real eigenpairs of a general real matrix. Eigenvalues whose imaginary
/// part exceeds `1e-9·max|λ|` are skipped; repeated real eigenvalues return
/// a basis of their eigenspace. Vectors are unit Euclidean.
pub fn real_eigenvectors(m: &DMatrix<f64>) -> Vec<(f64, Vec<f64>)> {
    let n = m.nrows();
    let eig = m.complex_eigenvalues();
    let scale = eig.iter().map(|z| z.norm()).fold(0.0, f64::max).max(m.norm() / (n as f64).sqrt());
    let mut reals: Vec<f64> = eig
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * scale.max(f64::MIN_POSITIVE))
        .map(|z| z.re)
        .collect();
    reals.sort_by(|a, b| a.total_cmp(b));
    let mut distinct: Vec<f64> = Vec::new();
    for v in reals {
        if distinct.last().is_none_or(|&l| (v - l).abs() > 1e-8 * scale.max(1e-300)) {
            distinct.push(v);
        }
    }
    let mut out = Vec::new();
    for lambda in distinct {
        let shifted = m - DMatrix::identity(n, n) * lambda;
        let tol = 1e-7 * (scale + 1e-300) / shifted.norm().max(1e-300);
        for v in nullspace(&shifted, tol.max(1e-10)) {
            out.push((lambda, v.iter().copied().collect()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_of_rank_deficient_matrix() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let ns = nullspace(&m, 1e-12);
        assert_eq!(ns.len(), 1);
        let v = &ns[0];
        assert!((m * v).norm() < 1e-12);
    }

    #[test]
    fn eigenpairs_of_a_defective_and_a_rotation_block() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        let e = real_eigenvectors(&m);
        assert_eq!(e.len(), 1);
        assert!((e[0].0 - 2.0).abs() < 1e-12);
        let d = DMatrix::from_diagonal_element(3, 3, 1.5);
        assert_eq!(real_eigenvectors(&d).len(), 3);
    }

    #[test]
    fn complex_spectrum_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex::new(1.0, 2.0),
            Complex::new(-1.0, 0.0),
            Complex::new(0.0, -2.0),
        ]));
        let mut ev = complex_eigenvalues(&m);
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - Complex::new(-1.0, 0.0)).norm() < 1e-12);
        assert_eq!(rank_complex(&m, 1e-9), 3);
    }
}
