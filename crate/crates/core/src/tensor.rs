//! Dense tensors over a single tangent space.
//!
//! Components are stored row-major: the last slot varies fastest. Every slot
//! carries a [`Variance`]. Antisymmetrization follows the bracket convention
//! `X_[ab] = X_ab - X_ba` with no factor one half.

use std::fmt::Debug;

use nalgebra::DMatrix;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::Taylor;

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 6;
pub const MAX_RANK: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    /// Lower index.
    Co,
    /// Upper index.
    Contra,
}

impl Variance {
    pub fn flip(self) -> Variance {
        match self {
            Variance::Co => Variance::Contra,
            Variance::Contra => Variance::Co,
        }
    }
}

/// Component type of a tensor: plain reals, or Taylor jets for tensor fields.
pub trait Scalar: Clone + Debug + Send + Sync {
    fn zero() -> Self;
    fn from_f64(v: f64) -> Self;
    fn value(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn scale(&self, s: f64) -> Self;
    /// `self += a * b`
    fn add_prod(&mut self, a: &Self, b: &Self);
    fn add_assign(&mut self, o: &Self);
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn add_prod(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn add_assign(&mut self, o: &Self) {
        *self += o;
    }
}

impl Scalar for Taylor {
    fn zero() -> Self {
        Taylor::constant(0.0)
    }
    fn from_f64(v: f64) -> Self {
        Taylor::constant(v)
    }
    fn value(&self) -> f64 {
        Taylor::value(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, s: f64) -> Self {
        Taylor::scale(self, s)
    }
    fn add_prod(&mut self, a: &Self, b: &Self) {
        self.add_product(a, b);
    }
    fn add_assign(&mut self, o: &Self) {
        *self = &*self + o;
    }
}

/// Rank-k array of `dim^k` components with a per-slot variance.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<T: Scalar = f64> {
    dim: usize,
    variance: Vec<Variance>,
    data: Vec<T>,
}

impl Serialize for DenseTensor<f64> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("DenseTensor", 3)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("variance", &self.variance)?;
        st.serialize_field("components", &self.data)?;
        st.end()
    }
}

fn check_shape(dim: usize, rank: usize) -> Result<()> {
    if !(MIN_DIM..=MAX_DIM).contains(&dim) {
        return Err(Error::shape(format!("dimension {dim} outside {MIN_DIM}..={MAX_DIM}")));
    }
    if rank > MAX_RANK {
        return Err(Error::shape(format!("rank {rank} exceeds {MAX_RANK}")));
    }
    Ok(())
}

impl<T: Scalar> DenseTensor<T> {
    pub fn zeros(dim: usize, variance: &[Variance]) -> Result<Self> {
        check_shape(dim, variance.len())?;
        Ok(DenseTensor {
            dim,
            variance: variance.to_vec(),
            data: vec![T::zero(); dim.pow(variance.len() as u32)],
        })
    }

    pub fn from_data(dim: usize, variance: &[Variance], data: Vec<T>) -> Result<Self> {
        check_shape(dim, variance.len())?;
        let want = dim.pow(variance.len() as u32);
        if data.len() != want {
            return Err(Error::shape(format!("expected {want} components, got {}", data.len())));
        }
        Ok(DenseTensor {
            dim,
            variance: variance.to_vec(),
            data,
        })
    }

    pub fn from_fn(dim: usize, variance: &[Variance], mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        check_shape(dim, variance.len())?;
        let rank = variance.len();
        let n = dim.pow(rank as u32);
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; rank];
        for _ in 0..n {
            data.push(f(&idx));
            increment(&mut idx, dim);
        }
        Ok(DenseTensor {
            dim,
            variance: variance.to_vec(),
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: T) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn get_mut(&mut self, idx: &[usize]) -> &mut T {
        let o = self.offset(idx);
        &mut self.data[o]
    }

    /// Calls `f` with every multi-index in storage order.
    pub fn for_each_index(&self, mut f: impl FnMut(&[usize], &T)) {
        let mut idx = vec![0usize; self.rank()];
        for v in &self.data {
            f(&idx, v);
            increment(&mut idx, self.dim);
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> DenseTensor<U> {
        DenseTensor {
            dim: self.dim,
            variance: self.variance.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Point values of the components.
    pub fn values(&self) -> DenseTensor<f64> {
        self.map(|x| x.value())
    }

    fn same_shape(&self, o: &Self, what: &str) -> Result<()> {
        if self.dim != o.dim || self.variance != o.variance {
            return Err(Error::shape(format!(
                "{what}: shape mismatch ({} {:?} vs {} {:?})",
                self.dim, self.variance, o.dim, o.variance
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, o: &Self) -> Result<Self> {
        self.same_shape(o, "add")?;
        Ok(self.zip(o, |a, b| a.add(b)))
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self> {
        self.same_shape(o, "sub")?;
        Ok(self.zip(o, |a, b| a.sub(b)))
    }

    fn zip(&self, o: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        DenseTensor {
            dim: self.dim,
            variance: self.variance.clone(),
            data: self.data.iter().zip(&o.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        DenseTensor {
            dim: self.dim,
            variance: self.variance.clone(),
            data: self.data.iter().map(|x| x.scale(s)).collect(),
        }
    }

    /// Trace over two slots of opposite variance. Remaining slots keep their order.
    pub fn contract(&self, a: usize, b: usize) -> Result<Self> {
        let r = self.rank();
        if a >= r || b >= r || a == b {
            return Err(Error::shape(format!("contract: bad slots ({a}, {b}) for rank {r}")));
        }
        if self.variance[a] == self.variance[b] {
            return Err(Error::shape(format!(
                "contract: slots {a} and {b} have the same variance"
            )));
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let variance: Vec<Variance> = self
            .variance
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != lo && *i != hi)
            .map(|(_, v)| *v)
            .collect();
        let mut full = vec![0usize; r];
        DenseTensor::from_fn(self.dim, &variance, |rest| {
            let mut k = 0;
            for (i, slot) in full.iter_mut().enumerate() {
                if i != lo && i != hi {
                    *slot = rest[k];
                    k += 1;
                }
            }
            let mut acc = T::zero();
            for m in 0..self.dim {
                full[lo] = m;
                full[hi] = m;
                acc.add_assign(self.get(&full));
            }
            acc
        })
    }

    /// Tensor product; slots of `self` come first.
    pub fn outer(&self, o: &Self) -> Result<Self> {
        if self.dim != o.dim {
            return Err(Error::shape("outer: dimension mismatch"));
        }
        let mut variance = self.variance.clone();
        variance.extend_from_slice(&o.variance);
        check_shape(self.dim, variance.len())?;
        let mut data = Vec::with_capacity(self.data.len() * o.data.len());
        for a in &self.data {
            for b in &o.data {
                data.push(a.mul(b));
            }
        }
        Ok(DenseTensor {
            dim: self.dim,
            variance,
            data,
        })
    }

    /// Reorders slots: slot `k` of the result is slot `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let r = self.rank();
        let mut seen = vec![false; r];
        if perm.len() != r || perm.iter().any(|&p| p >= r || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::shape(format!("permute: {perm:?} is not a permutation of {r} slots")));
        }
        let variance: Vec<Variance> = perm.iter().map(|&p| self.variance[p]).collect();
        let mut src = vec![0usize; r];
        DenseTensor::from_fn(self.dim, &variance, |idx| {
            for (k, &p) in perm.iter().enumerate() {
                src[p] = idx[k];
            }
            self.get(&src).clone()
        })
    }

    /// `t(..a..b..) - t(..b..a..)` for two slots of equal variance.
    pub fn antisymmetrize_pair(&self, a: usize, b: usize) -> Result<Self> {
        let r = self.rank();
        if a >= r || b >= r || a == b {
            return Err(Error::shape(format!("antisymmetrize: bad slots ({a}, {b})")));
        }
        if self.variance[a] != self.variance[b] {
            return Err(Error::shape("antisymmetrize: slots of mixed variance"));
        }
        let mut perm: Vec<usize> = (0..r).collect();
        perm.swap(a, b);
        let swapped = self.permute(&perm)?;
        self.try_sub(&swapped)
    }
}

fn increment(idx: &mut [usize], dim: usize) {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < dim {
            return;
        }
        *slot = 0;
    }
}

impl DenseTensor<f64> {
    pub fn scalar(v: f64, dim: usize) -> Result<Self> {
        DenseTensor::from_data(dim, &[], vec![v])
    }

    /// Mixed identity `δ_i^j`.
    pub fn kronecker(dim: usize) -> Result<Self> {
        DenseTensor::from_fn(dim, &[Variance::Co, Variance::Contra], |i| f64::from(u8::from(i[0] == i[1])))
    }

    pub fn covector(v: &[f64]) -> Result<Self> {
        DenseTensor::from_data(v.len(), &[Variance::Co], v.to_vec())
    }

    pub fn vector(v: &[f64]) -> Result<Self> {
        DenseTensor::from_data(v.len(), &[Variance::Contra], v.to_vec())
    }

    /// Frobenius norm of the component array.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Rank-2 tensor as a matrix (first slot = row).
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.rank() != 2 {
            return Err(Error::shape("to_matrix: rank must be 2"));
        }
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &self.data))
    }

    pub fn from_matrix(m: &DMatrix<f64>, variance: [Variance; 2]) -> Result<Self> {
        let n = m.nrows();
        DenseTensor::from_fn(n, &variance, |i| m[(i[0], i[1])])
    }

    /// Flips the variance of one slot using `g` or `g⁻¹`.
    pub fn raise_lower(&self, slot: usize, m: &MetricAt) -> Result<Self> {
        if slot >= self.rank() {
            return Err(Error::shape(format!("raise_lower: slot {slot} out of range")));
        }
        if m.dim() != self.dim {
            return Err(Error::shape("raise_lower: metric dimension mismatch"));
        }
        let mat = match self.variance[slot] {
            Variance::Co => &m.g_inv,
            Variance::Contra => &m.g,
        };
        let mut variance = self.variance.clone();
        variance[slot] = variance[slot].flip();
        let mut src = vec![0usize; self.rank()];
        DenseTensor::from_fn(self.dim, &variance, |idx| {
            src.copy_from_slice(idx);
            let mut acc = 0.0;
            for k in 0..self.dim {
                src[slot] = k;
                acc += mat.data[idx[slot] * self.dim + k] * self.get(&src);
            }
            acc
        })
    }

    /// Lowers every contravariant slot.
    pub fn all_lowered(&self, m: &MetricAt) -> Result<Self> {
        let mut t = self.clone();
        for s in 0..self.rank() {
            if t.variance[s] == Variance::Contra {
                t = t.raise_lower(s, m)?;
            }
        }
        Ok(t)
    }

    /// Raises every covariant slot.
    pub fn all_raised(&self, m: &MetricAt) -> Result<Self> {
        let mut t = self.clone();
        for s in 0..self.rank() {
            if t.variance[s] == Variance::Co {
                t = t.raise_lower(s, m)?;
            }
        }
        Ok(t)
    }
}

/// The metric at one point with its inverse, determinant and signature.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricAt {
    pub g: DenseTensor,
    pub g_inv: DenseTensor,
    pub det_g: f64,
    /// (number of positive, number of negative) eigenvalues.
    pub signature: (usize, usize),
}

impl MetricAt {
    /// Builds from covariant components. Fails when `|det g|` is below
    /// `1e-12` times the scale `max|g_ij|^n`.
    pub fn new(g: DenseTensor) -> Result<MetricAt> {
        if g.rank() != 2 || g.variance != [Variance::Co, Variance::Co] {
            return Err(Error::shape("metric must be a covariant rank-2 tensor"));
        }
        let n = g.dim();
        let m = g.to_matrix()?;
        let asym = (&m - m.transpose()).abs().max();
        if asym > 1e-12 * m.abs().max().max(1e-300) {
            return Err(Error::shape("metric components are not symmetric"));
        }
        let det = m.determinant();
        let scale = m.abs().max().powi(n as i32);
        if !(det.abs() > 1e-12 * scale) || !det.is_finite() {
            return Err(Error::DegenerateMetric { det });
        }
        let inv = m.clone().try_inverse().ok_or(Error::DegenerateMetric { det })?;
        let eig = nalgebra::SymmetricEigen::new(m);
        let plus = eig.eigenvalues.iter().filter(|&&e| e > 0.0).count();
        let g_inv = DenseTensor::from_fn(n, &[Variance::Contra, Variance::Contra], |i| {
            0.5 * (inv[(i[0], i[1])] + inv[(i[1], i[0])])
        })?;
        Ok(MetricAt {
            g,
            g_inv,
            det_g: det,
            signature: (plus, n - plus),
        })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<MetricAt> {
        let n = rows.len();
        let g = DenseTensor::from_fn(n, &[Variance::Co, Variance::Co], |i| rows[i[0]][i[1]])?;
        MetricAt::new(g)
    }

    pub fn minkowski(n: usize) -> MetricAt {
        let g = DenseTensor::from_fn(n, &[Variance::Co, Variance::Co], |i| {
            if i[0] != i[1] {
                0.0
            } else if i[0] == 0 {
                -1.0
            } else {
                1.0
            }
        })
        .expect("valid dimension");
        MetricAt::new(g).expect("Minkowski metric is regular")
    }

    pub fn euclidean(n: usize) -> MetricAt {
        let g = DenseTensor::from_fn(n, &[Variance::Co, Variance::Co], |i| f64::from(u8::from(i[0] == i[1])))
            .expect("valid dimension");
        MetricAt::new(g).expect("Euclidean metric is regular")
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn is_lorentzian(&self) -> bool {
        self.signature.1 == 1
    }

    /// `g(u, v)` for contravariant component arrays.
    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                acc += self.g.data[a * n + b] * u[a] * v[b];
            }
        }
        acc
    }

    pub fn lower(&self, u: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|a| (0..n).map(|b| self.g.data[a * n + b] * u[b]).sum()).collect()
    }

    pub fn raise(&self, w: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|a| (0..n).map(|b| self.g_inv.data[a * n + b] * w[b]).sum()).collect()
    }
}

fn permutation_sign(p: &[usize]) -> f64 {
    let mut sign = 1.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] == p[j] {
                return 0.0;
            }
            if p[i] > p[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Covariant volume form in four dimensions with `ε_0123 = +√|det g|`.
pub fn levi_civita(m: &MetricAt) -> Result<DenseTensor> {
    if m.dim() != 4 {
        return Err(Error::shape(format!("levi_civita needs dimension 4, got {}", m.dim())));
    }
    let root = m.det_g.abs().sqrt();
    DenseTensor::from_fn(4, &[Variance::Co; 4], |i| root * permutation_sign(i))
}

#[cfg(test)]
mod tests {
    use super::Variance::{Co, Contra};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_trace_is_dimension() {
        let d = DenseTensor::kronecker(4).unwrap();
        let s = d.contract(0, 1).unwrap();
        assert_eq!(s.rank(), 0);
        assert_eq!(s.data()[0], 4.0);
    }

    #[test]
    fn contraction_rejects_same_variance() {
        let t = DenseTensor::<f64>::zeros(3, &[Co, Co]).unwrap();
        assert!(t.contract(0, 1).is_err());
        assert!(t.contract(0, 2).is_err());
    }

    #[test]
    fn metric_times_inverse_is_identity() {
        let m = MetricAt::from_rows(&[&[-2.0, 0.3, 0.0], &[0.3, 1.0, 0.1], &[0.0, 0.1, 3.0]]).unwrap();
        let prod = m.g.outer(&m.g_inv).unwrap().contract(1, 2).unwrap();
        let id = DenseTensor::kronecker(3).unwrap();
        assert!(prod.try_sub(&id).unwrap().norm() < 1e-12);
        assert_eq!(m.signature, (2, 1));
    }

    #[test]
    fn lowering_uses_signature() {
        let m = MetricAt::minkowski(4);
        let u = DenseTensor::vector(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let low = u.raise_lower(0, &m).unwrap();
        assert_eq!(low.data(), &[-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(low.variance(), &[Co]);
    }

    #[test]
    fn raise_then_lower_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.gen_range(3..=5);
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n {
                rows[i][i] = if i == 0 { -2.0 } else { 2.0 };
                for j in 0..i {
                    let v = rng.gen_range(-0.3..0.3);
                    rows[i][j] = v;
                    rows[j][i] = v;
                }
            }
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let m = MetricAt::from_rows(&refs).unwrap();
            let t = DenseTensor::from_fn(n, &[Co, Contra, Co], |_| rng.gen_range(-1.0..1.0)).unwrap();
            let back = t.raise_lower(0, &m).unwrap().raise_lower(0, &m).unwrap();
            assert!(back.try_sub(&t).unwrap().norm() < 1e-12 * t.norm());
        }
    }

    #[test]
    fn bracket_has_no_half() {
        let mut x = DenseTensor::<f64>::zeros(4, &[Co, Co]).unwrap();
        x.set(&[0, 1], 1.0);
        let a = x.antisymmetrize_pair(0, 1).unwrap();
        assert_eq!(*a.get(&[0, 1]), 1.0);
        assert_eq!(*a.get(&[1, 0]), -1.0);
        let twice = a.antisymmetrize_pair(0, 1).unwrap();
        assert!(twice.try_sub(&a.scale(2.0)).unwrap().norm() == 0.0);
        let sym = DenseTensor::from_fn(4, &[Co, Co], |i| (i[0] + i[1]) as f64).unwrap();
        assert_eq!(sym.antisymmetrize_pair(0, 1).unwrap().norm(), 0.0);
        let mixed = DenseTensor::<f64>::zeros(4, &[Co, Contra]).unwrap();
        assert!(mixed.antisymmetrize_pair(0, 1).is_err());
    }

    #[test]
    fn volume_form_conventions() {
        let m = MetricAt::minkowski(4);
        let eps = levi_civita(&m).unwrap();
        assert_eq!(*eps.get(&[0, 1, 2, 3]), 1.0);
        assert_eq!(*eps.get(&[1, 0, 2, 3]), -1.0);
        assert_eq!(*eps.get(&[1, 1, 2, 3]), 0.0);
        let up = eps.all_raised(&m).unwrap();
        assert!((up.get(&[0, 1, 2, 3]) + 1.0).abs() < 1e-15);
        let full: f64 = eps.data().iter().zip(up.data()).map(|(a, b)| a * b).sum();
        assert!((full + 24.0).abs() < 1e-12);
        let e = MetricAt::euclidean(4);
        let eps = levi_civita(&e).unwrap();
        let up = eps.all_raised(&e).unwrap();
        let full: f64 = eps.data().iter().zip(up.data()).map(|(a, b)| a * b).sum();
        assert!((full - 24.0).abs() < 1e-12);
        assert!(levi_civita(&MetricAt::euclidean(3)).is_err());
    }

    #[test]
    fn schwarzschild_volume_element() {
        // t = 0, r = 3M, θ = π/2 with M = 1
        let r: f64 = 3.0;
        let f = 1.0 - 2.0 / r;
        let m = MetricAt::from_rows(&[
            &[-f, 0.0, 0.0, 0.0],
            &[0.0, 1.0 / f, 0.0, 0.0],
            &[0.0, 0.0, r * r, 0.0],
            &[0.0, 0.0, 0.0, r * r],
        ])
        .unwrap();
        let eps = levi_civita(&m).unwrap();
        assert!((eps.get(&[0, 1, 2, 3]) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_metric_rejected() {
        let err = MetricAt::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::DegenerateMetric { .. }));
    }

    #[test]
    fn permute_moves_slots() {
        let t = DenseTensor::from_fn(3, &[Co, Contra, Co], |i| (100 * i[0] + 10 * i[1] + i[2]) as f64).unwrap();
        let p = t.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p.variance(), &[Co, Co, Contra]);
        assert_eq!(*p.get(&[1, 2, 0]), 201.0);
        assert!(t.permute(&[0, 0, 1]).is_err());
    }
}
