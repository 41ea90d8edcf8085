//! Relative residual helpers.
//!
//! A residual is `‖difference‖ / (Σ ‖operand‖ + 1e-300)`, with an exactly zero
//! difference reported as zero so flat-space `0/0` cases read as zero.

use crate::tensor::DenseTensor;

pub const FLOOR: f64 = 1e-300;

pub fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / (den.abs() + FLOOR)
    }
}

/// `‖diff‖ / Σ scales`.
pub fn relative(diff: &DenseTensor, scales: &[f64]) -> f64 {
    ratio(diff.norm(), scales.iter().sum())
}

/// `‖a − b‖ / (‖a‖ + ‖b‖ + extra)`.
pub fn between(a: &DenseTensor, b: &DenseTensor, extra: f64) -> f64 {
    let diff = a.try_sub(b).expect("residual operands share a shape");
    ratio(diff.norm(), a.norm() + b.norm() + extra)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_over_zero_is_zero() {
        assert_eq!(ratio(0.0, 0.0), 0.0);
        assert!(ratio(1e-20, 0.0) > 1.0);
        assert_eq!(ratio(1.0, 4.0), 0.25);
    }
}
