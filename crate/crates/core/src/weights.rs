//! Affine weight vectors with their positive/negative partition.

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;
const ZERO_TOL: f64 = 1e-15;

/// Weights sorted in nonincreasing order, `a[0] >= ... >= a[ell-1] > 0 > a[ell] >= ...`.
///
/// Indices are zero-based: the positive set is `0..ell`, the negative set
/// `ell..m`. `order[k]` is the input position of sorted weight `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    a: Vec<f64>,
    order: Vec<usize>,
    ell: usize,
}

impl WeightVector {
    pub fn new(raw: &[f64]) -> Result<Self> {
        validate_weights(raw)
    }

    pub fn values(&self) -> &[f64] {
        &self.a
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Number of positive weights.
    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn i_plus(&self) -> std::ops::Range<usize> {
        0..self.ell
    }

    pub fn i_minus(&self) -> std::ops::Range<usize> {
        self.ell..self.a.len()
    }

    pub fn is_positive(&self, i: usize) -> bool {
        i < self.ell
    }

    /// Input position of the sorted weight `k`.
    pub fn input_position(&self, k: usize) -> usize {
        self.order[k]
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Reorders per-input items into sorted weight order.
    pub fn sort_like<T: Clone>(&self, items: &[T]) -> Vec<T> {
        self.order.iter().map(|&k| items[k].clone()).collect()
    }

    /// Σ over the negative set of |aᵢ|.
    pub fn negative_mass(&self) -> f64 {
        self.a[self.ell..].iter().map(|v| v.abs()).sum()
    }
}

/// Validates affine weights and sorts them into nonincreasing order.
pub fn validate_weights(raw: &[f64]) -> Result<WeightVector> {
    if raw.is_empty() {
        return Err(Error::InvalidProblem("empty weight vector".into()));
    }
    if let Some(index) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidProblem(format!(
            "weight {index} is not finite"
        )));
    }
    if let Some(index) = raw.iter().position(|v| v.abs() < ZERO_TOL) {
        return Err(Error::ZeroWeight { index });
    }
    let sum: f64 = raw.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::AffineSumViolation { sum });
    }
    if raw.iter().all(|v| *v < 0.0) {
        return Err(Error::NoPositiveWeight);
    }
    let mut order: Vec<usize> = (0..raw.len()).collect();
    // stable, so equal weights keep input order
    order.sort_by(|&i, &j| raw[j].total_cmp(&raw[i]));
    let a: Vec<f64> = order.iter().map(|&k| raw[k]).collect();
    let ell = a.iter().take_while(|v| **v > 0.0).count();
    Ok(WeightVector { a, order, ell })
}
