//! A signed barycenter instance: weights, marginals and cost on one grid.

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measure::GridMeasure;
use crate::weights::{validate_weights, WeightVector};

#[derive(Debug, Clone)]
pub struct Problem {
    weights: WeightVector,
    marginals: Vec<GridMeasure>,
    cost: CostModel,
    anchor: usize,
}

impl Problem {
    /// Builds a problem from weights and marginals given in input order.
    /// Marginals are re-sorted alongside the weights. The anchor (the
    /// marginal treated as absolutely continuous and used to recover the
    /// barycenter) is the largest positive weight.
    pub fn new(raw_weights: &[f64], marginals: Vec<GridMeasure>, cost: CostModel) -> Result<Self> {
        Self::with_anchor(raw_weights, marginals, cost, None)
    }

    /// As [`new`](Self::new) with the anchor chosen by input position.
    pub fn with_anchor(
        raw_weights: &[f64],
        marginals: Vec<GridMeasure>,
        cost: CostModel,
        anchor_input: Option<usize>,
    ) -> Result<Self> {
        let weights = validate_weights(raw_weights)?;
        if marginals.len() != weights.len() {
            return Err(Error::InvalidProblem(format!(
                "{} weights but {} marginals",
                weights.len(),
                marginals.len()
            )));
        }
        let grid = *marginals[0].grid();
        if marginals.iter().any(|m| m.grid() != &grid) {
            return Err(Error::InvalidProblem(
                "marginals must share one grid".into(),
            ));
        }
        let marginals = weights.sort_like(&marginals);
        let anchor = match anchor_input {
            None => 0,
            Some(pos) => weights
                .order()
                .iter()
                .position(|&k| k == pos)
                .ok_or_else(|| Error::InvalidProblem(format!("anchor {pos} out of range")))?,
        };
        if !weights.is_positive(anchor) {
            return Err(Error::InvalidProblem(
                "the anchor marginal must carry a positive weight".into(),
            ));
        }
        if !marginals[anchor].has_connected_support() {
            return Err(Error::InvalidProblem(
                "the anchor marginal needs positive mass on a connected region".into(),
            ));
        }
        Ok(Problem {
            weights,
            marginals,
            cost,
            anchor,
        })
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    /// Weight of sorted marginal `i`.
    pub fn a(&self, i: usize) -> f64 {
        self.weights.values()[i]
    }

    /// Marginals in sorted weight order.
    pub fn marginals(&self) -> &[GridMeasure] {
        &self.marginals
    }

    pub fn marginal(&self, i: usize) -> &GridMeasure {
        &self.marginals[i]
    }

    pub fn cost(&self) -> CostModel {
        self.cost
    }

    pub fn grid(&self) -> &Grid {
        self.marginals[0].grid()
    }

    pub fn len(&self) -> usize {
        self.marginals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marginals.is_empty()
    }

    /// Sorted index of the anchor marginal.
    pub fn anchor(&self) -> usize {
        self.anchor
    }

    /// Sorted indices other than the anchor, in increasing order.
    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| i != self.anchor).collect()
    }

    /// Positive indices other than the anchor.
    pub fn free_positive(&self) -> Vec<usize> {
        self.weights
            .i_plus()
            .filter(|&i| i != self.anchor)
            .collect()
    }

    pub fn positive_count(&self) -> usize {
        self.weights.ell()
    }
}
