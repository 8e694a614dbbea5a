//! Two-block pricing inside one task, in exact arithmetic.
//!
//! Skipping both blocks is worth `(1 - γ²) v`; a player who waits through the
//! first block can still skip the second for `(1 - γ) v`, discounted by `γ`.
//! Payments reach the designer at face value.

use num_traits::Num;

use crate::error::{Error, Result};

/// Finitely many patience types with their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTypes<T> {
    types: Vec<T>,
    probs: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    BuyNow,
    WaitThenBuy,
    Never,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiBlockOutcome<T> {
    pub revenue: T,
    /// One choice per type, in input order.
    pub choices: Vec<Choice>,
}

impl<T: Num + Clone + PartialOrd> DiscreteTypes<T> {
    pub fn new(types: Vec<T>, probs: Vec<T>) -> Result<Self> {
        if types.is_empty() || types.len() != probs.len() {
            return Err(Error::invalid("types and probabilities must be non-empty and of equal length"));
        }
        if types.iter().any(|g| *g < T::zero() || *g > T::one()) {
            return Err(Error::invalid("types must lie in [0, 1]"));
        }
        if probs.iter().any(|p| *p < T::zero()) {
            return Err(Error::invalid("probabilities must be non-negative"));
        }
        let total = probs.iter().cloned().fold(T::zero(), |a, b| a + b);
        if total != T::one() {
            return Err(Error::invalid("probabilities must sum to exactly 1"));
        }
        Ok(Self { types, probs })
    }

    pub fn types(&self) -> &[T] {
        &self.types
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    fn pairs(&self) -> impl Iterator<Item = (&T, &T)> {
        self.types.iter().zip(&self.probs)
    }
}

/// Value of skipping both blocks, `(1 - γ²) v`.
pub fn full_skip_value<T: Num + Clone>(gamma: &T, value: &T) -> T {
    (T::one() - gamma.clone() * gamma.clone()) * value.clone()
}

/// Each type's best response to first-block price `p0` and second-block price
/// `p1` (equal to `p0` when `None`), with ties going to the earlier purchase.
pub fn multi_block_revenue<T: Num + Clone + PartialOrd>(
    types: &DiscreteTypes<T>,
    value: T,
    p0: T,
    p1: Option<T>,
) -> MultiBlockOutcome<T> {
    let p1 = p1.unwrap_or_else(|| p0.clone());
    let mut revenue = T::zero();
    let mut choices = Vec::with_capacity(types.types.len());
    for (g, prob) in types.pairs() {
        let now = full_skip_value(g, &value) - p0.clone();
        let later = g.clone() * ((T::one() - g.clone()) * value.clone() - p1.clone());
        let choice = if now >= later && now >= T::zero() {
            Choice::BuyNow
        } else if later >= T::zero() {
            Choice::WaitThenBuy
        } else {
            Choice::Never
        };
        let paid = match choice {
            Choice::BuyNow => p0.clone(),
            Choice::WaitThenBuy => p1.clone(),
            Choice::Never => T::zero(),
        };
        revenue = revenue + prob.clone() * paid;
        choices.push(choice);
    }
    MultiBlockOutcome { revenue, choices }
}

/// Best revenue from one price for both blocks. Revenue is piecewise linear
/// and increasing between the types' indifference prices, so those are the
/// only candidates. Returns `(price, revenue)`; ties favour the higher price.
pub fn best_single_price<T: Num + Clone + PartialOrd>(types: &DiscreteTypes<T>, value: T) -> (T, T) {
    let mut best: Option<(T, T)> = None;
    for g in &types.types {
        for p in [full_skip_value(g, &value), (T::one() - g.clone()) * value.clone()] {
            let rev = multi_block_revenue(types, value.clone(), p.clone(), None).revenue;
            let better = match &best {
                None => true,
                Some((bp, br)) => rev > *br || (rev == *br && p > *bp),
            };
            if better {
                best = Some((p, rev));
            }
        }
    }
    best.expect("at least one type")
}

/// Revenue when each type is charged its full two-block value.
pub fn known_types_block_revenue<T: Num + Clone + PartialOrd>(types: &DiscreteTypes<T>, value: T) -> T {
    types.pairs().fold(T::zero(), |acc, (g, p)| acc + p.clone() * full_skip_value(g, &value))
}
