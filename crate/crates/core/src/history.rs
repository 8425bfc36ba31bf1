//! Observed dynamic histories: which variables have failed, when, and the
//! current time. Conditioning on a history is what turns one model into
//! another (see `ModelSpec::residual`).

use thiserror::Error;

use crate::real::Real;
use crate::subset::{SubsetMask, VariableIndex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HistoryError {
    #[error("failure times must be strictly increasing")]
    TimesNotIncreasing,
    #[error("failure times must be non-negative and finite")]
    BadTime,
    #[error("current time must be at least the last failure time")]
    NowBeforeLastFailure,
    #[error("variable {0} appears more than once")]
    DuplicateIndex(VariableIndex),
    #[error("variable {0} out of range for a model with n={1}")]
    IndexOutOfRange(VariableIndex, usize),
}

/// A dynamic history: the ordered failures observed so far plus the current
/// time, with every other variable still alive at `now`.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureHistory<R: Real> {
    failed: Vec<(VariableIndex, R)>,
    now: R,
}

impl<R: Real> FailureHistory<R> {
    /// The empty history at time zero.
    pub fn empty() -> Self {
        Self { failed: Vec::new(), now: R::zero() }
    }

    /// The empty history observed up to time `now`.
    pub fn at(now: R) -> Self {
        debug_assert!(now >= R::zero());
        Self { failed: Vec::new(), now }
    }

    /// Build and check a history for a model with `n` variables. Times must be
    /// strictly increasing and `now` must be no earlier than the last failure
    /// (the last failure may coincide with `now`).
    pub fn new(failed: Vec<(VariableIndex, R)>, now: R, n: usize) -> Result<Self, HistoryError> {
        let mut seen = SubsetMask::EMPTY;
        let mut prev: Option<R> = None;
        for &(idx, t) in &failed {
            if idx.get() > n {
                return Err(HistoryError::IndexOutOfRange(idx, n));
            }
            if !t.is_finite() || t < R::zero() {
                return Err(HistoryError::BadTime);
            }
            if let Some(p) = prev {
                if t <= p {
                    return Err(HistoryError::TimesNotIncreasing);
                }
            }
            if seen.contains(idx) {
                return Err(HistoryError::DuplicateIndex(idx));
            }
            seen = seen.insert(idx);
            prev = Some(t);
        }
        if let Some(p) = prev {
            if now < p {
                return Err(HistoryError::NowBeforeLastFailure);
            }
        } else if !now.is_finite() || now < R::zero() {
            return Err(HistoryError::BadTime);
        }
        Ok(Self { failed, now })
    }

    #[inline]
    pub fn now(&self) -> R {
        self.now
    }

    #[inline]
    pub fn failures(&self) -> &[(VariableIndex, R)] {
        &self.failed
    }

    #[inline]
    pub fn num_failed(&self) -> usize {
        self.failed.len()
    }

    /// The failed set as a mask.
    pub fn failed_set(&self) -> SubsetMask {
        self.failed
            .iter()
            .fold(SubsetMask::EMPTY, |m, &(idx, _)| m.insert(idx))
    }

    /// Surviving indices, ascending, for a model with `n` variables.
    pub fn survivors(&self, n: usize) -> Vec<VariableIndex> {
        self.failed_set().complement(n).members().collect()
    }

    pub fn contains(&self, j: VariableIndex) -> bool {
        self.failed.iter().any(|&(idx, _)| idx == j)
    }

    /// Extend with one more failure at time `t >= now`.
    pub fn push(&self, j: VariableIndex, t: R, n: usize) -> Result<Self, HistoryError> {
        let mut failed = self.failed.clone();
        failed.push((j, t));
        Self::new(failed, t, n)
    }
}
