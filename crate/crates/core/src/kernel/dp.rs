//! Subset hit probabilities for load-sharing models by dynamic programming
//! over the embedded jump chain.
//!
//! In a THLS model the failure identities form a discrete-time chain: from
//! failed set `I` the next casualty is `l` with probability
//! `r_l(I) / R(I)`, `R(I) = Σ_{m ∉ I} r_m(I)`. The probability that `j` is
//! the first failure inside `A` therefore sums, over all failed sets
//! `I ⊆ A^c` reachable beforehand, the weight of reaching `I` times the
//! chance that `j` loses the next race:
//!
//! ```text
//! f(∅) = 1,   f(I ∪ {l}) += f(I) · r_l(I) / R(I)   for l ∈ A^c \ I,
//! α_j^[A] = Σ_{I ⊆ A^c} f(I) · r_j(I) / R(I).
//! ```
//!
//! The recursion uses only field operations, so it is generic over the
//! scalar: `f64` is the default, and `BigRational` gives exact answers.

use num_rational::BigRational;
use num_traits::Num;

use crate::model::{ModelSpec, PairTable};
use crate::real::Real;
use crate::subset::{SubsetMask, VariableIndex};

/// Scalar for the DP: ring/field operations and comparison are all we need.
pub trait DpScalar: Clone + Num + PartialOrd {}
impl<T: Clone + Num + PartialOrd> DpScalar for T {}

/// Forward DP over failed sets `I ⊆ A^c`. `rate(failed_bits, pos)` returns
/// `r_{pos+1}(I)`; `n` is the variable count and `a` the target subset.
pub fn jump_chain_alpha<T: DpScalar>(
    n: usize,
    a: SubsetMask,
    j: VariableIndex,
    rate: impl Fn(u32, usize) -> T,
) -> T {
    debug_assert!(a.contains(j));
    let comp = a.complement(n);
    let states = comp.subsets(); // ascending, so subsets precede supersets
    let mut reach: Vec<T> = vec![T::zero(); states.len()];
    reach[0] = T::one();
    let mut alpha = T::zero();
    for state in &states {
        let idx = state.rank_within(comp);
        let weight = reach[idx].clone();
        if weight == T::zero() {
            continue;
        }
        let mut total = T::zero();
        for pos in 0..n {
            if state.bits() >> pos & 1 == 0 {
                total = total + rate(state.bits(), pos);
            }
        }
        alpha = alpha + weight.clone() * rate(state.bits(), j.pos()) / total.clone();
        for l in comp.members() {
            if !state.contains(l) {
                let next = state.insert(l);
                let add = weight.clone() * rate(state.bits(), l.pos()) / total.clone();
                let nidx = next.rank_within(comp);
                reach[nidx] = reach[nidx].clone() + add;
            }
        }
    }
    alpha
}

/// Floating-point DP for a THLS model; the table must be complete.
pub fn thls_alpha_subset<R: Real>(
    n: usize,
    rates: &PairTable<R>,
    a: SubsetMask,
    j: VariableIndex,
) -> R {
    jump_chain_alpha(n, a, j, |failed, pos| {
        *rates
            .get(SubsetMask::new(failed, n).expect("state within range"), VariableIndex::from_pos(pos))
            .expect("validated THLS table")
    })
}

/// Exact-rational DP: every `f64` rate is promoted to the rational it
/// represents exactly, so the result is the exact hit probability of the
/// floating-point table.
pub fn thls_alpha_subset_exact<R: Real>(
    model: &ModelSpec<R>,
    a: SubsetMask,
    j: VariableIndex,
) -> Option<BigRational> {
    let (n, rates) = match model {
        ModelSpec::Thls { n, rates } => (*n, rates),
        _ => return None,
    };
    Some(jump_chain_alpha(n, a, j, |failed, pos| {
        let r = *rates
            .get(SubsetMask::new(failed, n).expect("state within range"), VariableIndex::from_pos(pos))
            .expect("validated THLS table");
        BigRational::from_float(r.as_f64()).expect("finite rate")
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::thls_from_triples;
    use approx::assert_relative_eq;
    use num_bigint::BigInt;

    fn fixture() -> ModelSpec<f64> {
        thls_from_triples(
            3,
            &[
                (&[], 1, 1.0),
                (&[], 2, 2.0),
                (&[], 3, 3.0),
                (&[2], 1, 2.0),
                (&[2], 3, 1.0),
                (&[3], 1, 4.0),
                (&[3], 2, 1.0),
                (&[1], 2, 5.0),
                (&[1], 3, 2.0),
                (&[2, 3], 1, 6.0),
                (&[1, 3], 2, 2.0),
                (&[1, 2], 3, 0.5),
            ],
        )
    }

    #[test]
    fn hand_run_of_the_dp() {
        // A = {1,2}: α_1 = 1/6 + (3/6)(4/5) = 17/30, α_2 = 2/6 + (3/6)(1/5) = 13/30
        let m = fixture();
        let rates = match &m {
            ModelSpec::Thls { rates, .. } => rates,
            _ => unreachable!(),
        };
        let a = SubsetMask::from_indices([1, 2], 3).unwrap();
        let a1 = thls_alpha_subset(3, rates, a, VariableIndex::new(1, 3).unwrap());
        let a2 = thls_alpha_subset(3, rates, a, VariableIndex::new(2, 3).unwrap());
        assert_relative_eq!(a1, 17.0 / 30.0, max_relative = 1e-15);
        assert_relative_eq!(a2, 13.0 / 30.0, max_relative = 1e-15);
        assert_relative_eq!(a1 + a2, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn exact_dp_yields_the_literal_rational() {
        let m = fixture();
        let a = SubsetMask::from_indices([1, 2], 3).unwrap();
        let exact = thls_alpha_subset_exact(&m, a, VariableIndex::new(1, 3).unwrap()).unwrap();
        assert_eq!(exact, BigRational::new(BigInt::from(17), BigInt::from(30)));
    }

    #[test]
    fn full_set_alpha_normalizes_exactly() {
        let m = fixture();
        let full = SubsetMask::full(3);
        let total: BigRational = (1..=3)
            .map(|j| thls_alpha_subset_exact(&m, full, VariableIndex::new(j, 3).unwrap()).unwrap())
            .fold(BigRational::from_float(0.0).unwrap(), |acc, x| acc + x);
        assert_eq!(total, BigRational::from_float(1.0).unwrap());
    }

    #[test]
    fn non_thls_models_are_rejected() {
        let m = ModelSpec::exponential(&[1.0, 2.0]);
        assert!(thls_alpha_subset_exact(&m, SubsetMask::full(2), VariableIndex::new(1, 2).unwrap()).is_none());
    }
}
