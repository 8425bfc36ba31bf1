//! Transient distribution of the THLS failure-set chain by uniformization.
//!
//! For a subset `A`, the states are the failed sets `I ⊆ A^c`; any failure
//! inside `A` absorbs. The continuous-time chain moves `I → I ∪ {l}` at rate
//! `r_l(I)` and leaks to absorption at rate `Σ_{j ∈ A} r_j(I)`. Uniformizing
//! at `Λ = max_I R(I)` turns the transient vector at time `t` into a Poisson
//! mixture of powers of a sub-stochastic jump matrix; truncating the Poisson
//! tail at mass `tol` bounds the error by `tol`. This route is preferred over
//! hypoexponential closed forms, which lose digits under equal or
//! near-equal rates.

use crate::model::PairTable;
use crate::real::{ln_gamma, Real};
use crate::subset::{SubsetMask, VariableIndex};

use super::KernelError;

/// Sub-probability occupancy over the states `I ⊆ A^c` at time `t`, indexed
/// by `I.rank_within(A^c)`. The vector sums to `P(X_{1:A} > t)` up to `tol`.
pub(crate) fn subset_occupancy<R: Real>(
    n: usize,
    rates: &PairTable<R>,
    a: SubsetMask,
    t: R,
    tol: R,
) -> Result<Vec<R>, KernelError> {
    let comp = a.complement(n);
    let states = comp.subsets();
    let m = states.len();
    let state_of = |mask: SubsetMask| mask.rank_within(comp);

    // per-state total outflow and transitions that stay transient
    let mut total = vec![R::zero(); m];
    let mut moves: Vec<Vec<(usize, R)>> = vec![Vec::new(); m];
    for mask in &states {
        let idx = state_of(*mask);
        let mut out = R::zero();
        for pos in 0..n {
            if mask.bits() >> pos & 1 == 0 {
                let j = VariableIndex::from_pos(pos);
                let r = *rates.get(*mask, j).ok_or(KernelError::IncompleteTable)?;
                out += r;
                if comp.contains(j) {
                    moves[idx].push((state_of(mask.insert(j)), r));
                }
            }
        }
        total[idx] = out;
    }
    let uniform_rate = total.iter().cloned().fold(R::zero(), R::max);
    let lam = uniform_rate * t;
    if !(lam.is_finite() && lam >= R::zero()) {
        return Err(KernelError::UniformizationOverflow);
    }

    let weights = poisson_window(lam, tol)?;
    let mut pi = vec![R::zero(); m];
    pi[state_of(SubsetMask::EMPTY)] = R::one();
    let mut occupancy = vec![R::zero(); m];
    let mut next = vec![R::zero(); m];
    for k in 0..=weights.hi {
        if let Some(w) = weights.get(k) {
            for (o, p) in occupancy.iter_mut().zip(pi.iter()) {
                *o += w * *p;
            }
        }
        if k == weights.hi {
            break;
        }
        // one sub-stochastic jump step: π ← π P
        for x in next.iter_mut() {
            *x = R::zero();
        }
        for (idx, p) in pi.iter().enumerate() {
            if *p == R::zero() {
                continue;
            }
            next[idx] += *p * (R::one() - total[idx] / uniform_rate);
            for &(to, r) in &moves[idx] {
                next[to] += *p * (r / uniform_rate);
            }
        }
        std::mem::swap(&mut pi, &mut next);
    }
    Ok(occupancy)
}

struct PoissonWindow<R> {
    lo: usize,
    hi: usize,
    weights: Vec<R>,
}

impl<R: Real> PoissonWindow<R> {
    fn get(&self, k: usize) -> Option<R> {
        if k < self.lo {
            None
        } else {
            self.weights.get(k - self.lo).copied()
        }
    }
}

/// Poisson(λ) pmf on a window carrying at least `1 - tol` of the mass,
/// centered at the mode so nothing underflows for large λ.
fn poisson_window<R: Real>(lam: R, tol: R) -> Result<PoissonWindow<R>, KernelError> {
    if lam == R::zero() {
        return Ok(PoissonWindow { lo: 0, hi: 0, weights: vec![R::one()] });
    }
    let lam_f = lam.as_f64();
    if lam_f > 2.0e5 {
        return Err(KernelError::UniformizationOverflow);
    }
    let mut span = (10.0 * lam_f.sqrt() + 40.0).ceil();
    loop {
        let lo = (lam_f - span).floor().max(0.0) as usize;
        let hi = (lam_f + span).ceil() as usize;
        let ln_w0 = R::of(lo as f64) * lam.ln() - lam - ln_gamma(R::of(lo as f64 + 1.0));
        let mut weights = Vec::with_capacity(hi - lo + 1);
        let mut w = ln_w0.exp();
        let mut mass = R::zero();
        for k in lo..=hi {
            if k > lo {
                w = w * lam / R::of(k as f64);
            }
            weights.push(w);
            mass += w;
        }
        if R::one() - mass <= tol {
            return Ok(PoissonWindow { lo, hi, weights });
        }
        span *= 2.0;
        if span > 1.0e7 {
            return Err(KernelError::UniformizationOverflow);
        }
    }
}
