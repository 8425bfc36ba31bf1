//! Sequential Monte Carlo sampling of failure sequences and seeded
//! estimators.
//!
//! Sampling is exact for every model kind: stage-wise epochs come from
//! inverting the total conditional cumulative hazard (closed form for
//! load-sharing and piecewise curves, bracketed Newton otherwise), identities
//! are drawn proportionally to the conditional rates at the epoch, frailty
//! models draw `Θ` once per sequence and then use conditional exponentials,
//! and independent models draw each marginal directly.
//!
//! Reproducibility: every sample index `i` uses its own ChaCha8 stream keyed
//! by `(seed, i)`, and estimator reductions are integer counts, so results
//! are bit-identical for a fixed seed regardless of how many worker threads
//! partition the index range.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::hazard::HazardCurve;
use crate::law::LifetimeLaw;
use crate::model::{FrailtyMixing, ModelSpec, PairTable};
use crate::real::Real;
use crate::subset::{SubsetMask, VariableIndex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimulateError {
    #[error("subset must contain at least two variables")]
    SubsetTooSmall,
    #[error("variable {0} is not a member of the subset")]
    NotInSubset(VariableIndex),
    #[error("time grid must be non-decreasing")]
    GridNotIncreasing,
    #[error("at least one sample is required")]
    ZeroSamples,
}

/// 97.5% standard-normal quantile, for 95% intervals.
const Z95: f64 = 1.959963984540054;

/// Samples per work item; reductions are integer counts, so the batch size
/// only affects scheduling, never the result.
const BATCH: u64 = 1 << 14;

/// A complete sampled failure sequence: strictly increasing times paired with
/// the identities, one event per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureSequence<R: Real> {
    pub events: Vec<(R, VariableIndex)>,
}

/// A seeded Monte Carlo estimate. `value` is the raw frequency;
/// `half_width_95` is the largest distance from `value` to either end of the
/// Wilson 95% interval, so `value ± half_width_95` covers it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<R: Real> {
    pub value: R,
    pub half_width_95: R,
    pub n_samples: u64,
    pub seed: u64,
}

/// The ChaCha8 stream for sample `index` under `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw on `(0, 1]`; never zero, so logarithms are safe.
#[inline]
fn u01<R: Real>(rng: &mut ChaCha8Rng) -> R {
    R::of(1.0 - rng.random::<f64>())
}

#[inline]
fn exp_draw<R: Real>(rate: R, rng: &mut ChaCha8Rng) -> R {
    -u01::<R>(rng).ln() / rate
}

/// One draw from a marginal law by cumulative-hazard or CDF inversion.
fn sample_law<R: Real>(law: &LifetimeLaw<R>, rng: &mut ChaCha8Rng) -> R {
    match law {
        LifetimeLaw::Hazard(curve) => curve.invert_cumulative(-u01::<R>(rng).ln()),
        LifetimeLaw::Uniform { a, b } => *a + (*b - *a) * R::of(rng.random::<f64>()),
        LifetimeLaw::Dirac { c } => *c,
        LifetimeLaw::Mixture { weights, components } => {
            let mut u = R::of(rng.random::<f64>());
            let mut chosen = components.len() - 1;
            for (k, w) in weights.iter().enumerate() {
                if u < *w {
                    chosen = k;
                    break;
                }
                u = u - *w;
            }
            sample_law(&components[chosen], rng)
        }
    }
}

fn sample_theta<R: Real>(mixing: &FrailtyMixing<R>, rng: &mut ChaCha8Rng) -> R {
    match mixing {
        FrailtyMixing::Gamma { shape, rate } => {
            let gamma = rand_distr::Gamma::new(shape.as_f64(), 1.0 / rate.as_f64())
                .expect("validated gamma parameters");
            R::of(rng.sample(gamma))
        }
        FrailtyMixing::Discrete { values, probs } => {
            let mut u = R::of(rng.random::<f64>());
            let mut chosen = values.len() - 1;
            for (k, p) in probs.iter().enumerate() {
                if u < *p {
                    chosen = k;
                    break;
                }
                u = u - *p;
            }
            values[chosen]
        }
    }
}

/// Rate tables flattened for the sampling hot loop.
enum Prepared<'m, R: Real> {
    Independent(&'m [LifetimeLaw<R>]),
    Frailty { c: &'m [R], mixing: &'m FrailtyMixing<R> },
    ThlsDense { n: usize, total: Vec<R>, entries: Vec<Vec<(u8, R)>> },
    ThlsSparse { n: usize, rates: &'m PairTable<R> },
    SetDependent { n: usize, curves: &'m PairTable<HazardCurve<R>> },
}

impl<'m, R: Real> Prepared<'m, R> {
    fn new(model: &'m ModelSpec<R>) -> Self {
        match model {
            ModelSpec::Independent { laws } => Prepared::Independent(laws),
            ModelSpec::FrailtyExp { c, mixing } => Prepared::Frailty { c, mixing },
            ModelSpec::Thls { n, rates } => {
                if *n <= 16 {
                    let full = SubsetMask::full(*n);
                    let mut total = vec![R::zero(); 1 << *n];
                    let mut entries = vec![Vec::new(); 1 << *n];
                    for mask in full.subsets() {
                        if mask == full {
                            continue;
                        }
                        let bits = mask.bits() as usize;
                        for j in mask.complement(*n).members() {
                            let r = *rates.get(mask, j).expect("validated THLS table");
                            total[bits] += r;
                            entries[bits].push((j.pos() as u8, r));
                        }
                    }
                    Prepared::ThlsDense { n: *n, total, entries }
                } else {
                    Prepared::ThlsSparse { n: *n, rates }
                }
            }
            ModelSpec::SetDependent { n, curves } => Prepared::SetDependent { n: *n, curves },
        }
    }

    fn n(&self) -> usize {
        match self {
            Prepared::Independent(laws) => laws.len(),
            Prepared::Frailty { c, .. } => c.len(),
            Prepared::ThlsDense { n, .. } => *n,
            Prepared::ThlsSparse { n, .. } => *n,
            Prepared::SetDependent { n, .. } => *n,
        }
    }

    /// First failure among `watch`, walking stages until a watched variable
    /// goes down. Returns its (time, identity).
    fn first_failure_in(&self, watch: SubsetMask, rng: &mut ChaCha8Rng) -> (R, VariableIndex) {
        match self {
            Prepared::Independent(laws) => {
                let mut best = (R::infinity(), VariableIndex::from_pos(0));
                for j in watch.members() {
                    let t = sample_law(&laws[j.pos()], rng);
                    if t < best.0 {
                        best = (t, j);
                    }
                }
                best
            }
            Prepared::Frailty { c, mixing } => {
                let theta = sample_theta(mixing, rng);
                let mut best = (R::infinity(), VariableIndex::from_pos(0));
                for j in watch.members() {
                    let t = exp_draw(c[j.pos()] * theta, rng);
                    if t < best.0 {
                        best = (t, j);
                    }
                }
                best
            }
            _ => {
                let mut failed = SubsetMask::EMPTY;
                let mut now = R::zero();
                loop {
                    let (t, j) = self.next_failure(failed, now, rng);
                    if watch.contains(j) {
                        return (t, j);
                    }
                    failed = failed.insert(j);
                    now = t;
                }
            }
        }
    }
}

/// Solve `Σ_l ∫_now^s β_l = target` for `s`; the total cumulative hazard is
/// strictly increasing and diverges (validated), so a bracketed
/// Newton/bisection always lands.
fn invert_total_cumulative<R: Real>(
    survivors: &[(VariableIndex, &HazardCurve<R>)],
    now: R,
    target: R,
) -> R {
    let delta = |s: R| -> R {
        survivors.iter().map(|(_, c)| c.cumulative_between(now, s)).sum()
    };
    let mut lo = now;
    let mut hi = now + R::one();
    let mut guard = 0;
    while delta(hi) < target {
        lo = hi;
        hi = now + (hi - now) * R::of(2.0);
        guard += 1;
        debug_assert!(guard < 500, "validated curves diverge");
        if guard >= 500 {
            return hi;
        }
    }
    let mut s = (lo + hi) * R::of(0.5);
    for _ in 0..200 {
        let d = delta(s);
        if d > target {
            hi = s;
        } else {
            lo = s;
        }
        let rate: R = survivors.iter().map(|(_, c)| c.rate(s)).sum();
        let mut next = s + (target - d) / rate;
        if !(next > lo && next < hi) {
            next = (lo + hi) * R::of(0.5);
        }
        if (next - s).abs() <= s.abs() * R::of(1e-15) + R::of(1e-300) {
            return next;
        }
        s = next;
    }
    s
}

/// Sample one complete failure sequence.
pub fn sample_sequence<R: Real>(model: &ModelSpec<R>, rng: &mut ChaCha8Rng) -> FailureSequence<R> {
    let prepared = Prepared::new(model);
    sample_sequence_prepared(&prepared, rng)
}

fn sample_sequence_prepared<R: Real>(prepared: &Prepared<'_, R>, rng: &mut ChaCha8Rng) -> FailureSequence<R> {
    let n = prepared.n();
    match prepared {
        Prepared::Independent(laws) => {
            let mut events: Vec<(R, VariableIndex)> = laws
                .iter()
                .enumerate()
                .map(|(pos, law)| (sample_law(law, rng), VariableIndex::from_pos(pos)))
                .collect();
            events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite times"));
            FailureSequence { events }
        }
        Prepared::Frailty { c, mixing } => {
            let theta = sample_theta(mixing, rng);
            let mut events: Vec<(R, VariableIndex)> = c
                .iter()
                .enumerate()
                .map(|(pos, cj)| (exp_draw(*cj * theta, rng), VariableIndex::from_pos(pos)))
                .collect();
            events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite times"));
            FailureSequence { events }
        }
        _ => {
            let mut events = Vec::with_capacity(n);
            let mut failed = SubsetMask::EMPTY;
            let mut now = R::zero();
            while events.len() < n {
                let (t, j) = prepared.next_failure(failed, now, rng);
                events.push((t, j));
                failed = failed.insert(j);
                now = t;
            }
            FailureSequence { events }
        }
    }
}

impl<'m, R: Real> Prepared<'m, R> {
    /// One stage step for walk-based kinds: next epoch and identity from the
    /// given state. Panics for kinds that are not stage-walked.
    fn next_failure(&self, failed: SubsetMask, now: R, rng: &mut ChaCha8Rng) -> (R, VariableIndex) {
        match self {
            Prepared::ThlsDense { total, entries, .. } => {
                let bits = failed.bits() as usize;
                let r_total = total[bits];
                let t = now + exp_draw(r_total, rng);
                let stage = &entries[bits];
                let mut u = R::of(rng.random::<f64>()) * r_total;
                let mut pick = stage[stage.len() - 1].0;
                for &(pos, r) in stage {
                    if u < r {
                        pick = pos;
                        break;
                    }
                    u = u - r;
                }
                (t, VariableIndex::from_pos(pick as usize))
            }
            Prepared::ThlsSparse { n, rates } => {
                let survivors: Vec<(VariableIndex, R)> = failed
                    .complement(*n)
                    .members()
                    .map(|j| (j, *rates.get(failed, j).expect("validated THLS table")))
                    .collect();
                let r_total: R = survivors.iter().map(|x| x.1).sum();
                let t = now + exp_draw(r_total, rng);
                let mut u = R::of(rng.random::<f64>()) * r_total;
                let mut pick = survivors[survivors.len() - 1].0;
                for &(j, r) in &survivors {
                    if u < r {
                        pick = j;
                        break;
                    }
                    u = u - r;
                }
                (t, pick)
            }
            Prepared::SetDependent { n, curves } => {
                let survivors: Vec<(VariableIndex, &HazardCurve<R>)> = failed
                    .complement(*n)
                    .members()
                    .map(|j| (j, curves.get(failed, j).expect("validated table")))
                    .collect();
                let target = -u01::<R>(rng).ln();
                let epoch = invert_total_cumulative(&survivors, now, target);
                let rates_now: Vec<R> = survivors.iter().map(|(_, c)| c.rate(epoch)).collect();
                let r_total: R = rates_now.iter().cloned().sum();
                let mut u = R::of(rng.random::<f64>()) * r_total;
                let mut pick = survivors[survivors.len() - 1].0;
                for ((j, _), r) in survivors.iter().zip(rates_now.iter()) {
                    if u < *r {
                        pick = *j;
                        break;
                    }
                    u = u - *r;
                }
                (epoch, pick)
            }
            _ => unreachable!("stage walk applies to THLS and set-dependent kinds"),
        }
    }
}

/// First failure among the variables of `a`: time and identity, exactly
/// distributed, consuming one dedicated stream.
pub fn first_subset_failure<R: Real>(
    model: &ModelSpec<R>,
    a: SubsetMask,
    rng: &mut ChaCha8Rng,
) -> (R, VariableIndex) {
    Prepared::new(model).first_failure_in(a, rng)
}

/// Wilson-backed estimate from a success count.
pub fn wilson_estimate<R: Real>(successes: u64, n_samples: u64, seed: u64) -> Estimate<R> {
    let n = n_samples as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let half_width = (p - (center - half)).max(center + half - p);
    Estimate { value: R::of(p), half_width_95: R::of(half_width), n_samples, seed }
}

/// Estimate `α_j^[A] = P(X_j = min_{k∈A} X_k)` from `n_samples` independent
/// sequences. Deterministic given the seed and independent of worker count.
pub fn estimate_alpha_subset<R: Real>(
    model: &ModelSpec<R>,
    a: SubsetMask,
    j: VariableIndex,
    n_samples: u64,
    seed: u64,
) -> Result<Estimate<R>, SimulateError> {
    if a.len() < 2 {
        return Err(SimulateError::SubsetTooSmall);
    }
    if !a.contains(j) {
        return Err(SimulateError::NotInSubset(j));
    }
    if n_samples == 0 {
        return Err(SimulateError::ZeroSamples);
    }
    let prepared = Prepared::new(model);
    let template = ChaCha8Rng::seed_from_u64(seed);
    let batches = n_samples.div_ceil(BATCH);
    let hits: u64 = (0..batches)
        .into_par_iter()
        .map(|b| {
            let start = b * BATCH;
            let end = (start + BATCH).min(n_samples);
            let mut count = 0u64;
            for i in start..end {
                let mut rng = template.clone();
                rng.set_stream(i);
                let (_, id) = prepared.first_failure_in(a, &mut rng);
                if id == j {
                    count += 1;
                }
            }
            count
        })
        .sum();
    Ok(wilson_estimate(hits, n_samples, seed))
}

/// Pointwise survival estimates of `X_{1:A}` on a non-decreasing grid; raw
/// frequencies, no isotonic clean-up.
pub fn estimate_survival<R: Real>(
    model: &ModelSpec<R>,
    a: SubsetMask,
    grid: &[R],
    n_samples: u64,
    seed: u64,
) -> Result<Vec<Estimate<R>>, SimulateError> {
    if a.is_empty() {
        return Err(SimulateError::SubsetTooSmall);
    }
    if n_samples == 0 {
        return Err(SimulateError::ZeroSamples);
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(SimulateError::GridNotIncreasing);
    }
    let prepared = Prepared::new(model);
    let template = ChaCha8Rng::seed_from_u64(seed);
    let batches = n_samples.div_ceil(BATCH);
    let counts: Vec<u64> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let start = b * BATCH;
            let end = (start + BATCH).min(n_samples);
            let mut counts = vec![0u64; grid.len()];
            for i in start..end {
                let mut rng = template.clone();
                rng.set_stream(i);
                let (t, _) = prepared.first_failure_in(a, &mut rng);
                for (slot, g) in counts.iter_mut().zip(grid.iter()) {
                    if t > *g {
                        *slot += 1;
                    }
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; grid.len()],
            |mut acc, item| {
                for (a, b) in acc.iter_mut().zip(item.iter()) {
                    *a += b;
                }
                acc
            },
        );
    Ok(counts.into_iter().map(|c| wilson_estimate(c, n_samples, seed)).collect())
}
