//! Model specifications and multivariate conditional hazard rate evaluation.
//!
//! A [`ModelSpec`] pins down the joint law of `n` non-negative dependent
//! lifetimes through its m.c.h.r. functions `λ_j(t | I; t_1, .., t_k)`: the
//! failure intensity of variable `j` at time `t` given that the variables in
//! `I` failed at the recorded times and everyone else is still alive.
//!
//! Four kinds are supported:
//!
//! * `Independent` — a marginal [`LifetimeLaw`] per variable; the m.c.h.r.
//!   reduces to the ordinary hazard of each law.
//! * `Thls` — time-homogeneous load sharing: a constant rate `r_j(I)` per
//!   (failed set, survivor) pair.
//! * `FrailtyExp` — conditionally independent exponentials with rates
//!   `c_j Θ` given a random frailty `Θ`; the m.c.h.r. is `c_j` times the
//!   posterior mean of `Θ` given the observed history.
//! * `SetDependent` — a hazard curve `β_j(t | I)` per pair: intensities may
//!   depend on the failed set and the current time but not on the exact past
//!   failure times (exact-time dependence is covered by the frailty kind).
//!
//! Models are immutable after validation and every evaluation here is pure.

use std::collections::HashMap;

use thiserror::Error;

use crate::hazard::HazardCurve;
use crate::history::FailureHistory;
use crate::law::LifetimeLaw;
use crate::real::Real;
use crate::subset::{SubsetMask, VariableIndex, MAX_VARIABLES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("variable {0} has already failed in the given history")]
    AlreadyFailed(VariableIndex),
    #[error("evaluation time lies before the history's current time")]
    TimeBeforeNow,
    #[error("variable index {0} out of range 1..={1}")]
    IndexOutOfRange(usize, usize),
    #[error("no rate recorded for failed set {set} and variable {j}")]
    MissingRate { set: SubsetMask, j: VariableIndex },
    #[error("all variables have failed; no residual model exists")]
    AllFailed,
    #[error("history is inconsistent with the model: {0}")]
    InconsistentHistory(String),
    #[error("operation requires a {expected} model")]
    WrongKind { expected: &'static str },
}

/// Table of per-(failed set, survivor) values, used for THLS rates and
/// set-dependent curves.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTable<T> {
    map: HashMap<(u32, u8), T>,
}

impl<T> Default for PairTable<T> {
    fn default() -> Self {
        Self { map: HashMap::new() }
    }
}

impl<T> PairTable<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, failed: SubsetMask, j: VariableIndex, value: T) -> Option<T> {
        self.map.insert((failed.bits(), j.get() as u8), value)
    }

    pub fn get(&self, failed: SubsetMask, j: VariableIndex) -> Option<&T> {
        self.map.get(&(failed.bits(), j.get() as u8))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Entries sorted by (mask, index); keeps reports deterministic.
    pub fn entries(&self) -> Vec<(u32, u8, &T)> {
        let mut out: Vec<_> = self.map.iter().map(|(&(m, j), v)| (m, j, v)).collect();
        out.sort_by_key(|&(m, j, _)| (m, j));
        out
    }
}

/// Mixing distribution of the frailty `Θ`.
#[derive(Debug, Clone, PartialEq)]
pub enum FrailtyMixing<R: Real> {
    Gamma { shape: R, rate: R },
    Discrete { values: Vec<R>, probs: Vec<R> },
}

impl<R: Real> FrailtyMixing<R> {
    /// Laplace transform `E[e^{-Θ u}]` for `u >= 0`.
    pub fn laplace(&self, u: R) -> R {
        (-self.neg_ln_laplace(u)).exp()
    }

    /// `-ln E[e^{-Θ u}]`, computed without underflow.
    pub fn neg_ln_laplace(&self, u: R) -> R {
        match self {
            FrailtyMixing::Gamma { shape, rate } => *shape * (u / *rate).ln_1p(),
            FrailtyMixing::Discrete { values, probs } => {
                let tmin = values.iter().cloned().fold(R::infinity(), R::min);
                let mut s = R::zero();
                for (v, p) in values.iter().zip(probs.iter()) {
                    s += *p * (-(*v - tmin) * u).exp();
                }
                tmin * u - s.ln()
            }
        }
    }

    /// Posterior mean `E[Θ | k failures, exposure d]`, where the likelihood of
    /// the observed history given `Θ = θ` is proportional to `θ^k e^{-θ d}`.
    pub fn posterior_mean(&self, k: usize, d: R) -> R {
        match self {
            FrailtyMixing::Gamma { shape, rate } => (*shape + R::of(k as f64)) / (*rate + d),
            FrailtyMixing::Discrete { values, probs } => {
                let k = R::of(k as f64);
                let mut ln_best = R::neg_infinity();
                let lw: Vec<R> = values
                    .iter()
                    .zip(probs.iter())
                    .map(|(v, p)| {
                        let l = p.ln() + k * v.ln() - *v * d;
                        ln_best = ln_best.max(l);
                        l
                    })
                    .collect();
                let mut num = R::zero();
                let mut den = R::zero();
                for (l, v) in lw.iter().zip(values.iter()) {
                    let w = (*l - ln_best).exp();
                    num += w * *v;
                    den += w;
                }
                num / den
            }
        }
    }

    /// `∫_{d_a}^{d_b} E[Θ | k, d] dd`, the integrated posterior mean over an
    /// exposure window; closed form for both mixing families.
    pub fn integrated_posterior_mean(&self, k: usize, d_a: R, d_b: R) -> R {
        match self {
            FrailtyMixing::Gamma { shape, rate } => {
                (*shape + R::of(k as f64)) * (((*rate + d_b) / (*rate + d_a)).ln())
            }
            FrailtyMixing::Discrete { values, probs } => {
                // = g(d_a) - g(d_b) with g(d) = ln Σ p θ^k e^{-θ d}
                let g = |d: R| -> R {
                    let k = R::of(k as f64);
                    let mut ln_best = R::neg_infinity();
                    let lw: Vec<R> = values
                        .iter()
                        .zip(probs.iter())
                        .map(|(v, p)| {
                            let l = p.ln() + k * v.ln() - *v * d;
                            ln_best = ln_best.max(l);
                            l
                        })
                        .collect();
                    let s: R = lw.iter().map(|l| (*l - ln_best).exp()).sum();
                    ln_best + s.ln()
                };
                g(d_a) - g(d_b)
            }
        }
    }

    /// Posterior mixing law after `k` failures with exposure `d`.
    pub fn posterior(&self, k: usize, d: R) -> FrailtyMixing<R> {
        match self {
            FrailtyMixing::Gamma { shape, rate } => {
                FrailtyMixing::Gamma { shape: *shape + R::of(k as f64), rate: *rate + d }
            }
            FrailtyMixing::Discrete { values, probs } => {
                let kr = R::of(k as f64);
                let mut ln_best = R::neg_infinity();
                let lw: Vec<R> = values
                    .iter()
                    .zip(probs.iter())
                    .map(|(v, p)| {
                        let l = p.ln() + kr * v.ln() - *v * d;
                        ln_best = ln_best.max(l);
                        l
                    })
                    .collect();
                let mut w: Vec<R> = lw.iter().map(|l| (*l - ln_best).exp()).collect();
                let total: R = w.iter().cloned().sum();
                for wi in &mut w {
                    *wi = *wi / total;
                }
                FrailtyMixing::Discrete { values: values.clone(), probs: w }
            }
        }
    }

    fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            FrailtyMixing::Gamma { shape, rate } => {
                if !(shape.is_finite() && *shape > R::zero() && rate.is_finite() && *rate > R::zero()) {
                    out.push("gamma mixing requires positive shape and rate".into());
                }
            }
            FrailtyMixing::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    out.push("discrete mixing needs matching, non-empty values and probs".into());
                }
                if values.iter().any(|v| !(v.is_finite() && *v > R::zero())) {
                    out.push("discrete mixing values must be positive".into());
                }
                if probs.iter().any(|p| !(p.is_finite() && *p > R::zero())) {
                    out.push("discrete mixing probabilities must be positive".into());
                }
                let s: R = probs.iter().cloned().sum();
                if (s - R::one()).abs() > R::of(1e-9) {
                    out.push("discrete mixing probabilities must sum to 1".into());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Independent,
    Thls,
    FrailtyExp,
    SetDependent,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Independent => "independent",
            ModelKind::Thls => "thls",
            ModelKind::FrailtyExp => "frailty-exp",
            ModelKind::SetDependent => "set-dependent",
        }
    }
}

/// A fully specified joint law of `n` dependent lifetimes.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec<R: Real> {
    Independent { laws: Vec<LifetimeLaw<R>> },
    Thls { n: usize, rates: PairTable<R> },
    FrailtyExp { c: Vec<R>, mixing: FrailtyMixing<R> },
    SetDependent { n: usize, curves: PairTable<HazardCurve<R>> },
}

/// A single invariant violation, with a path into the offending part of the
/// specification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Outcome of `ModelSpec::validate`; an empty list of violations means the
/// model satisfies every structural invariant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { path: path.into(), message: message.into() });
    }
}

impl<R: Real> ModelSpec<R> {
    /// Independent exponentials with the given rates.
    pub fn exponential(rates: &[R]) -> Self {
        ModelSpec::Independent { laws: rates.iter().map(|r| LifetimeLaw::exponential(*r)).collect() }
    }

    pub fn n(&self) -> usize {
        match self {
            ModelSpec::Independent { laws } => laws.len(),
            ModelSpec::Thls { n, .. } => *n,
            ModelSpec::FrailtyExp { c, .. } => c.len(),
            ModelSpec::SetDependent { n, .. } => *n,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Independent { .. } => ModelKind::Independent,
            ModelSpec::Thls { .. } => ModelKind::Thls,
            ModelSpec::FrailtyExp { .. } => ModelKind::FrailtyExp,
            ModelSpec::SetDependent { .. } => ModelKind::SetDependent,
        }
    }

    pub fn index(&self, value: usize) -> Result<VariableIndex, ModelError> {
        VariableIndex::new(value, self.n()).map_err(|_| ModelError::IndexOutOfRange(value, self.n()))
    }

    /// Whether any marginal law carries an atom (then the model has no
    /// baseline hazard representation and kernels use the CDF path).
    pub fn has_atoms(&self) -> bool {
        match self {
            ModelSpec::Independent { laws } => laws.iter().any(|l| l.has_atoms()),
            _ => false,
        }
    }

    /// Every structural invariant violation, with a path into the spec.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let n = self.n();
        if n == 0 {
            report.push("n", "at least one variable is required");
            return report;
        }
        if n > MAX_VARIABLES {
            report.push("n", format!("n={n} exceeds the supported maximum {MAX_VARIABLES}"));
            return report;
        }
        match self {
            ModelSpec::Independent { laws } => {
                for (i, law) in laws.iter().enumerate() {
                    for msg in law.check(false) {
                        report.push(format!("laws[{}]", i + 1), msg);
                    }
                    if law.atoms().len() > 1 {
                        report.push(
                            format!("laws[{}]", i + 1),
                            "a variable may carry at most one point mass",
                        );
                    }
                }
                // pairwise-distinct atoms keep the no-tie property
                let mut atoms: Vec<(usize, R)> = Vec::new();
                for (i, law) in laws.iter().enumerate() {
                    for (loc, _) in law.atoms() {
                        atoms.push((i + 1, loc));
                    }
                }
                for a in 0..atoms.len() {
                    for b in a + 1..atoms.len() {
                        if atoms[a].0 != atoms[b].0 && atoms[a].1 == atoms[b].1 {
                            report.push(
                                format!("laws[{}]", atoms[b].0),
                                format!(
                                    "tie probability positive: shares the atom at {} with variable {}",
                                    atoms[b].1, atoms[a].0
                                ),
                            );
                        }
                    }
                }
            }
            ModelSpec::Thls { n, rates } => {
                Self::validate_pair_table(&mut report, *n, rates, "rates", |rate, path, report| {
                    if !(rate.is_finite() && *rate > R::zero()) {
                        report.push(path, "rate must be finite and positive");
                    }
                });
            }
            ModelSpec::FrailtyExp { c, mixing } => {
                for (i, ci) in c.iter().enumerate() {
                    if !(ci.is_finite() && *ci > R::zero()) {
                        report.push(format!("c[{}]", i + 1), "must be finite and positive");
                    }
                }
                for msg in mixing.check() {
                    report.push("theta", msg);
                }
            }
            ModelSpec::SetDependent { n, curves } => {
                Self::validate_pair_table(&mut report, *n, curves, "curves", |curve, path, report| {
                    for msg in curve.check() {
                        report.push(path.clone(), msg);
                    }
                    if curve.check().is_empty() && !curve.diverges() {
                        report.push(path, "hazard must diverge: a zero tail rate leaves the minimum infinite");
                    }
                });
            }
        }
        report
    }

    fn validate_pair_table<T>(
        report: &mut ValidationReport,
        n: usize,
        table: &PairTable<T>,
        name: &str,
        check_value: impl Fn(&T, String, &mut ValidationReport),
    ) {
        let full = SubsetMask::full(n);
        // every provided entry must be a legal (I, j) pair
        for (mask_bits, j, value) in table.entries() {
            let path = format!("{name}[I={{{}}}][j={}]", fmt_mask(mask_bits), j);
            match SubsetMask::new(mask_bits, n) {
                Ok(mask) => {
                    if mask == full {
                        report.push(path.clone(), "failed set must be a proper subset");
                        continue;
                    }
                    let ok_j = (1..=n).contains(&(j as usize));
                    if !ok_j || mask.contains(VariableIndex::from_pos(j as usize - 1)) {
                        report.push(path.clone(), "index must denote a surviving variable");
                        continue;
                    }
                    check_value(value, path, report);
                }
                Err(_) => report.push(path, format!("failed set is not a subset of [{n}]")),
            }
        }
        // completeness: every (I, j) with |I| <= n-1, j outside I
        if n <= 16 {
            for mask in full.subsets() {
                if mask == full {
                    continue;
                }
                for j in mask.complement(n).members() {
                    if table.get(mask, j).is_none() {
                        report.push(name.to_string(), format!("missing rate (I={mask}, j={j})"));
                    }
                }
            }
        } else {
            let required: usize = n * (1usize << (n - 1));
            if table.len() < required {
                report.push(
                    name.to_string(),
                    format!("table has {} entries but {} are required", table.len(), required),
                );
            }
        }
    }

    /// The m.c.h.r. `λ_j(t | I; t_1, .., t_k)` read off the observed history.
    pub fn mchr(&self, j: VariableIndex, t: R, h: &FailureHistory<R>) -> Result<R, ModelError> {
        let n = self.n();
        if j.get() > n {
            return Err(ModelError::IndexOutOfRange(j.get(), n));
        }
        if h.contains(j) {
            return Err(ModelError::AlreadyFailed(j));
        }
        if t < h.now() {
            return Err(ModelError::TimeBeforeNow);
        }
        match self {
            ModelSpec::Independent { laws } => Ok(laws[j.pos()].hazard(t)),
            ModelSpec::Thls { rates, .. } => {
                let set = h.failed_set();
                rates.get(set, j).copied().ok_or(ModelError::MissingRate { set, j })
            }
            ModelSpec::FrailtyExp { c, mixing } => {
                let (k, d_hist, s_surv) = frailty_exposure(c, h);
                Ok(c[j.pos()] * mixing.posterior_mean(k, d_hist + t * s_surv))
            }
            ModelSpec::SetDependent { curves, .. } => {
                let set = h.failed_set();
                curves
                    .get(set, j)
                    .map(|curve| curve.rate(t))
                    .ok_or(ModelError::MissingRate { set, j })
            }
        }
    }

    /// Baseline rate `λ_j(t | ∅)`; panics only on indices out of range.
    pub fn baseline_rate(&self, j: VariableIndex, t: R) -> R {
        self.mchr(j, t, &FailureHistory::empty()).expect("baseline evaluation with empty history")
    }

    /// `∫_0^t λ_j(s | ∅) ds` in closed form; `+∞` once an atom-free
    /// representation stops existing (e.g. beyond a finite support).
    pub fn baseline_cumulative(&self, j: VariableIndex, t: R) -> R {
        match self {
            ModelSpec::Independent { laws } => laws[j.pos()].cumulative_hazard(t),
            ModelSpec::Thls { rates, .. } => {
                *rates.get(SubsetMask::EMPTY, j).expect("validated table") * t
            }
            ModelSpec::FrailtyExp { c, mixing } => {
                let s_all: R = c.iter().cloned().sum();
                c[j.pos()] / s_all * mixing.integrated_posterior_mean(0, R::zero(), t * s_all)
            }
            ModelSpec::SetDependent { curves, .. } => {
                curves.get(SubsetMask::EMPTY, j).expect("validated table").cumulative(t)
            }
        }
    }

    /// `∫_a^b λ_j(s | I; t_1, .., t_k) ds` for `h.now() <= a <= b`, in closed
    /// form for every kind.
    pub fn mchr_cumulative(&self, j: VariableIndex, a: R, b: R, h: &FailureHistory<R>) -> Result<R, ModelError> {
        let n = self.n();
        if j.get() > n {
            return Err(ModelError::IndexOutOfRange(j.get(), n));
        }
        if h.contains(j) {
            return Err(ModelError::AlreadyFailed(j));
        }
        if a < h.now() || b < a {
            return Err(ModelError::TimeBeforeNow);
        }
        match self {
            ModelSpec::Independent { laws } => {
                let law = &laws[j.pos()];
                Ok(law.cumulative_hazard(b) - law.cumulative_hazard(a))
            }
            ModelSpec::Thls { rates, .. } => {
                let set = h.failed_set();
                let r = rates.get(set, j).copied().ok_or(ModelError::MissingRate { set, j })?;
                Ok(r * (b - a))
            }
            ModelSpec::FrailtyExp { c, mixing } => {
                let (k, d_hist, s_surv) = frailty_exposure(c, h);
                Ok(c[j.pos()] / s_surv
                    * mixing.integrated_posterior_mean(k, d_hist + a * s_surv, d_hist + b * s_surv))
            }
            ModelSpec::SetDependent { curves, .. } => {
                let set = h.failed_set();
                let curve = curves.get(set, j).ok_or(ModelError::MissingRate { set, j })?;
                Ok(curve.cumulative_between(a, b))
            }
        }
    }

    /// The model of the residual lifetimes `(X_j - now : j surviving)` given
    /// the history, re-expressed over the survivors (renumbered `1..=m` in
    /// increasing order of their original indices).
    ///
    /// Its m.c.h.r. functions agree with the conditional ones of the original
    /// model shifted to time origin `now`.
    pub fn residual(&self, h: &FailureHistory<R>) -> Result<ModelSpec<R>, ModelError> {
        let n = self.n();
        for &(idx, _) in h.failures() {
            if idx.get() > n {
                return Err(ModelError::IndexOutOfRange(idx.get(), n));
            }
        }
        let survivors = h.survivors(n);
        let m = survivors.len();
        if m == 0 {
            return Err(ModelError::AllFailed);
        }
        let failed = h.failed_set();
        let now = h.now();
        // new index p+1 (0-based p) corresponds to old index survivors[p]
        let old_of = |new: VariableIndex| survivors[new.pos()];
        match self {
            ModelSpec::Independent { laws } => {
                let mut new_laws = Vec::with_capacity(m);
                for v in &survivors {
                    match laws[v.pos()].truncate(now) {
                        Some(law) => new_laws.push(law),
                        None => {
                            return Err(ModelError::InconsistentHistory(format!(
                                "variable {v} cannot have survived past {now}"
                            )))
                        }
                    }
                }
                Ok(ModelSpec::Independent { laws: new_laws })
            }
            ModelSpec::Thls { rates, .. } => {
                let mut new_rates = PairTable::new();
                for sub in SubsetMask::full(m).subsets() {
                    if sub.len() == m {
                        continue;
                    }
                    let old_set = sub.members().fold(failed, |acc, v| acc.insert(old_of(v)));
                    for j_new in sub.complement(m).members() {
                        let j_old = old_of(j_new);
                        let r = rates
                            .get(old_set, j_old)
                            .copied()
                            .ok_or(ModelError::MissingRate { set: old_set, j: j_old })?;
                        new_rates.insert(sub, j_new, r);
                    }
                }
                Ok(ModelSpec::Thls { n: m, rates: new_rates })
            }
            ModelSpec::FrailtyExp { c, mixing } => {
                let (k, d_hist, s_surv) = frailty_exposure(c, h);
                let posterior = mixing.posterior(k, d_hist + now * s_surv);
                let new_c: Vec<R> = survivors.iter().map(|v| c[v.pos()]).collect();
                Ok(ModelSpec::FrailtyExp { c: new_c, mixing: posterior })
            }
            ModelSpec::SetDependent { curves, .. } => {
                let mut new_curves = PairTable::new();
                for sub in SubsetMask::full(m).subsets() {
                    if sub.len() == m {
                        continue;
                    }
                    let old_set = sub.members().fold(failed, |acc, v| acc.insert(old_of(v)));
                    for j_new in sub.complement(m).members() {
                        let j_old = old_of(j_new);
                        let curve = curves
                            .get(old_set, j_old)
                            .ok_or(ModelError::MissingRate { set: old_set, j: j_old })?;
                        new_curves.insert(sub, j_new, curve.shifted(now));
                    }
                }
                Ok(ModelSpec::SetDependent { n: m, curves: new_curves })
            }
        }
    }
}

/// Sufficient statistics of a history under a frailty model: number of
/// failures, accumulated exposure `Σ c_i t_i` over the failed, and the total
/// weight `Σ c_j` of the survivors.
pub(crate) fn frailty_exposure<R: Real>(c: &[R], h: &FailureHistory<R>) -> (usize, R, R) {
    let mut d_hist = R::zero();
    for &(idx, t) in h.failures() {
        d_hist += c[idx.pos()] * t;
    }
    let failed = h.failed_set();
    let mut s_surv = R::zero();
    for (pos, ci) in c.iter().enumerate() {
        if !failed.contains(VariableIndex::from_pos(pos)) {
            s_surv += *ci;
        }
    }
    (h.num_failed(), d_hist, s_surv)
}

fn fmt_mask(bits: u32) -> String {
    let mut parts = Vec::new();
    let mut b = bits;
    while b != 0 {
        let pos = b.trailing_zeros();
        parts.push((pos + 1).to_string());
        b &= b - 1;
    }
    parts.join(",")
}

/// Convenience builder for THLS models in tests and fixtures: rates supplied
/// as `(failed indices, survivor, rate)` triples.
pub fn thls_from_triples<R: Real>(n: usize, triples: &[(&[usize], usize, R)]) -> ModelSpec<R> {
    let mut rates = PairTable::new();
    for (set, j, r) in triples {
        let mask = SubsetMask::from_indices(set.iter().copied(), n).expect("valid mask");
        let j = VariableIndex::new(*j, n).expect("valid index");
        rates.insert(mask, j, *r);
    }
    ModelSpec::Thls { n, rates }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vi(i: usize) -> VariableIndex {
        VariableIndex::new(i, MAX_VARIABLES).unwrap()
    }

    /// The 3-variable load-sharing table reused across the test suites.
    pub(crate) fn thls3() -> ModelSpec<f64> {
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
    fn validation_accepts_complete_thls() {
        assert!(thls3().validate().is_valid());
    }

    #[test]
    fn validation_reports_missing_rate_with_path() {
        let m = thls_from_triples(2, &[(&[], 1, 1.0), (&[], 2, 2.0), (&[1], 2, 1.0)]);
        let report = m.validate();
        assert!(!report.is_valid());
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].message.contains("missing rate (I={2}, j=1)"));
    }

    #[test]
    fn validation_rejects_shared_atoms() {
        let m = ModelSpec::Independent {
            laws: vec![
                LifetimeLaw::Dirac { c: 0.45 },
                LifetimeLaw::Dirac { c: 0.45 },
                LifetimeLaw::Uniform { a: 0.0, b: 1.0 },
            ],
        };
        let report = m.validate();
        assert!(report.violations.iter().any(|v| v.message.contains("tie probability positive")));
    }

    #[test]
    fn validation_rejects_non_diverging_set_dependent() {
        let mut curves = PairTable::new();
        curves.insert(SubsetMask::EMPTY, vi(1), HazardCurve::Constant { rate: 0.0 });
        let m = ModelSpec::SetDependent { n: 1, curves };
        let report = m.validate();
        assert!(report.violations.iter().any(|v| v.message.contains("diverge")));
    }

    #[test]
    fn mchr_thls_is_a_table_lookup() {
        let m = thls3();
        let h = FailureHistory::new(vec![(vi(1), 0.2)], 0.2, 3).unwrap();
        assert_relative_eq!(m.mchr(vi(2), 0.5, &h).unwrap(), 5.0);
        // constant in t and in the recorded failure times
        let h2 = FailureHistory::new(vec![(vi(1), 0.01)], 0.3, 3).unwrap();
        assert_relative_eq!(m.mchr(vi(2), 7.0, &h2).unwrap(), 5.0);
    }

    #[test]
    fn mchr_rejects_failed_variable_and_past_times() {
        let m = thls3();
        let h = FailureHistory::new(vec![(vi(1), 0.2)], 0.4, 3).unwrap();
        assert!(matches!(m.mchr(vi(1), 0.5, &h), Err(ModelError::AlreadyFailed(_))));
        assert!(matches!(m.mchr(vi(2), 0.3, &h), Err(ModelError::TimeBeforeNow)));
    }

    #[test]
    fn mchr_frailty_gamma_closed_form() {
        let m = ModelSpec::FrailtyExp {
            c: vec![1.0, 2.0],
            mixing: FrailtyMixing::Gamma { shape: 2.0, rate: 1.0 },
        };
        // λ_1(t|∅) = 1 * 2 / (1 + 3 t); at t = 1 this is 0.5
        assert_relative_eq!(m.mchr(vi(1), 1.0, &FailureHistory::empty()).unwrap(), 0.5);
        assert_relative_eq!(m.mchr(vi(1), 0.0, &FailureHistory::empty()).unwrap(), 2.0);
    }

    #[test]
    fn mchr_frailty_matches_numeric_posterior() {
        // oracle: E[Θ | h] by direct numeric integration over the Gamma density
        let c = [1.0, 2.0, 0.7];
        let (shape, rate) = (2.3, 1.4);
        let m = ModelSpec::FrailtyExp {
            c: c.to_vec(),
            mixing: FrailtyMixing::Gamma { shape, rate },
        };
        let h = FailureHistory::new(vec![(vi(2), 0.4)], 0.6, 3).unwrap();
        let t = 0.9;
        let d = c[1] * 0.4 + t * (c[0] + c[2]);
        let steps = 200_000;
        let theta_max = 40.0;
        let dth = theta_max / steps as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..steps {
            let th: f64 = (i as f64 + 0.5) * dth;
            let prior = th.powf(shape - 1.0) * (-rate * th).exp();
            let like = th * (-th * d).exp(); // k = 1
            num += th * prior * like * dth;
            den += prior * like * dth;
        }
        let expected = c[0] * num / den;
        assert_relative_eq!(m.mchr(vi(1), t, &h).unwrap(), expected, max_relative = 1e-6);
    }

    #[test]
    fn frailty_baseline_ratio_is_constant() {
        let m = ModelSpec::FrailtyExp {
            c: vec![1.0, 2.0, 0.5],
            mixing: FrailtyMixing::Discrete { values: vec![0.5, 2.0], probs: vec![0.3, 0.7] },
        };
        let csum = 3.5;
        for &t in &[0.0, 0.4, 1.7, 6.0] {
            let total: f64 = (1..=3).map(|j| m.baseline_rate(vi(j), t)).sum();
            assert_relative_eq!(m.baseline_rate(vi(1), t) / total, 1.0 / csum, max_relative = 1e-12);
        }
    }

    #[test]
    fn mchr_independent_is_marginal_hazard() {
        let m = ModelSpec::exponential(&[1.0, 2.0]);
        let h = FailureHistory::new(vec![(vi(1), 0.3)], 0.5, 2).unwrap();
        assert_relative_eq!(m.mchr(vi(2), 2.0, &h).unwrap(), 2.0);
    }

    #[test]
    fn residual_thls_relabels_rates() {
        let m = thls3();
        let h = FailureHistory::new(vec![(vi(3), 0.7)], 0.7, 3).unwrap();
        let res = m.residual(&h).unwrap();
        // survivors {1,2} renumbered to {1,2}: r̂_j(∅) = r_j({3}), r̂_j({k}) = r_j({3,k})
        assert_relative_eq!(res.mchr(vi(1), 0.0, &FailureHistory::empty()).unwrap(), 4.0);
        assert_relative_eq!(res.mchr(vi(2), 0.0, &FailureHistory::empty()).unwrap(), 1.0);
        let h2 = FailureHistory::new(vec![(vi(2), 0.1)], 0.1, 2).unwrap();
        assert_relative_eq!(res.mchr(vi(1), 0.2, &h2).unwrap(), 6.0); // r_1({2,3})
    }

    #[test]
    fn residual_frailty_is_the_conjugate_update() {
        let m = ModelSpec::FrailtyExp {
            c: vec![1.0, 2.0, 0.7],
            mixing: FrailtyMixing::Gamma { shape: 2.0, rate: 1.0 },
        };
        let h = FailureHistory::new(vec![(vi(1), 0.5)], 0.5, 3).unwrap();
        let res = m.residual(&h).unwrap();
        match &res {
            ModelSpec::FrailtyExp { c, mixing: FrailtyMixing::Gamma { shape, rate } } => {
                assert_eq!(c, &vec![2.0, 0.7]);
                assert_relative_eq!(*shape, 3.0);
                // rate + c_1 t_1 + now * (c_2 + c_3) = 1 + 0.5 + 0.5 * 2.7 = 0.5 * Σc + 1
                assert_relative_eq!(*rate, 1.0 + 0.5 * 3.7);
            }
            other => panic!("unexpected residual {other:?}"),
        }
    }

    #[test]
    fn residual_mchr_matches_shifted_original() {
        // λ̂_j(s | ∅) of the residual equals λ_j(now + s | I; t's) of the original
        let models: Vec<ModelSpec<f64>> = vec![
            thls3(),
            ModelSpec::Independent {
                laws: vec![
                    LifetimeLaw::exponential(1.2),
                    LifetimeLaw::Hazard(HazardCurve::Weibull { shape: 1.6, scale: 1.1 }),
                    LifetimeLaw::Uniform { a: 0.0, b: 4.0 },
                ],
            },
            ModelSpec::FrailtyExp {
                c: vec![1.0, 0.6, 1.7],
                mixing: FrailtyMixing::Discrete { values: vec![0.8, 2.5], probs: vec![0.4, 0.6] },
            },
            {
                let mut curves = PairTable::new();
                for sub_indices in [vec![], vec![1], vec![2], vec![3], vec![1, 2], vec![1, 3], vec![2, 3]] {
                    let mask = SubsetMask::from_indices(sub_indices.iter().copied(), 3).unwrap();
                    for j in mask.complement(3).members() {
                        let r = 0.4 + 0.3 * j.get() as f64 + 0.2 * mask.len() as f64;
                        curves.insert(
                            mask,
                            j,
                            HazardCurve::Piecewise {
                                knots: vec![0.8],
                                rates: vec![r],
                                tail_rate: r * 1.5,
                            },
                        );
                    }
                }
                ModelSpec::SetDependent { n: 3, curves }
            },
        ];
        let h = FailureHistory::new(vec![(vi(2), 0.3)], 0.5, 3).unwrap();
        for m in &models {
            let res = m.residual(&h).unwrap();
            // survivors {1, 3} -> new {1, 2}
            for (new_idx, old_idx) in [(1usize, 1usize), (2, 3)] {
                for &s in &[0.0, 0.2, 1.3] {
                    let lhs = res.mchr(vi(new_idx), s, &FailureHistory::empty()).unwrap();
                    let rhs = m.mchr(vi(old_idx), 0.5 + s, &h).unwrap();
                    assert_relative_eq!(lhs, rhs, max_relative = 1e-12, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn residual_independent_truncates_laws() {
        let m = ModelSpec::Independent {
            laws: vec![LifetimeLaw::Uniform { a: 0.0, b: 1.0 }, LifetimeLaw::exponential(2.0)],
        };
        let res = m.residual(&FailureHistory::at(0.4)).unwrap();
        match &res {
            ModelSpec::Independent { laws } => {
                assert_eq!(laws[0], LifetimeLaw::Uniform { a: 0.0, b: 0.6 });
                assert_eq!(laws[1], LifetimeLaw::exponential(2.0));
            }
            other => panic!("unexpected residual {other:?}"),
        }
        assert!(matches!(
            m.residual(&FailureHistory::at(1.5)),
            Err(ModelError::InconsistentHistory(_))
        ));
    }

    #[test]
    fn residual_of_fully_failed_model_errors() {
        let m = ModelSpec::exponential(&[1.0, 2.0]);
        let h = FailureHistory::new(vec![(vi(1), 0.1), (vi(2), 0.4)], 0.4, 2).unwrap();
        assert!(matches!(m.residual(&h), Err(ModelError::AllFailed)));
    }

    #[test]
    fn mchr_is_nonnegative_on_its_domain() {
        let models: Vec<ModelSpec<f64>> = vec![
            thls3(),
            ModelSpec::Independent {
                laws: vec![
                    LifetimeLaw::Uniform { a: 0.2, b: 1.8 },
                    LifetimeLaw::Hazard(HazardCurve::Weibull { shape: 0.8, scale: 1.0 }),
                    LifetimeLaw::exponential(2.0),
                ],
            },
            ModelSpec::FrailtyExp {
                c: vec![0.4, 1.0, 2.3],
                mixing: FrailtyMixing::Gamma { shape: 1.5, rate: 0.7 },
            },
        ];
        let histories = [
            FailureHistory::empty(),
            FailureHistory::at(0.4),
            FailureHistory::new(vec![(vi(2), 0.3)], 0.5, 3).unwrap(),
            FailureHistory::new(vec![(vi(2), 0.3), (vi(3), 0.9)], 1.0, 3).unwrap(),
        ];
        for m in &models {
            for h in &histories {
                for step in 0..40 {
                    let t = h.now() + step as f64 * 0.11;
                    for j in h.failed_set().complement(3).members() {
                        let rate = m.mchr(j, t, h).unwrap();
                        assert!(rate >= 0.0, "{m:?} {h:?} j={j} t={t}: {rate}");
                    }
                }
            }
        }
    }

    #[test]
    fn mchr_cumulative_matches_numeric_integral() {
        let models: Vec<ModelSpec<f64>> = vec![
            thls3(),
            ModelSpec::FrailtyExp {
                c: vec![1.0, 2.0, 0.7],
                mixing: FrailtyMixing::Gamma { shape: 2.0, rate: 1.5 },
            },
        ];
        let h = FailureHistory::new(vec![(vi(2), 0.4)], 0.6, 3).unwrap();
        let (a, b) = (0.6, 1.9);
        for m in &models {
            let exact = m.mchr_cumulative(vi(1), a, b, &h).unwrap();
            let steps = 100_000;
            let dt = (b - a) / steps as f64;
            let mut acc = 0.0;
            for i in 0..steps {
                acc += m.mchr(vi(1), a + (i as f64 + 0.5) * dt, &h).unwrap() * dt;
            }
            assert_relative_eq!(exact, acc, max_relative = 1e-8);
        }
    }
}
