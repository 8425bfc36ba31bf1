//! Exact and quadrature computation of minimum-related quantities.
//!
//! Everything here rests on two identities established for jointly
//! absolutely continuous lifetimes:
//!
//! * the minimum's cumulative hazard splits into baseline m.c.h.r. pieces,
//!   `H_(1)(t) = Σ_i ∫_0^t λ_i(s|∅) ds`, and
//! * `P(X_j = X_{1:n}, X_{1:n} ∈ B) = ∫_B λ_j(s|∅) e^{-H_(1)(s)} ds`.
//!
//! Subsets `A` get their own routes: a jump-chain DP and uniformization for
//! load-sharing models, products of marginals for independent models,
//! Laplace-transform closed forms for frailty models, and seeded Monte Carlo
//! for set-dependent models, with the method and an error bound reported
//! alongside every value.

pub mod dp;
mod uniformize;

use thiserror::Error;

use crate::history::FailureHistory;
use crate::law::LifetimeLaw;
use crate::model::{FrailtyMixing, ModelError, ModelSpec};
use crate::quad::{
    integrate_to_infinity, integrate_with_breakpoints, Quadrature, QuadratureConfig, QuadratureError,
};
use crate::real::Real;
use crate::simulate::{self, SimulateError};
use crate::subset::{SubsetMask, VariableIndex};

pub use dp::{thls_alpha_subset_exact, DpScalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error("point-mass laws have no hazard representation; use the survival path")]
    AtomsUnsupported,
    #[error("subset must not be empty")]
    EmptySubset,
    #[error("subset must contain at least two variables")]
    SubsetTooSmall,
    #[error("variable {0} is not a member of the subset")]
    NotInSubset(VariableIndex),
    #[error("indices must differ")]
    SameIndex,
    #[error("times must be non-negative")]
    NegativeTime,
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinates must be pairwise distinct")]
    TiedCoordinates,
    #[error("rate table is incomplete")]
    IncompleteTable,
    #[error("uniformization step count exceeded its cap; rates or horizon too large")]
    UniformizationOverflow,
    #[error("survival mass underflowed at this horizon; the conditional state distribution is undefined")]
    SurvivalUnderflow,
    #[error("interval must satisfy 0 <= lo < hi")]
    BadInterval,
    #[error("subset mask has members outside 1..={0}")]
    SubsetOutOfRange(usize),
    #[error("operation requires a {expected} model")]
    WrongKind { expected: &'static str },
}

/// How a reported value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ClosedForm,
    SubsetDp,
    Quadrature,
    Uniformization,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::SubsetDp => "subset-dp",
            Method::Quadrature => "quadrature",
            Method::Uniformization => "uniformization",
            Method::MonteCarlo => "monte-carlo",
        }
    }

    fn rank(self) -> u8 {
        match self {
            Method::ClosedForm => 0,
            Method::SubsetDp => 1,
            Method::Quadrature => 2,
            Method::Uniformization => 3,
            Method::MonteCarlo => 4,
        }
    }

    /// The coarser of two methods, for report-level tags.
    pub fn coarser(self, other: Method) -> Method {
        if self.rank() >= other.rank() {
            self
        } else {
            other
        }
    }
}

/// A computed probability or rate with its provenance and error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluated<R: Real> {
    pub value: R,
    pub method: Method,
    pub abs_error: R,
}

impl<R: Real> Evaluated<R> {
    fn closed(value: R) -> Self {
        Evaluated { value, method: Method::ClosedForm, abs_error: machine_error(value) }
    }
}

fn machine_error<R: Real>(value: R) -> R {
    R::epsilon() * R::of(32.0) * (R::one() + value.abs())
}

/// A time interval `(lo, hi)` with `hi` possibly infinite; the Borel sets
/// supported by the kernel are finite unions of these.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalB<R: Real> {
    lo: R,
    hi: R,
}

impl<R: Real> IntervalB<R> {
    pub fn new(lo: R, hi: R) -> Result<Self, KernelError> {
        if lo.is_finite() && lo >= R::zero() && hi > lo {
            Ok(Self { lo, hi })
        } else {
            Err(KernelError::BadInterval)
        }
    }

    /// `(0, ∞)`.
    pub fn positive_axis() -> Self {
        Self { lo: R::zero(), hi: R::infinity() }
    }

    pub fn lo(&self) -> R {
        self.lo
    }

    pub fn hi(&self) -> R {
        self.hi
    }
}

/// Tolerances and fallbacks for the kernel operations.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig<R: Real> {
    pub quad: QuadratureConfig<R>,
    /// Poisson-tail truncation for the THLS subset chain.
    pub uniformization_tol: R,
    /// Sample count for kinds whose subset quantities have no exact route.
    pub mc_samples: u64,
    /// Seed for those fallback estimates; the per-subset stream is derived
    /// from it, identically for every `j`, so hit frequencies stay a
    /// partition of unity.
    pub mc_seed: u64,
}

impl<R: Real> Default for KernelConfig<R> {
    fn default() -> Self {
        Self {
            quad: QuadratureConfig::default(),
            uniformization_tol: R::of(1e-10),
            mc_samples: 200_000,
            mc_seed: 0x6d63_6872,
        }
    }
}

impl<R: Real> KernelConfig<R> {
    /// Margin guarding strict comparisons against numerical ties.
    pub fn tie_margin(&self) -> R {
        R::of(10.0) * self.quad.abs_tol
    }

    /// Configuration for re-verifying scanner hits: tolerances tightened
    /// tenfold, Monte Carlo samples quadrupled on a fresh stream.
    pub fn tightened(&self) -> Self {
        Self {
            quad: self.quad.tightened(R::of(0.1)),
            uniformization_tol: self.uniformization_tol * R::of(0.1),
            mc_samples: self.mc_samples.saturating_mul(4),
            mc_seed: self.mc_seed.wrapping_add(0x9e37_79b9),
        }
    }

    fn subset_mc_seed(&self, a: SubsetMask) -> u64 {
        self.mc_seed ^ (a.bits() as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
    }
}

/// Survival curve of `X_{1:A}` plus its hit-probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MinReport<R: Real> {
    pub subset: SubsetMask,
    /// `(j, α_j^[A])` in increasing index order; sums to one within
    /// `abs_error_bound`.
    pub alphas: Vec<(VariableIndex, R)>,
    /// `(t, P(X_{1:A} > t))` on the requested grid.
    pub survival: Vec<(R, R)>,
    pub method: Method,
    pub abs_error_bound: R,
}

/// `H_(1)(t) = Σ_i ∫_0^t λ_i(s|∅) ds`, closed form for every kind with a
/// hazard representation. Models with point masses are rejected; their
/// minimum is handled through the survival path.
pub fn cumulative_hazard_min<R: Real>(model: &ModelSpec<R>, t: R) -> Result<R, KernelError> {
    if t < R::zero() {
        return Err(KernelError::NegativeTime);
    }
    if model.has_atoms() {
        return Err(KernelError::AtomsUnsupported);
    }
    let mut total = R::zero();
    for pos in 0..model.n() {
        total += model.baseline_cumulative(VariableIndex::from_pos(pos), t);
    }
    Ok(total)
}

/// `P(X_{1:A} > t)`.
///
/// Full sets use `exp(-H_(1))` (survival products under independence);
/// proper subsets use the closed frailty/independence forms, uniformization
/// for load-sharing models, and seeded Monte Carlo for set-dependent models.
pub fn survival_min<R: Real>(
    model: &ModelSpec<R>,
    a: SubsetMask,
    t: R,
    cfg: &KernelConfig<R>,
) -> Result<Evaluated<R>, KernelError> {
    if a.is_empty() {
        return Err(KernelError::EmptySubset);
    }
    check_subset(model, a)?;
    if t < R::zero() {
        return Err(KernelError::NegativeTime);
    }
    if t == R::zero() {
        return Ok(Evaluated::closed(R::one()));
    }
    let n = model.n();
    match model {
        ModelSpec::Independent { laws } => {
            let mut s = R::one();
            for j in a.members() {
                s = s * laws[j.pos()].survival(t);
            }
            Ok(Evaluated::closed(s))
        }
        ModelSpec::FrailtyExp { c, mixing } => {
            let weight: R = a.members().map(|j| c[j.pos()]).sum();
            Ok(Evaluated::closed(mixing.laplace(t * weight)))
        }
        ModelSpec::Thls { rates, .. } => {
            if a == SubsetMask::full(n) {
                let total: R = a.members().map(|j| *rates.get(SubsetMask::EMPTY, j).expect("validated")).sum();
                Ok(Evaluated::closed((-total * t).exp()))
            } else {
                let occ = uniformize::subset_occupancy(n, rates, a, t, cfg.uniformization_tol)?;
                Ok(Evaluated {
                    value: occ.iter().cloned().sum(),
                    method: Method::Uniformization,
                    abs_error: cfg.uniformization_tol,
                })
            }
        }
        ModelSpec::SetDependent { .. } => {
            if a == SubsetMask::full(n) {
                Ok(Evaluated::closed((-cumulative_hazard_min(model, t)?).exp()))
            } else {
                let ests = simulate::estimate_survival(model, a, &[t], cfg.mc_samples, cfg.subset_mc_seed(a))?;
                Ok(Evaluated {
                    value: ests[0].value,
                    method: Method::MonteCarlo,
                    abs_error: ests[0].half_width_95,
                })
            }
        }
    }
}

/// `α_j = P(X_j = X_{1:n})`.
pub fn alpha_full<R: Real>(
    model: &ModelSpec<R>,
    j: VariableIndex,
    cfg: &KernelConfig<R>,
) -> Result<Evaluated<R>, KernelError> {
    let n = model.n();
    if j.get() > n {
        return Err(ModelError::IndexOutOfRange(j.get(), n).into());
    }
    if n == 1 {
        return Ok(Evaluated::closed(R::one()));
    }
    alpha_subset(model, SubsetMask::full(n), j, cfg)
}

/// `α_j^[A] = P(X_{1:A} = X_j)` with a method tag.
pub fn alpha_subset<R: Real>(
    model: &ModelSpec<R>,
    a: SubsetMask,
    j: VariableIndex,
    cfg: &KernelConfig<R>,
) -> Result<Evaluated<R>, KernelError> {
    check_subset(model, a)?;
    if a.len() < 2 {
        return Err(KernelError::SubsetTooSmall);
    }
    if !a.contains(j) {
        return Err(KernelError::NotInSubset(j));
    }
    let n = model.n();
    match model {
        ModelSpec::Independent { laws } => {
            let q = independent_min_joint(laws, a, j, R::zero(), None, &cfg.quad)?;
            Ok(Evaluated { value: q.value, method: Method::Quadrature, abs_error: q.abs_error })
        }
        ModelSpec::Thls { rates, .. } => {
            if a == SubsetMask::full(n) {
                // single race: α_j = r_j(∅) / Σ r(∅)
                let total: R = a.members().map(|m| *rates.get(SubsetMask::EMPTY, m).expect("validated")).sum();
                let rj = *rates.get(SubsetMask::EMPTY, j).expect("validated");
                Ok(Evaluated::closed(rj / total))
            } else {
                let value = dp::thls_alpha_subset(n, rates, a, j);
                Ok(Evaluated { value, method: Method::SubsetDp, abs_error: machine_error(value) })
            }
        }
        ModelSpec::FrailtyExp { c, .. } => {
            // given Θ the race among A is exponential with weights c_k Θ, so
            // the ratio is Θ-free and exact
            let weight: R = a.members().map(|m| c[m.pos()]).sum();
            Ok(Evaluated::closed(c[j.pos()] / weight))
        }
        ModelSpec::SetDependent { .. } => {
            if a == SubsetMask::full(n) {
                let q = baseline_min_joint(model, j, R::zero(), None, &cfg.quad)?;
                Ok(Evaluated { value: q.value, method: Method::Quadrature, abs_error: q.abs_error })
            } else {
                let est = simulate::estimate_alpha_subset(model, a, j, cfg.mc_samples, cfg.subset_mc_seed(a))?;
                Ok(Evaluated { value: est.value, method: Method::MonteCarlo, abs_error: est.half_width_95 })
            }
        }
    }
}

/// `P(X_j = X_{1:n}, X_{1:n} ∈ B)` for an interval `B`.
pub fn min_joint<R: Real>(
    model: &ModelSpec<R>,
    j: VariableIndex,
    b: &IntervalB<R>,
    cfg: &KernelConfig<R>,
) -> Result<Evaluated<R>, KernelError> {
    let n = model.n();
    if j.get() > n {
        return Err(ModelError::IndexOutOfRange(j.get(), n).into());
    }
    let hi = if b.hi.is_finite() { Some(b.hi) } else { None };
    match model {
        ModelSpec::Independent { laws } => {
            let q = independent_min_joint(laws, SubsetMask::full(n), j, b.lo, hi, &cfg.quad)?;
            Ok(Evaluated { value: q.value, method: Method::Quadrature, abs_error: q.abs_error })
        }
        ModelSpec::Thls { rates, .. } => {
            let total: R = SubsetMask::full(n)
                .members()
                .map(|m| *rates.get(SubsetMask::EMPTY, m).expect("validated"))
                .sum();
            let rj = *rates.get(SubsetMask::EMPTY, j).expect("validated");
            let upper = match hi {
                Some(h) => (-total * h).exp(),
                None => R::zero(),
            };
            Ok(Evaluated::closed(rj / total * ((-total * b.lo).exp() - upper)))
        }
        ModelSpec::FrailtyExp { c, mixing } => {
            let s_all: R = c.iter().cloned().sum();
            let upper = match hi {
                Some(h) => mixing.laplace(s_all * h),
                None => R::zero(),
            };
            Ok(Evaluated::closed(c[j.pos()] / s_all * (mixing.laplace(s_all * b.lo) - upper)))
        }
        ModelSpec::SetDependent { .. } => {
            let q = baseline_min_joint(model, j, b.lo, hi, &cfg.quad)?;
            Ok(Evaluated { value: q.value, method: Method::Quadrature, abs_error: q.abs_error })
        }
    }
}

/// Joint density of `(X_1, .., X_n)` at pairwise-distinct coordinates: the
/// stage-product of m.c.h.r. factors
/// `λ_{π(h+1)}(x_{π(h+1)} | ..) exp(-Σ_l ∫ λ_l)` along the sorted order.
pub fn joint_density<R: Real>(model: &ModelSpec<R>, x: &[R]) -> Result<R, KernelError> {
    let n = model.n();
    if x.len() != n {
        return Err(KernelError::DimensionMismatch { expected: n, got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite() || *v < R::zero()) {
        return Err(KernelError::NegativeTime);
    }
    if model.has_atoms() {
        return Err(KernelError::AtomsUnsupported);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| x[p].partial_cmp(&x[q]).expect("finite"));
    if order.windows(2).any(|w| x[w[0]] == x[w[1]]) {
        return Err(KernelError::TiedCoordinates);
    }
    let mut history: FailureHistory<R> = FailureHistory::empty();
    let mut density = R::one();
    let mut prev = R::zero();
    for &pos in &order {
        let j = VariableIndex::from_pos(pos);
        let t = x[pos];
        let mut exponent = R::zero();
        for l in history.failed_set().complement(n).members() {
            exponent += model.mchr_cumulative(l, prev, t, &history)?;
        }
        density = density * model.mchr(j, t, &history)? * (-exponent).exp();
        history = history.push(j, t, n).expect("sorted, distinct coordinates");
        prev = t;
    }
    Ok(density)
}

/// One offending grid point of a dominance check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridViolation<R: Real> {
    pub t: R,
    pub rate_i: R,
    pub rate_j: R,
}

/// One offending interval of a dominance check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalViolation<R: Real> {
    pub interval: IntervalB<R>,
    pub prob_i: R,
    pub prob_j: R,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport<R: Real> {
    pub dominates: bool,
    pub grid_violations: Vec<GridViolation<R>>,
    pub interval_violations: Vec<IntervalViolation<R>>,
}

/// Checks the two equivalent faces of baseline dominance: `λ_i(t|∅) <=
/// λ_j(t|∅)` on the grid, and `P(X_i = min, min ∈ B) <= P(X_j = min, min ∈
/// B)` on each interval. Any violated point or interval is reported.
pub fn dominance_check<R: Real>(
    model: &ModelSpec<R>,
    i: VariableIndex,
    j: VariableIndex,
    grid: &[R],
    intervals: &[IntervalB<R>],
    cfg: &KernelConfig<R>,
) -> Result<DominanceReport<R>, KernelError> {
    let n = model.n();
    if i.get() > n || j.get() > n {
        return Err(ModelError::IndexOutOfRange(i.get().max(j.get()), n).into());
    }
    if i == j {
        return Err(KernelError::SameIndex);
    }
    let mut grid_violations = Vec::new();
    for &t in grid {
        if t < R::zero() {
            return Err(KernelError::NegativeTime);
        }
        let (ri, rj) = (model.baseline_rate(i, t), model.baseline_rate(j, t));
        let margin = cfg.tie_margin() * (R::one() + ri.abs().max(rj.abs()));
        if ri > rj + margin {
            grid_violations.push(GridViolation { t, rate_i: ri, rate_j: rj });
        }
    }
    let mut interval_violations = Vec::new();
    for b in intervals {
        let pi = min_joint(model, i, b, cfg)?;
        let pj = min_joint(model, j, b, cfg)?;
        let margin = pi.abs_error + pj.abs_error + cfg.tie_margin();
        if pi.value > pj.value + margin {
            interval_violations.push(IntervalViolation { interval: *b, prob_i: pi.value, prob_j: pj.value });
        }
    }
    Ok(DominanceReport {
        dominates: grid_violations.is_empty() && interval_violations.is_empty(),
        grid_violations,
        interval_violations,
    })
}

/// The independent vector `Z` with hazards `λ_j(·|∅)`: every event about
/// `(X_{1:n}, argmin)` has the same probability under `Z` as under the
/// model. Exact for every kind; frailty baselines land in the `Lomax` /
/// `ScaledMixExp` hazard families.
pub fn independent_reduction<R: Real>(model: &ModelSpec<R>) -> Result<ModelSpec<R>, KernelError> {
    use crate::hazard::HazardCurve;
    let n = model.n();
    let laws: Vec<LifetimeLaw<R>> = match model {
        ModelSpec::Independent { laws } => laws.clone(),
        ModelSpec::Thls { rates, .. } => (0..n)
            .map(|pos| {
                let j = VariableIndex::from_pos(pos);
                rates
                    .get(SubsetMask::EMPTY, j)
                    .map(|r| LifetimeLaw::exponential(*r))
                    .ok_or(KernelError::IncompleteTable)
            })
            .collect::<Result<_, _>>()?,
        ModelSpec::FrailtyExp { c, mixing } => {
            let s_all: R = c.iter().cloned().sum();
            c.iter()
                .map(|cj| match mixing {
                    FrailtyMixing::Gamma { shape, rate } => LifetimeLaw::Hazard(HazardCurve::Lomax {
                        shape: *cj * *shape / s_all,
                        scale: *rate / s_all,
                    }),
                    FrailtyMixing::Discrete { values, probs } => {
                        LifetimeLaw::Hazard(HazardCurve::ScaledMixExp {
                            factor: *cj / s_all,
                            rates: values.iter().map(|v| *v * s_all).collect(),
                            weights: probs.clone(),
                        })
                    }
                })
                .collect()
        }
        ModelSpec::SetDependent { curves, .. } => (0..n)
            .map(|pos| {
                let j = VariableIndex::from_pos(pos);
                curves
                    .get(SubsetMask::EMPTY, j)
                    .map(|c| LifetimeLaw::Hazard(c.clone()))
                    .ok_or(KernelError::IncompleteTable)
            })
            .collect::<Result<_, _>>()?,
    };
    Ok(ModelSpec::Independent { laws })
}

/// The marginal baseline m.c.h.r. `λ_i^[A](t|∅)` of a THLS model: the mean of
/// `r_i(I)` over the failed-set distribution conditioned on `X_{1:A} > t`.
pub fn marginal_baseline_mchr<R: Real>(
    model: &ModelSpec<R>,
    a: SubsetMask,
    i: VariableIndex,
    t: R,
    cfg: &KernelConfig<R>,
) -> Result<R, KernelError> {
    let (n, rates) = match model {
        ModelSpec::Thls { n, rates } => (*n, rates),
        _ => return Err(KernelError::WrongKind { expected: "thls" }),
    };
    check_subset(model, a)?;
    if !a.contains(i) {
        return Err(KernelError::NotInSubset(i));
    }
    if t < R::zero() {
        return Err(KernelError::NegativeTime);
    }
    let comp = a.complement(n);
    let occ = uniformize::subset_occupancy(n, rates, a, t, cfg.uniformization_tol)?;
    let total: R = occ.iter().cloned().sum();
    if total.is_nan() || total <= R::zero() {
        return Err(KernelError::SurvivalUnderflow);
    }
    let mut rate = R::zero();
    for state in comp.subsets() {
        let w = occ[state.rank_within(comp)];
        if w > R::zero() {
            rate += w / total * *rates.get(state, i).ok_or(KernelError::IncompleteTable)?;
        }
    }
    Ok(rate)
}

/// Assembles the hit-probability vector and survival curve of `X_{1:A}`.
pub fn min_report<R: Real>(
    model: &ModelSpec<R>,
    a: SubsetMask,
    grid: &[R],
    cfg: &KernelConfig<R>,
) -> Result<MinReport<R>, KernelError> {
    if a.is_empty() {
        return Err(KernelError::EmptySubset);
    }
    check_subset(model, a)?;
    let mut alphas = Vec::with_capacity(a.len());
    let mut method = Method::ClosedForm;
    let mut alpha_err = R::zero();
    if a.len() == 1 {
        let j = a.members().next().expect("non-empty");
        alphas.push((j, R::one()));
    } else {
        for j in a.members() {
            let e = alpha_subset(model, a, j, cfg)?;
            method = method.coarser(e.method);
            alpha_err += e.abs_error;
            alphas.push((j, e.value));
        }
    }
    let mut survival = Vec::with_capacity(grid.len());
    let mut surv_err = R::zero();
    for &t in grid {
        let e = survival_min(model, a, t, cfg)?;
        method = method.coarser(e.method);
        surv_err = surv_err.max(e.abs_error);
        survival.push((t, e.value));
    }
    Ok(MinReport { subset: a, alphas, survival, method, abs_error_bound: alpha_err.max(surv_err) })
}

/// Smallest time `t` with `P(X_{1:A} > t) <= target`, located by doubling
/// and bisection; Monte Carlo kinds use an empirical quantile instead.
pub fn survival_horizon<R: Real>(
    model: &ModelSpec<R>,
    a: SubsetMask,
    target: R,
    cfg: &KernelConfig<R>,
) -> Result<R, KernelError> {
    check_subset(model, a)?;
    if a.is_empty() {
        return Err(KernelError::EmptySubset);
    }
    let exact = !(matches!(model, ModelSpec::SetDependent { .. }) && a != SubsetMask::full(model.n()));
    if !exact {
        let mut times: Vec<R> = (0..4096u64)
            .map(|i| {
                let mut rng = simulate::stream_rng(cfg.subset_mc_seed(a), i);
                simulate::first_subset_failure(model, a, &mut rng).0
            })
            .collect();
        times.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        let k = ((R::of(1.0) - target).as_f64() * (times.len() - 1) as f64).round() as usize;
        return Ok(times[k.min(times.len() - 1)] * R::of(1.2));
    }
    let mut hi = R::one();
    let mut guard = 0;
    while survival_min(model, a, hi, cfg)?.value > target {
        hi = hi * R::of(2.0);
        guard += 1;
        if guard > 80 {
            return Ok(hi);
        }
    }
    let mut lo = R::zero();
    for _ in 0..70 {
        let mid = (lo + hi) * R::of(0.5);
        if survival_min(model, a, mid, cfg)?.value > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

fn check_subset<R: Real>(model: &ModelSpec<R>, a: SubsetMask) -> Result<(), KernelError> {
    SubsetMask::new(a.bits(), model.n())
        .map(|_| ())
        .map_err(|_| KernelError::SubsetOutOfRange(model.n()))
}

/// `∫ f_j(t) Π_{k ∈ A, k≠j} S_k(t) dt` over `(lo, hi)` plus the atom terms of
/// law `j` inside the interval: the independent-model route for subset hit
/// probabilities, valid in the presence of point masses.
fn independent_min_joint<R: Real>(
    laws: &[LifetimeLaw<R>],
    a: SubsetMask,
    j: VariableIndex,
    lo: R,
    hi: Option<R>,
    quad_cfg: &QuadratureConfig<R>,
) -> Result<Quadrature<R>, KernelError> {
    let members: Vec<usize> = a.members().map(|v| v.pos()).collect();
    let mut value = R::zero();
    for (loc, mass) in laws[j.pos()].atoms() {
        if loc > lo && hi.is_none_or(|h| loc < h) {
            let mut p = mass;
            for &k in &members {
                if k != j.pos() {
                    p = p * laws[k].survival(loc);
                }
            }
            value += p;
        }
    }
    // the continuous part dies at the first exhausted support in A
    let mut cut: Option<R> = hi;
    for &k in &members {
        if let Some(u) = laws[k].upper_support() {
            cut = Some(cut.map_or(u, |c| c.min(u)));
        }
    }
    let integrand = |t: R| {
        let mut p = laws[j.pos()].density(t);
        if p == R::zero() {
            return R::zero();
        }
        for &k in &members {
            if k != j.pos() {
                p = p * laws[k].survival(t);
            }
        }
        p
    };
    let mut breaks: Vec<R> = Vec::new();
    for &k in &members {
        breaks.extend(laws[k].breakpoints());
    }
    let envelope = |t: R| -> R {
        let mut h = R::zero();
        for &k in &members {
            let s = laws[k].survival(t);
            if s <= R::zero() {
                return R::infinity();
            }
            h += -s.ln();
        }
        h
    };
    let q = integrate_tailed(&integrand, lo, cut, &breaks, envelope, quad_cfg)?;
    Ok(Quadrature { value: value + q.value, abs_error: q.abs_error })
}

/// Quadrature of `λ_j(t|∅) e^{-H_(1)(t)}` over `(lo, hi)` for kinds with a
/// baseline hazard representation.
fn baseline_min_joint<R: Real>(
    model: &ModelSpec<R>,
    j: VariableIndex,
    lo: R,
    hi: Option<R>,
    quad_cfg: &QuadratureConfig<R>,
) -> Result<Quadrature<R>, KernelError> {
    let n = model.n();
    let integrand = |t: R| {
        let mut h = R::zero();
        for pos in 0..n {
            h += model.baseline_cumulative(VariableIndex::from_pos(pos), t);
        }
        if h.is_infinite() {
            return R::zero();
        }
        model.baseline_rate(j, t) * (-h).exp()
    };
    let mut breaks: Vec<R> = Vec::new();
    if let ModelSpec::SetDependent { curves, .. } = model {
        for pos in 0..n {
            if let Some(c) = curves.get(SubsetMask::EMPTY, VariableIndex::from_pos(pos)) {
                breaks.extend(c.breakpoints());
            }
        }
    }
    let envelope = |t: R| -> R {
        let mut h = R::zero();
        for pos in 0..n {
            h += model.baseline_cumulative(VariableIndex::from_pos(pos), t);
        }
        h
    };
    integrate_tailed(&integrand, lo, hi, &breaks, envelope, quad_cfg).map_err(Into::into)
}

/// Integral over `(lo, hi)` or `(lo, ∞)`: finite parts split on breakpoints,
/// the improper tail mapped through `u ↦ u/(1-u)`, skipped entirely (with the
/// monotone survival envelope `e^{-H}` charged to the error bound) once the
/// envelope is negligible.
fn integrate_tailed<R: Real, F: Fn(R) -> R, E: Fn(R) -> R>(
    f: &F,
    lo: R,
    hi: Option<R>,
    breaks: &[R],
    envelope_exponent: E,
    cfg: &QuadratureConfig<R>,
) -> Result<Quadrature<R>, QuadratureError> {
    match hi {
        Some(b) => {
            if b <= lo {
                return Ok(Quadrature { value: R::zero(), abs_error: R::zero() });
            }
            integrate_with_breakpoints(f, lo, b, breaks, cfg)
        }
        None => {
            let mut t0 = breaks.iter().fold(lo, |acc, &x| acc.max(x));
            if t0 <= lo {
                t0 = lo + R::one();
            }
            let mut out = integrate_with_breakpoints(f, lo, t0, breaks, cfg)?;
            let h = envelope_exponent(t0);
            if h > R::of(37.0) {
                out.abs_error += (-h).exp();
            } else {
                let tail = integrate_to_infinity(f, t0, cfg)?;
                out.value += tail.value;
                out.abs_error += tail.abs_error;
            }
            Ok(out)
        }
    }
}
