//! Hazard-rate curves with closed-form cumulative integrals.
//!
//! Every representation supports exact evaluation of the rate `r(t)`, the
//! cumulative hazard `H(t) = ∫_0^t r`, inversion of `H` (used for sampling by
//! cumulative-hazard inversion), and an exact left-shift `r(offset + ·)`
//! (used when conditioning a model on an observed history). The `Lomax` and
//! `ScaledMixExp` variants are not part of the input file schema; they exist
//! so that reductions of frailty models stay exact instead of being sampled
//! onto a grid.

use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum HazardCurve<R: Real> {
    /// Constant rate: exponential waiting time.
    Constant { rate: R },
    /// Weibull hazard `(shape/scale) (t/scale)^(shape-1)`.
    Weibull { shape: R, scale: R },
    /// Piecewise-constant: `rates[i]` on `[knots[i-1], knots[i])` (with an
    /// implicit first knot at 0) and `tail_rate` beyond the last knot.
    /// `rates.len() == knots.len()`; empty knots means the tail everywhere.
    Piecewise { knots: Vec<R>, rates: Vec<R>, tail_rate: R },
    /// Pareto-II decay `shape / (scale + t)`; the baseline hazard of a
    /// gamma-frailty variable.
    Lomax { shape: R, scale: R },
    /// `factor` times the hazard of an exponential mixture; cumulative hazard
    /// `-factor * ln(Σ w_m e^{-r_m t})`. The baseline hazard of a
    /// discrete-frailty variable. Weights must sum to one.
    ScaledMixExp { factor: R, rates: Vec<R>, weights: Vec<R> },
    /// The base curve evaluated from `offset` onwards: `r(offset + t)`.
    Shifted { base: Box<HazardCurve<R>>, offset: R },
}

impl<R: Real> HazardCurve<R> {
    pub fn exponential(rate: R) -> Self {
        HazardCurve::Constant { rate }
    }

    /// The rate at time `t >= 0`.
    pub fn rate(&self, t: R) -> R {
        match self {
            HazardCurve::Constant { rate } => *rate,
            HazardCurve::Weibull { shape, scale } => {
                let x = t / *scale;
                if x == R::zero() {
                    // shape < 1 blows up at the origin, shape > 1 vanishes
                    if *shape < R::one() {
                        R::infinity()
                    } else if *shape > R::one() {
                        R::zero()
                    } else {
                        scale.recip()
                    }
                } else {
                    *shape / *scale * x.powf(*shape - R::one())
                }
            }
            HazardCurve::Piecewise { knots, rates, tail_rate } => {
                for (k, r) in knots.iter().zip(rates.iter()) {
                    if t < *k {
                        return *r;
                    }
                }
                *tail_rate
            }
            HazardCurve::Lomax { shape, scale } => *shape / (*scale + t),
            HazardCurve::ScaledMixExp { factor, rates, weights } => {
                // shift by the smallest rate so the ratio stays finite for large t
                let rmin = rates.iter().cloned().fold(R::infinity(), R::min);
                let mut num = R::zero();
                let mut den = R::zero();
                for (r, w) in rates.iter().zip(weights.iter()) {
                    let e = (-(*r - rmin) * t).exp();
                    num += *w * *r * e;
                    den += *w * e;
                }
                *factor * num / den
            }
            HazardCurve::Shifted { base, offset } => base.rate(*offset + t),
        }
    }

    /// Cumulative hazard `H(t) = ∫_0^t r(s) ds`.
    pub fn cumulative(&self, t: R) -> R {
        match self {
            HazardCurve::Constant { rate } => *rate * t,
            HazardCurve::Weibull { shape, scale } => (t / *scale).powf(*shape),
            HazardCurve::Piecewise { knots, rates, tail_rate } => {
                let mut acc = R::zero();
                let mut prev = R::zero();
                for (k, r) in knots.iter().zip(rates.iter()) {
                    if t <= *k {
                        return acc + *r * (t - prev);
                    }
                    acc += *r * (*k - prev);
                    prev = *k;
                }
                acc + *tail_rate * (t - prev)
            }
            HazardCurve::Lomax { shape, scale } => *shape * (R::one() + t / *scale).ln(),
            HazardCurve::ScaledMixExp { factor, rates, weights } => {
                let rmin = rates.iter().cloned().fold(R::infinity(), R::min);
                let mut den = R::zero();
                for (r, w) in rates.iter().zip(weights.iter()) {
                    den += *w * (-(*r - rmin) * t).exp();
                }
                *factor * (rmin * t - den.ln())
            }
            HazardCurve::Shifted { base, offset } => base.cumulative(*offset + t) - base.cumulative(*offset),
        }
    }

    /// `∫_a^b r(s) ds` for `0 <= a <= b`.
    pub fn cumulative_between(&self, a: R, b: R) -> R {
        self.cumulative(b) - self.cumulative(a)
    }

    /// Smallest `t` with `H(t) = target`; `target >= 0`. Exact closed form for
    /// all variants except `ScaledMixExp`, which uses a bracketed
    /// Newton/bisection solve to machine precision.
    pub fn invert_cumulative(&self, target: R) -> R {
        debug_assert!(target >= R::zero());
        match self {
            HazardCurve::Constant { rate } => target / *rate,
            HazardCurve::Weibull { shape, scale } => *scale * target.powf(shape.recip()),
            HazardCurve::Piecewise { knots, rates, tail_rate } => {
                let mut acc = R::zero();
                let mut prev = R::zero();
                for (k, r) in knots.iter().zip(rates.iter()) {
                    let seg = *r * (*k - prev);
                    if acc + seg >= target {
                        // a zero-rate segment cannot reach a strictly larger target
                        if *r == R::zero() {
                            prev = *k;
                            continue;
                        }
                        return prev + (target - acc) / *r;
                    }
                    acc += seg;
                    prev = *k;
                }
                prev + (target - acc) / *tail_rate
            }
            HazardCurve::Lomax { shape, scale } => *scale * ((target / *shape).exp() - R::one()),
            HazardCurve::ScaledMixExp { factor, rates, .. } => {
                let rmin = rates.iter().cloned().fold(R::infinity(), R::min);
                let rmax = rates.iter().cloned().fold(R::zero(), R::max);
                if target == R::zero() {
                    return R::zero();
                }
                let mut lo = target / (*factor * rmax);
                let mut hi = target / (*factor * rmin);
                // Newton with bisection fallback on the monotone H
                let mut t = (lo + hi) * R::of(0.5);
                for _ in 0..200 {
                    let h = self.cumulative(t);
                    if h > target {
                        hi = t;
                    } else {
                        lo = t;
                    }
                    let r = self.rate(t);
                    let step = (target - h) / r;
                    let mut next = t + step;
                    if !(next > lo && next < hi) {
                        next = (lo + hi) * R::of(0.5);
                    }
                    if (next - t).abs() <= t.abs() * R::of(1e-15) {
                        return next;
                    }
                    t = next;
                }
                t
            }
            HazardCurve::Shifted { base, offset } => {
                base.invert_cumulative(target + base.cumulative(*offset)) - *offset
            }
        }
    }

    /// The curve seen from time `offset` onwards, `t ↦ r(offset + t)`, kept
    /// exact by re-representation where the family is closed under shifts.
    pub fn shifted(&self, offset: R) -> HazardCurve<R> {
        if offset == R::zero() {
            return self.clone();
        }
        match self {
            HazardCurve::Constant { rate } => HazardCurve::Constant { rate: *rate },
            HazardCurve::Weibull { shape, scale } => {
                if *shape == R::one() {
                    HazardCurve::Constant { rate: scale.recip() }
                } else {
                    HazardCurve::Shifted { base: Box::new(self.clone()), offset }
                }
            }
            HazardCurve::Piecewise { knots, rates, tail_rate } => {
                let mut new_knots = Vec::new();
                let mut new_rates = Vec::new();
                for (k, r) in knots.iter().zip(rates.iter()) {
                    if *k > offset {
                        new_knots.push(*k - offset);
                        new_rates.push(*r);
                    }
                }
                HazardCurve::Piecewise { knots: new_knots, rates: new_rates, tail_rate: *tail_rate }
            }
            HazardCurve::Lomax { shape, scale } => HazardCurve::Lomax { shape: *shape, scale: *scale + offset },
            HazardCurve::ScaledMixExp { factor, rates, weights } => {
                let rmin = rates.iter().cloned().fold(R::infinity(), R::min);
                let mut w: Vec<R> = rates
                    .iter()
                    .zip(weights.iter())
                    .map(|(r, w)| *w * (-(*r - rmin) * offset).exp())
                    .collect();
                let total: R = w.iter().cloned().sum();
                for wi in &mut w {
                    *wi = *wi / total;
                }
                HazardCurve::ScaledMixExp { factor: *factor, rates: rates.clone(), weights: w }
            }
            HazardCurve::Shifted { base, offset: o } => base.shifted(*o + offset),
        }
    }

    /// `Some(rate)` when the curve is constant in time.
    pub fn constant_rate(&self) -> Option<R> {
        match self {
            HazardCurve::Constant { rate } => Some(*rate),
            HazardCurve::Weibull { shape, scale } if *shape == R::one() => Some(scale.recip()),
            HazardCurve::Piecewise { rates, tail_rate, .. } => {
                if rates.iter().all(|r| *r == *tail_rate) {
                    Some(*tail_rate)
                } else {
                    None
                }
            }
            HazardCurve::ScaledMixExp { factor, rates, .. } if rates.len() == 1 => Some(*factor * rates[0]),
            HazardCurve::Shifted { base, .. } => base.constant_rate(),
            _ => None,
        }
    }

    /// The rate the curve settles to for large `t`, used to check that the
    /// cumulative hazard diverges (minima stay almost surely finite).
    pub fn tail_rate(&self) -> R {
        match self {
            HazardCurve::Constant { rate } => *rate,
            HazardCurve::Weibull { .. } => R::infinity(), // H(t) -> inf always
            HazardCurve::Piecewise { tail_rate, .. } => *tail_rate,
            HazardCurve::Lomax { .. } => R::zero(), // H(t) -> inf logarithmically, still fine
            HazardCurve::ScaledMixExp { factor, rates, .. } => {
                let rmin = rates.iter().cloned().fold(R::infinity(), R::min);
                *factor * rmin
            }
            HazardCurve::Shifted { base, .. } => base.tail_rate(),
        }
    }

    /// Whether `H(t) -> ∞`, i.e. the implied lifetime is almost surely finite.
    pub fn diverges(&self) -> bool {
        match self {
            HazardCurve::Constant { rate } => *rate > R::zero(),
            HazardCurve::Weibull { .. } => true,
            HazardCurve::Piecewise { tail_rate, .. } => *tail_rate > R::zero(),
            HazardCurve::Lomax { shape, .. } => *shape > R::zero(),
            HazardCurve::ScaledMixExp { factor, rates, .. } => {
                *factor > R::zero() && rates.iter().all(|r| *r > R::zero())
            }
            HazardCurve::Shifted { base, .. } => base.diverges(),
        }
    }

    /// Interior knots where the rate may jump; quadrature splits on these.
    pub fn breakpoints(&self) -> Vec<R> {
        match self {
            HazardCurve::Piecewise { knots, .. } => knots.clone(),
            HazardCurve::Shifted { base, offset } => base
                .breakpoints()
                .into_iter()
                .filter_map(|k| if k > *offset { Some(k - *offset) } else { None })
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Structural validity: parameter positivity and knot ordering. Returns
    /// human-readable problems; an empty list means well-formed.
    pub fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        let pos = |x: R| x.is_finite() && x > R::zero();
        match self {
            HazardCurve::Constant { rate } => {
                if !(rate.is_finite() && *rate >= R::zero()) {
                    out.push("constant rate must be finite and >= 0".into());
                }
            }
            HazardCurve::Weibull { shape, scale } => {
                if !pos(*shape) || !pos(*scale) {
                    out.push("weibull shape and scale must be positive".into());
                }
            }
            HazardCurve::Piecewise { knots, rates, tail_rate } => {
                if knots.len() != rates.len() {
                    out.push("piecewise knots and rates must have equal length".into());
                }
                if !knots.windows(2).all(|w| w[0] < w[1]) {
                    out.push("piecewise knots must be strictly increasing".into());
                }
                if knots.first().is_some_and(|k| k.is_nan() || *k <= R::zero()) {
                    out.push("piecewise knots must be positive".into());
                }
                if rates.iter().any(|r| !(r.is_finite() && *r >= R::zero())) {
                    out.push("piecewise rates must be finite and >= 0".into());
                }
                if !(tail_rate.is_finite() && *tail_rate >= R::zero()) {
                    out.push("piecewise tail rate must be finite and >= 0".into());
                }
            }
            HazardCurve::Lomax { shape, scale } => {
                if !pos(*shape) || !pos(*scale) {
                    out.push("lomax shape and scale must be positive".into());
                }
            }
            HazardCurve::ScaledMixExp { factor, rates, weights } => {
                if rates.is_empty() || rates.len() != weights.len() {
                    out.push("mixture hazard needs matching, non-empty rates and weights".into());
                }
                if rates.iter().any(|r| !pos(*r)) || weights.iter().any(|w| !pos(*w)) {
                    out.push("mixture hazard rates and weights must be positive".into());
                }
                let s: R = weights.iter().cloned().sum();
                if (s - R::one()).abs() > R::of(1e-9) {
                    out.push("mixture hazard weights must sum to 1".into());
                }
                if !pos(*factor) {
                    out.push("mixture hazard factor must be positive".into());
                }
            }
            HazardCurve::Shifted { base, offset } => {
                if !(offset.is_finite() && *offset >= R::zero()) {
                    out.push("shift offset must be finite and >= 0".into());
                }
                out.extend(base.check());
            }
        }
        out
    }
}
