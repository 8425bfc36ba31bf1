//! Marginal lifetime laws for independent models.
//!
//! Besides hazard-curve laws these admit uniforms, point masses and finite
//! mixtures, which is what the degenerate and dice-style examples need. Laws
//! with atoms have no hazard representation; the kernels route them through
//! the survival/density path instead.

use crate::hazard::HazardCurve;
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum LifetimeLaw<R: Real> {
    /// Absolutely continuous law given by its hazard curve.
    Hazard(HazardCurve<R>),
    /// Uniform on `(a, b)`.
    Uniform { a: R, b: R },
    /// Point mass at `c`.
    Dirac { c: R },
    /// Finite mixture; weights positive, summing to one.
    Mixture { weights: Vec<R>, components: Vec<LifetimeLaw<R>> },
}

impl<R: Real> LifetimeLaw<R> {
    pub fn exponential(rate: R) -> Self {
        LifetimeLaw::Hazard(HazardCurve::Constant { rate })
    }

    /// `P(X > t)`, right-continuous.
    pub fn survival(&self, t: R) -> R {
        match self {
            LifetimeLaw::Hazard(c) => (-c.cumulative(t)).exp(),
            LifetimeLaw::Uniform { a, b } => {
                if t < *a {
                    R::one()
                } else if t < *b {
                    (*b - t) / (*b - *a)
                } else {
                    R::zero()
                }
            }
            LifetimeLaw::Dirac { c } => {
                if t < *c {
                    R::one()
                } else {
                    R::zero()
                }
            }
            LifetimeLaw::Mixture { weights, components } => weights
                .iter()
                .zip(components.iter())
                .map(|(w, comp)| *w * comp.survival(t))
                .sum(),
        }
    }

    /// Density of the absolutely continuous part at `t`.
    pub fn density(&self, t: R) -> R {
        match self {
            LifetimeLaw::Hazard(c) => {
                let h = c.cumulative(t);
                if h.is_infinite() {
                    R::zero()
                } else {
                    c.rate(t) * (-h).exp()
                }
            }
            LifetimeLaw::Uniform { a, b } => {
                if t >= *a && t < *b {
                    (*b - *a).recip()
                } else {
                    R::zero()
                }
            }
            LifetimeLaw::Dirac { .. } => R::zero(),
            LifetimeLaw::Mixture { weights, components } => weights
                .iter()
                .zip(components.iter())
                .map(|(w, comp)| *w * comp.density(t))
                .sum(),
        }
    }

    /// Hazard of the law at `t`: density over survival, `+∞` once the support
    /// is exhausted (and at an atom).
    pub fn hazard(&self, t: R) -> R {
        if let LifetimeLaw::Hazard(c) = self {
            return c.rate(t);
        }
        if let LifetimeLaw::Dirac { c } = self {
            return if t < *c { R::zero() } else { R::infinity() };
        }
        let s = self.survival(t);
        if s <= R::zero() {
            return R::infinity();
        }
        // atoms sitting inside the remaining support make the hazard measure
        // non-absolutely-continuous; report +inf at the atom itself
        if self.atoms().iter().any(|&(loc, _)| loc == t) {
            return R::infinity();
        }
        self.density(t) / s
    }

    /// Cumulative hazard `-ln P(X > t)`; may be `+∞`.
    pub fn cumulative_hazard(&self, t: R) -> R {
        match self {
            LifetimeLaw::Hazard(c) => c.cumulative(t),
            _ => {
                let s = self.survival(t);
                if s <= R::zero() {
                    R::infinity()
                } else {
                    -s.ln()
                }
            }
        }
    }

    /// Atoms `(location, mass)` of the law.
    pub fn atoms(&self) -> Vec<(R, R)> {
        match self {
            LifetimeLaw::Dirac { c } => vec![(*c, R::one())],
            LifetimeLaw::Mixture { weights, components } => {
                let mut out = Vec::new();
                for (w, comp) in weights.iter().zip(components.iter()) {
                    for (loc, mass) in comp.atoms() {
                        out.push((loc, *w * mass));
                    }
                }
                out
            }
            _ => Vec::new(),
        }
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms().is_empty()
    }

    /// Points where the density or survival may kink or jump; quadrature
    /// splits integrals on these.
    pub fn breakpoints(&self) -> Vec<R> {
        match self {
            LifetimeLaw::Hazard(c) => c.breakpoints(),
            LifetimeLaw::Uniform { a, b } => vec![*a, *b],
            LifetimeLaw::Dirac { c } => vec![*c],
            LifetimeLaw::Mixture { components, .. } => {
                components.iter().flat_map(|c| c.breakpoints()).collect()
            }
        }
    }

    /// Supremum of the support, `None` when unbounded.
    pub fn upper_support(&self) -> Option<R> {
        match self {
            LifetimeLaw::Hazard(_) => None,
            LifetimeLaw::Uniform { b, .. } => Some(*b),
            LifetimeLaw::Dirac { c } => Some(*c),
            LifetimeLaw::Mixture { components, .. } => {
                let mut sup = R::zero();
                for c in components {
                    sup = sup.max(c.upper_support()?);
                }
                Some(sup)
            }
        }
    }

    /// `Some(rate)` when the law is exponential.
    pub fn constant_hazard(&self) -> Option<R> {
        match self {
            LifetimeLaw::Hazard(c) => c.constant_rate(),
            _ => None,
        }
    }

    /// The law of `X - at` given `X > at`; `None` when `P(X > at) = 0`.
    pub fn truncate(&self, at: R) -> Option<LifetimeLaw<R>> {
        if at == R::zero() {
            return Some(self.clone());
        }
        match self {
            LifetimeLaw::Hazard(c) => Some(LifetimeLaw::Hazard(c.shifted(at))),
            LifetimeLaw::Uniform { a, b } => {
                if at >= *b {
                    None
                } else if at <= *a {
                    Some(LifetimeLaw::Uniform { a: *a - at, b: *b - at })
                } else {
                    Some(LifetimeLaw::Uniform { a: R::zero(), b: *b - at })
                }
            }
            LifetimeLaw::Dirac { c } => {
                if *c > at {
                    Some(LifetimeLaw::Dirac { c: *c - at })
                } else {
                    None
                }
            }
            LifetimeLaw::Mixture { weights, components } => {
                let total = self.survival(at);
                if total <= R::zero() {
                    return None;
                }
                let mut new_w = Vec::new();
                let mut new_c = Vec::new();
                for (w, comp) in weights.iter().zip(components.iter()) {
                    let mass = *w * comp.survival(at);
                    if mass > R::zero() {
                        if let Some(tc) = comp.truncate(at) {
                            new_w.push(mass / total);
                            new_c.push(tc);
                        }
                    }
                }
                match new_c.len() {
                    0 => None,
                    1 => Some(new_c.pop().unwrap()),
                    _ => Some(LifetimeLaw::Mixture { weights: new_w, components: new_c }),
                }
            }
        }
    }

    /// Structural validity problems, empty when well-formed. `nested` guards
    /// against mixtures of mixtures.
    pub fn check(&self, nested: bool) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            LifetimeLaw::Hazard(c) => out.extend(c.check()),
            LifetimeLaw::Uniform { a, b } => {
                if !(a.is_finite() && *a >= R::zero() && b.is_finite() && *b > *a) {
                    out.push("uniform requires 0 <= a < b".into());
                }
            }
            LifetimeLaw::Dirac { c } => {
                if !(c.is_finite() && *c >= R::zero()) {
                    out.push("dirac location must be finite and >= 0".into());
                }
            }
            LifetimeLaw::Mixture { weights, components } => {
                if nested {
                    out.push("mixtures cannot be nested".into());
                }
                if weights.is_empty() || weights.len() != components.len() {
                    out.push("mixture weights and components must match and be non-empty".into());
                }
                if weights.iter().any(|w| !(w.is_finite() && *w > R::zero())) {
                    out.push("mixture weights must be positive".into());
                }
                let s: R = weights.iter().cloned().sum();
                if (s - R::one()).abs() > R::of(1e-9) {
                    out.push("mixture weights must sum to 1".into());
                }
                let mut atom_count = 0;
                for comp in components {
                    out.extend(comp.check(true));
                    if comp.has_atoms() {
                        atom_count += 1;
                    }
                }
                if atom_count > 1 {
                    out.push("a mixture may carry at most one point-mass component".into());
                }
            }
        }
        out
    }
}
