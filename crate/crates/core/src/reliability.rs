//! Coherent-system utilities over minimal path sets.
//!
//! A coherent system's lifetime is `T = max_k min_{h ∈ P_k} X_h` over its
//! minimal path sets; each path set is a series system, so the hit
//! probability `α_h^[P_k]` is the Barlow–Proschan importance of component
//! `h` within path `k`. Two paths can rank a shared pair of components in
//! opposite orders; the scanner finds and re-verifies every such reversal.
//! The distribution of `T` itself is not computed analytically; Monte Carlo
//! post-processing of sampled sequences covers it when needed.

use thiserror::Error;

use crate::kernel::{alpha_full, alpha_subset, Evaluated, KernelConfig, KernelError, Method};
use crate::model::ModelSpec;
use crate::real::Real;
use crate::subset::{SubsetMask, VariableIndex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReliabilityError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("system must declare at least one path set")]
    NoPaths,
    #[error("path {0} is empty")]
    EmptyPath(usize),
    #[error("path {path} mentions variables outside 1..={n}")]
    PathOutOfRange { path: usize, n: usize },
    #[error("system has {system} components but the model has {model}")]
    ComponentMismatch { system: usize, model: usize },
}

/// Minimal-path-set representation of a coherent system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSetSystem {
    pub n: usize,
    pub paths: Vec<SubsetMask>,
}

impl PathSetSystem {
    /// Validates structure. Hard errors are empty/out-of-range paths; a path
    /// containing another breaks minimality but the math stays well-defined,
    /// so redundancy is returned as warnings.
    pub fn new(n: usize, paths: Vec<SubsetMask>) -> Result<(Self, Vec<String>), ReliabilityError> {
        if paths.is_empty() {
            return Err(ReliabilityError::NoPaths);
        }
        let full = SubsetMask::full(n);
        for (k, p) in paths.iter().enumerate() {
            if p.is_empty() {
                return Err(ReliabilityError::EmptyPath(k + 1));
            }
            if !p.is_subset_of(full) {
                return Err(ReliabilityError::PathOutOfRange { path: k + 1, n });
            }
        }
        let mut warnings = Vec::new();
        for (k1, p1) in paths.iter().enumerate() {
            for (k2, p2) in paths.iter().enumerate() {
                if k1 != k2 && p1.is_subset_of(*p2) && (p1 != p2 || k1 < k2) {
                    warnings.push(format!(
                        "path {} contains path {}: the set is not minimal",
                        k2 + 1,
                        k1 + 1
                    ));
                }
            }
        }
        Ok((Self { n, paths }, warnings))
    }
}

/// Per-path importance vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PathImportance<R: Real> {
    pub path: SubsetMask,
    /// `(h, α_h^[P_k])` for `h ∈ P_k`, ascending; sums to one.
    pub alphas: Vec<(VariableIndex, R)>,
    pub method: Method,
}

/// A shared pair ranked oppositely by two paths (0-based path positions).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossPathReversal {
    pub i: VariableIndex,
    pub j: VariableIndex,
    pub path_a: usize,
    pub path_b: usize,
}

/// Series-system importance: the first-failure probabilities `α_j`.
pub fn series_importance<R: Real>(
    model: &ModelSpec<R>,
    cfg: &KernelConfig<R>,
) -> Result<Vec<Evaluated<R>>, ReliabilityError> {
    (0..model.n())
        .map(|pos| alpha_full(model, VariableIndex::from_pos(pos), cfg).map_err(Into::into))
        .collect()
}

/// `α_h^[P_k]` for every path; singleton paths trivially give 1.
pub fn path_importance<R: Real>(
    model: &ModelSpec<R>,
    system: &PathSetSystem,
    cfg: &KernelConfig<R>,
) -> Result<Vec<PathImportance<R>>, ReliabilityError> {
    if system.n != model.n() {
        return Err(ReliabilityError::ComponentMismatch { system: system.n, model: model.n() });
    }
    system
        .paths
        .iter()
        .map(|path| {
            let mut alphas = Vec::with_capacity(path.len());
            let mut method = Method::ClosedForm;
            if path.len() == 1 {
                alphas.push((path.members().next().expect("non-empty"), R::one()));
            } else {
                for h in path.members() {
                    let e = alpha_subset(model, *path, h, cfg)?;
                    method = method.coarser(e.method);
                    alphas.push((h, e.value));
                }
            }
            Ok(PathImportance { path: *path, alphas, method })
        })
        .collect()
}

/// Monte Carlo survival of the system lifetime `T = max_k min_{h∈P_k} X_h`
/// on a time grid, by max-of-min post-processing of sampled sequences. The
/// analytic kernels only cover per-path minima; this is the simulation route
/// for the full system.
pub fn estimate_system_survival<R: Real>(
    model: &ModelSpec<R>,
    system: &PathSetSystem,
    grid: &[R],
    n_samples: u64,
    seed: u64,
) -> Result<Vec<crate::simulate::Estimate<R>>, ReliabilityError> {
    if system.n != model.n() {
        return Err(ReliabilityError::ComponentMismatch { system: system.n, model: model.n() });
    }
    let mut counts = vec![0u64; grid.len()];
    let mut lifetimes = vec![R::zero(); model.n()];
    for i in 0..n_samples {
        let mut rng = crate::simulate::stream_rng(seed, i);
        let seq = crate::simulate::sample_sequence(model, &mut rng);
        for &(t, j) in &seq.events {
            lifetimes[j.pos()] = t;
        }
        let mut system_life = R::zero();
        for path in &system.paths {
            let path_min = path
                .members()
                .map(|h| lifetimes[h.pos()])
                .fold(R::infinity(), R::min);
            system_life = system_life.max(path_min);
        }
        for (slot, g) in counts.iter_mut().zip(grid.iter()) {
            if system_life > *g {
                *slot += 1;
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|c| crate::simulate::wilson_estimate(c, n_samples, seed))
        .collect())
}

/// Scans every path pair for shared components whose importance ordering
/// flips, re-verifying each candidate at tightened tolerance.
pub fn cross_path_reversals<R: Real>(
    model: &ModelSpec<R>,
    system: &PathSetSystem,
    cfg: &KernelConfig<R>,
) -> Result<Vec<CrossPathReversal>, ReliabilityError> {
    let importance = path_importance(model, system, cfg)?;
    let margin = cfg.tie_margin();
    let tight = cfg.tightened();
    let tight_margin = tight.tie_margin();
    let alpha_of = |imp: &PathImportance<R>, v: VariableIndex| -> R {
        imp.alphas.iter().find(|(h, _)| *h == v).map(|(_, a)| *a).expect("member")
    };
    // strict subset-level comparison at tightened tolerance
    let verify = |path: SubsetMask, hi: VariableIndex, lo: VariableIndex| -> Result<bool, ReliabilityError> {
        if path.len() == 1 {
            return Ok(false);
        }
        let ahi = alpha_subset(model, path, hi, &tight)?;
        let alo = alpha_subset(model, path, lo, &tight)?;
        Ok(ahi.value > alo.value + tight_margin + ahi.abs_error + alo.abs_error)
    };
    let mut out = Vec::new();
    for ka in 0..system.paths.len() {
        for kb in ka + 1..system.paths.len() {
            let shared = system.paths[ka].intersection(system.paths[kb]);
            if shared.len() < 2 {
                continue;
            }
            for i in shared.members() {
                for j in shared.members() {
                    if i >= j {
                        continue;
                    }
                    let (a_i, a_j) = (alpha_of(&importance[ka], i), alpha_of(&importance[ka], j));
                    let (b_i, b_j) = (alpha_of(&importance[kb], i), alpha_of(&importance[kb], j));
                    let forward = a_i < a_j - margin && b_i > b_j + margin;
                    let backward = a_i > a_j + margin && b_i < b_j - margin;
                    let confirmed = (forward
                        && verify(system.paths[ka], j, i)?
                        && verify(system.paths[kb], i, j)?)
                        || (backward
                            && verify(system.paths[ka], i, j)?
                            && verify(system.paths[kb], j, i)?);
                    if confirmed {
                        out.push(CrossPathReversal { i, j, path_a: ka, path_b: kb });
                    }
                }
            }
        }
    }
    Ok(out)
}
