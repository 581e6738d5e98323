//! Gluing good orbit segments into one shadowing orbit, for the base map and
//! for the natural extension.
//!
//! The glued orbit is built backward: the last segment is kept as computed,
//! each earlier segment is reached from the current start by a bridge of
//! inverse branches landing in the `eps`-ball about that segment's endpoint,
//! and the segment is then pulled back along its own inverse-branch chain.
//! Only backward (contracting) steps are taken, so the stored orbit is
//! accurate to root-solve tolerance even where forward iteration is not.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{self, DecompositionConfig};
use crate::error::{Error, Result};
use crate::extension::{self, BranchPolicy, ExtPoint, ExtensionConfig};
use crate::maps::{MapSystem, StateSpace};
use crate::orbit::{OrbitSegment, NODE_CAP};
use crate::scalar::Real;

/// Options for [`glue_base_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlueOptions {
    /// Segment length floor `k_0`: every `n_j >= k0`.
    pub k0: usize,
    /// Transition cap; `None` uses `mixing_time(eps)`.
    pub tau_cap: Option<usize>,
}

impl Default for GlueOptions {
    fn default() -> Self {
        Self { k0: 1, tau_cap: None }
    }
}

/// A realized gluing of segments `(x_j, n_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluingPlan<T> {
    pub segments: Vec<OrbitSegment<T>>,
    pub eps: T,
    pub tau_cap: usize,
    /// `tau_1, ..., tau_{k-1}`, each `<= tau_cap`.
    pub transitions: Vec<usize>,
    /// Time at which the glued orbit starts shadowing segment `j`: `sum_{i<j} (n_i + tau_i)`.
    pub starts: Vec<usize>,
    /// Gluing times `s_j = starts_j + n_j`.
    pub schedule: Vec<usize>,
    /// `z, g z, ..., g^{s_k} z` as constructed backward.
    pub orbit: Vec<T>,
    pub glue_point: T,
    pub max_shadow: T,
}

fn bridge_margin<T: Real>() -> T {
    T::root_tol() * T::lit(64.0)
}

/// Lexicographically first inverse-branch chain of length `t <= cap` from
/// `from` landing strictly inside `B_eps(target)`; returns the chain
/// `p_1, ..., p_t` (`p_{i+1}` a preimage of `p_i`, `p_0 = from`).
fn bridge<T: Real>(map: &MapSystem<T>, from: T, target: T, eps: T, cap: usize, segment: usize) -> Result<Vec<T>> {
    let limit = eps - bridge_margin::<T>();
    let mut levels: Vec<Vec<(T, usize)>> = vec![vec![(from, 0)]];
    for t in 0..=cap {
        if let Some(hit) = levels[t].iter().position(|&(p, _)| StateSpace::dist(p, target) < limit) {
            let mut chain = Vec::with_capacity(t);
            let mut idx = hit;
            for lvl in (1..=t).rev() {
                let (p, parent) = levels[lvl][idx];
                chain.push(p);
                idx = parent;
            }
            chain.reverse();
            return Ok(chain);
        }
        if t == cap {
            break;
        }
        let needed = levels[t].len() * map.degree();
        if needed > NODE_CAP {
            return Err(Error::NodeCap { needed, cap: NODE_CAP });
        }
        let next = levels[t]
            .iter()
            .enumerate()
            .map(|(i, &(p, _))| Ok(map.inverse_branches(p)?.into_iter().map(move |(y, _)| (y, i))))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        levels.push(next);
    }
    Err(Error::BridgeNotFound { segment, cap })
}

struct Glued<T> {
    transitions: Vec<usize>,
    starts: Vec<usize>,
    orbit: Vec<T>,
}

/// Glues forward orbits `orbits[j] = (x_j, ..., g^{n_j} x_j)`; segment pullbacks
/// use the local inverse branches through the segment's own orbit.
fn glue_orbits<T: Real>(map: &MapSystem<T>, orbits: &[Vec<T>], eps: T, cap: usize) -> Result<Glued<T>> {
    let k = orbits.len();
    let last = &orbits[k - 1];
    let mut rev: Vec<T> = last.iter().rev().copied().collect();
    let mut taus = vec![0usize; k.saturating_sub(1)];
    for j in (0..k - 1).rev() {
        let seg = &orbits[j];
        let n = seg.len() - 1;
        let from = *rev.last().unwrap();
        let chain = bridge(map, from, seg[n], eps, cap, j)?;
        taus[j] = chain.len();
        rev.extend(chain);
        let mut w = *rev.last().unwrap();
        for m in (0..n).rev() {
            w = map.local_inverse(seg[m], w)?;
            rev.push(w);
        }
    }
    rev.reverse();
    let mut starts = Vec::with_capacity(k);
    let mut t = 0usize;
    for j in 0..k {
        starts.push(t);
        if j + 1 < k {
            t += orbits[j].len() - 1 + taus[j];
        }
    }
    Ok(Glued {
        transitions: taus,
        starts,
        orbit: rev,
    })
}

fn check_scale<T: Real>(map: &MapSystem<T>, eps: T) -> Result<()> {
    if !(eps > T::zero() && eps <= map.epsilon0()) {
        return Err(Error::invalid("eps", "must lie in (0, epsilon0]"));
    }
    Ok(())
}

fn check_good<T: Real>(
    map: &MapSystem<T>,
    cfg: &DecompositionConfig<T>,
    segments: &[OrbitSegment<T>],
    k0: usize,
) -> Result<()> {
    if segments.is_empty() {
        return Err(Error::Empty("segments"));
    }
    for (j, seg) in segments.iter().enumerate() {
        if seg.length < k0.max(1) {
            return Err(Error::invalid(
                "length",
                format!("segment {j} is shorter than k0 = {k0}"),
            ));
        }
        let logs = decomposition::log_sigma_orbit(map, seg.start, seg.length)?;
        if !decomposition::good_from_logs(&logs, cfg.log_sigma()) {
            return Err(Error::NotGood { segment: j });
        }
    }
    Ok(())
}

pub fn glue_base<T: Real>(
    map: &MapSystem<T>,
    cfg: &DecompositionConfig<T>,
    segments: &[OrbitSegment<T>],
    eps: T,
) -> Result<GluingPlan<T>> {
    glue_base_with(map, cfg, segments, eps, &GlueOptions::default())
}

/// Glues good segments at scale `eps` with transitions of at most `tau_cap` steps.
pub fn glue_base_with<T: Real>(
    map: &MapSystem<T>,
    cfg: &DecompositionConfig<T>,
    segments: &[OrbitSegment<T>],
    eps: T,
    opts: &GlueOptions,
) -> Result<GluingPlan<T>> {
    check_scale(map, eps)?;
    check_good(map, cfg, segments, opts.k0)?;
    let cap = match opts.tau_cap {
        Some(c) => c,
        None => map.mixing_time(eps)?,
    };
    let orbits: Vec<Vec<T>> = segments.iter().map(|s| map.orbit(s.start, s.length)).collect();
    let glued = glue_orbits(map, &orbits, eps, cap)?;
    let mut plan = GluingPlan {
        segments: segments.to_vec(),
        eps,
        tau_cap: cap,
        schedule: glued.starts.iter().zip(segments).map(|(s, g)| s + g.length).collect(),
        transitions: glued.transitions,
        starts: glued.starts,
        glue_point: glued.orbit[0],
        orbit: glued.orbit,
        max_shadow: T::zero(),
    };
    plan.max_shadow = verify_shadow(map, &plan);
    Ok(plan)
}

/// Max over segments `j` and times `m < n_j` of `d(g^m x_j, g^{m + starts_j} z)`.
pub fn verify_shadow<T: Real>(map: &MapSystem<T>, plan: &GluingPlan<T>) -> T {
    plan.segments
        .iter()
        .zip(&plan.starts)
        .map(|(seg, &s)| {
            map.orbit(seg.start, seg.length)
                .iter()
                .take(seg.length)
                .enumerate()
                .map(|(m, &x)| StateSpace::dist(x, plan.orbit[s + m]))
                .fold(T::zero(), T::max)
        })
        .fold(T::zero(), T::max)
}

/// Max of `d(g(z_t), z_{t+1})` along the stored glued orbit.
pub fn consistency_defect<T: Real>(map: &MapSystem<T>, orbit: &[T]) -> T {
    orbit
        .windows(2)
        .map(|w| StateSpace::dist(map.evaluate(w[0]), w[1]))
        .fold(T::zero(), T::max)
}

/// Glues independent segment lists in parallel.
pub fn glue_many<T: Real>(
    map: &MapSystem<T>,
    cfg: &DecompositionConfig<T>,
    lists: &[Vec<OrbitSegment<T>>],
    eps: T,
) -> Vec<Result<GluingPlan<T>>> {
    lists.par_iter().map(|segs| glue_base(map, cfg, segs, eps)).collect()
}

/// A gluing of lifted segments `(x^_j, n_j)` for the shift on the natural extension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtGluingPlan<T> {
    pub segments: Vec<(ExtPoint<T>, usize)>,
    pub eps: T,
    /// Base shadowing scale `eps (a - 1) / (2 a)`.
    pub base_eps: T,
    /// Fiber synchronisation time `tau_s(eps / 2)`.
    pub sync_time: usize,
    /// `tau(base_eps) + tau_s`.
    pub tau_cap: usize,
    pub transitions: Vec<usize>,
    pub starts: Vec<usize>,
    pub schedule: Vec<usize>,
    /// Base plan over the backward-extended segments `(x_{j, L}, n_j + L)`.
    pub base: GluingPlan<T>,
    pub glue_point: ExtPoint<T>,
    /// Max truncated `d^` between `g^^m x^_j` and `g^^{m + starts_j} z^`.
    pub max_shadow: T,
    pub tail_bound: T,
}

/// Specification for the shift: each segment is first extended `L = tau_s(eps/2)`
/// steps into its past, the extended base segments are glued at scale
/// `eps (a - 1) / (2 a)`, and the glued base orbit is lifted with lex-min past.
pub fn glue_extension<T: Real>(
    map: &MapSystem<T>,
    cfg: &DecompositionConfig<T>,
    segments: &[(ExtPoint<T>, usize)],
    eps: T,
    ext: &ExtensionConfig<T>,
) -> Result<ExtGluingPlan<T>> {
    check_scale(map, eps)?;
    let projected = segments
        .iter()
        .map(|(p, n)| OrbitSegment::new(p.base(), *n))
        .collect::<Result<Vec<_>>>()?;
    check_good(map, cfg, &projected, 1)?;
    let a = ext.a;
    let l = extension::fiber_sync_time(a, eps)?;
    if ext.depth < l {
        return Err(Error::invalid(
            "depth",
            format!("truncation depth must be at least {l}"),
        ));
    }
    let base_eps = eps * (a - T::one()) / (T::lit(2.0) * a);
    let cap = map.mixing_time(base_eps)?;

    let mut orbits = Vec::with_capacity(segments.len());
    let mut extended = Vec::with_capacity(segments.len());
    for (p, n) in segments {
        if p.depth() < l {
            return Err(Error::MissingItinerary {
                have: p.depth(),
                want: l,
            });
        }
        for &x in &p.coords[1..=l] {
            if map.branch_lipschitz(x)? > T::one() {
                return Err(Error::invalid(
                    "map",
                    "past pullback needs sigma <= 1 along the extension",
                ));
            }
        }
        let mut o: Vec<T> = p.coords[..=l].iter().rev().copied().collect();
        o.extend(map.orbit(p.base(), *n).into_iter().skip(1));
        orbits.push(o);
        extended.push(OrbitSegment::new(p.coords[l], n + l)?);
    }
    let glued = glue_orbits(map, &orbits, base_eps, cap)?;
    let mut base = GluingPlan {
        segments: extended.clone(),
        eps: base_eps,
        tau_cap: cap,
        schedule: glued.starts.iter().zip(&extended).map(|(s, g)| s + g.length).collect(),
        transitions: glued.transitions.clone(),
        starts: glued.starts.clone(),
        glue_point: glued.orbit[0],
        orbit: glued.orbit,
        max_shadow: T::zero(),
    };
    base.max_shadow = shadow_on_orbits(&orbits, &base);

    let z = extension::extend(map, base.glue_point, ext.depth, &BranchPolicy::LexMin)?;
    let starts: Vec<usize> = base.starts.iter().map(|s| s + l).collect();
    let mut max_shadow = T::zero();
    for (j, (p, n)) in segments.iter().enumerate() {
        let p = extension::extend_point(map, p, ext.depth, &BranchPolicy::LexMin)?;
        let fwd = map.orbit(p.base(), *n);
        for m in 0..*n {
            let lhs = extension::shifted(&p, &fwd, m);
            let rhs = extension::shifted(&z, &base.orbit, starts[j] + m);
            max_shadow = max_shadow.max(extension::hat_distance(ext, &lhs, &rhs)?.0);
        }
    }
    Ok(ExtGluingPlan {
        segments: segments.to_vec(),
        eps,
        base_eps,
        sync_time: l,
        tau_cap: cap + l,
        transitions: glued.transitions.iter().map(|t| t + l).collect(),
        schedule: starts.iter().zip(segments).map(|(s, (_, n))| s + n).collect(),
        starts,
        glue_point: z,
        max_shadow,
        tail_bound: ext.tail_bound,
        base,
    })
}

fn shadow_on_orbits<T: Real>(orbits: &[Vec<T>], plan: &GluingPlan<T>) -> T {
    orbits
        .iter()
        .zip(&plan.starts)
        .map(|(o, &s)| {
            o[..o.len() - 1]
                .iter()
                .enumerate()
                .map(|(m, &x)| StateSpace::dist(x, plan.orbit[s + m]))
                .fold(T::zero(), T::max)
        })
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seg(x: f64, n: usize) -> OrbitSegment<f64> {
        OrbitSegment::new(x, n).unwrap()
    }

    fn good_segments(map: &MapSystem<f64>, sigma: f64, count: usize, rng: &mut ChaCha8Rng) -> Vec<OrbitSegment<f64>> {
        let cfg = DecompositionConfig::new(sigma).unwrap();
        let mut out = Vec::new();
        while out.len() < count {
            let s = seg(rng.gen(), rng.gen_range(5..=20));
            let logs = decomposition::log_sigma_orbit(map, s.start, s.length).unwrap();
            if decomposition::good_from_logs(&logs, cfg.log_sigma()) {
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn single_segment_is_trivial() {
        let d = MapSystem::doubling();
        let cfg = DecompositionConfig::new(0.75).unwrap();
        let plan = glue_base(&d, &cfg, &[seg(0.3, 6)], 1.0 / 16.0).unwrap();
        assert_eq!(plan.glue_point, 0.3);
        assert!(plan.transitions.is_empty());
        assert_eq!(plan.max_shadow, 0.0);
        assert_eq!(plan.schedule, vec![6]);
    }

    #[test]
    fn doubling_two_segments() {
        let d = MapSystem::doubling();
        let cfg = DecompositionConfig::new(0.75).unwrap();
        let plan = glue_base(&d, &cfg, &[seg(0.1, 5), seg(0.7, 5)], 1.0 / 16.0).unwrap();
        assert_eq!(plan.tau_cap, 3);
        assert!(plan.transitions[0] <= 3);
        assert!(plan.max_shadow <= 1.0 / 16.0);
        assert_eq!(plan.starts, vec![0, 5 + plan.transitions[0]]);
        assert_eq!(plan.schedule[0], 5);
        assert!(consistency_defect(&d, &plan.orbit) < 1e-12);
        // oracle: forward iterates of the glue point (exact in binary for short horizons)
        let mut worst: f64 = 0.0;
        for (j, s) in plan.segments.iter().enumerate() {
            let o = d.orbit(s.start, s.length);
            for (m, &x) in o.iter().take(s.length).enumerate() {
                let w = (0..plan.starts[j] + m).fold(plan.glue_point, |w, _| (2.0 * w) % 1.0);
                worst = worst.max(StateSpace::dist(x, w));
            }
        }
        assert_abs_diff_eq!(worst, plan.max_shadow, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let m = MapSystem::manneville_pomeau(0.5).unwrap();
        let cfg = DecompositionConfig::new(0.6).unwrap();
        assert!(matches!(
            glue_base(&m, &cfg, &[seg(1e-4, 10)], 1.0 / 32.0),
            Err(Error::NotGood { segment: 0 })
        ));
        assert!(glue_base(&m, &cfg, &[seg(0.5, 3)], 0.3).is_err());
        assert!(glue_base(&m, &cfg, &[], 0.01).is_err());
    }

    #[test]
    fn mp_triples() {
        let m = MapSystem::manneville_pomeau(0.5).unwrap();
        let cfg = DecompositionConfig::new(0.75).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cap = m.mixing_time(1.0 / 32.0).unwrap();
        for _ in 0..20 {
            let segs = good_segments(&m, 0.75, 3, &mut rng);
            let plan = glue_base(&m, &cfg, &segs, 1.0 / 32.0).unwrap();
            assert!(plan.transitions.iter().all(|&t| t <= cap));
            assert!(plan.max_shadow <= 1.0 / 32.0);
            assert!(consistency_defect(&m, &plan.orbit) < 1e-9);
        }
    }

    #[test]
    fn plan_valid_at_larger_scale() {
        let d = MapSystem::doubling();
        let cfg = DecompositionConfig::new(0.75).unwrap();
        let plan = glue_base(&d, &cfg, &[seg(0.2, 7), seg(0.9, 4), seg(0.45, 6)], 1.0 / 32.0).unwrap();
        assert!(plan.max_shadow <= 1.0 / 16.0);
    }

    #[test]
    fn extension_gluing() {
        let d = MapSystem::doubling();
        let cfg = DecompositionConfig::new(0.75).unwrap();
        let ext = ExtensionConfig::new(2.0, 20).unwrap();
        let p = extension::extend(&d, 0.3, 20, &BranchPolicy::Seeded(1)).unwrap();
        let q = extension::extend(&d, 0.8, 20, &BranchPolicy::Seeded(2)).unwrap();
        let single = glue_extension(&d, &cfg, &[(p.clone(), 6)], 0.125, &ext).unwrap();
        assert!(single.transitions.is_empty());
        let plan = glue_extension(&d, &cfg, &[(p, 6), (q, 8)], 0.125, &ext).unwrap();
        assert_eq!(plan.sync_time, 5);
        assert!(plan.transitions[0] <= plan.tau_cap);
        assert!(plan.max_shadow <= 0.125, "{}", plan.max_shadow);
    }
}
