//! The natural extension: backward orbits with the weighted metric
//! `d^(x, y) = sum_n a^{-n} d(x_n, y_n)`, the shift, lifted potentials and the
//! uniform Bowen bound on lifted good segments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{self, DecompositionConfig};
use crate::error::{Error, Result};
use crate::maps::{HolderData, MapSystem, Potential, StateSpace};
use crate::orbit::{self, Collection, NODE_CAP};
use crate::pressure::{self, PressureEstimate};
use crate::scalar::Real;

/// Metric base `a` and truncation depth `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionConfig<T> {
    pub a: T,
    pub depth: usize,
    /// `diam * a^{-K} * a / (a - 1)`.
    pub tail_bound: T,
}

impl<T: Real> ExtensionConfig<T> {
    pub fn new(a: T, depth: usize) -> Result<Self> {
        if !(a > T::one()) || !a.is_finite() {
            return Err(Error::invalid("a", "metric base must be finite and > 1"));
        }
        Ok(Self {
            a,
            depth,
            tail_bound: tail_for_depth(a, depth),
        })
    }

    /// Depth `ceil(log(tol / diam) / log(1 / a))`, putting `diam * a^{-K}` below `tol`.
    pub fn with_tolerance(a: T, tol: T) -> Result<Self> {
        if !(tol > T::zero()) {
            return Err(Error::invalid("tol", "must be positive"));
        }
        if !(a > T::one()) {
            return Err(Error::invalid("a", "metric base must be > 1"));
        }
        let k = ((tol / StateSpace::diameter::<T>()).ln() / a.recip().ln()).ceil();
        Self::new(a, k.max(T::zero()).to_usize().unwrap_or(0))
    }

    /// `diam * a^{-k} * a / (a - 1)`, the bound on `d^(g^k x, g^k y)` for points sharing `x_0`.
    pub fn fiber_bound(&self, k: usize) -> T {
        tail_for_depth(self.a, k)
    }
}

fn tail_for_depth<T: Real>(a: T, k: usize) -> T {
    StateSpace::diameter::<T>() * a.powi(-(k as i32)) * a / (a - T::one())
}

/// Smallest `k` with `diam * a^{-k} * a / (a - 1) < eps / 2`.
pub fn fiber_sync_time<T: Real>(a: T, eps: T) -> Result<usize> {
    if !(a > T::one()) {
        return Err(Error::invalid("a", "metric base must be > 1"));
    }
    if !(eps > T::zero()) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    let half = eps * T::lit(0.5);
    let mut k = 0usize;
    while tail_for_depth(a, k) >= half {
        k += 1;
        if k > 100_000 {
            return Err(Error::invalid("a", "fiber synchronisation time overflow"));
        }
    }
    Ok(k)
}

/// Truncated backward orbit `(x_0, ..., x_K)` with `g(x_{i+1}) = x_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtPoint<T> {
    pub coords: Vec<T>,
}

impl<T: Real> ExtPoint<T> {
    pub fn from_coords(coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("extension coordinates"));
        }
        Ok(Self { coords })
    }

    pub fn depth(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn base(&self) -> T {
        self.coords[0]
    }

    /// Max of `d(g(x_{i+1}), x_i)`.
    pub fn chain_defect(&self, map: &MapSystem<T>) -> T {
        self.coords
            .windows(2)
            .map(|w| StateSpace::dist(map.evaluate(w[1]), w[0]))
            .fold(T::zero(), T::max)
    }

    pub fn truncated(&self, depth: usize) -> Result<Self> {
        if depth > self.depth() {
            return Err(Error::MissingItinerary {
                have: self.depth(),
                want: depth,
            });
        }
        Ok(Self {
            coords: self.coords[..=depth].to_vec(),
        })
    }
}

/// Choice of inverse branch when extending a backward orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BranchPolicy {
    LexMin,
    Seeded(u64),
    Scripted(Vec<usize>),
}

impl BranchPolicy {
    fn branches(&self, count: usize, degree: usize) -> Result<Vec<usize>> {
        match self {
            BranchPolicy::LexMin => Ok(vec![0; count]),
            BranchPolicy::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..count).map(|_| rng.gen_range(0..degree)).collect())
            }
            BranchPolicy::Scripted(list) => {
                if list.len() < count {
                    return Err(Error::invalid("branches", format!("need {count}, got {}", list.len())));
                }
                if list[..count].iter().any(|&b| b >= degree) {
                    return Err(Error::invalid("branches", format!("branch index must be < {degree}")));
                }
                Ok(list[..count].to_vec())
            }
        }
    }
}

fn preimage<T: Real>(map: &MapSystem<T>, y: T, branch: usize) -> Result<T> {
    let target = StateSpace::reduce(y) + T::from_usize_lossy(branch);
    Ok(StateSpace::reduce(map.solve_lift(
        target,
        T::zero(),
        T::one(),
        branch,
    )?))
}

/// Backward orbit of depth `k` from `x` with branches chosen by `policy`.
pub fn extend<T: Real>(map: &MapSystem<T>, x: T, k: usize, policy: &BranchPolicy) -> Result<ExtPoint<T>> {
    let branches = policy.branches(k, map.degree())?;
    let mut coords = Vec::with_capacity(k + 1);
    coords.push(StateSpace::reduce(x));
    for b in branches {
        let last = *coords.last().unwrap();
        coords.push(preimage(map, last, b)?);
    }
    Ok(ExtPoint { coords })
}

/// Continues `p` backward to depth `k` with the policy.
pub fn extend_point<T: Real>(
    map: &MapSystem<T>,
    p: &ExtPoint<T>,
    k: usize,
    policy: &BranchPolicy,
) -> Result<ExtPoint<T>> {
    if k <= p.depth() {
        return p.truncated(k);
    }
    let tail = extend(map, *p.coords.last().unwrap(), k - p.depth(), policy)?;
    let mut coords = p.coords.clone();
    coords.extend_from_slice(&tail.coords[1..]);
    Ok(ExtPoint { coords })
}

/// `(g x_0, x_0, ..., x_{K-1})`.
pub fn hat_g<T: Real>(map: &MapSystem<T>, p: &ExtPoint<T>) -> ExtPoint<T> {
    let mut coords = Vec::with_capacity(p.coords.len());
    coords.push(map.evaluate(p.coords[0]));
    coords.extend_from_slice(&p.coords[..p.depth()]);
    ExtPoint { coords }
}

/// `(x_1, ..., x_K, x_{K+1})` with `x_{K+1}` chosen by the policy.
pub fn hat_g_inverse<T: Real>(map: &MapSystem<T>, p: &ExtPoint<T>, policy: &BranchPolicy) -> Result<ExtPoint<T>> {
    let b = policy.branches(1, map.degree())?[0];
    let mut coords = p.coords[1..].to_vec();
    coords.push(preimage(map, *p.coords.last().unwrap(), b)?);
    Ok(ExtPoint { coords })
}

/// `(truncated sum, tail bound)`; the true distance lies in `[sum, sum + tail]`.
pub fn hat_distance<T: Real>(cfg: &ExtensionConfig<T>, p: &ExtPoint<T>, q: &ExtPoint<T>) -> Result<(T, T)> {
    if p.depth() != q.depth() {
        return Err(Error::DepthMismatch {
            left: p.depth(),
            right: q.depth(),
        });
    }
    let inv = cfg.a.recip();
    let mut w = T::one();
    let mut sum = T::zero();
    for (&x, &y) in p.coords.iter().zip(&q.coords) {
        sum = sum + w * StateSpace::dist(x, y);
        w = w * inv;
    }
    Ok((sum, tail_for_depth(cfg.a, p.depth())))
}

/// How a base potential is lifted to the extension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LiftMode<T> {
    Projection,
    FiberAveraged { a: T },
}

/// A potential on the natural extension.
#[derive(Debug, Clone)]
pub enum ExtPotential<T: Real> {
    /// `phi(x_0)`.
    Projection(Potential<T>),
    /// `sum_k a^{-k} psi(x_k)` over the stored coordinates.
    FiberAveraged { psi: Potential<T>, a: T },
}

pub fn lift_potential<T: Real>(phi: Potential<T>, mode: LiftMode<T>) -> Result<ExtPotential<T>> {
    match mode {
        LiftMode::Projection => Ok(ExtPotential::Projection(phi)),
        LiftMode::FiberAveraged { a } => {
            if !(a > T::one()) {
                return Err(Error::invalid("a", "metric base must be > 1"));
            }
            Ok(ExtPotential::FiberAveraged { psi: phi, a })
        }
    }
}

impl<T: Real> ExtPotential<T> {
    pub fn evaluate(&self, map: &MapSystem<T>, p: &ExtPoint<T>) -> T {
        match self {
            ExtPotential::Projection(phi) => phi.evaluate(map, p.base()),
            ExtPotential::FiberAveraged { psi, a } => {
                let inv = a.recip();
                let mut w = T::one();
                let mut sum = T::zero();
                for &x in &p.coords {
                    sum = sum + w * psi.evaluate(map, x);
                    w = w * inv;
                }
                sum
            }
        }
    }

    /// Hölder data with respect to `d^`.
    pub fn holder(&self, map: &MapSystem<T>) -> HolderData<T> {
        match self {
            ExtPotential::Projection(phi) => phi.holder(map),
            ExtPotential::FiberAveraged { psi, a } => {
                let h = psi.holder(map);
                HolderData::new(h.constant * *a / (*a - T::one()), h.exponent.min(T::one()))
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            ExtPotential::Projection(phi) | ExtPotential::FiberAveraged { psi: phi, .. } => phi.is_constant(),
        }
    }

    /// `S_n phi^` along `x^, g^ x^, ...` where `forward` holds `(x_0, g x_0, ..., g^n x_0)`.
    pub fn birkhoff_sum_along(&self, map: &MapSystem<T>, p: &ExtPoint<T>, forward: &[T], n: usize) -> T {
        let mut sum = T::zero();
        for i in 0..n {
            sum = sum + self.evaluate(map, &shifted(p, forward, i));
        }
        sum
    }
}

/// `g^^i(p)` built from a precomputed forward base orbit, depth preserved.
pub fn shifted<T: Real>(p: &ExtPoint<T>, forward: &[T], i: usize) -> ExtPoint<T> {
    let k = p.depth();
    let mut coords = Vec::with_capacity(k + 1);
    for j in (0..=i).rev() {
        if coords.len() > k {
            break;
        }
        coords.push(forward[j]);
    }
    for &x in &p.coords[1..] {
        if coords.len() > k {
            break;
        }
        coords.push(x);
    }
    ExtPoint { coords }
}

/// Lifted classification: `(x^, n)` is classified as `(x_0, n)`.
pub fn classify_lifted<T: Real>(
    map: &MapSystem<T>,
    cfg: &DecompositionConfig<T>,
    p: &ExtPoint<T>,
    n: usize,
) -> Result<decomposition::Classification> {
    decomposition::classify_segment(map, cfg, orbit::OrbitSegment::new(p.base(), n)?)
}

/// `K = C * c^alpha * (sigma^alpha / (1 - sigma^alpha) + 1 / (1 - a^{-alpha}))`,
/// `c = eps * max(a / (a - sigma), 1)`: an `n`-free bound on the Birkhoff-sum
/// variation over `(n, eps)`-Bowen balls of lifted good segments.
pub fn bowen_bound<T: Real>(a: T, sigma: T, holder: HolderData<T>, eps: T) -> Result<T> {
    if !(a > T::one()) {
        return Err(Error::invalid("a", "metric base must be > 1"));
    }
    if !(sigma > T::zero() && sigma < T::one()) {
        return Err(Error::invalid("sigma", "must lie in (0, 1)"));
    }
    if !(eps > T::zero()) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    if holder.constant == T::zero() {
        return Ok(T::zero());
    }
    let alpha = holder.exponent;
    let c = eps * (a / (a - sigma)).max(T::one());
    let sa = sigma.powf(alpha);
    let series = sa / (T::one() - sa) + T::one() / (T::one() - a.powf(-alpha));
    Ok(holder.constant * c.powf(alpha) * series)
}

/// Outcome of the sampled Bowen check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowenReport<T> {
    pub sigma: T,
    pub a: T,
    pub alpha: T,
    pub eps: T,
    pub bound: T,
    pub empirical_max: T,
    /// Truncation slack `n_max * C * tail^alpha` for potentials reading past coordinates.
    pub slack: T,
    pub samples: usize,
    /// Max over samples and times of `d^(g^^i x^, g^^i y^) / (c (sigma^{n-i} + a^{-i}))`.
    pub max_distance_ratio: T,
    pub passed: bool,
}

/// Sampling options for [`verify_bowen`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BowenSampling {
    pub samples: usize,
    pub n_max: usize,
    pub seed: u64,
    pub attempts: usize,
}

impl Default for BowenSampling {
    fn default() -> Self {
        Self {
            samples: 1000,
            n_max: 20,
            seed: 0,
            attempts: 10_000,
        }
    }
}

struct BowenSample<T> {
    variation: T,
    ratio: T,
}

#[allow(clippy::too_many_arguments)]
fn bowen_sample<T: Real>(
    map: &MapSystem<T>,
    ext: &ExtensionConfig<T>,
    dec: &DecompositionConfig<T>,
    phi: &ExtPotential<T>,
    eps: T,
    opts: &BowenSampling,
    idx: usize,
) -> Result<Option<BowenSample<T>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let (a, sigma) = (ext.a, dec.sigma());
    for _ in 0..opts.attempts {
        let x: T = T::lit(rng.gen::<f64>());
        let n = rng.gen_range(1..=opts.n_max);
        let logs = decomposition::log_sigma_orbit(map, x, n)?;
        if !decomposition::good_from_logs(&logs, dec.log_sigma()) {
            continue;
        }
        let xp = extend(map, x, ext.depth, &BranchPolicy::Seeded(rng.gen()))?;
        let fwd_x = map.orbit(x, n);
        // companion: pull a point of B_eps(g^n x) back along the good chain
        let off = T::lit(rng.gen_range(-1.0..=1.0)) * eps * T::lit(0.999);
        let fwd_y = map.pull_back_along(&fwd_x, fwd_x[n] + off)?;
        // past: same branches while the tail budget allows, then free
        let sn_eps = sigma.powi(n as i32) * eps;
        let budget = eps - sn_eps / (a - T::one());
        let mut m0 = ext.depth;
        if budget > T::zero() {
            let mut m = 0usize;
            while m < ext.depth && StateSpace::diameter::<T>() * a.powi(-(m as i32)) / (a - T::one()) > budget {
                m += 1;
            }
            m0 = m;
        }
        let mut yc = vec![fwd_y[0]];
        for k in 1..=ext.depth {
            let prev = yc[k - 1];
            let next = if k <= m0 {
                map.local_inverse(xp.coords[k], prev)?
            } else {
                preimage(map, prev, rng.gen_range(0..map.degree()))?
            };
            yc.push(next);
        }
        let yp = ExtPoint { coords: yc };
        let sx = phi.birkhoff_sum_along(map, &xp, &fwd_x, n);
        let sy = phi.birkhoff_sum_along(map, &yp, &fwd_y, n);
        let c = eps * (a / (a - sigma)).max(T::one());
        let mut ratio = T::zero();
        for i in 0..n {
            let (d, _) = hat_distance(ext, &shifted(&xp, &fwd_x, i), &shifted(&yp, &fwd_y, i))?;
            let scale = c * (sigma.powi((n - i) as i32) + a.powi(-(i as i32)));
            ratio = ratio.max(d / scale);
        }
        return Ok(Some(BowenSample {
            variation: (sx - sy).abs(),
            ratio,
        }));
    }
    Ok(None)
}

/// Empirical max of `|S_n phi^(x^) - S_n phi^(y^)|` over sampled lifted good
/// segments `(x^, n)` and companions `y^` in their Bowen balls.
pub fn verify_bowen<T: Real>(
    map: &MapSystem<T>,
    ext: &ExtensionConfig<T>,
    dec: &DecompositionConfig<T>,
    phi: &ExtPotential<T>,
    eps: T,
    opts: &BowenSampling,
) -> Result<BowenReport<T>> {
    if !(eps > T::zero() && eps <= map.epsilon0()) {
        return Err(Error::invalid("eps", "must lie in (0, epsilon0]"));
    }
    if opts.n_max == 0 || opts.samples == 0 {
        return Err(Error::invalid("samples", "n_max and samples must be positive"));
    }
    let holder = phi.holder(map);
    let bound = bowen_bound(ext.a, dec.sigma(), holder, eps)?;
    let slack = match phi {
        ExtPotential::Projection(_) => T::zero(),
        ExtPotential::FiberAveraged { .. } => {
            T::from_usize_lossy(opts.n_max) * holder.constant * ext.tail_bound.powf(holder.exponent)
        }
    };
    let results = (0..opts.samples)
        .into_par_iter()
        .map(|i| bowen_sample(map, ext, dec, phi, eps, opts, i))
        .collect::<Result<Vec<_>>>()?;
    let got: Vec<BowenSample<T>> = results.into_iter().flatten().collect();
    if got.is_empty() {
        return Err(Error::Empty("good segments in the sample"));
    }
    let empirical_max = got.iter().map(|s| s.variation).fold(T::zero(), T::max);
    let max_distance_ratio = got.iter().map(|s| s.ratio).fold(T::zero(), T::max);
    Ok(BowenReport {
        sigma: dec.sigma(),
        a: ext.a,
        alpha: holder.exponent,
        eps,
        bound,
        empirical_max,
        slack,
        samples: got.len(),
        max_distance_ratio,
        passed: empirical_max <= bound + slack + T::lit(1e-9),
    })
}

/// Pressure of a lifted potential on a collection of projected segments, each
/// representative extended by lex-min branches to the configured depth.
pub fn extension_pressure<T: Real>(
    map: &MapSystem<T>,
    ext: &ExtensionConfig<T>,
    phi: &ExtPotential<T>,
    coll: &Collection<T>,
    eps: T,
    n_max: usize,
) -> Result<PressureEstimate<T>> {
    if n_max < 4 {
        return Err(Error::invalid("n_max", "must be at least 4"));
    }
    let levels = orbit::cylinder_levels(map, n_max, NODE_CAP)?;
    let per_n = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let mut cands = orbit::candidates_from_level(map, None, coll, &levels[n], n)?;
            for c in &mut cands {
                let p = extend(map, c.point, ext.depth, &BranchPolicy::LexMin)?;
                c.weight = phi.birkhoff_sum_along(map, &p, &c.orbit, n);
            }
            let sums = orbit::partition_sums(&cands, n, eps);
            Ok((sums.log_sep, sums.sep_size))
        })
        .collect::<Result<Vec<_>>>()?;
    let n_values: Vec<usize> = (1..=n_max).collect();
    let logs: Vec<T> = per_n.iter().map(|p| p.0).collect();
    let (rate, rate_uncertainty, limsup_proxy, empty) = pressure::fit_rate(&n_values, &logs);
    Ok(PressureEstimate {
        collection: format!("lifted {}", coll.label()),
        eps,
        n_values,
        log_partition_sums: logs,
        set_sizes: per_n.iter().map(|p| p.1).collect(),
        rate,
        rate_uncertainty,
        limsup_proxy,
        empty,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn doubling() -> MapSystem<f64> {
        MapSystem::doubling()
    }

    #[test]
    fn config_tail() {
        let cfg = ExtensionConfig::new(2.0, 20).unwrap();
        assert_abs_diff_eq!(cfg.tail_bound, 2f64.powi(-20), epsilon = 1e-20);
        assert!(ExtensionConfig::new(1.0, 5).is_err());
        let t = ExtensionConfig::with_tolerance(2.0, 1e-6).unwrap();
        assert!(0.5 * 2f64.powi(-(t.depth as i32)) <= 1e-6);
        assert!(0.5 * 2f64.powi(-(t.depth as i32 - 1)) > 1e-6);
    }

    #[test]
    fn sync_time_example() {
        assert_eq!(fiber_sync_time(2.0, 0.125).unwrap(), 5);
    }

    #[test]
    fn extend_examples() {
        let d = doubling();
        assert_eq!(extend(&d, 0.3, 0, &BranchPolicy::LexMin).unwrap().coords, vec![0.3]);
        assert_eq!(extend(&d, 0.0, 4, &BranchPolicy::LexMin).unwrap().coords, vec![0.0; 5]);
        assert_eq!(
            extend(&d, 0.5, 3, &BranchPolicy::LexMin).unwrap().coords,
            vec![0.5, 0.25, 0.125, 0.0625]
        );
        let s = extend(&d, 0.5, 3, &BranchPolicy::Scripted(vec![1, 0, 1])).unwrap();
        assert_eq!(s.coords, vec![0.5, 0.75, 0.375, 0.6875]);
        assert!(extend(&d, 0.5, 3, &BranchPolicy::Scripted(vec![1])).is_err());
    }

    #[test]
    fn shift_examples() {
        let d = doubling();
        let p = extend(&d, 0.5, 3, &BranchPolicy::LexMin).unwrap();
        let q = hat_g(&d, &p);
        assert_eq!(q.coords, vec![0.0, 0.5, 0.25, 0.125]);
        let back = hat_g_inverse(&d, &q, &BranchPolicy::LexMin).unwrap();
        assert_eq!(back.coords[..3], p.coords[..3]);
        assert_eq!(back.depth(), p.depth());
    }

    #[test]
    fn distance_examples() {
        let cfg = ExtensionConfig::new(2.0, 3).unwrap();
        let p = ExtPoint::from_coords(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(hat_distance(&cfg, &p, &p).unwrap(), (0.0, cfg.tail_bound));
        let q = ExtPoint::from_coords(vec![0.35, 0.2, 0.3, 0.4]).unwrap();
        assert_abs_diff_eq!(hat_distance(&cfg, &p, &q).unwrap().0, 0.25, epsilon = 1e-15);
        let r = ExtPoint::from_coords(vec![0.1, 0.2]).unwrap();
        assert!(matches!(hat_distance(&cfg, &p, &r), Err(Error::DepthMismatch { .. })));
    }

    #[test]
    fn lifted_potential_examples() {
        let d = doubling();
        let p = extend(&d, 0.5, 3, &BranchPolicy::LexMin).unwrap();
        let zero = lift_potential(Potential::Zero, LiftMode::Projection).unwrap();
        assert_eq!(zero.evaluate(&d, &p), 0.0);
        let cos = lift_potential(Potential::Cosine { amplitude: 1.0 }, LiftMode::Projection).unwrap();
        assert_eq!(
            cos.evaluate(&d, &p),
            Potential::Cosine { amplitude: 1.0 }.evaluate(&d, 0.5)
        );
        let id = Potential::custom(|x| x, HolderData::lipschitz(f64::INFINITY));
        let avg = lift_potential(id, LiftMode::FiberAveraged { a: 2.0 }).unwrap();
        assert_abs_diff_eq!(avg.evaluate(&d, &p), 0.6640625, epsilon = 1e-15);
    }

    #[test]
    fn fiber_averaged_holder_constant() {
        let d = doubling();
        let lifted = lift_potential(Potential::Cosine { amplitude: 1.0 }, LiftMode::FiberAveraged { a: 3.0 }).unwrap();
        let h = lifted.holder(&d);
        assert_abs_diff_eq!(h.constant, 2.0 * std::f64::consts::PI * 1.5, epsilon = 1e-12);
        assert_eq!(h.exponent, 1.0);
    }

    #[test]
    fn bowen_bound_examples() {
        let k = bowen_bound(2.0, 0.5, HolderData::lipschitz(1.0), 1.0 / 16.0).unwrap();
        assert_abs_diff_eq!(k, 0.25, epsilon = 1e-15);
        assert_eq!(
            bowen_bound(2.0, 0.5, HolderData::lipschitz(0.0), 1.0 / 16.0).unwrap(),
            0.0
        );
        let mp: f64 = bowen_bound(2.0, 0.9, HolderData::new(3.0, 0.5), 0.05).unwrap();
        assert!(mp.is_finite() && mp > 0.0);
    }

    #[test]
    fn constant_potential_has_zero_variation() {
        let d = doubling();
        let ext = ExtensionConfig::new(2.0, 20).unwrap();
        let dec = DecompositionConfig::new(0.75).unwrap();
        let phi = lift_potential(Potential::Constant(1.3), LiftMode::Projection).unwrap();
        let opts = BowenSampling {
            samples: 50,
            ..Default::default()
        };
        let r = verify_bowen(&d, &ext, &dec, &phi, 1.0 / 16.0, &opts).unwrap();
        assert_eq!(r.bound, 0.0);
        assert_eq!(r.empirical_max, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn companions_respect_two_scale_distance() {
        let m = MapSystem::manneville_pomeau(0.5).unwrap();
        let ext = ExtensionConfig::new(2.0, 24).unwrap();
        let dec = DecompositionConfig::new(0.9).unwrap();
        let phi = lift_potential(
            Potential::DistanceToZero {
                scale: 1.0,
                exponent: 0.5,
            },
            LiftMode::Projection,
        )
        .unwrap();
        let opts = BowenSampling {
            samples: 200,
            ..Default::default()
        };
        let r = verify_bowen(&m, &ext, &dec, &phi, 0.05, &opts).unwrap();
        assert!(r.max_distance_ratio <= 1.0 + 1e-9, "{}", r.max_distance_ratio);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn projection_pressure_matches_base() {
        let d = doubling();
        let ext = ExtensionConfig::new(2.0, 10).unwrap();
        let phi = lift_potential(Potential::Cosine { amplitude: 0.5 }, LiftMode::Projection).unwrap();
        let lifted = extension_pressure(&d, &ext, &phi, &Collection::Full, 1.0 / 32.0, 8).unwrap();
        let base = pressure::pressure_at_scale(
            &d,
            &Potential::Cosine { amplitude: 0.5 },
            &Collection::Full,
            1.0 / 32.0,
            8,
        )
        .unwrap();
        assert_abs_diff_eq!(lifted.rate, base.rate, epsilon = 1e-9);
    }
}
