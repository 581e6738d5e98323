//! The affine solenoid `f(theta, w) = (2 theta, lambda w + r e^{2 pi i theta})` on the
//! solid torus, its attractor approximants, holonomies and the conjugacy to the
//! natural extension of the doubling map.
//!
//! A point carries its backward base itinerary `theta_1, ..., theta_D`
//! (`2 theta_{j+1} = theta_j` mod 1); its disk coordinate is `f^D(theta_D, 0)`.
//! Halving and doubling are exact in binary floating point, so itinerary
//! algebra is exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{self, DecompositionConfig};
use crate::error::{Error, Result};
use crate::extension::{ExtPoint, ExtensionConfig};
use crate::maps::{MapSystem, StateSpace};
use crate::scalar::Real;

/// Largest fiber-sample depth (`2^depth` points).
pub const FIBER_DEPTH_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SolenoidSystem<T> {
    pub base: MapSystem<T>,
    pub lambda: T,
    pub radius: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorPoint<T> {
    pub theta: T,
    pub u: T,
    pub v: T,
    /// `theta_1, ..., theta_D`: base coordinates of `f^{-1} p, ..., f^{-D} p`.
    pub past: Vec<T>,
}

impl<T: Real> AttractorPoint<T> {
    pub fn depth(&self) -> usize {
        self.past.len()
    }

    /// Branch bits of the past: bit `j` is 1 when `theta_{j+1} >= 1/2`.
    pub fn itinerary(&self) -> String {
        self.past
            .iter()
            .map(|&t| if t >= T::lit(0.5) { '1' } else { '0' })
            .collect()
    }
}

fn halve<T: Real>(y: T, branch: usize) -> T {
    (y + T::from_usize_lossy(branch)) * T::lit(0.5)
}

fn double<T: Real>(x: T) -> T {
    let y = x + x;
    if y >= T::one() {
        y - T::one()
    } else {
        y
    }
}

/// Preimage of `y` under doubling nearest to `near`.
fn nearest_preimage<T: Real>(y: T, near: T) -> T {
    let a = halve(y, 0);
    let b = halve(y, 1);
    if StateSpace::dist(a, near) <= StateSpace::dist(b, near) {
        a
    } else {
        b
    }
}

/// Disk-metric distance.
fn disk_dist<T: Real>(a: (T, T), b: (T, T)) -> T {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Metric on the solid torus: circle distance plus disk distance.
pub fn torus_distance<T: Real>(p: &AttractorPoint<T>, q: &AttractorPoint<T>) -> T {
    StateSpace::dist(p.theta, q.theta) + disk_dist((p.u, p.v), (q.u, q.v))
}

impl<T: Real> SolenoidSystem<T> {
    pub fn new(lambda: T, radius: T) -> Result<Self> {
        if !(lambda > T::zero() && lambda < T::lit(0.5)) {
            return Err(Error::invalid("lambda", "fiber contraction must lie in (0, 1/2)"));
        }
        if !(radius > T::zero()) || lambda + radius > T::one() {
            return Err(Error::invalid("radius", "need radius > 0 and lambda + radius <= 1"));
        }
        Ok(Self {
            base: MapSystem::doubling(),
            lambda,
            radius,
        })
    }

    pub fn classical() -> Self {
        Self::new(T::lit(0.25), T::lit(0.5)).expect("classical parameters are valid")
    }

    fn kick(&self, theta: T) -> (T, T) {
        let ang = T::TAU() * theta;
        (self.radius * ang.cos(), self.radius * ang.sin())
    }

    fn fiber_step(&self, w: (T, T), theta: T) -> (T, T) {
        let k = self.kick(theta);
        (self.lambda * w.0 + k.0, self.lambda * w.1 + k.1)
    }

    /// Attractor point with base `theta` and past `past`, disk coordinate `f^D(theta_D, 0)`.
    pub fn point_from_past(&self, theta: T, past: Vec<T>) -> AttractorPoint<T> {
        let mut w = (T::zero(), T::zero());
        for &t in past.iter().rev() {
            w = self.fiber_step(w, t);
        }
        AttractorPoint {
            theta: StateSpace::reduce(theta),
            u: w.0,
            v: w.1,
            past,
        }
    }

    /// Past of depth `depth` above `theta` along the given branch bits.
    pub fn past_from_branches(theta: T, branches: &[usize]) -> Vec<T> {
        let mut out = Vec::with_capacity(branches.len());
        let mut y = StateSpace::reduce(theta);
        for &b in branches {
            y = halve(y, b);
            out.push(y);
        }
        out
    }

    pub fn apply_f(&self, p: &AttractorPoint<T>) -> AttractorPoint<T> {
        let w = self.fiber_step((p.u, p.v), p.theta);
        let mut past = Vec::with_capacity(p.past.len() + 1);
        past.push(p.theta);
        past.extend_from_slice(&p.past);
        AttractorPoint {
            theta: double(p.theta),
            u: w.0,
            v: w.1,
            past,
        }
    }

    /// The `2^depth` approximant points in the fiber over `y`, in lexicographic
    /// itinerary order.
    pub fn fiber_sample(&self, y: T, depth: usize) -> Result<Vec<AttractorPoint<T>>> {
        if depth == 0 {
            return Err(Error::invalid("depth", "must be at least 1"));
        }
        if depth > FIBER_DEPTH_CAP {
            return Err(Error::NodeCap {
                needed: 1usize << depth.min(63),
                cap: 1 << FIBER_DEPTH_CAP,
            });
        }
        Ok((0..1usize << depth)
            .into_par_iter()
            .map(|code| {
                let branches: Vec<usize> = (0..depth).map(|j| (code >> (depth - 1 - j)) & 1).collect();
                self.point_from_past(y, Self::past_from_branches(y, &branches))
            })
            .collect())
    }

    /// Random approximant point of the given depth.
    pub fn sample_point(&self, rng: &mut impl Rng, depth: usize) -> AttractorPoint<T> {
        let theta = T::lit(rng.gen::<f64>());
        let branches: Vec<usize> = (0..depth).map(|_| rng.gen_range(0..2)).collect();
        self.point_from_past(theta, Self::past_from_branches(theta, &branches))
    }

    /// `h(p) = (theta_0, theta_1, ..., theta_J)`.
    pub fn conjugacy_h(&self, p: &AttractorPoint<T>, j: usize) -> Result<ExtPoint<T>> {
        if p.past.len() < j {
            return Err(Error::MissingItinerary {
                have: p.past.len(),
                want: j,
            });
        }
        let mut coords = Vec::with_capacity(j + 1);
        coords.push(p.theta);
        coords.extend_from_slice(&p.past[..j]);
        Ok(ExtPoint { coords })
    }

    /// Holonomy to the fiber over `y`: the point whose past follows the inverse
    /// branches continued from those of `p`.
    pub fn holonomy(&self, p: &AttractorPoint<T>, y: T) -> AttractorPoint<T> {
        let mut past = Vec::with_capacity(p.past.len());
        let mut cur = StateSpace::reduce(y);
        for &t in &p.past {
            cur = nearest_preimage(cur, t);
            past.push(cur);
        }
        self.point_from_past(y, past)
    }

    /// `d_X(pi p, pi q) + |w(h p) - w(q)|` with `h` the holonomy to the fiber of `q`.
    pub fn holonomy_distance(&self, p: &AttractorPoint<T>, q: &AttractorPoint<T>) -> T {
        let hp = self.holonomy(p, q.theta);
        StateSpace::dist(p.theta, q.theta) + disk_dist((hp.u, hp.v), (q.u, q.v))
    }

    /// Lipschitz constant of the holonomy displacement in the base distance: `2 pi r / (2 - lambda)`.
    pub fn holonomy_lipschitz(&self) -> T {
        T::TAU() * self.radius / (T::lit(2.0) - self.lambda)
    }

    /// `1 + 2 pi r / (2 - lambda)`: both metrics are within this factor of each other.
    pub fn equivalence_constant(&self) -> T {
        T::one() + self.holonomy_lipschitz()
    }
}

/// Empirical bracket of `d_M / (d_X + holonomy-matched disk distance)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricEquivalence<T> {
    pub c_low: T,
    pub c_high: T,
    /// Smallest `C >= 1` consistent with the samples.
    pub constant: T,
    /// Closed-form upper bound on `constant`.
    pub analytic: T,
    pub samples: usize,
}

fn pair_rng(seed: u64, idx: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn metric_equivalence<T: Real>(
    sys: &SolenoidSystem<T>,
    samples: usize,
    depth: usize,
    seed: u64,
) -> Result<MetricEquivalence<T>> {
    if samples < 100 {
        return Err(Error::invalid("samples", "need at least 100"));
    }
    let ratios: Vec<T> = (0..samples)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = pair_rng(seed, i);
            let p = sys.sample_point(&mut rng, depth);
            // half the pairs are close in the base, to probe small scales
            let q = if i % 2 == 0 {
                sys.sample_point(&mut rng, depth)
            } else {
                let y = StateSpace::reduce(p.theta + T::lit(rng.gen_range(-0.05..0.05)));
                let branches: Vec<usize> = (0..depth).map(|_| rng.gen_range(0..2)).collect();
                sys.point_from_past(y, SolenoidSystem::past_from_branches(y, &branches))
            };
            let dm = torus_distance(&p, &q);
            let dh = sys.holonomy_distance(&p, &q);
            (dm > T::zero() && dh > T::zero()).then(|| dm / dh)
        })
        .collect();
    if ratios.is_empty() {
        return Err(Error::Empty("distinct sample pairs"));
    }
    let c_low = ratios.iter().copied().fold(T::infinity(), T::min);
    let c_high = ratios.iter().copied().fold(T::zero(), T::max);
    Ok(MetricEquivalence {
        c_low,
        c_high,
        constant: c_high.max(c_low.recip()).max(T::one()),
        analytic: sys.equivalence_constant(),
        samples: ratios.len(),
    })
}

/// Per-step fiber contraction `|f p - f q| / |p - q|` over same-fiber pairs: (min, max).
pub fn fiber_contraction<T: Real>(sys: &SolenoidSystem<T>, samples: usize, depth: usize, seed: u64) -> (T, T) {
    (0..samples)
        .map(|i| {
            let mut rng = pair_rng(seed, i);
            let p = sys.sample_point(&mut rng, depth);
            let branches: Vec<usize> = (0..depth).map(|_| rng.gen_range(0..2)).collect();
            let q = sys.point_from_past(p.theta, SolenoidSystem::past_from_branches(p.theta, &branches));
            (p, q)
        })
        .filter(|(p, q)| disk_dist((p.u, p.v), (q.u, q.v)) > T::lit(1e-3))
        .map(|(p, q)| {
            let (fp, fq) = (sys.apply_f(&p), sys.apply_f(&q));
            disk_dist((fp.u, fp.v), (fq.u, fq.v)) / disk_dist((p.u, p.v), (q.u, q.v))
        })
        .fold((T::infinity(), T::zero()), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

/// Max truncated `d^(h(f p), g^(h p))` over samples, with `J = depth`.
pub fn conjugacy_defect<T: Real>(
    sys: &SolenoidSystem<T>,
    ext: &ExtensionConfig<T>,
    samples: usize,
    seed: u64,
) -> Result<T> {
    let j = ext.depth;
    let mut worst = T::zero();
    for i in 0..samples {
        let mut rng = pair_rng(seed, i);
        let p = sys.sample_point(&mut rng, j);
        let lhs = sys.conjugacy_h(&sys.apply_f(&p), j)?;
        let hp = sys.conjugacy_h(&p, j)?;
        let rhs = crate::extension::hat_g(&sys.base, &hp);
        worst = worst.max(crate::extension::hat_distance(ext, &lhs, &rhs)?.0);
    }
    Ok(worst)
}

/// Max over samples of `|f(h_{x,y} z) - h_{g x, g y}(f z)|` with base points within 1/4.
pub fn holonomy_invariance_defect<T: Real>(sys: &SolenoidSystem<T>, samples: usize, depth: usize, seed: u64) -> T {
    (0..samples)
        .map(|i| {
            let mut rng = pair_rng(seed, i);
            let z = sys.sample_point(&mut rng, depth);
            let y = StateSpace::reduce(z.theta + T::lit(rng.gen_range(-0.2..0.2)));
            let a = sys.apply_f(&sys.holonomy(&z, y));
            let b = sys.holonomy(&sys.apply_f(&z), double(y));
            StateSpace::dist(a.theta, b.theta) + disk_dist((a.u, a.v), (b.u, b.v))
        })
        .fold(T::zero(), T::max)
}

/// `A cos(2 pi theta) + B u`; Lipschitz (exponent 1) with constant `max(2 pi |A|, |B|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPotential<T> {
    pub a: T,
    pub b: T,
}

impl<T: Real> TorusPotential<T> {
    pub fn evaluate(&self, p: &AttractorPoint<T>) -> T {
        self.a * (T::TAU() * p.theta).cos() + self.b * p.u
    }

    pub fn constant(&self) -> T {
        (T::TAU() * self.a.abs()).max(self.b.abs())
    }

    pub fn exponent(&self) -> T {
        T::one()
    }
}

/// Outcome of the attractor Bowen check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorBowenReport<T> {
    pub sigma: T,
    pub eps: T,
    /// `C_0 C_eq^alpha eps^alpha (sigma^alpha / (1 - sigma^alpha) + 1 / (1 - lambda^alpha))`.
    pub bound: T,
    pub empirical_max: T,
    /// Max of `d_hol(f^i x, f^i y) / (eps sigma^{n-i} + lambda^i eps)`.
    pub max_two_term_ratio: T,
    pub two_term_violations: usize,
    pub samples: usize,
    pub passed: bool,
}

/// Closed-form variation bound on good attractor segments.
pub fn attractor_bowen_bound<T: Real>(sys: &SolenoidSystem<T>, sigma: T, phi: &TorusPotential<T>, eps: T) -> T {
    let c0 = phi.constant();
    if c0 == T::zero() {
        return T::zero();
    }
    let al = phi.exponent();
    let sa = sigma.powf(al);
    let la = sys.lambda.powf(al);
    c0 * sys.equivalence_constant().powf(al) * eps.powf(al) * (sa / (T::one() - sa) + T::one() / (T::one() - la))
}

/// Options for [`attractor_bowen_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractorSampling {
    pub samples: usize,
    pub n_max: usize,
    pub depth: usize,
    pub seed: u64,
}

impl Default for AttractorSampling {
    fn default() -> Self {
        Self {
            samples: 1000,
            n_max: 20,
            depth: 30,
            seed: 0,
        }
    }
}

/// Samples good attractor segments `(x, n)`, builds Bowen-ball companions (base
/// point pulled back from `B_eps(g^n pi x)`, past matched by holonomy to a depth
/// keeping the fiber offset below `eps`, then free) and checks the two-term
/// estimate and the variation bound.
pub fn attractor_bowen_check<T: Real>(
    sys: &SolenoidSystem<T>,
    cfg: &DecompositionConfig<T>,
    phi: &TorusPotential<T>,
    eps: T,
    opts: &AttractorSampling,
) -> Result<AttractorBowenReport<T>> {
    if !(eps > T::zero() && eps <= sys.base.epsilon0()) {
        return Err(Error::invalid("eps", "must lie in (0, epsilon0]"));
    }
    if opts.samples == 0 || opts.n_max == 0 {
        return Err(Error::invalid("samples", "samples and n_max must be positive"));
    }
    let sigma = cfg.sigma();
    let lam = sys.lambda;
    // free past beyond m0 moves the disk coordinate by at most 2 r lambda^m0 / (1 - lambda)
    let mut m0 = 0usize;
    while T::lit(2.0) * sys.radius * lam.powi(m0 as i32) / (T::one() - lam) > eps {
        m0 += 1;
    }
    let depth = opts.depth.max(m0 + 1);
    let slack = T::lit(1e-9);
    let results = (0..opts.samples)
        .into_par_iter()
        .map(|i| -> Result<Option<(T, T, usize)>> {
            let mut rng = pair_rng(opts.seed, i);
            let x = sys.sample_point(&mut rng, depth);
            let n = rng.gen_range(1..=opts.n_max);
            let logs = decomposition::log_sigma_orbit(&sys.base, x.theta, n)?;
            if !decomposition::good_from_logs(&logs, cfg.log_sigma()) {
                return Ok(None);
            }
            let fwd = sys.base.orbit(x.theta, n);
            let off = T::lit(rng.gen_range(-1.0..=1.0)) * eps * T::lit(0.999);
            let ybase = sys.base.pull_back_along(&fwd, fwd[n] + off)?;
            let hx = sys.holonomy(&x, ybase[0]);
            let mut past = hx.past[..m0].to_vec();
            let mut cur = past.last().copied().unwrap_or(ybase[0]);
            for _ in m0..depth {
                cur = halve(cur, rng.gen_range(0..2));
                past.push(cur);
            }
            let y = sys.point_from_past(ybase[0], past);

            let (mut px, mut py, mut phx) = (x, y, hx);
            let (mut sx, mut sy) = (T::zero(), T::zero());
            let mut ratio = T::zero();
            let mut violations = 0usize;
            for i in 0..n {
                sx = sx + phi.evaluate(&px);
                sy = sy + phi.evaluate(&py);
                let d = StateSpace::dist(px.theta, py.theta) + disk_dist((phx.u, phx.v), (py.u, py.v));
                let scale = eps * sigma.powi((n - i) as i32) + lam.powi(i as i32) * eps;
                ratio = ratio.max(d / scale);
                if d > scale + slack {
                    violations += 1;
                }
                px = sys.apply_f(&px);
                py = sys.apply_f(&py);
                phx = sys.apply_f(&phx);
            }
            Ok(Some(((sx - sy).abs(), ratio, violations)))
        })
        .collect::<Result<Vec<_>>>()?;
    let got: Vec<(T, T, usize)> = results.into_iter().flatten().collect();
    if got.is_empty() {
        return Err(Error::Empty("good attractor segments in the sample"));
    }
    let bound = attractor_bowen_bound(sys, sigma, phi, eps);
    let empirical_max = got.iter().map(|g| g.0).fold(T::zero(), T::max);
    let two_term_violations = got.iter().map(|g| g.2).sum();
    Ok(AttractorBowenReport {
        sigma,
        eps,
        bound,
        empirical_max,
        max_two_term_ratio: got.iter().map(|g| g.1).fold(T::zero(), T::max),
        two_term_violations,
        samples: got.len(),
        passed: two_term_violations == 0 && empirical_max <= bound + slack,
    })
}

/// Random attractor approximant points for plotting.
pub fn point_cloud<T: Real>(sys: &SolenoidSystem<T>, count: usize, depth: usize, seed: u64) -> Vec<AttractorPoint<T>> {
    (0..count)
        .into_par_iter()
        .map(|i| sys.sample_point(&mut pair_rng(seed, i), depth))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sys() -> SolenoidSystem<f64> {
        SolenoidSystem::classical()
    }

    #[test]
    fn parameters_validated() {
        assert!(SolenoidSystem::<f64>::new(0.5, 0.4).is_err());
        assert!(SolenoidSystem::<f64>::new(0.3, 0.8).is_err());
        assert!(SolenoidSystem::<f64>::new(0.3, 0.7).is_ok());
    }

    #[test]
    fn apply_examples() {
        let s = sys();
        let p = s.point_from_past(0.0, vec![]);
        let q = s.apply_f(&p);
        assert_eq!((q.theta, q.u, q.v), (0.0, 0.5, 0.0));
        let a = s.point_from_past(0.3, SolenoidSystem::past_from_branches(0.3, &[0, 1, 1]));
        let b = s.point_from_past(0.3, SolenoidSystem::past_from_branches(0.3, &[1, 0, 1]));
        let (fa, fb) = (s.apply_f(&a), s.apply_f(&b));
        assert_eq!(fa.theta, s.base.evaluate(0.3));
        assert_abs_diff_eq!(
            disk_dist((fa.u, fa.v), (fb.u, fb.v)),
            0.25 * disk_dist((a.u, a.v), (b.u, b.v)),
            epsilon = 1e-15
        );
    }

    #[test]
    fn fiber_samples() {
        let s = sys();
        assert_eq!(s.fiber_sample(0.2, 1).unwrap().len(), 2);
        let pts = s.fiber_sample(0.2, 6).unwrap();
        assert_eq!(pts.len(), 64);
        let mut min = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                min = min.min(disk_dist((pts[i].u, pts[i].v), (pts[j].u, pts[j].v)));
            }
        }
        assert!(min > 0.0);
        assert!(pts.iter().all(|p| p.u.hypot(p.v) <= 1.0));
        assert!(s.fiber_sample(0.2, 0).is_err());
        assert!(s.fiber_sample(0.2, 21).is_err());
    }

    #[test]
    fn conjugacy_examples() {
        let s = sys();
        let p = s.point_from_past(0.0, vec![0.0; 12]);
        assert_eq!(s.conjugacy_h(&p, 12).unwrap().coords, vec![0.0; 13]);
        assert!(s.conjugacy_h(&p, 13).is_err());
        let ext = ExtensionConfig::new(2.0, 24).unwrap();
        assert_eq!(conjugacy_defect(&s, &ext, 200, 1).unwrap(), 0.0);
    }

    #[test]
    fn holonomy_same_fiber_is_identity_on_base() {
        let s = sys();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = s.sample_point(&mut rng, 15);
        let h = s.holonomy(&p, p.theta);
        assert_eq!(h.past, p.past);
        assert_eq!((h.u, h.v), (p.u, p.v));
    }

    #[test]
    fn holonomy_is_invariant() {
        assert_eq!(holonomy_invariance_defect(&sys(), 500, 20, 4), 0.0);
    }

    #[test]
    fn contraction_is_lambda() {
        let (lo, hi) = fiber_contraction(&sys(), 500, 20, 5);
        assert_abs_diff_eq!(lo, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn metric_bracket_within_analytic_constant() {
        let s = sys();
        let m = metric_equivalence(&s, 4000, 30, 6).unwrap();
        assert!(m.constant <= m.analytic, "{m:?}");
        let m2 = metric_equivalence(&s, 8000, 30, 7).unwrap();
        assert!((m2.constant - m.constant).abs() <= 0.1 * m.constant);
        assert!(metric_equivalence(&s, 10, 30, 6).is_err());
    }

    #[test]
    fn bowen_check_examples() {
        let s = sys();
        let cfg = DecompositionConfig::new(0.6).unwrap();
        let zero = TorusPotential { a: 0.0, b: 0.0 };
        let opts = AttractorSampling {
            samples: 200,
            ..Default::default()
        };
        let r = attractor_bowen_check(&s, &cfg, &zero, 1.0 / 16.0, &opts).unwrap();
        assert_eq!(r.empirical_max, 0.0);
        let phi = TorusPotential { a: 0.3, b: 1.0 };
        let r = attractor_bowen_check(&s, &cfg, &phi, 1.0 / 16.0, &opts).unwrap();
        assert_eq!(r.two_term_violations, 0);
        assert!(r.passed, "{r:?}");
        // closed form without the metric factor: C_0 eps (1.5 + 4/3)
        let unit = SolenoidSystem { radius: 0.0, ..s };
        let k = attractor_bowen_bound(&unit, 0.6, &TorusPotential { a: 0.0, b: 1.0 }, 0.1);
        assert_abs_diff_eq!(k, 0.1 * (1.5 + 4.0 / 3.0), epsilon = 1e-12);
    }
}
