//! Circle maps with explicit inverse branches, and potentials on the circle.
//!
//! Every map is described by an increasing lift `G: [0, 1] -> [0, degree]`
//! with `G(0) = 0`, so the branch domains are the arcs `[G^{-1}(b), G^{-1}(b + 1))`
//! and the depth-`n` cylinders are arcs cut at preimages of `0`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Grid used to verify topological exactness in [`MapSystem::mixing_time`].
pub const MIXING_GRID: usize = 4096;
/// Default cap on the number of iterates tried by [`MapSystem::mixing_time`].
pub const MIXING_CAP: usize = 256;

const BISECTION_MAX_ITERS: usize = 200;

/// The circle `[0, 1)` with the wraparound metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StateSpace;

impl StateSpace {
    pub fn reduce<T: Real>(x: T) -> T {
        let r = x - x.floor();
        // x slightly below an integer can round up to exactly 1.0
        if r >= T::one() {
            T::zero()
        } else {
            r
        }
    }

    /// Wraparound distance; symmetric in floating point.
    pub fn dist<T: Real>(x: T, y: T) -> T {
        let d = (Self::reduce(x) - Self::reduce(y)).abs();
        d.min(T::one() - d)
    }

    /// Representative of `to - from` in `[-1/2, 1/2)`.
    pub fn signed_diff<T: Real>(from: T, to: T) -> T {
        let half = T::lit(0.5);
        Self::reduce(to - from + half) - half
    }

    pub fn diameter<T: Real>() -> T {
        T::lit(0.5)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind<T> {
    /// `x -> 2x mod 1`.
    Doubling,
    /// `x -> x + x^{1 + alpha} mod 1`, neutral fixed point at 0.
    MannevillePomeau { alpha: T },
    /// `x -> d x + (a / 2 pi) sin(2 pi x) mod 1`, expanding for `a < d - 1`.
    Perturbed { degree: usize, amplitude: T },
    /// Piecewise-linear lift through `(i / M, lift[i])`.
    Tabulated { lift: Vec<T> },
}

/// A circle local homeomorphism with inverse-branch access and the branch
/// Lipschitz field `sigma(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSystem<T> {
    kind: MapKind<T>,
    degree: usize,
    epsilon0: T,
    sigma_safety: T,
    lipschitz_grid: usize,
}

impl<T: Real> MapSystem<T> {
    pub fn doubling() -> Self {
        Self::from_kind(MapKind::Doubling).expect("doubling map is well formed")
    }

    pub fn manneville_pomeau(alpha: T) -> Result<Self> {
        Self::from_kind(MapKind::MannevillePomeau { alpha })
    }

    pub fn perturbed(degree: usize, amplitude: T) -> Result<Self> {
        Self::from_kind(MapKind::Perturbed { degree, amplitude })
    }

    pub fn tabulated(lift: Vec<T>) -> Result<Self> {
        Self::from_kind(MapKind::Tabulated { lift })
    }

    pub fn from_kind(kind: MapKind<T>) -> Result<Self> {
        let degree = match &kind {
            MapKind::Doubling => 2,
            MapKind::MannevillePomeau { alpha } => {
                if !(*alpha > T::zero() && *alpha < T::one()) {
                    return Err(Error::invalid("alpha", "must lie in (0, 1)"));
                }
                2
            }
            MapKind::Perturbed { degree, amplitude } => {
                if *degree < 2 {
                    return Err(Error::invalid("degree", "must be at least 2"));
                }
                let d = T::from_usize_lossy(*degree);
                if !(amplitude.abs() < d - T::one()) {
                    return Err(Error::invalid("amplitude", "|a| < degree - 1 keeps the map expanding"));
                }
                *degree
            }
            MapKind::Tabulated { lift } => {
                if lift.len() < 2 {
                    return Err(Error::invalid("lift", "needs at least two nodes"));
                }
                if lift[0] != T::zero() {
                    return Err(Error::invalid("lift", "lift must start at 0 (g(0) = 0)"));
                }
                if lift.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid("lift", "lift must be strictly increasing"));
                }
                let last = *lift.last().unwrap();
                let deg = last.round();
                if (last - deg).abs() > T::lit(1e-9) || deg < T::lit(2.0) {
                    return Err(Error::invalid("lift", "lift(1) must be an integer degree >= 2"));
                }
                let m = T::from_usize_lossy(lift.len() - 1);
                if lift.windows(2).any(|w| (w[1] - w[0]) * m < T::one()) {
                    return Err(Error::invalid("lift", "slopes below 1 are not supported"));
                }
                deg.to_usize().unwrap()
            }
        };
        let mut sys = Self {
            kind,
            degree,
            epsilon0: T::zero(),
            sigma_safety: T::lit(1.01),
            lipschitz_grid: 257,
        };
        sys.epsilon0 = T::one() / (T::lit(2.0) * sys.max_derivative());
        Ok(sys)
    }

    pub fn kind(&self) -> &MapKind<T> {
        &self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Radius below which every ball sits inside one injectivity domain.
    pub fn epsilon0(&self) -> T {
        self.epsilon0
    }

    pub fn name(&self) -> String {
        match &self.kind {
            MapKind::Doubling => "doubling".into(),
            MapKind::MannevillePomeau { alpha } => format!("manneville_pomeau({alpha})"),
            MapKind::Perturbed { degree, amplitude } => format!("perturbed({degree},{amplitude})"),
            MapKind::Tabulated { lift } => format!("tabulated({})", lift.len()),
        }
    }

    /// Multiplier on sampled `sup 1/g'` for maps without a closed-form bound.
    pub fn with_sigma_safety(mut self, factor: T) -> Self {
        self.sigma_safety = factor;
        self
    }

    /// Lift on `[0, 1]`.
    fn lift_unit(&self, x: T) -> T {
        match &self.kind {
            MapKind::Doubling => x + x,
            MapKind::MannevillePomeau { alpha } => x + x.powf(T::one() + *alpha),
            MapKind::Perturbed { degree, amplitude } => {
                let tau = T::TAU();
                T::from_usize_lossy(*degree) * x + *amplitude / tau * (tau * x).sin()
            }
            MapKind::Tabulated { lift } => {
                let m = lift.len() - 1;
                let s = x * T::from_usize_lossy(m);
                let i = s.floor().to_usize().unwrap_or(0).min(m - 1);
                let t = s - T::from_usize_lossy(i);
                lift[i] + (lift[i + 1] - lift[i]) * t
            }
        }
    }

    /// Right derivative of the lift at `x` in `[0, 1)`.
    fn derivative_unit(&self, x: T) -> T {
        match &self.kind {
            MapKind::Doubling => T::lit(2.0),
            MapKind::MannevillePomeau { alpha } => T::one() + (T::one() + *alpha) * x.powf(*alpha),
            MapKind::Perturbed { degree, amplitude } => {
                T::from_usize_lossy(*degree) + *amplitude * (T::TAU() * x).cos()
            }
            MapKind::Tabulated { lift } => {
                let m = lift.len() - 1;
                let mm = T::from_usize_lossy(m);
                let i = (x * mm).floor().to_usize().unwrap_or(0).min(m - 1);
                (lift[i + 1] - lift[i]) * mm
            }
        }
    }

    /// Lift extended to the real line by `G(x + 1) = G(x) + degree`.
    pub fn lift(&self, x: T) -> T {
        let k = x.floor();
        self.lift_unit(x - k) + k * T::from_usize_lossy(self.degree)
    }

    /// Right derivative of `g` at `x`.
    pub fn derivative(&self, x: T) -> T {
        self.derivative_unit(StateSpace::reduce(x))
    }

    pub fn max_derivative(&self) -> T {
        match &self.kind {
            MapKind::Doubling => T::lit(2.0),
            MapKind::MannevillePomeau { alpha } => T::lit(2.0) + *alpha,
            MapKind::Perturbed { degree, amplitude } => T::from_usize_lossy(*degree) + amplitude.abs(),
            MapKind::Tabulated { lift } => {
                let mm = T::from_usize_lossy(lift.len() - 1);
                lift.windows(2).map(|w| (w[1] - w[0]) * mm).fold(T::zero(), T::max)
            }
        }
    }

    pub fn evaluate(&self, x: T) -> T {
        match self.kind {
            MapKind::Doubling => StateSpace::reduce(x + x),
            _ => StateSpace::reduce(self.lift(x)),
        }
    }

    pub fn iterate(&self, x: T, n: usize) -> T {
        (0..n).fold(x, |p, _| self.evaluate(p))
    }

    /// `(x, g x, ..., g^n x)`.
    pub fn orbit(&self, x: T, n: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(n + 1);
        let mut p = StateSpace::reduce(x);
        out.push(p);
        for _ in 0..n {
            p = self.evaluate(p);
            out.push(p);
        }
        out
    }

    /// Solves `lift(w) = target` for `w` in `[lo, hi]`.
    pub fn solve_lift(&self, target: T, mut lo: T, mut hi: T, branch: usize) -> Result<T> {
        if let MapKind::Doubling = self.kind {
            return Ok(target * T::lit(0.5));
        }
        let tol = T::root_tol();
        let flo = self.lift(lo) - target;
        let fhi = self.lift(hi) - target;
        if flo > T::zero() || fhi < T::zero() {
            return Err(Error::RootSolve {
                branch,
                target: target.as_f64(),
            });
        }
        let mut iters = 0;
        while hi - lo > tol {
            let mid = (lo + hi) * T::lit(0.5);
            if self.lift(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            iters += 1;
            if iters > BISECTION_MAX_ITERS {
                break;
            }
        }
        if hi - lo > tol * T::lit(16.0) {
            return Err(Error::RootSolve {
                branch,
                target: target.as_f64(),
            });
        }
        // one guarded Newton step
        let mut w = (lo + hi) * T::lit(0.5);
        let slope = self.derivative(w);
        if slope > T::zero() {
            let step = w - (self.lift(w) - target) / slope;
            if step >= lo && step <= hi {
                w = step;
            }
        }
        Ok(w)
    }

    /// All preimages of `y`, one per branch, as `(point, branch)`.
    pub fn inverse_branches(&self, y: T) -> Result<Vec<(T, usize)>> {
        let y = StateSpace::reduce(y);
        (0..self.degree)
            .map(|b| {
                let target = y + T::from_usize_lossy(b);
                let w = self.solve_lift(target, T::zero(), T::one(), b)?;
                Ok((StateSpace::reduce(w), b))
            })
            .collect()
    }

    /// Lifted preimage of `z` under the local inverse of `g` through `x`.
    pub fn local_inverse_lifted(&self, x: T, z: T) -> Result<T> {
        let base = self.lift(x);
        let target = base + StateSpace::signed_diff(StateSpace::reduce(base), z);
        self.solve_lift(target, x - T::one(), x + T::one(), usize::MAX)
    }

    /// The inverse branch `g_x^{-1}` through `x`, applied to `z`.
    pub fn local_inverse(&self, x: T, z: T) -> Result<T> {
        Ok(StateSpace::reduce(self.local_inverse_lifted(x, z)?))
    }

    /// Lifted arc `g_x^{-1}(B_{eps0}(g x))` around `x`.
    pub fn pullback_ball(&self, x: T) -> Result<(T, T)> {
        let base = self.lift(x);
        let lo = self.solve_lift(base - self.epsilon0, x - T::one(), x + T::one(), usize::MAX)?;
        let hi = self.solve_lift(base + self.epsilon0, x - T::one(), x + T::one(), usize::MAX)?;
        Ok((lo, hi))
    }

    /// `sigma(x)`: bound on the Lipschitz constant of the inverse branch through
    /// `x` on the `epsilon0`-ball about `g(x)`, i.e. `sup 1/g'` over the pulled-back ball.
    pub fn branch_lipschitz(&self, x: T) -> Result<T> {
        match &self.kind {
            MapKind::Doubling => Ok(T::lit(0.5)),
            MapKind::MannevillePomeau { .. } => {
                let (lo, hi) = self.pullback_ball(x)?;
                // 1/g' decreases on each (k, k + 1); its sup is at the left end or at an integer
                if hi.floor() > lo.floor() || lo == lo.floor() {
                    Ok(T::one())
                } else {
                    Ok(T::one() / self.derivative(lo))
                }
            }
            MapKind::Perturbed { .. } => {
                let (lo, hi) = self.pullback_ball(x)?;
                let m = self.lipschitz_grid - 1;
                let step = (hi - lo) / T::from_usize_lossy(m);
                let max = (0..=m)
                    .map(|i| T::one() / self.derivative(lo + step * T::from_usize_lossy(i)))
                    .fold(T::zero(), T::max);
                Ok(max * self.sigma_safety)
            }
            MapKind::Tabulated { lift } => {
                let (lo, hi) = self.pullback_ball(x)?;
                let m = lift.len() - 1;
                let mm = T::from_usize_lossy(m);
                let first = (lo * mm).floor().to_i64().unwrap();
                let last = (hi * mm).ceil().to_i64().unwrap();
                let mut max = T::zero();
                for cell in first..last {
                    let i = cell.rem_euclid(m as i64) as usize;
                    max = max.max(T::one() / ((lift[i + 1] - lift[i]) * mm));
                }
                Ok(max)
            }
        }
    }

    /// The `degree` lifted preimage arcs of the lifted arc `[lo, hi]`
    /// (`hi - lo < 1`), ordered by branch.
    pub fn preimage_arcs(&self, lo: T, hi: T) -> Result<Vec<(T, T)>> {
        let k = lo.floor();
        let (lo, hi) = (lo - k, hi - k);
        (0..self.degree)
            .map(|b| {
                let shift = T::from_usize_lossy(b);
                let a = self.solve_lift(lo + shift, -T::one(), T::lit(2.0), b)?;
                let c = self.solve_lift(hi + shift, -T::one(), T::lit(2.0), b)?;
                Ok((a, c))
            })
            .collect()
    }

    /// Smallest `N` with `g^N(B_eps(y))` the whole circle for every `y` on a
    /// uniform grid of [`MIXING_GRID`] points.
    pub fn mixing_time(&self, eps: T) -> Result<usize> {
        self.mixing_time_with(eps, MIXING_GRID, MIXING_CAP)
    }

    pub fn mixing_time_with(&self, eps: T, grid: usize, cap: usize) -> Result<usize> {
        if !(eps > T::zero() && eps <= self.epsilon0) {
            return Err(Error::invalid("eps", "must lie in (0, epsilon0]"));
        }
        let mut worst = 0;
        for i in 0..grid {
            let y = T::from_usize_lossy(i) / T::from_usize_lossy(grid);
            let n = self
                .arc_covering_time(y - eps, y + eps, cap)
                .ok_or(Error::MixingCap { cap, eps: eps.as_f64() })?;
            worst = worst.max(n);
        }
        Ok(worst)
    }

    /// Iterates needed before the image of the lifted arc covers the circle.
    pub fn arc_covering_time(&self, mut lo: T, mut hi: T, cap: usize) -> Option<usize> {
        let full = T::one() - T::lit(1e-12).max(T::epsilon() * T::lit(4.0));
        for n in 0..=cap {
            if hi - lo >= full {
                return Some(n);
            }
            lo = self.lift(lo);
            hi = self.lift(hi);
        }
        None
    }

    /// Backward chain along a computed forward orbit `o_0, ..., o_n`:
    /// `y_n = target` and `y_k = g_{o_k}^{-1}(y_{k+1})`.
    pub fn pull_back_along(&self, orbit: &[T], target: T) -> Result<Vec<T>> {
        let n = orbit.len() - 1;
        let mut chain = vec![T::zero(); n + 1];
        chain[n] = StateSpace::reduce(target);
        for k in (0..n).rev() {
            chain[k] = self.local_inverse(orbit[k], chain[k + 1])?;
        }
        Ok(chain)
    }
}

/// Hölder data `|phi(x) - phi(y)| <= constant * d(x, y)^exponent`.
/// An infinite constant records a potential that is not Hölder on the circle.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HolderData<T> {
    pub constant: T,
    pub exponent: T,
}

impl<T: Real> HolderData<T> {
    pub fn new(constant: T, exponent: T) -> Self {
        Self { constant, exponent }
    }

    pub fn lipschitz(constant: T) -> Self {
        Self::new(constant, T::one())
    }

    pub fn is_finite(&self) -> bool {
        self.constant.is_finite()
    }
}

#[derive(Clone)]
pub enum Potential<T> {
    Zero,
    Constant(T),
    /// `-t log g'`.
    Geometric {
        t: T,
    },
    /// `scale * d(x, 0)^exponent`.
    DistanceToZero {
        scale: T,
        exponent: T,
    },
    /// `amplitude * cos(2 pi x)`.
    Cosine {
        amplitude: T,
    },
    /// Periodic piecewise-linear interpolation of samples at `i / M`.
    Tabulated {
        values: Vec<T>,
        holder: HolderData<T>,
    },
    Custom {
        f: Arc<dyn Fn(T) -> T + Send + Sync>,
        holder: HolderData<T>,
    },
}

impl<T: Real> fmt::Debug for Potential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Zero => write!(f, "Zero"),
            Potential::Constant(c) => write!(f, "Constant({c})"),
            Potential::Geometric { t } => write!(f, "Geometric({t})"),
            Potential::DistanceToZero { scale, exponent } => {
                write!(f, "DistanceToZero({scale}, {exponent})")
            }
            Potential::Cosine { amplitude } => write!(f, "Cosine({amplitude})"),
            Potential::Tabulated { values, .. } => write!(f, "Tabulated({})", values.len()),
            Potential::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl<T: Real> Potential<T> {
    pub fn custom(f: impl Fn(T) -> T + Send + Sync + 'static, holder: HolderData<T>) -> Self {
        Potential::Custom { f: Arc::new(f), holder }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Potential::Zero | Potential::Constant(_))
    }

    pub fn evaluate(&self, map: &MapSystem<T>, x: T) -> T {
        match self {
            Potential::Zero => T::zero(),
            Potential::Constant(c) => *c,
            Potential::Geometric { t } => -*t * map.derivative(x).ln(),
            Potential::DistanceToZero { scale, exponent } => *scale * StateSpace::dist(x, T::zero()).powf(*exponent),
            Potential::Cosine { amplitude } => *amplitude * (T::TAU() * x).cos(),
            Potential::Tabulated { values, .. } => {
                let m = values.len();
                let s = StateSpace::reduce(x) * T::from_usize_lossy(m);
                let i = s.floor().to_usize().unwrap_or(0).min(m - 1);
                let t = s - T::from_usize_lossy(i);
                values[i] + (values[(i + 1) % m] - values[i]) * t
            }
            Potential::Custom { f, .. } => f(x),
        }
    }

    pub fn holder(&self, map: &MapSystem<T>) -> HolderData<T> {
        match self {
            Potential::Zero | Potential::Constant(_) => HolderData::lipschitz(T::zero()),
            Potential::Geometric { t } => match map.kind() {
                MapKind::Doubling => HolderData::lipschitz(T::zero()),
                MapKind::Perturbed { degree, amplitude } => {
                    // |(log g')'| = |2 pi a sin| / (d + a cos) <= 2 pi |a| / (d - |a|)
                    let d = T::from_usize_lossy(*degree);
                    let a = amplitude.abs();
                    HolderData::lipschitz(t.abs() * T::TAU() * a / (d - a))
                }
                // log g' jumps across the branch cut at 0
                MapKind::MannevillePomeau { alpha } => {
                    HolderData::new(if *t == T::zero() { T::zero() } else { T::infinity() }, *alpha)
                }
                MapKind::Tabulated { lift } => {
                    let first = lift[1] - lift[0];
                    let flat = lift.windows(2).all(|w| (w[1] - w[0] - first).abs() <= T::epsilon());
                    let c = if flat || *t == T::zero() {
                        T::zero()
                    } else {
                        T::infinity()
                    };
                    HolderData::lipschitz(c)
                }
            },
            // |d(x,0)^b - d(y,0)^b| <= |d(x,0) - d(y,0)|^b <= d(x,y)^b
            Potential::DistanceToZero { scale, exponent } => HolderData::new(scale.abs(), *exponent),
            Potential::Cosine { amplitude } => HolderData::lipschitz(T::TAU() * amplitude.abs()),
            Potential::Tabulated { holder, .. } | Potential::Custom { holder, .. } => *holder,
        }
    }

    /// `S_n phi(x) = sum_{k < n} phi(g^k x)`.
    pub fn birkhoff_sum(&self, map: &MapSystem<T>, x: T, n: usize) -> T {
        match self {
            Potential::Zero => T::zero(),
            Potential::Constant(c) => *c * T::from_usize_lossy(n),
            _ => {
                let mut p = x;
                let mut acc = T::zero();
                for _ in 0..n {
                    acc = acc + self.evaluate(map, p);
                    p = map.evaluate(p);
                }
                acc
            }
        }
    }

    /// Birkhoff sum along an already computed orbit (first `n` points).
    pub fn sum_along(&self, map: &MapSystem<T>, orbit: &[T], n: usize) -> T {
        orbit[..n].iter().map(|&p| self.evaluate(map, p)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mp() -> MapSystem<f64> {
        MapSystem::manneville_pomeau(0.5).unwrap()
    }

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn circle_metric() {
        assert_abs_diff_eq!(StateSpace::dist(0.1, 0.9), 0.2, epsilon = 1e-15);
        assert_eq!(StateSpace::dist(0.25, 0.75), 0.5);
        assert_eq!(StateSpace::reduce(-1e-20f64), 0.0);
        assert_abs_diff_eq!(StateSpace::signed_diff(0.9, 0.1), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(StateSpace::signed_diff(0.1, 0.9), -0.2, epsilon = 1e-15);
    }

    #[test]
    fn evaluate_examples() {
        let d = MapSystem::<f64>::doubling();
        assert_abs_diff_eq!(d.evaluate(0.3), 0.6, epsilon = 1e-15);
        assert_eq!(d.evaluate(0.75), 0.5);
        assert_eq!(mp().evaluate(0.0), 0.0);
    }

    #[test]
    fn inverse_branch_examples() {
        let d = MapSystem::<f64>::doubling();
        let pre: Vec<f64> = d.inverse_branches(0.5).unwrap().iter().map(|p| p.0).collect();
        assert_eq!(pre, vec![0.25, 0.75]);
        let pre: Vec<f64> = d.inverse_branches(0.0).unwrap().iter().map(|p| p.0).collect();
        assert_eq!(pre, vec![0.0, 0.5]);

        let pre = mp().inverse_branches(0.0).unwrap();
        assert_eq!(pre.len(), 2);
        assert!(pre[0].0.abs() < 1e-12);
        let oracle = bisect(|x| x + x.powf(1.5) - 1.0, 0.0, 1.0);
        assert_abs_diff_eq!(pre[1].0, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle, 0.5698402909980532, epsilon = 1e-12);
    }

    #[test]
    fn preimages_map_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let maps = [
            MapSystem::doubling(),
            mp(),
            MapSystem::perturbed(2, 0.5).unwrap(),
            MapSystem::perturbed(3, 1.2).unwrap(),
        ];
        for map in &maps {
            for _ in 0..500 {
                let y: f64 = rng.gen();
                let pre = map.inverse_branches(y).unwrap();
                assert_eq!(pre.len(), map.degree());
                for (x, _) in pre {
                    assert!(StateSpace::dist(map.evaluate(x), y) <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn branch_lipschitz_examples() {
        let d = MapSystem::<f64>::doubling();
        assert_eq!(d.branch_lipschitz(0.123).unwrap(), 0.5);
        assert_eq!(mp().branch_lipschitz(0.0).unwrap(), 1.0);

        // dense-grid oracle of 1/g' over the pulled-back ball about x = 0.5
        let m = mp();
        let x = 0.5;
        let gx = m.evaluate(x);
        let lo = bisect(|w| w + w.powf(1.5) - (gx - m.epsilon0()), 0.0, 1.0);
        let hi = bisect(|w| w + w.powf(1.5) - (gx + m.epsilon0()), 0.0, 1.0);
        let oracle = (0..=100_000)
            .map(|i| lo + (hi - lo) * i as f64 / 100_000.0)
            .map(|w| 1.0 / (1.0 + 1.5 * w.sqrt()))
            .fold(0.0, f64::max);
        let sigma = m.branch_lipschitz(x).unwrap();
        assert_abs_diff_eq!(sigma, oracle, epsilon = 1e-9);
    }

    #[test]
    fn branch_lipschitz_bounds_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let maps = [MapSystem::doubling(), mp(), MapSystem::perturbed(2, 0.5).unwrap()];
        for map in &maps {
            for _ in 0..300 {
                let x: f64 = rng.gen();
                let sigma = map.branch_lipschitz(x).unwrap();
                let gx = map.evaluate(x);
                let e0 = map.epsilon0();
                let y = gx + rng.gen_range(-e0..e0);
                let z = gx + rng.gen_range(-e0..e0);
                let dy = StateSpace::dist(map.local_inverse(x, y).unwrap(), map.local_inverse(x, z).unwrap());
                assert!(dy <= sigma * StateSpace::dist(y, z) + 1e-12, "{} at {x}", map.name());
            }
        }
    }

    #[test]
    fn mixing_time_examples() {
        let d = MapSystem::<f64>::doubling();
        assert_eq!(d.mixing_time(1.0 / 16.0).unwrap(), 3);
        assert_eq!(d.mixing_time(0.25).unwrap(), 1);

        // interval-image oracle for MP at y = 0 .. 1 on a coarse grid
        let m = mp();
        let tau = m.mixing_time(1.0 / 16.0).unwrap();
        let mut worst = 0;
        for i in 0..512 {
            let y = i as f64 / 512.0;
            let (mut lo, mut hi) = (y - 1.0 / 16.0, y + 1.0 / 16.0);
            let mut n = 0;
            let lift = |x: f64| {
                let k = x.floor();
                let f = x - k;
                f + f.powf(1.5) + 2.0 * k
            };
            while hi - lo < 1.0 - 1e-12 {
                lo = lift(lo);
                hi = lift(hi);
                n += 1;
            }
            worst = worst.max(n);
        }
        assert!(tau >= worst);
        assert!(tau < 64);
    }

    #[test]
    fn mixing_time_monotone_in_eps() {
        let m = mp();
        let eps = [1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0];
        let taus: Vec<usize> = eps.iter().map(|&e| m.mixing_time(e).unwrap()).collect();
        assert!(taus.windows(2).all(|w| w[1] <= w[0]), "{taus:?}");
    }

    #[test]
    fn mixing_time_rejects_large_eps() {
        let d = MapSystem::<f64>::doubling();
        assert!(matches!(
            d.mixing_time(0.3),
            Err(Error::InvalidParameter { field: "eps", .. })
        ));
    }

    #[test]
    fn invalid_maps_are_rejected() {
        assert!(MapSystem::<f64>::manneville_pomeau(1.0).is_err());
        assert!(MapSystem::<f64>::perturbed(2, 1.5).is_err());
        assert!(MapSystem::<f64>::tabulated(vec![0.0, 0.5, 0.4, 2.0]).is_err());
        assert!(MapSystem::<f64>::tabulated(vec![0.1, 1.0, 2.0]).is_err());
    }

    #[test]
    fn tabulated_matches_doubling() {
        let t = MapSystem::<f64>::tabulated((0..=8).map(|i| i as f64 / 4.0).collect()).unwrap();
        assert_eq!(t.degree(), 2);
        assert_abs_diff_eq!(t.evaluate(0.3), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(t.branch_lipschitz(0.7).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(t.epsilon0(), 0.25);
        assert_eq!(t.mixing_time(1.0 / 16.0).unwrap(), 3);
    }

    #[test]
    fn potential_holder_bounds_hold_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let map = MapSystem::perturbed(2, 0.5).unwrap();
        let pots = [
            Potential::Geometric { t: 1.0 },
            Potential::Cosine { amplitude: 0.7 },
            Potential::DistanceToZero {
                scale: 1.0,
                exponent: 0.5,
            },
            Potential::Constant(3.0),
        ];
        for phi in &pots {
            let h = phi.holder(&map);
            for _ in 0..10_000 {
                let (x, y): (f64, f64) = (rng.gen(), rng.gen());
                let lhs = (phi.evaluate(&map, x) - phi.evaluate(&map, y)).abs();
                assert!(
                    lhs <= h.constant * StateSpace::dist(x, y).powf(h.exponent) + 1e-12,
                    "{phi:?}"
                );
            }
        }
    }

    #[test]
    fn mp_geometric_potential_is_not_holder_on_circle() {
        let h = Potential::Geometric { t: 1.0 }.holder(&mp());
        assert!(!h.is_finite());
    }

    #[test]
    fn f32_doubling_works() {
        let d = MapSystem::<f32>::doubling();
        assert_eq!(d.evaluate(0.75f32), 0.5);
        assert_eq!(d.mixing_time(1.0 / 16.0).unwrap(), 3);
    }
}
