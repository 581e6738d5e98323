//! Hyperbolic-time windows and the good/bad split of orbit segments.
//!
//! A segment `(x, n)` is good when every trailing window average
//! `(1 / (n - j)) sum_{i = j}^{n - 1} log sigma(g^i x)` is below `log sigma`,
//! and bad when the full window (`j = 0`) is not. Good segments contract
//! uniformly along the inverse branch from `g^n x` back to `x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::MapSystem;
use crate::orbit::OrbitSegment;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionConfig<T> {
    sigma: T,
}

impl<T: Real> DecompositionConfig<T> {
    pub fn new(sigma: T) -> Result<Self> {
        if sigma > T::zero() && sigma < T::one() {
            Ok(Self { sigma })
        } else {
            Err(Error::invalid("sigma", "must lie in (0, 1)"))
        }
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn log_sigma(&self) -> T {
        self.sigma.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Good,
    Bad,
    /// Passes the full window but fails some later one.
    Neither,
}

/// Split `n = p + g + s`; the prefix part is always empty here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub p_len: usize,
    pub g_len: usize,
    pub s_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionSample<T> {
    pub horizon: usize,
    pub points: Vec<(T, Option<usize>)>,
}

impl<T> ObstructionSample<T> {
    pub fn hits(&self) -> impl Iterator<Item = &(T, Option<usize>)> {
        self.points.iter().filter(|p| p.1.is_some())
    }
}

/// `log sigma(g^i x)` for `i < n`.
pub fn log_sigma_orbit<T: Real>(map: &MapSystem<T>, x: T, n: usize) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(n);
    let mut p = x;
    for i in 0..n {
        out.push(map.branch_lipschitz(p)?.ln());
        if i + 1 < n {
            p = map.evaluate(p);
        }
    }
    Ok(out)
}

fn suffix_sums<T: Real>(logs: &[T]) -> Vec<T> {
    let mut s = vec![T::zero(); logs.len() + 1];
    for i in (0..logs.len()).rev() {
        s[i] = s[i + 1] + logs[i];
    }
    s
}

/// Window `[j, n)` average strictly below `log_sigma`.
pub fn window_from_logs<T: Real>(logs: &[T], j: usize, log_sigma: T) -> bool {
    let n = logs.len();
    let sum: T = logs[j..].iter().copied().sum();
    sum < T::from_usize_lossy(n - j) * log_sigma
}

pub fn good_from_logs<T: Real>(logs: &[T], log_sigma: T) -> bool {
    let n = logs.len();
    if n == 0 {
        return false;
    }
    let s = suffix_sums(logs);
    (0..n).all(|j| s[j] < T::from_usize_lossy(n - j) * log_sigma)
}

pub fn bad_from_logs<T: Real>(logs: &[T], log_sigma: T) -> bool {
    !logs.is_empty() && !window_from_logs(logs, 0, log_sigma)
}

/// Smallest `K >= 1` such that every average over `[0, m)`, `K <= m <= len`,
/// is at least `log_sigma`.
pub fn obstruction_index<T: Real>(logs: &[T], log_sigma: T) -> Option<usize> {
    let mut prefix = Vec::with_capacity(logs.len() + 1);
    prefix.push(T::zero());
    for &l in logs {
        prefix.push(*prefix.last().unwrap() + l);
    }
    let mut k = None;
    for m in (1..=logs.len()).rev() {
        if prefix[m] >= T::from_usize_lossy(m) * log_sigma {
            k = Some(m);
        } else {
            break;
        }
    }
    k
}

/// `x` in `Sigma_sigma^{j, n}`.
pub fn in_sigma_window<T: Real>(
    map: &MapSystem<T>,
    cfg: &DecompositionConfig<T>,
    x: T,
    j: usize,
    n: usize,
) -> Result<bool> {
    if j >= n {
        return Err(Error::invalid("j", "window start must satisfy j <= n - 1"));
    }
    let logs = log_sigma_orbit(map, x, n)?;
    Ok(window_from_logs(&logs, j, cfg.log_sigma()))
}

pub fn classify_logs<T: Real>(logs: &[T], log_sigma: T) -> Classification {
    if bad_from_logs(logs, log_sigma) {
        Classification::Bad
    } else if good_from_logs(logs, log_sigma) {
        Classification::Good
    } else {
        Classification::Neither
    }
}

pub fn classify_segment<T: Real>(
    map: &MapSystem<T>,
    cfg: &DecompositionConfig<T>,
    seg: OrbitSegment<T>,
) -> Result<Classification> {
    let logs = log_sigma_orbit(map, seg.start, seg.length)?;
    Ok(classify_logs(&logs, cfg.log_sigma()))
}

/// Split index from precomputed logs: the smallest `m` whose suffix window is
/// bad, or `n` when no suffix is.
pub fn split_index<T: Real>(logs: &[T], log_sigma: T) -> usize {
    let n = logs.len();
    let s = suffix_sums(logs);
    (0..n)
        .find(|&m| s[m] >= T::from_usize_lossy(n - m) * log_sigma)
        .unwrap_or(n)
}

/// Splits `(x, n)` into a good prefix `(x, g_len)` and a bad suffix
/// `(g^{g_len} x, s_len)`, with the bad suffix as long as possible.
pub fn decompose<T: Real>(
    map: &MapSystem<T>,
    cfg: &DecompositionConfig<T>,
    seg: OrbitSegment<T>,
) -> Result<Decomposition> {
    let logs = log_sigma_orbit(map, seg.start, seg.length)?;
    let m = split_index(&logs, cfg.log_sigma());
    Ok(Decomposition {
        p_len: 0,
        g_len: m,
        s_len: seg.length - m,
    })
}

/// Finite-horizon membership proxy for the obstruction set: per point, the
/// smallest `K <= k_max` with averages `>= log sigma` for all `n` in `[K, k_max]`.
pub fn obstruction_sample<T: Real>(
    map: &MapSystem<T>,
    cfg: &DecompositionConfig<T>,
    points: &[T],
    k_max: usize,
) -> Result<ObstructionSample<T>> {
    if k_max == 0 {
        return Err(Error::invalid("k_max", "must be at least 1"));
    }
    let points = points
        .iter()
        .map(|&x| {
            let logs = log_sigma_orbit(map, x, k_max)?;
            Ok((x, obstruction_index(&logs, cfg.log_sigma())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ObstructionSample { horizon: k_max, points })
}
