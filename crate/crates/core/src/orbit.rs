//! Bowen metrics, Birkhoff sums, cylinder enumeration and partition sums.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::decomposition::{self, DecompositionConfig};
use crate::error::{Error, Result};
use crate::maps::{MapSystem, Potential, StateSpace};
use crate::scalar::Real;

/// Default cap on cylinder-tree nodes.
pub const NODE_CAP: usize = 1 << 22;

/// An orbit segment `(x, n)`: the points `x, g x, ..., g^{n-1} x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitSegment<T> {
    pub start: T,
    pub length: usize,
}

impl<T: Real> OrbitSegment<T> {
    pub fn new(start: T, length: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::invalid("length", "orbit segments have length >= 1"));
        }
        Ok(Self { start, length })
    }
}

/// A collection of orbit segments, given by a membership test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Collection<T> {
    Full,
    /// `G_sigma`: every trailing window average of `log sigma(g^i x)` is below `log sigma`.
    Good {
        sigma: T,
    },
    /// `S_sigma`: the full-window average is at least `log sigma`.
    Bad {
        sigma: T,
    },
    /// Finite-horizon proxy for `A_k`: `n > k` and the averages over `[0, m)` stay
    /// at or above `log sigma` for every `m` in `[k, n]`.
    Obstruction {
        sigma: T,
        k: usize,
    },
}

impl<T: Real> Collection<T> {
    pub fn contains(&self, map: &MapSystem<T>, x: T, n: usize) -> Result<bool> {
        match *self {
            Collection::Full => Ok(true),
            Collection::Good { sigma } => {
                let cfg = DecompositionConfig::new(sigma)?;
                let logs = decomposition::log_sigma_orbit(map, x, n)?;
                Ok(decomposition::good_from_logs(&logs, cfg.log_sigma()))
            }
            Collection::Bad { sigma } => {
                let cfg = DecompositionConfig::new(sigma)?;
                let logs = decomposition::log_sigma_orbit(map, x, n)?;
                Ok(decomposition::bad_from_logs(&logs, cfg.log_sigma()))
            }
            Collection::Obstruction { sigma, k } => {
                if n <= k {
                    return Ok(false);
                }
                let cfg = DecompositionConfig::new(sigma)?;
                let logs = decomposition::log_sigma_orbit(map, x, n)?;
                Ok(decomposition::obstruction_index(&logs, cfg.log_sigma()).is_some_and(|kk| kk <= k))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Collection::Full => "full".into(),
            Collection::Good { sigma } => format!("good({sigma})"),
            Collection::Bad { sigma } => format!("bad({sigma})"),
            Collection::Obstruction { sigma, k } => format!("obstruction({sigma},{k})"),
        }
    }
}

pub fn birkhoff_sum<T: Real>(map: &MapSystem<T>, phi: &Potential<T>, seg: OrbitSegment<T>) -> T {
    phi.birkhoff_sum(map, seg.start, seg.length)
}

/// `d_n(x, y) = max_{0 <= k < n} d(g^k x, g^k y)`.
pub fn bowen_distance<T: Real>(map: &MapSystem<T>, x: T, y: T, n: usize) -> T {
    let (mut p, mut q) = (x, y);
    let mut d = T::zero();
    for k in 0..n {
        d = d.max(StateSpace::dist(p, q));
        if k + 1 < n {
            p = map.evaluate(p);
            q = map.evaluate(q);
        }
    }
    d
}

/// Bowen distance between two precomputed orbits over their first `n` points.
pub fn orbit_distance<T: Real>(a: &[T], b: &[T], n: usize) -> T {
    a[..n]
        .iter()
        .zip(&b[..n])
        .map(|(&p, &q)| StateSpace::dist(p, q))
        .fold(T::zero(), T::max)
}

/// An `n`-cylinder: the arc of points whose first `n` branch indices equal `address`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cylinder<T> {
    pub address: Vec<u16>,
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Cylinder<T> {
    pub fn midpoint(&self) -> T {
        StateSpace::reduce((self.lo + self.hi) * T::lit(0.5))
    }
}

/// Cylinder arcs at every depth `0..=n`, each level in lexicographic address order.
pub fn cylinder_levels<T: Real>(map: &MapSystem<T>, n: usize, node_cap: usize) -> Result<Vec<Vec<Cylinder<T>>>> {
    let d = map.degree();
    let mut needed = 0usize;
    let mut width = 1usize;
    for _ in 0..=n {
        needed = needed.saturating_add(width);
        width = width.saturating_mul(d);
    }
    if needed > node_cap {
        return Err(Error::NodeCap { needed, cap: node_cap });
    }
    let mut levels = vec![vec![Cylinder {
        address: Vec::new(),
        lo: T::zero(),
        hi: T::one(),
    }]];
    for _ in 0..n {
        let prev = levels.last().unwrap();
        let mut next = Vec::with_capacity(prev.len() * d);
        for cyl in prev {
            for (b, (lo, hi)) in map.preimage_arcs(cyl.lo, cyl.hi)?.into_iter().enumerate() {
                let mut address = Vec::with_capacity(cyl.address.len() + 1);
                address.push(b as u16);
                address.extend_from_slice(&cyl.address);
                next.push(Cylinder { address, lo, hi });
            }
        }
        next.sort_by(|a, b| a.address.cmp(&b.address));
        levels.push(next);
    }
    Ok(levels)
}

/// A cylinder representative with its orbit and Birkhoff weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T> {
    pub point: T,
    pub address: Vec<u16>,
    pub orbit: Vec<T>,
    pub weight: T,
}

/// Cylinder midpoints at depth `n` whose segment `(x, n)` lies in `coll`,
/// in lexicographic address order.
pub fn candidates_from_level<T: Real>(
    map: &MapSystem<T>,
    phi: Option<&Potential<T>>,
    coll: &Collection<T>,
    level: &[Cylinder<T>],
    n: usize,
) -> Result<Vec<Candidate<T>>> {
    let mut out = Vec::new();
    for cyl in level {
        let x = cyl.midpoint();
        if !coll.contains(map, x, n)? {
            continue;
        }
        let orbit = map.orbit(x, n);
        let weight = phi.map_or(T::zero(), |p| p.sum_along(map, &orbit, n));
        out.push(Candidate {
            point: x,
            address: cyl.address.clone(),
            orbit,
            weight,
        });
    }
    Ok(out)
}

pub fn candidates<T: Real>(
    map: &MapSystem<T>,
    phi: Option<&Potential<T>>,
    coll: &Collection<T>,
    n: usize,
    node_cap: usize,
) -> Result<Vec<Candidate<T>>> {
    let levels = cylinder_levels(map, n, node_cap)?;
    candidates_from_level(map, phi, coll, &levels[n], n)
}

/// Spatial hash on `(x_0, x_{n-1})`: two points closer than `eps` in `d_n`
/// fall in adjacent cells on both coordinates.
pub(crate) struct CellGrid {
    cells: usize,
    map: HashMap<(usize, usize), Vec<usize>>,
}

impl CellGrid {
    pub(crate) fn new<T: Real>(eps: T) -> Self {
        let cells = (T::one() / eps).floor().to_usize().unwrap_or(1).clamp(1, 1 << 24);
        Self {
            cells,
            map: HashMap::new(),
        }
    }

    fn cell<T: Real>(&self, x: T) -> usize {
        (x * T::from_usize_lossy(self.cells))
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(self.cells - 1)
    }

    pub(crate) fn key<T: Real>(&self, orbit: &[T], n: usize) -> (usize, usize) {
        (self.cell(orbit[0]), self.cell(orbit[n - 1]))
    }

    fn offsets(&self, c: usize) -> Vec<usize> {
        let mut v = vec![c, (c + 1) % self.cells, (c + self.cells - 1) % self.cells];
        v.sort_unstable();
        v.dedup();
        v
    }

    pub(crate) fn insert(&mut self, key: (usize, usize), idx: usize) {
        self.map.entry(key).or_default().push(idx);
    }

    pub(crate) fn neighbours(&self, key: (usize, usize)) -> impl Iterator<Item = usize> + '_ {
        let rows = self.offsets(key.0);
        let cols = self.offsets(key.1);
        rows.into_iter()
            .flat_map(move |r| cols.clone().into_iter().map(move |c| (r, c)))
            .filter_map(move |k| self.map.get(&k))
            .flatten()
            .copied()
    }
}

/// Greedy maximal `(n, eps)`-separated subset (pairwise `d_n >= eps`) of the
/// candidates, visited in `order`. Returns indices into `cands`.
pub fn greedy_separated_in_order<T: Real>(cands: &[Candidate<T>], order: &[usize], n: usize, eps: T) -> Vec<usize> {
    let mut grid = CellGrid::new(eps);
    let mut chosen = Vec::new();
    for &i in order {
        let key = grid.key(&cands[i].orbit, n);
        let blocked = grid
            .neighbours(key)
            .any(|j| orbit_distance(&cands[i].orbit, &cands[j].orbit, n) < eps);
        if !blocked {
            grid.insert(key, i);
            chosen.push(i);
        }
    }
    chosen
}

/// Descending weight, ties by lexicographic address.
pub fn descending_order<T: Real>(cands: &[Candidate<T>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..cands.len()).collect();
    idx.sort_by(|&a, &b| {
        cands[b]
            .weight
            .partial_cmp(&cands[a].weight)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| cands[a].address.cmp(&cands[b].address))
    });
    idx
}

/// Ascending weight, ties by lexicographic address.
pub fn ascending_order<T: Real>(cands: &[Candidate<T>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..cands.len()).collect();
    idx.sort_by(|&a, &b| {
        cands[a]
            .weight
            .partial_cmp(&cands[b].weight)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| cands[a].address.cmp(&cands[b].address))
    });
    idx
}

/// `log sum exp(w_i)` over the selected weights; `-inf` for an empty selection.
pub fn log_sum_exp<T: Real>(weights: impl IntoIterator<Item = T>) -> T {
    let w: Vec<T> = weights.into_iter().collect();
    let max = w.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    max + w.iter().map(|&v| (v - max).exp()).sum::<T>().ln()
}

/// Separated-set and spanning-cover sums for one depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionSums<T> {
    pub log_sep: T,
    pub log_span: T,
    pub sep_size: usize,
    pub span_size: usize,
}

/// Both partition sums from one candidate pool. The separated set is built in
/// descending weight order; it is maximal, hence also a spanning cover, so the
/// reported spanning sum is the lighter of it and the ascending-order greedy cover.
pub fn partition_sums<T: Real>(cands: &[Candidate<T>], n: usize, eps: T) -> PartitionSums<T> {
    let sep = greedy_separated_in_order(cands, &descending_order(cands), n, eps);
    let cover = greedy_separated_in_order(cands, &ascending_order(cands), n, eps);
    let log_sep = log_sum_exp(sep.iter().map(|&i| cands[i].weight));
    let log_cover = log_sum_exp(cover.iter().map(|&i| cands[i].weight));
    let (log_span, span_size) = if log_cover <= log_sep {
        (log_cover, cover.len())
    } else {
        (log_sep, sep.len())
    };
    PartitionSums {
        log_sep,
        log_span,
        sep_size: sep.len(),
        span_size,
    }
}

/// Greedy `(n, eps)`-separated subset of the depth-`n` representatives of `coll`.
pub fn separated_set<T: Real>(
    map: &MapSystem<T>,
    coll: &Collection<T>,
    n: usize,
    eps: T,
    phi: Option<&Potential<T>>,
) -> Result<Vec<T>> {
    check_eps(eps)?;
    let cands = candidates(map, phi, coll, n, NODE_CAP)?;
    let order = if phi.is_some() {
        descending_order(&cands)
    } else {
        (0..cands.len()).collect()
    };
    Ok(greedy_separated_in_order(&cands, &order, n, eps)
        .into_iter()
        .map(|i| cands[i].point)
        .collect())
}

pub fn partition_sum_sep<T: Real>(
    map: &MapSystem<T>,
    phi: &Potential<T>,
    coll: &Collection<T>,
    n: usize,
    eps: T,
) -> Result<T> {
    check_eps(eps)?;
    let cands = candidates(map, Some(phi), coll, n, NODE_CAP)?;
    Ok(partition_sums(&cands, n, eps).log_sep.exp())
}

pub fn partition_sum_span<T: Real>(
    map: &MapSystem<T>,
    phi: &Potential<T>,
    coll: &Collection<T>,
    n: usize,
    eps: T,
) -> Result<T> {
    check_eps(eps)?;
    let cands = candidates(map, Some(phi), coll, n, NODE_CAP)?;
    Ok(partition_sums(&cands, n, eps).log_span.exp())
}

pub(crate) fn check_eps<T: Real>(eps: T) -> Result<()> {
    if eps > T::zero() {
        Ok(())
    } else {
        Err(Error::invalid("eps", "must be positive"))
    }
}
