//! Pressure estimates on segment collections and the pressure-gap test.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{MapSystem, Potential};
use crate::orbit::{self, CellGrid, Collection, Cylinder, NODE_CAP};
use crate::scalar::Real;

/// Growth-rate estimate of `log Lambda_n` at a fixed scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureEstimate<T> {
    pub collection: String,
    pub eps: T,
    pub n_values: Vec<usize>,
    /// `log Lambda^sep_n`; `-inf` where the collection has no representative.
    pub log_partition_sums: Vec<T>,
    pub set_sizes: Vec<usize>,
    /// Least-squares slope of `log Lambda_n` against `n` over the upper half of the range.
    pub rate: T,
    /// Standard error of that slope.
    pub rate_uncertainty: T,
    /// Max of `(1/n) log Lambda_n` over the top quartile of `n`.
    pub limsup_proxy: T,
    /// Empty collection at every fitted depth: pressure is `-inf`.
    pub empty: bool,
}

pub(crate) fn fit_rate<T: Real>(n_values: &[usize], logs: &[T]) -> (T, T, T, bool) {
    let n_max = *n_values.last().unwrap();
    let lower = n_max.div_ceil(2);
    let pts: Vec<(T, T)> = n_values
        .iter()
        .zip(logs)
        .filter(|(&n, l)| n >= lower && l.is_finite())
        .map(|(&n, &l)| (T::from_usize_lossy(n), l))
        .collect();
    let quart = n_max - n_max / 4;
    let limsup = n_values
        .iter()
        .zip(logs)
        .filter(|(&n, _)| n >= quart)
        .map(|(&n, &l)| l / T::from_usize_lossy(n))
        .fold(T::neg_infinity(), T::max);
    match pts.len() {
        0 => (T::neg_infinity(), T::zero(), limsup, true),
        1 => {
            let r = pts[0].1 / pts[0].0;
            (r, r.abs().max(T::one()), limsup, false)
        }
        m => {
            let mf = T::from_usize_lossy(m);
            let mx = pts.iter().map(|p| p.0).sum::<T>() / mf;
            let my = pts.iter().map(|p| p.1).sum::<T>() / mf;
            let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
            let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let slope = sxy / sxx;
            let unc = if m > 2 {
                let ssr: T = pts
                    .iter()
                    .map(|p| {
                        let r = p.1 - (my + slope * (p.0 - mx));
                        r * r
                    })
                    .sum();
                (ssr / (mf - T::lit(2.0)) / sxx).sqrt()
            } else {
                T::zero()
            };
            (slope, unc, limsup, false)
        }
    }
}

fn estimate_from_levels<T: Real>(
    map: &MapSystem<T>,
    phi: &Potential<T>,
    coll: &Collection<T>,
    levels: &[Vec<Cylinder<T>>],
    eps: T,
) -> Result<PressureEstimate<T>> {
    let n_max = levels.len() - 1;
    let per_n = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let cands = orbit::candidates_from_level(map, Some(phi), coll, &levels[n], n)?;
            let sums = orbit::partition_sums(&cands, n, eps);
            Ok((sums.log_sep, sums.sep_size))
        })
        .collect::<Result<Vec<_>>>()?;
    let n_values: Vec<usize> = (1..=n_max).collect();
    let log_partition_sums: Vec<T> = per_n.iter().map(|p| p.0).collect();
    let set_sizes = per_n.iter().map(|p| p.1).collect();
    let (rate, rate_uncertainty, limsup_proxy, empty) = fit_rate(&n_values, &log_partition_sums);
    Ok(PressureEstimate {
        collection: coll.label(),
        eps,
        n_values,
        log_partition_sums,
        set_sizes,
        rate,
        rate_uncertainty,
        limsup_proxy,
        empty,
    })
}

fn validate_scale<T: Real>(eps: T, n_max: usize) -> Result<()> {
    orbit::check_eps(eps)?;
    if n_max < 4 {
        return Err(Error::invalid("n_max", "must be at least 4"));
    }
    Ok(())
}

/// `P(D, phi, eps)` estimated from greedy separated sets at depths `1..=n_max`.
pub fn pressure_at_scale<T: Real>(
    map: &MapSystem<T>,
    phi: &Potential<T>,
    coll: &Collection<T>,
    eps: T,
    n_max: usize,
) -> Result<PressureEstimate<T>> {
    validate_scale(eps, n_max)?;
    let levels = orbit::cylinder_levels(map, n_max, NODE_CAP)?;
    estimate_from_levels(map, phi, coll, &levels, eps)
}

/// One estimate per scale, sharing the cylinder tree.
pub fn pressure_table<T: Real>(
    map: &MapSystem<T>,
    phi: &Potential<T>,
    coll: &Collection<T>,
    eps_list: &[T],
    n_max: usize,
) -> Result<Vec<PressureEstimate<T>>> {
    for &e in eps_list {
        validate_scale(e, n_max)?;
    }
    let levels = orbit::cylinder_levels(map, n_max, NODE_CAP)?;
    eps_list
        .iter()
        .map(|&e| estimate_from_levels(map, phi, coll, &levels, e))
        .collect()
}

/// A greedy cover realising the Katok quantity `s_n(phi, delta, mu, eta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KatokCover<T> {
    pub value: T,
    pub centers: Vec<usize>,
    pub covered_mass: T,
}

/// Greedy approximation of `s_n`: centers taken from the sample, each step adding
/// the closed `(n, delta)`-ball covering the most uncovered sample mass (ties:
/// smaller `S_n phi`, then sample order) until mass `eta` is covered.
pub fn katok_cover<T: Real>(
    map: &MapSystem<T>,
    phi: &Potential<T>,
    sample: &[T],
    delta: T,
    eta: T,
    n: usize,
) -> Result<KatokCover<T>> {
    if sample.is_empty() {
        return Err(Error::Empty("orbit sample"));
    }
    if !(eta > T::zero()) {
        return Err(Error::invalid("eta", "must be positive"));
    }
    if eta > T::one() {
        return Err(Error::CoverInfeasible {
            eta: eta.as_f64(),
            mass: 1.0,
        });
    }
    orbit::check_eps(delta)?;
    let n = n.max(1);
    let total = sample.len();
    let orbits: Vec<Vec<T>> = sample.iter().map(|&x| map.orbit(x, n)).collect();
    let weights: Vec<T> = orbits.iter().map(|o| phi.sum_along(map, o, n)).collect();

    let mut grid = CellGrid::new(delta);
    for (i, o) in orbits.iter().enumerate() {
        grid.insert(grid.key(o, n), i);
    }
    let balls: Vec<Vec<usize>> = (0..total)
        .into_par_iter()
        .map(|i| {
            let mut v: Vec<usize> = grid
                .neighbours(grid.key(&orbits[i], n))
                .filter(|&j| orbit::orbit_distance(&orbits[i], &orbits[j], n) <= delta)
                .collect();
            v.sort_unstable();
            v
        })
        .collect();

    // rank 0 is preferred on equal gain
    let mut by_weight: Vec<usize> = (0..total).collect();
    by_weight.sort_by(|&a, &b| {
        weights[a]
            .partial_cmp(&weights[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut rank = vec![0usize; total];
    for (r, &i) in by_weight.iter().enumerate() {
        rank[i] = r;
    }

    let need = (eta * T::from_usize_lossy(total))
        .ceil()
        .to_usize()
        .unwrap_or(total)
        .max(1);
    let mut covered = vec![false; total];
    let mut covered_count = 0usize;
    let mut heap: BinaryHeap<(usize, Reverse<usize>, usize)> =
        (0..total).map(|i| (balls[i].len(), Reverse(rank[i]), i)).collect();
    let mut centers = Vec::new();
    while covered_count < need {
        let Some((_, r, i)) = heap.pop() else {
            return Err(Error::CoverInfeasible {
                eta: eta.as_f64(),
                mass: covered_count as f64 / total as f64,
            });
        };
        let gain = balls[i].iter().filter(|&&j| !covered[j]).count();
        if gain == 0 {
            continue;
        }
        if let Some(top) = heap.peek() {
            if (gain, r) < (top.0, top.1) {
                heap.push((gain, r, i));
                continue;
            }
        }
        for &j in &balls[i] {
            if !covered[j] {
                covered[j] = true;
                covered_count += 1;
            }
        }
        centers.push(i);
    }
    let value = centers.iter().map(|&i| weights[i].exp()).sum();
    Ok(KatokCover {
        value,
        centers,
        covered_mass: T::from_usize_lossy(covered_count) / T::from_usize_lossy(total),
    })
}

pub fn katok_sn<T: Real>(
    map: &MapSystem<T>,
    phi: &Potential<T>,
    sample: &[T],
    delta: T,
    eta: T,
    n: usize,
) -> Result<T> {
    Ok(katok_cover(map, phi, sample, delta, eta, n)?.value)
}

/// Full pressure against the pressure of the bad collection at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport<T> {
    pub sigma: T,
    pub eps: T,
    pub n_max: usize,
    pub p_full: PressureEstimate<T>,
    pub p_bad: PressureEstimate<T>,
    /// `p_full.rate - p_bad.rate`; `+inf` when the bad collection is empty.
    pub gap: T,
    pub combined_uncertainty: T,
    pub hypothesis_holds: bool,
}

impl<T: Real> GapReport<T> {
    fn new(sigma: T, eps: T, n_max: usize, p_full: PressureEstimate<T>, p_bad: PressureEstimate<T>) -> Self {
        let gap = if p_bad.empty {
            T::infinity()
        } else {
            p_full.rate - p_bad.rate
        };
        let combined_uncertainty = p_full.rate_uncertainty.hypot(p_bad.rate_uncertainty);
        Self {
            sigma,
            eps,
            n_max,
            hypothesis_holds: gap > combined_uncertainty,
            p_full,
            p_bad,
            gap,
            combined_uncertainty,
        }
    }
}

/// Pressure gap `P(phi) - P(S_sigma, phi)` at scale `eps` for each threshold.
pub fn gap_report<T: Real>(
    map: &MapSystem<T>,
    phi: &Potential<T>,
    sigma_grid: &[T],
    eps: T,
    n_max: usize,
) -> Result<Vec<GapReport<T>>> {
    validate_scale(eps, n_max)?;
    for &s in sigma_grid {
        if !(s > T::zero() && s < T::one()) {
            return Err(Error::invalid("sigma", "must lie in (0, 1)"));
        }
    }
    let levels = orbit::cylinder_levels(map, n_max, NODE_CAP)?;
    let p_full = estimate_from_levels(map, phi, &Collection::Full, &levels, eps)?;
    sigma_grid
        .iter()
        .map(|&sigma| {
            let p_bad = estimate_from_levels(map, phi, &Collection::Bad { sigma }, &levels, eps)?;
            Ok(GapReport::new(sigma, eps, n_max, p_full.clone(), p_bad))
        })
        .collect()
}

/// Aggregated hypotheses of the uniqueness criterion at the tested scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtReport {
    pub specification: bool,
    pub bowen: bool,
    pub gap: bool,
    pub gap_value: f64,
    pub passed: bool,
    pub blockers: Vec<String>,
    pub note: String,
}

pub const SCALE_NOTE: &str = "numerical evidence at the tested scales and depths only; not a proof of uniqueness";

pub fn ct_hypothesis_check<T: Real>(gap: &GapReport<T>, bowen_finite: bool, spec_verified: bool) -> CtReport {
    let mut blockers = Vec::new();
    if !spec_verified {
        blockers.push("specification".to_string());
    }
    if !bowen_finite {
        blockers.push("bowen".to_string());
    }
    if !gap.hypothesis_holds {
        blockers.push(format!(
            "gap: {} does not exceed uncertainty {} at sigma = {}",
            gap.gap, gap.combined_uncertainty, gap.sigma
        ));
    }
    CtReport {
        specification: spec_verified,
        bowen: bowen_finite,
        gap: gap.hypothesis_holds,
        gap_value: gap.gap.as_f64(),
        passed: blockers.is_empty(),
        blockers,
        note: SCALE_NOTE.to_string(),
    }
}
