//! Discretized transfer operator `(L psi)(x) = sum_{g y = x} e^{phi(y)} psi(y)` on a
//! uniform circle grid with linear interpolation, and its leading eigendata.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{MapSystem, Potential, StateSpace};
use crate::scalar::Real;

/// Tabulated preimages and weights at the nodes `i / N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorGrid<T> {
    pub grid_size: usize,
    pub degree: usize,
    pub nodes: Vec<T>,
    /// `preimages[i * degree + b]`: preimage of node `i` on branch `b`.
    pub preimages: Vec<T>,
    /// `e^{phi}` at the matching preimage; strictly positive.
    pub weights: Vec<T>,
}

pub fn build_operator<T: Real>(map: &MapSystem<T>, phi: &Potential<T>, grid_size: usize) -> Result<OperatorGrid<T>> {
    if grid_size < map.degree() * 8 {
        return Err(Error::invalid(
            "grid_size",
            format!("must be at least {}", map.degree() * 8),
        ));
    }
    let nodes: Vec<T> = (0..grid_size)
        .map(|i| T::from_usize_lossy(i) / T::from_usize_lossy(grid_size))
        .collect();
    let pre = nodes
        .par_iter()
        .map(|&x| map.inverse_branches(x))
        .collect::<Result<Vec<_>>>()?;
    let preimages: Vec<T> = pre.iter().flat_map(|v| v.iter().map(|p| p.0)).collect();
    let weights: Vec<T> = preimages.iter().map(|&y| phi.evaluate(map, y).exp()).collect();
    if weights.iter().any(|w| !(*w > T::zero()) || !w.is_finite()) {
        return Err(Error::invalid("phi", "operator weights must be finite and positive"));
    }
    Ok(OperatorGrid {
        grid_size,
        degree: map.degree(),
        nodes,
        preimages,
        weights,
    })
}

impl<T: Real> OperatorGrid<T> {
    /// Interpolation cell and fraction of the point `y`.
    fn locate(&self, y: T) -> (usize, usize, T) {
        let n = self.grid_size;
        let s = StateSpace::reduce(y) * T::from_usize_lossy(n);
        let i = s.floor();
        let f = s - i;
        let i = i.to_usize().unwrap_or(0) % n;
        (i, (i + 1) % n, f)
    }

    pub fn apply(&self, psi: &[T]) -> Vec<T> {
        let d = self.degree;
        (0..self.grid_size)
            .into_par_iter()
            .map(|i| {
                (0..d)
                    .map(|b| {
                        let k = i * d + b;
                        let (j0, j1, f) = self.locate(self.preimages[k]);
                        self.weights[k] * ((T::one() - f) * psi[j0] + f * psi[j1])
                    })
                    .sum()
            })
            .collect()
    }

    /// Dual action on node masses: `sum_j (L^* nu)_j psi_j = sum_i nu_i (L psi)_i`.
    pub fn apply_adjoint(&self, nu: &[T]) -> Vec<T> {
        let d = self.degree;
        let mut out = vec![T::zero(); self.grid_size];
        for (i, &mass) in nu.iter().enumerate().take(self.grid_size) {
            for b in 0..d {
                let k = i * d + b;
                let (j0, j1, f) = self.locate(self.preimages[k]);
                let m = mass * self.weights[k];
                out[j0] = out[j0] + m * (T::one() - f);
                out[j1] = out[j1] + m * f;
            }
        }
        out
    }
}

/// Leading eigendata of a discretized operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenData<T> {
    pub lambda: T,
    pub log_lambda: T,
    /// `h`, normalized to max 1.
    pub eigenfunction: Vec<T>,
    /// `nu`, node masses summing to 1.
    pub eigenmeasure: Vec<T>,
    /// `h nu`, renormalized to sum 1.
    pub equilibrium_density: Vec<T>,
    pub iterations: usize,
    /// `max |L h - lambda h|`.
    pub residual: T,
}

fn sup_diff<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).fold(T::zero(), T::max)
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Power iteration for `(lambda, h)` and for `nu` on the adjoint; stops when
/// successive Rayleigh quotients differ by less than `tol` and the normalized
/// iterate has settled to `sqrt(tol)`.
pub fn leading_eigen<T: Real>(op: &OperatorGrid<T>, tol: T, max_iters: usize) -> Result<EigenData<T>> {
    if !(tol > T::zero()) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let settle = tol.sqrt();
    let n = op.grid_size;
    let mut h = vec![T::one(); n];
    let mut lambda = T::zero();
    let mut iters = 0usize;
    let mut converged = false;
    let mut change = T::infinity();
    while iters < max_iters {
        iters += 1;
        let lh = op.apply(&h);
        let q = dot(&lh, &h) / dot(&h, &h);
        let m = lh.iter().copied().fold(T::zero(), T::max);
        if !(m > T::zero()) {
            return Err(Error::NoConvergence {
                iters,
                change: f64::NAN,
            });
        }
        let next: Vec<T> = lh.iter().map(|&v| v / m).collect();
        let vec_change = sup_diff(&next, &h);
        change = (q - lambda).abs();
        h = next;
        let done = change < tol * q.max(T::one()) && vec_change < settle;
        lambda = q;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iters,
            change: change.as_f64(),
        });
    }

    let mut nu = vec![T::one() / T::from_usize_lossy(n); n];
    let mut nu_iters = 0usize;
    loop {
        nu_iters += 1;
        let next = op.apply_adjoint(&nu);
        let s: T = next.iter().copied().sum();
        let next: Vec<T> = next.iter().map(|&v| v / s).collect();
        let c: T = next.iter().zip(&nu).map(|(&x, &y)| (x - y).abs()).sum();
        nu = next;
        if c < settle {
            break;
        }
        if nu_iters >= max_iters {
            return Err(Error::NoConvergence {
                iters: nu_iters,
                change: c.as_f64(),
            });
        }
    }

    let lh = op.apply(&h);
    let residual = lh
        .iter()
        .zip(&h)
        .map(|(&a, &b)| (a - lambda * b).abs())
        .fold(T::zero(), T::max);
    let prod: Vec<T> = h.iter().zip(&nu).map(|(&a, &b)| a * b).collect();
    let total: T = prod.iter().copied().sum();
    Ok(EigenData {
        lambda,
        log_lambda: lambda.ln(),
        eigenfunction: h,
        eigenmeasure: nu,
        equilibrium_density: prod.into_iter().map(|v| v / total).collect(),
        iterations: iters,
        residual,
    })
}

/// Invariance defect and pressure agreement of the discrete equilibrium state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport<T> {
    /// Max over test functions of `|int psi o g dmu - int psi dmu|`.
    pub invariance_defect: T,
    /// `|log lambda - rate|` when a geometric rate is supplied.
    pub pressure_match: Option<T>,
}

pub fn check_equilibrium<T: Real>(
    map: &MapSystem<T>,
    op: &OperatorGrid<T>,
    eigen: &EigenData<T>,
    test_functions: &[&(dyn Fn(T) -> T + Sync)],
    pressure_rate: Option<T>,
) -> EquilibriumReport<T> {
    let mu = &eigen.equilibrium_density;
    let invariance_defect = test_functions
        .iter()
        .map(|psi| {
            let (a, b) = op
                .nodes
                .iter()
                .zip(mu)
                .fold((T::zero(), T::zero()), |(a, b), (&x, &m)| {
                    (a + m * psi(map.evaluate(x)), b + m * psi(x))
                });
            (a - b).abs()
        })
        .fold(T::zero(), T::max);
    EquilibriumReport {
        invariance_defect,
        pressure_match: pressure_rate.map(|r| (eigen.log_lambda - r).abs()),
    }
}

/// `(node, h, nu, density)` rows.
pub fn eigen_rows<T: Real>(op: &OperatorGrid<T>, eigen: &EigenData<T>) -> Vec<[T; 4]> {
    (0..op.grid_size)
        .map(|i| {
            [
                op.nodes[i],
                eigen.eigenfunction[i],
                eigen.eigenmeasure[i],
                eigen.equilibrium_density[i],
            ]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn constant_function_images() {
        let d = MapSystem::doubling();
        let one = vec![1.0; 64];
        let op = build_operator(&d, &Potential::Zero, 64).unwrap();
        assert!(op.apply(&one).iter().all(|&v| v == 2.0));
        let op = build_operator(&d, &Potential::Constant(0.3), 64).unwrap();
        assert!(op.apply(&one).iter().all(|&v| (v - 2.0 * 0.3f64.exp()).abs() < 1e-14));
        let op = build_operator(&d, &Potential::Geometric { t: 1.0 }, 64).unwrap();
        assert!(op.apply(&one).iter().all(|&v| (v - 1.0).abs() < 1e-14));
        assert!(build_operator(&d, &Potential::Zero, 15).is_err());
    }

    #[test]
    fn doubling_eigen_examples() {
        let d = MapSystem::doubling();
        let op = build_operator(&d, &Potential::Zero, 256).unwrap();
        let e = leading_eigen(&op, 1e-13, 1000).unwrap();
        assert_eq!(e.lambda, 2.0);
        assert!(e.eigenfunction.iter().all(|&v| v == 1.0));
        assert!(e.eigenmeasure.iter().all(|&v: &f64| (v - 1.0 / 256.0).abs() < 1e-12));
        for t in [0.5, 1.0, 2.0] {
            let op = build_operator(&d, &Potential::Constant(-t * LN_2), 256).unwrap();
            let e = leading_eigen(&op, 1e-13, 1000).unwrap();
            assert_abs_diff_eq!(e.lambda, 2f64.powf(1.0 - t), epsilon = 1e-12);
        }
    }

    #[test]
    fn lambda_scales_with_shift() {
        let m = MapSystem::manneville_pomeau(0.5).unwrap();
        let phi = Potential::Cosine { amplitude: 0.4 };
        let op = build_operator(&m, &phi, 512).unwrap();
        let e = leading_eigen(&op, 1e-12, 5000).unwrap();
        let shifted = Potential::custom(
            move |x| 0.4 * (2.0 * PI * x).cos() + 0.7,
            crate::maps::HolderData::lipschitz(0.8 * PI),
        );
        let op2 = build_operator(&m, &shifted, 512).unwrap();
        let e2 = leading_eigen(&op2, 1e-12, 5000).unwrap();
        assert_abs_diff_eq!(e2.lambda / e.lambda, 0.7f64.exp(), epsilon = 1e-9);
        assert!(e.eigenfunction.iter().all(|&v| v > 0.0));
        assert!(e.residual < 1e-5);
    }

    #[test]
    fn doubling_lebesgue_is_invariant() {
        let d = MapSystem::doubling();
        let op = build_operator(&d, &Potential::Zero, 4096).unwrap();
        let e = leading_eigen(&op, 1e-12, 100).unwrap();
        let sin = |x: f64| (2.0 * PI * x).sin();
        let one = |_: f64| 1.0;
        let r = check_equilibrium(&d, &op, &e, &[&sin], Some(LN_2));
        assert!(r.invariance_defect < 1e-6);
        assert_eq!(r.pressure_match, Some(0.0));
        let r = check_equilibrium(&d, &op, &e, &[&one], None);
        assert_eq!(r.invariance_defect, 0.0);
    }

    #[test]
    fn grid_refinement_converges() {
        let p = MapSystem::perturbed(2, 0.3).unwrap();
        let phi = Potential::Cosine { amplitude: 0.5 };
        let lambdas: Vec<f64> = [256, 512, 1024, 2048]
            .iter()
            .map(|&n| {
                leading_eigen(&build_operator(&p, &phi, n).unwrap(), 1e-13, 5000)
                    .unwrap()
                    .lambda
            })
            .collect();
        let diffs: Vec<f64> = lambdas.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        assert!(diffs.windows(2).all(|w| w[1] <= w[0]), "{diffs:?}");
    }
}
