//! Inverse-length integrability: whether `1/length` is uniformly bounded in
//! the Lebesgue exponent `q = 2(gamma + 1)/gamma`. Length families failing
//! this (unfloored low-dimensional point clouds, the raw distance kernel)
//! show a norm that grows without bound under refinement.

use serde::Serialize;

use crate::quadrature::unit_square_midpoint;
use crate::scalar::Scalar;

use super::kernel::Kernel;
use super::pixel::PixelFunction2;
use super::sample::lengths_from_point_cloud;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "verdict", content = "norm")]
pub enum NormBound<S> {
    Finite(S),
    Divergent,
}

impl<S: Scalar> NormBound<S> {
    /// The bound as a number, with divergence mapped to infinity.
    pub fn value(&self) -> S {
        match self {
            NormBound::Finite(v) => *v,
            NormBound::Divergent => S::infinity(),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, NormBound::Finite(_))
    }
}

/// Refinement trace and verdict for one inverse-length norm check.
#[derive(Clone, Debug, Serialize)]
pub struct IntegrabilityReport<S> {
    /// Lebesgue exponent `2(gamma + 1)/gamma`.
    pub exponent: S,
    /// `(resolution, norm)` pairs in refinement order.
    pub trace: Vec<(usize, S)>,
    pub bound: NormBound<S>,
}

pub fn inverse_length_exponent<S: Scalar>(gamma: S) -> S {
    S::f(2.0) * (gamma + S::one()) / gamma
}

fn verdict_from_trace<S: Scalar>(trace: &[(usize, S)], stability_tol: S) -> NormBound<S> {
    match trace {
        [] => NormBound::Divergent,
        [.., (_, last)] if !last.is_finite() => NormBound::Divergent,
        [_] => NormBound::Finite(trace[0].1),
        [.., (_, prev), (_, last)] => {
            let change = (*last - *prev).abs() / last.abs().max(S::f(1e-300));
            if change <= stability_tol {
                NormBound::Finite(*last)
            } else {
                NormBound::Divergent
            }
        }
    }
}

/// Check a closed-form length kernel by dyadic midpoint quadrature of
/// `length^(-q)` at resolutions `base, 2 base, ...` up to `cap`. Diagonal
/// cells are skipped, matching the pairwise sums this integral limits.
/// The verdict is `Finite` when the last two refinement levels agree to
/// `stability_tol` relative.
pub fn kernel_inverse_length_report<S: Scalar>(
    lengths: &Kernel<S>,
    gamma: S,
    base_resolution: usize,
    cap: usize,
    stability_tol: S,
) -> IntegrabilityReport<S> {
    let q = inverse_length_exponent(gamma);
    let mut trace = Vec::new();
    let mut m = base_resolution.max(2);
    while m <= cap {
        let integral = unit_square_midpoint(
            &|x, y| {
                let l = lengths.eval(x, y);
                if l <= S::zero() {
                    S::infinity()
                } else {
                    l.powf(-q)
                }
            },
            m,
            true,
        );
        let norm = integral.powf(S::one() / q);
        trace.push((m, norm));
        if !norm.is_finite() {
            break;
        }
        m *= 2;
    }
    let bound = verdict_from_trace(&trace, stability_tol);
    IntegrabilityReport {
        exponent: q,
        trace,
        bound,
    }
}

/// Exact inverse-length norm of a pixel length field at its own resolution,
/// diagonal cells excluded.
pub fn pixel_inverse_length_norm<S: Scalar>(lengths: &PixelFunction2<S>, gamma: S) -> NormBound<S> {
    let q = inverse_length_exponent(gamma);
    let n = lengths.n();
    let mut acc = S::zero();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let l = lengths.get(i, j);
            if l <= S::zero() {
                return NormBound::Divergent;
            }
            acc += l.powf(-q);
        }
    }
    let norm = (acc / (S::from_usize_(n) * S::from_usize_(n))).powf(S::one() / q);
    if norm.is_finite() {
        NormBound::Finite(norm)
    } else {
        NormBound::Divergent
    }
}

/// Empirical check of a point-cloud length family over growing sizes: the
/// per-size norms stabilize for integrable families and keep growing for
/// non-integrable ones. Each size averages the pairwise inverse-length sum
/// over `replicates` independent clouds, which suppresses the sampling
/// noise that a single cloud would leave right at the stability threshold.
pub fn point_cloud_inverse_length_report<S: Scalar>(
    dim: usize,
    gamma: S,
    seed: u64,
    floor: S,
    sizes: &[usize],
    replicates: usize,
    stability_tol: S,
) -> IntegrabilityReport<S> {
    let q = inverse_length_exponent(gamma);
    let replicates = replicates.max(1);
    let mut trace = Vec::new();
    for &n in sizes {
        let mut mean_integral = S::zero();
        for rep in 0..replicates {
            let rep_seed = seed
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add((n as u64) << 20)
                .wrapping_add(rep as u64);
            let lengths = lengths_from_point_cloud::<S>(dim, n, rep_seed, floor);
            let mut acc = S::zero();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let l = lengths[(i, j)];
                        acc += if l <= S::zero() {
                            S::infinity()
                        } else {
                            l.powf(-q)
                        };
                    }
                }
            }
            mean_integral += acc / (S::from_usize_(n) * S::from_usize_(n));
        }
        let norm = (mean_integral / S::from_usize_(replicates)).powf(S::one() / q);
        trace.push((n, norm));
        if !norm.is_finite() {
            break;
        }
    }
    let bound = verdict_from_trace(&trace, stability_tol);
    IntegrabilityReport {
        exponent: q,
        trace,
        bound,
    }
}
