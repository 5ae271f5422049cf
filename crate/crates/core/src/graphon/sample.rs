//! Graph generation: midpoint sampling of 0-1 graphons and point-cloud
//! length matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::GraphInstance;
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

use super::kernel::Kernel;

/// Sample an `n`-node graph from a 0-1 graphon by midpoint evaluation:
/// `W_ij = w(x_i, x_j)` at cell midpoints, no loops. Edge lengths come from
/// the length kernel at the same midpoints, floored at `floor`.
///
/// Any evaluated graphon value other than exactly 0 or 1 is rejected, and
/// lengths above 1 are rejected.
pub fn sample_graph_from_graphon<S: Scalar>(
    w: &Kernel<S>,
    lengths: &Kernel<S>,
    n: usize,
    floor: S,
) -> Result<GraphInstance<S>> {
    w.validate()?;
    lengths.validate()?;
    let nn = S::from_usize_(n);
    let mid = |i: usize| (S::from_usize_(i) + S::f(0.5)) / nn;

    let mut adjacency = SquareMatrix::zeros(n);
    let mut lmat = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let (x, y) = (mid(i), mid(j));
            let wv = w.eval(x, y);
            if wv != S::zero() && wv != S::one() {
                return Err(Error::NonZeroOneGraphon {
                    x: x.as_f64(),
                    y: y.as_f64(),
                    value: wv.as_f64(),
                });
            }
            if i != j {
                adjacency.set_sym(i, j, wv);
            }
            let lv = lengths.eval(x, y).max(floor);
            if lv > S::one() {
                return Err(Error::KernelRange(format!(
                    "length kernel value {} above 1 at ({}, {})",
                    lv.as_f64(),
                    x.as_f64(),
                    y.as_f64()
                )));
            }
            lmat.set_sym(i, j, lv);
        }
    }
    GraphInstance::new(adjacency, lmat)
}

/// Pairwise Euclidean distances of `n` uniform random points in the
/// hypercube of side `1/sqrt(dim)` (so distances never exceed 1), floored
/// at `floor`. A zero floor reproduces the raw distances, which is what the
/// integrability checker needs to exhibit a divergent inverse-length norm.
/// The diagonal holds `floor`.
pub fn lengths_from_point_cloud<S: Scalar>(
    dim: usize,
    n: usize,
    seed: u64,
    floor: S,
) -> SquareMatrix<S> {
    assert!(dim >= 1, "point clouds need at least one dimension");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = 1.0 / (dim as f64).sqrt();
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| side * rng.gen::<f64>()).collect())
        .collect();
    let mut out = SquareMatrix::zeros(n);
    for i in 0..n {
        out[(i, i)] = floor;
        for j in (i + 1)..n {
            let d2: f64 = points[i]
                .iter()
                .zip(points[j].iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let d = S::f(d2.sqrt().min(1.0)).max(floor);
            out.set_sym(i, j, d);
        }
    }
    out
}
