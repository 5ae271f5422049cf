//! Symmetric eigenvalues for connectivity constants.
//!
//! Dense cyclic Jacobi up to `DENSE_EIGEN_LIMIT` nodes; above that, a
//! deflated power iteration on the shifted Laplacian extracts the second
//! smallest eigenvalue without forming the full spectrum.

use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

/// Largest size handled by the dense Jacobi path.
pub const DENSE_EIGEN_LIMIT: usize = 512;

/// All eigenvalues of a symmetric matrix, ascending. Cyclic Jacobi with a
/// tight off-diagonal threshold; the input is expected symmetric.
pub fn symmetric_eigenvalues<S: Scalar>(a: &SquareMatrix<S>) -> Vec<S> {
    let n = a.n();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![a[(0, 0)]];
    }
    let mut a = a.clone();
    let scale = a.max_abs().max(S::f(1e-300));
    let stop = S::epsilon() * scale * S::from_usize_(n);

    for _sweep in 0..100 {
        let mut off = S::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[(i, j)].abs());
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= stop * S::f(1e-2) {
                    continue;
                }
                // stable rotation: Golub & Van Loan sym. Schur 2x2
                let tau = (a[(q, q)] - a[(p, p)]) / (S::f(2.0) * apq);
                let t = if tau >= S::zero() {
                    S::one() / (tau + (S::one() + tau * tau).sqrt())
                } else {
                    -S::one() / (-tau + (S::one() + tau * tau).sqrt())
                };
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }

    let mut eig: Vec<S> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalue comparison"));
    eig
}

/// Second smallest eigenvalue of the (weighted) graph Laplacian built from a
/// symmetric nonnegative weight matrix. Diagonal entries of `weights` are
/// ignored. For `n == 1` the zero-mean constraint set is trivial and the
/// value is infinite by convention.
pub fn fiedler_value<S: Scalar>(weights: &SquareMatrix<S>) -> S {
    let n = weights.n();
    if n <= 1 {
        return S::infinity();
    }
    let lap = laplacian(weights);
    if n <= DENSE_EIGEN_LIMIT {
        symmetric_eigenvalues(&lap)[1]
    } else {
        fiedler_by_power_iteration(&lap)
    }
}

fn laplacian<S: Scalar>(weights: &SquareMatrix<S>) -> SquareMatrix<S> {
    let n = weights.n();
    let mut lap = SquareMatrix::zeros(n);
    for i in 0..n {
        let mut degree = S::zero();
        for j in 0..n {
            if j != i {
                let w = weights[(i, j)];
                lap[(i, j)] = -w;
                degree += w;
            }
        }
        lap[(i, i)] = degree;
    }
    lap
}

/// Power iteration on `c I - L` restricted to the zero-mean subspace: its
/// top eigenvalue there is `c - lambda_2`.
fn fiedler_by_power_iteration<S: Scalar>(lap: &SquareMatrix<S>) -> S {
    let n = lap.n();
    let c = {
        let mut max_deg = S::zero();
        for i in 0..n {
            max_deg = max_deg.max(lap[(i, i)]);
        }
        S::f(2.0) * max_deg + S::one()
    };

    // deterministic start: ramp plus a small wiggle, projected to zero mean
    let mut v: Vec<S> = (0..n)
        .map(|i| S::from_usize_(i) + S::f(0.01) * S::f((i as f64).sin()))
        .collect();
    project_zero_mean(&mut v);
    normalize(&mut v);

    let mut rho_prev = S::zero();
    for iter in 0..200_000usize {
        let mut next = vec![S::zero(); n];
        for i in 0..n {
            let mut acc = c * v[i];
            for j in 0..n {
                acc -= lap[(i, j)] * v[j];
            }
            next[i] = acc;
        }
        project_zero_mean(&mut next);
        let rho = dot(&next, &v);
        normalize(&mut next);
        v = next;
        if iter > 2 && (rho - rho_prev).abs() <= S::f(1e-13) * c {
            return c - rho;
        }
        rho_prev = rho;
    }
    c - rho_prev
}

fn project_zero_mean<S: Scalar>(v: &mut [S]) {
    let n = S::from_usize_(v.len());
    let mean = v.iter().copied().sum::<S>() / n;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

fn normalize<S: Scalar>(v: &mut [S]) {
    let norm = dot(v, v).sqrt();
    if norm > S::zero() {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete_weights(n: usize) -> SquareMatrix<f64> {
        SquareMatrix::from_fn(n, |i, j| if i == j { 0.0 } else { 1.0 })
    }

    #[test]
    fn complete_graph_spectrum() {
        // Laplacian of K_n has eigenvalues {0, n, ..., n}
        let eig = symmetric_eigenvalues(&laplacian(&complete_weights(5)));
        assert!(eig[0].abs() < 1e-12);
        for &e in &eig[1..] {
            assert!((e - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn path_graph_fiedler() {
        // path on 3 nodes: spectrum {0, 1, 3}
        let mut w = SquareMatrix::<f64>::zeros(3);
        w.set_sym(0, 1, 1.0);
        w.set_sym(1, 2, 1.0);
        assert!((fiedler_value(&w) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_graph_has_zero_fiedler() {
        let mut w = SquareMatrix::<f64>::zeros(4);
        w.set_sym(0, 1, 1.0);
        w.set_sym(2, 3, 1.0);
        assert!(fiedler_value(&w).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_matches_dense_on_k_n() {
        let lap = laplacian(&complete_weights(40));
        let v = fiedler_by_power_iteration(&lap);
        assert!((v - 40.0).abs() < 1e-8, "got {v}");
    }

    #[test]
    fn power_iteration_matches_dense_on_band_graph() {
        let n = 60usize;
        let w = SquareMatrix::<f64>::from_fn(n, |i, j| {
            let d = i.abs_diff(j);
            if d > 0 && d <= 20 {
                1.0
            } else {
                0.0
            }
        });
        let dense = symmetric_eigenvalues(&laplacian(&w))[1];
        let iterative = fiedler_by_power_iteration(&laplacian(&w));
        assert!((dense - iterative).abs() < 1e-7 * (1.0 + dense.abs()));
    }
}
