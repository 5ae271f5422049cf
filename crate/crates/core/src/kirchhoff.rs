//! The node-balance linear system: a weighted graph Laplacian solved on the
//! zero-mean subspace.
//!
//! For conductivities `B` and sources `S` the system reads
//! `-(1/N^2) sum_j W_ij B_ij (P_j - P_i) = S_i`. Pressures are determined up
//! to a constant; the zero-mean representative is the canonical one here,
//! matching the zero-mean function spaces of the continuum formulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{connected_components, ConductivityMatrix, GraphInstance, ModelParams};
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;
use crate::source::SourceVector;

/// Default relative solve tolerance: downstream energy identities are
/// asserted at 1e-8 or looser.
pub const DEFAULT_SOLVE_TOL: f64 = 1e-10;

/// Node count at or below which the dense pinned factorization is used.
pub const DENSE_SOLVE_LIMIT: usize = 256;

/// Zero-mean nodal pressures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureVector<S> {
    values: Vec<S>,
}

impl<S: Scalar> PressureVector<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        let n = values.len().max(1);
        let sum: S = values.iter().copied().sum();
        let scale = values.iter().fold(S::one(), |a, &v| a.max(v.abs()));
        let unit = S::f(1e-10).max(S::epsilon() * S::f(100.0));
        if sum.abs() > unit * S::from_usize_(n) * scale {
            return Err(Error::Shape(format!(
                "pressure sum {:e} is not zero",
                sum.as_f64()
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize) -> S {
        self.values[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Dense,
    ConjugateGradient,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport<S> {
    pub iterations: usize,
    pub residual_norm: S,
    pub method: SolveMethod,
}

/// Solve the node-balance system for zero-mean pressures.
///
/// The residual of the returned solution satisfies `||res|| <= tol * ||S||`.
/// Fails with [`Error::SingularSystem`] when the positive-conductivity graph
/// is disconnected and with [`Error::UnbalancedSources`] when the datum does
/// not conserve mass.
pub fn solve_kirchhoff<S: Scalar>(
    graph: &GraphInstance<S>,
    b: &ConductivityMatrix<S>,
    s: &SourceVector<S>,
    tol: S,
) -> Result<(PressureVector<S>, SolveReport<S>)> {
    solve_kirchhoff_with(graph, b, s, tol, None, None)
}

/// Same as [`solve_kirchhoff`] with the method forced and/or a custom
/// initial iterate for the conjugate-gradient path.
pub fn solve_kirchhoff_with<S: Scalar>(
    graph: &GraphInstance<S>,
    b: &ConductivityMatrix<S>,
    s: &SourceVector<S>,
    tol: S,
    method: Option<SolveMethod>,
    x0: Option<&[S]>,
) -> Result<(PressureVector<S>, SolveReport<S>)> {
    let n = graph.n();
    if b.n() != n || s.n() != n {
        return Err(Error::Shape(format!(
            "graph has {n} nodes, conductivities {0}, sources {1}",
            b.n(),
            s.n()
        )));
    }
    let weights = SquareMatrix::from_fn(n, |i, j| {
        if i != j && graph.has_edge(i, j) {
            b.get(i, j)
        } else {
            S::zero()
        }
    });
    let (p, report) = solve_weighted_system(&weights, s.values(), tol, method, x0)?;
    Ok((PressureVector::new(p)?, report))
}

/// Solve `(1/n^2) L_M P = s` for the zero-mean `P`, where `L_M` is the
/// Laplacian of an arbitrary symmetric nonnegative weight matrix `M`
/// (diagonal ignored). This is the shared backend for the discrete Kirchhoff
/// law and the piecewise-constant Galerkin systems.
pub fn solve_weighted_system<S: Scalar>(
    weights: &SquareMatrix<S>,
    s: &[S],
    tol: S,
    method: Option<SolveMethod>,
    x0: Option<&[S]>,
) -> Result<(Vec<S>, SolveReport<S>)> {
    let n = weights.n();
    if s.len() != n {
        return Err(Error::Shape(format!(
            "weights are {n}x{n} but rhs has {} entries",
            s.len()
        )));
    }

    let sum: S = s.iter().copied().sum();
    let scale = s
        .iter()
        .fold(S::zero(), |a, &v| a.max(v.abs()))
        .max(S::one());
    let unit = S::f(1e-12).max(S::epsilon() * S::f(10.0));
    if sum.abs() > unit * S::from_usize_(n) * scale {
        return Err(Error::UnbalancedSources {
            sum: sum.as_f64(),
            tol: 1e-12 * n as f64 * scale.as_f64(),
        });
    }

    let components = connected_components(n, |i, j| weights[(i, j)] > S::zero());
    if components.len() != 1 {
        return Err(Error::SingularSystem);
    }

    let s_norm = l2_norm(s);
    if s_norm == S::zero() {
        let report = SolveReport {
            iterations: 0,
            residual_norm: S::zero(),
            method: method.unwrap_or(SolveMethod::Dense),
        };
        return Ok((vec![S::zero(); n], report));
    }

    // rhs of the unscaled Laplacian system L_M P = n^2 s
    let nsq = S::from_usize_(n) * S::from_usize_(n);
    let rhs: Vec<S> = s.iter().map(|&v| v * nsq).collect();

    let method = method.unwrap_or(if n <= DENSE_SOLVE_LIMIT {
        SolveMethod::Dense
    } else {
        SolveMethod::ConjugateGradient
    });

    let (mut p, iterations) = match method {
        SolveMethod::Dense => (dense_pinned_solve(weights, &rhs), 0),
        SolveMethod::ConjugateGradient => cg_solve(weights, &rhs, tol, x0)?,
    };
    project_zero_mean(&mut p);

    let residual_norm = residual_norm(weights, &p, s);
    if residual_norm > tol * s_norm {
        return Err(Error::SolverStall {
            residual: residual_norm.as_f64(),
            iterations,
        });
    }

    Ok((
        p,
        SolveReport {
            iterations,
            residual_norm,
            method,
        },
    ))
}

/// Euclidean norm of the node-balance defect `s_i - (1/n^2) (L_M p)_i`.
pub fn residual_norm<S: Scalar>(weights: &SquareMatrix<S>, p: &[S], s: &[S]) -> S {
    let n = weights.n();
    let nsq = S::from_usize_(n) * S::from_usize_(n);
    let mut acc = S::zero();
    for i in 0..n {
        let mut flux = S::zero();
        for j in 0..n {
            if j != i {
                flux += weights[(i, j)] * (p[i] - p[j]);
            }
        }
        let d = s[i] - flux / nsq;
        acc += d * d;
    }
    acc.sqrt()
}

/// Pin node 0 to zero pressure, factorize the reduced Laplacian, solve with
/// one step of iterative refinement, and recenter.
fn dense_pinned_solve<S: Scalar>(weights: &SquareMatrix<S>, rhs: &[S]) -> Vec<S> {
    let n = weights.n();
    if n == 1 {
        return vec![S::zero()];
    }
    let m = n - 1;
    let mut a = SquareMatrix::zeros(m);
    for i in 0..m {
        let mut degree = S::zero();
        for j in 0..n {
            if j != i + 1 {
                degree += weights[(i + 1, j)];
            }
        }
        a[(i, i)] = degree;
        for j in 0..m {
            if j != i {
                a[(i, j)] = -weights[(i + 1, j + 1)];
            }
        }
    }
    let b: Vec<S> = rhs[1..].to_vec();
    let lu = LuFactors::factorize(a.clone());
    let mut x = lu.solve(&b);

    // one refinement pass squashes the factorization round-off
    let mut res = vec![S::zero(); m];
    for i in 0..m {
        let mut acc = b[i];
        for j in 0..m {
            acc -= a[(i, j)] * x[j];
        }
        res[i] = acc;
    }
    let delta = lu.solve(&res);
    for i in 0..m {
        x[i] += delta[i];
    }

    let mut p = Vec::with_capacity(n);
    p.push(S::zero());
    p.extend_from_slice(&x);
    p
}

struct LuFactors<S> {
    lu: SquareMatrix<S>,
    perm: Vec<usize>,
}

impl<S: Scalar> LuFactors<S> {
    fn factorize(mut a: SquareMatrix<S>) -> Self {
        let m = a.n();
        let mut perm: Vec<usize> = (0..m).collect();
        for k in 0..m {
            let mut pivot = k;
            let mut best = a[(k, k)].abs();
            for i in (k + 1)..m {
                let v = a[(i, k)].abs();
                if v > best {
                    best = v;
                    pivot = i;
                }
            }
            if pivot != k {
                for j in 0..m {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(pivot, j)];
                    a[(pivot, j)] = tmp;
                }
                perm.swap(k, pivot);
            }
            let akk = a[(k, k)];
            if akk == S::zero() {
                continue;
            }
            for i in (k + 1)..m {
                let l = a[(i, k)] / akk;
                a[(i, k)] = l;
                for j in (k + 1)..m {
                    let v = a[(k, j)];
                    a[(i, j)] -= l * v;
                }
            }
        }
        Self { lu: a, perm }
    }

    #[allow(clippy::needless_range_loop)]
    fn solve(&self, b: &[S]) -> Vec<S> {
        let m = b.len();
        let mut y: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..m {
            let mut acc = y[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * y[j];
            }
            y[i] = acc;
        }
        for i in (0..m).rev() {
            let mut acc = y[i];
            for j in (i + 1)..m {
                acc -= self.lu[(i, j)] * y[j];
            }
            y[i] = acc / self.lu[(i, i)];
        }
        y
    }
}

/// Jacobi-preconditioned conjugate gradient on the zero-mean subspace. Both
/// the operator range and the datum are zero-mean; the preconditioned
/// residual is re-projected each iteration so the Krylov space stays there.
fn cg_solve<S: Scalar>(
    weights: &SquareMatrix<S>,
    rhs: &[S],
    tol: S,
    x0: Option<&[S]>,
) -> Result<(Vec<S>, usize)> {
    let n = weights.n();
    let degrees: Vec<S> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| weights[(i, j)])
                .sum::<S>()
        })
        .collect();

    let apply = |x: &[S], out: &mut [S]| {
        for i in 0..n {
            let mut acc = S::zero();
            for j in 0..n {
                if j != i {
                    acc += weights[(i, j)] * (x[i] - x[j]);
                }
            }
            out[i] = acc;
        }
    };

    let mut x = match x0 {
        Some(v) if v.len() == n => v.to_vec(),
        _ => vec![S::zero(); n],
    };
    project_zero_mean(&mut x);

    let rhs_norm = l2_norm(rhs);
    let target = tol * rhs_norm * S::f(0.5);

    let mut r = vec![S::zero(); n];
    apply(&x, &mut r);
    for i in 0..n {
        r[i] = rhs[i] - r[i];
    }

    let mut p = vec![S::zero(); n];
    let mut q = vec![S::zero(); n];
    let mut rho_prev = S::zero();
    let max_iter = 20 * n + 200;

    for iter in 0..max_iter {
        if l2_norm(&r) <= target {
            return Ok((x, iter));
        }
        let mut z: Vec<S> = (0..n).map(|i| r[i] / degrees[i]).collect();
        project_zero_mean(&mut z);
        let rho: S = dot(&r, &z);
        if iter == 0 {
            p.copy_from_slice(&z);
        } else {
            let beta = rho / rho_prev;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= S::zero() {
            return Err(Error::SolverStall {
                residual: l2_norm(&r).as_f64(),
                iterations: iter,
            });
        }
        let alpha = rho / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        rho_prev = rho;
    }

    if l2_norm(&r) <= target {
        Ok((x, max_iter))
    } else {
        Err(Error::SolverStall {
            residual: l2_norm(&r).as_f64(),
            iterations: max_iter,
        })
    }
}

fn project_zero_mean<S: Scalar>(v: &mut [S]) {
    let n = S::from_usize_(v.len());
    let mean = v.iter().copied().sum::<S>() / n;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

fn l2_norm<S: Scalar>(v: &[S]) -> S {
    dot(v, v).sqrt()
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}

/// Signed defect of the symmetrized weak formulation tested with `phi`:
/// `(1/2N^2) sum_ij W B (P_j - P_i)(phi_j - phi_i) - sum_i S_i phi_i`.
/// Zero (to solver tolerance) exactly when `p` solves the node balance.
/// `phi` must be zero-mean.
pub fn weak_form_residual<S: Scalar>(
    graph: &GraphInstance<S>,
    b: &ConductivityMatrix<S>,
    p: &PressureVector<S>,
    s: &SourceVector<S>,
    phi: &[S],
) -> S {
    let n = graph.n();
    let nsq = S::from_usize_(n) * S::from_usize_(n);
    let mut bilinear = S::zero();
    for i in 0..n {
        for j in 0..n {
            if graph.has_edge(i, j) {
                bilinear += b.get(i, j) * (p.get(j) - p.get(i)) * (phi[j] - phi[i]);
            }
        }
    }
    let linear: S = (0..n).map(|i| s.get(i) * phi[i]).sum();
    bilinear / (S::f(2.0) * nsq) - linear
}

/// A-priori pressure bound: checks
/// `sum_ij (P_i - P_j)^2 <= 8 N^2 / (r lambda)^2 * int sigma^2`
/// with both sides evaluated directly. `params.lambda` must be a valid
/// connectivity constant for the graph. A 1e-9 relative slack absorbs
/// round-off in the equality case (complete graph, floor-constant
/// conductivities, parallel sources).
pub fn verify_kirchhoff_estimate<S: Scalar>(
    graph: &GraphInstance<S>,
    params: &ModelParams<S>,
    _s: &SourceVector<S>,
    p: &PressureVector<S>,
    sigma_l2_sq: S,
) -> bool {
    let n = graph.n();
    let mut lhs = S::zero();
    for i in 0..n {
        for j in 0..n {
            let d = p.get(i) - p.get(j);
            lhs += d * d;
        }
    }
    let nsq = S::from_usize_(n) * S::from_usize_(n);
    let rl = params.r * params.lambda;
    let rhs = S::f(8.0) * nsq / (rl * rl) * sigma_l2_sq;
    lhs <= rhs * (S::one() + S::f(1e-9))
}
