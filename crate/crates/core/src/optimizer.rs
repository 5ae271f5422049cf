//! Minimization of the rescaled energy over the conductivity feasible set.
//!
//! Projected gradient with Armijo backtracking: for the metabolic exponent
//! above one the energy is strictly convex on the convex feasible set, so
//! the monotone descent converges to the unique global minimizer. A grid
//! brute-force oracle covers instances with at most a few edges.

use serde::{Deserialize, Serialize};

use crate::energy::{energy_given_pressures, gradient_given_pressures, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::graph::{ConductivityMatrix, GraphInstance, ModelParams};
use crate::kirchhoff::{solve_kirchhoff, DEFAULT_SOLVE_TOL};
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;
use crate::source::SourceVector;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OptimizerOptions<S> {
    pub max_iters: usize,
    /// Stopping threshold on the projected-gradient norm.
    pub grad_tol: S,
    pub step_init: S,
    pub armijo_c: S,
    pub backtrack_factor: S,
    pub seed: u64,
}

impl<S: Scalar> Default for OptimizerOptions<S> {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            grad_tol: S::f(1e-8),
            step_init: S::one(),
            armijo_c: S::f(1e-4),
            backtrack_factor: S::f(0.5),
            seed: 0,
        }
    }
}

impl<S: Scalar> OptimizerOptions<S> {
    // negated comparisons reject NaN options as well
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: S| v > S::zero() && v < S::one();
        if self.max_iters == 0
            || !(self.grad_tol > S::zero())
            || !(self.step_init > S::zero())
            || !open_unit(self.armijo_c)
            || !open_unit(self.backtrack_factor)
        {
            return Err(Error::InvalidParams(
                "optimizer options must be positive with armijo_c, backtrack_factor in (0, 1)"
                    .into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimizeReport<S> {
    pub iterations: usize,
    pub final_energy: EnergyBreakdown<S>,
    pub projected_grad_norm: S,
    /// Edges (unordered) where the conductivity sits exactly on the floor.
    pub floor_active_edges: usize,
    pub converged: bool,
}

/// Minimize the rescaled energy over the feasible set, starting from the
/// balanced-scale guess `B = max(r, nu^(-1/(gamma+1)))` on every edge.
pub fn minimize_discrete<S: Scalar>(
    graph: &GraphInstance<S>,
    s: &SourceVector<S>,
    params: &ModelParams<S>,
    opts: &OptimizerOptions<S>,
) -> Result<(ConductivityMatrix<S>, MinimizeReport<S>)> {
    let guess = params
        .r
        .max(params.nu.powf(-S::one() / (params.gamma + S::one())));
    let b0 = ConductivityMatrix::constant(graph, guess);
    minimize_discrete_from(graph, s, params, opts, b0)
}

/// Minimize from a caller-supplied feasible start.
pub fn minimize_discrete_from<S: Scalar>(
    graph: &GraphInstance<S>,
    s: &SourceVector<S>,
    params: &ModelParams<S>,
    opts: &OptimizerOptions<S>,
    b0: ConductivityMatrix<S>,
) -> Result<(ConductivityMatrix<S>, MinimizeReport<S>)> {
    params.validate()?;
    opts.validate()?;
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    let tol = S::f(DEFAULT_SOLVE_TOL);

    let mut b = project(graph, b0.values().clone(), params.r);
    let (mut p, _) = solve_kirchhoff(graph, &b, s, tol)?;
    let mut energy = energy_given_pressures(graph, &b, s, params, &p)?;
    let mut step = opts.step_init;
    let mut grad_norm = S::zero();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..opts.max_iters {
        iterations = iter;
        let grad = gradient_given_pressures(graph, &b, params, &p);
        grad_norm = projected_gradient_norm(&grad, &b, &edges, params.r);
        if grad_norm <= opts.grad_tol {
            converged = true;
            break;
        }

        // Armijo backtracking on the projected step
        let mut alpha = step;
        let mut accepted = false;
        for _ in 0..80 {
            let mut trial = b.values().clone();
            let mut moved = false;
            for &(i, j) in &edges {
                let v = (trial[(i, j)] - alpha * grad[(i, j)]).max(params.r);
                moved |= v != trial[(i, j)];
                trial.set_sym(i, j, v);
            }
            if !moved {
                // the step rounds to a no-op: the iterate is stationary at
                // working precision
                break;
            }
            let trial = ConductivityMatrix::from_raw(trial);
            let decrease: S = edges
                .iter()
                .map(|&(i, j)| grad[(i, j)] * (trial.get(i, j) - b.get(i, j)))
                .sum();
            let (p_trial, _) = solve_kirchhoff(graph, &trial, s, tol)?;
            let e_trial = energy_given_pressures(graph, &trial, s, params, &p_trial)?;
            if e_trial.total <= energy.total + opts.armijo_c * decrease {
                b = trial;
                p = p_trial;
                energy = e_trial;
                accepted = true;
                break;
            }
            alpha *= opts.backtrack_factor;
        }
        if !accepted {
            break;
        }
        // grow the trial step back; backtracking will trim it when needed
        step = (alpha * S::f(2.0)).min(S::f(1e6));
    }

    let floor_active = edges
        .iter()
        .filter(|&&(i, j)| b.get(i, j) <= params.r)
        .count();
    let report = MinimizeReport {
        iterations,
        final_energy: energy,
        projected_grad_norm: grad_norm,
        floor_active_edges: floor_active,
        converged,
    };
    Ok((b, report))
}

fn project<S: Scalar>(
    graph: &GraphInstance<S>,
    mut values: SquareMatrix<S>,
    r: S,
) -> ConductivityMatrix<S> {
    let n = graph.n();
    for i in 0..n {
        for j in 0..n {
            if i != j && graph.has_edge(i, j) {
                values[(i, j)] = values[(i, j)].max(r);
            } else {
                values[(i, j)] = S::zero();
            }
        }
    }
    ConductivityMatrix::from_raw(values)
}

/// Norm of the gradient with the components pointing into the active floor
/// zeroed, summed once per unordered edge.
fn projected_gradient_norm<S: Scalar>(
    grad: &SquareMatrix<S>,
    b: &ConductivityMatrix<S>,
    edges: &[(usize, usize)],
    r: S,
) -> S {
    let mut acc = S::zero();
    for &(i, j) in edges {
        let g = grad[(i, j)];
        let active = b.get(i, j) <= r && g > S::zero();
        if !active {
            acc += g * g;
        }
    }
    acc.sqrt()
}

/// Explicit Euler trajectory of the conductivity adaptation dynamics
/// `dB/dt = (P_i - P_j)^2 - nu B^(gamma-1) L^(gamma+1)` clamped at the
/// floor. The step is halved whenever the energy would increase; accepted
/// states and their energies are recorded.
#[derive(Clone, Debug)]
pub struct GradientFlowTrajectory<S> {
    pub states: Vec<ConductivityMatrix<S>>,
    pub energies: Vec<S>,
}

pub fn gradient_flow_integrate<S: Scalar>(
    graph: &GraphInstance<S>,
    b0: ConductivityMatrix<S>,
    s: &SourceVector<S>,
    params: &ModelParams<S>,
    dt: S,
    steps: usize,
) -> Result<GradientFlowTrajectory<S>> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(dt > S::zero()) {
        return Err(Error::InvalidParams(format!("dt = {dt} must be > 0")));
    }
    params.validate()?;
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    let tol = S::f(DEFAULT_SOLVE_TOL);

    let mut b = project(graph, b0.values().clone(), params.r);
    let (mut p, _) = solve_kirchhoff(graph, &b, s, tol)?;
    let mut energy = energy_given_pressures(graph, &b, s, params, &p)?;

    let mut states = vec![b.clone()];
    let mut energies = vec![energy.total];
    let mut dt = dt;
    let mut attempts = 0usize;
    let max_attempts = 10 * steps + 100;

    let mut accepted = 0usize;
    while accepted < steps && attempts < max_attempts {
        attempts += 1;
        let mut trial = b.values().clone();
        for &(i, j) in &edges {
            let dp = p.get(i) - p.get(j);
            let rate = dp * dp
                - params.nu
                    * b.get(i, j).powf(params.gamma - S::one())
                    * graph.length(i, j).powf(params.gamma + S::one());
            trial.set_sym(i, j, (trial[(i, j)] + dt * rate).max(params.r));
        }
        let trial = ConductivityMatrix::from_raw(trial);
        let (p_trial, _) = solve_kirchhoff(graph, &trial, s, tol)?;
        let e_trial = energy_given_pressures(graph, &trial, s, params, &p_trial)?;
        if e_trial.total > energy.total + S::f(1e-15) * (S::one() + energy.total.abs()) {
            dt *= S::f(0.5);
            continue;
        }
        b = trial;
        p = p_trial;
        energy = e_trial;
        states.push(b.clone());
        energies.push(energy.total);
        accepted += 1;
    }

    Ok(GradientFlowTrajectory { states, energies })
}

/// Grid resolution for the brute-force oracle.
#[derive(Clone, Copy, Debug)]
pub struct GridSpec<S> {
    pub b_max: S,
    pub points_per_edge: usize,
    pub refine_rounds: usize,
}

impl<S: Scalar> Default for GridSpec<S> {
    fn default() -> Self {
        Self {
            b_max: S::f(8.0),
            points_per_edge: 33,
            refine_rounds: 6,
        }
    }
}

/// Maximum edge count accepted by [`brute_force_minimize`].
pub const BRUTE_FORCE_EDGE_LIMIT: usize = 3;

/// Exhaustive grid search over the conductivity box, followed by local
/// window refinement around the best grid point. Exponential in the edge
/// count, hence the hard limit; meant as an oracle for tiny instances.
pub fn brute_force_minimize<S: Scalar>(
    graph: &GraphInstance<S>,
    s: &SourceVector<S>,
    params: &ModelParams<S>,
    grid: &GridSpec<S>,
) -> Result<(ConductivityMatrix<S>, S)> {
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    if edges.len() > BRUTE_FORCE_EDGE_LIMIT {
        return Err(Error::TooManyEdges {
            edges: edges.len(),
            max: BRUTE_FORCE_EDGE_LIMIT,
        });
    }
    params.validate()?;
    let tol = S::f(DEFAULT_SOLVE_TOL);
    let points = grid.points_per_edge.max(3);

    let eval = |coords: &[S]| -> Result<S> {
        let mut values = SquareMatrix::zeros(graph.n());
        for (&(i, j), &v) in edges.iter().zip(coords.iter()) {
            values.set_sym(i, j, v);
        }
        let b = ConductivityMatrix::from_raw(values);
        discrete_energy_quiet(graph, &b, s, params, tol)
    };

    let mut lo = vec![params.r; edges.len()];
    let mut hi = vec![grid.b_max.max(params.r + S::one()); edges.len()];
    let mut best_coords = lo.clone();
    let mut best_energy = S::infinity();

    for _round in 0..=grid.refine_rounds {
        let mut idx = vec![0usize; edges.len()];
        loop {
            let coords: Vec<S> = idx
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .map(|(&k, (&a, &b))| a + (b - a) * S::from_usize_(k) / S::from_usize_(points - 1))
                .collect();
            let e = eval(&coords)?;
            if e < best_energy {
                best_energy = e;
                best_coords = coords;
            }
            // odometer increment
            let mut carry = true;
            for slot in idx.iter_mut() {
                if carry {
                    *slot += 1;
                    if *slot == points {
                        *slot = 0;
                    } else {
                        carry = false;
                    }
                }
            }
            if carry {
                break;
            }
        }
        // shrink the window around the best point
        for k in 0..edges.len() {
            let span = (hi[k] - lo[k]) * S::f(2.0) / S::from_usize_(points - 1);
            lo[k] = (best_coords[k] - span).max(params.r);
            hi[k] = best_coords[k] + span;
        }
    }

    let mut values = SquareMatrix::zeros(graph.n());
    for (&(i, j), &v) in edges.iter().zip(best_coords.iter()) {
        values.set_sym(i, j, v);
    }
    Ok((ConductivityMatrix::from_raw(values), best_energy))
}

fn discrete_energy_quiet<S: Scalar>(
    graph: &GraphInstance<S>,
    b: &ConductivityMatrix<S>,
    s: &SourceVector<S>,
    params: &ModelParams<S>,
    tol: S,
) -> Result<S> {
    let (p, _) = solve_kirchhoff(graph, b, s, tol)?;
    Ok(energy_given_pressures(graph, b, s, params, &p)?.total)
}
