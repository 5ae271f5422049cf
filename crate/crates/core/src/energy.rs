//! Energy functionals: the rescaled energy over feasible conductivities,
//! the original (unrescaled) cost, flows, and the analytic gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{connected_components, ConductivityMatrix, GraphInstance, ModelParams};
use crate::kirchhoff::{solve_kirchhoff, solve_weighted_system, PressureVector, DEFAULT_SOLVE_TOL};
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;
use crate::source::SourceVector;

/// Kinetic (pumping) and metabolic parts of the rescaled energy.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnergyBreakdown<S> {
    pub kinetic: S,
    pub metabolic: S,
    pub total: S,
}

/// Oriented edge fluxes. Antisymmetric, zero off edges; rows sum to the
/// negated sources when the pressures solve the node balance.
#[derive(Clone, Debug)]
pub struct FlowMatrix<S> {
    values: SquareMatrix<S>,
}

impl<S: Scalar> FlowMatrix<S> {
    pub fn values(&self) -> &SquareMatrix<S> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.values[(i, j)]
    }

    /// Net outflux `sum_j Q_ij` of node `i`.
    pub fn node_balance(&self, i: usize) -> S {
        (0..self.values.n()).map(|j| self.values[(i, j)]).sum()
    }
}

/// Rescaled energy of a feasible conductivity matrix, with pressures from
/// the node-balance solve:
/// kinetic `(1/2N^2) sum_ij B_ij (P_j - P_i)^2 W_ij`,
/// metabolic `(1/2N^2) sum_ij (nu/gamma) B_ij^gamma L_ij^(gamma+1) W_ij`.
///
/// The kinetic part is evaluated both through the bilinear sum and through
/// `sum_i S_i P_i`; a mismatch beyond 1e-8 relative signals solver drift and
/// is reported as an error.
pub fn discrete_energy<S: Scalar>(
    graph: &GraphInstance<S>,
    b: &ConductivityMatrix<S>,
    s: &SourceVector<S>,
    params: &ModelParams<S>,
) -> Result<EnergyBreakdown<S>> {
    let (p, _) = solve_kirchhoff(graph, b, s, S::f(DEFAULT_SOLVE_TOL))?;
    energy_given_pressures(graph, b, s, params, &p)
}

/// Energy evaluation reusing an existing solve.
pub fn energy_given_pressures<S: Scalar>(
    graph: &GraphInstance<S>,
    b: &ConductivityMatrix<S>,
    s: &SourceVector<S>,
    params: &ModelParams<S>,
    p: &PressureVector<S>,
) -> Result<EnergyBreakdown<S>> {
    let n = graph.n();
    let nsq = S::from_usize_(n) * S::from_usize_(n);
    let mut kinetic = S::zero();
    let mut metabolic = S::zero();
    for i in 0..n {
        for j in 0..n {
            if graph.has_edge(i, j) {
                let dp = p.get(j) - p.get(i);
                kinetic += b.get(i, j) * dp * dp;
                metabolic += b.get(i, j).powf(params.gamma)
                    * graph.length(i, j).powf(params.gamma + S::one());
            }
        }
    }
    kinetic /= S::f(2.0) * nsq;
    metabolic *= params.nu / params.gamma / (S::f(2.0) * nsq);

    let duality: S = (0..n).map(|i| s.get(i) * p.get(i)).sum();
    let scale = kinetic.abs().max(duality.abs()).max(S::one());
    if (kinetic - duality).abs() > S::f(1e-8) * scale {
        return Err(Error::CrossCheckFailed {
            what: "kinetic energy vs. source-pressure pairing".into(),
            lhs: kinetic.as_f64(),
            rhs: duality.as_f64(),
        });
    }

    Ok(EnergyBreakdown {
        kinetic,
        metabolic,
        total: kinetic + metabolic,
    })
}

/// Original (unrescaled) energy of raw conductivities
/// `E[C] = (1/2) sum_ij (C_ij (P_j - P_i)^2 / L_ij^2 + (nu/gamma) C_ij^gamma) W_ij L_ij`,
/// with pressures solving `-sum_j W_ij C_ij (P_j - P_i)/L_ij = S_i`.
///
/// Returns positive infinity when the node balance admits no solution, i.e.
/// when some connected component of the positive-conductivity subgraph
/// carries a nonzero net source.
pub fn original_energy<S: Scalar>(
    graph: &GraphInstance<S>,
    c: &SquareMatrix<S>,
    s_unscaled: &[S],
    params: &ModelParams<S>,
) -> Result<S> {
    let n = graph.n();
    if c.n() != n || s_unscaled.len() != n {
        return Err(Error::Shape(format!(
            "graph has {n} nodes, conductivities {}, sources {}",
            c.n(),
            s_unscaled.len()
        )));
    }
    if !c.is_symmetric() {
        return Err(Error::InfeasibleConductivity(
            "raw conductivities must be symmetric".into(),
        ));
    }
    for i in 0..n {
        for j in 0..n {
            if c[(i, j)] < S::zero() {
                return Err(Error::InfeasibleConductivity(format!(
                    "negative conductivity at ({i}, {j})"
                )));
            }
        }
    }

    // edge weights of the node-balance operator: W C / L
    let weights = SquareMatrix::from_fn(n, |i, j| {
        if i != j && graph.has_edge(i, j) && c[(i, j)] > S::zero() {
            c[(i, j)] / graph.length(i, j)
        } else {
            S::zero()
        }
    });

    let components = connected_components(n, |i, j| weights[(i, j)] > S::zero());
    let s_scale = s_unscaled
        .iter()
        .fold(S::zero(), |a, &v| a.max(v.abs()))
        .max(S::one());
    for comp in &components {
        let net: S = comp.iter().map(|&i| s_unscaled[i]).sum();
        if net.abs() > S::f(1e-12) * S::from_usize_(n) * s_scale {
            return Ok(S::infinity());
        }
    }

    // solve per component; pressures are defined up to a constant per
    // component and the kinetic term does not see the constants
    let mut p = vec![S::zero(); n];
    for comp in &components {
        if comp.len() == 1 {
            continue;
        }
        let m = comp.len();
        let sub_weights = SquareMatrix::from_fn(m, |a, bb| weights[(comp[a], comp[bb])]);
        let sub_rhs: Vec<S> = comp
            .iter()
            .map(|&i| s_unscaled[i] / (S::from_usize_(m) * S::from_usize_(m)))
            .collect();
        let (sub_p, _) =
            solve_weighted_system(&sub_weights, &sub_rhs, S::f(DEFAULT_SOLVE_TOL), None, None)?;
        for (local, &node) in comp.iter().enumerate() {
            p[node] = sub_p[local];
        }
    }

    let mut total = S::zero();
    for i in 0..n {
        for j in 0..n {
            if graph.has_edge(i, j) {
                let l = graph.length(i, j);
                let dp = p[j] - p[i];
                total += (c[(i, j)] * dp * dp / (l * l)
                    + params.nu / params.gamma * c[(i, j)].powf(params.gamma))
                    * l;
            }
        }
    }
    Ok(total * S::f(0.5))
}

/// Edge fluxes `Q_ij = C_ij (P_j - P_i) / L_ij` for raw conductivities and
/// arbitrary pressures.
pub fn compute_flows<S: Scalar>(
    graph: &GraphInstance<S>,
    c: &SquareMatrix<S>,
    p: &[S],
) -> Result<FlowMatrix<S>> {
    let n = graph.n();
    if c.n() != n || p.len() != n {
        return Err(Error::Shape("flow input sizes disagree".into()));
    }
    let mut values = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if graph.has_edge(i, j) {
                let l = graph.length(i, j);
                if l == S::zero() {
                    return Err(Error::DegenerateLength { i, j });
                }
                values[(i, j)] = c[(i, j)] * (p[j] - p[i]) / l;
            }
        }
    }
    Ok(FlowMatrix { values })
}

/// Analytic gradient of the rescaled energy with respect to the symmetric
/// conductivity pairs:
/// `G_ij = (W_ij / N^2) * (-(P_i - P_j)^2 + nu B_ij^(gamma-1) L_ij^(gamma+1))`.
/// The descent direction is `-G`. Each symmetric pair counts once, matching
/// the geometry of the feasible set.
pub fn energy_gradient<S: Scalar>(
    graph: &GraphInstance<S>,
    b: &ConductivityMatrix<S>,
    s: &SourceVector<S>,
    params: &ModelParams<S>,
) -> Result<SquareMatrix<S>> {
    let (p, _) = solve_kirchhoff(graph, b, s, S::f(DEFAULT_SOLVE_TOL))?;
    Ok(gradient_given_pressures(graph, b, params, &p))
}

/// Gradient evaluation reusing an existing solve.
pub fn gradient_given_pressures<S: Scalar>(
    graph: &GraphInstance<S>,
    b: &ConductivityMatrix<S>,
    params: &ModelParams<S>,
    p: &PressureVector<S>,
) -> SquareMatrix<S> {
    let n = graph.n();
    let nsq = S::from_usize_(n) * S::from_usize_(n);
    let mut g = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if graph.has_edge(i, j) {
                let dp = p.get(i) - p.get(j);
                let v = (-(dp * dp)
                    + params.nu
                        * b.get(i, j).powf(params.gamma - S::one())
                        * graph.length(i, j).powf(params.gamma + S::one()))
                    / nsq;
                g.set_sym(i, j, v);
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{map_c_to_b, GraphInstance};

    fn two_node() -> (GraphInstance<f64>, SourceVector<f64>, ModelParams<f64>) {
        let g = GraphInstance::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let s = SourceVector::new(vec![0.5, -0.5]).unwrap();
        let params = ModelParams::new(2.0, 1.0, 0.1, 1.0).unwrap();
        (g, s, params)
    }

    #[test]
    fn two_node_hand_evaluation() {
        let (g, s, params) = two_node();
        let b = ConductivityMatrix::constant(&g, 1.0);
        let e = discrete_energy(&g, &b, &s, &params).unwrap();
        assert!((e.kinetic - 1.0).abs() < 1e-12);
        assert!((e.metabolic - 0.125).abs() < 1e-15);
        assert!((e.total - 1.125).abs() < 1e-12);
    }

    #[test]
    fn zero_sources_leave_only_metabolic_cost() {
        let (g, _, params) = two_node();
        let b = ConductivityMatrix::constant(&g, 1.0);
        let s = SourceVector::zeros(2);
        let e = discrete_energy(&g, &b, &s, &params).unwrap();
        assert_eq!(e.kinetic, 0.0);
        assert!(e.metabolic > 0.0);
    }

    #[test]
    fn complete_graph_kinetic_closed_form() {
        // on K_N with constant conductivity beta, kinetic = N sum S_i^2 / beta
        let n = 6;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j, 1.0));
            }
        }
        let g = GraphInstance::from_edges(n, &edges).unwrap();
        let beta = 2.5;
        let b = ConductivityMatrix::constant(&g, beta);
        let mut raw: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.9).sin()).collect();
        let mean = raw.iter().sum::<f64>() / n as f64;
        raw.iter_mut().for_each(|v| *v -= mean);
        let s = SourceVector::new(raw).unwrap();
        let params = ModelParams::new(2.0, 1.0, 0.1, 1.0).unwrap();
        let e = discrete_energy(&g, &b, &s, &params).unwrap();
        let expected = n as f64 * s.values().iter().map(|&v| v * v).sum::<f64>() / beta;
        assert!((e.kinetic - expected).abs() < 1e-12);
    }

    #[test]
    fn infinity_for_disconnected_positive_subgraph() {
        let g = GraphInstance::<f64>::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let c = {
            let mut m = SquareMatrix::zeros(4);
            m.set_sym(0, 1, 1.0);
            m.set_sym(2, 3, 1.0);
            m
        };
        let params = ModelParams::new(2.0, 1.0, 0.1, 1.0).unwrap();
        let e = original_energy(&g, &c, &[1.0, 0.0, 0.0, -1.0], &params).unwrap();
        assert!(e.is_infinite() && e > 0.0);
    }

    #[test]
    fn zero_conductivity_zero_source_costs_nothing() {
        let g = GraphInstance::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let c = SquareMatrix::zeros(3);
        let params = ModelParams::new(2.0, 1.0, 0.1, 1.0).unwrap();
        let e = original_energy(&g, &c, &[0.0, 0.0, 0.0], &params).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn rescaled_energy_matches_original_over_n_squared() {
        // F[B] = E[C + r] / N^2 with C + r = B .* L and sources scaled by N^2
        let (g, s, params) = two_node();
        let b = ConductivityMatrix::constant(&g, 1.7);
        let f = discrete_energy(&g, &b, &s, &params).unwrap();

        let n = g.n() as f64;
        let c_plus_r = SquareMatrix::from_fn(2, |i, j| {
            if g.has_edge(i, j) {
                b.get(i, j) * g.length(i, j)
            } else {
                0.0
            }
        });
        let s_unscaled: Vec<f64> = s.values().iter().map(|&v| v * n * n).collect();
        let e = original_energy(&g, &c_plus_r, &s_unscaled, &params).unwrap();
        assert!((e / (n * n) - f.total).abs() < 1e-12 * (1.0 + f.total.abs()));

        // and map_c_to_b closes the loop: B = (C + r)/L with C = B L - r
        let rec = crate::graph::map_b_to_c(&b, &g, params.r);
        let b_again = map_c_to_b(&rec.values, &g, params.r).unwrap();
        assert!((b_again.get(0, 1) - b.get(0, 1)).abs() < 1e-14);
    }

    #[test]
    fn flows_antisymmetric_and_balanced() {
        let g = GraphInstance::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let mut c = SquareMatrix::zeros(2);
        c.set_sym(0, 1, 1.0);
        let q = compute_flows(&g, &c, &[1.0, -1.0]).unwrap();
        assert_eq!(q.get(0, 1), -2.0);
        assert_eq!(q.get(1, 0), 2.0);

        // constant pressures carry no flow
        let q0 = compute_flows(&g, &c, &[3.0, 3.0]).unwrap();
        assert_eq!(q0.get(0, 1), 0.0);
    }

    #[test]
    fn flows_reproduce_sources_on_solved_instance() {
        let n = 4;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j, 1.0));
            }
        }
        let g = GraphInstance::from_edges(n, &edges).unwrap();
        let b = ConductivityMatrix::constant(&g, 1.0);
        let s = SourceVector::new(vec![0.25, 0.25, -0.25, -0.25]).unwrap();
        let (p, _) = solve_kirchhoff(&g, &b, &s, 1e-12).unwrap();

        // node balance of the original model: conductivities B * L, sources N^2 S
        let c = SquareMatrix::from_fn(n, |i, j| {
            if g.has_edge(i, j) {
                b.get(i, j) * g.length(i, j)
            } else {
                0.0
            }
        });
        let q = compute_flows(&g, &c, p.values()).unwrap();
        for i in 0..n {
            let expected = -(n as f64 * n as f64) * s.get(i);
            assert!((q.node_balance(i) - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_matches_one_dimensional_closed_form() {
        // single edge, gamma 2: F(B) = 1/B + B^2/8, F'(1) = -3/4
        let (g, s, params) = two_node();
        let b = ConductivityMatrix::constant(&g, 1.0);
        let grad = energy_gradient(&g, &b, &s, &params).unwrap();
        assert!((grad[(0, 1)] + 0.75).abs() < 1e-12);
        assert_eq!(grad[(0, 1)], grad[(1, 0)]);

        // stationarity: at B with (dP)^2 = nu B^(gamma-1) L^(gamma+1) the
        // gradient vanishes; here B^3 = 4
        let bstar = ConductivityMatrix::constant(&g, 4f64.powf(1.0 / 3.0));
        let gstar = energy_gradient(&g, &bstar, &s, &params).unwrap();
        assert!(gstar[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences_on_random_instance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 8;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if i + 1 == j || rng.gen_bool(0.6) {
                    edges.push((i, j, 0.3 + 0.7 * rng.gen::<f64>()));
                }
            }
        }
        let g = GraphInstance::from_edges(n, &edges).unwrap();
        let params = ModelParams::new(2.3, 0.8, 0.1, 1.0).unwrap();
        let mut values = SquareMatrix::zeros(n);
        for (i, j) in g.edges().collect::<Vec<_>>() {
            values.set_sym(i, j, params.r + 0.5 + rng.gen::<f64>());
        }
        let b = ConductivityMatrix::new(values, &g, params.r).unwrap();
        let mut raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let mean = raw.iter().sum::<f64>() / n as f64;
        raw.iter_mut().for_each(|v| *v -= mean);
        let s = SourceVector::new(raw).unwrap();

        let grad = energy_gradient(&g, &b, &s, &params).unwrap();
        let h = 1e-5;
        let mut max_rel = 0.0f64;
        let scale = grad.max_abs().max(1e-12);
        for (i, j) in g.edges().collect::<Vec<_>>() {
            let mut plus = b.values().clone();
            plus.set_sym(i, j, plus[(i, j)] + h);
            let mut minus = b.values().clone();
            minus.set_sym(i, j, minus[(i, j)] - h);
            let ep = discrete_energy(
                &g,
                &ConductivityMatrix::new(plus, &g, params.r).unwrap(),
                &s,
                &params,
            )
            .unwrap()
            .total;
            let em = discrete_energy(
                &g,
                &ConductivityMatrix::new(minus, &g, params.r).unwrap(),
                &s,
                &params,
            )
            .unwrap()
            .total;
            let fd = (ep - em) / (2.0 * h);
            max_rel = max_rel.max((fd - grad[(i, j)]).abs() / scale);
        }
        assert!(max_rel <= 1e-6, "max relative deviation {max_rel}");
    }
}
