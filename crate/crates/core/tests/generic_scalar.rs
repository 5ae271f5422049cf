//! The numerics compile and run in single precision too. Tolerances are
//! calibrated for f64, so these checks only ask for f32-scale agreement.

use graphonflux_core::{
    discrete_energy, solve_kirchhoff, ConductivityMatrix, GraphInstance, ModelParams, SourceVector,
};

fn complete_graph<S: graphonflux_core::Scalar>(n: usize) -> GraphInstance<S> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((i, j, S::one()));
        }
    }
    GraphInstance::from_edges(n, &edges).unwrap()
}

#[test]
fn single_precision_solve_matches_the_closed_form() {
    let g = complete_graph::<f32>(4);
    let b = ConductivityMatrix::constant(&g, 1.0f32);
    let s = SourceVector::new(vec![0.25f32, 0.25, -0.25, -0.25]).unwrap();
    let (p, _) = solve_kirchhoff(&g, &b, &s, 1e-5f32).unwrap();
    for (i, expected) in [1.0f32, 1.0, -1.0, -1.0].iter().enumerate() {
        assert!((p.get(i) - expected).abs() < 1e-5);
    }
}

#[test]
fn single_precision_energy_matches_the_hand_value() {
    let g = GraphInstance::<f32>::from_edges(2, &[(0, 1, 1.0)]).unwrap();
    let b = ConductivityMatrix::constant(&g, 1.0f32);
    let s = SourceVector::new(vec![0.5f32, -0.5]).unwrap();
    let params = ModelParams::new(2.0f32, 1.0, 0.1, 1.0).unwrap();
    let e = discrete_energy(&g, &b, &s, &params).unwrap();
    assert!((e.total - 1.125).abs() < 1e-5);
}
