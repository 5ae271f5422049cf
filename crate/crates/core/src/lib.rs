//! Transport-network energies on dense graphs and their graphon limits.
//!
//! The crate models pressure-driven flow networks: a convex energy (pumping
//! plus metabolic cost) over edge conductivities, constrained by a Kirchhoff
//! node balance. Alongside the discrete model it provides the pixel/kernel
//! machinery of the dense-graph limit — lifting matrices to step functions
//! on the unit square, cell-averaging projections, a nonlocal Poisson solver
//! — and sweep drivers that track how discrete energies and minimizers
//! approach their continuum counterparts as the node count grows.
//!
//! All numerics are generic over the scalar type via [`Scalar`]; tolerances
//! quoted in the documentation are calibrated for `f64`.

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;

pub mod error;
pub mod matrix;
pub mod quadrature;
pub mod scalar;
pub mod spectral;

pub mod continuum;
pub mod energy;
pub mod graph;
pub mod graphon;
pub mod kirchhoff;
pub mod legendre;
pub mod optimizer;
pub mod source;

pub use error::{Error, Result};
pub use legendre::MomentBank;
pub use matrix::SquareMatrix;
pub use scalar::Scalar;

pub use continuum::{
    continuum_energy, continuum_poisson_solve, gamma_sweep, minimizer_sweep,
    project_to_conductivities, semi_discrete_energy, FunctionalValue, GammaSweep, MinimizerSweep,
    PoissonDiagnostics, SweepRow,
};
pub use energy::{
    compute_flows, discrete_energy, energy_gradient, original_energy, EnergyBreakdown, FlowMatrix,
};
pub use graph::{
    check_mass_conservation, check_min_degree_bound, connectivity_constant, load_graph, map_b_to_c,
    map_c_to_b, ConductivityMatrix, GraphFile, GraphInstance, ModelParams, RecoveredConductivities,
};
pub use graphon::{
    l1_distance, lengths_from_point_cloud, lift_matrix, lift_vector, pressure_difference_field,
    sample_graph_from_graphon, Kernel, KernelKind, PixelFunction1, PixelFunction2, SourceGrid,
};
pub use kirchhoff::{
    solve_kirchhoff, solve_kirchhoff_with, verify_kirchhoff_estimate, weak_form_residual,
    PressureVector, SolveMethod, SolveReport,
};
pub use optimizer::{
    brute_force_minimize, gradient_flow_integrate, minimize_discrete, minimize_discrete_from,
    GradientFlowTrajectory, GridSpec, MinimizeReport, OptimizerOptions,
};
pub use source::{
    load_density, sources_from_density, DensityKind, SourceDensity, SourceFile, SourceVector,
};

// Double-precision aliases; `f64` is the validated instantiation.
pub type GraphInstanceF64 = GraphInstance<f64>;
pub type ConductivityMatrixF64 = ConductivityMatrix<f64>;
pub type ModelParamsF64 = ModelParams<f64>;
pub type SourceVectorF64 = SourceVector<f64>;
pub type SourceDensityF64 = SourceDensity<f64>;
pub type SquareMatrixF64 = SquareMatrix<f64>;
pub type PressureVectorF64 = PressureVector<f64>;
pub type KernelF64 = Kernel<f64>;
pub type PixelFunction1F64 = PixelFunction1<f64>;
pub type PixelFunction2F64 = PixelFunction2<f64>;
