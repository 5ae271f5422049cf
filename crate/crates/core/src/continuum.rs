//! The semi-discrete and continuum energy functionals, the nonlocal Poisson
//! solve behind them, and the convergence sweep drivers.
//!
//! Everything reduces to the weighted node-balance solver: testing the
//! nonlocal equation against piecewise-constant functions at resolution `m`
//! turns the integral operator into the graph Laplacian of the cell-average
//! weight matrix, so the continuum evaluation is the semi-discrete one with
//! exact kernel cell averages, refined dyadically.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{connectivity_constant, ModelParams};
use crate::graphon::{
    lift_matrix, sample_graph_from_graphon, Kernel, PixelFunction1, PixelFunction2,
};
use crate::kirchhoff::{solve_weighted_system, SolveReport, DEFAULT_SOLVE_TOL};
use crate::legendre::MomentBank;
use crate::matrix::SquareMatrix;
use crate::optimizer::{minimize_discrete, MinimizeReport, OptimizerOptions};
use crate::quadrature::cell_mean_2d;
use crate::scalar::Scalar;
use crate::source::{sources_from_density, SourceDensity};

/// Relative stopping tolerance of the dyadic continuum refinement.
pub const CONTINUUM_REFINE_TOL: f64 = 1e-4;
/// Resolution cap of the continuum refinement.
pub const CONTINUUM_RESOLUTION_CAP: usize = 1024;
/// Relative tolerance for the kinetic cross-check (duality identity).
const KINETIC_CROSS_TOL: f64 = 1e-8;
/// Relative target for metabolic quadrature refinement.
const METABOLIC_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FunctionalValue<S> {
    pub kinetic: S,
    pub metabolic: S,
    pub total: S,
    pub resolution: usize,
    /// Relative change between the last two dyadic refinements; zero for
    /// single-resolution evaluations.
    pub error_indicator: S,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow<S> {
    pub n: usize,
    pub energy: FunctionalValue<S>,
    pub moments: Vec<S>,
    pub wallclock_ms: u128,
}

/// Cell-average weight matrix of `b(x, y) * w(x, y)` at resolution `m`.
fn cell_average_weights<S: Scalar>(b: &Kernel<S>, w: &Kernel<S>, m: usize) -> SquareMatrix<S> {
    let product = Kernel {
        kind: crate::graphon::KernelKind::Product {
            a: Box::new(b.kind.clone()),
            b: Box::new(w.kind.clone()),
        },
        lower_bound: S::zero(),
    };
    let mut out = SquareMatrix::zeros(m);
    for i in 0..m {
        for j in i..m {
            out.set_sym(i, j, product.cell_mean(i, j, m));
        }
    }
    out
}

/// Mean of `b^gamma * l^(gamma+1) * w` over one grid cell, exact when the
/// factors are cell-constant (with `w` allowed to be indicator-split).
fn metabolic_cell_mean<S: Scalar>(
    b: &Kernel<S>,
    l: &Kernel<S>,
    w: &Kernel<S>,
    gamma: S,
    i: usize,
    j: usize,
    m: usize,
) -> S {
    if let (Some(bv), Some(lv)) = (b.constant_on_cell(i, j, m), l.constant_on_cell(i, j, m)) {
        let factor = bv.powf(gamma) * lv.powf(gamma + S::one());
        if let Some(wv) = w.constant_on_cell(i, j, m) {
            return factor * wv;
        }
        if let Some((on, off, frac)) = w.cell_two_valued(i, j, m) {
            return factor * (frac * on + (S::one() - frac) * off);
        }
    }
    let mm = S::from_usize_(m);
    let x0 = S::from_usize_(i) / mm;
    let x1 = S::from_usize_(i + 1) / mm;
    let y0 = S::from_usize_(j) / mm;
    let y1 = S::from_usize_(j + 1) / mm;
    cell_mean_2d(
        &|x, y| b.eval(x, y).powf(gamma) * l.eval(x, y).powf(gamma + S::one()) * w.eval(x, y),
        x0,
        x1,
        y0,
        y1,
        S::f(METABOLIC_TOL),
        (crate::graphon::kernel::KERNEL_QUAD_CAP / m).max(4),
    )
}

/// `(nu / 2 gamma) int int b^gamma l^(gamma+1) dw`, refined dyadically.
fn metabolic_integral<S: Scalar>(
    b: &Kernel<S>,
    l: &Kernel<S>,
    w: &Kernel<S>,
    params: &ModelParams<S>,
) -> S {
    let factor = params.nu / (S::f(2.0) * params.gamma);
    let mut m = 32usize;
    let mut prev: Option<S> = None;
    loop {
        let mm = S::from_usize_(m);
        let mut acc = S::zero();
        for i in 0..m {
            for j in 0..m {
                acc += metabolic_cell_mean(b, l, w, params.gamma, i, j, m);
            }
        }
        let value = factor * acc / (mm * mm);
        if let Some(p) = prev {
            if (value - p).abs() <= S::f(METABOLIC_TOL) * (value.abs() + S::f(1e-300)) {
                return value;
            }
        }
        prev = Some(value);
        m *= 2;
        if m > 512 {
            return prev.unwrap();
        }
    }
}

/// The semi-discrete energy of a permeability kernel against sampled pixel
/// data: the kinetic part reduces to the node-balance system with the
/// cell-averaged kernel as conductivities, the metabolic part is the
/// quadrature of `b^gamma l^(gamma+1)` over the pixel picture's support.
///
/// `w_pixel` must be a symmetric 0-1 step function and both pixel inputs
/// must live at resolution `n`. The kernel's floor tag must reach
/// `params.r`.
pub fn semi_discrete_energy<S: Scalar>(
    b: &Kernel<S>,
    w_pixel: &PixelFunction2<S>,
    l_pixel: &PixelFunction2<S>,
    sigma: &SourceDensity<S>,
    params: &ModelParams<S>,
    n: usize,
) -> Result<FunctionalValue<S>> {
    if w_pixel.n() != n || l_pixel.n() != n {
        return Err(Error::Shape(format!(
            "pixel resolutions ({}, {}) must equal n = {n}",
            w_pixel.n(),
            l_pixel.n()
        )));
    }
    if !w_pixel.is_symmetric() || !l_pixel.is_symmetric() {
        return Err(Error::Shape("pixel pictures must be symmetric".into()));
    }
    for i in 0..n {
        for j in 0..n {
            let v = w_pixel.get(i, j);
            if v != S::zero() && v != S::one() {
                return Err(Error::NonZeroOneGraphon {
                    x: (i as f64 + 0.5) / n as f64,
                    y: (j as f64 + 0.5) / n as f64,
                    value: v.as_f64(),
                });
            }
        }
    }
    b.validate()?;
    if b.lower_bound < params.r {
        return Err(Error::InfeasibleConductivity(format!(
            "kernel floor tag {} below r = {}",
            b.lower_bound.as_f64(),
            params.r.as_f64()
        )));
    }

    let s = sources_from_density(sigma, n)?;

    // kinetic: only the cell averages of b enter the piecewise-constant
    // weak form, masked by the pixel adjacency
    let mut weights = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            if i != j && w_pixel.get(i, j) == S::one() {
                weights.set_sym(i, j, b.cell_mean(i, j, n));
            }
        }
    }
    let (p, _) = solve_weighted_system(&weights, s.values(), S::f(DEFAULT_SOLVE_TOL), None, None)?;
    let kinetic: S = (0..n).map(|i| s.get(i) * p[i]).sum();

    // cross-check against the bilinear form
    let nsq = S::from_usize_(n) * S::from_usize_(n);
    let mut bilinear = S::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j && weights[(i, j)] > S::zero() {
                let dp = p[i] - p[j];
                bilinear += weights[(i, j)] * dp * dp;
            }
        }
    }
    bilinear /= S::f(2.0) * nsq;
    let scale = kinetic.abs().max(bilinear.abs()).max(S::one());
    if (kinetic - bilinear).abs() > S::f(KINETIC_CROSS_TOL) * scale {
        return Err(Error::CrossCheckFailed {
            what: "semi-discrete kinetic energy".into(),
            lhs: kinetic.as_f64(),
            rhs: bilinear.as_f64(),
        });
    }

    // metabolic: per-cell integrals of b^gamma against the pixel data
    let factor = params.nu / (S::f(2.0) * params.gamma);
    let mut metabolic = S::zero();
    for i in 0..n {
        for j in 0..n {
            if w_pixel.get(i, j) == S::one() {
                let l = l_pixel.get(i, j);
                metabolic += l.powf(params.gamma + S::one())
                    * b.cell_mean_map(i, j, n, |v| v.powf(params.gamma));
            }
        }
    }
    metabolic *= factor / nsq;

    Ok(FunctionalValue {
        kinetic,
        metabolic,
        total: kinetic + metabolic,
        resolution: n,
        error_indicator: S::zero(),
    })
}

/// Cell averages of a kernel restricted to a graph's edge set, floored at
/// `r`: the recovery-sequence conductivities for that graph.
pub fn project_to_conductivities<S: Scalar>(
    b: &Kernel<S>,
    graph: &crate::graph::GraphInstance<S>,
    r: S,
) -> Result<crate::graph::ConductivityMatrix<S>> {
    b.validate()?;
    let n = graph.n();
    let mut values = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if graph.has_edge(i, j) {
                values.set_sym(i, j, b.cell_mean(i, j, n).max(r));
            }
        }
    }
    crate::graph::ConductivityMatrix::new(values, graph, r)
}

#[derive(Clone, Debug, Serialize)]
pub struct PoissonDiagnostics<S> {
    pub report: SolveReport<S>,
    pub pressure_l2: S,
    pub sigma_l2: S,
    /// `(2 / lambda r) ||sigma||`, the a-priori pressure bound.
    pub apriori_bound: S,
    pub bound_satisfied: bool,
    /// `int sigma p`, which equals the kinetic energy of the solution.
    pub kinetic: S,
}

/// Galerkin solve of the nonlocal diffusion equation on piecewise constants
/// at resolution `m`: returns the zero-mean cell pressures and diagnostics.
/// `lambda_hint` is the connectivity constant used in the a-priori bound.
pub fn continuum_poisson_solve<S: Scalar>(
    b: &Kernel<S>,
    w: &Kernel<S>,
    sigma: &SourceDensity<S>,
    m: usize,
    lambda_hint: S,
    r: S,
) -> Result<(PixelFunction1<S>, PoissonDiagnostics<S>)> {
    b.validate()?;
    w.validate()?;
    if b.lower_bound < r {
        return Err(Error::InfeasibleConductivity(format!(
            "kernel floor tag {} below r = {}",
            b.lower_bound.as_f64(),
            r.as_f64()
        )));
    }
    let s = sources_from_density(sigma, m)?;
    let weights = cell_average_weights(b, w, m);
    let solved = solve_weighted_system(&weights, s.values(), S::f(DEFAULT_SOLVE_TOL), None, None);
    let (p, report) = match solved {
        Err(Error::SingularSystem) => return Err(Error::CoercivityFailure { resolution: m }),
        other => other?,
    };

    let mm = S::from_usize_(m);
    let pressure_l2 = (p.iter().map(|&v| v * v).sum::<S>() / mm).sqrt();
    let sigma_l2 = sigma.l2_norm_sq().sqrt();
    let apriori_bound = S::f(2.0) / (lambda_hint * r) * sigma_l2;
    let kinetic: S = (0..m).map(|i| s.get(i) * p[i]).sum();
    let diagnostics = PoissonDiagnostics {
        report,
        pressure_l2,
        sigma_l2,
        apriori_bound,
        bound_satisfied: pressure_l2 <= apriori_bound * (S::one() + S::f(1e-9)),
        kinetic,
    };
    Ok((PixelFunction1::new(p)?, diagnostics))
}

/// The continuum energy of closed-form kernels: Galerkin kinetic part
/// refined dyadically from `base_resolution` until the total stabilizes,
/// plus the metabolic integral.
pub fn continuum_energy<S: Scalar>(
    b: &Kernel<S>,
    w: &Kernel<S>,
    l: &Kernel<S>,
    sigma: &SourceDensity<S>,
    params: &ModelParams<S>,
    base_resolution: usize,
) -> Result<FunctionalValue<S>> {
    b.validate()?;
    w.validate()?;
    l.validate()?;
    if b.lower_bound < params.r {
        return Err(Error::InfeasibleConductivity(format!(
            "kernel floor tag {} below r = {}",
            b.lower_bound.as_f64(),
            params.r.as_f64()
        )));
    }

    let metabolic = metabolic_integral(b, l, w, params);
    let mut trace: Vec<(usize, f64)> = Vec::new();
    let mut prev_total: Option<S> = None;
    let mut m = base_resolution.max(2);

    while m <= CONTINUUM_RESOLUTION_CAP {
        let s = sources_from_density(sigma, m)?;
        let weights = cell_average_weights(b, w, m);
        let (p, _) =
            solve_weighted_system(&weights, s.values(), S::f(DEFAULT_SOLVE_TOL), None, None)?;
        let kinetic: S = (0..m).map(|i| s.get(i) * p[i]).sum();

        // duality identity: the bilinear energy equals int sigma p
        let mm = S::from_usize_(m);
        let mut bilinear = S::zero();
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    let dp = p[i] - p[j];
                    bilinear += weights[(i, j)] * dp * dp;
                }
            }
        }
        bilinear /= S::f(2.0) * mm * mm;
        let scale = kinetic.abs().max(bilinear.abs()).max(S::one());
        if (kinetic - bilinear).abs() > S::f(KINETIC_CROSS_TOL) * scale {
            return Err(Error::CrossCheckFailed {
                what: "continuum kinetic energy".into(),
                lhs: kinetic.as_f64(),
                rhs: bilinear.as_f64(),
            });
        }

        let total = kinetic + metabolic;
        trace.push((m, total.as_f64()));
        if let Some(prev) = prev_total {
            let change = (total - prev).abs() / total.abs().max(S::f(1e-300));
            if change <= S::f(CONTINUUM_REFINE_TOL) {
                return Ok(FunctionalValue {
                    kinetic,
                    metabolic,
                    total,
                    resolution: m,
                    error_indicator: change,
                });
            }
        }
        prev_total = Some(total);
        m *= 2;
    }
    Err(Error::NonConvergentRefinement { trace })
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaSweep<S> {
    pub rows: Vec<SweepRow<S>>,
    /// Continuum reference value; absent when the refinement did not
    /// stabilize under the resolution cap.
    pub continuum: Option<FunctionalValue<S>>,
}

/// Recovery-sequence sweep: for each `n`, sample the graph, project the
/// kernel to the `n`-grid, and evaluate the semi-discrete energy of the
/// projection, together with its moments.
#[allow(clippy::too_many_arguments)]
pub fn gamma_sweep<S: Scalar>(
    b: &Kernel<S>,
    w: &Kernel<S>,
    l: &Kernel<S>,
    sigma: &SourceDensity<S>,
    params: &ModelParams<S>,
    n_list: &[usize],
    length_floor: S,
    bank: &MomentBank,
    jobs: usize,
) -> Result<GammaSweep<S>> {
    params.validate()?;
    let continuum = match continuum_energy(b, w, l, sigma, params, 32) {
        Ok(v) => Some(v),
        Err(Error::NonConvergentRefinement { .. }) => None,
        Err(e) => return Err(e),
    };

    let rows = parallel_rows(n_list, jobs, |n| {
        let start = Instant::now();
        let graph = sample_graph_from_graphon(w, l, n, length_floor)?;
        let w_pixel = lift_matrix(&graph.adjacency_matrix());
        let l_pixel = lift_matrix(graph.lengths());
        let projected = b.project(n);
        let b_kernel = Kernel::grid(projected.clone())?.with_lower_bound(b.lower_bound);
        let energy = semi_discrete_energy(&b_kernel, &w_pixel, &l_pixel, sigma, params, n)?;
        Ok(SweepRow {
            n,
            energy,
            moments: bank.moments(&projected),
            wallclock_ms: start.elapsed().as_millis(),
        })
    })?;

    Ok(GammaSweep { rows, continuum })
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizerSweep<S> {
    pub rows: Vec<SweepRow<S>>,
    pub reports: Vec<MinimizeReport<S>>,
}

/// Minimizer-convergence sweep: for each `n`, sample the graph, verify the
/// connectivity constant reaches `params.lambda`, minimize the discrete
/// energy, and record the minimizer's energy and moments.
#[allow(clippy::too_many_arguments)]
pub fn minimizer_sweep<S: Scalar>(
    w: &Kernel<S>,
    l: &Kernel<S>,
    sigma: &SourceDensity<S>,
    params: &ModelParams<S>,
    n_list: &[usize],
    length_floor: S,
    bank: &MomentBank,
    opts: &OptimizerOptions<S>,
    jobs: usize,
) -> Result<MinimizerSweep<S>> {
    params.validate()?;
    let rows_and_reports = parallel_rows(n_list, jobs, |n| {
        let start = Instant::now();
        let graph = sample_graph_from_graphon(w, l, n, length_floor)?;
        let measured = connectivity_constant(&graph);
        if measured < params.lambda {
            return Err(Error::AssumptionViolation {
                what: "connectivity constant".into(),
                n,
                measured: measured.as_f64(),
                required: params.lambda.as_f64(),
            });
        }
        let s = sources_from_density(sigma, n)?;
        let (b_star, report) = minimize_discrete(&graph, &s, params, opts)?;
        let pixel = lift_matrix(b_star.values());
        let energy = FunctionalValue {
            kinetic: report.final_energy.kinetic,
            metabolic: report.final_energy.metabolic,
            total: report.final_energy.total,
            resolution: n,
            error_indicator: report.projected_grad_norm,
        };
        Ok((
            SweepRow {
                n,
                energy,
                moments: bank.moments(&pixel),
                wallclock_ms: start.elapsed().as_millis(),
            },
            report,
        ))
    })?;

    let (rows, reports) = rows_and_reports.into_iter().unzip();
    Ok(MinimizerSweep { rows, reports })
}

/// Evaluate `f` over the entries of `n_list` with up to `jobs` worker
/// threads; results are returned in input order regardless of completion
/// order.
fn parallel_rows<R, F>(n_list: &[usize], jobs: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> Result<R> + Sync,
{
    let jobs = jobs.max(1).min(n_list.len().max(1));
    if jobs == 1 {
        return n_list.iter().map(|&n| f(n)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<R>>>> =
        Mutex::new((0..n_list.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= n_list.len() {
                    break;
                }
                let out = f(n_list[idx]);
                slots.lock().expect("sweep worker poisoned")[idx] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("sweep results poisoned")
        .into_iter()
        .map(|slot| slot.expect("sweep row missing"))
        .collect()
}
