//! Source/sink data: zero-mean node vectors and the closed-form densities
//! they are integrated from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::check_mass_conservation;
use crate::quadrature::{integrate, integrate_piecewise};
use crate::scalar::Scalar;

/// Per-cell quadrature tolerance for density integrals. Tight enough that
/// the cell integrals of a zero-mean density sum to zero by construction.
pub const DENSITY_QUAD_TOL: f64 = 1e-12;

/// Node sources/sinks with zero total flux.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceVector<S> {
    values: Vec<S>,
}

impl<S: Scalar> SourceVector<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if !check_mass_conservation(&values) {
            let sum: S = values.iter().copied().sum();
            return Err(Error::UnbalancedSources {
                sum: sum.as_f64(),
                tol: 1e-12 * values.len() as f64,
            });
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![S::zero(); n],
        }
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

    pub fn l2_norm(&self) -> S {
        self.values.iter().map(|&v| v * v).sum::<S>().sqrt()
    }

    /// Relabeled copy: entry `i` of the result is entry `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            values: perm.iter().map(|&p| self.values[p]).collect(),
        }
    }
}

/// Scalar density on the unit interval with zero mean, given as a
/// closed-form descriptor plus a quadrature tolerance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SourceDensity<S> {
    #[serde(flatten)]
    pub kind: DensityKind<S>,
    /// Relative per-cell quadrature tolerance; defaults to 1e-12.
    #[serde(default = "no_tol", skip_serializing_if = "Option::is_none")]
    pub quad_tol: Option<S>,
}

fn no_tol<S>() -> Option<S> {
    None
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DensityKind<S> {
    /// `cos(mode * pi * x)`; zero mean for any positive integer mode.
    Cosine { mode: u32 },
    /// `+amplitude` on `[0, 1/2)`, `-amplitude` on `[1/2, 1]`.
    Dipole { amplitude: S },
    /// Step function given by its cell values; must have zero mean.
    Grid { values: Vec<S> },
}

impl<S: Scalar> SourceDensity<S> {
    pub fn cosine(mode: u32) -> Self {
        Self {
            kind: DensityKind::Cosine { mode },
            quad_tol: None,
        }
    }

    pub fn dipole(amplitude: S) -> Self {
        Self {
            kind: DensityKind::Dipole { amplitude },
            quad_tol: None,
        }
    }

    pub fn grid(values: Vec<S>) -> Self {
        Self {
            kind: DensityKind::Grid { values },
            quad_tol: None,
        }
    }

    pub fn quad_tol(&self) -> S {
        self.quad_tol.unwrap_or_else(|| S::f(DENSITY_QUAD_TOL))
    }

    pub fn eval(&self, x: S) -> S {
        match &self.kind {
            DensityKind::Cosine { mode } => (S::from_u32(*mode).expect("mode") * S::PI() * x).cos(),
            DensityKind::Dipole { amplitude } => {
                if x < S::f(0.5) {
                    *amplitude
                } else {
                    -*amplitude
                }
            }
            DensityKind::Grid { values } => {
                let k = values.len();
                let idx = ((x * S::from_usize_(k)).floor().as_f64() as usize).min(k - 1);
                values[idx]
            }
        }
    }

    /// Interior breakpoints where the density jumps; quadrature splits here.
    fn breakpoints(&self) -> Vec<S> {
        match &self.kind {
            DensityKind::Cosine { .. } => Vec::new(),
            DensityKind::Dipole { .. } => vec![S::f(0.5)],
            DensityKind::Grid { values } => {
                let k = values.len();
                (1..k)
                    .map(|i| S::from_usize_(i) / S::from_usize_(k))
                    .collect()
            }
        }
    }

    /// Integral over `[a, b]`. Piecewise-constant kinds are integrated
    /// exactly; smooth kinds by adaptive quadrature.
    pub fn integral(&self, a: S, b: S) -> S {
        let tol = self.quad_tol();
        match &self.kind {
            DensityKind::Cosine { .. } => integrate(|x| self.eval(x), a, b, tol),
            _ => integrate_piecewise(|x| self.eval(x), a, b, &self.breakpoints(), tol),
        }
    }

    pub fn mean(&self) -> S {
        self.integral(S::zero(), S::one())
    }

    /// `int_0^1 sigma(x)^2 dx`.
    pub fn l2_norm_sq(&self) -> S {
        let tol = self.quad_tol();
        integrate_piecewise(
            |x| {
                let v = self.eval(x);
                v * v
            },
            S::zero(),
            S::one(),
            &self.breakpoints(),
            tol,
        )
    }

    /// Cell-averaging projection onto the `n`-grid.
    pub fn project(&self, n: usize) -> Result<crate::graphon::SourceGrid<S>> {
        let sources = sources_from_density(self, n)?;
        let nn = S::from_usize_(n);
        let cells: Vec<S> = sources.values().iter().map(|&v| v * nn).collect();
        crate::graphon::SourceGrid::new(crate::graphon::PixelFunction1::new(cells)?)
    }

    /// Reject densities whose mean is detectably away from zero.
    pub fn validate(&self) -> Result<()> {
        if let DensityKind::Cosine { mode } = self.kind {
            if mode == 0 {
                return Err(Error::InvalidDescriptor(
                    "cosine mode must be at least 1".into(),
                ));
            }
        }
        let mean = self.mean();
        if mean.abs() > S::f(1e-10) {
            return Err(Error::NonZeroMeanDensity {
                mean: mean.as_f64(),
            });
        }
        Ok(())
    }
}

/// On-disk source description: `{"density": {"kind": ..., ...}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SourceFile<S> {
    pub density: SourceDensity<S>,
}

pub fn load_density<S: Scalar + serde::de::DeserializeOwned>(
    path: &std::path::Path,
) -> Result<SourceDensity<S>> {
    let text = std::fs::read_to_string(path)?;
    let file: SourceFile<S> = serde_json::from_str(&text)?;
    file.density.validate()?;
    Ok(file.density)
}

/// Cell integrals of a zero-mean density: `S_i = int over [(i-1)/n, i/n]`.
pub fn sources_from_density<S: Scalar>(
    sigma: &SourceDensity<S>,
    n: usize,
) -> Result<SourceVector<S>> {
    if n < 2 {
        return Err(Error::InvalidDescriptor(format!(
            "need at least 2 cells, got {n}"
        )));
    }
    sigma.validate()?;
    let nn = S::from_usize_(n);
    let values: Vec<S> = (0..n)
        .map(|i| {
            let a = S::from_usize_(i) / nn;
            let b = S::from_usize_(i + 1) / nn;
            sigma.integral(a, b)
        })
        .collect();
    SourceVector::new(values)
}
