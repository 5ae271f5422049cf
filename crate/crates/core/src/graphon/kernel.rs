//! Closed-form symmetric kernels on the unit square: graphons, length
//! fields, and conductivity kernels. A kernel carries a lower-bound tag
//! recording the floor it is known to respect.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::cell_mean_2d;
use crate::scalar::Scalar;

use super::pixel::PixelFunction2;

/// Per-cell quadrature tolerance for kernel integrals.
pub const KERNEL_QUAD_TOL: f64 = 1e-6;
/// Sub-sampling cap: at most this many midpoints per side over the whole
/// square, shared across the cells of one projection.
pub const KERNEL_QUAD_CAP: usize = 4096;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelKind<S> {
    Constant {
        value: S,
    },
    /// `1` when `|x - y| < width`, else `0` (strict at the boundary).
    Band {
        width: S,
    },
    /// `1` when `x + y < 1`, else `0`.
    Half,
    /// `|x - y|`.
    Distance,
    /// Symmetric step function.
    Grid {
        values: PixelFunction2<S>,
    },
    Product {
        a: Box<KernelKind<S>>,
        b: Box<KernelKind<S>>,
    },
    Max {
        a: Box<KernelKind<S>>,
        b: Box<KernelKind<S>>,
    },
    Scale {
        factor: S,
        inner: Box<KernelKind<S>>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar + serde::Deserialize<'de>"))]
pub struct Kernel<S> {
    #[serde(flatten)]
    pub kind: KernelKind<S>,
    /// Floor tag: the kernel is asserted to be at least this value almost
    /// everywhere (membership in the floored kernel class).
    #[serde(default = "zero_bound")]
    pub lower_bound: S,
}

fn zero_bound<S: Scalar>() -> S {
    S::zero()
}

impl<S: Scalar> Kernel<S> {
    pub fn constant(value: S) -> Self {
        Self {
            kind: KernelKind::Constant { value },
            lower_bound: value.max(S::zero()),
        }
    }

    pub fn band(width: S) -> Self {
        Self {
            kind: KernelKind::Band { width },
            lower_bound: S::zero(),
        }
    }

    pub fn half() -> Self {
        Self {
            kind: KernelKind::Half,
            lower_bound: S::zero(),
        }
    }

    pub fn distance() -> Self {
        Self {
            kind: KernelKind::Distance,
            lower_bound: S::zero(),
        }
    }

    pub fn grid(values: PixelFunction2<S>) -> Result<Self> {
        if !values.is_symmetric() {
            return Err(Error::KernelRange("grid kernel must be symmetric".into()));
        }
        Ok(Self {
            kind: KernelKind::Grid { values },
            lower_bound: S::zero(),
        })
    }

    /// Floored distance: `max(|x - y|, floor)`.
    pub fn floored_distance(floor: S) -> Self {
        Self {
            kind: KernelKind::Max {
                a: Box::new(KernelKind::Distance),
                b: Box::new(KernelKind::Constant { value: floor }),
            },
            lower_bound: floor,
        }
    }

    pub fn with_lower_bound(mut self, r: S) -> Self {
        self.lower_bound = r;
        self
    }

    pub fn eval(&self, x: S, y: S) -> S {
        eval_kind(&self.kind, x, y)
    }

    /// Structural checks serde cannot express: grid symmetry, nonnegative
    /// band widths, finite constants.
    pub fn validate(&self) -> Result<()> {
        validate_kind(&self.kind)
    }

    /// Exact value when the kernel is constant on the cell
    /// `[i/n, (i+1)/n) x [j/n, (j+1)/n)`, `None` otherwise.
    pub(crate) fn constant_on_cell(&self, i: usize, j: usize, n: usize) -> Option<S> {
        constant_on_cell_kind(&self.kind, i, j, n)
    }

    /// `(value_on, value_off, covered_fraction)` when the kernel takes two
    /// values on the cell, split along straight lines.
    pub(crate) fn cell_two_valued(&self, i: usize, j: usize, n: usize) -> Option<(S, S, S)> {
        two_valued_on_cell(&self.kind, i, j, n)
    }

    /// Mean of `f(kernel)` over the cell `(i, j)` of the `n`-grid. Exact
    /// for cell-constant kernels and for two-valued (indicator-built)
    /// kernels, whose covered-area fractions are computed by polygon
    /// clipping; midpoint quadrature with dyadic refinement otherwise.
    pub fn cell_mean_map(&self, i: usize, j: usize, n: usize, f: impl Fn(S) -> S) -> S {
        if let Some(v) = self.constant_on_cell(i, j, n) {
            return f(v);
        }
        if let Some((on, off, frac)) = two_valued_on_cell(&self.kind, i, j, n) {
            return frac * f(on) + (S::one() - frac) * f(off);
        }
        let nn = S::from_usize_(n);
        let x0 = S::from_usize_(i) / nn;
        let x1 = S::from_usize_(i + 1) / nn;
        let y0 = S::from_usize_(j) / nn;
        let y1 = S::from_usize_(j + 1) / nn;
        let max_k = (KERNEL_QUAD_CAP / n).max(4);
        cell_mean_2d(
            &|x, y| f(self.eval(x, y)),
            x0,
            x1,
            y0,
            y1,
            S::f(KERNEL_QUAD_TOL),
            max_k,
        )
    }

    pub fn cell_mean(&self, i: usize, j: usize, n: usize) -> S {
        self.cell_mean_map(i, j, n, |v| v)
    }

    /// Cell-averaging projection onto the `n x n` pixel grid.
    pub fn project(&self, n: usize) -> PixelFunction2<S> {
        let mut values = crate::matrix::SquareMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = self.cell_mean(i, j, n);
                values.set_sym(i, j, v);
            }
        }
        PixelFunction2::new(values).expect("n >= 1")
    }
}

fn eval_kind<S: Scalar>(kind: &KernelKind<S>, x: S, y: S) -> S {
    match kind {
        KernelKind::Constant { value } => *value,
        KernelKind::Band { width } => {
            if (x - y).abs() < *width {
                S::one()
            } else {
                S::zero()
            }
        }
        KernelKind::Half => {
            if x + y < S::one() {
                S::one()
            } else {
                S::zero()
            }
        }
        KernelKind::Distance => (x - y).abs(),
        KernelKind::Grid { values } => values.eval(x, y),
        KernelKind::Product { a, b } => eval_kind(a, x, y) * eval_kind(b, x, y),
        KernelKind::Max { a, b } => eval_kind(a, x, y).max(eval_kind(b, x, y)),
        KernelKind::Scale { factor, inner } => *factor * eval_kind(inner, x, y),
    }
}

fn validate_kind<S: Scalar>(kind: &KernelKind<S>) -> Result<()> {
    match kind {
        KernelKind::Constant { value } => {
            if !value.is_finite() {
                return Err(Error::KernelRange("constant kernel must be finite".into()));
            }
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        KernelKind::Band { width } => {
            if !(*width >= S::zero()) {
                return Err(Error::KernelRange("band width must be nonnegative".into()));
            }
        }
        KernelKind::Half | KernelKind::Distance => {}
        KernelKind::Grid { values } => {
            if !values.is_symmetric() {
                return Err(Error::KernelRange("grid kernel must be symmetric".into()));
            }
        }
        KernelKind::Product { a, b } | KernelKind::Max { a, b } => {
            validate_kind(a)?;
            validate_kind(b)?;
        }
        KernelKind::Scale { factor, inner } => {
            if !factor.is_finite() {
                return Err(Error::KernelRange("scale factor must be finite".into()));
            }
            validate_kind(inner)?;
        }
    }
    Ok(())
}

fn constant_on_cell_kind<S: Scalar>(
    kind: &KernelKind<S>,
    i: usize,
    j: usize,
    n: usize,
) -> Option<S> {
    let nn = S::from_usize_(n);
    let corners = || {
        let x0 = S::from_usize_(i) / nn;
        let x1 = S::from_usize_(i + 1) / nn;
        let y0 = S::from_usize_(j) / nn;
        let y1 = S::from_usize_(j + 1) / nn;
        (x0, x1, y0, y1)
    };
    match kind {
        KernelKind::Constant { value } => Some(*value),
        KernelKind::Band { width } => {
            // |x - y| on a grid cell attains its extremes at corners (cells
            // with i == j contain the diagonal, where a corner gives 0)
            let (x0, x1, y0, y1) = corners();
            let d = [x0 - y0, x0 - y1, x1 - y0, x1 - y1];
            let min = d.iter().fold(S::infinity(), |a, &v| a.min(v.abs()));
            let max = d.iter().fold(S::zero(), |a, &v| a.max(v.abs()));
            if max <= *width {
                // the excluded set within the cell is at most a corner
                Some(S::one())
            } else if min >= *width {
                Some(S::zero())
            } else {
                None
            }
        }
        KernelKind::Half => {
            let (x0, x1, y0, y1) = corners();
            if x1 + y1 <= S::one() {
                // right-open cells: the closed corner x1+y1 = 1 has measure 0
                Some(S::one())
            } else if x0 + y0 >= S::one() {
                Some(S::zero())
            } else {
                None
            }
        }
        // never constant on a cell; the quadrature path is exact for it
        // anyway off the diagonal (midpoint rules integrate linear
        // functions exactly)
        KernelKind::Distance => None,
        KernelKind::Grid { values } => {
            let k = values.n();
            if n.is_multiple_of(k) {
                let q = n / k;
                Some(values.get(i / q, j / q))
            } else {
                None
            }
        }
        KernelKind::Product { a, b } => {
            Some(constant_on_cell_kind(a, i, j, n)? * constant_on_cell_kind(b, i, j, n)?)
        }
        KernelKind::Max { a, b } => {
            Some(constant_on_cell_kind(a, i, j, n)?.max(constant_on_cell_kind(b, i, j, n)?))
        }
        KernelKind::Scale { factor, inner } => {
            Some(*factor * constant_on_cell_kind(inner, i, j, n)?)
        }
    }
}

/// Kernels taking two values on a cell, split by straight lines: returns
/// `(value_on, value_off, covered_fraction)`.
fn two_valued_on_cell<S: Scalar>(
    kind: &KernelKind<S>,
    i: usize,
    j: usize,
    n: usize,
) -> Option<(S, S, S)> {
    let nn = S::from_usize_(n);
    let cell = || {
        (
            S::from_usize_(i) / nn,
            S::from_usize_(i + 1) / nn,
            S::from_usize_(j) / nn,
            S::from_usize_(j + 1) / nn,
        )
    };
    match kind {
        KernelKind::Band { width } => {
            let (x0, x1, y0, y1) = cell();
            // {|x - y| < d} = {x - y < d} cut with {y - x < d}
            let poly = rect_polygon(x0, x1, y0, y1);
            let poly = clip_halfplane(&poly, S::one(), -S::one(), *width);
            let poly = clip_halfplane(&poly, -S::one(), S::one(), *width);
            let frac = polygon_area(&poly) * nn * nn;
            Some((S::one(), S::zero(), frac))
        }
        KernelKind::Half => {
            let (x0, x1, y0, y1) = cell();
            let poly = rect_polygon(x0, x1, y0, y1);
            let poly = clip_halfplane(&poly, S::one(), S::one(), S::one());
            let frac = polygon_area(&poly) * nn * nn;
            Some((S::one(), S::zero(), frac))
        }
        KernelKind::Product { a, b } => {
            if let Some(c) = constant_on_cell_kind(a, i, j, n) {
                let (on, off, frac) = two_valued_on_cell(b, i, j, n)?;
                Some((c * on, c * off, frac))
            } else if let Some(c) = constant_on_cell_kind(b, i, j, n) {
                let (on, off, frac) = two_valued_on_cell(a, i, j, n)?;
                Some((c * on, c * off, frac))
            } else {
                None
            }
        }
        KernelKind::Max { a, b } => {
            if let Some(c) = constant_on_cell_kind(a, i, j, n) {
                let (on, off, frac) = two_valued_on_cell(b, i, j, n)?;
                Some((c.max(on), c.max(off), frac))
            } else if let Some(c) = constant_on_cell_kind(b, i, j, n) {
                let (on, off, frac) = two_valued_on_cell(a, i, j, n)?;
                Some((c.max(on), c.max(off), frac))
            } else {
                None
            }
        }
        KernelKind::Scale { factor, inner } => {
            let (on, off, frac) = two_valued_on_cell(inner, i, j, n)?;
            Some((*factor * on, *factor * off, frac))
        }
        _ => None,
    }
}

fn rect_polygon<S: Scalar>(x0: S, x1: S, y0: S, y1: S) -> Vec<(S, S)> {
    vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
}

/// Sutherland-Hodgman clip of a convex polygon by `a x + b y < c`.
fn clip_halfplane<S: Scalar>(poly: &[(S, S)], a: S, b: S, c: S) -> Vec<(S, S)> {
    let inside = |p: &(S, S)| a * p.0 + b * p.1 <= c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let pin = inside(&p);
        let qin = inside(&q);
        if pin {
            out.push(p);
        }
        if pin != qin {
            let fp = a * p.0 + b * p.1 - c;
            let fq = a * q.0 + b * q.1 - c;
            let t = fp / (fp - fq);
            out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
    }
    out
}

fn polygon_area<S: Scalar>(poly: &[(S, S)]) -> S {
    if poly.len() < 3 {
        return S::zero();
    }
    let mut acc = S::zero();
    for k in 0..poly.len() {
        let (x0, y0) = poly[k];
        let (x1, y1) = poly[(k + 1) % poly.len()];
        acc += x0 * y1 - x1 * y0;
    }
    (acc * S::f(0.5)).abs()
}
