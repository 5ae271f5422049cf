//! Step functions on the unit interval and unit square, constant on the
//! cells of a uniform grid. Products, projections, and inner products of
//! two step functions are computed exactly on the merged grid, with cell
//! boundaries compared in integer arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::quadrature::integrate_piecewise;
use crate::scalar::Scalar;

/// Step function on `[0, 1]`. Cells are right-open except the last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PixelFunction1<S> {
    values: Vec<S>,
}

impl<S: Scalar> PixelFunction1<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Shape(
                "pixel function needs at least one cell".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn constant(n: usize, value: S) -> Self {
        Self {
            values: vec![value; n],
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn get(&self, i: usize) -> S {
        self.values[i]
    }

    pub fn eval(&self, x: S) -> S {
        let n = self.values.len();
        let idx = (x * S::from_usize_(n)).floor().as_f64() as usize;
        self.values[idx.min(n - 1)]
    }

    pub fn integral(&self) -> S {
        self.values.iter().copied().sum::<S>() / S::from_usize_(self.n())
    }

    pub fn mean(&self) -> S {
        self.integral()
    }

    pub fn l2_norm_sq(&self) -> S {
        self.values.iter().map(|&v| v * v).sum::<S>() / S::from_usize_(self.n())
    }

    /// Exact `int u v` over the merged grid.
    pub fn inner_product(&self, other: &Self) -> S {
        let mut acc = S::zero();
        merged_segments(self.n(), other.n(), |i, j, len| {
            acc += self.values[i] * other.values[j] * len;
        });
        acc
    }

    /// Exact cell-averaging projection to resolution `m`. Idempotent at
    /// equal resolution and consistent under nesting.
    pub fn project(&self, m: usize) -> Self {
        if m == self.n() {
            return self.clone();
        }
        let mut out = vec![S::zero(); m];
        merged_segments(m, self.n(), |target, source, len| {
            out[target] += self.values[source] * len;
        });
        let mm = S::from_usize_(m);
        for v in out.iter_mut() {
            *v *= mm;
        }
        Self { values: out }
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Segments of the merged grid of two resolutions on `[0, 1]`: calls
/// `visit(cell_a, cell_b, segment_length)` left to right. Boundaries are
/// compared exactly in units of `1/(k*m)`.
fn merged_segments<S: Scalar>(k: usize, m: usize, mut visit: impl FnMut(usize, usize, S)) {
    let total = k * m;
    let denom = S::from_usize_(total);
    let mut t = 0usize;
    let mut i = 0usize;
    let mut j = 0usize;
    while t < total {
        let next_i = (i + 1) * m;
        let next_j = (j + 1) * k;
        let next = next_i.min(next_j);
        visit(i, j, S::from_usize_(next - t) / denom);
        if next == next_i {
            i += 1;
        }
        if next == next_j {
            j += 1;
        }
        t = next;
    }
}

/// Cell averages of an arbitrary integrable function, by adaptive
/// quadrature per cell; `breaks` lists interior jump locations.
pub fn project_fn1<S: Scalar>(
    f: impl Fn(S) -> S,
    n: usize,
    breaks: &[S],
    rel_tol: S,
) -> PixelFunction1<S> {
    let nn = S::from_usize_(n);
    let values = (0..n)
        .map(|i| {
            let a = S::from_usize_(i) / nn;
            let b = S::from_usize_(i + 1) / nn;
            integrate_piecewise(&f, a, b, breaks, rel_tol) * nn
        })
        .collect();
    PixelFunction1 { values }
}

/// Lift a vector to its step function.
pub fn lift_vector<S: Scalar>(v: &[S]) -> PixelFunction1<S> {
    PixelFunction1 { values: v.to_vec() }
}

/// Step function on the unit square, constant on `n x n` cells. Not
/// necessarily symmetric: pressure-difference fields are antisymmetric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PixelFunction2<S> {
    values: SquareMatrix<S>,
}

impl<S: Scalar> PixelFunction2<S> {
    pub fn new(values: SquareMatrix<S>) -> Result<Self> {
        if values.n() == 0 {
            return Err(Error::Shape(
                "pixel function needs at least one cell".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn constant(n: usize, value: S) -> Self {
        Self {
            values: SquareMatrix::constant(n, value),
        }
    }

    pub fn n(&self) -> usize {
        self.values.n()
    }

    pub fn values(&self) -> &SquareMatrix<S> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.values[(i, j)]
    }

    pub fn is_symmetric(&self) -> bool {
        self.values.is_symmetric()
    }

    pub fn eval(&self, x: S, y: S) -> S {
        let n = self.n();
        let i = ((x * S::from_usize_(n)).floor().as_f64() as usize).min(n - 1);
        let j = ((y * S::from_usize_(n)).floor().as_f64() as usize).min(n - 1);
        self.values[(i, j)]
    }

    pub fn integral(&self) -> S {
        let n = self.n();
        let mut acc = S::zero();
        for i in 0..n {
            for j in 0..n {
                acc += self.values[(i, j)];
            }
        }
        acc / (S::from_usize_(n) * S::from_usize_(n))
    }

    pub fn l1_norm(&self) -> S {
        let n = self.n();
        let mut acc = S::zero();
        for i in 0..n {
            for j in 0..n {
                acc += self.values[(i, j)].abs();
            }
        }
        acc / (S::from_usize_(n) * S::from_usize_(n))
    }

    pub fn l2_norm_sq(&self) -> S {
        let n = self.n();
        let mut acc = S::zero();
        for i in 0..n {
            for j in 0..n {
                let v = self.values[(i, j)];
                acc += v * v;
            }
        }
        acc / (S::from_usize_(n) * S::from_usize_(n))
    }

    /// Exact `int int A B` over the merged tensor grid.
    pub fn inner_product(&self, other: &Self) -> S {
        let mut segs: Vec<(usize, usize, S)> = Vec::new();
        merged_segments(self.n(), other.n(), |i, j, len| segs.push((i, j, len)));
        let mut acc = S::zero();
        for &(ix, jx, lx) in &segs {
            for &(iy, jy, ly) in &segs {
                acc += self.values[(ix, iy)] * other.values[(jx, jy)] * lx * ly;
            }
        }
        acc
    }

    /// Exact cell-averaging projection to resolution `m`.
    pub fn project(&self, m: usize) -> Self {
        if m == self.n() {
            return self.clone();
        }
        let mut segs: Vec<(usize, usize, S)> = Vec::new();
        merged_segments(m, self.n(), |target, source, len| {
            segs.push((target, source, len))
        });
        let mut out = SquareMatrix::zeros(m);
        for &(tx, sx, lx) in &segs {
            for &(ty, sy, ly) in &segs {
                out[(tx, ty)] += self.values[(sx, sy)] * lx * ly;
            }
        }
        let mm = S::from_usize_(m);
        let area = mm * mm;
        for i in 0..m {
            for j in 0..m {
                out[(i, j)] *= area;
            }
        }
        Self { values: out }
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            values: self.values.map(&f),
        }
    }

    /// Dense CSV grid, one row per line, full float precision.
    pub fn to_csv_string(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| format!("{:.16e}", self.values[(i, j)].as_f64()))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<S>> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: Vec<S> = line
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map(S::f)
                        .map_err(|e| Error::InvalidDescriptor(format!("bad CSV float: {e}")))
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        Self::new(SquareMatrix::from_rows(rows)?)
    }
}

/// Lift a matrix to its step function on the unit square.
pub fn lift_matrix<S: Scalar>(b: &SquareMatrix<S>) -> PixelFunction2<S> {
    PixelFunction2 { values: b.clone() }
}

/// The difference field `(x, y) -> p(x) - p(y)` at pixel resolution;
/// antisymmetric by construction.
pub fn pressure_difference_field<S: Scalar>(p: &PixelFunction1<S>) -> PixelFunction2<S> {
    let n = p.n();
    PixelFunction2 {
        values: SquareMatrix::from_fn(n, |i, j| p.get(i) - p.get(j)),
    }
}

/// A zero-mean 1-D step function (projected source densities live here).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceGrid<S>(PixelFunction1<S>);

impl<S: Scalar> SourceGrid<S> {
    pub fn new(pixel: PixelFunction1<S>) -> Result<Self> {
        let mean = pixel.mean();
        if mean.abs() > S::f(1e-12) {
            return Err(Error::NonZeroMeanDensity {
                mean: mean.as_f64(),
            });
        }
        Ok(Self(pixel))
    }

    pub fn pixel(&self) -> &PixelFunction1<S> {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lift_reproduces_definition_and_integral() {
        let mut b = SquareMatrix::<f64>::zeros(2);
        b.set_sym(0, 1, 1.0);
        let pix = lift_matrix(&b);
        assert_eq!(pix.eval(0.1, 0.7), 1.0);
        assert_eq!(pix.eval(0.7, 0.1), 1.0);
        assert_eq!(pix.eval(0.1, 0.2), 0.0);
        assert_eq!(pix.eval(0.9, 0.9), 0.0);
        // integral equals the cell-sum identity (1/N^2) sum B_ij
        assert!((pix.integral() - 0.5).abs() < 1e-15);

        let c = lift_matrix(&SquareMatrix::constant(3, 2.5));
        assert_eq!(c.eval(0.99, 0.0), 2.5);
    }

    #[test]
    fn projection_averages_a_linear_function() {
        let u = project_fn1(|x: f64| x, 2, &[], 1e-12);
        assert!((u.get(0) - 0.25).abs() < 1e-14);
        assert!((u.get(1) - 0.75).abs() < 1e-14);
    }

    #[test]
    fn projection_nesting_and_idempotence() {
        let fine =
            PixelFunction1::<f64>::new(vec![0.3, -1.2, 2.0, 0.7, -0.4, 1.1, 0.0, -0.5]).unwrap();
        let via4 = fine.project(4).project(2);
        let direct = fine.project(2);
        for i in 0..2 {
            assert!((via4.get(i) - direct.get(i)).abs() < 1e-15);
        }
        let idem = direct.project(2);
        assert_eq!(idem.values(), direct.values());

        let c = PixelFunction1::constant(5, 3.3).project(3);
        assert!(c.values().iter().all(|&v| (v - 3.3f64).abs() < 1e-15));
    }

    #[test]
    fn inner_products_match_common_grid() {
        let u = PixelFunction1::new(vec![1.0, -2.0, 0.5]).unwrap();
        let v = PixelFunction1::new(vec![0.4, 1.5]).unwrap();
        // common grid of resolution 6
        let u6: Vec<f64> = (0..6).map(|i| u.get(i / 2)).collect();
        let v6: Vec<f64> = (0..6).map(|i| v.get(i / 3)).collect();
        let expected: f64 = u6.iter().zip(&v6).map(|(a, b)| a * b).sum::<f64>() / 6.0;
        assert!((u.inner_product(&v) - expected).abs() < 1e-15);
    }

    #[test]
    fn difference_field_is_antisymmetric() {
        let p = PixelFunction1::new(vec![1.0, -1.0]).unwrap();
        let d = pressure_difference_field(&p);
        assert_eq!(d.get(0, 1), 2.0);
        assert_eq!(d.get(1, 0), -2.0);
        assert_eq!(d.get(0, 0), 0.0);

        let c = pressure_difference_field(&PixelFunction1::constant(4, 2.0));
        assert!(c.values().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_mean_difference_field_doubles_the_norm() {
        // ||p(x) - p(y)||^2 = 2 ||p||^2 for zero-mean p
        let p = PixelFunction1::<f64>::new(vec![0.6, -0.2, 0.1, -0.5]).unwrap();
        let d = pressure_difference_field(&p);
        assert!((d.l2_norm_sq() - 2.0 * p.l2_norm_sq()).abs() < 1e-15);
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let mut m = SquareMatrix::<f64>::zeros(3);
        m.set_sym(0, 1, core::f64::consts::PI);
        m.set_sym(1, 2, -1.0 / 3.0);
        m[(2, 2)] = 1e-17;
        let pix = lift_matrix(&m);
        let text = pix.to_csv_string();
        let back = PixelFunction2::from_csv_str(&text).unwrap();
        assert_eq!(back.values(), pix.values());
    }

    #[test]
    fn source_grid_requires_zero_mean() {
        assert!(SourceGrid::new(PixelFunction1::new(vec![1.0, -1.0]).unwrap()).is_ok());
        assert!(SourceGrid::new(PixelFunction1::new(vec![1.0, 0.0]).unwrap()).is_err());
    }
}
