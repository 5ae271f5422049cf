//! Tensor shifted-Legendre moments: weak-convergence proxies for kernel
//! sequences. The bank pairs `P_k(x) P_l(y)` with `k <= l`, which spans the
//! symmetric low-frequency structure a step-function sequence can carry.

use crate::graphon::PixelFunction2;
use crate::scalar::Scalar;

/// Antiderivative of the shifted Legendre polynomial `P_k` on `[0, 1]`,
/// `k <= 3`.
fn antiderivative<S: Scalar>(k: usize, x: S) -> S {
    match k {
        0 => x,
        1 => x * x - x,
        2 => ((S::f(2.0) * x - S::f(3.0)) * x + S::one()) * x,
        3 => (((S::f(5.0) * x - S::f(10.0)) * x + S::f(6.0)) * x - S::one()) * x,
        _ => unreachable!("bank degree is at most 3"),
    }
}

#[derive(Clone, Debug)]
pub struct MomentBank {
    pairs: Vec<(usize, usize)>,
}

impl Default for MomentBank {
    fn default() -> Self {
        let mut pairs = Vec::new();
        for k in 0..=3usize {
            for l in k..=3usize {
                pairs.push((k, l));
            }
        }
        Self { pairs }
    }
}

impl MomentBank {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.pairs
            .iter()
            .map(|(k, l)| format!("p{k}q{l}"))
            .collect()
    }

    /// Exact moments `int int v(x, y) P_k(x) P_l(y) dx dy` of a step
    /// function, symmetrized over the pair.
    pub fn moments<S: Scalar>(&self, v: &PixelFunction2<S>) -> Vec<S> {
        let n = v.n();
        let nn = S::from_usize_(n);
        // cell integrals of each polynomial
        let cell_ints: Vec<Vec<S>> = (0..=3usize)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        let a = S::from_usize_(i) / nn;
                        let b = S::from_usize_(i + 1) / nn;
                        antiderivative(k, b) - antiderivative(k, a)
                    })
                    .collect()
            })
            .collect();

        self.pairs
            .iter()
            .map(|&(k, l)| {
                let mut acc = S::zero();
                for i in 0..n {
                    for j in 0..n {
                        let w = (cell_ints[k][i] * cell_ints[l][j]
                            + cell_ints[l][i] * cell_ints[k][j])
                            * S::f(0.5);
                        acc += v.get(i, j) * w;
                    }
                }
                acc
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::lift_matrix;
    use crate::matrix::SquareMatrix;

    #[test]
    fn constant_function_hits_only_the_mass_moment() {
        let v = lift_matrix(&SquareMatrix::<f64>::constant(4, 2.0));
        let bank = MomentBank::default();
        let m = bank.moments(&v);
        assert!((m[0] - 2.0).abs() < 1e-14);
        for &x in &m[1..] {
            assert!(x.abs() < 1e-14, "higher moment {x}");
        }
    }

    #[test]
    fn linear_moment_of_a_separable_step() {
        // v(x, y) = sign-split in x: moments against P_1(x) P_0(y)
        let mut mtx = SquareMatrix::<f64>::zeros(2);
        mtx[(0, 0)] = 1.0;
        mtx[(0, 1)] = 1.0;
        mtx[(1, 0)] = -1.0;
        mtx[(1, 1)] = -1.0;
        let v = lift_matrix(&mtx);
        let bank = MomentBank::default();
        let m = bank.moments(&v);
        // int P_1 over [0, 1/2] is -1/4, over [1/2, 1] is 1/4;
        // symmetrized (0,1) moment: (1*(-1/4) + ... ) averaged = -1/4
        let idx_01 = 1; // pairs ordered (0,0), (0,1), (0,2), ...
        assert!((m[idx_01] + 0.25).abs() < 1e-14, "moment {}", m[idx_01]);
        assert!(m[0].abs() < 1e-14);
    }
}
