//! Numerical integration.
//!
//! One-dimensional cell integrals use adaptive composite Gauss-Legendre with
//! a per-interval relative tolerance. Two-dimensional kernel integrals use a
//! tensor midpoint rule with dyadic refinement, which integrates step
//! functions exactly once the resolution is commensurate.

use crate::scalar::Scalar;

/// 15-point Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`.
#[allow(clippy::excessive_precision)]
const GL15_NODES: [f64; 15] = [
    -0.987_992_518_020_485_4,
    -0.937_273_392_400_705_9,
    -0.848_206_583_410_427_2,
    -0.724_417_731_360_17,
    -0.570_972_172_608_538_8,
    -0.394_151_347_077_563_4,
    -0.201_194_093_997_434_5,
    0.0,
    0.201_194_093_997_434_5,
    0.394_151_347_077_563_4,
    0.570_972_172_608_538_8,
    0.724_417_731_360_17,
    0.848_206_583_410_427_2,
    0.937_273_392_400_705_9,
    0.987_992_518_020_485_4,
];

#[allow(clippy::excessive_precision)]
const GL15_WEIGHTS: [f64; 15] = [
    0.030_753_241_996_117_268,
    0.070_366_047_488_108_12,
    0.107_159_220_467_171_93,
    0.139_570_677_926_154_31,
    0.166_269_205_816_993_93,
    0.186_161_000_015_562_21,
    0.198_431_485_327_111_58,
    0.202_578_241_925_561_27,
    0.198_431_485_327_111_58,
    0.186_161_000_015_562_21,
    0.166_269_205_816_993_93,
    0.139_570_677_926_154_31,
    0.107_159_220_467_171_93,
    0.070_366_047_488_108_12,
    0.030_753_241_996_117_268,
];

fn gauss15<S: Scalar>(f: &impl Fn(S) -> S, a: S, b: S) -> S {
    let half = S::f(0.5) * (b - a);
    let mid = S::f(0.5) * (a + b);
    let mut acc = S::zero();
    for (node, weight) in GL15_NODES.iter().zip(GL15_WEIGHTS.iter()) {
        acc += S::f(*weight) * f(mid + half * S::f(*node));
    }
    half * acc
}

fn adaptive<S: Scalar>(f: &impl Fn(S) -> S, a: S, b: S, tol: S, whole: S, depth: u32) -> S {
    let mid = S::f(0.5) * (a + b);
    let left = gauss15(f, a, mid);
    let right = gauss15(f, mid, b);
    let split = left + right;
    let err = (split - whole).abs();
    if depth == 0 || err <= tol * (split.abs() + S::f(1e-300)) {
        return split;
    }
    let half_tol = tol * S::f(0.5);
    adaptive(f, a, mid, half_tol, left, depth - 1) + adaptive(f, mid, b, half_tol, right, depth - 1)
}

/// Adaptive Gauss-Legendre integral of `f` over `[a, b]` to relative
/// tolerance `rel_tol`.
pub fn integrate<S: Scalar>(f: impl Fn(S) -> S, a: S, b: S, rel_tol: S) -> S {
    if a == b {
        return S::zero();
    }
    let whole = gauss15(&f, a, b);
    adaptive(&f, a, b, rel_tol, whole, 40)
}

/// Integral of `f` over `[a, b]` split at the given breakpoints, so each
/// smooth piece is integrated separately. Breakpoints outside `(a, b)` are
/// ignored; `breaks` must be ascending.
pub fn integrate_piecewise<S: Scalar>(
    f: impl Fn(S) -> S,
    a: S,
    b: S,
    breaks: &[S],
    rel_tol: S,
) -> S {
    let mut acc = S::zero();
    let mut left = a;
    for &c in breaks {
        if c > left && c < b {
            acc += integrate(&f, left, c, rel_tol);
            left = c;
        }
    }
    acc + integrate(&f, left, b, rel_tol)
}

/// Mean of `f` over the rectangle `[x0, x1] x [y0, y1]` by a `k x k` tensor
/// midpoint rule.
fn midpoint_mean_2d<S: Scalar>(f: &impl Fn(S, S) -> S, x0: S, x1: S, y0: S, y1: S, k: usize) -> S {
    let kx = S::from_usize_(k);
    let hx = (x1 - x0) / kx;
    let hy = (y1 - y0) / kx;
    let mut acc = S::zero();
    for i in 0..k {
        let x = x0 + hx * (S::from_usize_(i) + S::f(0.5));
        for j in 0..k {
            let y = y0 + hy * (S::from_usize_(j) + S::f(0.5));
            acc += f(x, y);
        }
    }
    acc / (kx * kx)
}

/// Mean of `f` over a rectangle by dyadic midpoint refinement: subdivision
/// doubles until two consecutive doublings agree to `rel_tol` or `max_k`
/// points per side is reached.
pub fn cell_mean_2d<S: Scalar>(
    f: &impl Fn(S, S) -> S,
    x0: S,
    x1: S,
    y0: S,
    y1: S,
    rel_tol: S,
    max_k: usize,
) -> S {
    let mut k = 1usize;
    let mut prev = midpoint_mean_2d(f, x0, x1, y0, y1, k);
    let mut agreements = 0u32;
    while k < max_k {
        k *= 2;
        let next = midpoint_mean_2d(f, x0, x1, y0, y1, k);
        if (next - prev).abs() <= rel_tol * (next.abs() + S::f(1e-300)) {
            agreements += 1;
            // require two consecutive agreements: a single one can be a
            // coincidence for step-function integrands
            if agreements >= 2 {
                return next;
            }
        } else {
            agreements = 0;
        }
        prev = next;
    }
    prev
}

/// Integral of `f` over the unit square at one fixed `m x m` midpoint grid,
/// optionally skipping the diagonal cells `i == j`. Skipping matches the
/// pairwise sums used for empirical inverse-length norms, where the diagonal
/// carries no pair.
pub fn unit_square_midpoint<S: Scalar>(f: &impl Fn(S, S) -> S, m: usize, skip_diagonal: bool) -> S {
    let mm = S::from_usize_(m);
    let mut acc = S::zero();
    for i in 0..m {
        let x = (S::from_usize_(i) + S::f(0.5)) / mm;
        for j in 0..m {
            if skip_diagonal && i == j {
                continue;
            }
            let y = (S::from_usize_(j) + S::f(0.5)) / mm;
            acc += f(x, y);
        }
    }
    acc / (mm * mm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_cosine_cell_exactly() {
        // int_0^{1/2} cos(pi x) dx = 1/pi
        let v = integrate(|x: f64| (core::f64::consts::PI * x).cos(), 0.0, 0.5, 1e-12);
        assert!((v - 1.0 / core::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn piecewise_split_handles_jumps() {
        // step function +1 on [0, 1/2), -1 on [1/2, 1]
        let f = |x: f64| if x < 0.5 { 1.0 } else { -1.0 };
        let v = integrate_piecewise(f, 0.0, 1.0, &[0.5], 1e-12);
        assert!(v.abs() < 1e-14);
        let v2 = integrate_piecewise(f, 0.25, 0.75, &[0.5], 1e-12);
        assert!(v2.abs() < 1e-14);
    }

    #[test]
    fn cell_mean_converges_on_smooth_integrand() {
        // mean of x*y over [0,1]^2 is 1/4
        let v = cell_mean_2d(&|x: f64, y: f64| x * y, 0.0, 1.0, 0.0, 1.0, 1e-10, 4096);
        assert!((v - 0.25).abs() < 1e-9);
    }

    #[test]
    fn midpoint_grid_is_exact_for_constants() {
        let v = unit_square_midpoint(&|_: f64, _: f64| 3.0, 16, false);
        assert!((v - 3.0).abs() < 1e-15);
        let v = unit_square_midpoint(&|_: f64, _: f64| 1.0, 10, true);
        assert!((v - 0.9).abs() < 1e-15);
    }
}
