//! Pixel lifting, cell-averaging projections, closed-form kernels, graph
//! generators, and the distance/integrability checks built on them.

pub mod integrability;
pub mod kernel;
pub mod pixel;
pub mod sample;

pub use integrability::{
    inverse_length_exponent, kernel_inverse_length_report, pixel_inverse_length_norm,
    point_cloud_inverse_length_report, IntegrabilityReport, NormBound,
};
pub use kernel::{Kernel, KernelKind};
pub use pixel::{
    lift_matrix, lift_vector, pressure_difference_field, project_fn1, PixelFunction1,
    PixelFunction2, SourceGrid,
};
pub use sample::{lengths_from_point_cloud, sample_graph_from_graphon};

use crate::quadrature::unit_square_midpoint;
use crate::scalar::Scalar;

/// L1 distance between two kernels, by a midpoint rule on a `resolution`
/// grid. Exact for step functions once the resolution is a common multiple
/// of theirs.
pub fn l1_distance<S: Scalar>(a: &Kernel<S>, b: &Kernel<S>, resolution: usize) -> S {
    unit_square_midpoint(
        &|x, y| (a.eval(x, y) - b.eval(x, y)).abs(),
        resolution,
        false,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SquareMatrix;

    #[test]
    fn identical_kernels_are_at_distance_zero() {
        let a = Kernel::band(0.4f64);
        assert_eq!(l1_distance(&a, &a.clone(), 64), 0.0);
    }

    #[test]
    fn complete_graph_pixels_approach_the_constant_graphon() {
        // lift of K_N differs from the all-ones graphon exactly on the
        // diagonal blocks, total mass 1/N
        for n in [4usize, 8, 16] {
            let w = sample_graph_from_graphon(
                &Kernel::constant(1.0f64),
                &Kernel::constant(1.0),
                n,
                0.0,
            )
            .unwrap();
            let pix = Kernel::grid(lift_matrix(&w.adjacency_matrix())).unwrap();
            let d = l1_distance(&pix, &Kernel::constant(1.0), 16 * n.min(16));
            assert!((d - 1.0 / n as f64).abs() < 1e-12, "n = {n}: distance {d}");
        }
    }

    #[test]
    fn band_pixel_distance_decays_like_one_over_n() {
        let band = Kernel::band(0.75f64);
        let lengths = Kernel::constant(1.0);
        let mut errors = Vec::new();
        for n in [8usize, 16, 32] {
            let g = sample_graph_from_graphon(&band, &lengths, n, 0.0).unwrap();
            let pix = Kernel::grid(lift_matrix(&g.adjacency_matrix())).unwrap();
            errors.push(l1_distance(&pix, &band, 960));
        }
        assert!(errors[0] > 0.0);
        assert!(
            errors[1] / errors[0] <= 0.75,
            "ratio {}",
            errors[1] / errors[0]
        );
        assert!(
            errors[2] / errors[1] <= 0.75,
            "ratio {}",
            errors[2] / errors[1]
        );
    }

    #[test]
    fn projection_operator_algebra_on_random_steps() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..25 {
            let fine = 24usize;
            let coarse = [1, 2, 3, 4, 6, 8, 12][rng.gen_range(0..7)];
            let u =
                PixelFunction1::new((0..fine).map(|_| rng.gen::<f64>() - 0.5).collect()).unwrap();
            let v =
                PixelFunction1::new((0..fine).map(|_| rng.gen::<f64>() - 0.5).collect()).unwrap();
            let pu = u.project(coarse);
            let pv = v.project(coarse);

            // self-adjointness of the projection
            let lhs = pu.inner_product(&v);
            let rhs = u.inner_product(&pv);
            assert!((lhs - rhs).abs() <= 1e-12);

            // mean preservation and non-expansiveness
            assert!((pu.integral() - u.integral()).abs() <= 1e-12);
            assert!(pu.l2_norm_sq() <= u.l2_norm_sq() + 1e-12);

            // idempotence is exact
            assert_eq!(pu.project(coarse).values(), pu.values());
        }
    }

    #[test]
    fn projection_self_adjoint_in_two_dimensions() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let fine = 12usize;
            let coarse = [2, 3, 4, 6][rng.gen_range(0..4)];
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                PixelFunction2::new(SquareMatrix::from_fn(fine, |_, _| rng.gen::<f64>() - 0.5))
                    .unwrap()
            };
            let u = mk(&mut rng);
            let v = mk(&mut rng);
            let lhs = u.project(coarse).inner_product(&v);
            let rhs = u.inner_product(&v.project(coarse));
            assert!((lhs - rhs).abs() <= 1e-12);
        }
    }
}
