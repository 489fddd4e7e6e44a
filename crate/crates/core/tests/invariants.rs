use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spikefisher::changepoint::{window_statistic, H2Form};
use spikefisher::model::{fisher_eigenvalues, sample_covariance, Population};
use spikefisher::rmt::{psi, FisherTransform, PsiInverse};
use spikefisher::spiketest::{partial_lss, two_sided_p};
use spikefisher::{FisherEigs, SpectralFn, SpectrumH};

fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Population::Gaussian.matrix(rows, cols, &mut rng)
}

/// Random well-conditioned matrix: identity plus a small perturbation.
fn near_identity(p: usize, seed: u64, scale: f64) -> DMatrix<f64> {
    DMatrix::identity(p, p) + gaussian(p, p, seed) * (scale / (p as f64).sqrt())
}

fn spectrum() -> impl Strategy<Value = SpectrumH> {
    (0.2f64..4.0, 0.2f64..4.0, 0.1f64..0.9).prop_map(|(a, b, w)| {
        SpectrumH::from_unsorted(vec![(a, w), (a + b, 1.0 - w)]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fisher_eigenvalues_are_congruence_invariant(p in 3usize..12, seed in 0u64..1000) {
        let x = gaussian(p, 3 * p, seed);
        let y = gaussian(p, 4 * p, seed + 1);
        let a = near_identity(p, seed + 2, 0.5);
        let s1 = sample_covariance(&x, false).unwrap();
        let s2 = sample_covariance(&y, false).unwrap();
        let base = fisher_eigenvalues(&s1, &s2, 3 * p, 4 * p).unwrap();
        let moved = fisher_eigenvalues(
            &(&a * &s1 * a.transpose()),
            &(&a * &s2 * a.transpose()),
            3 * p,
            4 * p,
        )
        .unwrap();
        for (l, m) in base.eigenvalues.iter().zip(&moved.eigenvalues) {
            prop_assert!((l - m).abs() <= 1e-8 * l.max(1.0), "{l} vs {m}");
        }
    }

    #[test]
    fn fisher_eigenvalue_sum_is_the_trace(p in 2usize..10, seed in 0u64..1000) {
        let s1 = sample_covariance(&gaussian(p, 2 * p, seed), false).unwrap();
        let s2 = sample_covariance(&gaussian(p, 3 * p, seed + 7), false).unwrap();
        let e = fisher_eigenvalues(&s1, &s2, 2 * p, 3 * p).unwrap();
        let direct = (&s1 * s2.try_inverse().unwrap()).trace();
        let sum: f64 = e.eigenvalues.iter().sum();
        prop_assert!((sum - direct).abs() <= 1e-9 * direct.abs().max(1.0));
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn stieltjes_transform_is_herglotz(
        h in spectrum(),
        c1 in 0.1f64..0.9,
        c2 in 0.1f64..0.8,
        re in -1.0f64..12.0,
        im in 0.01f64..3.0,
    ) {
        let ft = FisherTransform::new(c1, c2, &h).unwrap();
        let up = ft.solve(Complex64::new(re, im)).unwrap();
        prop_assert!(up.m_underline.im > 0.0);
        prop_assert!(up.residual < 1e-8);
        let down = ft.solve(Complex64::new(re, -im)).unwrap();
        prop_assert!((down.m_underline - up.m_underline.conj()).norm() <= 1e-8 * up.m_underline.norm().max(1.0));
    }

    #[test]
    fn spike_map_inverts_and_increases(
        h in spectrum(),
        c1 in 0.1f64..0.8,
        c2 in 0.1f64..0.6,
        lift in 0.05f64..20.0,
    ) {
        let inv = PsiInverse::new(c1, c2, &h).unwrap();
        let alpha = inv.threshold() * (1.0 + lift);
        let l = psi(alpha, c1, c2, &h).unwrap();
        prop_assert!(l > inv.edge());
        let back = inv.invert(l).unwrap();
        prop_assert!((back - alpha).abs() <= 1e-8 * alpha);
        let l2 = psi(alpha * 1.1, c1, c2, &h).unwrap();
        prop_assert!(l2 > l);
        prop_assert_eq!(inv.invert(0.5 * inv.edge()).unwrap(), inv.threshold());
    }

    #[test]
    fn partial_statistic_drops_the_top_terms(
        mut eig in prop::collection::vec(0.01f64..50.0, 4..30),
        m0 in 0usize..4,
    ) {
        eig.sort_by(|a, b| b.total_cmp(a));
        let e = FisherEigs::new(eig.clone(), 100, 200).unwrap();
        let full = partial_lss(&e, 0, &SpectralFn::X).unwrap();
        let part = partial_lss(&e, m0, &SpectralFn::X).unwrap();
        let top: f64 = eig[..m0].iter().sum();
        prop_assert!((full - part - top).abs() <= 1e-9 * full);
    }

    #[test]
    fn p_value_is_symmetric_and_bounded(z in -40.0f64..40.0) {
        let p = two_sided_p(z);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p - two_sided_p(-z)).abs() < 1e-15);
        prop_assert!(two_sided_p(z.abs() + 0.5) <= p);
    }

    #[test]
    fn window_statistic_ignores_scale_and_location(
        seed in 0u64..1000,
        scale in prop::collection::vec(0.1f64..10.0, 4),
        shift in prop::collection::vec(-5.0f64..5.0, 4),
    ) {
        let p = 4;
        let g1 = gaussian(p, 12, seed);
        let g2 = gaussian(p, 12, seed + 3);
        let map = |g: &DMatrix<f64>| DMatrix::from_fn(p, g.ncols(), |i, j| scale[i] * g[(i, j)] + shift[i]);
        let base = window_statistic(&g1, &g2, 1, H2Form::Derived, 0.05).unwrap();
        let moved = window_statistic(&map(&g1), &map(&g2), 1, H2Form::Derived, 0.05).unwrap();
        prop_assert!((base.z_score - moved.z_score).abs() <= 1e-8 * base.z_score.abs().max(1.0));
    }
}
