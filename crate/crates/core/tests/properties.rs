use pcs_core::penalties::{project_onto_c, quantize_coeffs, rdp_denoise, rdp_denoise_bounded, rdp_denoise_ti, Basis};
use pcs_core::{RowScheme, SensingMatrix};
use proptest::prelude::*;

fn pow2_vec(max_log: u32) -> impl Strategy<Value = Vec<f64>> {
    (0..=max_log).prop_flat_map(|k| prop::collection::vec(-50.0..50.0f64, 1usize << k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrices_preserve_flux(
        n in 1usize..40,
        m in 1usize..60,
        w_frac in 0.01f64..1.0,
        seed in any::<u64>(),
        f in prop::collection::vec(0.0..1e3f64, 60),
    ) {
        let w = ((w_frac * m as f64).ceil() as usize).clamp(1, m);
        let a = SensingMatrix::build(n, m, RowScheme::FixedRowWeight { w }, seed).unwrap();
        let f = &f[..m];
        let af = a.apply(f).unwrap();
        prop_assert!(af.iter().all(|&x| x >= 0.0));
        let total: f64 = f.iter().sum();
        prop_assert!(af.iter().sum::<f64>() <= total * (1.0 + 1e-12) + 1e-12);
        prop_assert!(a.rows().all(|r| r.len() == w));
    }

    #[test]
    fn matrix_file_round_trips(n in 1usize..10, m in 1usize..20, p in 0.05f64..0.95, seed in any::<u64>()) {
        let a = SensingMatrix::build(n, m, RowScheme::IidBernoulli { p }, seed).unwrap();
        let b = SensingMatrix::read_from(a.to_text().as_bytes()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn rdp_beats_trivial_partitions(v in pow2_vec(6), gamma in 0.0..100.0f64) {
        let fit = rdp_denoise(&v, gamma).unwrap();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let one_leaf = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() + gamma;
        let all_leaves = gamma * n;
        prop_assert!(fit.cost <= one_leaf + 1e-9);
        prop_assert!(fit.cost <= all_leaves + 1e-9);
        let fit_sum: f64 = fit.to_vector().iter().sum();
        prop_assert!((fit_sum - v.iter().sum::<f64>()).abs() < 1e-8 * (1.0 + n * 50.0));
    }

    #[test]
    fn bounded_rdp_is_nonnegative(v in pow2_vec(5), gamma in 0.0..50.0f64) {
        let fit = rdp_denoise_bounded(&v, gamma, Some(0.0)).unwrap();
        prop_assert!(fit.to_vector().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn cycle_spinning_preserves_mass(v in pow2_vec(5), gamma in 0.0..50.0f64) {
        let ti = rdp_denoise_ti(&v, gamma).unwrap();
        let a: f64 = ti.iter().sum();
        let b: f64 = v.iter().sum();
        prop_assert!((a - b).abs() < 1e-8 * (1.0 + v.len() as f64 * 50.0));
    }

    #[test]
    fn haar_is_orthonormal(v in pow2_vec(8)) {
        let c = Basis::Haar.forward(&v).unwrap();
        let back = Basis::Haar.inverse(&c).unwrap();
        let e2: f64 = v.iter().map(|x| x * x).sum();
        let c2: f64 = c.iter().map(|x| x * x).sum();
        prop_assert!((e2 - c2).abs() <= 1e-10 * (1.0 + e2));
        for (a, b) in v.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn projection_is_feasible_and_idempotent(
        g in prop::collection::vec(-100.0..100.0f64, 1..30),
        intensity in 0.1..1e4f64,
        c_frac in 0.0..0.99f64,
    ) {
        let c = c_frac / g.len() as f64;
        let p = project_onto_c(&g, intensity, c).unwrap();
        let s: f64 = p.iter().sum();
        prop_assert!((s - intensity).abs() <= 1e-9 * intensity);
        prop_assert!(p.iter().all(|&x| x >= c * intensity - 1e-9 * intensity));
        let pp = project_onto_c(&p, intensity, c).unwrap();
        for (a, b) in p.iter().zip(&pp) {
            prop_assert!((a - b).abs() <= 1e-9 * intensity);
        }
    }

    #[test]
    fn quantized_bins_are_in_range(theta in prop::collection::vec(-1.0..=1.0f64, 1..100)) {
        let q = quantize_coeffs(&theta, 1.0).unwrap();
        prop_assert!(q.nonzeros.iter().all(|&(i, b)| i < theta.len() && b < q.bins()));
        prop_assert_eq!(q.sparsity(), theta.iter().filter(|&&t| t != 0.0).count());
    }
}
