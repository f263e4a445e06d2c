use aerial_irs::channel::{
    channel_mr, channel_rg, compute_angles, end_to_end_channel, mrt_beamformer_charge, mrt_beamformer_comm, path_gain,
    received_charge_power, snr, steering_vector, CascadedLink,
};
use aerial_irs::{ArrayConfig, Geometry, Point, PropagationParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn small_arrays() -> ArrayConfig {
    ArrayConfig {
        muav_x: 4,
        muav_y: 2,
        auav_x: 2,
        auav_y: 2,
        irs_x: 4,
        irs_y: 4,
        ..ArrayConfig::default()
    }
}

fn coord() -> impl Strategy<Value = f64> {
    -100.0f64..100.0
}

prop_compose! {
    fn geometry()(mx in coord(), my in coord(), ax in coord(), ay in coord(), gx in coord(), gy in coord()) -> Geometry {
        Geometry {
            muav: Point::new(mx, my),
            auav: Point::new(ax, ay),
            gn: Point::new(gx, gy),
            h_m: 100.0,
            h_a: 98.0,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn transform(p: Point, angle: f64, shift: (f64, f64)) -> Point {
    let (s, c) = angle.sin_cos();
    Point::new(c * p.x - s * p.y + shift.0, s * p.x + c * p.y + shift.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_phases_never_beat_the_optimum(
        g in geometry(),
        phases in prop::collection::vec(0.0f64..std::f64::consts::TAU, 16),
    ) {
        let (cfg, p) = (small_arrays(), PropagationParams::default());
        let link = CascadedLink::optimal(&g, &cfg, &p).unwrap();
        let h = end_to_end_channel(&channel_rg(&g, &cfg, &p).unwrap(), &phases, &channel_mr(&g, &cfg, &p).unwrap()).unwrap();
        let w = mrt_beamformer_comm(&link.angles, &cfg);
        let optimal = link.snr(10.0, p.noise_power);
        prop_assert!(snr(10.0, &h, &w, p.noise_power) <= optimal * (1.0 + 1e-9));
        // Even the best beamformer for these phases stays below the optimum.
        let best = 10.0 * h.iter().map(|c| c.norm_sqr()).sum::<f64>() / p.noise_power;
        prop_assert!(best <= optimal * (1.0 + 1e-9));
    }

    #[test]
    fn steering_entries_unit_modulus(theta in 0.0f64..1.5708, xi in -3.1416f64..3.1416, kx in 1usize..9, ky in 1usize..9) {
        for c in steering_vector(theta, xi, kx, ky, 0.5).iter() {
            prop_assert!((c.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn beamformers_unit_norm(g in geometry()) {
        let a = compute_angles(&g).unwrap();
        let cfg = small_arrays();
        for w in [mrt_beamformer_comm(&a, &cfg), mrt_beamformer_charge(&a, &cfg)] {
            let norm: f64 = w.iter().map(Complex64::norm_sqr).sum();
            prop_assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn path_gain_decreases_with_distance(d in 1.0f64..500.0, extra in 0.01f64..100.0, dh in 0.0f64..1.0) {
        let p = PropagationParams::default();
        let dh = dh * d;
        prop_assert!(path_gain(d + extra, dh, &p).unwrap() < path_gain(d, dh, &p).unwrap());
    }

    #[test]
    fn rigid_motion_preserves_rate_and_charge_power(
        g in geometry(),
        angle in -3.1416f64..3.1416,
        sx in -50.0f64..50.0,
        sy in -50.0f64..50.0,
    ) {
        let (cfg, p) = (small_arrays(), PropagationParams::default());
        let moved = Geometry {
            muav: transform(g.muav, angle, (sx, sy)),
            auav: transform(g.auav, angle, (sx, sy)),
            gn: transform(g.gn, angle, (sx, sy)),
            ..g
        };
        let a = CascadedLink::optimal(&g, &cfg, &p).unwrap().rate(10.0, p.noise_power);
        let b = CascadedLink::optimal(&moved, &cfg, &p).unwrap().rate(10.0, p.noise_power);
        prop_assert!(rel(a, b) < 1e-9, "{a} vs {b}");
        let pa = received_charge_power(5000.0, &g, &cfg, &p).unwrap();
        let pb = received_charge_power(5000.0, &moved, &cfg, &p).unwrap();
        prop_assert!(rel(pa, pb) < 1e-9);
    }
}
