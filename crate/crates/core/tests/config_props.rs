use aerial_irs::{Algorithm, ExperimentConfig, Mode, Point};
use proptest::prelude::*;

proptest! {
    #[test]
    fn serialization_round_trip_is_idempotent(
        k in 1usize..20,
        e_m in 1000.0f64..60000.0,
        e_a_frac in 0.1f64..1.0,
        th_frac in 0.0f64..1.0,
        p1 in any::<bool>(),
        seeds in prop::collection::vec(any::<u64>(), 1..5),
        gns in prop::option::of(prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..6)),
        lr in 1e-5f64..1e-2,
    ) {
        let mut cfg = ExperimentConfig::smoke(if p1 { Algorithm::CtMaddpg } else { Algorithm::Maddpoc });
        cfg.env.e_m_max = e_m;
        cfg.env.e_a_max = e_m * e_a_frac;
        cfg.env.e_th = cfg.env.e_a_max * th_frac;
        cfg.seeds = seeds;
        cfg.train.learning_rate = lr;
        match gns {
            Some(points) => {
                cfg.env.num_gns = points.len();
                cfg.env.gn_positions = Some(points.into_iter().map(|(x, y)| Point::new(x, y)).collect());
            }
            None => cfg.env.num_gns = k,
        }
        cfg.validate().unwrap();
        let text = cfg.to_toml_string();
        let parsed = ExperimentConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(&parsed, &cfg);
        prop_assert_eq!(parsed.to_toml_string(), text);
        prop_assert_eq!(parsed.hash(), cfg.hash());
    }

    #[test]
    fn threshold_above_auav_capacity_is_rejected(e_a in 100.0f64..20000.0, excess in 1e-3f64..1000.0) {
        let mut cfg = ExperimentConfig::default();
        cfg.env.e_a_max = e_a;
        cfg.env.e_th = e_a + excess;
        prop_assert!(cfg.validate().is_err());
    }

    #[test]
    fn run_identity_ignores_seeds_and_output(seeds in prop::collection::vec(any::<u64>(), 0..4), out in "[a-z]{1,8}") {
        let base = ExperimentConfig::default();
        let mut other = base.clone();
        other.seeds = seeds;
        other.output_dir = out;
        prop_assert_eq!(base.run_id(), other.run_id());
    }
}

#[test]
fn empty_file_yields_table_defaults() {
    let cfg = ExperimentConfig::from_toml_str("").unwrap();
    assert_eq!(cfg.env.slot_duration, 0.5);
    assert_eq!(cfg.mode, Mode::P2);
    assert_eq!(cfg.train.episodes, 1500);
}

#[test]
fn station_outside_area_is_rejected() {
    let err = ExperimentConfig::from_toml_str("[env]\ncharging_station = { x = 500.0, y = 0.0 }\n").unwrap_err();
    assert!(err.to_string().contains("charging_station"), "{err}");
}

#[test]
fn overriding_k_changes_the_layout_size() {
    let cfg = ExperimentConfig::from_toml_str("[env]\nnum_gns = 4\n").unwrap();
    let env = aerial_irs::Environment::new(&cfg, 3);
    assert_eq!(env.gn_positions().len(), 4);
}
