use aerial_irs::agents::{EpisodeMetrics, Learner};
use aerial_irs::{Algorithm, Environment, ExperimentConfig};

fn tiny(algorithm: Algorithm) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::smoke(algorithm);
    cfg.train.capacity = 64;
    cfg.train.batch_size = 16;
    cfg.train.hidden = vec![16, 16];
    cfg
}

fn run(cfg: &ExperimentConfig, seed: u64, episodes: usize) -> (Vec<EpisodeMetrics>, Learner) {
    let mut env = Environment::new(cfg, seed);
    let mut learner = Learner::new(cfg, seed);
    let mut metrics = Vec::new();
    learner.train_episodes(&mut env, episodes, |m| metrics.push(m.clone())).unwrap();
    (metrics, learner)
}

#[test]
fn training_is_reproducible() {
    for algorithm in [Algorithm::CtMaddpg, Algorithm::Maddpoc, Algorithm::Ddpoc] {
        let cfg = tiny(algorithm);
        let (a, la) = run(&cfg, 9, 12);
        let (b, lb) = run(&cfg, 9, 12);
        assert_eq!(a, b, "{}", algorithm.name());
        assert_eq!(la.checkpoint("h"), lb.checkpoint("h"));
        assert!(a.iter().any(|m| !m.warmup), "{} never left warm-up", algorithm.name());
    }
}

#[test]
fn different_seeds_diverge() {
    let cfg = tiny(Algorithm::Maddpoc);
    assert_ne!(run(&cfg, 1, 6).0, run(&cfg, 2, 6).0);
}

#[test]
fn targets_start_equal_to_online_nets() {
    let l = Learner::new(&ExperimentConfig::smoke(Algorithm::Maddpoc), 4);
    for net in l.core.actors.iter().chain([&l.core.critic]) {
        assert_eq!(net.online, net.target);
    }
    let oc = l.options.as_ref().unwrap();
    assert_eq!(oc.q.online, oc.q.target);
    assert_eq!(oc.beta.online, oc.beta.target);
}

#[test]
fn action_buffer_grows_no_faster_than_option_buffer() {
    let cfg = tiny(Algorithm::Maddpoc);
    let mut env = Environment::new(&cfg, 5);
    let mut l = Learner::new(&cfg, 5);
    let mut unlimited = cfg.clone();
    unlimited.train.capacity = 1_000_000;
    let mut l_big = Learner::new(&unlimited, 5);
    let mut env_big = Environment::new(&unlimited, 5);
    for _ in 0..5 {
        let (a0, o0) = (l_big.d_a.len(), l_big.d_o.len());
        l_big.train_episodes(&mut env_big, 1, |_| {}).unwrap();
        assert!(l_big.d_a.len() - a0 <= l_big.d_o.len() - o0);
    }
    l.train_episodes(&mut env, 20, |_| {}).unwrap();
    assert!(l.d_a.len() <= cfg.train.capacity && l.d_o.len() == cfg.train.capacity);
}

#[test]
fn checkpoint_restores_the_policy() {
    let cfg = tiny(Algorithm::Maddpoc);
    let (_, mut trained) = run(&cfg, 3, 10);
    let mut fresh = Learner::new(&cfg, 3);
    fresh.restore(trained.checkpoint(&cfg.run_hash()), &cfg.run_hash()).unwrap();
    let mut env = Environment::new(&cfg, 3);
    let a = trained.evaluate(&mut env, 1, None).unwrap();
    let b = fresh.evaluate(&mut env, 1, None).unwrap();
    assert_eq!(a, b);
    assert!(fresh.restore(trained.checkpoint("other"), &cfg.run_hash()).is_err());
}
