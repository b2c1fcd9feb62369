use inrush::rl::*;

fn hp() -> RlHyperparameters {
    RlHyperparameters::default().with_iterations(20_000)
}

fn learns_matching(kind: AgentKind) {
    for seed in [1, 2, 3] {
        let mut env = MatchingEnvironment::new(8);
        let agent = train(kind, &mut env, &hp(), seed).unwrap();
        let rate = env.optimal_rate(|x| agent.policy.greedy_action(x).unwrap());
        assert!(rate >= 0.95, "{kind} seed {seed}: {rate}");
        let last = agent.log.last().unwrap();
        assert_eq!(last.iteration, 20_000);
        assert!(last.mean_reward > agent.log[9].mean_reward, "{kind} seed {seed}");
    }
}

#[test]
fn dqn_linear_learns_matching_task() {
    learns_matching(AgentKind::DqnLinear);
}

#[test]
fn dqn_exponential_learns_matching_task() {
    learns_matching(AgentKind::DqnExponential);
}

#[test]
fn ppo_learns_matching_task() {
    learns_matching(AgentKind::Ppo);
}

#[test]
fn argmax_ignores_constant_offsets() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let net = Mlp::new(&[5, 16, 360], 1.0, &mut rng);
    for _ in 0..20 {
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = rng.random_range(-50.0..50.0);
        let mut shifted = net.clone();
        shifted.layers[1].b.mapv_inplace(|b| b + c);
        let a = Policy::Dqn { q: net.clone() }.greedy_action(&x).unwrap();
        let b = Policy::Dqn { q: shifted.clone() }.greedy_action(&x).unwrap();
        assert_eq!(a, b);
        let ppo = Policy::Ppo { actor: shifted, critic: Mlp::new(&[5, 4, 1], 1.0, &mut rng) };
        assert_eq!(ppo.greedy_action(&x).unwrap(), a);
    }
}
