use folkit::fol::{parse, validate, FolRule};
use folkit::metrics::{le_score, RewardConfig};
use folkit::perturb::{
    apply_step, apply_steps, perturb_n, random_rule, sample_perturbation, PerturbConfig, RuleGenConfig,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rule_for(seed: u64) -> FolRule {
    random_rule(&mut ChaCha8Rng::seed_from_u64(seed), &RuleGenConfig::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn canonical_print_round_trips(seed in any::<u64>()) {
        let r = rule_for(seed);
        prop_assert_eq!(parse(&r.print_canonical()).unwrap(), r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn perturbations_stay_valid_and_invert(seed in any::<u64>(), n in 1usize..=10) {
        let r = rule_for(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let p = perturb_n(&r, n, &mut rng);
        let mut state = r.clone();
        for step in &p.applied {
            state = apply_step(&state, step).unwrap();
            prop_assert!(validate(&state.print_canonical()).is_valid());
            prop_assert_eq!(step.inverse().inverse(), step.clone());
            prop_assert_eq!(step.inverse().kind(), step.kind().dual());
        }
        prop_assert_eq!(&state, &p.perturbed);
        let restored = apply_steps(&p.perturbed, &p.steps_to_fix).unwrap();
        prop_assert_eq!(restored.print_canonical(), r.print_canonical());
        let le = le_score(&r, &restored, &RewardConfig::default()).unwrap();
        prop_assert_eq!(le.score, 1.0);
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>()) {
        let r = rule_for(seed);
        let config = PerturbConfig { seed, ..PerturbConfig::default() };
        prop_assert_eq!(sample_perturbation(&r, &config), sample_perturbation(&r, &config));
    }

    #[test]
    fn steps_serialize_losslessly(seed in any::<u64>()) {
        let r = rule_for(seed);
        let p = perturb_n(&r, 5, &mut ChaCha8Rng::seed_from_u64(seed));
        let json = serde_json::to_string(&p.steps_to_fix).unwrap();
        let back: Vec<folkit::perturb::EditStep> = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, p.steps_to_fix);
    }
}
