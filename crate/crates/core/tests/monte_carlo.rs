mod common;

use common::{mean_se, moment_paths, transfer_free_spec, worst_moment_gap};
use kinswitch::config::preset;
use kinswitch::nanbu::{ExchangeLaw, Simulation};
use proptest::prelude::*;

#[test]
fn expected_wealth_is_conserved() {
    let cfg = preset("test1a").unwrap();
    let spec = cfg.spec().unwrap();
    let drift: Vec<f64> = (0..50)
        .map(|r| {
            let mut sim = Simulation::from_initial(spec.clone(), cfg.step_config(), &cfg.initial, 5_000, r).unwrap();
            let before = sim.population().total_wealth();
            for _ in 0..500 {
                sim.step().unwrap();
            }
            assert_eq!(sim.population().clamped, 0);
            (sim.population().total_wealth() - before) / 5_000.0
        })
        .collect();
    let (mean, se) = mean_se(&drift);
    assert!(mean.abs() <= 4.0 * se, "{mean} {se}");
}

#[test]
fn sampling_the_kernel_matches_the_binary_rule() {
    let spec = transfer_free_spec([0.5, 0.3], 0.2);
    let a = moment_paths(&spec, ExchangeLaw::Binary, 2_000, 30, 10, 10, 5);
    let b = moment_paths(&spec, ExchangeLaw::RescaledKernel { epsilon: 1.0 }, 2_000, 30, 10, 10, 6);
    assert!(worst_moment_gap(&a, &b) <= 3.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn moment_equivalence_across_parameters(
        w1 in 0.1..0.9f64,
        w2 in 0.1..0.9f64,
        zeta_share in 0.1..1.0f64,
        seed in any::<u64>(),
    ) {
        let zeta = zeta_share * (1.0 - w1.max(w2)) / 3f64.sqrt();
        let spec = transfer_free_spec([w1, w2], zeta);
        let a = moment_paths(&spec, ExchangeLaw::Binary, 1_000, 24, 10, 5, seed);
        let b = moment_paths(&spec, ExchangeLaw::RescaledKernel { epsilon: 1.0 }, 1_000, 24, 10, 5, seed ^ 1);
        // 20 correlated comparisons per case
        prop_assert!(worst_moment_gap(&a, &b) <= 4.0);
    }
}
