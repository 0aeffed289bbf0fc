//! Feature-strategy ablation on the desk benchmark: the weight-margin
//! features beat the frequency heuristic on average, and both beat copying
//! random rows. Averaged over 40 attack+evaluation replicas to push the
//! strategy gaps past desk-scale noise.

use lpgia_core::baselines::{baseline_attack, StrategySpec};
use lpgia_core::eval::{evaluate, AttackMode};
use lpgia_core::graph::{gen_csbm, CsbmParams};
use lpgia_core::injector::AttackConfig;
use lpgia_core::seed::derive_seed;
use lpgia_core::surrogate::{build_ensemble, TrainConfig, Variant};

#[test]
fn feature_strategy_ordering_on_desk_benchmark() {
    let g = gen_csbm(&CsbmParams {
        n: 300,
        num_classes: 3,
        dim: 30,
        p_in: 0.04,
        p_out: 0.008,
        mu: 2.0,
        seed: 123,
    })
    .unwrap();
    let train_cfg = TrainConfig::default();
    let strategies = [
        StrategySpec::ours(),
        StrategySpec::parse("ours,ours,most_frequency").unwrap(),
        StrategySpec::parse("ours,ours,random_copy").unwrap(),
    ];
    let mut sums = [0.0f64; 3];
    let mut replicas = 0usize;
    for master in 0..4u64 {
        for i in 0..10u64 {
            let seed = derive_seed(master, 100 + i);
            let ensemble = build_ensemble(&g, Variant::Gcn, 6, &train_cfg, seed).unwrap();
            let cfg = AttackConfig {
                n_fake: 15,
                ensemble_size: 6,
                seed,
                ..AttackConfig::default()
            };
            let eval_seeds = [derive_seed(seed, 999)];
            for (si, spec) in strategies.iter().enumerate() {
                let plan = baseline_attack(&g, &ensemble, &cfg, spec).unwrap();
                let report = evaluate(
                    &g,
                    &plan,
                    AttackMode::Evasion,
                    Variant::Gcn,
                    &eval_seeds,
                    &train_cfg,
                )
                .unwrap();
                sums[si] += report.drop;
            }
            replicas += 1;
        }
    }
    let k = replicas as f64;
    let (ours, most_frequent, random_copy) = (sums[0] / k, sums[1] / k, sums[2] / k);
    println!(
        "feature ablation over {replicas} replicas: ours {ours:+.4}, \
         most_frequency {most_frequent:+.4}, random_copy {random_copy:+.4}"
    );
    assert!(
        ours >= most_frequent,
        "ours {ours:.4} below most_frequency {most_frequent:.4}"
    );
    assert!(
        most_frequent >= random_copy,
        "most_frequency {most_frequent:.4} below random_copy {random_copy:.4}"
    );
}
