//! Trains the cooperative-navigation speaker/ship pair with MADDPG and
//! prints the learning curve as it goes. Defaults are sized for a quick
//! demonstration; pass an episode budget for a full run.
//!
//!     cargo run --release --example train_navigation [episodes] [seed]

use shipmarl::analysis::write_curve_csv;
use shipmarl::marl::{evaluate, EvalOptions, Maddpg, TrainConfig};
use shipmarl::scenarios::WorldConfig;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let episodes: usize = std::env::args()
        .nth(1)
        .and_then(|v| v.parse().ok())
        .unwrap_or(2000);
    let seed: u64 = std::env::args()
        .nth(2)
        .and_then(|v| v.parse().ok())
        .unwrap_or(0);

    let world = WorldConfig::navigation();
    let cfg = TrainConfig {
        episodes,
        eval_interval: 250,
        eval_episodes: 100,
        stop_at_eval_success: Some(0.85),
        seed,
        ..TrainConfig::navigation()
    };
    let mut trainer = Maddpg::new(world, cfg).expect("trainer");
    let report = trainer.train().expect("training");

    write_curve_csv(&report.curve, "navigation_curve.csv".as_ref()).expect("curve");
    println!(
        "trained {} episodes ({} updates); curve -> navigation_curve.csv",
        report.episodes_run, report.updates_run
    );

    let metrics = evaluate(
        &trainer.world,
        &trainer.agents,
        &EvalOptions::quick(500, 1234),
    )
    .expect("evaluation");
    println!(
        "final: success {:.3} +- {:.3}, mean steps {:.2}, mean return {:.1}",
        metrics.success_rate, metrics.success_se, metrics.mean_steps, metrics.mean_return
    );

    trainer.save_checkpoint("navigation_checkpoint").expect("checkpoint");
    println!("checkpoint -> navigation_checkpoint/");
}
