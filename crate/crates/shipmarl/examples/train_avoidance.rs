//! Trains the two-ship COLREGs collision-avoidance task and reports the
//! per-encounter success breakdown.
//!
//!     cargo run --release --example train_avoidance [episodes] [seed]

use shipmarl::analysis::write_curve_csv;
use shipmarl::marl::{evaluate, EvalOptions, Maddpg, TrainConfig};
use shipmarl::scenarios::WorldConfig;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let episodes: usize = std::env::args()
        .nth(1)
        .and_then(|v| v.parse().ok())
        .unwrap_or(1500);
    let seed: u64 = std::env::args()
        .nth(2)
        .and_then(|v| v.parse().ok())
        .unwrap_or(0);

    let world = WorldConfig::avoidance();
    let cfg = TrainConfig {
        episodes,
        eval_interval: 250,
        eval_episodes: 100,
        seed,
        ..TrainConfig::avoidance()
    };
    let mut trainer = Maddpg::new(world, cfg).expect("trainer");
    let report = trainer.train().expect("training");
    write_curve_csv(&report.curve, "avoidance_curve.csv".as_ref()).expect("curve");

    let mut opts = EvalOptions::quick(500, 99);
    opts.log_path = Some("avoidance_episodes.jsonl".into());
    let metrics = evaluate(&trainer.world, &trainer.agents, &opts).expect("evaluation");
    println!(
        "success {:.3} +- {:.3}, collisions {:.3}, mean total path {:.1} m",
        metrics.success_rate,
        metrics.success_se,
        metrics.collision_rate.unwrap_or(0.0),
        metrics.mean_total_path_length.unwrap_or(0.0)
    );
    if let Some(b) = &metrics.per_encounter {
        println!(
            "per encounter: head-on {:.3} ({}), crossing {:.3} ({}), overtaking {:.3} ({})",
            b.head_on.rate,
            b.head_on.episodes,
            b.crossing.rate,
            b.crossing.episodes,
            b.overtaking.rate,
            b.overtaking.episodes
        );
    }
    if let Some(c) = &metrics.comm {
        println!(
            "message norms: pre-meeting {:.3}, post-meeting {:.3}",
            c.mean_norm_pre_meeting, c.mean_norm_post_meeting
        );
    }

    trainer.save_checkpoint("avoidance_checkpoint").expect("checkpoint");
    println!("checkpoint -> avoidance_checkpoint/, logs -> avoidance_episodes.jsonl");
}
