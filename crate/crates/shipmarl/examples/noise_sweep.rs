//! Robustness sweep: evaluates saved checkpoints across a grid of
//! channel noise levels (BSC flip probabilities or AWGN SNR values).
//!
//!     cargo run --release --example noise_sweep <checkpoint_dir> [bsc|awgn]
//!
//! The checkpoint must come from a navigation run trained with the
//! matching channel kind (see `train_navigation` / the `train` command).

use shipmarl::analysis::{sweep_noise, write_sweep_csv, SweepKind};
use shipmarl::analysis::sweep::SweepPolicy;
use shipmarl::channels::ChannelConfig;
use shipmarl::marl::TrainConfig;
use shipmarl::scenarios::WorldConfig;

fn main() {
    let checkpoint = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "navigation_checkpoint".into());
    let kind = match std::env::args().nth(2).as_deref() {
        Some("awgn") => SweepKind::AwgnSnrDb,
        _ => SweepKind::Bsc,
    };
    let values: Vec<f64> = match kind {
        SweepKind::Bsc => vec![0.0, 0.05, 0.1, 0.2, 0.3],
        SweepKind::AwgnSnrDb => vec![0.0, 2.0, 4.0, 5.8, 8.0, 12.0, 16.0, 20.0],
    };

    let mut world = WorldConfig::navigation();
    world.channel = match kind {
        SweepKind::Bsc => ChannelConfig::bsc(0.0),
        SweepKind::AwgnSnrDb => ChannelConfig::awgn(0.0),
    };
    let train = TrainConfig::navigation();

    let outcome = sweep_noise(
        &world,
        &train,
        kind,
        &[SweepPolicy {
            label: "policy".into(),
            checkpoint: checkpoint.clone().into(),
        }],
        &values,
        200,
        5,
    )
    .expect("sweep");

    for s in &outcome.skipped {
        eprintln!("skipped: {s}");
    }
    println!("{:>10} {:>12} {:>12}", "test", "success", "mean steps");
    for row in &outcome.rows {
        println!(
            "{:>10.3} {:>12.3} {:>12.2}",
            row.test_value, row.success_rate, row.mean_steps
        );
    }
    write_sweep_csv(&outcome.rows, "noise_sweep.csv".as_ref()).expect("csv");
    println!("table -> noise_sweep.csv");
}
