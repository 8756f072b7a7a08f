//! Communication-vector analysis: reads avoidance episode logs and
//! produces the norm-vs-distance regression, pre/post-meeting norms, the
//! 31x31 spatial norm grid and the message-value histogram.
//!
//!     cargo run --release --example analyze_communication <episodes.jsonl> [out_dir]
//!
//! Generate logs first, e.g. with `--example train_avoidance` or
//! `shipmarl eval --log`.

use shipmarl::analysis::{analyze_comm, write_comm_csvs};
use shipmarl::scenarios::log::read_episode_logs;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "avoidance_episodes.jsonl".into());
    let out = std::env::args().nth(2).unwrap_or_else(|| "comm_analysis".into());

    let episodes = read_episode_logs(&path).expect("readable episode log");
    println!("{} episodes loaded from {path}", episodes.len());

    let analysis = analyze_comm(&episodes).expect("analysis");
    println!(
        "norm rows: {} ({} pre-meeting)",
        analysis.norm_rows.len(),
        analysis.norm_rows.iter().filter(|r| r.pre_meeting).count()
    );
    println!(
        "mean norm pre-meeting {:.4}, post-meeting {:.4}",
        analysis.mean_norm_pre, analysis.mean_norm_post
    );
    match &analysis.regression {
        Some(r) => println!(
            "pre-meeting norm vs distance-to-P: slope {:+.6} (SE {:.6}), R^2 {:.4}, p {:.3e}, n {}",
            r.slope, r.slope_se, r.r_squared, r.p_slope, r.n
        ),
        None => println!("not enough pre-meeting data for the regression"),
    }
    if let Some(grid) = &analysis.grid {
        let visited = grid.counts.iter().filter(|&&c| c > 0).count();
        println!("spatial grid: {visited}/961 cells visited");
    }

    write_comm_csvs(&analysis, out.as_ref()).expect("write CSVs");
    println!("CSV outputs -> {out}/");
}
