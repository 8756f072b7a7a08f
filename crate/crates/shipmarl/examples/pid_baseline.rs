//! The ideal-information reference: a PID autopilot that knows its true
//! goal, evaluated with the same harness and metrics as trained policies.
//!
//!     cargo run --release --example pid_baseline [episodes]

use shipmarl::baselines::{run_scripted, PidGains, ScriptedPolicy};
use shipmarl::marl::EvalOptions;
use shipmarl::scenarios::WorldConfig;

fn main() {
    let episodes: usize = std::env::args()
        .nth(1)
        .and_then(|v| v.parse().ok())
        .unwrap_or(500);
    let cfg = WorldConfig::navigation();
    let opts = EvalOptions::quick(episodes, 7);

    let pid = run_scripted(ScriptedPolicy::Pid(PidGains::default()), &cfg, &opts)
        .expect("pid evaluation");
    println!(
        "PID navigation: success {:.3} +- {:.3}, mean steps {:.2}, mean return {:.1}",
        pid.success_rate, pid.success_se, pid.mean_steps, pid.mean_return
    );

    let fixed = run_scripted(ScriptedPolicy::FixedStraight, &cfg, &opts)
        .expect("fixed evaluation");
    println!(
        "fixed straight-runner: success {:.3}, mean steps {:.2}, mean return {:.1}",
        fixed.success_rate, fixed.mean_steps, fixed.mean_return
    );
}
