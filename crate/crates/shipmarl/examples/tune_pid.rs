//! Grid search for the PID autopilot gains: minimize the settling time
//! of a 30 degree heading step at full power, breaking ties by overshoot.
//! The winning gains are the library defaults.
//!
//!     cargo run --release --example tune_pid

use shipmarl::baselines::{pid_control, PidGains, PidMemory};
use shipmarl::dynamics::{integrate_step, Command, ShipParams, ShipState};
use shipmarl::scenarios::wrap_angle;

/// Steps until |heading error| stays below 2 degrees, plus the maximum
/// overshoot past the target bearing.
fn step_response(gains: &PidGains, params: &ShipParams) -> (Option<usize>, f64) {
    let goal = [10_000.0, 0.0];
    let mut state = ShipState {
        u: 6.0,
        psi: -30f64.to_radians(),
        n_p: params.n_p_max,
        ..ShipState::at_rest()
    };
    let mut memory = PidMemory::default();
    let mut overshoot: f64 = 0.0;
    let mut settled: Option<usize> = None;
    for t in 0..90 {
        let (delta_d, n_p_cmd, mem) = pid_control(&state, goal, gains, memory, 1.0, params);
        memory = mem;
        state = match integrate_step(&state, &Command { delta_d, n_p_cmd }, 1.0, params) {
            Ok(s) => s,
            Err(_) => return (None, f64::INFINITY),
        };
        let bearing = (goal[1] - state.y0).atan2(goal[0] - state.x0);
        let err = wrap_angle(bearing - state.psi);
        overshoot = overshoot.max(-err.to_degrees()); // past the setpoint
        if settled.is_none() && err.abs() < 2f64.to_radians() {
            settled = Some(t);
        }
        if settled.is_some() && err.abs() > 3f64.to_radians() {
            settled = None; // left the band again
        }
    }
    (settled, overshoot)
}

fn main() {
    let params = ShipParams::default_usv();
    let mut best: Option<(PidGains, usize, f64)> = None;
    for &k_p in &[0.4, 0.8, 1.2, 1.6, 2.0, 2.5] {
        for &k_i in &[0.0, 0.005, 0.02] {
            for &k_d in &[0.0, 1.0, 2.0, 4.0, 6.0] {
                let gains = PidGains {
                    k_p,
                    k_i,
                    k_d,
                    integral_clamp: 0.35,
                };
                if let (Some(settle), overshoot) = step_response(&gains, &params) {
                    let better = match &best {
                        None => true,
                        Some((_, s, o)) => settle < *s || (settle == *s && overshoot < *o),
                    };
                    if better {
                        best = Some((gains, settle, overshoot));
                    }
                    println!(
                        "k_p {k_p:4.2} k_i {k_i:5.3} k_d {k_d:4.1}: settles in {settle:2} s, overshoot {overshoot:5.2} deg"
                    );
                }
            }
        }
    }
    let (gains, settle, overshoot) = best.expect("at least one stable gain set");
    println!(
        "\nbest: k_p {} k_i {} k_d {} -> settles in {settle} s, overshoot {overshoot:.2} deg",
        gains.k_p, gains.k_i, gains.k_d
    );
    println!("(library default: {:?})", PidGains::default());
}
