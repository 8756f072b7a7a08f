//! Classic turning-circle test of the MMG model: straight approach at
//! full power, hard-over rudder, report the standard measures and dump
//! the trajectory to CSV.
//!
//!     cargo run --release --example turning_circle [out.csv]

use shipmarl::dynamics::{simulate_turning_circle, write_trajectory_csv, ShipParams};

fn main() {
    let params = ShipParams::default_usv();
    println!(
        "ship: L = {} m, displacement = {} m^3, rudder limit {} deg",
        params.length,
        params.displacement_volume,
        params.delta_max.to_degrees()
    );

    for delta_deg in [35.0, 20.0, -35.0] {
        let delta = f64::to_radians(delta_deg);
        let (trajectory, report) =
            simulate_turning_circle(&params, delta, params.n_p_max, 240.0).expect("simulation");
        println!("\nrudder {delta_deg:+.0} deg at {} rpm:", params.n_p_max);
        println!("  advance            {:8.1} m", report.advance);
        println!("  transfer           {:8.1} m", report.transfer);
        println!("  tactical diameter  {:8.1} m", report.tactical_diameter);
        println!("  steady speed       {:8.2} m/s", report.steady_speed);
        println!("  steady yaw rate    {:8.4} rad/s", report.steady_yaw_rate);
        println!("  steady radius      {:8.1} m ({:.1} ship lengths)",
            report.steady_radius,
            report.steady_radius / params.length
        );

        if delta_deg == 35.0 {
            let path = std::env::args().nth(1).unwrap_or_else(|| "turning_circle.csv".into());
            write_trajectory_csv(&path, &trajectory).expect("write CSV");
            println!("  trajectory -> {path}");
        }
    }
}
