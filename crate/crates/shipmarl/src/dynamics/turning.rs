//! Turning-circle simulation and trajectory export.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{integrate_step, Command, ShipState};
use super::params::ShipParams;
use super::DynamicsError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedState {
    pub t: f64,
    #[serde(flatten)]
    pub state: ShipState,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TurningCircleReport {
    /// Distance travelled along the initial course when the heading has
    /// changed by 90 degrees.
    pub advance: f64,
    /// Lateral offset at the 90 degree heading change.
    pub transfer: f64,
    /// Lateral offset at the 180 degree heading change.
    pub tactical_diameter: f64,
    pub steady_speed: f64,
    pub steady_yaw_rate: f64,
    /// `steady_speed / |steady_yaw_rate|`.
    pub steady_radius: f64,
}

/// Runs a straight approach until the speed settles, then applies the
/// rudder for `duration` seconds and reports the classic turning-circle
/// measures. The returned trajectory covers only the turning phase,
/// restarted at the origin with heading zero.
pub fn simulate_turning_circle(
    params: &ShipParams,
    delta: f64,
    n_p: f64,
    duration: f64,
) -> Result<(Vec<TimedState>, TurningCircleReport), DynamicsError> {
    let dt = 1.0;

    // Approach phase: straight run at the commanded power.
    let mut s = ShipState {
        u: 0.1,
        n_p,
        ..ShipState::at_rest()
    };
    let straight = Command {
        delta_d: 0.0,
        n_p_cmd: n_p,
    };
    let mut prev_u = s.u;
    for _ in 0..600 {
        s = integrate_step(&s, &straight, dt, params)?;
        if (s.u - prev_u).abs() < 1e-9 {
            break;
        }
        prev_u = s.u;
    }

    // Restart the pose and turn.
    s.x0 = 0.0;
    s.y0 = 0.0;
    s.psi = 0.0;
    let turn = Command {
        delta_d: delta,
        n_p_cmd: n_p,
    };
    let steps = duration.ceil() as usize;
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(TimedState { t: 0.0, state: s });
    for k in 0..steps {
        s = integrate_step(&s, &turn, dt, params)?;
        trajectory.push(TimedState {
            t: (k + 1) as f64 * dt,
            state: s,
        });
    }

    Ok((trajectory.clone(), measure(&trajectory)))
}

fn measure(trajectory: &[TimedState]) -> TurningCircleReport {
    let mut advance = f64::NAN;
    let mut transfer = f64::NAN;
    let mut tactical_diameter = f64::NAN;
    for ts in trajectory {
        let heading_change = ts.state.psi.abs();
        if advance.is_nan() && heading_change >= std::f64::consts::FRAC_PI_2 {
            advance = ts.state.x0;
            transfer = ts.state.y0.abs();
        }
        if tactical_diameter.is_nan() && heading_change >= std::f64::consts::PI {
            tactical_diameter = ts.state.y0.abs();
        }
    }

    // Steady measures over the final quarter of the run.
    let tail = &trajectory[trajectory.len() - trajectory.len() / 4..];
    let n = tail.len().max(1) as f64;
    let steady_speed = tail.iter().map(|t| t.state.speed()).sum::<f64>() / n;
    let steady_yaw_rate = tail.iter().map(|t| t.state.r).sum::<f64>() / n;
    let steady_radius = if steady_yaw_rate.abs() > 1e-12 {
        steady_speed / steady_yaw_rate.abs()
    } else {
        f64::INFINITY
    };
    TurningCircleReport {
        advance,
        transfer,
        tactical_diameter,
        steady_speed,
        steady_yaw_rate,
        steady_radius,
    }
}

/// CSV with header `t,x0,y0,psi,u,v_m,r,delta,n_p`.
pub fn write_trajectory_csv<P: AsRef<Path>>(
    path: P,
    trajectory: &[TimedState],
) -> Result<(), DynamicsError> {
    let mut w = csv::Writer::from_path(path.as_ref())
        .map_err(|e| DynamicsError::ParamsFile(e.to_string()))?;
    w.write_record(["t", "x0", "y0", "psi", "u", "v_m", "r", "delta", "n_p"])
        .map_err(|e| DynamicsError::ParamsFile(e.to_string()))?;
    for ts in trajectory {
        let s = &ts.state;
        w.write_record(
            [
                ts.t, s.x0, s.y0, s.psi, s.u, s.v_m, s.r, s.delta, s.n_p,
            ]
            .map(|v| format!("{v:.9}")),
        )
        .map_err(|e| DynamicsError::ParamsFile(e.to_string()))?;
    }
    w.flush().map_err(|e| DynamicsError::ParamsFile(e.to_string()))
}

pub fn read_trajectory_csv<P: AsRef<Path>>(path: P) -> Result<Vec<TimedState>, DynamicsError> {
    let mut r = csv::Reader::from_path(path.as_ref())
        .map_err(|e| DynamicsError::ParamsFile(e.to_string()))?;
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| DynamicsError::ParamsFile(e.to_string()))?;
        let field = |i: usize| -> Result<f64, DynamicsError> {
            record
                .get(i)
                .ok_or_else(|| DynamicsError::ParamsFile("short trajectory row".into()))?
                .parse::<f64>()
                .map_err(|e| DynamicsError::ParamsFile(e.to_string()))
        };
        out.push(TimedState {
            t: field(0)?,
            state: ShipState {
                x0: field(1)?,
                y0: field(2)?,
                psi: field(3)?,
                u: field(4)?,
                v_m: field(5)?,
                r: field(6)?,
                delta: field(7)?,
                n_p: field(8)?,
            },
        });
    }
    Ok(out)
}
