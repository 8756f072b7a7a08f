//! 3-DOF MMG maneuvering model: surge, sway and yaw.
//!
//! Frames: the earth frame is `o0-x0y0` on the still-water plane; the
//! body frame has x toward the bow, y to starboard and z down, so a
//! positive yaw rate and a positive rudder angle both turn the ship to
//! starboard. Heading `psi` is the angle from x0 to the body x axis.
//!
//! Body accelerations come from
//!
//!   (m + m_x) u_dot - (m + m_y) v_m r - x_G m r^2          = X_H + X_R + X_P
//!   (m + m_y) v_m_dot + (m + m_x) u r + x_G m r_dot        = Y_H + Y_R
//!   (I_zG + x_G^2 m + J_z) r_dot + x_G m (v_m_dot + u r)   = N_H + N_R
//!
//! with hull forces from the nondimensional derivative set, propeller
//! thrust from an open-water K_T polynomial, and rudder forces from the
//! standard normal-force model with propeller-race augmentation.

use serde::{Deserialize, Serialize};

use super::params::ShipParams;
use super::DynamicsError;

/// Hard ceiling on surge speed; beyond this the state is declared
/// divergent rather than physical.
pub const MAX_SPEED: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShipState {
    /// Earth-frame position, m.
    pub x0: f64,
    pub y0: f64,
    /// Heading, rad.
    pub psi: f64,
    /// Surge speed, m/s.
    pub u: f64,
    /// Lateral speed at midship, m/s (positive to starboard).
    pub v_m: f64,
    /// Yaw rate, rad/s (positive to starboard).
    pub r: f64,
    /// Actual rudder angle, rad.
    pub delta: f64,
    /// Indicated propeller revolutions, rpm.
    pub n_p: f64,
}

impl ShipState {
    pub fn at_rest() -> Self {
        Self {
            x0: 0.0,
            y0: 0.0,
            psi: 0.0,
            u: 0.0,
            v_m: 0.0,
            r: 0.0,
            delta: 0.0,
            n_p: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.x0, self.y0, self.psi, self.u, self.v_m, self.r, self.delta, self.n_p,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    /// Speed through the water.
    pub fn speed(&self) -> f64 {
        self.u.hypot(self.v_m)
    }

    /// Drift angle, `atan2(-v_m, u)`.
    pub fn drift_angle(&self) -> f64 {
        (-self.v_m).atan2(self.u)
    }

    /// Earth-frame position as a point.
    pub fn position(&self) -> [f64; 2] {
        [self.x0, self.y0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HullForces {
    pub x_h: f64,
    pub y_h: f64,
    pub n_h: f64,
    pub x_r: f64,
    pub y_r: f64,
    pub n_r: f64,
    pub x_p: f64,
}

impl HullForces {
    pub fn surge(&self) -> f64 {
        self.x_h + self.x_r + self.x_p
    }

    pub fn sway(&self) -> f64 {
        self.y_h + self.y_r
    }

    pub fn yaw(&self) -> f64 {
        self.n_h + self.n_r
    }
}

/// All force and moment components for the given state. Pure.
pub fn compute_forces(state: &ShipState, params: &ShipParams) -> Result<HullForces, DynamicsError> {
    if !state.is_finite() {
        return Err(DynamicsError::NonFiniteInput("ship state"));
    }
    let h = &params.hydro;
    let rho = params.water_density;
    let length = params.length;
    let draught = params.draught;

    let speed = state.speed();
    let (x_h, y_h, n_h) = if speed < 1e-9 {
        (0.0, 0.0, 0.0)
    } else {
        let v_nd = state.v_m / speed;
        let r_nd = state.r * length / speed;
        let q = 0.5 * rho * length * draught * speed * speed;
        let x = q * (-h.r_0
            + h.x_vv * v_nd * v_nd
            + h.x_vr * v_nd * r_nd
            + h.x_rr * r_nd * r_nd
            + h.x_vvvv * v_nd.powi(4));
        let y = q * (h.y_v * v_nd
            + h.y_r * r_nd
            + h.y_vvv * v_nd.powi(3)
            + h.y_vvr * v_nd * v_nd * r_nd
            + h.y_vrr * v_nd * r_nd * r_nd
            + h.y_rrr * r_nd.powi(3));
        let n = q * length
            * (h.n_v * v_nd
                + h.n_r * r_nd
                + h.n_vvv * v_nd.powi(3)
                + h.n_vvr * v_nd * v_nd * r_nd
                + h.n_vrr * v_nd * r_nd * r_nd
                + h.n_rrr * r_nd.powi(3));
        (x, y, n)
    };

    // Propeller: open-water thrust with constant effective wake.
    let n_s = params.shaft_rev_per_s(state.n_p.max(0.0));
    let d_p = params.propeller_diameter;
    let (x_p, k_t, advance) = if n_s <= 0.0 {
        (0.0, 0.0, 0.0)
    } else {
        let advance = (state.u * (1.0 - h.w_p0) / (n_s * d_p)).max(0.0);
        let k_t = h.k_0 + h.k_1 * advance + h.k_2 * advance * advance;
        let thrust = rho * n_s * n_s * d_p.powi(4) * k_t;
        ((1.0 - h.t_p) * thrust, k_t, advance)
    };
    let _ = advance;

    // Rudder inflow. The race term is evaluated in the algebraically
    // stable form sqrt(u^2 + 8 K_T n_s^2 D^2 / (pi (1-w)^2)) so it stays
    // correct as u -> 0.
    let one_w = 1.0 - h.w_p0;
    let u_r = if state.u >= 0.0 {
        let race = if n_s > 0.0 && k_t > 0.0 {
            (8.0 * k_t / std::f64::consts::PI).sqrt() * n_s * d_p / one_w
        } else {
            0.0
        };
        let augmented = (1.0 - h.kappa) * state.u
            + h.kappa * (state.u * state.u + race * race).sqrt();
        let eta = params.race_fraction();
        h.epsilon
            * one_w
            * (eta * augmented * augmented + (1.0 - eta) * state.u * state.u).sqrt()
    } else {
        // Backing: no race augmentation.
        h.epsilon * one_w * state.u
    };

    let beta = state.drift_angle();
    let r_nd = if speed < 1e-9 {
        0.0
    } else {
        state.r * length / speed
    };
    let v_r = speed * h.gamma_r * (beta - h.l_r_nd * r_nd);
    let flow = if u_r.abs() < 1e-12 && v_r.abs() < 1e-12 {
        0.0
    } else {
        v_r.atan2(u_r)
    };
    let alpha_r = state.delta - flow;
    let u_r2 = u_r * u_r + v_r * v_r;
    let f_n = 0.5 * rho * params.rudder_area * u_r2 * params.rudder_lift_gradient() * alpha_r.sin();

    let x_rudder = -(1.0 - h.t_r) * f_n * state.delta.sin();
    let y_rudder = -(1.0 + h.a_h) * f_n * state.delta.cos();
    let n_rudder = -(h.x_r_nd * length + h.a_h * h.x_h_nd * length) * f_n * state.delta.cos();

    Ok(HullForces {
        x_h,
        y_h,
        n_h,
        x_r: x_rudder,
        y_r: y_rudder,
        n_r: n_rudder,
        x_p,
    })
}

/// Body accelerations `(u_dot, v_m_dot, r_dot)` from the motion equations.
fn accelerations(state: &ShipState, params: &ShipParams) -> Result<(f64, f64, f64), DynamicsError> {
    let f = compute_forces(state, params)?;
    let m = params.mass;
    let (m_x, m_y) = (params.added_mass_x, params.added_mass_y);
    let x_g = params.x_g;

    let u_dot = (f.surge() + (m + m_y) * state.v_m * state.r + x_g * m * state.r * state.r)
        / (m + m_x);

    // Coupled sway/yaw system:
    //   [m + m_y    x_g m ] [v_dot]   [Y - (m + m_x) u r]
    //   [x_g m      i_zz  ] [r_dot] = [N - x_g m u r    ]
    let i_zz = params.yaw_inertia + x_g * x_g * m + params.added_yaw_inertia;
    let a11 = m + m_y;
    let a12 = x_g * m;
    let b1 = f.sway() - (m + m_x) * state.u * state.r;
    let b2 = f.yaw() - x_g * m * state.u * state.r;
    let det = a11 * i_zz - a12 * a12;
    let v_dot = (b1 * i_zz - a12 * b2) / det;
    let r_dot = (a11 * b2 - a12 * b1) / det;
    Ok((u_dot, v_dot, r_dot))
}

/// Earth-frame velocity components and drift angle.
pub fn kinematics(state: &ShipState) -> (f64, f64, f64) {
    let (sin_psi, cos_psi) = state.psi.sin_cos();
    let u_x = state.u * cos_psi - state.v_m * sin_psi;
    let u_y = state.u * sin_psi + state.v_m * cos_psi;
    (u_x, u_y, state.drift_angle())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActuatorStep {
    pub delta: f64,
    pub n_p: f64,
    /// A command fell outside its admissible range and was clamped.
    pub clamped: bool,
}

/// Moves the rudder toward `delta_d` rate-limited and without overshoot,
/// and applies the propeller command through a first-order lag.
pub fn actuator_step(
    delta: f64,
    delta_d: f64,
    n_p: f64,
    n_p_cmd: f64,
    dt: f64,
    params: &ShipParams,
) -> ActuatorStep {
    let mut clamped = false;
    let target = if delta_d.abs() > params.delta_max {
        clamped = true;
        delta_d.clamp(-params.delta_max, params.delta_max)
    } else {
        delta_d
    };
    let max_move = params.rudder_rate_limit * dt;
    let step = (target - delta).clamp(-max_move, max_move);
    let new_delta = delta + step;

    let cmd = if !(0.0..=params.n_p_max).contains(&n_p_cmd) {
        clamped = true;
        n_p_cmd.clamp(0.0, params.n_p_max)
    } else {
        n_p_cmd
    };
    let lag = (-dt / params.propeller_time_constant).exp();
    let new_n_p = (cmd + (n_p - cmd) * lag).clamp(0.0, params.n_p_max);

    ActuatorStep {
        delta: new_delta,
        n_p: new_n_p,
        clamped,
    }
}

/// One control interval's worth of commands.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Command {
    /// Desired rudder angle, rad.
    pub delta_d: f64,
    /// Commanded revolutions, rpm.
    pub n_p_cmd: f64,
}

impl Command {
    pub fn coast() -> Self {
        Self {
            delta_d: 0.0,
            n_p_cmd: 0.0,
        }
    }
}

pub const DEFAULT_SUBSTEPS: usize = 10;

/// Advances the full state by `dt`: actuators step once, then the six
/// state variables (u, v_m, r, x0, y0, psi) are integrated with RK4 over
/// `n_sub` sub-steps holding the actuators fixed.
pub fn integrate_step_with(
    state: &ShipState,
    cmd: &Command,
    dt: f64,
    n_sub: usize,
    params: &ShipParams,
) -> Result<ShipState, DynamicsError> {
    if !(dt > 0.0) || n_sub == 0 {
        return Err(DynamicsError::BadTimeStep(dt));
    }
    if !state.is_finite() || !cmd.delta_d.is_finite() || !cmd.n_p_cmd.is_finite() {
        return Err(DynamicsError::NonFiniteInput("integrate_step input"));
    }

    let act = actuator_step(state.delta, cmd.delta_d, state.n_p, cmd.n_p_cmd, dt, params);
    let mut s = ShipState {
        delta: act.delta,
        n_p: act.n_p,
        ..*state
    };

    let h = dt / n_sub as f64;
    for _ in 0..n_sub {
        s = rk4_substep(&s, h, params)?;
    }

    if !s.is_finite() || s.u.abs() > MAX_SPEED {
        return Err(DynamicsError::Diverged(Box::new(s)));
    }
    Ok(s)
}

pub fn integrate_step(
    state: &ShipState,
    cmd: &Command,
    dt: f64,
    params: &ShipParams,
) -> Result<ShipState, DynamicsError> {
    integrate_step_with(state, cmd, dt, DEFAULT_SUBSTEPS, params)
}

type Deriv = [f64; 6];

fn derivative(s: &ShipState, params: &ShipParams) -> Result<Deriv, DynamicsError> {
    let (u_dot, v_dot, r_dot) = accelerations(s, params)?;
    let (u_x, u_y, _) = kinematics(s);
    Ok([u_dot, v_dot, r_dot, u_x, u_y, s.r])
}

fn offset(s: &ShipState, d: &Deriv, h: f64) -> ShipState {
    ShipState {
        u: s.u + h * d[0],
        v_m: s.v_m + h * d[1],
        r: s.r + h * d[2],
        x0: s.x0 + h * d[3],
        y0: s.y0 + h * d[4],
        psi: s.psi + h * d[5],
        delta: s.delta,
        n_p: s.n_p,
    }
}

fn rk4_substep(s: &ShipState, h: f64, params: &ShipParams) -> Result<ShipState, DynamicsError> {
    let k1 = derivative(s, params)?;
    let k2 = derivative(&offset(s, &k1, 0.5 * h), params)?;
    let k3 = derivative(&offset(s, &k2, 0.5 * h), params)?;
    let k4 = derivative(&offset(s, &k3, h), params)?;
    let mut combined = [0.0; 6];
    for i in 0..6 {
        combined[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
    }
    Ok(offset(s, &combined, h))
}
