//! Reward terms shared by both scenarios.

use serde::{Deserialize, Serialize};

use super::colregs::GiveWay;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardConstants {
    /// Paid while inside the goal disc.
    pub r_goal_const: f64,
    /// Per-meter shaping outside the goal disc; negative.
    pub lambda_goal: f64,
    /// Collision penalty magnitude.
    pub r_collision_const: f64,
    /// COLREGs shaping magnitude per step.
    pub r_colregs_const: f64,
}

impl Default for RewardConstants {
    fn default() -> Self {
        Self {
            r_goal_const: 10.0,
            lambda_goal: -0.05,
            r_collision_const: 20.0,
            r_colregs_const: 0.5,
        }
    }
}

/// Rudder commands gentler than this do not count as "turning right".
pub const TURN_RIGHT_DEAD_BAND: f64 = 2.0 * std::f64::consts::PI / 180.0;

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Goal shaping: a flat bonus inside `goal_radius`, otherwise a negative
/// term proportional to the distance.
pub fn reward_goal(
    position: [f64; 2],
    goal: [f64; 2],
    goal_radius: f64,
    c: &RewardConstants,
) -> f64 {
    let d = dist(position, goal);
    if d < goal_radius {
        c.r_goal_const
    } else {
        c.lambda_goal * d
    }
}

/// Ship-domain intrusion: both ships are penalized when their separation
/// drops below one ship length (2 S_r = L).
pub fn reward_collision(
    position: [f64; 2],
    other: [f64; 2],
    ship_length: f64,
    c: &RewardConstants,
) -> f64 {
    if dist(position, other) < ship_length {
        -c.r_collision_const
    } else {
        0.0
    }
}

/// COLREGs shaping while a collision risk is active: positive for both
/// ships when every give-way vessel orders starboard rudder beyond the
/// dead band, negative otherwise. Zero when no risk exists.
pub fn reward_colregs(
    risk_active: bool,
    give_way: GiveWay,
    rudder_commands: &[f64],
    c: &RewardConstants,
) -> f64 {
    if !risk_active {
        return 0.0;
    }
    let turning_right = |ship: usize| rudder_commands[ship] > TURN_RIGHT_DEAD_BAND;
    let compliant = match give_way {
        GiveWay::Both => (0..rudder_commands.len()).all(turning_right),
        GiveWay::Ship(i) => turning_right(i),
    };
    if compliant {
        c.r_colregs_const
    } else {
        -c.r_colregs_const
    }
}
