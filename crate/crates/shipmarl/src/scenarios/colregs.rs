//! Encounter classification and the projected meeting point.
//!
//! Angles follow the body convention used everywhere else: positive
//! relative bearings are to starboard.

use serde::{Deserialize, Serialize};

use super::{wrap_angle, ScenarioError};
use crate::dynamics::ShipState;

/// Ships slower than this are not "under way" for classification.
pub const MIN_CLASSIFIABLE_SPEED: f64 = 0.05;

/// Head-on: courses reciprocal within this margin...
const HEAD_ON_COURSE_BAND: f64 = 15.0 * std::f64::consts::PI / 180.0;
/// ...and each ship bears within this margin of the other's bow.
const HEAD_ON_BOW_BAND: f64 = 6.0 * std::f64::consts::PI / 180.0;
/// Overtaking sector: approaching from more than 112.5 degrees off the
/// other ship's bow.
const OVERTAKING_SECTOR: f64 = 112.5 * std::f64::consts::PI / 180.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncounterType {
    HeadOn,
    /// The second ship crosses from the first ship's port side.
    CrossingPort,
    /// The second ship crosses from the first ship's starboard side.
    CrossingStarboard,
    Overtaking,
}

impl EncounterType {
    pub fn is_crossing(&self) -> bool {
        matches!(self, EncounterType::CrossingPort | EncounterType::CrossingStarboard)
    }

    /// Collapses the crossing variants: 0 = head-on, 1 = crossing,
    /// 2 = overtaking. Used when bucketing statistics.
    pub fn family(&self) -> usize {
        match self {
            EncounterType::HeadOn => 0,
            EncounterType::CrossingPort | EncounterType::CrossingStarboard => 1,
            EncounterType::Overtaking => 2,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self.family() {
            0 => "head_on",
            1 => "crossing",
            _ => "overtaking",
        }
    }
}

/// Which vessel must keep clear.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GiveWay {
    /// Head-on: both alter course to starboard.
    Both,
    Ship(usize),
}

impl GiveWay {
    pub fn includes(&self, ship: usize) -> bool {
        match self {
            GiveWay::Both => true,
            GiveWay::Ship(i) => *i == ship,
        }
    }
}

/// Bearing of `to` as seen from `from`, relative to `from`'s bow.
/// Positive to starboard.
pub fn relative_bearing(from: &ShipState, to: &ShipState) -> f64 {
    let abs = (to.y0 - from.y0).atan2(to.x0 - from.x0);
    wrap_angle(abs - from.psi)
}

/// Classifies the encounter between two ships under way and names the
/// give-way vessel (index 0 for `a`, 1 for `b`).
pub fn classify_encounter(
    a: &ShipState,
    b: &ShipState,
) -> Result<(EncounterType, GiveWay), ScenarioError> {
    if a.speed() <= MIN_CLASSIFIABLE_SPEED && b.speed() <= MIN_CLASSIFIABLE_SPEED {
        return Err(ScenarioError::ShipsNotUnderWay);
    }

    let rel_ab = relative_bearing(a, b);
    let rel_ba = relative_bearing(b, a);
    let course_diff = wrap_angle(a.psi - b.psi).abs();

    if (std::f64::consts::PI - course_diff) <= HEAD_ON_COURSE_BAND
        && rel_ab.abs() <= HEAD_ON_BOW_BAND
        && rel_ba.abs() <= HEAD_ON_BOW_BAND
    {
        return Ok((EncounterType::HeadOn, GiveWay::Both));
    }

    // Overtaking: the overtaker sits deep in the other's stern sector and
    // is the faster ship.
    if rel_ba.abs() > OVERTAKING_SECTOR && a.speed() > b.speed() {
        return Ok((EncounterType::Overtaking, GiveWay::Ship(0)));
    }
    if rel_ab.abs() > OVERTAKING_SECTOR && b.speed() > a.speed() {
        return Ok((EncounterType::Overtaking, GiveWay::Ship(1)));
    }

    // Crossing: whoever has the other to starboard keeps clear.
    if rel_ab > 0.0 {
        Ok((EncounterType::CrossingStarboard, GiveWay::Ship(0)))
    } else {
        Ok((EncounterType::CrossingPort, GiveWay::Ship(1)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeetingPoint {
    pub point: [f64; 2],
    /// Distance from the first ship to the meeting point.
    pub r_a: f64,
    /// Distance from the second ship to the meeting point.
    pub r_b: f64,
}

/// Intersection of the two course rays, if it lies ahead of both ships.
pub fn meeting_point(a: &ShipState, b: &ShipState) -> Option<MeetingPoint> {
    let (da_x, da_y) = (a.psi.cos(), a.psi.sin());
    let (db_x, db_y) = (b.psi.cos(), b.psi.sin());
    // a + s*da = b + t*db
    let det = da_x * (-db_y) - (-db_x) * da_y;
    if det.abs() < 1e-9 {
        return None;
    }
    let rx = b.x0 - a.x0;
    let ry = b.y0 - a.y0;
    let s = (rx * (-db_y) - (-db_x) * ry) / det;
    let t = (da_x * ry - da_y * rx) / det;
    if s <= 0.0 || t <= 0.0 {
        return None;
    }
    Some(MeetingPoint {
        point: [a.x0 + s * da_x, a.y0 + s * da_y],
        r_a: s,
        r_b: t,
    })
}
