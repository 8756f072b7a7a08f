//! Ship particulars, actuator limits and hydrodynamic coefficients.
//!
//! Everything is loaded from a TOML file (see `data/usv7.toml`, which is
//! embedded as the default vessel). Dimensional quantities are SI; hull
//! derivatives and interaction factors are nondimensional.

use std::path::Path;

use serde::Deserialize;

use super::DynamicsError;

/// Nondimensional hull derivatives plus propeller/rudder interaction
/// factors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HydroCoeffs {
    // Surge
    pub r_0: f64,
    pub x_vv: f64,
    pub x_vr: f64,
    pub x_rr: f64,
    pub x_vvvv: f64,
    // Sway
    pub y_v: f64,
    pub y_r: f64,
    pub y_vvv: f64,
    pub y_vvr: f64,
    pub y_vrr: f64,
    pub y_rrr: f64,
    // Yaw
    pub n_v: f64,
    pub n_r: f64,
    pub n_vvv: f64,
    pub n_vvr: f64,
    pub n_vrr: f64,
    pub n_rrr: f64,
    // Propeller
    pub t_p: f64,
    pub w_p0: f64,
    pub k_0: f64,
    pub k_1: f64,
    pub k_2: f64,
    // Rudder
    pub t_r: f64,
    pub a_h: f64,
    pub x_h_nd: f64,
    pub x_r_nd: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub l_r_nd: f64,
    pub gamma_r: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShipParams {
    // Dimensional particulars
    pub length: f64,
    pub breadth: f64,
    pub draught: f64,
    pub displacement_volume: f64,
    pub x_g: f64,
    pub rudder_area: f64,
    pub rudder_span: f64,
    pub propeller_diameter: f64,
    pub block_coefficient: f64,
    pub propulsion_coefficient: f64,
    pub water_density: f64,
    // Derived masses/inertias
    pub mass: f64,
    pub added_mass_x: f64,
    pub added_mass_y: f64,
    pub yaw_inertia: f64,
    pub added_yaw_inertia: f64,
    // Actuators
    pub delta_max: f64,
    pub rudder_rate_limit: f64,
    pub n_p_max: f64,
    pub propeller_time_constant: f64,
    pub gear_ratio: f64,
    pub hydro: HydroCoeffs,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    ship: RawShip,
    actuator: RawActuator,
    added_mass: RawAddedMass,
    hull: RawHull,
    propeller: RawPropeller,
    rudder: RawRudder,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShip {
    length: f64,
    breadth: f64,
    draught: f64,
    displacement_volume: f64,
    x_g: f64,
    rudder_area: f64,
    rudder_span: f64,
    propeller_diameter: f64,
    block_coefficient: f64,
    propulsion_coefficient: f64,
    water_density: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActuator {
    delta_max_deg: f64,
    rudder_rate_deg_per_s: f64,
    n_p_max_rpm: f64,
    propeller_time_constant_s: f64,
    gear_ratio: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAddedMass {
    m_x_nd: f64,
    m_y_nd: f64,
    j_z_nd: f64,
    yaw_gyradius_ratio: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHull {
    r_0: f64,
    x_vv: f64,
    x_vr: f64,
    x_rr: f64,
    x_vvvv: f64,
    y_v: f64,
    y_r: f64,
    y_vvv: f64,
    y_vvr: f64,
    y_vrr: f64,
    y_rrr: f64,
    n_v: f64,
    n_r: f64,
    n_vvv: f64,
    n_vvr: f64,
    n_vrr: f64,
    n_rrr: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPropeller {
    t_p: f64,
    k_0: f64,
    k_1: f64,
    k_2: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRudder {
    t_r: f64,
    a_h: f64,
    x_h_nd: f64,
    x_r_nd: f64,
    epsilon: f64,
    kappa: f64,
    l_r_nd: f64,
    gamma_r: f64,
}

const DEFAULT_TOML: &str = include_str!("../../data/usv7.toml");

impl ShipParams {
    /// The embedded 7 m USV.
    pub fn default_usv() -> Self {
        Self::from_toml_str(DEFAULT_TOML).expect("embedded ship file is valid")
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self, DynamicsError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| DynamicsError::ParamsFile(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, DynamicsError> {
        let raw: RawFile =
            toml::from_str(text).map_err(|e| DynamicsError::ParamsFile(e.to_string()))?;
        let s = raw.ship;
        let a = raw.actuator;
        let am = raw.added_mass;
        let h = raw.hull;
        let p = raw.propeller;
        let r = raw.rudder;

        let mass = s.water_density * s.displacement_volume;
        // Reference areas for the standard nondimensionalization.
        let lat = 0.5 * s.water_density * s.length.powi(2) * s.draught;
        let lat4 = 0.5 * s.water_density * s.length.powi(4) * s.draught;
        let gyradius = am.yaw_gyradius_ratio * s.length;

        let params = ShipParams {
            length: s.length,
            breadth: s.breadth,
            draught: s.draught,
            displacement_volume: s.displacement_volume,
            x_g: s.x_g,
            rudder_area: s.rudder_area,
            rudder_span: s.rudder_span,
            propeller_diameter: s.propeller_diameter,
            block_coefficient: s.block_coefficient,
            propulsion_coefficient: s.propulsion_coefficient,
            water_density: s.water_density,
            mass,
            added_mass_x: am.m_x_nd * lat,
            added_mass_y: am.m_y_nd * lat,
            yaw_inertia: mass * gyradius * gyradius,
            added_yaw_inertia: am.j_z_nd * lat4,
            delta_max: a.delta_max_deg.to_radians(),
            rudder_rate_limit: a.rudder_rate_deg_per_s.to_radians(),
            n_p_max: a.n_p_max_rpm,
            propeller_time_constant: a.propeller_time_constant_s,
            gear_ratio: a.gear_ratio,
            hydro: HydroCoeffs {
                r_0: h.r_0,
                x_vv: h.x_vv,
                x_vr: h.x_vr,
                x_rr: h.x_rr,
                x_vvvv: h.x_vvvv,
                y_v: h.y_v,
                y_r: h.y_r,
                y_vvv: h.y_vvv,
                y_vvr: h.y_vvr,
                y_vrr: h.y_vrr,
                y_rrr: h.y_rrr,
                n_v: h.n_v,
                n_r: h.n_r,
                n_vvv: h.n_vvv,
                n_vvr: h.n_vvr,
                n_vrr: h.n_vrr,
                n_rrr: h.n_rrr,
                t_p: p.t_p,
                w_p0: 1.0 - s.propulsion_coefficient,
                k_0: p.k_0,
                k_1: p.k_1,
                k_2: p.k_2,
                t_r: r.t_r,
                a_h: r.a_h,
                x_h_nd: r.x_h_nd,
                x_r_nd: r.x_r_nd,
                epsilon: r.epsilon,
                kappa: r.kappa,
                l_r_nd: r.l_r_nd,
                gamma_r: r.gamma_r,
            },
        };
        params.validate(a.delta_max_deg)?;
        Ok(params)
    }

    fn validate(&self, delta_max_deg: f64) -> Result<(), DynamicsError> {
        let mut problems = Vec::new();
        if self.length <= 0.0 {
            problems.push("length must be > 0");
        }
        if self.mass <= 0.0 {
            problems.push("mass must be > 0");
        }
        if self.yaw_inertia <= 0.0 {
            problems.push("yaw inertia must be > 0");
        }
        if self.added_mass_x < 0.0 || self.added_mass_y < 0.0 || self.added_yaw_inertia < 0.0 {
            problems.push("added masses must be >= 0");
        }
        if delta_max_deg != 35.0 {
            problems.push("delta_max_deg must be exactly 35");
        }
        if self.rudder_rate_limit <= 0.0 {
            problems.push("rudder rate limit must be > 0");
        }
        if self.n_p_max <= 0.0 {
            problems.push("n_p_max must be > 0");
        }
        if self.propeller_time_constant <= 0.0 {
            problems.push("propeller time constant must be > 0");
        }
        if self.gear_ratio <= 0.0 {
            problems.push("gear ratio must be > 0");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DynamicsError::BadParams(problems.join("; ")))
        }
    }

    /// Shaft revolutions in rev/s for an indicated rpm command.
    pub fn shaft_rev_per_s(&self, n_p_rpm: f64) -> f64 {
        n_p_rpm * self.gear_ratio / 60.0
    }

    /// Rudder aspect ratio and the Fujii lift-gradient it implies.
    pub fn rudder_lift_gradient(&self) -> f64 {
        let aspect = self.rudder_span * self.rudder_span / self.rudder_area;
        6.13 * aspect / (aspect + 2.25)
    }

    /// Fraction of the rudder span inside the propeller race, capped at 1.
    pub fn race_fraction(&self) -> f64 {
        (self.propeller_diameter / self.rudder_span).min(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ship_matches_particulars() {
        let p = ShipParams::default_usv();
        assert_eq!(p.length, 7.0);
        assert_eq!(p.breadth, 1.3);
        assert_eq!(p.draught, 0.46);
        assert_eq!(p.displacement_volume, 3.27);
        assert_eq!(p.x_g, 0.25);
        assert_eq!(p.rudder_span, 0.35);
        assert_eq!(p.rudder_area, 0.054);
        assert_eq!(p.propeller_diameter, 0.4);
        assert_eq!(p.block_coefficient, 0.55);
        assert_eq!(p.propulsion_coefficient, 0.6);
        assert!((p.delta_max.to_degrees() - 35.0).abs() < 1e-12);
        assert!(p.mass > 0.0 && p.yaw_inertia > 0.0);
        assert!((p.hydro.w_p0 - 0.4).abs() < 1e-12);
    }

    #[test]
    fn non_35_degree_rudder_limit_is_rejected() {
        let text = DEFAULT_TOML.replace("delta_max_deg = 35.0", "delta_max_deg = 30.0");
        assert!(matches!(
            ShipParams::from_toml_str(&text),
            Err(DynamicsError::BadParams(_))
        ));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{DEFAULT_TOML}\n[extra]\nnope = 1.0\n");
        assert!(matches!(
            ShipParams::from_toml_str(&text),
            Err(DynamicsError::ParamsFile(_))
        ));
    }
}
