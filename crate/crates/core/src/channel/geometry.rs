use super::grid::SPEED_OF_LIGHT;
use super::ChannelError;
use nalgebra::Vector2;

pub type Vec2 = Vector2<f64>;

/// Planar bistatic layout: the UE illuminates the target, the BS receives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioGeometry {
    pub bs_pos: Vec2,
    pub ue_pos: Vec2,
    pub tar_pos: Vec2,
    /// Velocities in m/s.
    pub v_ue: Vec2,
    pub v_tar: Vec2,
}

/// Counter-clockwise angle from `a` to `b` in (-pi, pi]; zero if either is null.
fn signed_angle(a: &Vec2, b: &Vec2) -> f64 {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return 0.0;
    }
    (a.x * b.y - a.y * b.x).atan2(a.dot(b))
}

impl ScenarioGeometry {
    /// Velocity vector from a speed in m/s and a heading in degrees
    /// (counter-clockwise from +x).
    pub fn velocity(speed: f64, heading_deg: f64) -> Vec2 {
        let h = heading_deg.to_radians();
        Vec2::new(speed * h.cos(), speed * h.sin())
    }

    pub fn r_ut(&self) -> f64 {
        (self.tar_pos - self.ue_pos).norm()
    }

    pub fn r_tb(&self) -> f64 {
        (self.bs_pos - self.tar_pos).norm()
    }

    /// Angle of the UE velocity relative to the illumination path (signed).
    pub fn delta_tx(&self) -> f64 {
        signed_angle(&self.v_ue, &(self.tar_pos - self.ue_pos))
    }

    /// Angle from the illumination path to the direct path at the UE (signed),
    /// so that `delta_tx + theta_t` is the velocity angle to the direct path.
    pub fn theta_t(&self) -> f64 {
        signed_angle(&(self.tar_pos - self.ue_pos), &(self.bs_pos - self.ue_pos))
    }

    /// Bistatic angle subtended at the target, in [0, pi].
    pub fn bistatic_angle(&self) -> f64 {
        signed_angle(&(self.ue_pos - self.tar_pos), &(self.bs_pos - self.tar_pos)).abs()
    }

    /// Angle between the target velocity and the bistatic bisector.
    pub fn phi(&self) -> f64 {
        let to_ue = self.ue_pos - self.tar_pos;
        let to_bs = self.bs_pos - self.tar_pos;
        if to_ue.norm() == 0.0 || to_bs.norm() == 0.0 {
            return 0.0;
        }
        let bisector = to_ue.normalize() + to_bs.normalize();
        signed_angle(&self.v_tar, &bisector)
    }
}

/// Bistatic radar equation, `|alpha_R|^2`.
pub fn bistatic_echo_gain(geom: &ScenarioGeometry, wavelength: f64, rcs: f64, g_product: f64) -> Result<f64, ChannelError> {
    let (r1, r2) = (geom.r_ut(), geom.r_tb());
    if r1 == 0.0 || r2 == 0.0 {
        return Err(ChannelError::ZeroRange);
    }
    let four_pi = 4.0 * std::f64::consts::PI;
    Ok(g_product * wavelength * wavelength * rcs / (four_pi.powi(3) * r1 * r1 * r2 * r2))
}

pub fn bistatic_delay(geom: &ScenarioGeometry) -> f64 {
    (geom.r_ut() + geom.r_tb()) / SPEED_OF_LIGHT
}

/// Echo Doppler left after the receiver compensates the direct-path Doppler.
pub fn residual_doppler(geom: &ScenarioGeometry, wavelength: f64) -> f64 {
    let v_ue = geom.v_ue.norm();
    let v_tar = geom.v_tar.norm();
    let delta = geom.delta_tx();
    let nu_abs = v_ue / wavelength * delta.cos()
        + 2.0 * v_tar / wavelength * geom.phi().cos() * (geom.bistatic_angle() / 2.0).cos();
    let nu_dp = v_ue / wavelength * (delta + geom.theta_t()).cos();
    nu_abs - nu_dp
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_geometry() -> ScenarioGeometry {
        ScenarioGeometry {
            bs_pos: Vec2::new(0.0, 0.0),
            ue_pos: Vec2::new(300.0, 0.0),
            tar_pos: Vec2::new(250.0, 50.0),
            v_ue: Vec2::zeros(),
            v_tar: Vec2::zeros(),
        }
    }

    #[test]
    fn ranges_and_delay() {
        let g = table_geometry();
        assert!((g.r_ut() - 70.710_678).abs() < 1e-5);
        assert!((g.r_tb() - 254.950_976).abs() < 1e-5);
        let tau = bistatic_delay(&g);
        assert!((tau - (70.710_678_118_654_76 + 254.950_975_679_639_2) / SPEED_OF_LIGHT).abs() < 1e-18);
        assert!((tau - 1.0863e-6).abs() < 1e-9);
    }

    #[test]
    fn delay_of_collocated_points_is_zero() {
        let mut g = table_geometry();
        g.ue_pos = Vec2::zeros();
        g.tar_pos = Vec2::zeros();
        assert_eq!(bistatic_delay(&g), 0.0);
        assert!(matches!(bistatic_echo_gain(&g, 0.01, 1.0, 1.0), Err(ChannelError::ZeroRange)));
    }

    #[test]
    fn symmetric_ranges_give_expected_delay() {
        let g = ScenarioGeometry {
            bs_pos: Vec2::new(0.0, 0.0),
            ue_pos: Vec2::new(240.0, 0.0),
            tar_pos: Vec2::new(120.0, 90.0),
            v_ue: Vec2::zeros(),
            v_tar: Vec2::zeros(),
        };
        assert!((g.r_ut() - 150.0).abs() < 1e-12 && (g.r_tb() - 150.0).abs() < 1e-12);
        assert!((bistatic_delay(&g) - 300.0 / SPEED_OF_LIGHT).abs() < 1e-18);
        assert!((bistatic_delay(&g) - 1.0007e-6).abs() < 1e-10);
    }

    #[test]
    fn echo_gain_scaling() {
        let g = table_geometry();
        let lambda = SPEED_OF_LIGHT / 28e9;
        let a = bistatic_echo_gain(&g, lambda, 10.0, 10f64.powf(3.8)).unwrap();
        assert_eq!(bistatic_echo_gain(&g, lambda, 0.0, 10f64.powf(3.8)).unwrap(), 0.0);
        let mut far = g;
        far.tar_pos = g.bs_pos + (g.tar_pos - g.bs_pos) * 2.0;
        far.ue_pos = far.tar_pos + (g.ue_pos - g.tar_pos) * 2.0;
        let b = bistatic_echo_gain(&far, lambda, 10.0, 10f64.powf(3.8)).unwrap();
        assert!((a / b - 16.0).abs() < 1e-9);
    }

    #[test]
    fn static_scene_has_no_doppler() {
        assert_eq!(residual_doppler(&table_geometry(), 0.01), 0.0);
    }

    #[test]
    fn collinear_illumination_cancels_direct_doppler() {
        // Target on the UE->BS line: theta_T = 0, so a static target leaves
        // no residual Doppler whatever the UE does.
        let mut g = table_geometry();
        g.tar_pos = Vec2::new(150.0, 0.0);
        g.v_ue = ScenarioGeometry::velocity(22.0, 37.0);
        assert!(g.theta_t().abs() < 1e-15);
        assert!(residual_doppler(&g, 0.01).abs() < 1e-9);
    }
}
