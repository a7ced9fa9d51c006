use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rsisac_core::channel::{ChannelRealization, LinkBudget, OfdmGrid, ScenarioGeometry, Vec2};

pub const P_TX: f64 = 0.199_526_231_496_887_96;

pub fn geometry(v_ue_kmh: f64, v_tar_kmh: f64) -> ScenarioGeometry {
    ScenarioGeometry {
        bs_pos: Vec2::new(0.0, 0.0),
        ue_pos: Vec2::new(300.0, 0.0),
        tar_pos: Vec2::new(250.0, 50.0),
        v_ue: ScenarioGeometry::velocity(v_ue_kmh / 3.6, 0.0),
        v_tar: ScenarioGeometry::velocity(v_tar_kmh / 3.6, 270.0),
    }
}

pub fn link(delta_g_db: Option<f64>) -> LinkBudget {
    LinkBudget {
        rcs: 10.0,
        g_product: 10f64.powf(3.8),
        delay_spread: 1e-6,
        noise_power: 10f64.powf(-9.5) * 1e-3,
        p_avg: P_TX / 32.0,
        dp_snr_db: 22.1,
        delta_g_db,
    }
}

pub fn channel(seed: u64, delta_g_db: Option<f64>, severe: bool) -> ChannelRealization {
    let (u, t) = if severe { (80.0, 120.0) } else { (0.0, 0.0) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ChannelRealization::draw(&OfdmGrid::default(), &geometry(u, t), &link(delta_g_db), &mut rng).unwrap()
}
