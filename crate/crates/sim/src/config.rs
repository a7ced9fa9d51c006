//! Experiment configuration and its flat `key = value` text format.
//!
//! One setting per line, `#` starts a comment. Keys are dotted and carry
//! their unit in the name; anything not listed in [`KEYS`] is rejected.
//!
//! ```text
//! grid.f_c_ghz = 28
//! mobility.profile = severe
//! sweep.delta_g_db = 14, 17, 20, 23, 26, 29
//! ```

use rsisac_core::channel::{LinkBudget, OfdmGrid, ScenarioGeometry, Vec2};
use rsisac_core::optimizer::{BcdConfig, Scheme};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Every accepted key with its unit.
pub const KEYS: &[(&str, &str)] = &[
    ("grid.n_sc", "subcarriers"),
    ("grid.n_cp", "samples"),
    ("grid.delta_f_khz", "kHz"),
    ("grid.m_symbols", "symbols"),
    ("grid.f_c_ghz", "GHz"),
    ("geometry.bs_m", "x, y in m"),
    ("geometry.ue_m", "x, y in m"),
    ("geometry.target_m", "x, y in m"),
    ("geometry.ue_heading_deg", "deg from +x"),
    ("geometry.target_heading_deg", "deg from +x"),
    ("link.p_tx_dbm", "dBm"),
    ("link.noise_dbm", "dBm"),
    ("link.rcs_dbsm", "dBsm"),
    ("link.antenna_gain_dbi", "dBi, UE-BS product"),
    ("link.delay_spread_ns", "ns"),
    ("link.dp_snr_db", "dB at P_tx / N_sc"),
    ("link.delta_g_db", "dB or `geometric`"),
    ("mobility.profile", "static | moderate | severe | 40/60 | 80/120"),
    ("mobility.v_ue_kmh", "km/h"),
    ("mobility.v_target_kmh", "km/h"),
    ("sensing.gamma", "weighted CRLB target"),
    ("sweep.delta_g_db", "comma-separated dB"),
    ("optimizer.max_iterations", "count"),
    ("optimizer.tolerance", "bps/Hz per subcarrier"),
    ("optimizer.mask", "relative half-width"),
    ("run.runs", "realizations per point"),
    ("run.seed", "u64"),
    ("run.schemes", "comma-separated: rs, noma_cf, noma_sf"),
    ("run.out", "directory"),
];

/// Speeds of the UE and the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mobility {
    Static,
    /// 40 km/h UE, 60 km/h target.
    Moderate,
    /// 80 km/h UE, 120 km/h target.
    Severe,
    Custom { v_ue_kmh: f64, v_target_kmh: f64 },
}

impl Mobility {
    pub fn speeds_kmh(self) -> (f64, f64) {
        match self {
            Mobility::Static => (0.0, 0.0),
            Mobility::Moderate => (40.0, 60.0),
            Mobility::Severe => (80.0, 120.0),
            Mobility::Custom { v_ue_kmh, v_target_kmh } => (v_ue_kmh, v_target_kmh),
        }
    }

    pub fn label(self) -> String {
        match self {
            Mobility::Static => "static".into(),
            Mobility::Moderate => "moderate".into(),
            Mobility::Severe => "severe".into(),
            Mobility::Custom { v_ue_kmh, v_target_kmh } => format!("{v_ue_kmh}/{v_target_kmh}"),
        }
    }
}

impl fmt::Display for Mobility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Mobility {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "static" | "0/0" => Ok(Mobility::Static),
            "moderate" | "40/60" => Ok(Mobility::Moderate),
            "severe" | "80/120" => Ok(Mobility::Severe),
            other => {
                let (a, b) = other.split_once('/').ok_or_else(|| format!("unknown mobility profile `{other}`"))?;
                let v_ue_kmh = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
                let v_target_kmh = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
                Ok(Mobility::Custom { v_ue_kmh, v_target_kmh })
            }
        }
    }
}

/// Everything one experiment needs. Powers and gains are kept in the config
/// units; conversion to SI happens in the accessor methods.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: OfdmGrid,
    pub bs: Vec2,
    pub ue: Vec2,
    pub target: Vec2,
    pub ue_heading_deg: f64,
    pub target_heading_deg: f64,
    pub p_tx_dbm: f64,
    pub noise_dbm: f64,
    pub rcs_dbsm: f64,
    pub antenna_gain_dbi: f64,
    pub delay_spread_ns: f64,
    pub dp_snr_db: f64,
    /// Operating point of single-point commands; `None` is the geometric echo.
    pub delta_g_db: Option<f64>,
    pub mobility: Mobility,
    pub gamma_sens: f64,
    pub sweep_delta_g_db: Vec<f64>,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub mask: f64,
    pub runs: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid: OfdmGrid::default(),
            bs: Vec2::new(0.0, 0.0),
            ue: Vec2::new(300.0, 0.0),
            target: Vec2::new(250.0, 50.0),
            ue_heading_deg: 0.0,
            target_heading_deg: 270.0,
            p_tx_dbm: 23.0,
            noise_dbm: -95.0,
            rcs_dbsm: 10.0,
            antenna_gain_dbi: 38.0,
            delay_spread_ns: 1000.0,
            dp_snr_db: 22.1,
            delta_g_db: None,
            mobility: Mobility::Static,
            gamma_sens: 200.0,
            sweep_delta_g_db: vec![14.0, 17.0, 20.0, 23.0, 26.0, 29.0],
            max_iterations: 25,
            tolerance: 1e-4,
            mask: 0.05,
            runs: 200,
            seed: 1,
            schemes: Scheme::ALL.to_vec(),
            out_dir: PathBuf::from("results"),
        }
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue { key: key.into(), value: value.into(), reason: reason.into() }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value.parse().map_err(|_| invalid(key, value, "not a number"))?;
    if !v.is_finite() {
        return Err(invalid(key, value, "not finite"));
    }
    Ok(v)
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse().map_err(|_| invalid(key, value, "not a nonnegative integer"))
}

fn parse_point(key: &str, value: &str) -> Result<Vec2, ConfigError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(invalid(key, value, "expected `x, y`"));
    }
    Ok(Vec2::new(parse_f64(key, parts[0])?, parse_f64(key, parts[1])?))
}

/// Parses a comma-separated scheme list such as `rs,noma_cf`.
pub fn parse_schemes(value: &str) -> Result<Vec<Scheme>, ConfigError> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let s: Scheme = part.parse().map_err(|e: String| invalid("run.schemes", value, e))?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Defaults overridden by the settings in `text`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen: Vec<String> = Vec::new();
        let mut speeds: (Option<f64>, Option<f64>) = (None, None);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax { line, text: raw.trim().into() });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line, text: raw.trim().into() });
            }
            if !KEYS.iter().any(|(k, _)| *k == key) {
                return Err(ConfigError::UnknownKey { line, key: key.into() });
            }
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::DuplicateKey { line, key: key.into() });
            }
            seen.push(key.into());
            match key {
                "grid.n_sc" => cfg.grid.n_sc = parse_usize(key, value)?,
                "grid.n_cp" => cfg.grid.n_cp = parse_usize(key, value)?,
                "grid.delta_f_khz" => cfg.grid.delta_f = parse_f64(key, value)? * 1e3,
                "grid.m_symbols" => cfg.grid.m_symbols = parse_usize(key, value)?,
                "grid.f_c_ghz" => cfg.grid.f_c = parse_f64(key, value)? * 1e9,
                "geometry.bs_m" => cfg.bs = parse_point(key, value)?,
                "geometry.ue_m" => cfg.ue = parse_point(key, value)?,
                "geometry.target_m" => cfg.target = parse_point(key, value)?,
                "geometry.ue_heading_deg" => cfg.ue_heading_deg = parse_f64(key, value)?,
                "geometry.target_heading_deg" => cfg.target_heading_deg = parse_f64(key, value)?,
                "link.p_tx_dbm" => cfg.p_tx_dbm = parse_f64(key, value)?,
                "link.noise_dbm" => cfg.noise_dbm = parse_f64(key, value)?,
                "link.rcs_dbsm" => cfg.rcs_dbsm = parse_f64(key, value)?,
                "link.antenna_gain_dbi" => cfg.antenna_gain_dbi = parse_f64(key, value)?,
                "link.delay_spread_ns" => cfg.delay_spread_ns = parse_f64(key, value)?,
                "link.dp_snr_db" => cfg.dp_snr_db = parse_f64(key, value)?,
                "link.delta_g_db" => {
                    cfg.delta_g_db = match value {
                        "geometric" => None,
                        v => Some(parse_f64(key, v)?),
                    }
                }
                "mobility.profile" => cfg.mobility = value.parse().map_err(|e: String| invalid(key, value, e))?,
                "mobility.v_ue_kmh" => speeds.0 = Some(parse_f64(key, value)?),
                "mobility.v_target_kmh" => speeds.1 = Some(parse_f64(key, value)?),
                "sensing.gamma" => cfg.gamma_sens = parse_f64(key, value)?,
                "sweep.delta_g_db" => {
                    cfg.sweep_delta_g_db = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|v| parse_f64(key, v))
                        .collect::<Result<_, _>>()?
                }
                "optimizer.max_iterations" => cfg.max_iterations = parse_usize(key, value)?,
                "optimizer.tolerance" => cfg.tolerance = parse_f64(key, value)?,
                "optimizer.mask" => cfg.mask = parse_f64(key, value)?,
                "run.runs" => cfg.runs = parse_usize(key, value)?,
                "run.seed" => cfg.seed = value.parse().map_err(|_| invalid(key, value, "not a u64"))?,
                "run.schemes" => cfg.schemes = parse_schemes(value)?,
                "run.out" => cfg.out_dir = PathBuf::from(value),
                _ => unreachable!("key table and match arms disagree"),
            }
        }
        if speeds.0.is_some() || speeds.1.is_some() {
            let (u, t) = cfg.mobility.speeds_kmh();
            cfg.mobility = Mobility::Custom { v_ue_kmh: speeds.0.unwrap_or(u), v_target_kmh: speeds.1.unwrap_or(t) };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.grid.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.runs == 0 {
            return Err(ConfigError::Invalid("run.runs must be >= 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(ConfigError::Invalid("run.schemes must name at least one scheme".into()));
        }
        if self.sweep_delta_g_db.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::Invalid("sweep values must be finite".into()));
        }
        if !(self.gamma_sens > 0.0) {
            return Err(ConfigError::Invalid("sensing.gamma must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.mask) {
            return Err(ConfigError::Invalid("optimizer.mask must lie in [0, 1)".into()));
        }
        if !(self.delay_spread_ns > 0.0) {
            return Err(ConfigError::Invalid("link.delay_spread_ns must be positive".into()));
        }
        let (u, t) = self.mobility.speeds_kmh();
        if u < 0.0 || t < 0.0 {
            return Err(ConfigError::Invalid("speeds must be nonnegative".into()));
        }
        if (self.ue - self.target).norm() == 0.0 || (self.bs - self.target).norm() == 0.0 {
            return Err(ConfigError::Invalid("target must not coincide with the UE or the BS".into()));
        }
        Ok(())
    }

    /// Total transmit power in W.
    pub fn p_tx(&self) -> f64 {
        db_to_linear(self.p_tx_dbm) * 1e-3
    }

    pub fn noise_power(&self) -> f64 {
        db_to_linear(self.noise_dbm) * 1e-3
    }

    pub fn geometry(&self, mobility: Mobility) -> ScenarioGeometry {
        let (u, t) = mobility.speeds_kmh();
        ScenarioGeometry {
            bs_pos: self.bs,
            ue_pos: self.ue,
            tar_pos: self.target,
            v_ue: ScenarioGeometry::velocity(u / 3.6, self.ue_heading_deg),
            v_tar: ScenarioGeometry::velocity(t / 3.6, self.target_heading_deg),
        }
    }

    pub fn link(&self, delta_g_db: Option<f64>) -> LinkBudget {
        LinkBudget {
            rcs: db_to_linear(self.rcs_dbsm),
            g_product: db_to_linear(self.antenna_gain_dbi),
            delay_spread: self.delay_spread_ns * 1e-9,
            noise_power: self.noise_power(),
            p_avg: self.p_tx() / self.grid.n_sc as f64,
            dp_snr_db: self.dp_snr_db,
            delta_g_db,
        }
    }

    pub fn bcd(&self, gamma_sens: f64) -> BcdConfig {
        BcdConfig {
            gamma_sens,
            p_tx: self.p_tx(),
            mask: self.mask,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            ..BcdConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reference_scenario() {
        let c = ExperimentConfig::default();
        assert_eq!(c.grid, OfdmGrid::default());
        assert!((c.p_tx() - 0.199_526_231).abs() < 1e-8);
        assert!((c.noise_power() - 3.162_277_66e-13).abs() < 1e-20);
        let link = c.link(None);
        assert!((link.rcs - 10.0).abs() < 1e-12);
        assert!((link.g_product - 10f64.powf(3.8)).abs() < 1e-6);
        assert!((link.delay_spread - 1e-6).abs() < 1e-18);
        c.validate().unwrap();
    }

    #[test]
    fn parses_units_and_lists() {
        let c = ExperimentConfig::parse(
            "# comment\n grid.delta_f_khz = 30\ngrid.f_c_ghz=3.5  # trailing\n\
             geometry.ue_m = 100, -5\nsweep.delta_g_db = 14, 20.5\nrun.schemes = noma_sf, rs\n\
             link.delta_g_db = 25\nmobility.profile = 40/60\n",
        )
        .unwrap();
        assert_eq!(c.grid.delta_f, 30e3);
        assert_eq!(c.grid.f_c, 3.5e9);
        assert_eq!(c.ue, Vec2::new(100.0, -5.0));
        assert_eq!(c.sweep_delta_g_db, vec![14.0, 20.5]);
        assert_eq!(c.schemes, vec![Scheme::NomaSf, Scheme::Rs]);
        assert_eq!(c.delta_g_db, Some(25.0));
        assert_eq!(c.mobility, Mobility::Moderate);
    }

    #[test]
    fn explicit_speeds_make_a_custom_profile() {
        let c = ExperimentConfig::parse("mobility.profile = severe\nmobility.v_target_kmh = 10").unwrap();
        assert_eq!(c.mobility, Mobility::Custom { v_ue_kmh: 80.0, v_target_kmh: 10.0 });
        let g = c.geometry(c.mobility);
        assert!((g.v_ue.norm() - 80.0 / 3.6).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ExperimentConfig::parse("grid.bogus = 1"), Err(ConfigError::UnknownKey { line: 1, .. })));
        assert!(matches!(ExperimentConfig::parse("\nno equals sign"), Err(ConfigError::Syntax { line: 2, .. })));
        assert!(matches!(ExperimentConfig::parse("run.runs = 0"), Err(ConfigError::Invalid(_))));
        assert!(matches!(ExperimentConfig::parse("run.runs = -3"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(ExperimentConfig::parse("run.schemes = oma"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(ExperimentConfig::parse("run.schemes = ,"), Err(ConfigError::Invalid(_))));
        assert!(matches!(ExperimentConfig::parse("sensing.gamma = 1\nsensing.gamma = 2"), Err(ConfigError::DuplicateKey { .. })));
        assert!(matches!(ExperimentConfig::parse("grid.n_sc = 31"), Err(ConfigError::Invalid(_))));
        assert!(matches!(ExperimentConfig::parse("link.p_tx_dbm = inf"), Err(ConfigError::InvalidValue { .. })));
    }

    #[test]
    fn mobility_labels_round_trip() {
        for m in [Mobility::Static, Mobility::Moderate, Mobility::Severe, Mobility::Custom { v_ue_kmh: 5.0, v_target_kmh: 7.5 }] {
            assert_eq!(m.label().parse::<Mobility>().unwrap(), m);
        }
        assert_eq!("80/120".parse::<Mobility>().unwrap(), Mobility::Severe);
    }
}
