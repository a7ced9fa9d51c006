use super::ChannelError;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// OFDM numerology shared by every stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmGrid {
    pub n_sc: usize,
    pub n_cp: usize,
    /// Subcarrier spacing in Hz.
    pub delta_f: f64,
    /// Integration pulses per block.
    pub m_symbols: usize,
    /// Carrier frequency in Hz.
    pub f_c: f64,
}

impl OfdmGrid {
    pub fn new(n_sc: usize, n_cp: usize, delta_f: f64, m_symbols: usize, f_c: f64) -> Result<Self, ChannelError> {
        let grid = Self { n_sc, n_cp, delta_f, m_symbols, f_c };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.n_sc < 2 || !self.n_sc.is_multiple_of(2) {
            return Err(ChannelError::InvalidGrid(format!("n_sc must be even and >= 2, got {}", self.n_sc)));
        }
        if !(self.delta_f > 0.0 && self.delta_f.is_finite()) {
            return Err(ChannelError::InvalidGrid(format!("delta_f must be positive, got {}", self.delta_f)));
        }
        if self.m_symbols == 0 {
            return Err(ChannelError::InvalidGrid("m_symbols must be >= 1".into()));
        }
        if !(self.f_c > 0.0 && self.f_c.is_finite()) {
            return Err(ChannelError::InvalidGrid(format!("f_c must be positive, got {}", self.f_c)));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_c
    }

    /// Sampling period `1 / (N delta_f)`.
    pub fn t_s(&self) -> f64 {
        1.0 / (self.n_sc as f64 * self.delta_f)
    }

    pub fn f_s(&self) -> f64 {
        self.n_sc as f64 * self.delta_f
    }

    /// Symbol duration including the cyclic prefix.
    pub fn t_sym(&self) -> f64 {
        (self.n_sc + self.n_cp) as f64 * self.t_s()
    }

    /// Signed subcarrier index of storage position `pos`.
    pub fn index(&self, pos: usize) -> i64 {
        pos as i64 - (self.n_sc / 2) as i64
    }

    /// Subcarrier indices `-N/2 .. N/2-1` in storage order.
    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.n_sc).map(|p| self.index(p))
    }

    /// Storage position of a signed index, if it is on the grid.
    pub fn position(&self, n: i64) -> Option<usize> {
        let pos = n + (self.n_sc / 2) as i64;
        (0..self.n_sc as i64).contains(&pos).then_some(pos as usize)
    }
}

impl Default for OfdmGrid {
    fn default() -> Self {
        Self { n_sc: 32, n_cp: 8, delta_f: 15e3, m_symbols: 16, f_c: 28e9 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_grid() {
        assert!(OfdmGrid::new(31, 8, 15e3, 16, 28e9).is_err());
        assert!(OfdmGrid::new(32, 8, 0.0, 16, 28e9).is_err());
        assert!(OfdmGrid::new(32, 8, 15e3, 0, 28e9).is_err());
    }

    #[test]
    fn index_set_is_symmetric_around_zero() {
        let g = OfdmGrid::default();
        let idx: Vec<i64> = g.indices().collect();
        assert_eq!(idx.first(), Some(&-16));
        assert_eq!(idx.last(), Some(&15));
        assert_eq!(idx.iter().sum::<i64>(), -16);
        assert_eq!(g.position(-16), Some(0));
        assert_eq!(g.position(16), None);
    }

    #[test]
    fn symbol_time_includes_prefix() {
        let g = OfdmGrid::default();
        assert!((g.t_sym() - 40.0 / (32.0 * 15e3)).abs() < 1e-18);
        assert!((g.wavelength() - 0.010_706_873_5).abs() < 1e-9);
    }
}
