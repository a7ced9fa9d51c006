use super::grid::OfdmGrid;
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Power leaked from subcarrier `k` into subcarrier `n` by a residual
/// Doppler `nu` (Dirichlet kernel). Signed indices; the kernel is periodic in
/// `k - n` with period `N`, so offsets are taken cyclically.
pub fn dirichlet_leakage(grid: &OfdmGrid, nu: f64, n: i64, k: i64) -> f64 {
    let big_n = grid.n_sc as i64;
    let eps = nu / grid.delta_f;
    let e_int = eps.round();
    let frac = eps - e_int;
    // Reduce the integer part of the offset into (-N/2, N/2].
    let mut d = (k - n + e_int as i64).rem_euclid(big_n);
    if d > big_n / 2 {
        d -= big_n;
    }
    if frac == 0.0 {
        return if d == 0 { 1.0 } else { 0.0 };
    }
    let x = d as f64 + frac;
    let num = (PI * frac).sin();
    let den = big_n as f64 * (PI * x / big_n as f64).sin();
    (num / den).powi(2)
}

/// Full leakage matrix in storage order, `xi[(n, k)]`.
pub fn leakage_matrix(grid: &OfdmGrid, nu: f64) -> DMatrix<f64> {
    let n = grid.n_sc;
    DMatrix::from_fn(n, n, |i, j| dirichlet_leakage(grid, nu, grid.index(i), grid.index(j)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_doppler_limits() {
        let g = OfdmGrid::default();
        assert_eq!(dirichlet_leakage(&g, 0.0, 5, 5), 1.0);
        assert_eq!(dirichlet_leakage(&g, 0.0, 5, 7), 0.0);
        assert_eq!(leakage_matrix(&g, 0.0), DMatrix::identity(32, 32));
    }

    #[test]
    fn integer_doppler_is_a_cyclic_shift() {
        let g = OfdmGrid::default();
        let xi = leakage_matrix(&g, 2.0 * g.delta_f);
        for i in 0..32 {
            for j in 0..32 {
                let expect = if (j + 2) % 32 == i { 1.0 } else { 0.0 };
                assert_eq!(xi[(i, j)], expect, "({i},{j})");
            }
        }
    }

    #[test]
    fn half_bin_diagonal() {
        // sin^2(pi/2) / (32 sin(pi/64))^2, evaluated independently.
        let g = OfdmGrid::default();
        let expect = 1.0 / (32.0 * (std::f64::consts::PI / 64.0).sin()).powi(2);
        let xi = leakage_matrix(&g, 0.5 * g.delta_f);
        for i in 0..32 {
            assert!((xi[(i, i)] - expect).abs() < 1e-14);
        }
        assert!((expect - 0.405_6).abs() < 1e-4);
    }

    #[test]
    fn depends_only_on_cyclic_offset() {
        let g = OfdmGrid::default();
        let xi = leakage_matrix(&g, 0.37 * g.delta_f);
        for i in 0..32 {
            for j in 0..32 {
                assert_eq!(xi[(i, j)], xi[((i + 5) % 32, (j + 5) % 32)]);
            }
        }
    }
}
