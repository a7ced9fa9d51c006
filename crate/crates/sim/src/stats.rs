/// Sample mean with a normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
}

pub fn mean_ci95(values: &[f64]) -> MeanCi {
    let n = values.len();
    if n == 0 {
        return MeanCi { mean: f64::NAN, ci95: f64::NAN, n };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ci95 = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        1.96 * (var / n as f64).sqrt()
    } else {
        0.0
    };
    MeanCi { mean, ci95, n }
}

/// Relative gain of `a` over `b` in percent.
pub fn gain_pct(a: f64, b: f64) -> f64 {
    (a / b - 1.0) * 100.0
}
