//! Shared fixtures for the criterion benches in `benches/`.

/// `n` success probabilities spread evenly around `mean`, within ±`spread`.
pub fn ramp(mean: f64, spread: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![mean];
    }
    (0..n)
        .map(|j| mean - spread + 2.0 * spread * j as f64 / (n - 1) as f64)
        .collect()
}
