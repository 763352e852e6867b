//! Shared inputs for the benchmark harness.

use circlab::{CircleGrid, Field};

/// Deterministic field with several harmonics and `2k` zeros near `sin(k x)`.
pub fn wavy_field(n: usize, k: u32) -> Field {
    let grid = CircleGrid::new(n).expect("power-of-two grid");
    let k = k as f64;
    Field::from_fn(&grid, |x| {
        (k * x).sin() + 0.3 * (2.0 * x + 0.4).cos() + 0.1 * (5.0 * x).sin()
    })
}
