mod border;
mod plot;
mod sample;
mod solve;
mod verify;

pub use border::border;
pub use plot::plot;
pub use sample::sample;
pub use solve::solve;
pub use verify::{verify, VerifyReport};

/// `n` evenly spaced points from `a` to `b` inclusive.
pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Stderr report listing the points where a solver failed.
pub(crate) fn failure_report(failures: &[(f64, f64, String)]) -> String {
    let items: Vec<serde_json::Value> = failures
        .iter()
        .map(|(x, y, e)| serde_json::json!({ "x": x, "y": y, "error": e }))
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({ "schema": "frv-failures/1", "failures": items }))
        .expect("json values")
}
