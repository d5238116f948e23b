use super::AnalyticsError;

/// Cliff's delta: `(#{x > y} - #{x < y}) / (|x| |y|)`, ties counting zero.
///
/// Sorts `y` once and counts with two binary searches per element of `x`.
pub fn cliffs_delta(x: &[f64], y: &[f64]) -> Result<f64, AnalyticsError> {
    if x.is_empty() || y.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    if let Some(i) = x.iter().chain(y).position(|v| v.is_nan()) {
        return Err(AnalyticsError::NonFinite(i));
    }
    let mut sorted = y.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let m = sorted.len() as i128;
    let mut balance: i128 = 0;
    for &v in x {
        let below = sorted.partition_point(|&s| s < v) as i128;
        let not_above = sorted.partition_point(|&s| s <= v) as i128;
        balance += below - (m - not_above);
    }
    Ok(balance as f64 / (x.len() as i128 * m) as f64)
}
