use crate::error::{invalid, CliResult};

/// Parses `start:stop:step` into the points `start + i*step` that do not pass
/// `stop` (a small slack absorbs rounding in the step count).
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return invalid(format!("grid `{spec}` is not start:stop:step"));
    }
    let mut nums = [0.0; 3];
    for (slot, raw) in nums.iter_mut().zip(&parts) {
        *slot = match raw.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ => return invalid(format!("grid `{spec}`: `{raw}` is not a number")),
        };
    }
    let [start, stop, step] = nums;
    if step <= 0.0 {
        return invalid(format!("grid `{spec}`: step must be positive"));
    }
    if stop < start {
        return invalid(format!("grid `{spec}`: stop is below start"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 10_000_000 {
        return invalid(format!("grid `{spec}` has {count} points"));
    }
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}
