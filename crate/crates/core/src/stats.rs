//! Small statistics helpers: medians, median of means, compensated sums.

/// Lower median: for an even count, the smaller of the two middle values.
/// Returns `NaN` for an empty slice.
pub fn lower_median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[(sorted.len() - 1) / 2]
}

/// Splits `values` into `blocks` contiguous blocks (sizes differ by at most one),
/// averages each and returns the lower median of the block means.
///
/// `blocks = 1` is the plain mean; `blocks = values.len()` is the plain median.
pub fn median_of_means(values: &[f64], blocks: usize) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let blocks = blocks.clamp(1, values.len());
    let base = values.len() / blocks;
    let extra = values.len() % blocks;
    let mut means = Vec::with_capacity(blocks);
    let mut start = 0;
    for b in 0..blocks {
        let len = base + usize::from(b < extra);
        means.push(neumaier_sum(&values[start..start + len]) / len as f64);
        start += len;
    }
    lower_median(&means)
}

/// Neumaier-compensated sum in the given order.
pub fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Compensated sum that does not depend on the order of `values`.
pub fn order_free_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    neumaier_sum(values)
}
