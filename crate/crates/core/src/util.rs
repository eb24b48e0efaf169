//! Small numeric helpers shared across modules.

/// Compensated (Neumaier) summation.
///
/// Carries a running error term so that the result is accurate to O(eps)
/// relative error independent of the number of terms, instead of the O(n*eps)
/// drift of naive accumulation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            compensation += (sum - t) + x;
        } else {
            compensation += (x - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}
