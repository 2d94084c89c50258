//! Small dense-vector helpers shared by the operators and solvers.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

/// ‖a − b‖₂
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Relative ℓ2 change ‖new − old‖ / ‖old‖, falling back to the absolute
/// change when `old` is zero.
pub fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let d = dist2(new, old);
    let n = norm2(old);
    if n > 0.0 {
        d / n
    } else {
        d
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| x * c).collect()
}

pub fn is_zero(a: &[f64]) -> bool {
    a.iter().all(|&v| v == 0.0)
}
