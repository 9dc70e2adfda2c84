//! Image comparison measures.

/// Normalized cross-correlation of two equally sized signals. Two constant
/// signals correlate perfectly when equal and not at all otherwise.
pub fn ncc(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "signal lengths differ");
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    sab / (saa * sbb).sqrt()
}

pub fn rms(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "signal lengths differ");
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum / a.len() as f64).sqrt()
}

/// RMS difference divided by the dynamic range of the reference `b`.
pub fn rms_relative(a: &[f64], reference: &[f64]) -> f64 {
    let (lo, hi) = reference
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    let range = hi - lo;
    if range == 0.0 {
        return rms(a, reference);
    }
    rms(a, reference) / range
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Scales a signal so its maximum is 1; all-zero signals are returned as is.
pub fn normalize_max(a: &[f64]) -> Vec<f64> {
    let m = a.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if m == 0.0 {
        a.to_vec()
    } else {
        a.iter().map(|v| v / m).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ncc_of_affine_copy_is_one() {
        let a = [1.0, 2.0, 5.0, 3.0];
        let b: Vec<f64> = a.iter().map(|v| 3.0 * v + 1.0).collect();
        assert!((ncc(&a, &b) - 1.0).abs() < 1e-12);
        let c: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((ncc(&a, &c) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rms_basics() {
        assert_eq!(rms(&[0.0, 0.0], &[3.0, 4.0]), (12.5f64).sqrt());
        assert_eq!(
            rms_relative(&[0.0, 2.0], &[0.0, 4.0]),
            (2.0f64).sqrt() / 4.0
        );
    }
}
