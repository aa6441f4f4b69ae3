/// Binary 8-bit PGM (P5) of a row-major field; row 0 is written first.
///
/// Finite values map affinely so the minimum becomes 0 and the maximum 255
/// (a constant field is all 0); infinite values become 255.
pub fn field_to_pgm(width: usize, height: usize, values: &[f64]) -> Vec<u8> {
    assert_eq!(values.len(), width * height, "field size does not match dimensions");
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    let span = hi - lo;
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values.iter().map(|&v| {
        if !v.is_finite() {
            255
        } else if span > 0.0 {
            ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    out
}
