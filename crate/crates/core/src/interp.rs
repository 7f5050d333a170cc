//! Quintic Hermite interpolation on one cell, used to evaluate sampled
//! curves and profiles between grid nodes.

/// Value and first two derivatives at a node (derivatives with respect to
/// the physical parameter, not the cell coordinate).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet1 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Evaluate the quintic matching `left` at `s = 0` and `right` at `s = 1`,
/// where `s = (x - x_left) / width`. Returns `(p, p', p'')` in the physical
/// parameter.
pub fn quintic_hermite(s: f64, width: f64, left: Jet1, right: Jet1) -> (f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;

    let h00 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h10 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h20 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h21 = 0.5 * (s3 - 2.0 * s4 + s5);
    let h11 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h01 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;

    let d00 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let d10 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d20 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
    let d21 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);
    let d11 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d01 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;

    let dd00 = -60.0 * s + 180.0 * s2 - 120.0 * s3;
    let dd10 = -36.0 * s + 96.0 * s2 - 60.0 * s3;
    let dd20 = 0.5 * (2.0 - 18.0 * s + 36.0 * s2 - 20.0 * s3);
    let dd21 = 0.5 * (6.0 * s - 24.0 * s2 + 20.0 * s3);
    let dd11 = -24.0 * s + 84.0 * s2 - 60.0 * s3;
    let dd01 = 60.0 * s - 180.0 * s2 + 120.0 * s3;

    let w = width;
    let w2 = w * w;
    let combine = |a: f64, b: f64, c: f64, d: f64, e: f64, f: f64| {
        a * left.value
            + b * w * left.d1
            + c * w2 * left.d2
            + d * w2 * right.d2
            + e * w * right.d1
            + f * right.value
    };
    let p = combine(h00, h10, h20, h21, h11, h01);
    let dp = combine(d00, d10, d20, d21, d11, d01) / w;
    let ddp = combine(dd00, dd10, dd20, dd21, dd11, dd01) / w2;
    (p, dp, ddp)
}

/// Locate `x` on the uniform grid `start + k·step`, `k = 0..n_nodes`.
/// Returns the cell index and local coordinate in `[0, 1]`, or `None` when
/// `x` lies outside the grid.
pub fn locate(x: f64, start: f64, step: f64, n_nodes: usize) -> Option<(usize, f64)> {
    if n_nodes < 2 || !x.is_finite() {
        return None;
    }
    let end = start + step * (n_nodes - 1) as f64;
    let slack = 1e-12 * step;
    if x < start - slack || x > end + slack {
        return None;
    }
    let pos = ((x - start) / step).max(0.0);
    let cell = (pos.floor() as usize).min(n_nodes - 2);
    Some((cell, (pos - cell as f64).clamp(0.0, 1.0)))
}
