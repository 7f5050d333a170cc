//! Classical fixed-step fourth-order Runge-Kutta.

/// One RK4 step of size `h` for `y' = rhs(x, y)`. The right-hand side may
/// refuse a stage (for example when it leaves its domain); the error is
/// passed through unchanged.
pub fn rk4_step<const N: usize, E>(
    x: f64,
    y: &[f64; N],
    h: f64,
    mut rhs: impl FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
) -> Result<[f64; N], E> {
    let k1 = rhs(x, y)?;
    let y2 = std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]);
    let k2 = rhs(x + 0.5 * h, &y2)?;
    let y3 = std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]);
    let k3 = rhs(x + 0.5 * h, &y3)?;
    let y4 = std::array::from_fn(|i| y[i] + h * k3[i]);
    let k4 = rhs(x + h, &y4)?;
    Ok(std::array::from_fn(|i| {
        y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}
