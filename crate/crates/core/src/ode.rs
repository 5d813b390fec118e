//! Fixed-step classical Runge-Kutta.

use nalgebra::SVector;

use crate::error::{Error, Result};

/// One RK4 step of `ẏ = f(t, y)` from `t` to `t + h`.
///
/// Fails with [`Error::NumericalBlowup`] as soon as a stage evaluation is not finite.
pub fn rk4_step<const N: usize, F>(
    mut rhs: F,
    t: f64,
    y: &SVector<f64, N>,
    h: f64,
) -> Result<SVector<f64, N>>
where
    F: FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    let mut stage = |t: f64, y: &SVector<f64, N>| {
        let k = rhs(t, y);
        if k.iter().all(|v| v.is_finite()) {
            Ok(k)
        } else {
            Err(Error::NumericalBlowup {
                t,
                detail: format!("non-finite right-hand side at state {:?}", y.as_slice()),
            })
        }
    };
    let half = 0.5 * h;
    let k1 = stage(t, y)?;
    let k2 = stage(t + half, &(y + k1 * half))?;
    let k3 = stage(t + half, &(y + k2 * half))?;
    let k4 = stage(t + h, &(y + k3 * h))?;
    Ok(y + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0))
}
