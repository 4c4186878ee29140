use super::{GradientBundle, ParamSet};
use crate::error::{argument, Result};

/// Central-difference gradient `(L(θ+h) − L(θ−h)) / 2h` for every parameter.
pub fn finite_difference_gradient<P, F>(loss: F, params: &P, step: f64) -> Result<GradientBundle>
where
    P: ParamSet + Clone,
    F: Fn(&P) -> f64,
{
    if !(step > 0.0) {
        return Err(argument(format!("finite-difference step must be > 0, got {step}")));
    }
    let base = params.flatten();
    let mut probe = params.clone();
    let mut flat = base.clone();
    let mut out = Vec::with_capacity(base.len());
    for k in 0..base.len() {
        flat[k] = base[k] + step;
        probe.assign_flat(&flat)?;
        let plus = loss(&probe);
        flat[k] = base[k] - step;
        probe.assign_flat(&flat)?;
        let minus = loss(&probe);
        flat[k] = base[k];
        out.push((plus - minus) / (2.0 * step));
    }
    Ok(GradientBundle::from_flat_like(params, out))
}

/// `|a − b| / max(|a|, |b|, floor)`; the floor keeps near-zero entries from
/// turning rounding noise into huge ratios.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
