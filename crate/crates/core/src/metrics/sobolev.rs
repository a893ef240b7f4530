use crate::error::{Error, Result};
use crate::simulate::{check_horizons, StepPath};

/// `W^{eta,1}` norm of a step path, in closed form:
/// `int |u| + int int |u(t) - u(s)| / |t - s|^{1 + eta} ds dt`.
pub fn sobolev_norm(path: &StepPath, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param(format!("eta must lie in (0, 1), got {eta}")));
    }
    let starts = path.breaks();
    let values = path.values();
    let lengths = path.lengths();
    let ends: Vec<f64> = starts.iter().zip(&lengths).map(|(s, l)| s + l).collect();

    let first: f64 = values.iter().zip(&lengths).map(|(v, l)| v.abs() * l).sum();

    let f = |x: f64| x.max(0.0).powf(1.0 - eta);
    let norm = 1.0 / (eta * (1.0 - eta));
    let mut second = 0.0;
    for i in 0..values.len() {
        let (s1, s2) = (starts[i], ends[i]);
        for j in i + 1..values.len() {
            let dv = (values[i] - values[j]).abs();
            if dv == 0.0 {
                continue;
            }
            let (t1, t2) = (starts[j], ends[j]);
            let g = (f(t1 - s1) - f(t1 - s2) - f(t2 - s1) + f(t2 - s2)) * norm;
            second += dv * g;
        }
    }
    Ok(first + 2.0 * second)
}

/// `sobolev_norm(f - g)`.
pub fn sobolev_distance(f: &StepPath, g: &StepPath, eta: f64) -> Result<f64> {
    check_horizons(f, g)?;
    sobolev_norm(&f.sub(g)?, eta)
}

/// Closed form for the indicator of `[a, b]` inside `[0, T]`.
pub fn indicator_norm(a: f64, b: f64, horizon: f64, eta: f64) -> f64 {
    let p = 1.0 - eta;
    (b - a)
        + 2.0 / (eta * p)
            * (2.0 * (b - a).powf(p) - b.powf(p) + a.powf(p) + (horizon - b).abs().powf(p)
                - (horizon - a).abs().powf(p))
}
