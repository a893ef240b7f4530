//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use hawkes_risk::simulate::StepPath;
use rand::Rng;

/// Random step path with `segments` pieces and values in `[-2, 2]`.
pub fn random_path<R: Rng>(rng: &mut R, segments: usize, horizon: f64) -> StepPath {
    let mut breaks: Vec<f64> = (1..segments)
        .map(|_| rng.random_range(0.0..horizon))
        .collect();
    breaks.push(0.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let values = breaks.iter().map(|_| rng.random_range(-2.0..2.0)).collect();
    StepPath::new(breaks, values, horizon).unwrap()
}

/// `int_0^{T-r} |u(s + r) - u(s)| ds`, exact for step paths.
fn lag_variation(u: &StepPath, r: f64) -> f64 {
    let t = u.horizon();
    let mut knots: Vec<f64> = u
        .breaks()
        .iter()
        .flat_map(|&b| [b, b - r])
        .filter(|&x| x > 0.0 && x < t - r)
        .collect();
    knots.push(0.0);
    knots.push(t - r);
    knots.sort_by(f64::total_cmp);
    knots
        .windows(2)
        .map(|w| {
            let m = 0.5 * (w[0] + w[1]);
            (u.value_at(m + r) - u.value_at(m)).abs() * (w[1] - w[0])
        })
        .sum()
}

/// `W^{eta,1}` norm by quadrature of the lag form
/// `int |u| + 2 int_0^T r^{-1-eta} phi(r) dr`, using the substitution
/// `w = r^{1-eta}` and an `n`-point midpoint rule.
pub fn sobolev_oracle(u: &StepPath, eta: f64, n: usize) -> f64 {
    let t = u.horizon();
    let l1: f64 = u
        .values()
        .iter()
        .zip(u.lengths())
        .map(|(v, l)| v.abs() * l)
        .sum();
    let p = 1.0 - eta;
    let top = t.powf(p);
    let dw = top / n as f64;
    let mut seminorm = 0.0;
    for k in 0..n {
        let w = (k as f64 + 0.5) * dw;
        let r = w.powf(1.0 / p);
        seminorm += lag_variation(u, r) / r / p * dw;
    }
    l1 + 2.0 * seminorm
}

/// Skorokhod distance over time changes discretized on the grid
/// `k * T / n`: a monotone coupling of the sampled graphs minimizing the
/// largest `max(|s - t|, |f(s) - g(t)|)` along the coupling.
pub fn skorokhod_oracle(f: &StepPath, g: &StepPath, n: usize) -> f64 {
    let t = f.horizon();
    let grid: Vec<f64> = (0..=n)
        .map(|k| if k == n { t } else { k as f64 * t / n as f64 })
        .collect();
    let fv: Vec<f64> = grid.iter().map(|&s| f.value_at(s)).collect();
    let gv: Vec<f64> = grid.iter().map(|&s| g.value_at(s)).collect();
    let cost = |i: usize, j: usize| (grid[i] - grid[j]).abs().max((fv[i] - gv[j]).abs());
    let mut prev = vec![f64::INFINITY; n + 1];
    let mut cur = vec![f64::INFINITY; n + 1];
    for i in 0..=n {
        for j in 0..=n {
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let mut b = f64::INFINITY;
                if i > 0 {
                    b = b.min(prev[j]);
                    if j > 0 {
                        b = b.min(prev[j - 1]);
                    }
                }
                if j > 0 {
                    b = b.min(cur[j - 1]);
                }
                b
            };
            let at_end = (i == n) != (j == n);
            cur[j] = if at_end {
                f64::INFINITY
            } else {
                best.max(cost(i, j))
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[n]
}

/// Path with value `values[k]` from `times[k]` on (first time is 0).
pub fn steps(times: &[f64], values: &[f64], horizon: f64) -> StepPath {
    StepPath::new(times.to_vec(), values.to_vec(), horizon).unwrap()
}
