use crate::error::Result;
use crate::simulate::{check_horizons, StepPath};

use super::uniform_distance;

/// Largest jump count per path for which the exact distance is computed.
pub const EXACT_JUMP_CAP: usize = 500;

struct Jumps<'a> {
    /// Jump times in `(0, T]`.
    times: &'a [f64],
    /// `values[k]` holds after the `k`-th jump.
    values: &'a [f64],
}

impl<'a> Jumps<'a> {
    fn of(p: &'a StepPath) -> Self {
        Jumps {
            times: &p.breaks()[1..],
            values: p.values(),
        }
    }
}

/// Whether a time change `mu` exists with `sup |t - mu(t)| <= eps` and
/// `sup |f - g o mu| <= eps`.
///
/// Dynamic programming over `(i, j)` = jumps of `f` and `g` already passed,
/// storing the earliest time at which the state can be entered. `f` jumps
/// stay put; each jump of `g` is moved to a time within `eps` of its own.
pub fn feasible_eps(f: &StepPath, g: &StepPath, eps: f64) -> Result<bool> {
    check_horizons(f, g)?;
    Ok(feasible(
        &Jumps::of(f),
        &Jumps::of(g),
        f.horizon(),
        eps,
        0.0,
    ))
}

fn feasible(f: &Jumps<'_>, g: &Jumps<'_>, horizon: f64, eps: f64, slack: f64) -> bool {
    let (m, n) = (f.times.len(), g.times.len());
    let close = |x: f64, y: f64| (x - y).abs() <= eps + slack;
    if eps < 0.0 || !close(f.values[0], g.values[0]) {
        return false;
    }
    let width = n + 1;
    let mut entry = vec![f64::INFINITY; (m + 1) * width];
    entry[0] = 0.0;
    for i in 0..=m {
        for j in 0..=n {
            let e = entry[i * width + j];
            if !e.is_finite() {
                continue;
            }
            let next_f = if i < m { f.times[i] } else { horizon };
            // Move the (j+1)-th jump of g as early as allowed.
            if j < n {
                let c = g.times[j];
                let s = if c >= horizon {
                    horizon
                } else {
                    e.max(c - eps)
                };
                // Only a jump of g at T may land on T.
                if s <= c + eps + slack
                    && (s < horizon || c >= horizon)
                    && s <= next_f + slack
                    && s >= e
                    && close(f.values[i], g.values[j + 1])
                {
                    let slot = &mut entry[i * width + j + 1];
                    *slot = slot.min(s);
                }
            }
            if i < m {
                let a = f.times[i];
                if e <= a + slack {
                    if close(f.values[i + 1], g.values[j]) {
                        let slot = &mut entry[(i + 1) * width + j];
                        *slot = slot.min(a);
                    }
                    if j < n
                        && close(a, g.times[j])
                        && ((g.times[j] < horizon) == (a < horizon))
                        && close(f.values[i + 1], g.values[j + 1])
                    {
                        let slot = &mut entry[(i + 1) * width + j + 1];
                        *slot = slot.min(a);
                    }
                }
            }
        }
    }
    entry[m * width + n] <= horizon + slack
}

/// Skorokhod J1 distance between two step paths on `[0, T]`.
///
/// The feasibility predicate only changes at the finitely many values
/// `|u_i - w_j|` and `|a_i - c_j|`, so a binary search over that sorted
/// set returns the exact infimum.
pub fn skorokhod_distance(f: &StepPath, g: &StepPath) -> Result<f64> {
    check_horizons(f, g)?;
    let (jf, jg) = (Jumps::of(f), Jumps::of(g));
    let upper = uniform_distance(f, g)?;
    let mut cands: Vec<f64> =
        Vec::with_capacity(jf.values.len() * jg.values.len() + jf.times.len() * jg.times.len() + 2);
    cands.push(0.0);
    cands.push(upper);
    for &u in jf.values {
        for &w in jg.values {
            cands.push((u - w).abs());
        }
    }
    for &a in jf.times {
        for &c in jg.times {
            cands.push((a - c).abs());
        }
    }
    cands.retain(|&c| c <= upper);
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    // Rounding in c - eps can push a placement a hair past its target.
    let slack = 4.0 * f64::EPSILON * f.horizon().max(1.0);
    let (mut lo, mut hi) = (0usize, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(&jf, &jg, f.horizon(), cands[mid], slack) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(cands[lo])
}

/// Exact distance when both paths have at most [`EXACT_JUMP_CAP`] jumps.
pub fn skorokhod_if_small(f: &StepPath, g: &StepPath) -> Result<Option<f64>> {
    if f.jump_count() > EXACT_JUMP_CAP || g.jump_count() > EXACT_JUMP_CAP {
        return Ok(None);
    }
    skorokhod_distance(f, g).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_jump(at: f64, height: f64) -> StepPath {
        StepPath::from_jumps(0.0, &[at], &[height], 1.0).unwrap()
    }

    #[test]
    fn identical_paths() {
        let f = StepPath::from_jumps(0.0, &[0.2, 0.5], &[1.0, -2.0], 1.0).unwrap();
        assert_eq!(skorokhod_distance(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn shifted_jump() {
        let f = unit_jump(0.5, 1.0);
        let g = unit_jump(0.6, 1.0);
        assert!((skorokhod_distance(&f, &g).unwrap() - 0.1).abs() < 1e-12);
        assert!(!feasible_eps(&f, &g, 0.05).unwrap());
        assert!(feasible_eps(&f, &g, 0.1 + 1e-12).unwrap());
        assert!(feasible_eps(&f, &g, 1.0).unwrap());
    }

    #[test]
    fn mismatched_height() {
        let f = unit_jump(0.5, 1.0);
        let g = unit_jump(0.5, 2.0);
        assert!((skorokhod_distance(&f, &g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jump_at_the_horizon_cannot_move() {
        let f = StepPath::from_jumps(0.0, &[0.95], &[1.0], 1.0).unwrap();
        let g = StepPath::from_jumps(0.0, &[1.0], &[1.0], 1.0).unwrap();
        // Matching would need mu(1) != 1, so the values must absorb it.
        assert!((skorokhod_distance(&f, &g).unwrap() - 1.0).abs() < 1e-12);
        assert!((skorokhod_distance(&g, &f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn merged_jumps_cost_the_smaller_step() {
        // Two unit jumps against one double jump: the intermediate value 1
        // is within 1 of both neighbours.
        let f = StepPath::from_jumps(0.0, &[0.3, 0.35], &[1.0, 1.0], 1.0).unwrap();
        let g = StepPath::from_jumps(0.0, &[0.4], &[2.0], 1.0).unwrap();
        let d = skorokhod_distance(&f, &g).unwrap();
        assert!((d - 1.0).abs() < 1e-12, "{d}");
    }

    fn arb_path() -> impl Strategy<Value = StepPath> {
        proptest::collection::vec((0.0..1.0f64, 0.0..2.0f64), 0..6).prop_map(|mut jumps| {
            for j in &mut jumps {
                j.0 = (j.0 * 20.0).ceil() / 20.0;
            }
            jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
            jumps.retain(|j| j.0 > 0.0);
            let times: Vec<f64> = jumps.iter().map(|j| j.0).collect();
            let incr: Vec<f64> = jumps.iter().map(|j| (j.1 * 4.0).round() / 4.0).collect();
            StepPath::from_jumps(0.0, &times, &incr, 1.0).unwrap()
        })
    }

    proptest! {
        #[test]
        fn metric_properties(f in arb_path(), g in arb_path(), e1 in 0.0..1.0f64, e2 in 0.0..1.0f64) {
            let d = skorokhod_distance(&f, &g).unwrap();
            let r = skorokhod_distance(&g, &f).unwrap();
            prop_assert!((d - r).abs() < 1e-12);
            prop_assert!(d <= uniform_distance(&f, &g).unwrap());
            prop_assert_eq!(d == 0.0, f == g);
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            if feasible_eps(&f, &g, lo).unwrap() {
                prop_assert!(feasible_eps(&f, &g, hi).unwrap());
            }
        }
    }
}
