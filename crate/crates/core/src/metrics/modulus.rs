use crate::error::{Error, Result};
use crate::simulate::StepPath;

/// Where a partition point sits relative to the jumps `a_1 < ... < a_J`
/// of the path (with `a_0 = 0`).
#[derive(Debug, Clone, Copy)]
enum Slot {
    /// Exactly at `a_k`.
    At(usize),
    /// Strictly inside `(a_k, a_{k+1})`, with `a_{J+1} = T`.
    Inside(usize),
    End,
}

impl Slot {
    /// Segment holding the start of a cell opened here.
    fn first_segment(self) -> usize {
        match self {
            Slot::At(k) | Slot::Inside(k) => k,
            Slot::End => unreachable!(),
        }
    }

    /// Last segment touched by a cell closed here.
    fn last_segment(self, jumps: usize) -> usize {
        match self {
            Slot::At(k) => k - 1,
            Slot::Inside(k) => k,
            Slot::End => jumps,
        }
    }
}

/// Delta-sparse modulus `w'(Delta)`: the infimum over partitions with all
/// gaps `> Delta` of the largest oscillation over a cell `[t_{i-1}, t_i)`.
///
/// The infimum is exact. Partition points are classified by their position
/// among the jumps; within a class only the earliest reachable position
/// matters, which gives a dynamic program over `2J + 3` slots per
/// threshold and a search over the finitely many oscillation values.
pub fn modulus_sparse(path: &StepPath, delta: f64) -> Result<f64> {
    let horizon = path.horizon();
    if !(delta > 0.0) || delta >= horizon {
        return Err(Error::param(format!(
            "modulus needs 0 < delta < T, got delta = {delta}, T = {horizon}"
        )));
    }
    let breaks = path.breaks();
    let mut values = path.values();
    // A jump at T sits outside every half-open cell.
    let mut times: Vec<f64> = breaks[1..].to_vec();
    if times.last().is_some_and(|&t| t >= horizon) {
        times.pop();
        values = &values[..values.len() - 1];
    }
    let jumps = times.len();
    if jumps == 0 {
        return Ok(0.0);
    }
    let jump_at = |k: usize| if k == 0 { 0.0 } else { times[k - 1] };
    let edge = |k: usize| if k > jumps { horizon } else { jump_at(k) };

    let mut slots = Vec::with_capacity(2 * jumps + 3);
    for k in 0..=jumps {
        slots.push(Slot::At(k));
        slots.push(Slot::Inside(k));
    }
    slots.push(Slot::End);

    let spread = values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
        - values.iter().fold(f64::INFINITY, |m, &v| m.min(v));

    let feasible = |theta: f64| -> bool {
        // `earliest[s]`: infimum of positions of a partition point in slot s
        // reachable with every closed cell oscillating at most `theta`.
        let mut earliest = vec![f64::INFINITY; slots.len()];
        earliest[0] = 0.0;
        for p in 0..slots.len() - 1 {
            let e = earliest[p];
            if !e.is_finite() {
                continue;
            }
            let first = slots[p].first_segment();
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut reached = first;
            for (q, &slot) in slots.iter().enumerate().skip(p + 1) {
                let last = slot.last_segment(jumps);
                while reached <= last {
                    lo = lo.min(values[reached]);
                    hi = hi.max(values[reached]);
                    reached += 1;
                }
                if hi - lo > theta {
                    break;
                }
                let next = match slot {
                    Slot::At(k) => (jump_at(k) > e + delta).then(|| jump_at(k)),
                    Slot::Inside(k) => (edge(k + 1) > e + delta).then(|| jump_at(k).max(e + delta)),
                    Slot::End => (horizon > e + delta).then_some(horizon),
                };
                if let Some(t) = next {
                    earliest[q] = earliest[q].min(t);
                }
            }
        }
        earliest[slots.len() - 1].is_finite()
    };

    let mut cands = vec![0.0, spread];
    for i in 0..values.len() {
        let (mut lo, mut hi) = (values[i], values[i]);
        for &v in &values[i + 1..] {
            lo = lo.min(v);
            hi = hi.max(v);
            cands.push(hi - lo);
        }
    }
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let (mut lo, mut hi) = (0, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(cands[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(cands[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn jumps(times: &[f64], incr: &[f64]) -> StepPath {
        StepPath::from_jumps(0.0, times, incr, 1.0).unwrap()
    }

    #[test]
    fn constant_path() {
        let p = StepPath::constant(3.0, 1.0).unwrap();
        assert_eq!(modulus_sparse(&p, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn separable_jump() {
        assert_eq!(modulus_sparse(&jumps(&[0.5], &[1.0]), 0.2).unwrap(), 0.0);
    }

    #[test]
    fn close_jumps() {
        let p = jumps(&[0.5, 0.55], &[1.0, 1.0]);
        assert_eq!(modulus_sparse(&p, 0.2).unwrap(), 1.0);
        assert_eq!(modulus_sparse(&p, 0.04).unwrap(), 0.0);
    }

    #[test]
    fn wide_delta_forces_one_cell() {
        let p = jumps(&[0.3, 0.5], &[1.0, 1.0]);
        assert_eq!(modulus_sparse(&p, 0.5).unwrap(), 2.0);
        assert_eq!(modulus_sparse(&p, 0.25).unwrap(), 1.0);
        assert_eq!(modulus_sparse(&p, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn jump_near_the_ends() {
        // A jump within delta of 0 or T cannot be isolated.
        assert_eq!(modulus_sparse(&jumps(&[0.05], &[1.0]), 0.1).unwrap(), 1.0);
        assert_eq!(modulus_sparse(&jumps(&[0.95], &[1.0]), 0.1).unwrap(), 1.0);
        assert_eq!(modulus_sparse(&jumps(&[1.0], &[1.0]), 0.1).unwrap(), 0.0);
    }

    #[test]
    fn rejects_wide_delta() {
        assert!(modulus_sparse(&jumps(&[0.5], &[1.0]), 1.0).is_err());
        assert!(modulus_sparse(&jumps(&[0.5], &[1.0]), 0.0).is_err());
    }

    /// Partitions restricted to multiples of `1 / res`.
    fn grid_oracle(p: &StepPath, delta: f64, res: usize) -> f64 {
        let pos = |i: usize| i as f64 / res as f64;
        let first: Vec<usize> = (0..=res).map(|i| p.segment_at(pos(i))).collect();
        let last: Vec<usize> = (0..=res).map(|j| p.segment_at(pos(j) - 1e-9)).collect();
        let v = p.values();
        let mut best = vec![f64::INFINITY; res + 1];
        best[0] = 0.0;
        for i in 0..res {
            if !best[i].is_finite() {
                continue;
            }
            let (mut lo, mut hi, mut seg) = (f64::INFINITY, f64::NEG_INFINITY, first[i]);
            for j in i + 1..=res {
                while seg <= last[j] {
                    lo = lo.min(v[seg]);
                    hi = hi.max(v[seg]);
                    seg += 1;
                }
                if pos(j) - pos(i) > delta + 1e-12 {
                    best[j] = best[j].min(best[i].max(hi - lo));
                }
            }
        }
        best[res]
    }

    fn arb_path(signed: bool) -> impl Strategy<Value = StepPath> {
        let lo = if signed { -2i32 } else { 0 };
        proptest::collection::vec((1u32..10, lo..3i32), 0..6).prop_map(|raw| {
            let mut raw = raw;
            raw.sort();
            raw.dedup_by_key(|r| r.0);
            let times: Vec<f64> = raw.iter().map(|r| r.0 as f64 / 10.0).collect();
            let incr: Vec<f64> = raw.iter().map(|r| r.1 as f64).collect();
            StepPath::from_jumps(0.0, &times, &incr, 1.0).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Offsets of 0.035 keep every exact constraint at least 0.005 away
        // from a tie, more than the grid can lose over at most 7 cells.
        #[test]
        fn matches_grid_oracle(p in arb_path(true), k in 1u32..9) {
            let delta = k as f64 / 10.0 + 0.035;
            let exact = modulus_sparse(&p, delta).unwrap();
            prop_assert_eq!(exact, grid_oracle(&p, delta, 2000));
        }

        #[test]
        fn monotone(p in arb_path(false), k1 in 0u32..9, k2 in 0u32..9, drop in 0usize..6) {
            let (d1, d2) = (k1.min(k2) as f64 / 10.0 + 0.03, k1.max(k2) as f64 / 10.0 + 0.03);
            prop_assert!(modulus_sparse(&p, d1).unwrap() <= modulus_sparse(&p, d2).unwrap());
            let times = &p.breaks()[1..];
            if drop < times.len() {
                let incr: Vec<f64> = p.values().windows(2).map(|w| w[1] - w[0]).collect();
                let (mut t2, mut i2) = (times.to_vec(), incr);
                t2.remove(drop);
                i2.remove(drop);
                let q = StepPath::from_jumps(0.0, &t2, &i2, 1.0).unwrap();
                prop_assert!(modulus_sparse(&q, d1).unwrap() <= modulus_sparse(&p, d1).unwrap());
            }
        }
    }
}
