use std::io::Write;

use crate::error::{Error, Result};

/// Càdlàg piecewise-constant function on `[0, T]` in canonical form:
/// strictly increasing breakpoints starting at `0`, consecutive values
/// distinct. `values[j]` holds on `[breaks[j], breaks[j + 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPath {
    breaks: Vec<f64>,
    values: Vec<f64>,
    horizon: f64,
}

impl StepPath {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::param(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if breaks.len() != values.len() || breaks.is_empty() {
            return Err(Error::param(
                "need one value per breakpoint and at least one segment",
            ));
        }
        if breaks[0] != 0.0 {
            return Err(Error::param("first breakpoint must be 0"));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) || *breaks.last().unwrap() > horizon {
            return Err(Error::param(
                "breakpoints must be strictly increasing within [0, T]",
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("step values must be finite"));
        }
        Ok(Self::canonical(breaks, values, horizon))
    }

    fn canonical(breaks: Vec<f64>, values: Vec<f64>, horizon: f64) -> Self {
        let mut b = Vec::with_capacity(breaks.len());
        let mut v: Vec<f64> = Vec::with_capacity(values.len());
        for (t, x) in breaks.into_iter().zip(values) {
            if v.last() != Some(&x) {
                b.push(t);
                v.push(x);
            }
        }
        StepPath {
            breaks: b,
            values: v,
            horizon,
        }
    }

    pub fn constant(value: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![value], horizon)
    }

    /// `initial + sum of increments[i] for times[i] <= t`. Times must be
    /// nondecreasing and lie in `[0, T]`.
    pub fn from_jumps(
        initial: f64,
        times: &[f64],
        increments: &[f64],
        horizon: f64,
    ) -> Result<Self> {
        if times.len() != increments.len() {
            return Err(Error::param("times and increments differ in length"));
        }
        let mut breaks = vec![0.0];
        let mut values = vec![initial];
        let mut acc = initial;
        for (&t, &dx) in times.iter().zip(increments) {
            if !(0.0..=horizon).contains(&t) || t < *breaks.last().unwrap() {
                return Err(Error::param(format!(
                    "jump time {t} out of order or outside [0, T]"
                )));
            }
            acc += dx;
            if t == *breaks.last().unwrap() {
                *values.last_mut().unwrap() = acc;
            } else {
                breaks.push(t);
                values.push(acc);
            }
        }
        Self::new(breaks, values, horizon)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of jumps (breakpoints after `0`).
    pub fn jump_count(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Segment index containing `t` under the right-continuous convention.
    pub fn segment_at(&self, t: f64) -> usize {
        self.breaks.partition_point(|&b| b <= t).saturating_sub(1)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.values[self.segment_at(t)]
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Segment lengths; the last segment runs to `T`.
    pub fn lengths(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.breaks.windows(2).map(|w| w[1] - w[0]).collect();
        out.push(self.horizon - self.breaks.last().unwrap());
        out
    }

    /// Values at `k * step` for `k = 1..=count`.
    pub fn sample_grid(&self, step: f64, count: usize) -> Vec<f64> {
        (1..=count)
            .map(|k| self.value_at(k as f64 * step))
            .collect()
    }

    /// Pointwise `op(f, g)` on the union of breakpoints.
    pub fn combine(&self, other: &StepPath, op: impl Fn(f64, f64) -> f64) -> Result<StepPath> {
        check_horizons(self, other)?;
        let mut breaks = Vec::with_capacity(self.breaks.len() + other.breaks.len());
        let mut values = Vec::with_capacity(breaks.capacity());
        let (mut i, mut j) = (0, 0);
        loop {
            breaks.push(self.breaks[i].max(other.breaks[j]));
            values.push(op(self.values[i], other.values[j]));
            let ni = self.breaks.get(i + 1).copied().unwrap_or(f64::INFINITY);
            let nj = other.breaks.get(j + 1).copied().unwrap_or(f64::INFINITY);
            let next = ni.min(nj);
            if next.is_infinite() {
                break;
            }
            if ni == next {
                i += 1;
            }
            if nj == next {
                j += 1;
            }
        }
        Ok(Self::canonical(breaks, values, self.horizon))
    }

    pub fn sub(&self, other: &StepPath) -> Result<StepPath> {
        self.combine(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> StepPath {
        Self::canonical(
            self.breaks.clone(),
            self.values.iter().map(|v| c * v).collect(),
            self.horizon,
        )
    }
}

pub(crate) fn check_horizons(f: &StepPath, g: &StepPath) -> Result<()> {
    let (a, b) = (f.horizon, g.horizon);
    if (a - b).abs() > 1e-12 * a.max(b) {
        return Err(Error::param(format!("horizons differ: {a} vs {b}")));
    }
    Ok(())
}

/// Trajectory dump with header `path,t,value`, one row per segment start
/// plus a closing row at `T`.
pub fn write_trajectories<W: Write>(paths: &[(&str, &StepPath)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path", "t", "value"])?;
    for (name, p) in paths {
        for (t, v) in p.breaks().iter().zip(p.values()) {
            w.write_record([name.to_string(), t.to_string(), v.to_string()])?;
        }
        w.write_record([
            name.to_string(),
            p.horizon().to_string(),
            p.terminal().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_merges_equal_values() {
        let p = StepPath::new(vec![0.0, 0.2, 0.5], vec![1.0, 1.0, 2.0], 1.0).unwrap();
        assert_eq!(p.breaks(), &[0.0, 0.5]);
        assert_eq!(p.values(), &[1.0, 2.0]);
        assert_eq!(p.value_at(0.5), 2.0);
        assert_eq!(p.value_at(0.4999), 1.0);
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(StepPath::new(vec![0.0, 0.5, 0.5], vec![0.0, 1.0, 2.0], 1.0).is_err());
        assert!(StepPath::new(vec![0.1], vec![0.0], 1.0).is_err());
        assert!(StepPath::new(vec![0.0, 2.0], vec![0.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn from_jumps_accumulates() {
        let p = StepPath::from_jumps(0.0, &[0.3, 0.7], &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(p.breaks(), &[0.0, 0.3, 0.7]);
        assert_eq!(p.values(), &[0.0, 1.0, 2.0]);
        let q = StepPath::from_jumps(0.0, &[0.3, 0.3], &[1.0, 2.0], 1.0).unwrap();
        assert_eq!(q.values(), &[0.0, 3.0]);
    }

    #[test]
    fn difference_on_union() {
        let f = StepPath::from_jumps(0.0, &[0.5], &[1.0], 1.0).unwrap();
        let g = StepPath::from_jumps(0.0, &[0.6], &[1.0], 1.0).unwrap();
        let d = f.sub(&g).unwrap();
        assert_eq!(d.breaks(), &[0.0, 0.5, 0.6]);
        assert_eq!(d.values(), &[0.0, 1.0, 0.0]);
        assert_eq!(f.sub(&f).unwrap(), StepPath::constant(0.0, 1.0).unwrap());
    }

    #[test]
    fn trajectories_csv() {
        let f = StepPath::from_jumps(0.0, &[0.5], &[1.0], 1.0).unwrap();
        let mut buf = Vec::new();
        write_trajectories(&[("N", &f)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "path,t,value\nN,0,0\nN,0.5,1\nN,1,1\n"
        );
    }
}
