//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Nodes are interior to each subinterval, so integrable endpoint
//! singularities never get evaluated directly. A non-integrable singularity
//! shows up as an error estimate that refuses to shrink, which we report as
//! non-convergence once the subinterval budget is spent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Default absolute tolerance used across the crate.
pub const ABS_TOL: f64 = 1e-9;

const MAX_SUBINTERVALS: usize = 20_000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut finite = fc.is_finite();
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        finite &= pair.is_finite();
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    if !finite {
        return Err(Error::DivergingKernel(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    Ok(Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    })
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_with_breaks(f, a, b, &[], tol)
}

/// Like [`integrate`], but `breaks` inside `(a, b)` are forced subdivision
/// points (kinks, jumps of the integrand).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::param(format!("integration bounds [{a}, {b}]")));
    }
    if b == a {
        return Ok(0.0);
    }
    if b < a {
        return integrate_with_breaks(f, b, a, breaks, tol).map(|v| -v);
    }
    let mut points: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut heap = BinaryHeap::new();
    let mut err = 0.0;
    let mut lo = a;
    for &p in points.iter().chain(std::iter::once(&b)) {
        let seg = gk15(&f, lo, p)?;
        err += seg.error;
        heap.push(seg);
        lo = p;
    }

    loop {
        if err <= tol {
            // Summing in a fixed (sorted) order keeps results reproducible.
            let mut segs = heap.into_vec();
            segs.sort_by(|x, y| x.a.total_cmp(&y.a));
            return Ok(segs.iter().map(|s| s.value).sum());
        }
        if heap.len() >= MAX_SUBINTERVALS {
            return Err(Error::DivergingKernel(format!(
                "no convergence on [{a}, {b}] after {MAX_SUBINTERVALS} subintervals (error {err:e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::DivergingKernel(format!(
                "subinterval collapsed near {mid} (error {err:e})"
            )));
        }
        let left = gk15(&f, worst.a, mid)?;
        let right = gk15(&f, mid, worst.b)?;
        err += left.error + right.error - worst.error;
        if err < 0.0 {
            err = heap.iter().map(|s| s.error).sum::<f64>() + left.error + right.error;
        }
        heap.push(left);
        heap.push(right);
    }
}
