//! Adaptive Gauss-Kronrod quadrature and series acceleration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

// 15-point Kronrod nodes on [-1, 1] (non-negative half, descending) and weights;
// odd indices are the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// An integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Estimate { value, error }
    }

    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            self.error
        } else {
            self.error / self.value.abs()
        }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate::new(self.value + rhs.value, self.error + rhs.error)
    }
}

/// Stopping rule: `error <= max(absolute, relative * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub absolute: f64,
    pub relative: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { absolute: 1e-14, relative: 1e-11, max_intervals: 2000 }
    }
}

impl Tolerance {
    fn target(&self, value: f64) -> f64 {
        self.absolute.max(self.relative * value.abs())
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        k += WGK[j] * pair;
        if j % 2 == 1 {
            g += WG[j / 2] * pair;
        }
    }
    Estimate::new(k * half, ((k - g) * half).abs())
}

struct Piece {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Globally adaptive integral over `[points[0], points[last]]`, with the
/// interior points used as initial subdivision.
pub fn integrate_points<F: FnMut(f64) -> f64>(
    what: &str,
    mut f: F,
    points: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    let mut heap = BinaryHeap::new();
    let mut total = Estimate::new(0.0, 0.0);
    for w in points.windows(2) {
        if w[1] > w[0] {
            let est = kronrod(&mut f, w[0], w[1]);
            total = total + est;
            heap.push(Piece { a: w[0], b: w[1], est });
        }
    }
    while total.error > tol.target(total.value) {
        if heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                what: what.to_string(),
                estimate: total.value,
                error: total.error,
            });
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in floating point.
            heap.push(worst);
            return Err(Error::Quadrature {
                what: what.to_string(),
                estimate: total.value,
                error: total.error,
            });
        }
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        total.value += left.value + right.value - worst.est.value;
        total.error += left.error + right.error - worst.est.error;
        heap.push(Piece { a: worst.a, b: mid, est: left });
        heap.push(Piece { a: mid, b: worst.b, est: right });
    }
    // Re-sum to shed the drift of the running updates.
    let value: f64 = heap.iter().map(|p| p.est.value).sum();
    let error: f64 = heap.iter().map(|p| p.est.error).sum();
    Ok(Estimate::new(value, error))
}

/// Adaptive integral over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(what: &str, f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    integrate_points(what, f, &[a, b], tol)
}

/// `∫_a^∞ f` for `a > 0` through the map `x = a / t`, `t ∈ (0, 1]`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(what: &str, mut f: F, a: f64, tol: Tolerance) -> Result<Estimate> {
    assert!(a > 0.0, "tail start must be positive");
    integrate_points(what, |t: f64| a / (t * t) * f(a / t), &[0.0, 0.25, 1.0], tol)
}

/// Wynn's epsilon algorithm over a sequence of partial sums. Returns the
/// last diagonal estimate and the difference from the previous one.
pub fn wynn_epsilon(sums: &[f64]) -> Estimate {
    let n = sums.len();
    if n == 0 {
        return Estimate::new(0.0, f64::INFINITY);
    }
    if n < 3 {
        let last = sums[n - 1];
        let err = if n == 2 { (sums[1] - sums[0]).abs() } else { f64::INFINITY };
        return Estimate::new(last, err);
    }
    // Columns e_{-1} = 0, e_0 = S; keep even columns as estimates.
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = sums.to_vec();
    let mut estimates = vec![sums[n - 1]];
    let mut column = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        let mut broke = false;
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            if diff == 0.0 || !diff.is_finite() {
                broke = true;
                break;
            }
            next.push(prev[i + 1] + 1.0 / diff);
        }
        if broke {
            break;
        }
        column += 1;
        if column % 2 == 0 {
            estimates.push(*next.last().expect("non-empty"));
        }
        prev = cur;
        cur = next;
    }
    let best = *estimates.last().expect("non-empty");
    let err = if estimates.len() >= 2 {
        (best - estimates[estimates.len() - 2]).abs()
    } else {
        (sums[n - 1] - sums[n - 2]).abs()
    };
    Estimate::new(best, err)
}

/// Sum of `∫` over consecutive segments `[s_k, s_{k+1}]`, `s_k = start + k·step`,
/// accelerated with Wynn's epsilon until two successive extrapolations agree.
pub fn oscillatory_tail<F: FnMut(f64) -> f64>(
    what: &str,
    mut f: F,
    start: f64,
    step: f64,
    tol: Tolerance,
    max_segments: usize,
) -> Result<Estimate> {
    let mut sums = Vec::new();
    let mut running = 0.0;
    let mut segment_error = 0.0;
    let mut last: Option<Estimate> = None;
    for k in 0..max_segments {
        let a = start + k as f64 * step;
        let seg = integrate(what, &mut f, a, a + step, tol)?;
        running += seg.value;
        segment_error += seg.error;
        sums.push(running);
        if sums.len() >= 8 && sums.len() % 2 == 0 {
            let est = wynn_epsilon(&sums);
            if let Some(prev) = last {
                let change = (est.value - prev.value).abs();
                let err = change.max(est.error) + segment_error;
                if err <= tol.target(est.value) * 10.0 {
                    return Ok(Estimate::new(est.value, err));
                }
            }
            last = Some(est);
        }
    }
    let est = last.unwrap_or(Estimate::new(running, f64::INFINITY));
    Err(Error::Quadrature { what: what.to_string(), estimate: est.value, error: est.error })
}
