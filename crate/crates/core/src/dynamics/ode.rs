//! Dormand–Prince 5(4) with step-size control and the standard 4th-order
//! continuous extension.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

/// Counters reported with every solution.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// One accepted step with its interpolation coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    /// End of the valid range; shorter than `t0 + h` for a step cut by the
    /// zero-crossing guard.
    pub t_end: f64,
    coeffs: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t_end
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        std::array::from_fn(|i| {
            r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])))
        })
    }
}

/// Result of [`integrate`].
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub steps: Vec<DenseStep<N>>,
    pub stats: SolverStats,
    /// Set when a component crossed zero: the time and index of the
    /// component. The final state is the clamped state at that time.
    pub terminated: Option<(f64, usize)>,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn error_norm<const N: usize>(
    err: &[f64; N],
    y0: &[f64; N],
    y1: &[f64; N],
    tol: Tolerances,
) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let scale = tol.abs + tol.rel * y0[i].abs().max(y1[i].abs());
            (err[i] / scale).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: &[f64; N],
    k1: &[f64; N],
    tol: Tolerances,
    span: f64,
) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let scale: [f64; N] = std::array::from_fn(|i| tol.abs + tol.rel * y0[i].abs());
    let norm =
        |v: &[f64; N]| ((0..N).map(|i| (v[i] / scale[i]).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = norm(y0);
    let d1 = norm(k1);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let y1 = axpy(y0, h0, &[(1.0, k1)]);
    let k2 = f(t0 + h0, &y1);
    let diff: [f64; N] = std::array::from_fn(|i| k2[i] - k1[i]);
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`.
///
/// If `guard_non_negative` is set and a step would drive a component below
/// zero, the crossing is located on the dense output, that component is
/// clamped to zero and integration stops there.
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    tol: Tolerances,
    guard_non_negative: bool,
) -> Result<Solution<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let span = t1 - t0;
    if !(span.is_finite() && span > 0.0) {
        return Err(crate::error::invalid(
            "time span",
            format!("[{t0}, {t1}] is empty or not finite"),
        ));
    }
    let mut stats = SolverStats::default();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.evaluations += 1;
    let mut h = initial_step(&f, t, &y, &k1, tol, span);
    stats.evaluations += 1;

    let mut sol = Solution {
        times: vec![t0],
        states: vec![y0],
        steps: Vec::new(),
        stats,
        terminated: None,
    };
    let fail = |t: f64, y: &[f64; N], reason: String| {
        let mut state = [0.0; 2];
        for (s, v) in state.iter_mut().zip(y.iter()) {
            *s = *v;
        }
        Error::Integration {
            time: t,
            state,
            reason,
        }
    };

    let mut last_rejected = false;
    while t < t1 {
        if sol.stats.accepted + sol.stats.rejected >= MAX_STEPS {
            return Err(fail(t, &y, format!("exceeded {MAX_STEPS} steps")));
        }
        if h < 1e-14 * t.abs().max(span) {
            return Err(fail(t, &y, format!("step size underflow (h = {h:e})")));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(t + h, &y_new);
        sol.stats.evaluations += 6;

        let err: [f64; N] = std::array::from_fn(|i| {
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        });
        let norm = error_norm(&err, &y, &y_new, tol);
        if !norm.is_finite() {
            sol.stats.rejected += 1;
            h *= 0.1;
            last_rejected = true;
            continue;
        }

        if norm <= 1.0 {
            let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
            let coeffs = [
                y,
                ydiff,
                bspl,
                std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]),
                std::array::from_fn(|i| {
                    h * (D1 * k1[i]
                        + D3 * k3[i]
                        + D4 * k4[i]
                        + D5 * k5[i]
                        + D6 * k6[i]
                        + D7 * k7[i])
                }),
            ];
            let t_next = if last { t1 } else { t + h };
            let step = DenseStep {
                t0: t,
                h,
                t_end: t_next,
                coeffs,
            };
            sol.stats.accepted += 1;

            if guard_non_negative {
                if let Some(i) = (0..N).find(|&i| y_new[i] < 0.0) {
                    let (tc, yc) = locate_zero(&step, i);
                    let mut clamped = yc;
                    clamped[i] = 0.0;
                    for v in clamped.iter_mut() {
                        *v = v.max(0.0);
                    }
                    if tc > t {
                        sol.steps.push(DenseStep { t_end: tc, ..step });
                        sol.times.push(tc);
                        sol.states.push(clamped);
                    } else if let Some(s) = sol.states.last_mut() {
                        *s = clamped;
                    }
                    sol.terminated = Some((tc, i));
                    return Ok(sol);
                }
            }

            sol.steps.push(step);
            t = t_next;
            y = y_new;
            k1 = k7;
            sol.times.push(t);
            sol.states.push(y);

            let mut factor = (0.9 * norm.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
            if last_rejected {
                factor = factor.min(1.0);
            }
            h *= factor;
            last_rejected = false;
        } else {
            sol.stats.rejected += 1;
            h *= (0.9 * norm.powf(-0.2)).clamp(0.2, 1.0);
            last_rejected = true;
        }
    }
    Ok(sol)
}

/// Bisects the dense output of `step` for the zero of component `i`, which is
/// non-negative at the start and negative at the end.
fn locate_zero<const N: usize>(step: &DenseStep<N>, i: usize) -> (f64, [f64; N]) {
    let (mut lo, mut hi) = (step.t0, step.t0 + step.h);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if step.eval(mid)[i] >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, step.eval(lo))
}
