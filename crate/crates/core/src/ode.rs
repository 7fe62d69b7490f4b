//! Dormand–Prince 5(4) integrator with dense output.
//!
//! The right-hand side is fallible so that node encounters abort the
//! integration with their position and time attached. A step size that
//! collapses below the representable floor is reported as an error, never
//! clamped.

use crate::error::{invalid, Error, Result};

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

// continuous extension (Hairer, Nørsett & Wanner)
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; estimated from the derivative when `None`.
    pub initial_step: Option<f64>,
    /// Largest allowed step; unbounded when `None`.
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-8,
            initial_step: None,
            max_step: None,
            max_steps: 1_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol.is_finite()) {
            return Err(invalid("rtol", "must be positive and finite"));
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return Err(invalid("atol", "must be positive and finite"));
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(invalid("initial_step", "must be positive and finite"));
            }
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(invalid("max_step", "must be positive"));
            }
        }
        if self.max_steps == 0 {
            return Err(invalid("max_steps", "must be at least 1"));
        }
        Ok(())
    }
}

/// Where the solution is recorded.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    /// The initial point and every accepted step.
    Steps,
    /// The given times, interpolated with the dense output. Must be
    /// nondecreasing and inside `[t0, t_end]`.
    Times(Vec<f64>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub stats: OdeStats,
}

/// Interpolant over one accepted step.
struct Dense {
    t_old: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

impl Dense {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t_old) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.r;
        for i in 0..out.len() {
            out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
        }
    }
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], opts: &OdeOptions) -> f64 {
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(&e, (&a, &b))| {
            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / err.len() as f64).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end > t0`.
pub fn integrate<F>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
    output: &Output,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    opts.validate()?;
    if !(t0.is_finite() && t_end.is_finite()) || t_end <= t0 {
        return Err(invalid("t_end", "must be finite and greater than t0"));
    }
    if y0.is_empty() || y0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("y0", "must be nonempty and finite"));
    }
    if let Output::Times(times) = output {
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("output", "times must be nondecreasing"));
        }
        if times.iter().any(|&t| !(t0..=t_end).contains(&t)) {
            return Err(invalid("output", "times must lie within [t0, t_end]"));
        }
    }

    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut eval = |t: f64, y: &[f64], out: &mut [f64], stats: &mut OdeStats| -> Result<()> {
        stats.evaluations += 1;
        rhs(t, y, out)?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { x: y[0], t });
        }
        Ok(())
    };

    let mut solution = OdeSolution {
        t: Vec::new(),
        y: Vec::new(),
        stats,
    };
    let mut next_output = 0usize;
    match output {
        Output::Steps => {
            solution.t.push(t0);
            solution.y.push(y0.to_vec());
        }
        Output::Times(times) => {
            while next_output < times.len() && times[next_output] == t0 {
                solution.t.push(t0);
                solution.y.push(y0.to_vec());
                next_output += 1;
            }
        }
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    eval(t, &y, &mut k1, &mut stats)?;
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];

    let span = t_end - t0;
    let max_step = opts.max_step.unwrap_or(span).min(span);
    let mut h = match opts.initial_step {
        Some(h) => h,
        None => {
            let scale = |v: &[f64]| {
                let sum: f64 = v
                    .iter()
                    .zip(&y)
                    .map(|(&d, &yi)| (d / (opts.atol + opts.rtol * yi.abs())).powi(2))
                    .sum();
                (sum / n as f64).sqrt()
            };
            let d0 = scale(&y);
            let d1 = scale(&k1);
            if d0 < 1e-5 || d1 < 1e-5 {
                1e-6 * span
            } else {
                0.01 * d0 / d1
            }
        }
    }
    .min(max_step);

    let mut reject_streak = false;
    loop {
        if t >= t_end {
            break;
        }
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::TooManySteps {
                max_steps: opts.max_steps,
                t_end,
            });
        }
        let h_floor = 16.0 * f64::EPSILON * t.abs().max(span);
        if h < h_floor {
            return Err(Error::StepUnderflow { t, h });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        let combine = |out: &mut [f64], terms: &[(&[f64], f64)]| {
            for i in 0..n {
                out[i] = y[i] + h * terms.iter().map(|(k, a)| a * k[i]).sum::<f64>();
            }
        };
        combine(&mut stage, &[(&k1, A21)]);
        eval(t + C2 * h, &stage, &mut k2, &mut stats)?;
        combine(&mut stage, &[(&k1, A31), (&k2, A32)]);
        eval(t + C3 * h, &stage, &mut k3, &mut stats)?;
        combine(&mut stage, &[(&k1, A41), (&k2, A42), (&k3, A43)]);
        eval(t + C4 * h, &stage, &mut k4, &mut stats)?;
        combine(&mut stage, &[(&k1, A51), (&k2, A52), (&k3, A53), (&k4, A54)]);
        eval(t + C5 * h, &stage, &mut k5, &mut stats)?;
        combine(
            &mut stage,
            &[(&k1, A61), (&k2, A62), (&k3, A63), (&k4, A64), (&k5, A65)],
        );
        let t_new = if last { t_end } else { t + h };
        eval(t_new, &stage, &mut k6, &mut stats)?;
        combine(
            &mut y_new,
            &[(&k1, A71), (&k3, A73), (&k4, A74), (&k5, A75), (&k6, A76)],
        );
        eval(t_new, &y_new, &mut k7, &mut stats)?;
        for i in 0..n {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = error_norm(&err, &y, &y_new, opts);

        if e <= 1.0 {
            stats.accepted += 1;
            let needs_dense = matches!(output, Output::Times(times)
                if next_output < times.len() && times[next_output] <= t_new);
            if needs_dense {
                let mut r: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
                for i in 0..n {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    r[0][i] = y[i];
                    r[1][i] = ydiff;
                    r[2][i] = bspl;
                    r[3][i] = ydiff - h * k7[i] - bspl;
                    r[4][i] = h
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                            + D7 * k7[i]);
                }
                let dense = Dense { t_old: t, h, r };
                if let Output::Times(times) = output {
                    while next_output < times.len() && times[next_output] <= t_new {
                        let tk = times[next_output];
                        let mut yk = vec![0.0; n];
                        if tk == t_new {
                            yk.copy_from_slice(&y_new);
                        } else {
                            dense.eval(tk, &mut yk);
                        }
                        solution.t.push(tk);
                        solution.y.push(yk);
                        next_output += 1;
                    }
                }
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            if matches!(output, Output::Steps) {
                solution.t.push(t);
                solution.y.push(y.clone());
            }
            let mut factor = if e == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * e.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if reject_streak {
                factor = factor.min(1.0);
            }
            reject_streak = false;
            h = (h * factor).min(max_step);
        } else {
            stats.rejected += 1;
            reject_streak = true;
            h *= (SAFETY * e.powf(-0.2)).max(MIN_FACTOR);
        }
    }
    solution.stats = stats;
    Ok(solution)
}
