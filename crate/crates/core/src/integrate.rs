//! Explicit Runge–Kutta integration of the nonholonomic vector field on a
//! uniform output grid. The adaptive scheme steps onto every output time;
//! the fixed-step scheme fills the grid by cubic Hermite interpolation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

// Unused when std is linked into the build graph.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geom::Vector;
use crate::mechanics::{MPoint, MechanicalSystem, Observable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classical fourth-order scheme with a fixed step.
    Rk4 { dt: f64 },
    /// Dormand–Prince 5(4) with absolute + relative local error control.
    Rk45 { tol: f64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Rk4 { .. } => "rk4",
            Method::Rk45 { .. } => "rk45",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorOptions {
    pub method: Method,
    /// Number of uniformly spaced output times, endpoints included.
    pub samples: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    /// Integrate the negated field (the backward flow).
    pub reverse: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            method: Method::Rk45 { tol: 1e-10 },
            samples: 201,
            initial_step: 1e-3,
            min_step: 1e-12,
            max_steps: 5_000_000,
            reverse: false,
        }
    }
}

impl IntegratorOptions {
    pub fn rk4(dt: f64) -> Self {
        IntegratorOptions {
            method: Method::Rk4 { dt },
            ..Default::default()
        }
    }

    pub fn rk45(tol: f64) -> Self {
        IntegratorOptions {
            method: Method::Rk45 { tol },
            ..Default::default()
        }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn reversed(mut self) -> Self {
        self.reverse = !self.reverse;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationStats {
    pub method: &'static str,
    pub tol: Option<f64>,
    pub dt: Option<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
}

/// Output of a generic ODE integration.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub stats: IntegrationStats,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MPoint>,
    pub stats: IntegrationStats,
}

impl Trajectory {
    pub fn last(&self) -> &MPoint {
        self.states.last().expect("trajectories are never empty")
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights (equal to the last row of A) minus fourth-order weights.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

struct Rhs<F> {
    f: F,
    sign: f64,
    evals: usize,
}

impl<F> Rhs<F>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    fn eval(&mut self, t: f64, y: &Vector) -> Result<Vector> {
        self.evals += 1;
        let mut d = (self.f)(t, y).map_err(|e| step_failure(t, e))?;
        if self.sign < 0.0 {
            d.neg_mut();
        }
        if !d.iter().all(|x| x.is_finite()) {
            return Err(Error::StepFailure {
                t,
                reason: "non-finite derivative".into(),
            });
        }
        Ok(d)
    }
}

fn step_failure(t: f64, e: Error) -> Error {
    match e {
        Error::StepFailure { .. } => e,
        other => Error::StepFailure {
            t,
            reason: other.to_string(),
        },
    }
}

/// Uniform output grid on `[0, t_final]`.
fn sample_times(t_final: f64, samples: usize) -> Vec<f64> {
    let last = samples - 1;
    (0..samples)
        .map(|i| {
            if i == last {
                t_final
            } else {
                t_final * (i as f64) / (last as f64)
            }
        })
        .collect()
}

fn hermite(y0: &Vector, f0: &Vector, y1: &Vector, f1: &Vector, h: f64, theta: f64) -> Vector {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    y0 * h00 + f0 * (h10 * h) + y1 * h01 + f1 * (h11 * h)
}

/// Collects dense output while steps are accepted.
struct Sampler {
    times: Vec<f64>,
    states: Vec<Vector>,
    next: usize,
}

impl Sampler {
    fn new(times: Vec<f64>, y0: &Vector) -> Self {
        let mut states = Vec::with_capacity(times.len());
        states.push(y0.clone());
        Sampler {
            times,
            states,
            next: 1,
        }
    }

    fn next_time(&self) -> Option<f64> {
        self.times.get(self.next).copied()
    }

    fn step(&mut self, t0: f64, y0: &Vector, f0: &Vector, t1: f64, y1: &Vector, f1: &Vector, last: bool) {
        let h = t1 - t0;
        while self.next < self.times.len() {
            let ts = self.times[self.next];
            if self.next == self.times.len() - 1 {
                if !last {
                    break;
                }
                self.states.push(y1.clone());
            } else if ts == t1 {
                self.states.push(y1.clone());
            } else if ts < t1 {
                self.states.push(hermite(y0, f0, y1, f1, h, (ts - t0) / h));
            } else {
                break;
            }
            self.next += 1;
        }
    }
}

fn validate(t_final: f64, y0: &Vector, opts: &IntegratorOptions) -> Result<()> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidInput("t_final must be positive and finite".into()));
    }
    if opts.samples < 2 {
        return Err(Error::InvalidInput("at least two output samples are required".into()));
    }
    if !y0.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("initial state".into()));
    }
    match opts.method {
        Method::Rk4 { dt } if !(dt > 0.0 && dt.is_finite()) => {
            Err(Error::InvalidInput("dt must be positive".into()))
        }
        Method::Rk45 { tol } if !(tol > 0.0 && tol.is_finite()) => {
            Err(Error::InvalidInput("tol must be positive".into()))
        }
        _ => Ok(()),
    }
}

/// Integrate `y' = f(t, y)` over `[0, t_final]`.
pub fn integrate_ode<F>(f: F, y0: &Vector, t_final: f64, opts: &IntegratorOptions) -> Result<OdeSolution>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    validate(t_final, y0, opts)?;
    let mut rhs = Rhs {
        f,
        sign: if opts.reverse { -1.0 } else { 1.0 },
        evals: 0,
    };
    let times = sample_times(t_final, opts.samples);
    let mut sampler = Sampler::new(times, y0);
    let (accepted, rejected, tol, dt) = match opts.method {
        Method::Rk4 { dt } => (rk4(&mut rhs, y0, t_final, dt, opts, &mut sampler)?, 0, None, Some(dt)),
        Method::Rk45 { tol } => {
            let (a, r) = rk45(&mut rhs, y0, t_final, tol, opts, &mut sampler)?;
            (a, r, Some(tol), None)
        }
    };
    Ok(OdeSolution {
        times: sampler.times,
        states: sampler.states,
        stats: IntegrationStats {
            method: opts.method.name(),
            tol,
            dt,
            accepted_steps: accepted,
            rejected_steps: rejected,
            rhs_evaluations: rhs.evals,
        },
    })
}

fn rk4<F>(
    rhs: &mut Rhs<F>,
    y0: &Vector,
    t_final: f64,
    dt: f64,
    opts: &IntegratorOptions,
    sampler: &mut Sampler,
) -> Result<usize>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    let mut t = 0.0;
    let mut y = y0.clone();
    let mut f0 = rhs.eval(t, &y)?;
    let mut steps = 0;
    loop {
        let remaining = t_final - t;
        // Absorb a final sliver into the last step instead of taking a tiny one.
        let last = remaining <= dt * (1.0 + 1e-9);
        let h = if last { remaining } else { dt };
        let k1 = &f0;
        let k2 = rhs.eval(t + 0.5 * h, &(&y + k1 * (0.5 * h)))?;
        let k3 = rhs.eval(t + 0.5 * h, &(&y + &k2 * (0.5 * h)))?;
        let k4 = rhs.eval(t + h, &(&y + &k3 * h))?;
        let y1 = &y + (k1 + &k2 * 2.0 + &k3 * 2.0 + &k4) * (h / 6.0);
        let t1 = if last { t_final } else { t + h };
        if !y1.iter().all(|x| x.is_finite()) {
            return Err(Error::StepFailure {
                t: t1,
                reason: "non-finite state".into(),
            });
        }
        let f1 = rhs.eval(t1, &y1)?;
        sampler.step(t, &y, &f0, t1, &y1, &f1, last);
        steps += 1;
        t = t1;
        y = y1;
        f0 = f1;
        if last {
            return Ok(steps);
        }
        if steps >= opts.max_steps {
            return Err(Error::StepFailure {
                t,
                reason: "maximum number of steps exceeded".into(),
            });
        }
    }
}

fn rk45<F>(
    rhs: &mut Rhs<F>,
    y0: &Vector,
    t_final: f64,
    tol: f64,
    opts: &IntegratorOptions,
    sampler: &mut Sampler,
) -> Result<(usize, usize)>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    let mut t = 0.0;
    let mut y = y0.clone();
    let mut f0 = rhs.eval(t, &y)?;
    let mut h = opts.initial_step.min(t_final);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut k: Vec<Vector> = Vec::with_capacity(7);
    loop {
        // Land exactly on the next output time so samples need no
        // interpolation; the unclipped proposal is kept for the next step.
        let stop = sampler.next_time().unwrap_or(t_final);
        let remaining = stop - t;
        let proposed = h;
        let clipped = h >= remaining * (1.0 - 1e-12);
        if clipped {
            h = remaining;
        }
        let last = clipped && stop == t_final;
        k.clear();
        k.push(f0.clone());
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[s][j] != 0.0 {
                    ys.axpy(h * A[s][j], kj, 1.0);
                }
            }
            if s == 6 {
                // FSAL: the seventh stage sits at the new solution.
                if !ys.iter().all(|x| x.is_finite()) {
                    k.push(Vector::from_element(y.len(), f64::NAN));
                    break;
                }
            }
            let ks = rhs.eval(t + C[s] * h, &ys)?;
            k.push(ks);
        }
        let mut y1 = y.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            if A[6][j] != 0.0 {
                y1.axpy(h * A[6][j], kj, 1.0);
            }
        }
        let mut err = 0.0;
        for i in 0..y.len() {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let sc = tol + tol * y[i].abs().max(y1[i].abs());
            let ratio = h * e / sc;
            err += ratio * ratio;
        }
        let err = (err / y.len().max(1) as f64).sqrt();
        if err.is_finite() && err <= 1.0 {
            let t1 = if clipped { stop } else { t + h };
            let f1 = k[6].clone();
            sampler.step(t, &y, &f0, t1, &y1, &f1, last);
            accepted += 1;
            t = t1;
            y = y1;
            f0 = f1;
            if last {
                return Ok((accepted, rejected));
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
            if clipped {
                h = h.max(proposed);
            }
        } else {
            rejected += 1;
            let factor = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.2, 1.0)
            } else {
                0.2
            };
            h *= factor;
        }
        if h < opts.min_step {
            return Err(Error::StepFailure {
                t,
                reason: alloc::format!("step size {h:e} below minimum {:e}", opts.min_step),
            });
        }
        if accepted + rejected >= opts.max_steps {
            return Err(Error::StepFailure {
                t,
                reason: "maximum number of steps exceeded".into(),
            });
        }
    }
}

fn pack(m: &MPoint) -> Vector {
    let n = m.q.len();
    let mut y = Vector::zeros(n + m.v.len());
    y.rows_mut(0, n).copy_from(&m.q);
    y.rows_mut(n, m.v.len()).copy_from(&m.v);
    y
}

fn unpack(y: &Vector, n: usize) -> MPoint {
    MPoint {
        q: y.rows(0, n).into_owned(),
        v: y.rows(n, y.len() - n).into_owned(),
    }
}

/// Integrate the nonholonomic dynamics from `m0`.
pub fn integrate(
    sys: &MechanicalSystem,
    m0: &MPoint,
    t_final: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let n = sys.dim();
    if m0.q.len() != n || m0.v.len() != sys.rank() {
        return Err(Error::InvalidInput(alloc::format!(
            "initial state needs {n} coordinates and {} velocities",
            sys.rank()
        )));
    }
    let rhs = |_t: f64, y: &Vector| -> Result<Vector> {
        let x = sys.nonholonomic_vector_field(&unpack(y, n))?;
        let mut d = Vector::zeros(y.len());
        d.rows_mut(0, n).copy_from(&x.qdot);
        d.rows_mut(n, x.vdot.len()).copy_from(&x.vdot);
        Ok(d)
    };
    let sol = integrate_ode(rhs, &pack(m0), t_final, opts)?;
    Ok(Trajectory {
        times: sol.times,
        states: sol.states.iter().map(|y| unpack(y, n)).collect(),
        stats: sol.stats,
    })
}

/// `max_t |f(t) − f(0)| / max(1, |f(0)|)`.
pub fn drift(values: &[f64]) -> f64 {
    let Some(&f0) = values.first() else {
        return 0.0;
    };
    let scale = f0.abs().max(1.0);
    values.iter().map(|f| (f - f0).abs() / scale).fold(0.0, f64::max)
}

/// Drift of each named observable along a trajectory.
pub fn conservation_report(
    sys: &MechanicalSystem,
    traj: &Trajectory,
    observables: &[(&str, &dyn Observable)],
) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (name, f) in observables {
        let values = traj
            .states
            .iter()
            .map(|m| f.value(sys, m))
            .collect::<Result<Vec<_>>>()?;
        out.insert(String::from(*name), drift(&values));
    }
    Ok(out)
}
