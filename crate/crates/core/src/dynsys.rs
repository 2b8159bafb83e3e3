//! Autonomous ODE systems, fixed-step integration and level-crossing detection.
//!
//! Integration is fixed-step (explicit Euler or classical RK4). Every recorded
//! sample also stores the vector field evaluated at that sample, which lets the
//! crossing and interpolation helpers use cubic Hermite reconstruction instead
//! of chords when they need sub-step accuracy.

use crate::error::{Error, Result};

/// A finite-dimensional vector field `dx/dt = f(t, x)`.
///
/// The oscillator models are autonomous and ignore `t`; the time argument
/// exists so that forced wrappers (co-simulation with injected currents) can
/// reuse the same integrators.
pub trait OdeSystem: Send + Sync {
    fn dim(&self) -> usize;

    fn state_names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("x{i}")).collect()
    }

    /// Named real parameters, used for run manifests.
    fn params(&self) -> Vec<(String, f64)> {
        Vec::new()
    }

    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]);

    /// Closed-form Jacobian, row-major `dim x dim` (`jac[i * dim + j] = d f_i / d x_j`).
    /// Returns `false` when the model has none; callers then fall back to
    /// [`fd_jacobian`].
    fn jacobian(&self, _t: f64, _x: &[f64], _jac: &mut [f64]) -> bool {
        false
    }
}

impl<S: OdeSystem + ?Sized> OdeSystem for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn state_names(&self) -> Vec<String> {
        (**self).state_names()
    }
    fn params(&self) -> Vec<(String, f64)> {
        (**self).params()
    }
    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        (**self).rhs(t, x, dx)
    }
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut [f64]) -> bool {
        (**self).jacobian(t, x, jac)
    }
}

impl<S: OdeSystem + ?Sized> OdeSystem for Box<S> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn state_names(&self) -> Vec<String> {
        (**self).state_names()
    }
    fn params(&self) -> Vec<(String, f64)> {
        (**self).params()
    }
    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        (**self).rhs(t, x, dx)
    }
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut [f64]) -> bool {
        (**self).jacobian(t, x, jac)
    }
}

impl<S: OdeSystem + ?Sized> OdeSystem for std::sync::Arc<S> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn state_names(&self) -> Vec<String> {
        (**self).state_names()
    }
    fn params(&self) -> Vec<(String, f64)> {
        (**self).params()
    }
    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        (**self).rhs(t, x, dx)
    }
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut [f64]) -> bool {
        (**self).jacobian(t, x, jac)
    }
}

/// Central finite-difference Jacobian with per-component step `1e-6 * max(|x_j|, 1)`.
pub fn fd_jacobian<S: OdeSystem + ?Sized>(sys: &S, t: f64, x: &[f64], jac: &mut [f64]) {
    let n = sys.dim();
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let h = 1e-6 * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        sys.rhs(t, &xp, &mut fp);
        xp[j] = x[j] - h;
        sys.rhs(t, &xp, &mut fm);
        xp[j] = x[j];
        for i in 0..n {
            jac[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
}

/// Jacobian from the model when it has a closed form, finite differences otherwise.
pub fn jacobian<S: OdeSystem + ?Sized>(sys: &S, t: f64, x: &[f64], jac: &mut [f64]) {
    if !sys.jacobian(t, x, jac) {
        fd_jacobian(sys, t, x, jac);
    }
}

/// `factor * f(x)`: the same orbit traversed `factor` times faster.
#[derive(Debug, Clone)]
pub struct TimeScaled<S> {
    pub inner: S,
    pub factor: f64,
}

impl<S: OdeSystem> OdeSystem for TimeScaled<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn state_names(&self) -> Vec<String> {
        self.inner.state_names()
    }
    fn params(&self) -> Vec<(String, f64)> {
        let mut p = self.inner.params();
        p.push(("time_scale".into(), self.factor));
        p
    }
    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        self.inner.rhs(t, x, dx);
        dx.iter_mut().for_each(|v| *v *= self.factor);
    }
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut [f64]) -> bool {
        if !self.inner.jacobian(t, x, jac) {
            return false;
        }
        jac.iter_mut().for_each(|v| *v *= self.factor);
        true
    }
}

/// Adds `gain * current(t)` to one state derivative: a current source driving a node.
pub struct Forced<S, W> {
    pub inner: S,
    pub state_index: usize,
    pub gain: f64,
    pub current: W,
}

impl<S: OdeSystem, W: Fn(f64) -> f64 + Send + Sync> OdeSystem for Forced<S, W> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn state_names(&self) -> Vec<String> {
        self.inner.state_names()
    }
    fn params(&self) -> Vec<(String, f64)> {
        self.inner.params()
    }
    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        self.inner.rhs(t, x, dx);
        dx[self.state_index] += self.gain * (self.current)(t);
    }
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut [f64]) -> bool {
        self.inner.jacobian(t, x, jac)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    #[default]
    Rk4,
}

/// Instantaneous state jump `x -> x + delta` at time `at`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseEvent {
    pub at: f64,
    pub delta: Vec<f64>,
}

/// Fixed-step single-trajectory stepper that keeps `f(t, x)` of the current
/// sample cached, so consecutive samples always carry their derivative.
pub struct Stepper<'a, S: ?Sized> {
    sys: &'a S,
    method: Method,
    t: f64,
    x: Vec<f64>,
    dx: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl<'a, S: OdeSystem + ?Sized> Stepper<'a, S> {
    pub fn new(sys: &'a S, t0: f64, x0: &[f64], method: Method) -> Self {
        let n = sys.dim();
        assert_eq!(x0.len(), n, "initial state has wrong dimension");
        let mut dx = vec![0.0; n];
        sys.rhs(t0, x0, &mut dx);
        Self {
            sys,
            method,
            t: t0,
            x: x0.to_vec(),
            dx,
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    /// Field at the current sample.
    pub fn deriv(&self) -> &[f64] {
        &self.dx
    }

    /// Advance to `t_next` in one step of the configured method.
    pub fn advance_to(&mut self, t_next: f64) -> Result<()> {
        let h = t_next - self.t;
        let n = self.x.len();
        match self.method {
            Method::Euler => {
                for i in 0..n {
                    self.x[i] += h * self.dx[i];
                }
            }
            Method::Rk4 => {
                let half = 0.5 * h;
                for i in 0..n {
                    self.tmp[i] = self.x[i] + half * self.dx[i];
                }
                self.sys.rhs(self.t + half, &self.tmp, &mut self.k2);
                for i in 0..n {
                    self.tmp[i] = self.x[i] + half * self.k2[i];
                }
                self.sys.rhs(self.t + half, &self.tmp, &mut self.k3);
                for i in 0..n {
                    self.tmp[i] = self.x[i] + h * self.k3[i];
                }
                self.sys.rhs(t_next, &self.tmp, &mut self.k4);
                for i in 0..n {
                    self.x[i] +=
                        h / 6.0 * (self.dx[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
                }
            }
        }
        self.t = t_next;
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time: t_next });
        }
        self.sys.rhs(self.t, &self.x, &mut self.dx);
        Ok(())
    }

    /// Apply a state jump at the current time.
    pub fn jump(&mut self, delta: &[f64]) {
        for (x, d) in self.x.iter_mut().zip(delta) {
            *x += d;
        }
        self.sys.rhs(self.t, &self.x, &mut self.dx);
    }
}

/// Recorded solution on a (normally uniform) time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Row-major `times.len() x dim`.
    pub states: Vec<f64>,
    /// Field at each sample, same layout as `states`; absent for imported data.
    pub derivs: Option<Vec<f64>>,
    pub dim: usize,
    pub step: f64,
}

impl Trajectory {
    /// Wrap externally produced samples (no derivative information).
    pub fn from_samples(times: Vec<f64>, states: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || states.len() != times.len() * dim {
            return Err(Error::arg("states", "row count must equal times length"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::arg("times", "must be strictly increasing"));
        }
        let step = if times.len() > 1 {
            (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64
        } else {
            0.0
        };
        Ok(Self {
            times,
            states,
            derivs: None,
            dim,
            step,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn component(&self, k: usize, j: usize) -> f64 {
        self.states[k * self.dim + j]
    }

    fn deriv_component(&self, k: usize, j: usize) -> Option<f64> {
        self.derivs.as_ref().map(|d| d[k * self.dim + j])
    }

    /// Same samples with every time shifted by `dt`.
    pub fn shifted(&self, dt: f64) -> Self {
        let mut out = self.clone();
        out.times.iter_mut().for_each(|t| *t += dt);
        out
    }

    /// Cubic Hermite interpolation of the whole state at fraction `s` of
    /// interval `[k, k+1]`; linear when derivatives are unavailable.
    pub fn interpolate(&self, k: usize, s: f64) -> Vec<f64> {
        let h = self.times[k + 1] - self.times[k];
        (0..self.dim)
            .map(|j| {
                let p0 = self.component(k, j);
                let p1 = self.component(k + 1, j);
                match (self.deriv_component(k, j), self.deriv_component(k + 1, j)) {
                    (Some(m0), Some(m1)) => hermite(p0, p1, h * m0, h * m1, s),
                    _ => p0 + s * (p1 - p0),
                }
            })
            .collect()
    }
}

/// Cubic Hermite basis on `s in [0, 1]`; `m0`, `m1` are slopes already scaled by the interval.
pub fn hermite(p0: f64, p1: f64, m0: f64, m1: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * p0
        + (s3 - 2.0 * s2 + s) * m0
        + (-2.0 * s3 + 3.0 * s2) * p1
        + (s3 - s2) * m1
}

fn hermite_ds(p0: f64, p1: f64, m0: f64, m1: f64, s: f64) -> f64 {
    let s2 = s * s;
    (6.0 * s2 - 6.0 * s) * p0
        + (3.0 * s2 - 4.0 * s + 1.0) * m0
        + (-6.0 * s2 + 6.0 * s) * p1
        + (3.0 * s2 - 2.0 * s) * m1
}

/// Root of `hermite(..) = level` on `[0, 1]`, given a sign change between the
/// ends. Safeguarded Newton starting from the chord root.
pub fn hermite_root(p0: f64, p1: f64, m0: f64, m1: f64, level: f64) -> f64 {
    let g = |s: f64| hermite(p0, p1, m0, m1, s) - level;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let g_lo = p0 - level;
    let mut s = if p1 != p0 {
        (level - p0) / (p1 - p0)
    } else {
        0.5
    };
    s = s.clamp(0.0, 1.0);
    for _ in 0..60 {
        let v = g(s);
        if v == 0.0 {
            return s;
        }
        if (v < 0.0) == (g_lo < 0.0) {
            lo = s;
        } else {
            hi = s;
        }
        let d = hermite_ds(p0, p1, m0, m1, s);
        let mut next = if d != 0.0 { s - v / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 1e-16 {
            return next;
        }
        s = next;
    }
    s
}

/// Integrate `sys` from `x0` over `[t0, t1]` with fixed `step`.
///
/// Sample `k` is at `t0 + k * step`; the grid is extended to the first point
/// at or past `t1`. Event times are snapped to the nearest grid point and the
/// jump is applied there before the next step (the stored sample is the
/// post-jump state).
pub fn integrate<S: OdeSystem + ?Sized>(
    sys: &S,
    x0: &[f64],
    t0: f64,
    t1: f64,
    step: f64,
    method: Method,
    events: &[ImpulseEvent],
) -> Result<Trajectory> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::arg("step", format!("must be positive, got {step}")));
    }
    if !(t1 > t0) {
        return Err(Error::arg("t1", "must exceed t0"));
    }
    let dim = sys.dim();
    if x0.len() != dim {
        return Err(Error::arg(
            "x0",
            format!("expected {dim} components, got {}", x0.len()),
        ));
    }
    let n_steps = ((t1 - t0) / step - 1e-9).ceil().max(1.0) as usize;

    let mut jumps: Vec<(usize, &[f64])> = Vec::with_capacity(events.len());
    for ev in events {
        if ev.at < t0 || ev.at > t1 {
            return Err(Error::arg(
                "events",
                format!("event at {} outside [{t0}, {t1}]", ev.at),
            ));
        }
        if ev.delta.len() != dim {
            return Err(Error::arg("events", "delta has wrong dimension"));
        }
        let k = (((ev.at - t0) / step).round() as usize).min(n_steps);
        jumps.push((k, &ev.delta));
    }
    jumps.sort_by_key(|(k, _)| *k);

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity((n_steps + 1) * dim);
    let mut derivs = Vec::with_capacity((n_steps + 1) * dim);
    let mut stepper = Stepper::new(sys, t0, x0, method);
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { time: t0 });
    }
    let mut next_jump = 0;
    for k in 0..=n_steps {
        if k > 0 {
            stepper.advance_to(t0 + k as f64 * step)?;
        }
        while next_jump < jumps.len() && jumps[next_jump].0 == k {
            stepper.jump(jumps[next_jump].1);
            next_jump += 1;
        }
        times.push(stepper.t());
        states.extend_from_slice(stepper.state());
        derivs.extend_from_slice(stepper.deriv());
    }
    Ok(Trajectory {
        times,
        states,
        derivs: Some(derivs),
        dim,
        step,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
}

impl Direction {
    fn brackets(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Rising => a < 0.0 && b >= 0.0,
            Direction::Falling => a > 0.0 && b <= 0.0,
        }
    }
}

/// Level crossings of one state component, located by linear interpolation
/// between adjacent samples.
pub fn crossing_times(
    traj: &Trajectory,
    state_index: usize,
    level: f64,
    direction: Direction,
) -> Vec<f64> {
    assert!(state_index < traj.dim, "state index out of range");
    let mut out = Vec::new();
    for k in 0..traj.len().saturating_sub(1) {
        let a = traj.component(k, state_index) - level;
        let b = traj.component(k + 1, state_index) - level;
        if direction.brackets(a, b) {
            let (ta, tb) = (traj.times[k], traj.times[k + 1]);
            out.push(ta + (tb - ta) * (a / (a - b)));
        }
    }
    out
}

/// A crossing located inside interval `[index, index + 1]` at fraction `frac`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub time: f64,
    pub index: usize,
    pub frac: f64,
}

/// Level crossings refined with the cubic Hermite interpolant built from the
/// stored derivatives (linear when the trajectory has none).
pub fn refined_crossings(
    traj: &Trajectory,
    state_index: usize,
    level: f64,
    direction: Direction,
) -> Vec<Crossing> {
    assert!(state_index < traj.dim, "state index out of range");
    let mut out = Vec::new();
    for k in 0..traj.len().saturating_sub(1) {
        let p0 = traj.component(k, state_index);
        let p1 = traj.component(k + 1, state_index);
        if !direction.brackets(p0 - level, p1 - level) {
            continue;
        }
        let (ta, tb) = (traj.times[k], traj.times[k + 1]);
        let h = tb - ta;
        let frac = match (
            traj.deriv_component(k, state_index),
            traj.deriv_component(k + 1, state_index),
        ) {
            (Some(m0), Some(m1)) => hermite_root(p0, p1, h * m0, h * m1, level),
            _ => (level - p0) / (p1 - p0),
        };
        out.push(Crossing {
            time: ta + h * frac,
            index: k,
            frac,
        });
    }
    out
}
