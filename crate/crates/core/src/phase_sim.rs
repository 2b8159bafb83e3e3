//! Phase-domain macromodel `d alpha/dt = gamma(omega0 (t + alpha)) b(t)`:
//! single-oscillator stepping, injection locking, coupled networks, and
//! co-simulation against the full ODE network.

use std::f64::consts::TAU;
use std::sync::Arc;
use std::time::Instant;

use crate::dynsys::{hermite_root, OdeSystem, Stepper};
use crate::error::{Error, Result};
use crate::limit_cycle::wrap_pi;
use crate::models::InjectionPort;
use crate::ppv::PpvCurve;

/// Injected current as a function of time, amperes.
#[derive(Clone)]
pub enum Waveform {
    Zero,
    Constant(f64),
    Cosine {
        amp: f64,
        omega: f64,
        phase: f64,
    },
    /// `amplitude` on `[start, start + width)`.
    RectPulse {
        start: f64,
        width: f64,
        amplitude: f64,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Waveform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Waveform::Zero => write!(f, "Zero"),
            Waveform::Constant(c) => write!(f, "Constant({c})"),
            Waveform::Cosine { amp, omega, phase } => write!(f, "Cosine({amp}, {omega}, {phase})"),
            Waveform::RectPulse {
                start,
                width,
                amplitude,
            } => {
                write!(f, "RectPulse({start}, {width}, {amplitude})")
            }
            Waveform::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Waveform {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Waveform::Zero => 0.0,
            Waveform::Constant(c) => *c,
            Waveform::Cosine { amp, omega, phase } => amp * (omega * t + phase).cos(),
            Waveform::RectPulse {
                start,
                width,
                amplitude,
            } => {
                if t >= *start && t < start + width {
                    *amplitude
                } else {
                    0.0
                }
            }
            Waveform::Custom(f) => f(t),
        }
    }

    /// The same waveform delayed by `dt`.
    pub fn delayed(&self, dt: f64) -> Self {
        match self {
            Waveform::Zero | Waveform::Constant(_) => self.clone(),
            Waveform::Cosine { amp, omega, phase } => Waveform::Cosine {
                amp: *amp,
                omega: *omega,
                phase: phase - omega * dt,
            },
            Waveform::RectPulse {
                start,
                width,
                amplitude,
            } => Waveform::RectPulse {
                start: start + dt,
                width: *width,
                amplitude: *amplitude,
            },
            Waveform::Custom(f) => {
                let f = f.clone();
                Waveform::Custom(Arc::new(move |t| f(t - dt)))
            }
        }
    }
}

const TABLE_SIZE: usize = 4096;
const INV_TAU: f64 = 1.0 / TAU;

/// Fraction of a turn in `[0, 1)`; cheaper than `rem_euclid` in the inner loops.
#[inline]
fn turns(theta: f64) -> f64 {
    let u = theta * INV_TAU;
    let f = u - (u as i64) as f64;
    if f < 0.0 {
        f + 1.0
    } else {
        f
    }
}

/// Periodic table with linear interpolation in phase, stored as
/// interleaved `(value, slope)` pairs.
#[derive(Debug, Clone, PartialEq)]
struct PhaseTable {
    pairs: Vec<[f64; 2]>,
}

impl PhaseTable {
    fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let pairs = (0..n)
            .map(|k| [values[k], values[(k + 1) % n] - values[k]])
            .collect();
        Self { pairs }
    }

    fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = (0..n).map(|k| f(TAU * k as f64 / n as f64)).collect();
        Self::from_samples(&values)
    }

    #[inline]
    fn eval(&self, theta: f64) -> f64 {
        let n = self.pairs.len();
        let pos = turns(theta) * n as f64;
        let k = pos as usize;
        let [v, d] = self.pairs[k.min(n - 1)];
        v + (pos - k as f64) * d
    }
}

/// An oscillator reduced to `omega0`, its PPV and the time shift `alpha`.
#[derive(Debug, Clone)]
pub struct PhaseOscillator {
    pub omega0: f64,
    pub ppv: Arc<PpvCurve>,
    /// Time shift, seconds.
    pub alpha: f64,
    gamma: PhaseTable,
    output: PhaseTable,
}

impl PhaseOscillator {
    pub fn new(ppv: Arc<PpvCurve>, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::arg("alpha", "must be finite"));
        }
        let gamma = PhaseTable::from_fn(TABLE_SIZE, |th| ppv.eval(th));
        let lc = &ppv.lc;
        let output = PhaseTable::from_samples(&lc.output_samples());
        Ok(Self {
            omega0: lc.omega0,
            ppv,
            alpha,
            gamma,
            output,
        })
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega0
    }

    /// `gamma` at phase `theta`, s/C.
    #[inline]
    pub fn gamma_at(&self, theta: f64) -> f64 {
        self.gamma.eval(theta)
    }

    /// Reconstructed output waveform at phase `theta`.
    #[inline]
    pub fn output_at(&self, theta: f64) -> f64 {
        self.output.eval(theta)
    }

    #[inline]
    fn rate(&self, t: f64, alpha: f64, b: f64) -> f64 {
        self.gamma_at(self.omega0 * (t + alpha)) * b
    }

    pub fn phase(&self, t: f64) -> f64 {
        (self.omega0 * (t + self.alpha)).rem_euclid(TAU)
    }
}

fn check_dt(dt: f64, period: f64) -> Result<()> {
    if !(dt > 0.0) || dt > period / 200.0 * (1.0 + 1e-12) {
        return Err(Error::arg(
            "dt",
            format!("must lie in (0, T0/200] = (0, {:e}]", period / 200.0),
        ));
    }
    Ok(())
}

/// One RK4 step of `d alpha/dt = gamma(omega0 (t + alpha)) b(t)`; returns the new alpha.
pub fn phase_step(osc: &PhaseOscillator, b: &Waveform, t: f64, dt: f64) -> Result<f64> {
    check_dt(dt, osc.period())?;
    let (b0, bm, b1) = (b.eval(t), b.eval(t + 0.5 * dt), b.eval(t + dt));
    for (v, at) in [(b0, t), (bm, t + 0.5 * dt), (b1, t + dt)] {
        if !v.is_finite() {
            return Err(Error::NonFiniteInjection {
                time: at,
                edge: None,
            });
        }
    }
    Ok(rk4_alpha(osc, osc.alpha, t, dt, b0, bm, b1))
}

#[inline]
fn rk4_alpha(osc: &PhaseOscillator, a: f64, t: f64, dt: f64, b0: f64, bm: f64, b1: f64) -> f64 {
    let k1 = osc.rate(t, a, b0);
    let k2 = osc.rate(t + 0.5 * dt, a + 0.5 * dt * k1, bm);
    let k3 = osc.rate(t + 0.5 * dt, a + 0.5 * dt * k2, bm);
    let k4 = osc.rate(t + dt, a + dt * k3, b1);
    a + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Current into `to` as a function of the source oscillator's output.
#[derive(Clone)]
pub enum Kernel {
    /// `gain * v_src`, amperes per volt.
    Linear {
        gain: f64,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::Linear { gain } => write!(f, "Linear({gain})"),
            Kernel::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Kernel {
    #[inline]
    pub fn eval(&self, v: f64) -> f64 {
        match self {
            Kernel::Linear { gain } => gain * v,
            Kernel::Custom(f) => f(v),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Coupling {
    pub from: usize,
    pub to: usize,
    pub kernel: Kernel,
}

#[derive(Debug, Clone)]
pub struct Injection {
    pub target: usize,
    pub waveform: Waveform,
}

#[derive(Debug, Clone)]
pub struct PhaseNetwork {
    pub oscillators: Vec<PhaseOscillator>,
    pub injections: Vec<Injection>,
    pub couplings: Vec<Coupling>,
    /// Start time of the simulation.
    pub t0: f64,
    /// Store every `record_every`-th step in the trace.
    pub record_every: usize,
}

impl PhaseNetwork {
    pub fn new(oscillators: Vec<PhaseOscillator>) -> Self {
        Self {
            oscillators,
            injections: Vec::new(),
            couplings: Vec::new(),
            t0: 0.0,
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.oscillators.len();
        if n == 0 {
            return Err(Error::arg("oscillators", "network is empty"));
        }
        if self.injections.iter().any(|i| i.target >= n) {
            return Err(Error::arg("injections", "target index out of range"));
        }
        if self.couplings.iter().any(|c| c.from >= n || c.to >= n) {
            return Err(Error::arg("couplings", "index out of range"));
        }
        if self.record_every == 0 {
            return Err(Error::arg("record_every", "must be at least 1"));
        }
        Ok(())
    }

    /// Default global step: `min T0_i / 500`.
    pub fn default_dt(&self) -> f64 {
        self.oscillators
            .iter()
            .map(|o| o.period() / 500.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Total current into every oscillator at time `t` given shifts `alpha`.
    fn currents(&self, t: f64, alpha: &[f64], out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|v| *v = 0.0);
        for inj in &self.injections {
            let v = inj.waveform.eval(t);
            if !v.is_finite() {
                return Err(Error::NonFiniteInjection {
                    time: t,
                    edge: None,
                });
            }
            out[inj.target] += v;
        }
        for c in &self.couplings {
            let src = &self.oscillators[c.from];
            let v = c
                .kernel
                .eval(src.output_at(src.omega0 * (t + alpha[c.from])));
            if !v.is_finite() {
                return Err(Error::NonFiniteInjection {
                    time: t,
                    edge: Some((c.from, c.to)),
                });
            }
            out[c.to] += v;
        }
        Ok(())
    }

    fn rates(&self, t: f64, alpha: &[f64], cur: &mut [f64], out: &mut [f64]) -> Result<()> {
        self.currents(t, alpha, cur)?;
        for (i, o) in self.oscillators.iter().enumerate() {
            out[i] = o.rate(t, alpha[i], cur[i]);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    pub times: Vec<f64>,
    pub n_osc: usize,
    /// Row-major `times.len() x n_osc`, seconds.
    pub alphas: Vec<f64>,
    /// Row-major, `omega0_i (t + alpha_i)` wrapped to `[0, 2 pi)`.
    pub phases: Vec<f64>,
}

impl PhaseTrace {
    pub fn alpha(&self, k: usize, i: usize) -> f64 {
        self.alphas[k * self.n_osc + i]
    }

    pub fn phase(&self, k: usize, i: usize) -> f64 {
        self.phases[k * self.n_osc + i]
    }

    /// Linear interpolation of `alpha_i` at time `t` inside the trace.
    pub fn alpha_at(&self, i: usize, t: f64) -> f64 {
        let k = self
            .times
            .partition_point(|&x| x <= t)
            .clamp(1, self.times.len() - 1)
            - 1;
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let s = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        self.alpha(k, i) + s * (self.alpha(k + 1, i) - self.alpha(k, i))
    }
}

/// Synchronous RK4 over all oscillators from `net.t0` to `t_end`.
pub fn simulate_network(net: &PhaseNetwork, t_end: f64, dt: f64) -> Result<PhaseTrace> {
    net.validate()?;
    for o in &net.oscillators {
        check_dt(dt, o.period())?;
    }
    if !(t_end > net.t0) {
        return Err(Error::arg("t_end", "must exceed the start time"));
    }
    let n = net.oscillators.len();
    let steps = ((t_end - net.t0) / dt - 1e-9).ceil() as usize;
    let mut alpha: Vec<f64> = net.oscillators.iter().map(|o| o.alpha).collect();
    let mut trace = PhaseTrace {
        times: Vec::with_capacity(steps / net.record_every + 2),
        n_osc: n,
        alphas: Vec::new(),
        phases: Vec::new(),
    };
    let record = |trace: &mut PhaseTrace, t: f64, alpha: &[f64]| {
        trace.times.push(t);
        for (o, a) in net.oscillators.iter().zip(alpha) {
            trace.alphas.push(*a);
            trace.phases.push(turns(o.omega0 * (t + a)) * TAU);
        }
    };
    record(&mut trace, net.t0, &alpha);
    let mut cur = vec![0.0; n];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    for s in 0..steps {
        let t = net.t0 + s as f64 * dt;
        net.rates(t, &alpha, &mut cur, &mut k1)?;
        (0..n).for_each(|i| tmp[i] = alpha[i] + 0.5 * dt * k1[i]);
        net.rates(t + 0.5 * dt, &tmp, &mut cur, &mut k2)?;
        (0..n).for_each(|i| tmp[i] = alpha[i] + 0.5 * dt * k2[i]);
        net.rates(t + 0.5 * dt, &tmp, &mut cur, &mut k3)?;
        (0..n).for_each(|i| tmp[i] = alpha[i] + dt * k3[i]);
        net.rates(t + dt, &tmp, &mut cur, &mut k4)?;
        for i in 0..n {
            alpha[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if (s + 1) % net.record_every == 0 || s + 1 == steps {
            record(&mut trace, net.t0 + (s + 1) as f64 * dt, &alpha);
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockReport {
    pub locked: bool,
    /// `omega0 (t + alpha) - w_inj t` at the end of the run, degrees in `(-180, 180]`.
    pub steady_phase_deg: Option<f64>,
    /// `|mean frequency - w_inj|` over the second half of the run, rad/s.
    pub beat_freq: Option<f64>,
    /// Mean oscillation frequency over the second half, rad/s.
    pub mean_freq: f64,
}

/// Relative frequency error below which an injection cycle counts as locked.
pub const LOCK_TOL: f64 = 1e-4;

/// Drive one oscillator with `amp cos(w_inj t)` for `horizon_periods` free-running periods.
pub fn injection_lock(
    osc: &PhaseOscillator,
    amp: f64,
    w_inj: f64,
    horizon_periods: usize,
) -> Result<LockReport> {
    if !(w_inj > 0.0) || !amp.is_finite() {
        return Err(Error::arg(
            "w_inj",
            "injection frequency must be positive and amplitude finite",
        ));
    }
    let t_inj = TAU / w_inj;
    let per_cycle = (500.0 * t_inj / osc.period()).ceil().max(1.0) as usize;
    let dt = t_inj / per_cycle as f64;
    let cycles = ((horizon_periods as f64 * osc.period()) / t_inj).ceil() as usize;
    if cycles < 16 {
        return Err(Error::arg("horizon_periods", "too short to judge locking"));
    }
    let b = Waveform::Cosine {
        amp,
        omega: w_inj,
        phase: 0.0,
    };
    let mut o = osc.clone();
    let mut at_cycle = Vec::with_capacity(cycles + 1);
    at_cycle.push(o.alpha);
    for c in 0..cycles {
        for s in 0..per_cycle {
            let t = (c * per_cycle + s) as f64 * dt;
            o.alpha = phase_step(&o, &b, t, dt)?;
        }
        at_cycle.push(o.alpha);
    }
    let freq = |c: usize| osc.omega0 * (1.0 + (at_cycle[c + 1] - at_cycle[c]) / t_inj);
    let tail = (cycles / 4).max(4);
    let locked = (cycles - tail..cycles).all(|c| ((freq(c) - w_inj) / w_inj).abs() < LOCK_TOL);
    let t_end = cycles as f64 * t_inj;
    let half = cycles / 2;
    let mean_freq =
        osc.omega0 * (1.0 + (at_cycle[cycles] - at_cycle[half]) / (t_end - half as f64 * t_inj));
    Ok(LockReport {
        locked,
        steady_phase_deg: locked
            .then(|| wrap_pi(osc.omega0 * (t_end + o.alpha) - w_inj * t_end).to_degrees()),
        beat_freq: (!locked).then(|| (mean_freq - w_inj).abs()),
        mean_freq,
    })
}

/// Half-width of the locking range predicted from the first harmonic of gamma:
/// `omega0 * amp * |gamma_1| / 2`.
pub fn adler_half_range(osc: &PhaseOscillator, amp: f64) -> f64 {
    osc.omega0 * amp.abs() * osc.ppv.fundamental() / 2.0
}

/// A full-ODE oscillator of a co-simulated network.
#[derive(Clone)]
pub struct FullMember {
    pub system: Arc<dyn OdeSystem>,
    pub port: InjectionPort,
    pub output_index: usize,
}

/// The coupled network as one ODE: every member's field plus `gain * current` on its port.
pub struct NetworkOde {
    members: Vec<FullMember>,
    offsets: Vec<usize>,
    injections: Vec<Injection>,
    couplings: Vec<Coupling>,
    dim: usize,
}

impl NetworkOde {
    pub fn new(
        members: Vec<FullMember>,
        injections: Vec<Injection>,
        couplings: Vec<Coupling>,
    ) -> Self {
        let mut offsets = Vec::with_capacity(members.len());
        let mut dim = 0;
        for m in &members {
            offsets.push(dim);
            dim += m.system.dim();
        }
        Self {
            members,
            offsets,
            injections,
            couplings,
            dim,
        }
    }

    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }
}

impl OdeSystem for NetworkOde {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        for (m, &off) in self.members.iter().zip(&self.offsets) {
            let d = m.system.dim();
            m.system.rhs(t, &x[off..off + d], &mut dx[off..off + d]);
        }
        for inj in &self.injections {
            let m = &self.members[inj.target];
            dx[self.offsets[inj.target] + m.port.state_index] += m.port.gain * inj.waveform.eval(t);
        }
        for c in &self.couplings {
            let src = &self.members[c.from];
            let v = x[self.offsets[c.from] + src.output_index];
            let dst = &self.members[c.to];
            dx[self.offsets[c.to] + dst.port.state_index] += dst.port.gain * c.kernel.eval(v);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CosimReport {
    /// Largest phase discrepancy per oscillator over the horizon, degrees.
    pub phase_err_deg: Vec<f64>,
    /// Wall-clock time of the full ODE run over that of the phase model.
    pub speedup: f64,
    /// Phase of oscillator `i` relative to oscillator 0 at the end, degrees (full ODE).
    pub final_gap_full_deg: Vec<f64>,
    /// Same from the phase model.
    pub final_gap_model_deg: Vec<f64>,
    pub full_seconds: f64,
    pub model_seconds: f64,
}

/// Run the phase model and the full ODE network side by side.
///
/// The full network starts with each member on its orbit at phase
/// `omega0_i * (t0 + alpha_i)`; full-ODE phases are read at rising section
/// crossings, where they equal zero.
pub fn cosim_compare(net: &PhaseNetwork, full: &[FullMember], t_end: f64) -> Result<CosimReport> {
    net.validate()?;
    let n = net.oscillators.len();
    if full.len() != n {
        return Err(Error::arg(
            "full_systems",
            "one full system per oscillator required",
        ));
    }
    for (o, m) in net.oscillators.iter().zip(full) {
        if m.system.dim() != o.ppv.lc.dim || m.output_index != o.ppv.lc.ref_state_index {
            return Err(Error::arg(
                "full_systems",
                "member does not match its phase oscillator",
            ));
        }
    }
    let dt = net.default_dt();
    let start = Instant::now();
    let trace = simulate_network(net, t_end, dt)?;
    let model_seconds = start.elapsed().as_secs_f64();

    let ode = NetworkOde::new(full.to_vec(), net.injections.clone(), net.couplings.clone());
    let mut x0 = Vec::with_capacity(ode.dim());
    for o in &net.oscillators {
        x0.extend(o.ppv.lc.state_at_phase(o.omega0 * (net.t0 + o.alpha)));
    }
    let step = net
        .oscillators
        .iter()
        .map(|o| o.ppv.lc.step)
        .fold(f64::INFINITY, f64::min);
    let start = Instant::now();
    let crossings = full_crossings(&ode, net, &x0, t_end, step)?;
    let full_seconds = start.elapsed().as_secs_f64();

    let mut phase_err_deg = vec![0.0; n];
    for i in 0..n {
        let o = &net.oscillators[i];
        if crossings[i].is_empty() {
            return Err(Error::NotOscillating(format!(
                "oscillator {i} has no section crossings"
            )));
        }
        for &tc in &crossings[i] {
            let model = o.omega0 * (tc + trace.alpha_at(i, tc));
            phase_err_deg[i] = f64::max(phase_err_deg[i], wrap_pi(model).abs().to_degrees());
        }
    }
    // gap at the last crossing of each oscillator, relative to oscillator 0
    let full_phase_0 = |t: f64| -> f64 {
        let c = &crossings[0];
        let k = c.partition_point(|&x| x <= t).clamp(1, c.len().max(2) - 1) - 1;
        if c.len() < 2 {
            return 0.0;
        }
        TAU * (t - c[k]) / (c[k + 1] - c[k])
    };
    let o0 = &net.oscillators[0];
    let mut final_gap_full_deg = Vec::with_capacity(n);
    let mut final_gap_model_deg = Vec::with_capacity(n);
    for i in 0..n {
        let tc = *crossings[i].last().expect("checked above");
        final_gap_full_deg.push(wrap_pi(0.0 - full_phase_0(tc)).to_degrees());
        let oi = &net.oscillators[i];
        let pi = oi.omega0 * (tc + trace.alpha_at(i, tc));
        let p0 = o0.omega0 * (tc + trace.alpha_at(0, tc));
        final_gap_model_deg.push(wrap_pi(pi - p0).to_degrees());
    }
    Ok(CosimReport {
        phase_err_deg,
        speedup: full_seconds / model_seconds.max(1e-12),
        final_gap_full_deg,
        final_gap_model_deg,
        full_seconds,
        model_seconds,
    })
}

/// Rising section crossings of every member, streamed (no trajectory storage).
fn full_crossings(
    ode: &NetworkOde,
    net: &PhaseNetwork,
    x0: &[f64],
    t_end: f64,
    step: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = net.oscillators.len();
    let idx: Vec<usize> = (0..n)
        .map(|i| ode.offset(i) + net.oscillators[i].ppv.lc.ref_state_index)
        .collect();
    let levels: Vec<f64> = net.oscillators.iter().map(|o| o.ppv.lc.ref_level).collect();
    let mut out = vec![Vec::new(); n];
    let mut st = Stepper::new(ode, net.t0, x0, net.oscillators[0].ppv.lc.method);
    let steps = ((t_end - net.t0) / step - 1e-9).ceil() as usize;
    let mut prev: Vec<(f64, f64)> = idx
        .iter()
        .map(|&j| (st.state()[j], st.deriv()[j]))
        .collect();
    for s in 1..=steps {
        st.advance_to(net.t0 + s as f64 * step)?;
        for i in 0..n {
            let (p1, d1) = (st.state()[idx[i]], st.deriv()[idx[i]]);
            let (p0, d0) = prev[i];
            if p0 < levels[i] && p1 >= levels[i] {
                let frac = hermite_root(p0, p1, step * d0, step * d1, levels[i]);
                out[i].push(st.t() - step + frac * step);
            }
            prev[i] = (p1, d1);
        }
    }
    Ok(out)
}
