//! Phase response curves by impulse injection.
//!
//! The free and injected runs start from the same section state at `t = 0`;
//! the injected run receives a charge `q = h * b` at `t1` and the asymptotic
//! phase difference of the two runs is the PRC value at `t1`.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynsys::{integrate, Forced, ImpulseEvent, OdeSystem, Trajectory};
use crate::error::{Error, Result};
use crate::limit_cycle::{asymptotic_phase_shift, LimitCycle, ShiftOptions};
use crate::models::InjectionPort;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpulseMode {
    /// Instantaneous jump of `q * gain` on the port state.
    #[default]
    StateJump,
    /// Constant current `b` for a duration `h`.
    RectPulse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseSpec {
    /// Pulse width `h`, seconds.
    pub width: f64,
    /// Peak current `b`, amperes.
    pub amplitude: f64,
    pub port: InjectionPort,
    pub mode: ImpulseMode,
}

impl ImpulseSpec {
    pub fn new(width: f64, amplitude: f64, port: InjectionPort, mode: ImpulseMode) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::arg("width", "pulse width must be positive"));
        }
        if !amplitude.is_finite() {
            return Err(Error::arg("amplitude", "must be finite"));
        }
        Ok(Self {
            width,
            amplitude,
            port,
            mode,
        })
    }

    /// Injected charge `h * b`, coulombs.
    pub fn charge(&self) -> f64 {
        self.width * self.amplitude
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        Self {
            amplitude,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrcPoint {
    pub t1: f64,
    pub theta1: f64,
    pub prc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrcCurve {
    pub lc: LimitCycle,
    pub impulse: ImpulseSpec,
    pub points: Vec<PrcPoint>,
}

impl PrcCurve {
    pub fn max_abs(&self) -> f64 {
        self.points.iter().map(|p| p.prc.abs()).fold(0.0, f64::max)
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.prc).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrcOptions {
    pub shift: ShiftOptions,
    /// Reject shifts beyond pi/2 (wrap safety under weak injection).
    pub weak: bool,
    /// Worker threads for sweeps; `None` uses the hardware count.
    pub threads: Option<usize>,
}

impl Default for PrcOptions {
    fn default() -> Self {
        Self {
            shift: ShiftOptions::default(),
            weak: true,
            threads: None,
        }
    }
}

fn run_length(lc: &LimitCycle, opts: &PrcOptions) -> f64 {
    (opts.shift.discard_periods + opts.shift.crossings + 4) as f64 * lc.period
}

fn free_run<S: OdeSystem + ?Sized>(
    sys: &S,
    lc: &LimitCycle,
    opts: &PrcOptions,
) -> Result<Trajectory> {
    integrate(
        sys,
        lc.section_state(),
        0.0,
        run_length(lc, opts),
        lc.step,
        lc.method,
        &[],
    )
}

/// Injection time actually used: `t1` snapped onto the integration grid.
pub fn snap_time(lc: &LimitCycle, t1: f64) -> f64 {
    (t1 / lc.step).round() * lc.step
}

fn injected_run<S: OdeSystem + ?Sized>(
    sys: &S,
    lc: &LimitCycle,
    impulse: &ImpulseSpec,
    t1: f64,
    opts: &PrcOptions,
) -> Result<Trajectory> {
    let t_end = run_length(lc, opts);
    let port = &impulse.port;
    match impulse.mode {
        ImpulseMode::StateJump => {
            let ev = ImpulseEvent {
                at: t1,
                delta: port.delta(sys.dim(), impulse.charge()),
            };
            integrate(
                sys,
                lc.section_state(),
                0.0,
                t_end,
                lc.step,
                lc.method,
                &[ev],
            )
        }
        ImpulseMode::RectPulse => {
            let x1 = if t1 > 0.0 {
                integrate(sys, lc.section_state(), 0.0, t1, lc.step, lc.method, &[])?
                    .last_state()
                    .to_vec()
            } else {
                lc.section_state().to_vec()
            };
            let h = impulse.width;
            let sub = (h / lc.step).ceil().max(1.0);
            let b = impulse.amplitude;
            let forced = Forced {
                inner: sys,
                state_index: port.state_index,
                gain: port.gain,
                current: move |_t: f64| b,
            };
            let x2 = integrate(&forced, &x1, t1, t1 + h, h / sub, lc.method, &[])?
                .last_state()
                .to_vec();
            integrate(sys, &x2, t1 + h, t_end, lc.step, lc.method, &[])
        }
    }
}

fn shift_against<S: OdeSystem + ?Sized>(
    sys: &S,
    lc: &LimitCycle,
    impulse: &ImpulseSpec,
    t1: f64,
    free: &Trajectory,
    opts: &PrcOptions,
) -> Result<f64> {
    let perturbed = injected_run(sys, lc, impulse, t1, opts)?;
    // the injection lies inside the first period; discard counts from there
    let shift_opts = ShiftOptions {
        discard_periods: opts.shift.discard_periods + 1,
        ..opts.shift.clone()
    };
    let shift = asymptotic_phase_shift(free, &perturbed, lc, &shift_opts)?;
    if opts.weak && shift.abs() > FRAC_PI_2 {
        return Err(Error::TooStrongImpulse { shift });
    }
    Ok(shift)
}

fn check_t1(lc: &LimitCycle, t1: f64) -> Result<()> {
    if !(t1 >= 0.0 && t1 < lc.period) {
        return Err(Error::arg(
            "t1",
            format!("must lie in [0, {:e})", lc.period),
        ));
    }
    Ok(())
}

/// Asymptotic phase shift (radians, positive = advance) caused by one impulse at `t1`.
pub fn measure_prc_point<S: OdeSystem + ?Sized>(
    sys: &S,
    lc: &LimitCycle,
    impulse: &ImpulseSpec,
    t1: f64,
    opts: &PrcOptions,
) -> Result<f64> {
    check_t1(lc, t1)?;
    let free = free_run(sys, lc, opts)?;
    shift_against(sys, lc, impulse, snap_time(lc, t1), &free, opts)
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::arg("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// PRC at `t1 = k T0 / n_points`, `k = 0..n_points`, evaluated in parallel and
/// returned in index order.
pub fn sweep_prc<S: OdeSystem + ?Sized>(
    sys: &S,
    lc: &LimitCycle,
    impulse: &ImpulseSpec,
    n_points: usize,
    opts: &PrcOptions,
) -> Result<PrcCurve> {
    if n_points < 4 {
        return Err(Error::arg("n_points", "need at least 4"));
    }
    let free = free_run(sys, lc, opts)?;
    let times: Vec<f64> = (0..n_points)
        .map(|k| snap_time(lc, k as f64 * lc.period / n_points as f64))
        .collect();
    if times.windows(2).any(|w| w[1] <= w[0]) || times[n_points - 1] >= lc.period {
        return Err(Error::arg(
            "n_points",
            "too many points for the integration step",
        ));
    }
    let results: Vec<Result<f64>> = with_pool(opts.threads, || {
        times
            .par_iter()
            .map(|&t1| shift_against(sys, lc, impulse, t1, &free, opts))
            .collect()
    })?;
    let mut points = Vec::with_capacity(n_points);
    for (t1, r) in times.iter().zip(results) {
        let prc = r.map_err(|e| Error::PrcPoint {
            t1: *t1,
            source: Box::new(e),
        })?;
        points.push(PrcPoint {
            t1: *t1,
            theta1: lc.omega0 * t1,
            prc,
        });
    }
    Ok(PrcCurve {
        lc: lc.clone(),
        impulse: impulse.clone(),
        points,
    })
}

/// Charge giving `max|prc|` close to `target` radians, from two 8-point probe sweeps.
pub fn auto_charge<S: OdeSystem + ?Sized>(
    sys: &S,
    lc: &LimitCycle,
    port: &InjectionPort,
    mode: ImpulseMode,
    target: f64,
    opts: &PrcOptions,
) -> Result<f64> {
    if !(target > 0.0 && target < FRAC_PI_2) {
        return Err(Error::arg("target", "must lie in (0, pi/2)"));
    }
    let width = lc.period / 1000.0;
    let mut q = 1e-3 * lc.range(port.state_index) / port.gain.abs();
    for _ in 0..2 {
        let spec = ImpulseSpec::new(width, q / width, *port, mode)?;
        let m = sweep_prc(sys, lc, &spec, 8, opts)?.max_abs();
        if !(m > 0.0) {
            return Err(Error::arg("port", "no phase response at this port"));
        }
        q *= target / m;
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeaknessReport {
    pub linear: bool,
    /// `max |prc_full - 2 prc_half| / max |prc_full|`.
    pub deviation: f64,
}

/// Compare `curve` with a companion sweep at half the charge.
pub fn weakness_check<S: OdeSystem + ?Sized>(
    sys: &S,
    curve: &PrcCurve,
    rel_tol: f64,
    opts: &PrcOptions,
) -> Result<WeaknessReport> {
    let full_max = curve.max_abs();
    if full_max == 0.0 {
        return Ok(WeaknessReport {
            linear: true,
            deviation: 0.0,
        });
    }
    let half_spec = curve.impulse.with_amplitude(curve.impulse.amplitude / 2.0);
    let half = sweep_prc(sys, &curve.lc, &half_spec, curve.points.len(), opts)?;
    Ok(weakness_from_pair(curve, &half, rel_tol))
}

/// Linearity report from an existing full/half-charge pair.
pub fn weakness_from_pair(full: &PrcCurve, half: &PrcCurve, rel_tol: f64) -> WeaknessReport {
    let full_max = full.max_abs();
    if full_max == 0.0 {
        return WeaknessReport {
            linear: true,
            deviation: 0.0,
        };
    }
    let worst = full
        .points
        .iter()
        .zip(&half.points)
        .map(|(f, h)| (f.prc - 2.0 * h.prc).abs())
        .fold(0.0, f64::max);
    let deviation = worst / full_max;
    WeaknessReport {
        linear: deviation <= rel_tol,
        deviation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit_cycle::CycleOptions;
    use crate::models::VanDerPol;
    use std::f64::consts::TAU;
    use std::sync::OnceLock;

    fn vdp1() -> &'static (VanDerPol, LimitCycle) {
        static CELL: OnceLock<(VanDerPol, LimitCycle)> = OnceLock::new();
        CELL.get_or_init(|| {
            let sys = VanDerPol::new(1.0).unwrap();
            let lc =
                LimitCycle::compute(&sys, &[0.1, 0.0], 2e-3, &CycleOptions::default()).unwrap();
            (sys, lc)
        })
    }

    fn spec(q: f64, mode: ImpulseMode) -> ImpulseSpec {
        let lc = &vdp1().1;
        let h = lc.period / 1000.0;
        ImpulseSpec::new(h, q / h, InjectionPort::new(0, 1.0).unwrap(), mode).unwrap()
    }

    #[test]
    fn zero_charge_gives_zero() {
        let (sys, lc) = vdp1();
        let s = measure_prc_point(
            sys,
            lc,
            &spec(0.0, ImpulseMode::StateJump),
            0.3,
            &Default::default(),
        )
        .unwrap();
        assert!(s.abs() < 1e-9);
        let c = sweep_prc(
            sys,
            lc,
            &spec(0.0, ImpulseMode::StateJump),
            8,
            &Default::default(),
        )
        .unwrap();
        assert!(c.points.iter().all(|p| p.prc == 0.0));
        let w = weakness_check(sys, &c, 0.05, &Default::default()).unwrap();
        assert!(w.linear && w.deviation == 0.0);
    }

    #[test]
    fn doubling_charge_doubles_shift() {
        let (sys, lc) = vdp1();
        let o = PrcOptions::default();
        let a = measure_prc_point(sys, lc, &spec(1e-3, ImpulseMode::StateJump), 0.0, &o).unwrap();
        let b = measure_prc_point(sys, lc, &spec(2e-3, ImpulseMode::StateJump), 0.0, &o).unwrap();
        assert!(a.abs() > 1e-5);
        assert!((b - 2.0 * a).abs() <= 0.02 * b.abs(), "{a} {b}");
    }

    #[test]
    fn rect_pulse_matches_state_jump() {
        let (sys, lc) = vdp1();
        let o = PrcOptions::default();
        let jump = sweep_prc(sys, lc, &spec(0.02, ImpulseMode::StateJump), 8, &o).unwrap();
        let rect = sweep_prc(sys, lc, &spec(0.02, ImpulseMode::RectPulse), 8, &o).unwrap();
        let m = jump.max_abs();
        for (a, b) in jump.points.iter().zip(&rect.points) {
            assert!((a.prc - b.prc).abs() <= 0.01 * m, "{a:?} {b:?}");
        }
    }

    #[test]
    fn sweep_grid_and_continuity() {
        let (sys, lc) = vdp1();
        let c = sweep_prc(
            sys,
            lc,
            &spec(0.02, ImpulseMode::StateJump),
            100,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(c.points.len(), 100);
        for (k, p) in c.points.iter().enumerate() {
            assert!((p.theta1 - lc.omega0 * p.t1).abs() < 1e-12);
            assert!((p.theta1 - TAU * k as f64 / 100.0).abs() < 1e-9);
        }
        let v = c.values();
        let mut gaps: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        gaps.sort_by(f64::total_cmp);
        let median = gaps[gaps.len() / 2];
        assert!((v[99] - v[0]).abs() < 3.0 * median);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let (sys, lc) = vdp1();
        let one = PrcOptions {
            threads: Some(1),
            ..Default::default()
        };
        let four = PrcOptions {
            threads: Some(4),
            ..Default::default()
        };
        let s = spec(0.02, ImpulseMode::StateJump);
        let a = sweep_prc(sys, lc, &s, 12, &one).unwrap();
        let b = sweep_prc(sys, lc, &s, 12, &four).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn weak_and_strong_regimes() {
        let (sys, lc) = vdp1();
        let o = PrcOptions {
            weak: false,
            ..Default::default()
        };
        let weak = sweep_prc(sys, lc, &spec(0.01, ImpulseMode::StateJump), 8, &o).unwrap();
        assert!(weakness_check(sys, &weak, 0.05, &o).unwrap().linear);
        let strong = sweep_prc(sys, lc, &spec(1.5, ImpulseMode::StateJump), 8, &o).unwrap();
        let r = weakness_check(sys, &strong, 0.05, &o).unwrap();
        assert!(!r.linear && r.deviation > 0.05, "{r:?}");
    }

    #[test]
    fn huge_impulse_trips_wrap_guard() {
        let (sys, lc) = vdp1();
        let mut errs = 0;
        for t1 in [0.0, 1.0, 2.0, 3.0, 4.0, 5.0] {
            match measure_prc_point(
                sys,
                lc,
                &spec(3.0, ImpulseMode::StateJump),
                t1,
                &Default::default(),
            ) {
                Err(Error::TooStrongImpulse { .. }) => errs += 1,
                Ok(s) => assert!(s.abs() <= FRAC_PI_2),
                Err(e) => panic!("{e}"),
            }
        }
        assert!(errs > 0);
    }

    #[test]
    fn sweep_reports_failing_t1() {
        let (sys, lc) = vdp1();
        // an unattainable drift tolerance makes every point fail; the first is reported
        let err = sweep_prc(
            sys,
            lc,
            &spec(0.01, ImpulseMode::StateJump),
            4,
            &PrcOptions {
                weak: true,
                threads: Some(2),
                shift: ShiftOptions {
                    discard_periods: 20,
                    crossings: 16,
                    period_tol: 1e-15,
                },
            },
        )
        .unwrap_err();
        match err {
            Error::PrcPoint { t1, source } => {
                assert_eq!(t1, 0.0);
                assert!(matches!(*source, Error::NotRestabilized { .. }));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn auto_charge_hits_target() {
        let (sys, lc) = vdp1();
        let port = InjectionPort::new(0, 1.0).unwrap();
        let o = PrcOptions::default();
        let q = auto_charge(sys, lc, &port, ImpulseMode::StateJump, 0.05, &o).unwrap();
        let h = lc.period / 1000.0;
        let s = ImpulseSpec::new(h, q / h, port, ImpulseMode::StateJump).unwrap();
        let m = sweep_prc(sys, lc, &s, 8, &o).unwrap().max_abs();
        assert!((m - 0.05).abs() < 0.005, "{m}");
    }

    #[test]
    fn t1_outside_period_rejected() {
        let (sys, lc) = vdp1();
        let e = measure_prc_point(
            sys,
            lc,
            &spec(0.01, ImpulseMode::StateJump),
            lc.period,
            &Default::default(),
        );
        assert!(matches!(e, Err(Error::InvalidArgument { name: "t1", .. })));
    }
}
