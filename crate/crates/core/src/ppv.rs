//! Perturbation projection vector: conversion from a measured PRC, the adjoint
//! (backward-integration) oracle, and comparison / spectral diagnostics.
//!
//! `gamma` is a time shift per unit injected charge (s/C). Multiplying by
//! `omega0` gives the phase sensitivity in rad/C.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::dynsys::{integrate, jacobian, OdeSystem};
use crate::error::{Error, Result};
use crate::fourier::{harmonic_powers, spectrum, FourierSeries};
use crate::limit_cycle::{wrap_pi, LimitCycle};
use crate::models::InjectionPort;
use crate::prc::PrcCurve;

pub const DEFAULT_HARMONICS: usize = 16;
/// Largest accepted RMS misfit of the Fourier form, relative to `max|gamma|`.
pub const FIT_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PpvSource {
    FromPrc,
    Adjoint,
}

impl PpvSource {
    pub fn as_str(self) -> &'static str {
        match self {
            PpvSource::FromPrc => "from_prc",
            PpvSource::Adjoint => "adjoint",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpvCurve {
    pub lc: LimitCycle,
    pub theta: Vec<f64>,
    /// Seconds per coulomb.
    pub gamma: Vec<f64>,
    pub fourier: FourierSeries,
    pub source: PpvSource,
}

impl PpvCurve {
    /// Attach a least-squares Fourier form to the samples, rejecting poor fits.
    pub fn new(
        lc: LimitCycle,
        theta: Vec<f64>,
        gamma: Vec<f64>,
        harmonics: usize,
        source: PpvSource,
    ) -> Result<Self> {
        let fourier = FourierSeries::fit(&theta, &gamma, harmonics)?;
        let rms = fourier.rms_residual(&theta, &gamma);
        let limit = FIT_TOL * gamma.iter().map(|g| g.abs()).fold(0.0, f64::max);
        if rms > limit {
            return Err(Error::FitError { rms, limit });
        }
        Ok(Self {
            lc,
            theta,
            gamma,
            fourier,
            source,
        })
    }

    /// `gamma(theta)` from the Fourier form, periodic in `theta`.
    pub fn eval(&self, theta: f64) -> f64 {
        self.fourier.eval(theta)
    }

    /// Phase sensitivity `omega0 * gamma`, rad/C.
    pub fn gamma_phase(&self) -> Vec<f64> {
        self.gamma.iter().map(|g| g * self.lc.omega0).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.gamma.iter().map(|g| g.abs()).fold(0.0, f64::max)
    }

    /// Magnitude of the first harmonic of `gamma`, s/C.
    pub fn fundamental(&self) -> f64 {
        self.fourier.amplitude(1)
    }
}

/// `gamma(theta1) = prc(theta1) / (h b omega0)`.
pub fn ppv_from_prc(curve: &PrcCurve, harmonics: usize) -> Result<PpvCurve> {
    let (h, b, w0) = (
        curve.impulse.width,
        curve.impulse.amplitude,
        curve.lc.omega0,
    );
    if h * b == 0.0 {
        return Err(Error::arg("charge", "PRC was measured with zero charge"));
    }
    let theta = curve.points.iter().map(|p| p.theta1).collect();
    let gamma = curve.points.iter().map(|p| p.prc / (h * b * w0)).collect();
    PpvCurve::new(
        curve.lc.clone(),
        theta,
        gamma,
        harmonics,
        PpvSource::FromPrc,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointOptions {
    /// Periods always integrated before testing periodicity.
    pub min_periods: usize,
    pub max_periods: usize,
    /// Relative change of `z` at the section between periods accepted as periodic.
    pub periodic_tol: f64,
    /// Accepted variation of `z . f` over the cycle.
    pub norm_tol: f64,
    pub harmonics: usize,
}

impl Default for AdjointOptions {
    fn default() -> Self {
        Self {
            min_periods: 10,
            max_periods: 2000,
            periodic_tol: 1e-6,
            norm_tol: 1e-3,
            harmonics: DEFAULT_HARMONICS,
        }
    }
}

/// Adjoint solution on the orbit grid plus the normalization products.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointSolution {
    /// Row-major `grid_size x dim`, row `k` at phase `2 pi k / N`.
    pub z: Vec<f64>,
    /// `z . f` at each grid row.
    pub products: Vec<f64>,
    pub periods: usize,
}

/// Periodic solution of `dz/dt = -J(x(t))^T z`, normalized by `z . f = 1`.
pub fn adjoint_solution<S: OdeSystem + ?Sized>(
    sys: &S,
    lc: &LimitCycle,
    opts: &AdjointOptions,
) -> Result<AdjointSolution> {
    let n = lc.grid_size;
    let dim = lc.dim;
    let sub = ((lc.period / n as f64) / lc.step).ceil().max(1.0) as usize;
    let m = n * sub;
    let h = lc.period / m as f64;
    // orbit and Jacobians at half steps so every RK4 stage lands on a sample
    let orbit = integrate(
        sys,
        lc.section_state(),
        0.0,
        lc.period,
        h / 2.0,
        lc.method,
        &[],
    )?;
    let nj = 2 * m;
    let mut jac = vec![0.0; nj * dim * dim];
    for i in 0..nj {
        jacobian(
            sys,
            orbit.times[i],
            orbit.state(i),
            &mut jac[i * dim * dim..(i + 1) * dim * dim],
        );
    }
    let field = |i: usize| -> Vec<f64> {
        let mut f = vec![0.0; dim];
        sys.rhs(orbit.times[i], orbit.state(i), &mut f);
        f
    };
    // g(i, z) = -J_i^T z
    let g = |i: usize, z: &[f64], out: &mut [f64]| {
        let j = &jac[(i % nj) * dim * dim..(i % nj + 1) * dim * dim];
        for c in 0..dim {
            out[c] = -(0..dim).map(|r| j[r * dim + c] * z[r]).sum::<f64>();
        }
    };
    let f0 = field(0);
    let f0n: f64 = f0.iter().map(|v| v * v).sum();
    let mut z: Vec<f64> = f0.iter().map(|v| v / f0n).collect();
    let mut rows = vec![0.0; n * dim];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    );
    let mut prev: Option<Vec<f64>> = None;
    let mut change = f64::INFINITY;
    for period in 1..=opts.max_periods {
        // backward from t = T0 (index 2m, identified with 0) to t = 0
        for step in (0..m).rev() {
            let i1 = 2 * (step + 1);
            let im = 2 * step + 1;
            let i0 = 2 * step;
            g(i1, &z, &mut k1);
            tmp.iter_mut()
                .zip(&z)
                .zip(&k1)
                .for_each(|((t, z), k)| *t = z - 0.5 * h * k);
            g(im, &tmp, &mut k2);
            tmp.iter_mut()
                .zip(&z)
                .zip(&k2)
                .for_each(|((t, z), k)| *t = z - 0.5 * h * k);
            g(im, &tmp, &mut k3);
            tmp.iter_mut()
                .zip(&z)
                .zip(&k3)
                .for_each(|((t, z), k)| *t = z - h * k);
            g(i0, &tmp, &mut k4);
            for c in 0..dim {
                z[c] -= h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
            if step % sub == 0 {
                rows[(step / sub) * dim..(step / sub + 1) * dim].copy_from_slice(&z);
            }
        }
        let c: f64 = z.iter().zip(&f0).map(|(a, b)| a * b).sum();
        if !c.is_finite() || c == 0.0 || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonHyperbolic {
                periods: period,
                change,
            });
        }
        z.iter_mut().for_each(|v| *v /= c);
        rows.iter_mut().for_each(|v| *v /= c);
        if let Some(p) = &prev {
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let diff = z
                .iter()
                .zip(p)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            change = diff / norm;
            if period >= opts.min_periods && change < opts.periodic_tol {
                let products: Vec<f64> = (0..n)
                    .map(|k| {
                        let f = field(2 * k * sub);
                        rows[k * dim..(k + 1) * dim]
                            .iter()
                            .zip(&f)
                            .map(|(a, b)| a * b)
                            .sum()
                    })
                    .collect();
                return Ok(AdjointSolution {
                    z: rows,
                    products,
                    periods: period,
                });
            }
        }
        prev = Some(z.clone());
    }
    Err(Error::NonHyperbolic {
        periods: opts.max_periods,
        change,
    })
}

/// PPV of `port` from the adjoint solution: `gamma = z[port] * gain`.
pub fn adjoint_ppv<S: OdeSystem + ?Sized>(
    sys: &S,
    lc: &LimitCycle,
    port: &InjectionPort,
    opts: &AdjointOptions,
) -> Result<PpvCurve> {
    if port.state_index >= lc.dim {
        return Err(Error::arg("port", "state index out of range"));
    }
    let sol = adjoint_solution(sys, lc, opts)?;
    let variation = sol
        .products
        .iter()
        .map(|p| (p - 1.0).abs())
        .fold(0.0, f64::max);
    if variation > opts.norm_tol {
        return Err(Error::OrbitAccuracy {
            variation,
            tol: opts.norm_tol,
        });
    }
    let n = lc.grid_size;
    let theta = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
    let gamma = (0..n)
        .map(|k| sol.z[k * lc.dim + port.state_index] * port.gain)
        .collect();
    PpvCurve::new(lc.clone(), theta, gamma, opts.harmonics, PpvSource::Adjoint)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareReport {
    /// RMS of `a - b` over `max|b|`.
    pub rms_rel: f64,
    pub max_rel: f64,
    /// `L` maximizing the circular correlation of `b(theta)` with `a(theta - L)`.
    pub phase_lag: f64,
}

pub fn compare_ppv(a: &PpvCurve, b: &PpvCurve) -> Result<CompareReport> {
    let (ta, tb) = (a.lc.period, b.lc.period);
    if (ta - tb).abs() > 1e-6 * tb.abs() {
        return Err(Error::IncompatibleCurves { a: ta, b: tb });
    }
    let n = a.gamma.len().min(b.gamma.len()).max(4);
    let grid: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
    let va: Vec<f64> = grid.iter().map(|&t| a.eval(t)).collect();
    let vb: Vec<f64> = grid.iter().map(|&t| b.eval(t)).collect();
    let scale = vb.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let ratio = |x: f64| if x == 0.0 { 0.0 } else { x / scale };
    let ss: f64 = va.iter().zip(&vb).map(|(x, y)| (x - y).powi(2)).sum();
    let worst = va
        .iter()
        .zip(&vb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let corr = circular_correlation(&vb, &va);
    let best = corr
        .iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, (k, &c)| if c > acc.1 { (k, c) } else { acc },
        )
        .0;
    Ok(CompareReport {
        rms_rel: ratio((ss / n as f64).sqrt()),
        max_rel: ratio(worst),
        phase_lag: wrap_pi(TAU * best as f64 / n as f64),
    })
}

/// `c[m] = sum_k x[k] y[k - m]` (indices mod n), via FFT.
fn circular_correlation(x: &[f64], y: &[f64]) -> Vec<f64> {
    use rustfft::num_complex::Complex;
    use rustfft::FftPlanner;
    let n = x.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fx: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut fy: Vec<Complex<f64>> = y.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fwd.process(&mut fx);
    fwd.process(&mut fy);
    let mut prod: Vec<Complex<f64>> = fx.iter().zip(&fy).map(|(a, b)| a * b.conj()).collect();
    inv.process(&mut prod);
    prod.iter().map(|c| c.re / n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidalityReport {
    /// Total harmonic distortion of the output waveform.
    pub output_thd: f64,
    /// Share of the non-DC spectral energy of `gamma` in its fundamental.
    pub ppv_fundamental_fraction: f64,
    /// Phase difference of the two fundamentals, degrees in `[0, 180]`.
    pub offset_deg: f64,
}

/// Spectral comparison of `gamma` with the output waveform of `lc`. Both are
/// sampled from phase zero on uniform grids.
pub fn sinusoidality_report(ppv: &PpvCurve, lc: &LimitCycle) -> SinusoidalityReport {
    let out = lc.output_samples();
    let p_out = harmonic_powers(&out);
    let p_ppv = harmonic_powers(&ppv.gamma);
    let total_ppv: f64 = p_ppv.iter().sum();
    let harmonics_out: f64 = p_out.iter().skip(1).sum();
    let c_out = spectrum(&out)[1];
    let c_ppv = spectrum(&ppv.gamma)[1];
    SinusoidalityReport {
        output_thd: (harmonics_out / p_out[0]).sqrt(),
        ppv_fundamental_fraction: if total_ppv > 0.0 {
            p_ppv[0] / total_ppv
        } else {
            0.0
        },
        offset_deg: wrap_pi(c_ppv.arg() - c_out.arg()).abs().to_degrees(),
    }
}
