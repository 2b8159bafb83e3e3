//! CSV emission and the readers used by `lock`, `compare` and `phasesim`.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use phasekit::limit_cycle::LimitCycle;
use phasekit::phase_sim::{
    Coupling, Injection, Kernel, PhaseNetwork, PhaseOscillator, PhaseTrace, Waveform,
};
use phasekit::ppv::{PpvCurve, PpvSource};
use phasekit::prc::PrcCurve;
use serde::Deserialize;

use crate::config::toml_error;
use crate::CliError;

/// 17 significant digits, round-trip exact.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_steady(path: &Path, lc: &LimitCycle, names: &[String]) -> Result<(), CliError> {
    let mut header = vec!["phase_rad".to_string()];
    header.extend(names.iter().cloned());
    let n = lc.grid_size;
    write_rows(
        path,
        &header,
        (0..n).map(|k| {
            let mut r = vec![num(TAU * k as f64 / n as f64)];
            r.extend(lc.row(k).iter().map(|v| num(*v)));
            r
        }),
    )
}

pub fn write_prc(path: &Path, curve: &PrcCurve) -> Result<(), CliError> {
    let header = ["t1_seconds", "theta1_rad", "prc_rad"].map(String::from);
    write_rows(
        path,
        &header,
        curve
            .points
            .iter()
            .map(|p| vec![num(p.t1), num(p.theta1), num(p.prc)]),
    )
}

pub fn write_ppv(path: &Path, ppv: &PpvCurve) -> Result<(), CliError> {
    let header = [
        "theta_rad",
        "gamma_s_per_C",
        "gamma_phase_rad_per_C",
        "source",
    ]
    .map(String::from);
    let phase = ppv.gamma_phase();
    write_rows(
        path,
        &header,
        (0..ppv.theta.len()).map(|k| {
            vec![
                num(ppv.theta[k]),
                num(ppv.gamma[k]),
                num(phase[k]),
                ppv.source.as_str().to_string(),
            ]
        }),
    )
}

pub fn write_trace(path: &Path, trace: &PhaseTrace) -> Result<(), CliError> {
    let mut header = vec!["t_seconds".to_string()];
    for i in 0..trace.n_osc {
        header.push(format!("alpha_{i}_seconds"));
        header.push(format!("phase_{i}_rad"));
    }
    write_rows(
        path,
        &header,
        trace.times.iter().enumerate().map(|(k, t)| {
            let mut r = vec![num(*t)];
            for i in 0..trace.n_osc {
                r.push(num(trace.alpha(k, i)));
                r.push(num(trace.phase(k, i)));
            }
            r
        }),
    )
}

/// `key = value` lines.
pub fn write_report(path: &Path, entries: &[(&str, String)]) -> Result<(), CliError> {
    let text: String = entries
        .iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect();
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, CliError> {
        if !path.is_file() {
            return Err(CliError::missing(path));
        }
        let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
        let header = r
            .headers()
            .map_err(|e| CliError::io(path, e))?
            .iter()
            .map(String::from)
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|x| x.iter().map(String::from).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()
            .map_err(|e| CliError::io(path, e))?;
        Ok(Self { header, rows })
    }

    fn column(&self, path: &Path, name: &str) -> Result<usize, CliError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::io(path, format!("no column `{name}`")))
    }

    fn value(&self, path: &Path, row: usize, col: usize) -> Result<f64, CliError> {
        self.rows[row][col].parse().map_err(|_| {
            CliError::io(
                path,
                format!("row {}: `{}` is not a number", row + 1, self.rows[row][col]),
            )
        })
    }
}

/// Periodic orbit from `steady.csv`; `output` names the reference column.
pub fn read_orbit(path: &Path, output: &str, period: f64) -> Result<LimitCycle, CliError> {
    let t = Table::read(path)?;
    if t.header.first().map(String::as_str) != Some("phase_rad") || t.header.len() < 2 {
        return Err(CliError::io(
            path,
            "expected columns phase_rad, <states...>",
        ));
    }
    let reference = t.column(path, output)? - 1;
    let dim = t.header.len() - 1;
    let mut orbit = Vec::with_capacity(t.rows.len() * dim);
    for k in 0..t.rows.len() {
        for j in 1..=dim {
            orbit.push(t.value(path, k, j)?);
        }
    }
    Ok(LimitCycle::from_orbit(period, orbit, dim, reference)?)
}

/// PPV samples from `ppv.csv` plus `omega0` recovered from the two gamma columns.
pub struct PpvSamples {
    pub theta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub omega0: f64,
    pub source: PpvSource,
}

pub fn read_ppv(path: &Path) -> Result<PpvSamples, CliError> {
    let t = Table::read(path)?;
    let (ct, cg, cp, cs) = (
        t.column(path, "theta_rad")?,
        t.column(path, "gamma_s_per_C")?,
        t.column(path, "gamma_phase_rad_per_C")?,
        t.column(path, "source")?,
    );
    let mut s = PpvSamples {
        theta: Vec::with_capacity(t.rows.len()),
        gamma: Vec::with_capacity(t.rows.len()),
        omega0: 0.0,
        source: PpvSource::FromPrc,
    };
    let mut best = 0.0;
    for k in 0..t.rows.len() {
        let (g, gp) = (t.value(path, k, cg)?, t.value(path, k, cp)?);
        s.theta.push(t.value(path, k, ct)?);
        s.gamma.push(g);
        // largest sample gives the best-conditioned ratio
        if g.abs() > best {
            best = g.abs();
            s.omega0 = gp / g;
        }
    }
    s.source = match t.rows.first().map(|r| r[cs].as_str()) {
        Some("adjoint") => PpvSource::Adjoint,
        Some("from_prc") => PpvSource::FromPrc,
        other => return Err(CliError::io(path, format!("unknown source {other:?}"))),
    };
    if !(s.omega0 > 0.0 && s.omega0.is_finite()) {
        return Err(CliError::io(
            path,
            "cannot recover omega0 from the gamma columns",
        ));
    }
    Ok(s)
}

/// Rebuild a PPV curve from `ppv.csv` and the matching `steady.csv`.
pub fn load_ppv(
    ppv_path: &Path,
    orbit_path: &Path,
    output: &str,
    omega0: Option<f64>,
    harmonics: usize,
) -> Result<PpvCurve, CliError> {
    let s = read_ppv(ppv_path)?;
    let w0 = omega0.unwrap_or(s.omega0);
    let lc = read_orbit(orbit_path, output, TAU / w0)?;
    Ok(PpvCurve::new(lc, s.theta, s.gamma, harmonics, s.source)?)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    #[serde(rename = "oscillator")]
    oscillators: Vec<OscillatorEntry>,
    #[serde(default, rename = "coupling")]
    couplings: Vec<CouplingEntry>,
    #[serde(default, rename = "injection")]
    injections: Vec<InjectionEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OscillatorEntry {
    ppv: PathBuf,
    orbit: PathBuf,
    /// Column of `orbit` coupled to the other oscillators.
    output: String,
    alpha: Option<f64>,
    /// Initial phase in radians; `alpha = phase0 / omega0`.
    phase0: Option<f64>,
    omega0: Option<f64>,
    harmonics: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingEntry {
    from: usize,
    to: usize,
    /// Amperes per volt (per output unit).
    gain: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InjectionEntry {
    target: usize,
    amplitude: f64,
    omega: f64,
    #[serde(default)]
    phase: f64,
}

/// Parse a network description; paths inside are relative to its directory.
pub fn load_network(path: &Path) -> Result<PhaseNetwork, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: NetworkFile = toml::from_str(&text).map_err(|e| toml_error(&text, &e))?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let mut oscillators = Vec::with_capacity(file.oscillators.len());
    for (i, o) in file.oscillators.iter().enumerate() {
        let ppv = load_ppv(
            &dir.join(&o.ppv),
            &dir.join(&o.orbit),
            &o.output,
            o.omega0,
            o.harmonics.unwrap_or(phasekit::ppv::DEFAULT_HARMONICS),
        )?;
        let alpha = match (o.alpha, o.phase0) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    format!("oscillator[{i}]"),
                    "set `alpha` or `phase0`, not both",
                ))
            }
            (Some(a), None) => a,
            (None, Some(p)) => p / ppv.lc.omega0,
            (None, None) => 0.0,
        };
        oscillators.push(PhaseOscillator::new(Arc::new(ppv), alpha)?);
    }
    let n = oscillators.len();
    let mut net = PhaseNetwork::new(oscillators);
    for (k, c) in file.couplings.iter().enumerate() {
        if c.from >= n || c.to >= n {
            return Err(CliError::config(
                format!("coupling[{k}]"),
                format!("index out of range (n = {n})"),
            ));
        }
        net.couplings.push(Coupling {
            from: c.from,
            to: c.to,
            kernel: Kernel::Linear { gain: c.gain },
        });
    }
    for (k, j) in file.injections.iter().enumerate() {
        if j.target >= n {
            return Err(CliError::config(
                format!("injection[{k}].target"),
                format!("out of range (n = {n})"),
            ));
        }
        net.injections.push(Injection {
            target: j.target,
            waveform: Waveform::Cosine {
                amp: j.amplitude,
                omega: j.omega,
                phase: j.phase,
            },
        });
    }
    Ok(net)
}
