//! Concrete oscillators: the polynomial memristor oscillator, van der Pol, and
//! a three-stage inverting ring.
//!
//! None of the free-running fields carry an injection term. Injected current
//! reaches a model only through an [`InjectionPort`]: as a state jump
//! (`delta = q * gain`) or as a forcing term (`gain * b(t)`).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynsys::OdeSystem;
use crate::error::{Error, Result};

/// Where injected current enters a model and how it scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionPort {
    pub state_index: usize,
    /// State units per coulomb (`1 / C` for a capacitive node).
    pub gain: f64,
}

impl InjectionPort {
    pub fn new(state_index: usize, gain: f64) -> Result<Self> {
        if !gain.is_finite() || gain == 0.0 {
            return Err(Error::arg(
                "gain",
                "injection gain must be finite and nonzero",
            ));
        }
        Ok(Self { state_index, gain })
    }

    /// State increment produced by an injected charge `q`.
    pub fn delta(&self, dim: usize, q: f64) -> Vec<f64> {
        let mut d = vec![0.0; dim];
        d[self.state_index] = q * self.gain;
        d
    }
}

/// Coefficients of the memristor oscillator. Units: volts, ohms, farads,
/// siemens per `x^i` for `d`, per-second rates for the state equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemristorParams {
    #[serde(rename = "Vdc")]
    pub vdc: f64,
    #[serde(rename = "Rs")]
    pub rs: f64,
    #[serde(rename = "Cp")]
    pub cp: f64,
    /// Conductance polynomial `G(x) = sum d_i x^i`, i = 0..5.
    pub d: [f64; 6],
    pub a0: f64,
    pub a1: f64,
    pub b2: f64,
    /// `c2, c4, c6, c8, c10`, multiplying `Vm^(2i) x^i`.
    pub c: [f64; 5],
}

impl MemristorParams {
    /// Illustrative coefficients, tuned by a scan over `d1`, that oscillate at
    /// `Rs = 1 kOhm, Cp = 3500 pF` and near-sinusoidally at `Rs = 810 Ohm, Cp = 800 pF`.
    ///
    /// The state equation is a cubic in `x` (bistable at fixed `Vm`) strongly
    /// coupled to `Vm` through `b2`; it is not fitted to any measured device.
    pub fn illustrative(rs: f64, cp: f64) -> Self {
        const K: f64 = 4.0e6;
        const B2: f64 = 4.0e9;
        let d0 = 1.0e-4;
        let d1 = 2.5e-4;
        Self {
            vdc: 1.0 + 1.0e3 * (d0 + 2.0 * d1),
            rs,
            cp,
            d: [d0, d1, 0.0, 0.0, 0.0, 0.0],
            a0: 2.0 * K / 3.0 - B2,
            a1: -3.0 * K,
            b2: B2,
            c: [0.0, 2.0 * K, -K / 3.0, 0.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rs > 0.0) || !self.rs.is_finite() {
            return Err(Error::arg(
                "Rs",
                format!("must be positive, got {}", self.rs),
            ));
        }
        if !(self.cp > 0.0) || !self.cp.is_finite() {
            return Err(Error::arg(
                "Cp",
                format!("must be positive, got {}", self.cp),
            ));
        }
        let named = [
            ("Vdc", self.vdc),
            ("a0", self.a0),
            ("a1", self.a1),
            ("b2", self.b2),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(Error::arg(name, "must be finite"));
            }
        }
        if self.d.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("d", "coefficients must be finite"));
        }
        if self.c.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("c", "coefficients must be finite"));
        }
        Ok(())
    }

    fn conductance(&self, x: f64) -> (f64, f64) {
        // value and derivative of sum d_i x^i
        let mut g = 0.0;
        let mut dg = 0.0;
        for &di in self.d.iter().rev() {
            dg = dg * x + g;
            g = g * x + di;
        }
        (g, dg)
    }

    fn cross_poly(&self, w: f64) -> (f64, f64) {
        // P(w) = sum_{i=1..5} c_{2i} w^i and P'(w)
        let mut p = 0.0;
        let mut dp = 0.0;
        for &ci in self.c.iter().rev() {
            dp = dp * w + p;
            p = p * w + ci;
        }
        // p currently holds sum c_i w^(i-1); shift by one power
        (p * w, p + dp * w)
    }
}

/// Free-running memristor oscillator field at `(Vm, x)`.
pub fn memristor_field(state: [f64; 2], p: &MemristorParams) -> [f64; 2] {
    let [vm, x] = state;
    let (g, _) = p.conductance(x);
    let dvm = (p.vdc - vm) / (p.rs * p.cp) - vm / p.cp * g;
    let w = vm * vm * x;
    let (cross, _) = p.cross_poly(w);
    let dx = p.a0 + p.a1 * x + p.b2 * vm * vm + cross;
    [dvm, dx]
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemristorOscillator {
    pub params: MemristorParams,
}

impl MemristorOscillator {
    pub fn new(params: MemristorParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    /// Port at the output node: `dVm = q / Cp`.
    pub fn output_port(&self) -> InjectionPort {
        InjectionPort {
            state_index: 0,
            gain: 1.0 / self.params.cp,
        }
    }
}

impl OdeSystem for MemristorOscillator {
    fn dim(&self) -> usize {
        2
    }
    fn state_names(&self) -> Vec<String> {
        vec!["Vm".into(), "x".into()]
    }
    fn params(&self) -> Vec<(String, f64)> {
        let p = &self.params;
        let mut out = vec![
            ("Vdc".to_string(), p.vdc),
            ("Rs".to_string(), p.rs),
            ("Cp".to_string(), p.cp),
        ];
        out.extend(p.d.iter().enumerate().map(|(i, v)| (format!("d{i}"), *v)));
        out.extend([
            ("a0".into(), p.a0),
            ("a1".into(), p.a1),
            ("b2".into(), p.b2),
        ]);
        out.extend(
            p.c.iter()
                .enumerate()
                .map(|(i, v)| (format!("c{}", 2 * (i + 1)), *v)),
        );
        out
    }
    fn rhs(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
        let f = memristor_field([x[0], x[1]], &self.params);
        dx[0] = f[0];
        dx[1] = f[1];
    }
    fn jacobian(&self, _t: f64, s: &[f64], jac: &mut [f64]) -> bool {
        let p = &self.params;
        let (vm, x) = (s[0], s[1]);
        let (g, dg) = p.conductance(x);
        let (_, dp) = p.cross_poly(vm * vm * x);
        jac[0] = -1.0 / (p.rs * p.cp) - g / p.cp;
        jac[1] = -vm / p.cp * dg;
        jac[2] = 2.0 * p.b2 * vm + dp * 2.0 * vm * x;
        jac[3] = p.a1 + dp * vm * vm;
        true
    }
}

/// van der Pol field `(y, mu (1 - x^2) y - x)`.
pub fn vdp_field(state: [f64; 2], mu: f64) -> Result<[f64; 2]> {
    if !(mu > 0.0) {
        return Err(Error::arg("mu", format!("must be positive, got {mu}")));
    }
    Ok(vdp_unchecked(state, mu))
}

#[inline]
fn vdp_unchecked([x, y]: [f64; 2], mu: f64) -> [f64; 2] {
    [y, mu * (1.0 - x * x) * y - x]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanDerPol {
    pub mu: f64,
}

impl VanDerPol {
    /// Read as an LC tank with a nonlinear conductance, `y` is the capacitor
    /// node voltage and `x` the inductor current, so injected current enters
    /// the `y` equation (the forcing slot of `x'' - mu (1 - x^2) x' + x = F`).
    pub const NODE: usize = 1;

    pub fn node_port() -> InjectionPort {
        InjectionPort {
            state_index: Self::NODE,
            gain: 1.0,
        }
    }

    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::arg("mu", format!("must be positive, got {mu}")));
        }
        Ok(Self { mu })
    }
}

impl OdeSystem for VanDerPol {
    fn dim(&self) -> usize {
        2
    }
    fn state_names(&self) -> Vec<String> {
        vec!["x".into(), "y".into()]
    }
    fn params(&self) -> Vec<(String, f64)> {
        vec![("mu".into(), self.mu)]
    }
    fn rhs(&self, _t: f64, s: &[f64], dx: &mut [f64]) {
        let f = vdp_unchecked([s[0], s[1]], self.mu);
        dx[0] = f[0];
        dx[1] = f[1];
    }
    fn jacobian(&self, _t: f64, s: &[f64], jac: &mut [f64]) -> bool {
        let (x, y) = (s[0], s[1]);
        jac[0] = 0.0;
        jac[1] = 1.0;
        jac[2] = -2.0 * self.mu * x * y - 1.0;
        jac[3] = self.mu * (1.0 - x * x);
        true
    }
}

/// Three-stage inverting ring: `dv_k/dt = (-v_k - tanh(gain * v_{k-1})) / tau`.
pub fn ring3_field(state: [f64; 3], gain: f64, tau: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for k in 0..3 {
        let prev = state[(k + 2) % 3];
        out[k] = (-state[k] - (gain * prev).tanh()) / tau;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ring3 {
    pub gain: f64,
    pub tau: f64,
}

impl Ring3 {
    pub fn new(gain: f64, tau: f64) -> Result<Self> {
        if !(gain > 1.0) || !gain.is_finite() {
            return Err(Error::arg(
                "gain",
                format!("must exceed 1 for oscillation, got {gain}"),
            ));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::arg("tau", format!("must be positive, got {tau}")));
        }
        Ok(Self { gain, tau })
    }
}

impl OdeSystem for Ring3 {
    fn dim(&self) -> usize {
        3
    }
    fn state_names(&self) -> Vec<String> {
        vec!["v1".into(), "v2".into(), "v3".into()]
    }
    fn params(&self) -> Vec<(String, f64)> {
        vec![("gain".into(), self.gain), ("tau".into(), self.tau)]
    }
    fn rhs(&self, _t: f64, s: &[f64], dx: &mut [f64]) {
        let f = ring3_field([s[0], s[1], s[2]], self.gain, self.tau);
        dx.copy_from_slice(&f);
    }
    fn jacobian(&self, _t: f64, s: &[f64], jac: &mut [f64]) -> bool {
        jac.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..3 {
            let prev = (k + 2) % 3;
            let th = (self.gain * s[prev]).tanh();
            jac[k * 3 + k] = -1.0 / self.tau;
            jac[k * 3 + prev] = -self.gain * (1.0 - th * th) / self.tau;
        }
        true
    }
}

/// `[injection]` table of a parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionConfig {
    /// State name receiving the current.
    pub state: Option<String>,
    pub gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemristorConfig {
    #[serde(rename = "Vdc")]
    pub vdc: f64,
    #[serde(rename = "Rs")]
    pub rs: f64,
    #[serde(rename = "Cp")]
    pub cp: f64,
    pub d: [f64; 6],
    pub a0: f64,
    pub a1: f64,
    pub b2: f64,
    pub c: [f64; 5],
    pub injection: Option<InjectionConfig>,
    pub output: Option<String>,
    pub initial_state: Option<Vec<f64>>,
}

impl MemristorConfig {
    pub fn params(&self) -> MemristorParams {
        MemristorParams {
            vdc: self.vdc,
            rs: self.rs,
            cp: self.cp,
            d: self.d,
            a0: self.a0,
            a1: self.a1,
            b2: self.b2,
            c: self.c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VdpConfig {
    pub mu: f64,
    pub injection: Option<InjectionConfig>,
    pub output: Option<String>,
    pub initial_state: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ring3Config {
    pub gain: f64,
    pub tau: f64,
    pub injection: Option<InjectionConfig>,
    pub output: Option<String>,
    pub initial_state: Option<Vec<f64>>,
}

/// Parameter-file description of one oscillator, selected by `model = "..."`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelConfig {
    Memristor(MemristorConfig),
    Vdp(VdpConfig),
    Ring3(Ring3Config),
}

/// Default node capacitance behind the ring3 injection gain (1 pF).
pub const RING3_NODE_CAPACITANCE: f64 = 1.0e-12;

/// A built oscillator ready for the pipeline.
#[derive(Clone)]
pub struct Model {
    pub system: Arc<dyn OdeSystem>,
    pub port: InjectionPort,
    /// Output state used for the phase reference and coupling.
    pub output_index: usize,
    pub initial_state: Vec<f64>,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("states", &self.system.state_names())
            .field("params", &self.system.params())
            .field("port", &self.port)
            .field("output_index", &self.output_index)
            .finish()
    }
}

impl ModelConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ParamFile(e.to_string()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Memristor(_) => "memristor",
            ModelConfig::Vdp(_) => "vdp",
            ModelConfig::Ring3(_) => "ring3",
        }
    }

    pub fn build(&self) -> Result<Model> {
        let (system, default_port, injection, output, x0, default_x0): (
            Arc<dyn OdeSystem>,
            InjectionPort,
            &Option<InjectionConfig>,
            &Option<String>,
            &Option<Vec<f64>>,
            Vec<f64>,
        ) = match self {
            ModelConfig::Memristor(c) => {
                let m = MemristorOscillator::new(c.params())?;
                let port = m.output_port();
                (
                    Arc::new(m),
                    port,
                    &c.injection,
                    &c.output,
                    &c.initial_state,
                    vec![1.0, 2.1],
                )
            }
            ModelConfig::Vdp(c) => {
                let m = VanDerPol::new(c.mu)?;
                let port = VanDerPol::node_port();
                (
                    Arc::new(m),
                    port,
                    &c.injection,
                    &c.output,
                    &c.initial_state,
                    vec![0.1, 0.0],
                )
            }
            ModelConfig::Ring3(c) => {
                let m = Ring3::new(c.gain, c.tau)?;
                let port = InjectionPort {
                    state_index: 0,
                    gain: 1.0 / RING3_NODE_CAPACITANCE,
                };
                (
                    Arc::new(m),
                    port,
                    &c.injection,
                    &c.output,
                    &c.initial_state,
                    vec![0.1, 0.0, 0.0],
                )
            }
        };
        let names = system.state_names();
        let lookup = |key: &'static str, name: &str| -> Result<usize> {
            names.iter().position(|n| n == name).ok_or_else(|| {
                Error::arg(
                    key,
                    format!("unknown state `{name}`, expected one of {names:?}"),
                )
            })
        };
        let mut port = default_port;
        if let Some(inj) = injection {
            if let Some(state) = &inj.state {
                port.state_index = lookup("injection.state", state)?;
            }
            if let Some(gain) = inj.gain {
                port = InjectionPort::new(port.state_index, gain)
                    .map_err(|_| Error::arg("injection.gain", "must be finite and nonzero"))?;
            }
        }
        let output_index = match output {
            Some(name) => lookup("output", name)?,
            // the node that receives the current
            None => default_port.state_index,
        };
        let initial_state = match x0 {
            Some(v) if v.len() != system.dim() => {
                return Err(Error::arg(
                    "initial_state",
                    format!("expected {} components", system.dim()),
                ))
            }
            Some(v) => v.clone(),
            None => default_x0,
        };
        Ok(Model {
            system,
            port,
            output_index,
            initial_state,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_params(vdc: f64, rs: f64, cp: f64) -> MemristorParams {
        MemristorParams {
            vdc,
            rs,
            cp,
            d: [0.0; 6],
            a0: 0.0,
            a1: 0.0,
            b2: 0.0,
            c: [0.0; 5],
        }
    }

    #[test]
    fn degenerate_memristor_is_rc_charging() {
        let p = zero_params(1.0, 1.0e3, 3500e-12);
        let f = memristor_field([0.0, 0.7], &p);
        assert!((f[0] - 1.0 / 3.5e-6).abs() / f[0] < 1e-12);
        assert!((f[0] - 2.8571e5).abs() / 2.8571e5 < 1e-4);
        assert_eq!(f[1], 0.0);
    }

    #[test]
    fn state_equation_is_linear_at_zero_voltage() {
        let mut p = MemristorParams::illustrative(1.0e3, 3.5e-9);
        p.c = [0.0; 5];
        for x in [-2.0, 0.0, 0.3, 5.0] {
            let f = memristor_field([0.0, x], &p);
            assert_eq!(f[1], p.a0 + p.a1 * x);
        }
    }

    #[test]
    fn memristor_jacobian_matches_finite_differences() {
        let m = MemristorOscillator::new(MemristorParams::illustrative(810.0, 8e-10)).unwrap();
        let s = [1.01, 2.3];
        let mut closed = [0.0; 4];
        let mut fd = [0.0; 4];
        assert!(m.jacobian(0.0, &s, &mut closed));
        crate::dynsys::fd_jacobian(&m, 0.0, &s, &mut fd);
        for (a, b) in closed.iter().zip(&fd) {
            assert!(
                (a - b).abs() <= 1e-6 * a.abs().max(1.0),
                "{closed:?} vs {fd:?}"
            );
        }
    }

    #[test]
    fn vdp_examples() {
        assert_eq!(vdp_field([0.0, 0.0], 1.0).unwrap(), [0.0, 0.0]);
        assert_eq!(vdp_field([1.0, 1.0], 1.0).unwrap(), [1.0, -1.0]);
        let f = vdp_field([2.0, 0.5], 0.2).unwrap();
        assert_eq!(f[0], 0.5);
        assert!((f[1] - (-2.3)).abs() < 1e-15);
        assert!(vdp_field([1.0, 1.0], 0.0).is_err());
        assert!(VanDerPol::new(-1.0).is_err());
    }

    #[test]
    fn ring3_symmetry_and_origin() {
        let f = ring3_field([0.3, 0.3, 0.3], 4.0, 1e-9);
        assert_eq!(f[0], f[1]);
        assert_eq!(f[1], f[2]);
        assert_eq!(ring3_field([0.0; 3], 7.0, 1.0), [0.0; 3]);
        assert!(Ring3::new(0.5, 1.0).is_err());
        assert!(Ring3::new(2.0, 0.0).is_err());
    }

    #[test]
    fn ring3_jacobian_matches_finite_differences() {
        let r = Ring3::new(4.0, 1.0).unwrap();
        let s = [0.2, -0.4, 0.9];
        let mut closed = [0.0; 9];
        let mut fd = [0.0; 9];
        r.jacobian(0.0, &s, &mut closed);
        crate::dynsys::fd_jacobian(&r, 0.0, &s, &mut fd);
        for (a, b) in closed.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn port_validation() {
        assert!(InjectionPort::new(0, 0.0).is_err());
        assert!(InjectionPort::new(0, f64::NAN).is_err());
        let p = InjectionPort::new(1, 2.0).unwrap();
        assert_eq!(p.delta(3, 0.25), vec![0.0, 0.5, 0.0]);
    }

    #[test]
    fn parameter_file_roundtrip() {
        let text = r#"
model = "memristor"
Vdc = 1.6
Rs = 1000.0
Cp = 3.5e-9
d = [1e-4, 2.5e-4, 0, 0, 0, 0]
a0 = -4e9
a1 = -1.2e7
b2 = 4e9
c = [0, 8e6, -1.3e6, 0, 0]

[injection]
state = "Vm"
gain = 2.857142857142857e8
"#;
        let cfg = ModelConfig::from_toml_str(text).unwrap();
        let m = cfg.build().unwrap();
        assert_eq!(m.port.state_index, 0);
        assert_eq!(m.system.dim(), 2);

        let bad = text.replace("Rs = 1000.0", "Rs = -1.0");
        let err = ModelConfig::from_toml_str(&bad)
            .unwrap()
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("Rs"), "{err}");

        let typo = text.replace("a1 =", "a_1 =");
        assert!(ModelConfig::from_toml_str(&typo).is_err());

        let vdp = ModelConfig::from_toml_str("model = \"vdp\"\nmu = 1.0\n").unwrap();
        let m = vdp.build().unwrap();
        assert_eq!(
            m.port,
            InjectionPort {
                state_index: 1,
                gain: 1.0
            }
        );
        assert_eq!(m.output_index, 1);
        assert!(ModelConfig::from_toml_str("model = \"vdp\"\nmu = 1.0\nnu = 2.0\n").is_err());
        assert!(
            ModelConfig::from_toml_str("model = \"vdp\"\nmu = 1.0\noutput = \"z\"\n")
                .unwrap()
                .build()
                .is_err()
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        // term-by-term reference with explicit powers
        fn brute(state: [f64; 2], p: &MemristorParams) -> [f64; 2] {
            let [vm, x] = state;
            let g: f64 = (0..6).map(|i| p.d[i] * x.powi(i as i32)).sum();
            let dvm = (p.vdc - vm) / (p.rs * p.cp) - vm / p.cp * g;
            let mut dx = p.a0 + p.a1 * x + p.b2 * vm.powi(2);
            for i in 1..=5 {
                dx += p.c[i - 1] * vm.powi(2 * i as i32) * x.powi(i as i32);
            }
            [dvm, dx]
        }

        fn rel(a: f64, b: f64, scale: f64) -> f64 {
            (a - b).abs() / scale.max(f64::MIN_POSITIVE)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]
            #[test]
            fn memristor_matches_brute_force(
                vm in -1.5f64..1.5, x in -1.5f64..1.5,
                d in proptest::array::uniform6(-1e-3f64..1e-3),
                c in proptest::array::uniform5(-1e6f64..1e6),
            ) {
                let mut p = MemristorParams::illustrative(1e3, 3.5e-9);
                p.d = d;
                p.c = c;
                let a = memristor_field([vm, x], &p);
                let b = brute([vm, x], &p);
                // scale by the magnitude of the largest term so cancellation does not dominate
                let s0 = p.vdc.abs() / (p.rs * p.cp) + vm.abs() / p.cp * d.iter().map(|v| v.abs()).sum::<f64>() + b[0].abs();
                let s1 = p.a0.abs() + p.a1.abs() * x.abs() + p.b2.abs() * vm * vm
                    + (1..=5).map(|i| c[i - 1].abs() * vm.abs().powi(2 * i as i32) * x.abs().powi(i as i32)).sum::<f64>();
                prop_assert!(rel(a[0], b[0], s0) < 1e-12);
                prop_assert!(rel(a[1], b[1], s1) < 1e-12);
            }

            #[test]
            fn vdp_is_odd(x in -5.0f64..5.0, y in -5.0f64..5.0, mu in 0.01f64..10.0) {
                let f = vdp_field([x, y], mu).unwrap();
                let g = vdp_field([-x, -y], mu).unwrap();
                prop_assert_eq!(f[0], -g[0]);
                prop_assert_eq!(f[1], -g[1]);
            }
        }
    }
}
