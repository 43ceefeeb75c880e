//! Conformal flows `∂g/∂t = ψg` with the coupled fields
//! `∂f/∂t = (n/2 − 1)ψ`, `∂V/∂t = −ψV`, `dτ/dt = −1`, integrated by
//! classical RK4 with a fixed step.
//!
//! With `g = e^{2u}g₀` the flow is `du/dt = ψ/2`. Ricci flow in two
//! dimensions is `ψ = −R`, recomputed from the current curvature at every
//! stage.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{check_field, Error, Result};
use crate::io::csv;
use crate::metric::ConformalMetric;
use crate::operators::{assemble, dirichlet_energy, OperatorKind, OperatorSpec};
use crate::spectral::{mesh_log_det, DEFAULT_T0_FRACTION};
use crate::stencil::grid_derivative;
use crate::thermo::{entropy_conformal, entropy_rate_tau};

/// Bound on `dt·ρ` for the diffusion part of Ricci flow, where `ρ` is a
/// Gershgorin bound on the linearized operator. RK4 is stable up to 2.78 on
/// the negative real axis.
pub const DIFFUSION_GUARD: f64 = 2.5;

/// `dt·max|R|` may not exceed this.
pub const CURVATURE_GUARD: f64 = 0.5;

pub type PsiFn = dyn Fn(f64, &ConformalMetric) -> Vec<f64> + Send + Sync;

/// Where the conformal rate ψ comes from.
#[derive(Clone)]
pub enum PsiSource {
    /// `ψ = −R` of the current metric.
    Ricci2d,
    /// A fixed field.
    Field(Vec<f64>),
    /// `ψ(t, g)`.
    Prescribed(Arc<PsiFn>),
}

impl fmt::Debug for PsiSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiSource::Ricci2d => f.write_str("Ricci2d"),
            PsiSource::Field(v) => write!(f, "Field({} values)", v.len()),
            PsiSource::Prescribed(_) => f.write_str("Prescribed(..)"),
        }
    }
}

impl PsiSource {
    fn eval(&self, t: f64, metric: &ConformalMetric) -> Vec<f64> {
        match self {
            PsiSource::Ricci2d => metric.curvature().scalar.iter().map(|r| -r).collect(),
            PsiSource::Field(v) => v.clone(),
            PsiSource::Prescribed(f) => f(t, metric),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub metric: ConformalMetric,
    pub f: Vec<f64>,
    pub potential: Vec<f64>,
    pub tau: f64,
    pub t: f64,
    /// Dimension in the `f` equation only; the geometry is always a surface.
    pub n: u32,
    /// Whether τ decreases with flow time.
    pub coupled: bool,
}

impl FlowState {
    /// `f ≡ 0`, `V ≡ 0`, `τ = 1`, `t = 0`, `n = 2`, coupled.
    pub fn new(metric: ConformalMetric) -> Self {
        let n = metric.num_vertices();
        FlowState {
            metric,
            f: vec![0.0; n],
            potential: vec![0.0; n],
            tau: 1.0,
            t: 0.0,
            n: 2,
            coupled: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.metric.num_vertices();
        check_field("f", &self.f, n)?;
        check_field("V", &self.potential, n)?;
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if !self.t.is_finite() {
            return Err(Error::invalid("flow time must be finite"));
        }
        Ok(())
    }

    fn f_coefficient(&self) -> f64 {
        self.n as f64 / 2.0 - 1.0
    }

    pub fn spec(&self, kind: OperatorKind) -> OperatorSpec {
        match kind {
            OperatorKind::Laplacian => OperatorSpec::laplacian(),
            OperatorKind::Drifted => OperatorSpec::drifted(self.f.clone()),
            OperatorKind::Schrodinger => OperatorSpec::schrodinger(self.f.clone(), self.potential.clone()),
        }
    }
}

/// Largest step allowed by the Ricci-flow guards at this metric.
pub fn ricci_step_limit(metric: &ConformalMetric) -> f64 {
    let k = metric.curvature();
    let r_max = k.scalar.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let base = metric.base();
    let diag = base.stiffness().diagonal();
    let rho = (0..metric.num_vertices())
        .map(|i| 2.0 * diag[i] * (-2.0 * metric.u()[i]).exp() / base.vertex_areas()[i] + 2.0 * k.gauss[i].abs())
        .fold(0.0f64, f64::max);
    (CURVATURE_GUARD / r_max).min(DIFFUSION_GUARD / rho)
}

/// One RK4 step.
pub fn step(state: &FlowState, psi: &PsiSource, dt: f64) -> Result<FlowState> {
    state.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    if state.coupled && state.tau - dt <= 0.0 {
        return Err(Error::numerical(format!(
            "step of {dt} would take tau = {} to zero or below",
            state.tau
        )));
    }
    if matches!(psi, PsiSource::Ricci2d) {
        let limit = ricci_step_limit(&state.metric);
        if dt > limit {
            return Err(Error::numerical(format!(
                "stability guard: dt = {dt} exceeds {limit:e} for Ricci flow at t = {}",
                state.t
            )));
        }
    }
    let n = state.metric.num_vertices();
    let c = state.f_coefficient();
    let u0 = state.metric.u();
    let v0 = &state.potential;

    // Stage rates for (u, V); f follows ψ with a fixed coefficient.
    let rates = |t: f64, u: &[f64], v: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let psi = psi.eval(t, &state.metric.with_u(u.to_vec())?);
        check_field("psi", &psi, n)?;
        let dv = psi.iter().zip(v).map(|(p, v)| -p * v).collect();
        Ok((psi, dv))
    };
    let shift = |x: &[f64], k: &[f64], h: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    let half = |psi: &[f64]| -> Vec<f64> { psi.iter().map(|p| 0.5 * p).collect() };

    let (p1, v1) = rates(state.t, u0, v0)?;
    let (p2, v2) = rates(state.t + 0.5 * dt, &shift(u0, &half(&p1), 0.5 * dt), &shift(v0, &v1, 0.5 * dt))?;
    let (p3, v3) = rates(state.t + 0.5 * dt, &shift(u0, &half(&p2), 0.5 * dt), &shift(v0, &v2, 0.5 * dt))?;
    let (p4, v4) = rates(state.t + dt, &shift(u0, &half(&p3), dt), &shift(v0, &v3, dt))?;
    let psi_avg: Vec<f64> = (0..n).map(|i| (p1[i] + 2.0 * p2[i] + 2.0 * p3[i] + p4[i]) / 6.0).collect();
    let dv_avg: Vec<f64> = (0..n).map(|i| (v1[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]) / 6.0).collect();

    let u = shift(u0, &half(&psi_avg), dt);
    let potential = shift(v0, &dv_avg, dt);
    let f = if c == 0.0 {
        state.f.clone()
    } else {
        shift(&state.f, &psi_avg, c * dt)
    };
    if u.iter().chain(&potential).chain(&f).any(|x| !x.is_finite()) {
        return Err(Error::numerical(format!("flow state became non-finite at t = {}", state.t + dt)));
    }
    Ok(FlowState {
        metric: state.metric.with_u(u)?,
        f,
        potential,
        tau: if state.coupled { state.tau - dt } else { state.tau },
        t: state.t + dt,
        n: state.n,
        coupled: state.coupled,
    })
}

/// Step count and uniform step covering `[t, t_end]` with steps near `dt`.
fn uniform_steps(t: f64, t_end: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    if !(t_end.is_finite() && t_end > t) {
        return Err(Error::invalid(format!("t_end = {t_end} must exceed the start time {t}")));
    }
    let steps = ((t_end - t) / dt).round().max(1.0) as usize;
    Ok((steps, (t_end - t) / steps as f64))
}

/// Integrates to `t_end` with no sampling.
pub fn integrate(initial: &FlowState, psi: &PsiSource, t_end: f64, dt: f64) -> Result<FlowState> {
    let (steps, h) = uniform_steps(initial.t, t_end, dt)?;
    let mut state = initial.clone();
    for _ in 0..steps {
        state = step(&state, psi, h)?;
    }
    Ok(state)
}

/// A field whose energy is tracked along a flow.
#[derive(Debug, Clone)]
pub struct Probe {
    pub id: String,
    pub kind: OperatorKind,
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub t_end: f64,
    pub dt: f64,
    pub probes: Vec<Probe>,
    pub sample_every: usize,
    /// Zeta determinant of the Laplacian every this many samples; 0 for never.
    pub log_det_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowRecord {
    pub t: f64,
    pub tau: f64,
    #[serde(rename = "S")]
    pub entropy: f64,
    #[serde(rename = "dS_dtau")]
    pub ds_dtau: f64,
    pub area: f64,
    pub gauss_bonnet_residual: f64,
    pub probe_energies: Vec<f64>,
    pub log_det: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowTrace {
    pub chi: i64,
    pub probe_ids: Vec<String>,
    /// Step actually taken, adjusted so the run ends exactly at `t_end`.
    pub dt: f64,
    pub records: Vec<FlowRecord>,
}

impl FlowTrace {
    /// `t,tau,S,dS_dtau,area,gb_residual,probe_<id>...`, plus `log_det` when
    /// it was sampled.
    pub fn to_csv(&self) -> String {
        let mut header: Vec<String> = ["t", "tau", "S", "dS_dtau", "area", "gb_residual"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(self.probe_ids.iter().map(|id| format!("probe_{id}")));
        let with_det = self.records.iter().any(|r| r.log_det.is_some());
        if with_det {
            header.push("log_det".into());
        }
        let rows: Vec<Vec<f64>> = self
            .records
            .iter()
            .map(|r| {
                let mut row = vec![r.t, r.tau, r.entropy, r.ds_dtau, r.area, r.gauss_bonnet_residual];
                row.extend(&r.probe_energies);
                if with_det {
                    row.push(r.log_det.unwrap_or(f64::NAN));
                }
                row
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        csv(&header, &rows)
    }

    pub fn probe_series(&self, index: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.probe_energies[index]).collect()
    }
}

fn record(state: &FlowState, probes: &[Probe], with_det: bool) -> Result<FlowRecord> {
    let chi = state.metric.chi();
    let mut assemblies = BTreeMap::new();
    let mut energies = Vec::with_capacity(probes.len());
    for p in probes {
        if let std::collections::btree_map::Entry::Vacant(e) = assemblies.entry(p.kind) {
            e.insert(assemble(&state.metric, &state.spec(p.kind))?);
        }
        energies.push(dirichlet_energy(&assemblies[&p.kind], &p.phi)?);
    }
    let log_det = if with_det {
        Some(mesh_log_det(&state.metric, DEFAULT_T0_FRACTION)?.0.log_det)
    } else {
        None
    };
    Ok(FlowRecord {
        t: state.t,
        tau: state.tau,
        entropy: entropy_conformal(1.0 / state.tau, chi)?,
        ds_dtau: entropy_rate_tau(state.tau, chi)?,
        area: state.metric.area(),
        gauss_bonnet_residual: state.metric.curvature().gauss_bonnet_residual(chi),
        probe_energies: energies,
        log_det,
    })
}

/// Integrates and samples entropy, curvature and probe energies. The initial
/// state is always sampled, and so is the final one.
pub fn run_flow(initial: &FlowState, psi: &PsiSource, run: &FlowRun) -> Result<FlowTrace> {
    initial.validate()?;
    if run.sample_every == 0 {
        return Err(Error::invalid("sample_every must be at least 1"));
    }
    let n = initial.metric.num_vertices();
    for p in &run.probes {
        check_field(&format!("probe {}", p.id), &p.phi, n)?;
    }
    let (steps, h) = uniform_steps(initial.t, run.t_end, run.dt)?;
    let mut sample = 0usize;
    let mut take = |state: &FlowState| -> Result<FlowRecord> {
        let det = run.log_det_every > 0 && sample.is_multiple_of(run.log_det_every);
        sample += 1;
        record(state, &run.probes, det)
    };
    let mut records = vec![take(initial)?];
    let mut state = initial.clone();
    for i in 1..=steps {
        state = step(&state, psi, h)?;
        if i % run.sample_every == 0 || i == steps {
            records.push(take(&state)?);
        }
    }
    Ok(FlowTrace {
        chi: initial.metric.chi(),
        probe_ids: run.probes.iter().map(|p| p.id.clone()).collect(),
        dt: h,
        records,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub max_rel_energy_drift: f64,
    pub per_probe: BTreeMap<String, f64>,
}

/// Largest `|E(t) − E(0)|/|E(0)|` of each probe; absolute drift when
/// `E(0) = 0`.
pub fn invariance_report(trace: &FlowTrace) -> Result<InvarianceReport> {
    if trace.records.len() < 2 {
        return Err(Error::invalid("invariance needs at least two samples"));
    }
    let mut per_probe = BTreeMap::new();
    for (k, id) in trace.probe_ids.iter().enumerate() {
        let series = trace.probe_series(k);
        let e0 = series[0];
        let scale = if e0 == 0.0 { 1.0 } else { e0.abs() };
        let drift = series.iter().map(|e| (e - e0).abs() / scale).fold(0.0, f64::max);
        per_probe.insert(id.clone(), drift);
    }
    Ok(InvarianceReport {
        max_rel_energy_drift: per_probe.values().copied().fold(0.0, f64::max),
        per_probe,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub is_monotone: bool,
    /// Largest step of S against the predicted direction.
    pub max_violation: f64,
    /// Largest `|dS/dt − (1/2 − χ/12)/τ|` with dS/dt from differences of S.
    pub numeric_vs_closed_form: f64,
    /// Samples at which the derivative was compared.
    pub compared: usize,
}

/// Samples per finite-difference stencil.
const STENCIL: usize = 7;

/// Direction of S along the trace against the sign of `(1/2 − χ/12)/τ`,
/// the rate for `dτ/dt = −1`.
///
/// dS/dt at every sample uses the seven nearest samples, centered where
/// the trace allows, so the comparison is sixth order up to the ends.
pub fn monotonicity_report(trace: &FlowTrace) -> Result<MonotonicityReport> {
    let r = &trace.records;
    if r.len() < 3 {
        return Err(Error::invalid("monotonicity needs at least three samples"));
    }
    let rate = |tau: f64| (0.5 - trace.chi as f64 / 12.0) / tau;
    let mut max_violation = 0.0f64;
    for w in r.windows(2) {
        let ds = w[1].entropy - w[0].entropy;
        let sign = rate(w[0].tau).signum();
        let violation = if sign == 0.0 { ds.abs() } else { (-sign * ds).max(0.0) };
        max_violation = max_violation.max(violation);
    }
    let strict = r.windows(2).all(|w| {
        let sign = rate(w[0].tau);
        let ds = w[1].entropy - w[0].entropy;
        if sign > 0.0 {
            ds > 0.0
        } else if sign < 0.0 {
            ds < 0.0
        } else {
            ds == 0.0
        }
    });

    let t: Vec<f64> = r.iter().map(|x| x.t).collect();
    let entropy: Vec<f64> = r.iter().map(|x| x.entropy).collect();
    let worst = grid_derivative(&t, &entropy, STENCIL)
        .iter()
        .zip(r)
        .map(|(d, x)| (d - rate(x.tau)).abs())
        .fold(0.0f64, f64::max);
    Ok(MonotonicityReport {
        is_monotone: strict,
        max_violation,
        numeric_vs_closed_form: worst,
        compared: r.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderReport {
    pub dt: f64,
    /// `max|u − u_ref|` at `t_end` with steps dt and dt/2; the reference uses dt/8.
    pub error_coarse: f64,
    pub error_fine: f64,
    pub ratio: f64,
}

/// Global-error reduction of the integrator when the step is halved.
pub fn order_study(initial: &FlowState, psi: &PsiSource, t_end: f64, dt: f64) -> Result<OrderReport> {
    let reference = integrate(initial, psi, t_end, dt / 8.0)?;
    let error = |h: f64| -> Result<f64> {
        let s = integrate(initial, psi, t_end, h)?;
        Ok(s.metric
            .u()
            .iter()
            .zip(reference.metric.u())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    };
    let coarse = error(dt)?;
    let fine = error(dt / 2.0)?;
    Ok(OrderReport {
        dt,
        error_coarse: coarse,
        error_fine: fine,
        ratio: coarse / fine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_flat_torus, generate_icosphere};
    use crate::metric::base_metric;
    use std::f64::consts::PI;

    fn sphere(k: u32, radius: f64) -> FlowState {
        let m = base_metric(Arc::new(generate_icosphere(k).unwrap())).unwrap();
        let n = m.num_vertices();
        FlowState::new(m.with_u(vec![radius.ln(); n]).unwrap())
    }

    #[test]
    fn zero_rate_only_moves_time() {
        let s = sphere(2, 1.0);
        let next = step(&s, &PsiSource::Field(vec![0.0; s.metric.num_vertices()]), 0.1).unwrap();
        assert_eq!(next.metric.u(), s.metric.u());
        assert_eq!(next.t, 0.1);
        assert!((next.tau - 0.9).abs() < 1e-15);
        let mut frozen = s.clone();
        frozen.coupled = false;
        assert_eq!(step(&frozen, &PsiSource::Field(vec![0.0; 162]), 0.1).unwrap().tau, 1.0);
    }

    #[test]
    fn constant_rate_scales_area() {
        let s = sphere(2, 1.0);
        let psi = 0.7;
        let end = integrate(&s, &PsiSource::Field(vec![psi; 162]), 0.5, 0.05).unwrap();
        let ratio = end.metric.area() / s.metric.area();
        assert!((ratio - (psi * 0.5f64).exp()).abs() < 1e-9, "{ratio}");
    }

    #[test]
    fn f_is_frozen_in_two_dimensions() {
        let mut s = sphere(2, 1.0);
        s.f = (0..162).map(|i| (i as f64 * 0.37).sin()).collect();
        let next = step(&s, &PsiSource::Ricci2d, 0.01).unwrap();
        assert!(next.f.iter().zip(&s.f).all(|(a, b)| a.to_bits() == b.to_bits()));
        s.n = 4;
        let next = step(&s, &PsiSource::Ricci2d, 0.01).unwrap();
        // n = 4: ∂f/∂t = ψ = −R ≈ −2.
        let df = next.f[0] - s.f[0];
        assert!((df / 0.01 + 2.0).abs() < 0.5, "{df}");
    }

    #[test]
    fn guards() {
        let s = sphere(3, 1.0);
        assert!(matches!(step(&s, &PsiSource::Ricci2d, 0.5), Err(Error::Numerical(_))));
        let mut low = sphere(1, 1.0);
        low.tau = 0.05;
        assert!(matches!(step(&low, &PsiSource::Field(vec![0.0; 42]), 0.1), Err(Error::Numerical(_))));
        assert!(step(&low, &PsiSource::Field(vec![0.0; 42]), -0.1).is_err());
        assert!(step(&low, &PsiSource::Field(vec![0.0; 4]), 0.01).is_err());
    }

    #[test]
    fn ricci_flow_keeps_gauss_bonnet() {
        let s = sphere(2, 2.0);
        let run = FlowRun {
            t_end: 0.5,
            dt: 0.01,
            probes: vec![],
            sample_every: 10,
            log_det_every: 0,
        };
        let trace = run_flow(&s, &PsiSource::Ricci2d, &run).unwrap();
        assert_eq!(trace.records.len(), 6);
        for r in &trace.records {
            assert!(r.gauss_bonnet_residual < 1e-9);
        }
        // Area of a shrinking round sphere falls at rate 8π.
        let a = &trace.records;
        let rate = (a[0].area - a[5].area) / 0.5;
        assert!((rate - 8.0 * PI).abs() < 1e-6 * 8.0 * PI, "{rate}");
    }

    #[test]
    fn torus_entropy_is_closed_form() {
        let m = base_metric(Arc::new(generate_flat_torus(8, 8, 1.0).unwrap())).unwrap();
        let x: Vec<f64> = m.mesh().quotient_coords().unwrap().iter().map(|c| c[0]).collect();
        let psi = PsiSource::Prescribed(Arc::new(move |t, _| {
            x.iter().map(|x| 0.3 * (2.0 * PI * x).sin() * (1.0 + t)).collect()
        }));
        let run = FlowRun {
            t_end: 0.5,
            dt: 0.01,
            probes: vec![],
            sample_every: 5,
            log_det_every: 0,
        };
        let trace = run_flow(&FlowState::new(m), &psi, &run).unwrap();
        for r in &trace.records {
            assert!((r.entropy - 0.5 * ((1.0 / r.tau).ln() - 1.0)).abs() < 1e-10);
        }
        let csv = trace.to_csv();
        assert!(csv.starts_with("t,tau,S,dS_dtau,area,gb_residual\n"));
    }

    #[test]
    fn probe_energies() {
        let mut s = sphere(2, 2.0);
        let z: Vec<f64> = s.metric.mesh().vertices().iter().map(|p| p[2]).collect();
        s.f = z.iter().map(|z| 0.3 * z).collect();
        s.potential = vec![1.5; 162];
        let probes = vec![
            Probe { id: "lap".into(), kind: OperatorKind::Laplacian, phi: z.clone() },
            Probe { id: "drift".into(), kind: OperatorKind::Drifted, phi: z.clone() },
            Probe { id: "schr".into(), kind: OperatorKind::Schrodinger, phi: z },
        ];
        let drift = |dt: f64| {
            let run = FlowRun { t_end: 0.4, dt, probes: probes.clone(), sample_every: 4, log_det_every: 0 };
            invariance_report(&run_flow(&s, &PsiSource::Ricci2d, &run).unwrap()).unwrap()
        };
        let coarse = drift(0.02);
        assert!(coarse.per_probe["lap"] <= 1e-12);
        assert!(coarse.per_probe["drift"] <= 1e-12);
        let fine = drift(0.01);
        let schr = (coarse.per_probe["schr"], fine.per_probe["schr"]);
        assert!(schr.0 > 0.0 && schr.0 >= 8.0 * schr.1, "{schr:?}");
    }

    #[test]
    fn monotone_entropy_and_synthetic_traces() {
        let synthetic = |chi: i64| {
            let h = 0.0025;
            let records = (0..=320)
                .map(|i| {
                    let t = i as f64 * h;
                    let tau = 1.0 - t;
                    FlowRecord {
                        t,
                        tau,
                        entropy: entropy_conformal(1.0 / tau, chi).unwrap(),
                        ds_dtau: entropy_rate_tau(tau, chi).unwrap(),
                        area: 1.0,
                        gauss_bonnet_residual: 0.0,
                        probe_energies: vec![],
                        log_det: None,
                    }
                })
                .collect();
            monotonicity_report(&FlowTrace { chi, probe_ids: vec![], dt: h, records }).unwrap()
        };
        let six = synthetic(6);
        assert!(six.is_monotone);
        assert_eq!(six.numeric_vs_closed_form, 0.0);
        for chi in [2, -2] {
            let r = synthetic(chi);
            assert!(r.is_monotone && r.max_violation == 0.0);
            assert!(r.numeric_vs_closed_form < 1e-8, "{}", r.numeric_vs_closed_form);
        }
        let empty = FlowTrace { chi: 2, probe_ids: vec![], dt: 0.1, records: vec![] };
        assert!(monotonicity_report(&empty).is_err());
        assert!(invariance_report(&empty).is_err());
    }

    #[test]
    fn rk4_order() {
        let s = sphere(2, 2.0);
        let report = order_study(&s, &PsiSource::Ricci2d, 0.4, 0.02).unwrap();
        assert!(report.ratio >= 12.0, "{report:?}");
    }
}
