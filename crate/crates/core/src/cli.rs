//! The `zetaflow` command line: `zetaflow <command> --config <path>
//! [--key value ...] --out <dir>`.
//!
//! Every command writes `result.json` and possibly CSV files to the output
//! directory. Failures print one JSON object to stderr and exit with 2 for
//! input problems or 3 for numerical ones, including checks a command
//! asserts and finds violated.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, ValueEnum};
use serde_json::{json, Map, Value};

use crate::config::{metric_of, Config, FieldSpec, MeshSetup, MeshSource};
use crate::error::{Error, Result};
use crate::flows::{
    invariance_report, monotonicity_report, order_study, run_flow, FlowRun, FlowState, Probe, PsiSource,
};
use crate::io::{csv, json_f64, precise};
use crate::metric::{vertex_field_csv, ConformalMetric};
use crate::operators::OperatorKind;
use crate::oracle::{
    exact_partition, gibbs_identity, gibbs_stats, jacobian, mc_gibbs_stats, mc_partition, verify_classic,
    FiniteModel, MeasureFrame, ModelJson,
};
use crate::spectral::{
    analytic_sphere_spectrum, analytic_torus_spectrum, log_det_zeta, mesh_log_det, polyakov_lhs, polyakov_rhs,
    Spectrum, DEFAULT_T0_FRACTION,
};
use crate::thermo::{
    entropy_conformal, entropy_from_free_energy, entropy_rate_tau, evaluate_W, free_energy, gibbs_entropy,
    log_partition_conformal, ThermoState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Counts, Euler characteristic, area and Gauss-Bonnet residual.
    MeshInfo,
    /// Zeta-regularized log determinant of a Laplacian.
    Logdet,
    /// Both sides of the conformal anomaly formula for g = e^ψ h.
    Polyakov,
    /// Conformal or Ricci flow with entropy and probe-energy reports.
    Flow,
    /// Finite-dimensional Gaussian identities on seeded models.
    Oracle,
    /// Partition function and entropy sweep over β.
    Entropy,
}

#[derive(Debug, Parser)]
#[command(name = "zetaflow", version, about = "Spectral geometry experiments on triangulated surfaces")]
struct Invocation {
    command: Command,
    /// `--config <path> [--key value ...] --out <dir>`
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0..)]
    args: Vec<String>,
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Outputs {
    pub result: Value,
    /// Extra files as (name, contents).
    pub files: Vec<(String, String)>,
    /// A check the command asserts that did not hold. Outputs are still
    /// written; the process exits with 3.
    pub failure: Option<String>,
}

impl Outputs {
    fn new(result: Value) -> Self {
        Outputs {
            result,
            files: Vec::new(),
            failure: None,
        }
    }
}

/// Runs the binary on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let invocation = match Invocation::try_parse_from(args) {
        Ok(v) => v,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            report("usage", &e.to_string().trim().replace('\n', " "), 2);
            return 2;
        }
    };
    match execute(invocation.command, &invocation.args) {
        Ok(None) => 0,
        Ok(Some(failure)) => {
            report("check_failed", &failure, 3);
            3
        }
        Err(e) => {
            let code = e.exit_code();
            report(e.kind(), &e.to_string(), code);
            code
        }
    }
}

fn report(kind: &str, message: &str, code: i32) {
    let obj = json!({"error": {"kind": kind, "message": message, "exit_code": code}});
    eprintln!("{obj}");
}

/// Loads the configuration, runs the command and writes its outputs.
/// Returns the failed check, if any.
fn execute(command: Command, args: &[String]) -> Result<Option<String>> {
    let mut config_path = None;
    let mut out = None;
    let mut overrides = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(Error::invalid(format!("unexpected argument {arg:?}")));
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| Error::invalid(format!("--{flag} needs a value")))?;
                (flag.to_string(), v.clone())
            }
        };
        match key.as_str() {
            "config" => config_path = Some(PathBuf::from(value)),
            "out" => out = Some(PathBuf::from(value)),
            _ => overrides.push((key, value)),
        }
    }
    let config_path = config_path.ok_or_else(|| Error::invalid("missing --config <path>"))?;
    let out = out.ok_or_else(|| Error::invalid("missing --out <dir>"))?;
    let mut config = Config::load(&config_path)?;
    for (k, v) in &overrides {
        config.set(k, v);
    }
    let outputs = run_command(command, &config)?;
    write_outputs(&out, &outputs)?;
    Ok(outputs.failure)
}

pub fn run_command(command: Command, config: &Config) -> Result<Outputs> {
    match command {
        Command::MeshInfo => cmd_mesh_info(config),
        Command::Logdet => cmd_logdet(config),
        Command::Polyakov => cmd_polyakov(config),
        Command::Flow => cmd_flow(config),
        Command::Oracle => cmd_oracle(config),
        Command::Entropy => cmd_entropy(config),
    }
}

pub fn write_outputs(dir: &Path, outputs: &Outputs) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(&outputs.result)
        .map_err(|e| Error::numerical(format!("cannot serialize result: {e}")))?;
    text.push('\n');
    std::fs::write(dir.join("result.json"), text)?;
    for (name, contents) in &outputs.files {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    precise(serde_json::to_value(v).expect("report types serialize"))
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

pub fn cmd_mesh_info(config: &Config) -> Result<Outputs> {
    let setup = MeshSetup::from_config(config)?;
    let curvature_csv = config.get_bool("curvature_csv")?;
    config.finish()?;
    let metric = setup.metric()?;
    let topo = metric.mesh().topology();
    let k = metric.curvature();
    let mut out = Outputs::new(json!({
        "V": topo.vertices,
        "E": topo.edges,
        "F": topo.faces,
        "chi": topo.chi,
        "genus": topo.genus,
        "area": json_f64(metric.area()),
        "gauss_bonnet_residual": json_f64(k.gauss_bonnet_residual(topo.chi)),
    }));
    if curvature_csv {
        out.files.push(("curvature.csv".into(), vertex_field_csv(&k.gauss)));
    }
    Ok(out)
}

pub fn cmd_logdet(config: &Config) -> Result<Outputs> {
    let beta = positive("beta", config.get_or("beta", 1.0)?)?;
    let sweep = config.get_list("t0_sweep")?;
    if let Some(s) = &sweep {
        for &m in s {
            positive("t0_sweep entry", m)?;
        }
    }
    let smallest = sweep.iter().flatten().fold(1.0f64, |a, &b| a.min(b));
    let kind = config.get_str("spectrum").unwrap_or("mesh").to_string();
    let (spectrum, t0): (Spectrum, f64) = match kind.as_str() {
        "sphere" => {
            let l_max = config.get_or("l_max", 200usize)?;
            let radius = config.get_or("radius", 1.0)?;
            let t0 = positive("t0", config.get_or("t0", 1.0)?)?;
            config.finish()?;
            (analytic_sphere_spectrum(l_max, radius)?, t0)
        }
        "torus" => {
            let k_max = config.get_or("k_max", 60usize)?;
            let area = config.get_or("area", 1.0)?;
            let t0 = positive("t0", config.get_or("t0", 1.0)?)?;
            config.finish()?;
            (analytic_torus_spectrum(k_max, area)?, t0)
        }
        "mesh" => {
            let setup = MeshSetup::from_config(config)?;
            let t0 = config.get::<f64>("t0")?;
            let fraction = config.get::<f64>("t0_fraction")?;
            if t0.is_some() && fraction.is_some() {
                return Err(Error::invalid("give t0 or t0_fraction, not both"));
            }
            config.finish()?;
            let metric = setup.metric()?;
            let scale = metric.area() / (4.0 * PI);
            let t0 = match t0 {
                Some(t) => positive("t0", t)?,
                None => positive("t0_fraction", fraction.unwrap_or(DEFAULT_T0_FRACTION))? * scale,
            };
            let (_, spectrum) = mesh_log_det(&metric, smallest * t0 / scale)?;
            (spectrum, t0)
        }
        other => {
            return Err(Error::invalid(format!(
                "spectrum must be sphere, torus or mesh, got {other:?}"
            )))
        }
    };
    // Scaling the operator by β scales the natural time by 1/β.
    let scaled = if beta == 1.0 { spectrum } else { spectrum.scaled(beta)? };
    let t0 = t0 / beta;
    let z = log_det_zeta(&scaled, t0)?;
    let mut result = z.to_json();
    let obj = result.as_object_mut().expect("object");
    obj.insert("spectrum".into(), json!(kind));
    obj.insert("beta".into(), json_f64(beta));
    obj.insert("eigenvalues".into(), json!(scaled.len()));
    obj.insert("kernel_dim".into(), json!(scaled.kernel_dim()));
    let mut out = Outputs::new(result);
    if let Some(multipliers) = sweep {
        let mut rows = Vec::new();
        for m in multipliers {
            let r = log_det_zeta(&scaled, m * t0)?;
            rows.push(vec![m * t0, r.zeta0_empirical, r.log_det]);
        }
        let (lo, hi) = rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[2]), hi.max(r[2])));
        out.result
            .as_object_mut()
            .expect("object")
            .insert("t0_sweep_spread".into(), json_f64(hi - lo));
        out.files
            .push(("sensitivity.csv".into(), csv(&["t0", "zeta0_empirical", "log_det"], &rows)));
    }
    Ok(out)
}

struct PolyakovCase {
    json: Value,
    rel_error: f64,
}

fn polyakov_case(source: &MeshSource, radius: f64, psi: &FieldSpec, fraction: f64) -> Result<PolyakovCase> {
    let metric = metric_of(source, radius)?;
    let values = psi.evaluate(metric.mesh())?;
    let lhs = polyakov_lhs(&metric, &values, fraction)?;
    let rhs = polyakov_rhs(&metric, &values)?;
    let abs_error = (lhs.difference - rhs).abs();
    let rel_error = if abs_error == 0.0 { 0.0 } else { abs_error / rhs.abs() };
    let max_psi = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(PolyakovCase {
        json: json!({
            "vertices": metric.num_vertices(),
            "lhs_det_difference": json_f64(lhs.difference),
            "rhs_integral": json_f64(rhs),
            "abs_error": json_f64(abs_error),
            "rel_error": json_f64(rel_error),
            "log_det_h": lhs.log_det_h.to_json(),
            "log_det_g": lhs.log_det_g.to_json(),
            "psi_max_abs": json_f64(max_psi),
        }),
        rel_error,
    })
}

pub fn cmd_polyakov(config: &Config) -> Result<Outputs> {
    let setup = MeshSetup::from_config(config)?;
    let psi = FieldSpec::from_config(config, "psi")?.ok_or_else(|| Error::invalid("missing required key \"psi\""))?;
    let fraction = positive("t0_fraction", config.get_or("t0_fraction", DEFAULT_T0_FRACTION)?)?;
    let refine = config.get_bool("refine")?;
    config.finish()?;
    let finer = if refine {
        Some(
            setup
                .source
                .refined()
                .ok_or_else(|| Error::invalid("refine needs a generated mesh"))?,
        )
    } else {
        None
    };
    let coarse = polyakov_case(&setup.source, setup.radius, &psi, fraction)?;
    let mut out = Outputs::new(coarse.json.clone());
    if let Some(source) = finer {
        let fine = polyakov_case(&source, setup.radius, &psi, fraction)?;
        let decreased = fine.rel_error < coarse.rel_error;
        let obj = out.result.as_object_mut().expect("object");
        obj.insert("refined".into(), fine.json);
        obj.insert("error_decreased".into(), json!(decreased));
        if !decreased {
            out.failure = Some(format!(
                "relative error did not decrease under refinement ({:e} -> {:e})",
                coarse.rel_error, fine.rel_error
            ));
        }
    }
    Ok(out)
}

pub fn cmd_flow(config: &Config) -> Result<Outputs> {
    let setup = MeshSetup::from_config(config)?;
    let psi_spec = match config.get_str("psi").unwrap_or("ricci2d") {
        "ricci2d" => None,
        text => Some(FieldSpec::parse(config, "psi", text)?),
    };
    let dt: f64 = positive("dt", config.get("dt")?.ok_or_else(|| Error::invalid("missing required key \"dt\""))?)?;
    let t_end: f64 = config
        .get("t_end")?
        .ok_or_else(|| Error::invalid("missing required key \"t_end\""))?;
    let tau0 = positive("tau0", config.get_or("tau0", 1.0)?)?;
    let coupled: bool = config.get_or("coupled", true)?;
    let n: u32 = config.get_or("n", 2)?;
    let f = FieldSpec::from_config(config, "f")?;
    let potential = FieldSpec::from_config(config, "potential")?;
    let mut probe_specs = Vec::new();
    for key in config.keys_with_prefix("probe.") {
        let id = key["probe.".len()..].to_string();
        let text = config.require_str(&key)?;
        let (kind, field) = text
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::invalid(format!("{key} must be '<operator> <field>'")))?;
        let kind: OperatorKind = kind.parse()?;
        probe_specs.push((id, kind, FieldSpec::parse(config, &key, field.trim())?));
    }
    let sample_every: usize = config.get_or("sample_every", 1)?;
    let log_det_every: usize = config.get_or("log_det_every", 0)?;
    let order_check = config.get_bool("order_check")?;
    let order_dt = positive("order_dt", config.get_or("order_dt", dt)?)?;
    config.finish()?;

    let metric = setup.metric()?;
    let mesh = Arc::clone(metric.mesh());
    let mut state = FlowState::new(metric);
    state.tau = tau0;
    state.coupled = coupled;
    state.n = n;
    if let Some(f) = f {
        state.f = f.evaluate(&mesh)?;
    }
    if let Some(v) = potential {
        state.potential = v.evaluate(&mesh)?;
    }
    let psi = match psi_spec {
        None => PsiSource::Ricci2d,
        Some(spec) => PsiSource::Field(spec.evaluate(&mesh)?),
    };
    let probes = probe_specs
        .into_iter()
        .map(|(id, kind, field)| Ok(Probe { id, kind, phi: field.evaluate(&mesh)? }))
        .collect::<Result<Vec<_>>>()?;
    let run = FlowRun {
        t_end,
        dt,
        probes,
        sample_every,
        log_det_every,
    };
    let trace = run_flow(&state, &psi, &run)?;
    let last = trace.records.last().expect("trace has the initial sample");
    let max_gb = trace
        .records
        .iter()
        .fold(0.0f64, |a, r| a.max(r.gauss_bonnet_residual));
    let invariance = if run.probes.is_empty() {
        Value::Null
    } else {
        to_json(&invariance_report(&trace)?)
    };
    let monotonicity = if trace.records.len() >= 3 {
        to_json(&monotonicity_report(&trace)?)
    } else {
        Value::Null
    };
    let order = if order_check {
        to_json(&order_study(&state, &psi, t_end, order_dt)?)
    } else {
        Value::Null
    };
    let mut out = Outputs::new(json!({
        "chi": trace.chi,
        "vertices": mesh.num_vertices(),
        "dt": json_f64(trace.dt),
        "samples": trace.records.len(),
        "final": {
            "t": json_f64(last.t),
            "tau": json_f64(last.tau),
            "S": json_f64(last.entropy),
            "area": json_f64(last.area),
            "gauss_bonnet_residual": json_f64(last.gauss_bonnet_residual),
        },
        "max_gauss_bonnet_residual": json_f64(max_gb),
        "invariance": invariance,
        "monotonicity": monotonicity,
        "order": order,
    }));
    out.files.push(("trace.csv".into(), trace.to_csv()));
    Ok(out)
}

pub fn cmd_oracle(config: &Config) -> Result<Outputs> {
    let cases: usize = config.get_or("cases", 100)?;
    let seed: u64 = config.get_or("seed", 1)?;
    let betas = config.get_list("betas")?.unwrap_or_else(|| vec![0.5, 1.0, 2.0, 4.0]);
    let max_dim: usize = config.get_or("max_dim", 8)?;
    let mc_samples: usize = config.get_or("mc_samples", 100_000)?;
    let mc_cases: usize = config.get_or("mc_cases", 4)?;
    let model_path = config
        .get_str("model")
        .map(|p| config.get_path("model", p));
    config.finish()?;
    if cases == 0 || betas.is_empty() || max_dim == 0 {
        return Err(Error::invalid("cases, betas and max_dim must be non-empty"));
    }
    for &b in &betas {
        positive("beta", b)?;
    }

    let fixed = match model_path {
        Some(p) => {
            let text = crate::io::read_text(&p)?;
            let json: ModelJson = serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: p.clone(),
                line: e.line(),
                message: e.to_string(),
            })?;
            Some(FiniteModel::from_json(&json)?)
        }
        None => None,
    };
    let model_at = |i: usize| -> Result<FiniteModel> {
        match &fixed {
            Some(m) => Ok(m.clone()),
            None => FiniteModel::random(1 + i % max_dim, seed.wrapping_add(i as u64)),
        }
    };

    let mut failures = 0usize;
    let mut max_rel_diff = 0.0f64;
    let mut max_scaling = 0.0f64;
    let mut max_cocycle = 0.0f64;
    let mut max_gibbs = 0.0f64;
    let mut max_gibbs_rel = 0.0f64;
    let mut mc = Vec::new();
    let mut max_z = 0.0f64;
    for i in 0..cases {
        let model = model_at(i)?;
        let n = model.dim();
        let beta = betas[i % betas.len()];
        let check = verify_classic(&model, beta)?;
        if !check.equal {
            failures += 1;
        }
        max_rel_diff = max_rel_diff.max(check.rel_diff);

        let frame = MeasureFrame::of(&model);
        let scaled = MeasureFrame::of(&model.rescaled(beta)?);
        let expected = beta.powf(-(n as f64) / 2.0);
        max_scaling = max_scaling.max((jacobian(&frame, &scaled)? / expected - 1.0).abs());
        let other = MeasureFrame::of(&FiniteModel::random(n, seed.wrapping_add(i as u64) ^ 0x9e37_79b9)?);
        let direct = jacobian(&frame, &other)?;
        let chained = jacobian(&frame, &scaled)? * jacobian(&scaled, &other)?;
        max_cocycle = max_cocycle.max((chained / direct - 1.0).abs());

        let g = gibbs_identity(&model, beta)?;
        max_gibbs = max_gibbs.max(g.residual);
        max_gibbs_rel = max_gibbs_rel.max(g.residual / g.fluctuation);

        if i < mc_cases && mc_samples > 0 {
            let mc_seed = seed.wrapping_add(1000 + i as u64);
            let exact = exact_partition(&model, beta)?;
            let est = mc_partition(&model, beta, mc_samples, mc_seed)?;
            let z_partition = sigmas(est.estimate - exact, est.std_error, exact);
            let variance = gibbs_stats(&model, beta)?.std_energy.powi(2);
            let moments = mc_gibbs_stats(&model, beta, mc_samples, mc_seed)?;
            let z_variance = sigmas(moments.variance - variance, moments.variance_std_error, variance);
            max_z = max_z.max(z_partition).max(z_variance);
            mc.push(json!({
                "case": i,
                "dim": n,
                "beta": json_f64(beta),
                "exact": json_f64(exact),
                "partition": to_json(&est),
                "partition_sigmas": json_f64(z_partition),
                "variance": json_f64(variance),
                "variance_estimate": json_f64(moments.variance),
                "variance_sigmas": json_f64(z_variance),
            }));
        }
    }
    let mut out = Outputs::new(json!({
        "cases": cases,
        "seed": seed,
        "betas": crate::io::json_f64s(&betas),
        "classic": {
            "failures": failures,
            "max_rel_diff": json_f64(max_rel_diff),
        },
        "jacobian": {
            "max_scaling_rel_error": json_f64(max_scaling),
            "max_cocycle_rel_error": json_f64(max_cocycle),
        },
        "gibbs": {
            "max_residual": json_f64(max_gibbs),
            "max_rel_residual": json_f64(max_gibbs_rel),
        },
        "mc": {
            "max_sigmas": json_f64(max_z),
            "within_3_sigma": max_z <= 3.0,
            "runs": mc,
        },
    }));
    if failures > 0 {
        out.failure = Some(format!("{failures} of {cases} cases broke the scaling identity"));
    }
    Ok(out)
}

/// `|diff|` in standard errors. When every importance weight is exact the
/// sampling error vanishes, so the error is floored at summation rounding.
fn sigmas(diff: f64, std_error: f64, scale: f64) -> f64 {
    let floor = 64.0 * f64::EPSILON * scale.abs();
    if diff.abs() <= floor {
        0.0
    } else {
        diff.abs() / std_error.max(floor)
    }
}

pub fn cmd_entropy(config: &Config) -> Result<Outputs> {
    let setup = if config.contains("mesh") {
        Some(MeshSetup::from_config(config)?)
    } else {
        None
    };
    let chi_key: Option<i64> = config.get("chi")?;
    let betas = match config.get_list("betas")? {
        Some(b) => b,
        None => {
            let lo = positive("beta_min", config.get_or("beta_min", 0.5)?)?;
            let hi = positive("beta_max", config.get_or("beta_max", 4.0)?)?;
            let count: usize = config.get_or("beta_count", 8)?;
            if count < 2 || hi <= lo {
                return Err(Error::invalid("need beta_count >= 2 and beta_max > beta_min"));
            }
            (0..count)
                .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
                .collect()
        }
    };
    let f_spec = FieldSpec::from_config(config, "f")?;
    config.finish()?;
    for &b in &betas {
        positive("beta", b)?;
    }

    let metric: Option<ConformalMetric> = setup.as_ref().map(MeshSetup::metric).transpose()?;
    let chi = match (chi_key, &metric) {
        (Some(c), Some(m)) if c != m.chi() => {
            return Err(Error::invalid(format!("chi = {c} but the mesh has chi = {}", m.chi())))
        }
        (Some(c), _) => c,
        (None, Some(m)) => m.chi(),
        (None, None) => return Err(Error::invalid("give chi or a mesh")),
    };
    let f = match (&f_spec, &metric) {
        (Some(spec), Some(m)) => Some(spec.evaluate(m.mesh())?),
        (Some(_), None) => return Err(Error::invalid("f needs a mesh")),
        _ => None,
    };

    let log_z = |b: f64| log_partition_conformal(b, chi);
    let mut rows = Vec::with_capacity(betas.len());
    let mut gibbs_vs_closed = 0.0f64;
    let mut sf_vs_gibbs = 0.0f64;
    for &beta in &betas {
        let s = gibbs_entropy(log_z, beta)?;
        let state = ThermoState::new(beta, log_z(beta)?, s)?;
        let tau = state.tau;
        let s_sf = entropy_from_free_energy(|t: f64| Ok(-t * log_z(1.0 / t)?), tau)?;
        gibbs_vs_closed = gibbs_vs_closed.max((s - entropy_conformal(beta, chi)?).abs());
        sf_vs_gibbs = sf_vs_gibbs.max((s_sf - s).abs());
        // Adding zero turns −0 (F at β = 1, the rate at χ = 6) into 0.
        let mut row = vec![
            beta,
            tau,
            state.log_z,
            s,
            free_energy(&state) + 0.0,
            entropy_rate_tau(tau, chi)? + 0.0,
        ];
        if let (Some(f), Some(m)) = (&f, &metric) {
            row.push(evaluate_W(m, f, tau)?);
        }
        rows.push(row);
    }
    let mut header = vec!["beta", "tau", "logZ", "S", "F", "dS_dtau"];
    if f.is_some() {
        header.push("W");
    }
    let mut provenance = Map::new();
    for (k, v) in [
        ("logZ", "closed form (1/2 - chi/12) ln beta of the conformal-class partition function"),
        ("S", "log Z - beta d/dbeta log Z, central difference with one Richardson step"),
        ("F", "-tau log Z"),
        ("dS_dtau", "closed form -(1/2 - chi/12)/tau"),
        ("W", "vertex quadrature of (tau(R + |grad f|^2) + f - 2)(4 pi tau)^-1 e^-f dA"),
    ] {
        if k != "W" || f.is_some() {
            provenance.insert(k.into(), json!(v));
        }
    }
    let mut out = Outputs::new(json!({
        "chi": chi,
        "rows": rows.len(),
        "provenance": provenance,
        "additive_constant": Value::Null,
        "consistency": {
            "gibbs_vs_closed_form": json_f64(gibbs_vs_closed),
            "free_energy_vs_gibbs": json_f64(sf_vs_gibbs),
        },
    }));
    out.files.push(("sweep.csv".into(), csv(&header, &rows)));
    Ok(out)
}
