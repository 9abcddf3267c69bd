//! Config-driven runs: solve, certify, simulate, measure and write the
//! artifact directory.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::certify::{
    analytic_w, check_boundary_condition_via_lemma, check_certificate, converse_construct, CertificateReport,
    CertifyError, CheckSettings, ConverseAuto, ConverseResult, LemmaCheck,
};
use crate::detmax::{run_detmax, DetMaxSettings};
use crate::dynsys::{apply_scaling, resolve, Domain, DomainSpec, DynamicalSystem, SystemSpec};
use crate::geometry::{dv_metric, mc_volume, VolumeEstimate};
use crate::poly::Polynomial;
use crate::sim::{
    check_invariance, integrate, sample_attractor, write_trajectories_csv, IntegratorSettings, InvarianceVerdict,
    Trajectory,
};
use crate::soscomp::PutinarCertificate;

/// Pipeline stage at which a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    System,
    Solve,
    Certify,
    Simulate,
    Measure,
    Output,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[error("{stage:?} stage failed: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, message: impl ToString) -> Self {
        PipelineError {
            stage,
            message: message.to_string(),
        }
    }
}

fn at<E: ToString>(stage: Stage) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::new(stage, e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub enabled: bool,
    pub n_trajectories: usize,
    pub t_end: f64,
    pub entry_tol: f64,
    pub burn_in: f64,
    pub attractor_points: usize,
    pub attractor_starts: usize,
    /// Sampled attractor points must satisfy `J <= 1 + containment_tol`.
    pub containment_tol: f64,
    /// Extra trajectory from this state, in scaled coordinates.
    pub initial_state: Option<Vec<f64>>,
    pub trajectory_t_end: f64,
    pub integrator: IntegratorSettings,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            enabled: true,
            n_trajectories: 100,
            t_end: 100.0,
            entry_tol: 1e-6,
            burn_in: 50.0,
            attractor_points: 2000,
            attractor_starts: 10,
            containment_tol: 1e-5,
            initial_state: None,
            trajectory_t_end: 50.0,
            integrator: IntegratorSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub volume_samples: usize,
    /// Grid points per axis; `None` picks 101 in 2-D and 41 in 3-D.
    pub contour_resolution: Option<usize>,
    pub contour: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            volume_samples: 1_000_000,
            contour_resolution: None,
            contour: true,
        }
    }
}

fn default_alpha() -> f64 {
    1e-4
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub time_scale: Option<f64>,
    pub d: u32,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_true")]
    pub include_k1: bool,
    /// Base seed; every sampling stage uses a fixed offset from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub detmax: DetMaxSettings,
    #[serde(default)]
    pub check: CheckSettings,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub converse: ConverseAuto,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(at(Stage::Config))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::new(Stage::Config, format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::new(Stage::Config, m));
        if self.d == 0 || self.d % 2 == 1 {
            return bad(format!("d must be a positive even degree, got {}", self.d));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        let s = &self.simulation;
        if !(s.t_end > 0.0 && s.burn_in >= 0.0 && s.entry_tol >= 0.0 && s.integrator.sample_dt > 0.0) {
            return bad("simulation times and tolerances must be positive".into());
        }
        Ok(())
    }

    fn seeds(&self) -> Seeds {
        let s = self.seed;
        Seeds {
            check: s,
            invariance: s.wrapping_add(101),
            attractor: s.wrapping_add(202),
            volume: s.wrapping_add(303),
        }
    }

    /// The scaled system and its domain.
    pub fn resolve(&self) -> Result<(DynamicalSystem, DynamicalSystem, Domain), PipelineError> {
        let (sys, dom) = resolve(&self.system, self.domain.as_ref(), self.scale, self.time_scale).map_err(at(Stage::System))?;
        let scaled = apply_scaling(&sys);
        Ok((sys, scaled, dom))
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Seeds {
    check: u64,
    invariance: u64,
    attractor: u64,
    volume: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorContainment {
    pub n_points: usize,
    pub starts_used: usize,
    pub discarded: usize,
    pub max_j: f64,
    pub inside_fraction: f64,
    pub all_inside: bool,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCheck {
    pub initial_state: Vec<f64>,
    pub burn_in: f64,
    pub t_end: f64,
    pub n_samples: usize,
    pub max_j_after_burn_in: f64,
    pub all_inside: bool,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetMaxSummary {
    pub steps: usize,
    pub final_detroot: f64,
    pub trace_cap: f64,
    pub diagnostic: Option<crate::detmax::DetMaxDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub system: String,
    pub d: u32,
    pub alpha: f64,
    pub include_k1: bool,
    pub certificate: CertificateReport,
    pub lemma: LemmaCheck,
    pub min_gram_eigenvalue: f64,
    pub identity_residual_k0: f64,
    pub identity_residual_k1: Option<f64>,
    pub detmax: DetMaxSummary,
    pub invariance: Option<InvarianceVerdict>,
    pub attractor: Option<AttractorContainment>,
    pub trajectory: Option<TrajectoryCheck>,
    /// μ({x ∈ Ω : J ≤ 1}) in scaled coordinates.
    pub sublevel_volume: VolumeEstimate,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub certificate: PutinarCertificate,
    pub report: RunReport,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).map_err(at(Stage::Output))?;
    fs::write(path, text + "\n").map_err(|e| PipelineError::new(Stage::Output, format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, PipelineError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| PipelineError::new(Stage::Output, format!("{}: {e}", path.display())))
}

fn sublevel_indicator<'a>(j: &'a Polynomial, dom: &'a Domain) -> impl Fn(&[f64]) -> bool + Sync + 'a {
    let je = j.evaluator();
    let g = dom.g.evaluator();
    move |x: &[f64]| g.eval(x) >= 0.0 && je.eval(x) <= 1.0
}

/// Runs every stage and writes the artifacts into `out_dir`. A failure
/// after the output directory exists is also recorded as `failure.json`.
pub fn run_pipeline(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome, PipelineError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| PipelineError::new(Stage::Output, format!("{}: {e}", out_dir.display())))?;
    write_json(
        &out_dir.join("manifest.json"),
        &json!({
            "config": cfg,
            "seeds": cfg.seeds(),
            "version": env!("CARGO_PKG_VERSION"),
        }),
    )?;
    let result = run_stages(cfg, out_dir);
    if let Err(e) = &result {
        let _ = write_json(&out_dir.join("failure.json"), e);
    } else {
        let _ = fs::remove_file(out_dir.join("failure.json"));
    }
    result
}

fn run_stages(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome, PipelineError> {
    let seeds = cfg.seeds();
    let (_, sys, dom) = cfg.resolve()?;
    let (cert, state) = run_detmax(&sys, &dom, cfg.d, cfg.alpha, cfg.include_k1, &cfg.detmax).map_err(at(Stage::Solve))?;
    write_json(&out_dir.join("certificate.json"), &cert)?;
    state.write_history_csv(create(&out_dir.join("history.csv"))?).map_err(at(Stage::Output))?;

    let check = CheckSettings { seed: seeds.check, ..cfg.check };
    let report = check_certificate(&cert, &sys, &dom, &check).map_err(at(Stage::Certify))?;
    let lemma = check_boundary_condition_via_lemma(&cert, &sys, &dom, &check).map_err(at(Stage::Certify))?;
    let (res0, res1) = cert.identity_residuals(&sys.f, &dom.g).map_err(at(Stage::Certify))?;
    let j = cert.lyapunov().clone();

    let sim = &cfg.simulation;
    let (mut invariance, mut attractor, mut trajectory) = (None, None, None);
    let mut trajs: Vec<Trajectory> = Vec::new();
    if sim.enabled {
        invariance = Some(
            check_invariance(&j, &sys, &dom, sim.n_trajectories, sim.t_end, sim.entry_tol, seeds.invariance, &sim.integrator)
                .map_err(at(Stage::Simulate))?,
        );
        let sample = sample_attractor(
            &sys,
            &dom,
            sim.burn_in,
            sim.attractor_points,
            sim.attractor_starts,
            seeds.attractor,
            &sim.integrator,
        )
        .map_err(at(Stage::Simulate))?;
        let je = j.evaluator();
        let vals: Vec<f64> = sample.points.iter().map(|x| je.eval(x)).collect();
        let inside = vals.iter().filter(|v| **v <= 1.0 + sim.containment_tol).count();
        attractor = Some(AttractorContainment {
            n_points: vals.len(),
            starts_used: sample.starts_used,
            discarded: sample.discarded.len(),
            max_j: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            inside_fraction: if vals.is_empty() { 0.0 } else { inside as f64 / vals.len() as f64 },
            all_inside: !vals.is_empty() && inside == vals.len(),
            tol: sim.containment_tol,
        });
        if let Some(x0) = &sim.initial_state {
            let y0 = x0.clone();
            let tr = integrate(&sys, &y0, sim.trajectory_t_end, &sim.integrator).map_err(at(Stage::Simulate))?;
            let post: Vec<f64> = tr
                .times
                .iter()
                .zip(&tr.states)
                .filter(|(t, _)| **t >= sim.burn_in)
                .map(|(_, x)| je.eval(x))
                .collect();
            let max_j = post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            trajectory = Some(TrajectoryCheck {
                initial_state: y0,
                burn_in: sim.burn_in,
                t_end: sim.trajectory_t_end,
                n_samples: post.len(),
                max_j_after_burn_in: max_j,
                all_inside: !post.is_empty() && max_j <= 1.0 + sim.containment_tol,
                tol: sim.containment_tol,
            });
            trajs.push(tr);
        }
        // A few random trajectories for plotting.
        let starts = dom.sample_interior(4, seeds.invariance).map_err(at(Stage::Simulate))?;
        for x0 in starts {
            trajs.push(integrate(&sys, &x0, sim.t_end, &sim.integrator).map_err(at(Stage::Simulate))?);
        }
    }
    write_trajectories_csv(&trajs, Some(&j), create(&out_dir.join("trajectories.csv"))?).map_err(at(Stage::Output))?;

    let volume = mc_volume(sublevel_indicator(&j, &dom), &dom.bounding_box, cfg.output.volume_samples, seeds.volume);
    if cfg.output.contour && dom.dim() <= 3 {
        let res = cfg.output.contour_resolution.unwrap_or(if dom.dim() == 3 { 41 } else { 101 });
        emit_contour(&j, &dom, res, create(&out_dir.join("contour.csv"))?)?;
    }

    let report = RunReport {
        system: sys.name.clone(),
        d: cfg.d,
        alpha: cfg.alpha,
        include_k1: cfg.include_k1,
        certificate: report,
        lemma,
        min_gram_eigenvalue: cert.min_gram_eigenvalue(),
        identity_residual_k0: res0,
        identity_residual_k1: res1,
        detmax: DetMaxSummary {
            steps: state.step,
            final_detroot: state.history.last().map_or(f64::NAN, |h| h.detroot),
            trace_cap: state.trace_cap,
            diagnostic: state.diagnostic,
        },
        invariance,
        attractor,
        trajectory,
        sublevel_volume: volume,
    };
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(RunOutcome {
        out_dir: out_dir.to_path_buf(),
        certificate: cert,
        report,
    })
}

/// Writes `x1..xn, J` on a regular grid over the bounding box with
/// `resolution` points per axis (at least the two corners). Returns the row
/// count.
pub fn emit_contour<W: std::io::Write>(
    j: &Polynomial,
    dom: &Domain,
    resolution: usize,
    out: W,
) -> Result<usize, PipelineError> {
    let n = dom.dim();
    if n > 3 {
        return Err(PipelineError::new(Stage::Output, format!("contour output needs n <= 3, got {n}")));
    }
    let k = resolution.max(2);
    let axes: Vec<Vec<f64>> = dom
        .bounding_box
        .iter()
        .map(|[lo, hi]| (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect())
        .collect();
    let je = j.evaluator();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    header.push("J".into());
    w.write_record(&header).map_err(at(Stage::Output))?;
    let total = k.pow(n as u32);
    let mut x = vec![0.0; n];
    for idx in 0..total {
        let mut r = idx;
        for d in (0..n).rev() {
            x[d] = axes[d][r % k];
            r /= k;
        }
        let mut row: Vec<String> = x.iter().map(f64::to_string).collect();
        row.push(je.eval(&x).to_string());
        w.write_record(&row).map_err(at(Stage::Output))?;
    }
    w.flush().map_err(at(Stage::Output))?;
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub d: u32,
    pub volume: VolumeEstimate,
    pub detmax_diagnostic: Option<crate::detmax::DetMaxDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStep {
    pub from: u32,
    pub to: u32,
    pub dv: VolumeEstimate,
    /// `v_to <= v_from + 3·sqrt(se_from² + se_to²)`.
    pub non_increasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub steps: Vec<SweepStep>,
    pub monotone: bool,
}

/// Volumes and consecutive `D_V` for certificates stored under
/// `root/d{d}/certificate.json`, all on the same sample stream.
pub fn sweep_report(cfg: &RunConfig, root: &Path, degrees: &[u32]) -> Result<SweepReport, PipelineError> {
    let (_, _, dom) = cfg.resolve()?;
    let seed = cfg.seeds().volume;
    let n = cfg.output.volume_samples;
    let mut js = Vec::new();
    let mut entries = Vec::new();
    for &d in degrees {
        let dir = root.join(format!("d{d}"));
        let text = fs::read_to_string(dir.join("certificate.json")).map_err(|e| PipelineError::new(Stage::Measure, format!("d = {d}: {e}")))?;
        let cert: PutinarCertificate = serde_json::from_str(&text).map_err(at(Stage::Measure))?;
        let diag = fs::read_to_string(dir.join("report.json"))
            .ok()
            .and_then(|t| serde_json::from_str::<RunReport>(&t).ok())
            .and_then(|r| r.detmax.diagnostic);
        let j = cert.lyapunov().clone();
        entries.push(SweepEntry {
            d,
            volume: mc_volume(sublevel_indicator(&j, &dom), &dom.bounding_box, n, seed),
            detmax_diagnostic: diag,
        });
        js.push(j);
    }
    let mut steps = Vec::new();
    for k in 1..js.len() {
        let dv = dv_metric(
            sublevel_indicator(&js[k - 1], &dom),
            sublevel_indicator(&js[k], &dom),
            &dom.bounding_box,
            n,
            seed,
            false,
        );
        let (a, b) = (&entries[k - 1].volume, &entries[k].volume);
        let se = (a.standard_error.powi(2) + b.standard_error.powi(2)).sqrt();
        steps.push(SweepStep {
            from: entries[k - 1].d,
            to: entries[k].d,
            dv: dv.dv,
            non_increasing: b.value <= a.value + 3.0 * se,
        });
    }
    let monotone = steps.iter().all(|s| s.non_increasing);
    let report = SweepReport { entries, steps, monotone };
    write_json(&root.join("report.json"), &report)?;
    Ok(report)
}

/// Runs each degree in `root/d{d}` in turn, then summarizes.
pub fn run_degree_sweep(cfg: &RunConfig, root: &Path, degrees: &[u32]) -> Result<SweepReport, PipelineError> {
    for &d in degrees {
        let mut c = cfg.clone();
        c.d = d;
        run_pipeline(&c, &root.join(format!("d{d}")))?;
    }
    sweep_report(cfg, root, degrees)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub report: CertificateReport,
    pub min_gram_eigenvalue: f64,
    pub identity_residual_k0: f64,
    pub identity_residual_k1: Option<f64>,
    pub passed: bool,
}

/// Re-checks a stored certificate against a config's system and domain.
pub fn verify(cert_path: &Path, cfg: &RunConfig, residual_tol: f64) -> Result<VerifyOutcome, PipelineError> {
    let text = fs::read_to_string(cert_path).map_err(|e| PipelineError::new(Stage::Config, format!("{}: {e}", cert_path.display())))?;
    let cert: PutinarCertificate = serde_json::from_str(&text).map_err(at(Stage::Config))?;
    let (_, sys, dom) = cfg.resolve()?;
    let check = CheckSettings { seed: cfg.seeds().check, ..cfg.check };
    let report = check_certificate(&cert, &sys, &dom, &check).map_err(at(Stage::Certify))?;
    let (r0, r1) = cert.identity_residuals(&sys.f, &dom.g).map_err(at(Stage::Certify))?;
    let mineig = cert.min_gram_eigenvalue();
    let passed = report.passes(residual_tol) && mineig >= -1e-8;
    Ok(VerifyOutcome {
        report,
        min_gram_eigenvalue: mineig,
        identity_residual_k0: r0,
        identity_residual_k1: r1,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverseOutcome {
    pub result: ConverseResult,
    /// Set when the held-out fit missed the δσ bound.
    pub fit_diagnostic: Option<String>,
    pub seconds: f64,
}

/// Converse construction at degree `cfg.d` for a system with a known
/// analytic Lyapunov function. Writes `converse.json` when `out_dir` is set.
pub fn run_converse(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<ConverseOutcome, PipelineError> {
    cfg.validate()?;
    let name = cfg.system.name.clone().unwrap_or_default();
    let (w, gw) = analytic_w(&name)
        .ok_or_else(|| PipelineError::new(Stage::System, format!("no analytic W is known for system '{name}'")))?;
    let (_, sys, dom) = cfg.resolve()?;
    let auto = ConverseAuto { seed: cfg.converse.seed.wrapping_add(cfg.seed), ..cfg.converse };
    let check = CheckSettings { seed: cfg.seeds().check, ..cfg.check };
    let t = Instant::now();
    let (result, fit_diagnostic) = match converse_construct(w, gw, &sys, &dom, cfg.d, None, &auto, &check) {
        Ok(r) => (r, None),
        Err(CertifyError::FitTooCoarse { partial, .. }) => {
            let msg = format!(
                "held-out fit error {:.3e} (gradient {:.3e}) is not below δσ = {:.3e}; raise d",
                partial.fit_error,
                partial.fit_gradient_error,
                partial.params.delta * partial.params.sigma
            );
            (*partial, Some(msg))
        }
        Err(e) => return Err(PipelineError::new(Stage::Certify, e)),
    };
    let outcome = ConverseOutcome {
        result,
        fit_diagnostic,
        seconds: t.elapsed().as_secs_f64(),
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(at(Stage::Output))?;
        write_json(&dir.join("converse.json"), &outcome)?;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    #[test]
    fn odd_degree_is_rejected() {
        let e = RunConfig::from_json(r#"{"system": {"name": "vanderpol"}, "d": 5}"#).unwrap_err();
        assert_eq!(e.stage, Stage::Config);
        let e = RunConfig::from_json(r#"{"system": {"name": "vanderpol"}, "d": 4, "bogus": 1}"#).unwrap_err();
        assert_eq!(e.stage, Stage::Config);
    }

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json(r#"{"system": {"name": "lorenz"}, "d": 4}"#).unwrap();
        assert_eq!(c.alpha, 1e-4);
        assert!(c.include_k1);
        assert_eq!(c.simulation.n_trajectories, 100);
    }

    fn square() -> Domain {
        Domain::new(parse_polynomial("1 - x1^2 - x2^2", 2).unwrap(), vec![[-1.0, 1.0]; 2]).unwrap()
    }

    #[test]
    fn contour_values() {
        let j = parse_polynomial("x1^2 + x2^2", 2).unwrap();
        let mut buf = Vec::new();
        assert_eq!(emit_contour(&j, &square(), 3, &mut buf).unwrap(), 9);
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows[0], "x1,x2,J");
        assert_eq!(rows[1], "-1,-1,2");
        assert_eq!(rows[5], "0,0,0");
        let mut buf = Vec::new();
        assert_eq!(emit_contour(&j, &square(), 1, &mut buf).unwrap(), 4);
    }
}
