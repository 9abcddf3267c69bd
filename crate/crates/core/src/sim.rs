//! Trajectory integration and sampled checks of attractor claims.
//!
//! All functions take the field in the coordinates the certificate lives in
//! (usually the output of [`crate::dynsys::apply_scaling`]).

use std::io::Write;

use ode_solvers::dop_shared::{IntegrationError, OutputType};
use ode_solvers::{DVector, Dopri5, System};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynsys::{Domain, DynamicalSystem, SystemError};
use crate::poly::{PolyEval, Polynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("initial state is not finite")]
    NonFiniteStart,
    #[error("dimension mismatch: state has {got} entries, system has {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("integration stopped at t = {t}: {reason}")]
    Integration { reason: String, t: f64, last_state: Vec<f64> },
    #[error(transparent)]
    Domain(#[from] SystemError),
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Spacing of the stored samples.
    pub sample_dt: f64,
    pub max_steps: u32,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            rtol: 1e-9,
            atol: 1e-12,
            sample_dt: 0.01,
            max_steps: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub accepted_steps: u32,
    pub rejected_steps: u32,
    pub evaluations: u32,
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    pub stats: IntegrationStats,
    /// Time at which the state left the escape box, if it did.
    pub escaped_at: Option<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&self.initial)
    }
}

struct Field {
    f: Vec<PolyEval>,
}

impl System<f64, DVector<f64>> for Field {
    fn system(&self, _t: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        for (o, p) in dy.iter_mut().zip(&self.f) {
            *o = p.eval(y.as_slice());
        }
    }
}

/// Dormand–Prince 5(4) sampled every `sample_dt` on `[0, t_end]`.
pub fn integrate(
    sys: &DynamicalSystem,
    x0: &[f64],
    t_end: f64,
    settings: &IntegratorSettings,
) -> Result<Trajectory, SimError> {
    integrate_from(sys, x0, 0.0, t_end, settings, None)
}

/// As [`integrate`], starting at `t0` and stopping early once the state
/// leaves `escape`.
///
/// Each sample interval is a separate solve that ends exactly on the grid,
/// so restarting from any stored sample retraces the stored states.
pub fn integrate_from(
    sys: &DynamicalSystem,
    x0: &[f64],
    t0: f64,
    t_end: f64,
    settings: &IntegratorSettings,
    escape: Option<&[[f64; 2]]>,
) -> Result<Trajectory, SimError> {
    if x0.len() != sys.n {
        return Err(SimError::Dimension { got: x0.len(), expected: sys.n });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFiniteStart);
    }
    let dt = settings.sample_dt;
    let span = t_end - t0;
    let ratio = span / dt;
    let n_seg = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };
    let grid = |i: usize| if i >= n_seg { t_end } else { t0 + i as f64 * dt };
    let outside = |y: &[f64]| escape.is_some_and(|b| y.iter().zip(b).any(|(v, [lo, hi])| !(*v >= *lo && *v <= *hi)));

    let mut times = vec![t0];
    let mut states = vec![x0.to_vec()];
    let mut stats = IntegrationStats {
        accepted_steps: 0,
        rejected_steps: 0,
        evaluations: 0,
        rtol: settings.rtol,
        atol: settings.atol,
    };
    let mut escaped_at = None;
    let mut y = DVector::from_column_slice(x0);
    for i in 0..n_seg {
        let (a, b) = (grid(i), grid(i + 1));
        let field = Field {
            f: sys.f.iter().map(Polynomial::evaluator).collect(),
        };
        let budget = settings.max_steps.saturating_sub(stats.accepted_steps).max(1);
        let mut solver = Dopri5::from_param(
            field,
            a,
            b,
            b - a,
            y.clone(),
            settings.rtol,
            settings.atol,
            0.9,
            0.04,
            0.2,
            10.0,
            b - a,
            0.0,
            budget,
            1000,
            OutputType::Sparse,
        );
        let s = solver.integrate().map_err(|e| {
            let t = match e {
                IntegrationError::MaxNumStepReached { x, .. }
                | IntegrationError::StepSizeUnderflow { x }
                | IntegrationError::StiffnessDetected { x } => x,
            };
            SimError::Integration {
                reason: e.to_string(),
                t,
                last_state: states.last().cloned().unwrap_or_default(),
            }
        })?;
        stats.accepted_steps += s.accepted_steps;
        stats.rejected_steps += s.rejected_steps;
        stats.evaluations += s.num_eval;
        y = solver.y_out().last().cloned().unwrap_or(y);
        let state: Vec<f64> = y.iter().copied().collect();
        if state.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Integration {
                reason: "state became non-finite".into(),
                t: b,
                last_state: states.last().cloned().unwrap_or_default(),
            });
        }
        if outside(&state) {
            escaped_at = Some(a);
            break;
        }
        times.push(b);
        states.push(state);
    }
    Ok(Trajectory {
        times,
        states,
        initial: x0.to_vec(),
        stats,
        escaped_at,
    })
}

/// Restarts from `states[k]` and compares with `states[k + m]`. Returns the
/// largest violation ratio `|Δ| / (10·(atol + rtol·|x|))`; at most 1 passes.
pub fn semigroup_check(
    sys: &DynamicalSystem,
    traj: &Trajectory,
    k: usize,
    m: usize,
    settings: &IntegratorSettings,
) -> Result<f64, SimError> {
    let (Some(tk), Some(tkm)) = (traj.times.get(k), traj.times.get(k + m)) else {
        return Err(SimError::Integration {
            reason: format!("indices {k}+{m} outside a trajectory of {} samples", traj.times.len()),
            t: 0.0,
            last_state: traj.final_state().to_vec(),
        });
    };
    let rerun = integrate_from(sys, &traj.states[k], *tk, *tkm, settings, None)?;
    let end = rerun.final_state();
    let target = &traj.states[k + m];
    Ok(end
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b).abs() / (10.0 * (settings.atol + settings.rtol * b.abs().max(a.abs()))))
        .fold(0.0, f64::max))
}

/// Writes `t, x1..xn, J` rows, with a leading trajectory index.
pub fn write_trajectories_csv<W: Write>(trajs: &[Trajectory], j: Option<&Polynomial>, out: W) -> Result<(), SimError> {
    let err = |e: csv::Error| SimError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let n = trajs.first().map_or(0, |t| t.initial.len());
    let mut header = vec!["trajectory".to_string(), "t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    if j.is_some() {
        header.push("J".into());
    }
    w.write_record(&header).map_err(err)?;
    let je = j.map(Polynomial::evaluator);
    for (k, traj) in trajs.iter().enumerate() {
        for (t, x) in traj.times.iter().zip(&traj.states) {
            let mut row = vec![k.to_string(), t.to_string()];
            row.extend(x.iter().map(f64::to_string));
            if let Some(je) = &je {
                row.push(je.eval(x).to_string());
            }
            w.write_record(&row).map_err(err)?;
        }
    }
    w.flush().map_err(|e| SimError::Csv(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceViolation {
    pub trajectory: usize,
    pub initial: Vec<f64>,
    pub entry_time: f64,
    pub time: f64,
    pub j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceVerdict {
    pub n_trajectories: usize,
    /// Trajectories that reached `J <= 1 - entry_tol`.
    pub entered: usize,
    /// First violation of each offending trajectory.
    pub violations: Vec<InvarianceViolation>,
    pub failures: Vec<(usize, String)>,
    pub t_end: f64,
    pub entry_tol: f64,
    pub seed: u64,
}

impl InvarianceVerdict {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.failures.is_empty()
    }
}

/// Once a trajectory has `J <= 1 - entry_tol` at a sample time, it must keep
/// `J <= 1 + entry_tol` at every later sample up to `t_end`.
#[allow(clippy::too_many_arguments)]
pub fn check_invariance(
    j: &Polynomial,
    sys: &DynamicalSystem,
    dom: &Domain,
    n_traj: usize,
    t_end: f64,
    entry_tol: f64,
    seed: u64,
    settings: &IntegratorSettings,
) -> Result<InvarianceVerdict, SimError> {
    let starts = dom.sample_interior(n_traj, seed)?;
    let je = j.evaluator();
    let outcomes: Vec<Result<(bool, Option<InvarianceViolation>), String>> = starts
        .par_iter()
        .enumerate()
        .map(|(k, x0)| {
            let traj = integrate(sys, x0, t_end, settings).map_err(|e| e.to_string())?;
            let mut entry: Option<f64> = None;
            for (t, x) in traj.times.iter().zip(&traj.states) {
                let v = je.eval(x);
                match entry {
                    None if v <= 1.0 - entry_tol => entry = Some(*t),
                    Some(te) if v > 1.0 + entry_tol => {
                        return Ok((
                            true,
                            Some(InvarianceViolation {
                                trajectory: k,
                                initial: x0.clone(),
                                entry_time: te,
                                time: *t,
                                j: v,
                            }),
                        ))
                    }
                    _ => {}
                }
            }
            Ok((entry.is_some(), None))
        })
        .collect();
    let mut verdict = InvarianceVerdict {
        n_trajectories: n_traj,
        entered: 0,
        violations: Vec::new(),
        failures: Vec::new(),
        t_end,
        entry_tol,
        seed,
    };
    for (k, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok((entered, viol)) => {
                verdict.entered += entered as usize;
                verdict.violations.extend(viol);
            }
            Err(e) => verdict.failures.push((k, e)),
        }
    }
    Ok(verdict)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorSample {
    pub points: Vec<Vec<f64>>,
    pub starts_used: usize,
    /// Starts dropped because they left the bounding box or failed to integrate.
    pub discarded: Vec<(Vec<f64>, String)>,
}

/// Post-burn-in states of trajectories from random Ω starts, `n_starts`
/// trajectories contributing equally.
pub fn sample_attractor(
    sys: &DynamicalSystem,
    dom: &Domain,
    burn_in: f64,
    n_points: usize,
    n_starts: usize,
    seed: u64,
    settings: &IntegratorSettings,
) -> Result<AttractorSample, SimError> {
    let n_starts = n_starts.max(1);
    let per = n_points.div_ceil(n_starts);
    let t_end = burn_in + per as f64 * settings.sample_dt;
    let mut out = AttractorSample {
        points: Vec::with_capacity(n_points),
        starts_used: 0,
        discarded: Vec::new(),
    };
    let mut round = 0u64;
    while out.points.len() < n_points && round < 8 {
        let starts = dom.sample_interior(n_starts, seed.wrapping_add(round))?;
        round += 1;
        let runs: Vec<Result<Trajectory, SimError>> = starts
            .par_iter()
            .map(|x0| integrate_from(sys, x0, 0.0, t_end, settings, Some(&dom.bounding_box)))
            .collect();
        for (x0, run) in starts.into_iter().zip(runs) {
            if out.points.len() >= n_points {
                break;
            }
            match run {
                Ok(traj) if traj.escaped_at.is_none() => {
                    out.starts_used += 1;
                    let need = n_points - out.points.len();
                    out.points.extend(
                        traj.times
                            .iter()
                            .zip(traj.states)
                            .filter(|(t, _)| **t > burn_in)
                            .map(|(_, x)| x)
                            .take(per.min(need)),
                    );
                }
                Ok(traj) => out
                    .discarded
                    .push((x0, format!("left the bounding box at t = {}", traj.escaped_at.unwrap_or(0.0)))),
                Err(e) => out.discarded.push((x0, e.to_string())),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    fn field(src: &[&str]) -> DynamicalSystem {
        let n = src.len();
        let f = src.iter().map(|s| parse_polynomial(s, n).unwrap()).collect();
        DynamicalSystem::new("t", f, 1.0, 1.0).unwrap()
    }

    #[test]
    fn exponential_decay() {
        let sys = field(&["-x1"]);
        let tr = integrate(&sys, &[1.0], 1.0, &IntegratorSettings::default()).unwrap();
        assert!((tr.times.last().unwrap() - 1.0).abs() < 1e-9);
        assert!((tr.final_state()[0] - (-1.0f64).exp()).abs() < 1e-8);
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rotation_is_periodic_and_norm_preserving() {
        let sys = field(&["x2", "-x1"]);
        let s = IntegratorSettings::default();
        let tr = integrate(&sys, &[1.0, 0.0], 2.0 * std::f64::consts::PI, &s).unwrap();
        let x = tr.final_state();
        assert!((x[0] - 1.0).abs() < 1e-6 && x[1].abs() < 1e-6, "{x:?}");
        let long = integrate(&sys, &[0.6, 0.8], 100.0, &s).unwrap();
        let drift = long
            .states
            .iter()
            .map(|x| ((x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(drift < 1e-7, "{drift}");
    }

    #[test]
    fn semigroup_on_van_der_pol() {
        let sys = field(&["x2", "(1 - x1^2)*x2 - x1"]);
        let s = IntegratorSettings::default();
        let tr = integrate(&sys, &[2.0, 0.0], 10.0, &s).unwrap();
        for k in [0, 100, 400] {
            let r = semigroup_check(&sys, &tr, k, 300, &s).unwrap();
            assert!(r <= 1.0, "k={k}: {r}");
        }
    }

    #[test]
    fn escape_stops_early() {
        let sys = field(&["x1"]);
        let bbox = [[-2.0, 2.0]];
        let tr = integrate_from(&sys, &[1.0], 0.0, 5.0, &IntegratorSettings::default(), Some(&bbox)).unwrap();
        let te = tr.escaped_at.unwrap();
        assert!(te < 2f64.ln() + 0.02, "{te}");
    }

    #[test]
    fn csv_layout() {
        let sys = field(&["-x1", "-x2"]);
        let tr = integrate(&sys, &[1.0, 1.0], 0.02, &IntegratorSettings::default()).unwrap();
        let j = parse_polynomial("x1^2 + x2^2", 2).unwrap();
        let mut buf = Vec::new();
        write_trajectories_csv(std::slice::from_ref(&tr), Some(&j), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "trajectory,t,x1,x2,J");
        assert_eq!(lines.count(), tr.times.len());
    }
}
