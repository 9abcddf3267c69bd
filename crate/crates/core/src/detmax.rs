//! Shrinks the certified sublevel set `{J <= 1}` by maximizing
//! `log det P` of J's Gram matrix over the feasible set of the attractor
//! program.
//!
//! Each outer step linearizes `log det` at the current iterate (gradient
//! `P⁻¹`) and solves the resulting linear-objective program, which yields a
//! new feasible vertex. The iterate is then re-optimized over the convex
//! hull of all vertices found so far; every point of that hull is a valid
//! certificate because both Putinar identities are linear in the unknowns.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynsys::{DynamicalSystem, Domain};
use crate::sdp::{SdpError, SdpSolver, SolveStatus, SolverChoice};
use crate::soscomp::{
    assemble_attractor_sdp, extract_certificate, AttractorOptions, AttractorSdp, DegreeRule, PutinarCertificate,
    SosError,
};

#[derive(Debug, Error)]
pub enum DetMaxError {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("no degree-{d} certificate found: {reason}")]
    NoCertificate { d: u32, reason: String },
    #[error(transparent)]
    Sos(#[from] SosError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error("history export failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Gradient of `log det` at `p`, i.e. `p⁻¹`.
pub fn linearize_logdet(p: &DMatrix<f64>) -> Result<DMatrix<f64>, DetMaxError> {
    if !p.is_square() || p.iter().any(|v| !v.is_finite()) {
        return Err(DetMaxError::NotPositiveDefinite);
    }
    let sym = (p + p.transpose()) * 0.5;
    let chol = Cholesky::new(sym).ok_or(DetMaxError::NotPositiveDefinite)?;
    let inv = chol.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// `log det p`, or `None` when `p` is not positive definite.
pub fn logdet(p: &DMatrix<f64>) -> Option<f64> {
    let chol = Cholesky::new((p + p.transpose()) * 0.5)?;
    Some(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// Step in `[0, max]` maximizing `log det(p + t dir)`.
fn line_search(p: &DMatrix<f64>, dir: &DMatrix<f64>, max: f64) -> f64 {
    let Some(chol) = Cholesky::new(p.clone()) else { return 0.0 };
    let l = chol.l();
    let Some(a) = l.solve_lower_triangular(dir) else { return 0.0 };
    let Some(m) = l.solve_lower_triangular(&a.transpose()) else { return 0.0 };
    let mu = SymmetricEigen::new((&m + m.transpose()) * 0.5).eigenvalues;
    // log det(p + t dir) - log det p = Σ log(1 + t μᵢ), concave in t
    let slope = |t: f64| mu.iter().map(|&v| v / (1.0 + t * v)).sum::<f64>();
    let mut hi = max;
    for &v in mu.iter() {
        if v < 0.0 {
            hi = hi.min(-(1.0 - 1e-12) / v);
        }
    }
    if slope(0.0) <= 0.0 {
        return 0.0;
    }
    if slope(hi) >= 0.0 {
        return hi;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Maximizes `log det Σ wᵢ Pᵢ` over the simplex by pairwise Frank-Wolfe
/// steps. Returns the improved weights.
fn optimize_weights(atoms: &[DMatrix<f64>], mut w: Vec<f64>, iters: usize) -> Vec<f64> {
    let n = atoms[0].nrows() as f64;
    for _ in 0..iters {
        let p = mix(atoms, &w);
        let Ok(g) = linearize_logdet(&p) else { break };
        let grad: Vec<f64> = atoms.iter().map(|a| g.dot(a)).collect();
        let s = (0..atoms.len()).max_by(|&i, &j| grad[i].total_cmp(&grad[j])).unwrap();
        let Some(a) = (0..atoms.len())
            .filter(|&i| w[i] > 0.0)
            .min_by(|&i, &j| grad[i].total_cmp(&grad[j]))
        else {
            break;
        };
        if s == a || grad[s] - grad[a] <= 1e-10 * n {
            break;
        }
        let dir = &atoms[s] - &atoms[a];
        let t = line_search(&p, &dir, w[a]);
        if t <= 0.0 {
            break;
        }
        w[s] += t;
        w[a] -= t;
        if w[a] < 1e-15 {
            w[a] = 0.0;
        }
    }
    w
}

fn mix(atoms: &[DMatrix<f64>], w: &[f64]) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(atoms[0].nrows(), atoms[0].ncols());
    for (a, &wi) in atoms.iter().zip(w) {
        if wi > 0.0 {
            p += a * wi;
        }
    }
    p
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetMaxSettings {
    pub max_outer: usize,
    /// Stop when the relative change of `(det P)^(1/N)` falls below this.
    pub stall_tol: f64,
    /// Bound on `trace P_J` in normalized coordinates; `None` means `1e4·N`.
    pub trace_cap: Option<f64>,
    pub epsilon: f64,
    pub degree_rule: DegreeRule,
    pub solver: SolverChoice,
}

impl Default for DetMaxSettings {
    fn default() -> Self {
        DetMaxSettings {
            max_outer: 30,
            stall_tol: 1e-6,
            trace_cap: None,
            epsilon: 1e-6,
            degree_rule: DegreeRule::default(),
            solver: SolverChoice::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetMaxDiagnostic {
    /// `(det P)^(1/N)` kept growing tenfold per step against the trace cap,
    /// or the final iterate sits on the cap.
    VolumeZeroSuspected,
    /// A linearized subproblem could not be solved; the best iterate so far
    /// is returned.
    SubproblemFailed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: usize,
    pub logdet: f64,
    pub detroot: f64,
    /// Weight moved onto the newest vertex.
    pub step_size: f64,
    /// `<P⁻¹, P̂ - P>` for the vertex `P̂` of this step; zero at a fixed point.
    pub fw_gap: f64,
    pub solver_iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub cap_active: bool,
}

#[derive(Debug, Clone)]
pub struct DetMaxState {
    /// Gram matrix of J in the normalized coordinates of the program.
    pub iterate: DMatrix<f64>,
    pub history: Vec<HistoryEntry>,
    pub step: usize,
    /// Last step size along the linearized direction.
    pub trust_radius: f64,
    pub trace_cap: f64,
    pub diagnostic: Option<DetMaxDiagnostic>,
}

impl DetMaxState {
    pub fn detroot_history(&self) -> Vec<f64> {
        self.history.iter().map(|h| h.detroot).collect()
    }

    pub fn write_history_csv<W: Write>(&self, out: W) -> Result<(), DetMaxError> {
        let mut w = csv::Writer::from_writer(out);
        for h in &self.history {
            w.serialize(h).map_err(std::io::Error::other)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `log det` in the certificate's own coordinates from the normalized Gram.
fn logdet_original(sdp: &AttractorSdp, p: &DMatrix<f64>) -> Option<f64> {
    let shift: f64 = sdp
        .j_basis()
        .iter()
        .map(|m| -2.0 * m.degree() as f64 * sdp.radius.ln())
        .sum();
    logdet(p).map(|v| v + shift)
}

fn usable(status: SolveStatus) -> bool {
    matches!(status, SolveStatus::Solved | SolveStatus::Inaccurate)
}

/// Runs phase 1 (maximize the smallest eigenvalue of `P_J`) followed by up
/// to `max_outer` linearized det-max steps.
pub fn run_detmax(
    sys: &DynamicalSystem,
    dom: &Domain,
    d: u32,
    alpha: f64,
    include_k1: bool,
    settings: &DetMaxSettings,
) -> Result<(PutinarCertificate, DetMaxState), DetMaxError> {
    let mut opts = AttractorOptions::new(d, alpha);
    opts.include_k1 = include_k1;
    opts.epsilon = settings.epsilon;
    opts.degree_rule = settings.degree_rule;
    opts.min_eig_slack = true;
    let probe = assemble_attractor_sdp(sys, dom, &opts)?;
    let nj = probe.j_size();
    let cap = settings.trace_cap.unwrap_or(1e4 * nj as f64);
    opts.trace_cap = Some(cap);

    let phase1 = assemble_attractor_sdp(sys, dom, &opts)?;
    let sol = settings.solver.solve(&phase1.problem)?;
    let fail = |reason: String| DetMaxError::NoCertificate { d, reason };
    if !usable(sol.status) {
        return Err(fail(format!("phase-1 solver status {:?}", sol.status)));
    }
    let t = phase1.slack_value(&sol).unwrap_or(0.0);
    if t < 0.0 {
        return Err(fail(format!("phase-1 eigenvalue margin {t:.3e} is negative")));
    }
    let cert0 = extract_certificate(&phase1, &sol).map_err(|e| fail(e.to_string()))?;
    let p0 = phase1.j_gram_normalized(&sol);
    let ld0 = logdet_original(&phase1, &p0).ok_or(DetMaxError::NotPositiveDefinite)?;

    let mut history = vec![HistoryEntry {
        step: 0,
        logdet: ld0,
        detroot: (ld0 / nj as f64).exp(),
        step_size: 1.0,
        fw_gap: f64::NAN,
        solver_iterations: sol.iterations,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        cap_active: p0.trace() >= cap * (1.0 - 1e-4),
    }];
    let mut atoms = vec![p0.clone()];
    let mut certs = vec![cert0];
    let mut weights = vec![1.0];
    let mut iterate = p0;
    let mut diagnostic = None;
    let mut trust_radius = 1.0;
    let mut surges = 0;

    opts.min_eig_slack = false;
    for step in 1..=settings.max_outer {
        let grad = linearize_logdet(&iterate)?;
        opts.objective_gradient = Some(grad.clone());
        let sdp = assemble_attractor_sdp(sys, dom, &opts)?;
        let sol = settings.solver.solve(&sdp.problem)?;
        let vertex = if usable(sol.status) {
            extract_certificate(&sdp, &sol).ok()
        } else {
            None
        };
        let Some(vcert) = vertex else {
            diagnostic = Some(DetMaxDiagnostic::SubproblemFailed);
            break;
        };
        let pv = sdp.j_gram_normalized(&sol);
        let fw_gap = grad.dot(&pv) - nj as f64;
        let cap_active = pv.trace() >= cap * (1.0 - 1e-4);

        atoms.push(pv);
        certs.push(vcert);
        weights.push(0.0);
        let prev = weights.clone();
        weights = optimize_weights(&atoms, weights, 200);
        let moved = weights.last().copied().unwrap_or(0.0);
        let candidate = mix(&atoms, &weights);
        let prev_ld = history.last().map(|h| h.logdet).unwrap_or(f64::NEG_INFINITY);
        let ld = logdet_original(&sdp, &candidate).unwrap_or(f64::NEG_INFINITY);
        if ld < prev_ld {
            // keep the previous combination; the new vertex stays available
            weights = prev;
        } else {
            iterate = candidate;
        }
        let ld = ld.max(prev_ld);
        let detroot = (ld / nj as f64).exp();
        let prev_root = history.last().map(|h| h.detroot).unwrap_or(0.0);
        trust_radius = moved;
        history.push(HistoryEntry {
            step,
            logdet: ld,
            detroot,
            step_size: moved,
            fw_gap,
            solver_iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            cap_active,
        });

        if cap_active && detroot > 10.0 * prev_root {
            surges += 1;
        } else {
            surges = 0;
        }
        if surges >= 5 {
            diagnostic = Some(DetMaxDiagnostic::VolumeZeroSuspected);
            break;
        }
        if (detroot - prev_root).abs() <= settings.stall_tol * prev_root.abs() {
            break;
        }
    }

    // Growth straight onto the cap stops the loop before any run of surges;
    // an optimum held by the cap means det is unbounded without it.
    if diagnostic.is_none() && iterate.trace() >= cap * (1.0 - 1e-3) {
        diagnostic = Some(DetMaxDiagnostic::VolumeZeroSuspected);
    }
    let parts: Vec<(&PutinarCertificate, f64)> = certs
        .iter()
        .zip(&weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(c, &w)| (c, w))
        .collect();
    let cert = PutinarCertificate::combine(&parts)?;
    let state = DetMaxState {
        iterate,
        step: history.len() - 1,
        history,
        trust_radius,
        trace_cap: cap,
        diagnostic,
    };
    Ok((cert, state))
}
