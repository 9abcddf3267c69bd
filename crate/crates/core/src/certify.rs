//! Sampling checks of the Lyapunov conditions and the constructive converse
//! (fit `√(W+γ)`, shift, square).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynsys::{Domain, DynamicalSystem, SystemError};
use crate::geometry;
use crate::poly::{lie_derivative, monomial_basis, Monomial, PolyError, PolyEval, Polynomial};
use crate::soscomp::{normalization_radius, PutinarCertificate, SosCertificate};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error(transparent)]
    Domain(#[from] SystemError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("certificate has dimension {got}, system has {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("{n_fit} fit points for a basis of {basis} monomials")]
    TooFewPoints { n_fit: usize, basis: usize },
    #[error("least-squares matrix has numerical rank {rank} < {basis} (condition {condition:.2e})")]
    RankDeficient { rank: usize, basis: usize, condition: f64 },
    #[error("fit target is not finite at {0:?}")]
    NonFiniteTarget(Vec<f64>),
    #[error("W is negative ({value:.3e}) at {point:?}")]
    NegativeW { value: f64, point: Vec<f64> },
    #[error("gradient of W disagrees with finite differences by {error:.3e} at {point:?}")]
    InconsistentGradient { error: f64, point: Vec<f64> },
    #[error("invalid converse parameters: {0}")]
    Parameters(String),
    #[error(
        "held-out fit error {fit_error:.3e} is not below δσ = {bound:.3e} at degree {degree}; a higher degree is required"
    )]
    FitTooCoarse {
        fit_error: f64,
        bound: f64,
        degree: u32,
        partial: Box<ConverseResult>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSettings {
    pub n_interior: usize,
    pub n_boundary: usize,
    pub seed: u64,
    pub descent_steps: usize,
}

impl Default for CheckSettings {
    fn default() -> Self {
        CheckSettings {
            n_interior: 100_000,
            n_boundary: 10_000,
            seed: 0,
            descent_steps: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// max over Ω samples of `∇Jᵀf + J − 1`.
    pub max_lyapunov_residual: f64,
    pub residual_argmax: Vec<f64>,
    /// min over ∂Ω samples of `J − 1 − α`.
    pub min_boundary_margin: f64,
    pub boundary_argmin: Vec<f64>,
    pub alpha: f64,
    pub sublevel_nonempty: bool,
    pub witness: Vec<f64>,
    pub witness_value: f64,
    /// Whether the witness came from the descent fallback.
    pub witness_from_descent: bool,
    /// `J > 1` on every ∂Ω sample.
    pub sublevel_inside_interior: bool,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub seed: u64,
}

impl CertificateReport {
    pub fn passes(&self, residual_tol: f64) -> bool {
        self.max_lyapunov_residual <= residual_tol
            && self.min_boundary_margin > 0.0
            && self.sublevel_nonempty
            && self.sublevel_inside_interior
    }
}

/// Index and value of the largest entry; ties keep the first index so the
/// result is independent of how samples were produced in parallel.
fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
}

pub fn check_certificate(
    cert: &PutinarCertificate,
    sys: &DynamicalSystem,
    dom: &Domain,
    settings: &CheckSettings,
) -> Result<CertificateReport, CertifyError> {
    check_lyapunov(cert.lyapunov(), cert.alpha, sys, dom, settings)
}

/// The three sampled conditions for an arbitrary polynomial `j`.
pub fn check_lyapunov(
    j: &Polynomial,
    alpha: f64,
    sys: &DynamicalSystem,
    dom: &Domain,
    settings: &CheckSettings,
) -> Result<CertificateReport, CertifyError> {
    if j.dim() != sys.n || dom.dim() != sys.n {
        return Err(CertifyError::Dimension { got: j.dim(), expected: sys.n });
    }
    let lie = lie_derivative(j, &sys.f)?;
    let residual = (&(&lie + j) - &Polynomial::constant(sys.n, 1.0)).evaluator();
    let je = j.evaluator();

    let interior = dom.sample_interior(settings.n_interior, settings.seed)?;
    let res: Vec<f64> = interior.iter().map(|x| residual.eval(x)).collect();
    let (ri, rmax) = argmax(&res);
    let jv: Vec<f64> = interior.iter().map(|x| je.eval(x)).collect();
    let (mi, neg_min) = argmax(&jv.iter().map(|v| -v).collect::<Vec<_>>());

    let boundary = dom.sample_boundary(settings.n_boundary, settings.seed.wrapping_add(1))?;
    let margins: Vec<f64> = boundary.iter().map(|x| -(je.eval(x) - 1.0 - alpha)).collect();
    let (bi, neg_margin) = argmax(&margins);
    let (min_margin, b_arg) = if boundary.is_empty() {
        (f64::NAN, Vec::new())
    } else {
        (-neg_margin, boundary[bi].clone())
    };

    let (mut witness, mut wval, mut descended) = (Vec::new(), f64::INFINITY, false);
    if !interior.is_empty() {
        witness = interior[mi].clone();
        wval = -neg_min;
        if wval > 1.0 {
            let (x, v) = descend(j, dom, &witness, settings.descent_steps);
            if v < wval {
                witness = x;
                wval = v;
                descended = true;
            }
        }
    }
    Ok(CertificateReport {
        max_lyapunov_residual: rmax,
        residual_argmax: interior.get(ri).cloned().unwrap_or_default(),
        min_boundary_margin: min_margin,
        boundary_argmin: b_arg,
        alpha,
        sublevel_nonempty: wval <= 1.0,
        witness,
        witness_value: wval,
        witness_from_descent: descended,
        sublevel_inside_interior: !boundary.is_empty() && min_margin + alpha > 0.0,
        n_interior: interior.len(),
        n_boundary: boundary.len(),
        seed: settings.seed,
    })
}

/// Backtracking gradient descent on `j`, rejecting steps that leave Ω.
fn descend(j: &Polynomial, dom: &Domain, x0: &[f64], steps: usize) -> (Vec<f64>, f64) {
    let grad: Vec<PolyEval> = j.gradient().iter().map(Polynomial::evaluator).collect();
    let je = j.evaluator();
    let mut x = x0.to_vec();
    let mut v = je.eval(&x);
    let mut t = 1.0;
    for _ in 0..steps {
        let g: Vec<f64> = grad.iter().map(|p| p.eval(&x)).collect();
        let gn2: f64 = g.iter().map(|c| c * c).sum();
        if gn2 == 0.0 || v <= 1.0 {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            if dom.contains(&y) {
                let vy = je.eval(&y);
                if vy <= v - 1e-4 * t * gn2 {
                    x = y;
                    v = vy;
                    accepted = true;
                    t *= 2.0;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (x, v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub nonempty: bool,
    pub diagnostic: Option<String>,
}

/// A certificate satisfying the Lyapunov inequality on an Ω that contains the
/// attractor has a nonempty 1-sublevel set. An empty one means Ω misses the
/// attractor.
pub fn check_boundary_condition_via_lemma(
    cert: &PutinarCertificate,
    sys: &DynamicalSystem,
    dom: &Domain,
    settings: &CheckSettings,
) -> Result<LemmaCheck, CertifyError> {
    let j = cert.lyapunov();
    if j.degree() == 0 {
        return Ok(LemmaCheck {
            nonempty: false,
            diagnostic: Some("constant J carries no sublevel information".into()),
        });
    }
    let r = check_lyapunov(j, cert.alpha, sys, dom, settings)?;
    Ok(LemmaCheck {
        nonempty: r.sublevel_nonempty,
        diagnostic: (!r.sublevel_nonempty).then(|| {
            format!(
                "1-sublevel set is empty (min J = {:.6}); the attractor is not inside Ω, enlarge Ω",
                r.witness_value
            )
        }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFit {
    pub poly: Polynomial,
    /// Max |h − R| over a held-out sample set.
    pub sup_error: f64,
    pub rms_error: f64,
    pub n_fit: usize,
    pub n_holdout: usize,
    pub rank: usize,
    /// Ratio of extreme singular values of the (normalized) design matrix.
    pub condition: f64,
}

/// Least-squares fit of `h` over the degree-`d` monomials on uniform Ω
/// samples. The design matrix uses coordinates scaled into the unit cube and
/// is solved by SVD with a rank check.
pub fn fit_polynomial<H>(h: H, dom: &Domain, d: u32, n_fit: usize, seed: u64) -> Result<PolynomialFit, CertifyError>
where
    H: Fn(&[f64]) -> f64 + Sync,
{
    let n = dom.dim();
    let basis = monomial_basis(n, d);
    if n_fit < basis.len() {
        return Err(CertifyError::TooFewPoints { n_fit, basis: basis.len() });
    }
    let r = normalization_radius(dom);
    let pts = dom.sample_interior(n_fit, seed)?;
    let mut a = DMatrix::zeros(n_fit, basis.len());
    let mut b = DVector::zeros(n_fit);
    let mut u = vec![0.0; n];
    for (i, x) in pts.iter().enumerate() {
        let v = h(x);
        if !v.is_finite() {
            return Err(CertifyError::NonFiniteTarget(x.clone()));
        }
        b[i] = v;
        u.iter_mut().zip(x).for_each(|(ui, xi)| *ui = xi / r);
        for (k, m) in basis.iter().enumerate() {
            a[(i, k)] = m.eval(&u);
        }
    }
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let tol = smax * f64::EPSILON * n_fit.max(basis.len()) as f64;
    let rank = sv.iter().filter(|s| **s > tol).count();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if rank < basis.len() {
        return Err(CertifyError::RankDeficient { rank, basis: basis.len(), condition });
    }
    let c = svd.solve(&b, tol).map_err(|e| CertifyError::Parameters(e.to_string()))?;
    let coeffs: Vec<f64> = basis
        .iter()
        .zip(c.iter())
        .map(|(m, ck)| ck / r.powi(m.degree() as i32))
        .collect();
    let poly = Polynomial::from_coefficients(n, &basis, &coeffs);

    let n_holdout = (n_fit / 2).max(1000);
    let pe = poly.evaluator();
    let errs = dom.sample_interior_map(n_holdout, seed.wrapping_add(0x401d), |x| (h(x) - pe.eval(x)).abs())?;
    let sup_error = errs.iter().copied().fold(0.0, f64::max);
    let rms_error = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
    Ok(PolynomialFit {
        poly,
        sup_error,
        rms_error,
        n_fit,
        n_holdout,
        rank,
        condition,
    })
}

/// Constants of the converse construction, sup-norms as sampled estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverseConstructionParams {
    pub gamma: f64,
    pub sigma: f64,
    pub delta: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub c: f64,
    /// Sampled min of W on ∂Ω (deflated).
    pub min_w_boundary: f64,
    /// Estimated Lebesgue measure of Ω.
    pub mu_omega: f64,
    pub d: u32,
    pub n_samples: usize,
}

impl ConverseConstructionParams {
    /// Upper bounds on δ.
    pub fn delta_bound(&self) -> f64 {
        let sg = self.gamma.sqrt();
        let (m1, m2, m3) = (self.m1, self.m2, self.m3);
        ((sg - m1 * m3) / (m1 * m2 + m1 * m3 + m2)).min(sg / m2)
    }

    /// Upper bound on σ for the stored δ, θ.
    pub fn sigma_bound(&self) -> f64 {
        sigma_bound(self.gamma, self.m1, self.m2, self.m3, self.mu_omega, self.theta, self.delta)
    }

    /// Checks every inequality the construction relies on.
    pub fn validate(&self) -> Result<(), CertifyError> {
        let bad = |s: String| Err(CertifyError::Parameters(s));
        if !(self.gamma > self.m1 * self.c / 2.0) {
            return bad(format!("γ = {} is not above M1·C/2 = {}", self.gamma, self.m1 * self.c / 2.0));
        }
        if !(self.alpha > 0.0 && self.alpha < self.min_w_boundary / self.gamma) {
            return bad(format!("α = {} outside (0, min W/γ = {})", self.alpha, self.min_w_boundary / self.gamma));
        }
        let theta_max = self.epsilon.min((self.mu_omega + 1.0) * (self.min_w_boundary - self.gamma * self.alpha));
        if !(self.theta > 0.0 && self.theta < theta_max) {
            return bad(format!("θ = {} outside (0, {theta_max})", self.theta));
        }
        if !(self.delta > 0.0 && self.delta < self.delta_bound()) {
            return bad(format!("δ = {} outside (0, {})", self.delta, self.delta_bound()));
        }
        if !(self.sigma > 0.0 && self.sigma < self.sigma_bound()) {
            return bad(format!("σ = {} outside (0, {})", self.sigma, self.sigma_bound()));
        }
        Ok(())
    }
}

fn sigma_bound(gamma: f64, m1: f64, m2: f64, m3: f64, mu: f64, theta: f64, delta: f64) -> f64 {
    let sg = gamma.sqrt();
    let dl = delta;
    let b1 = 2.0 * (sg - (m1 * m2 + m1 * m3 + m2) * dl - m1 * m3)
        / ((2.0 * m1 + 1.0) * dl * dl + 2.0 * (1.0 + m1) * dl + 1.0);
    let b2 = 2.0 * (sg - m2 * dl) / ((dl + 1.0) * (dl + 1.0));
    let b3 = theta.sqrt() / ((2.0 * (mu + 1.0)).sqrt() * (dl + 1.0));
    let b4 = theta / (4.0 * m2 * (dl + 1.0) * (mu + 1.0));
    b1.min(b2).min(b3).min(b4)
}

/// How the free constants are picked when not given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConverseAuto {
    /// γ = gamma_factor · M1·C/2; must exceed 1.
    pub gamma_factor: f64,
    /// Each remaining constant is this fraction of its strict upper bound.
    pub fraction: f64,
    pub epsilon: f64,
    /// Points for the sup-norm estimates.
    pub n_constants: usize,
    pub n_boundary: usize,
    pub n_fit: usize,
    /// Safety inflation of sampled sups (deflation of the sampled min).
    pub inflation: f64,
    pub seed: u64,
}

impl Default for ConverseAuto {
    fn default() -> Self {
        ConverseAuto {
            gamma_factor: 2.0,
            fraction: 0.5,
            epsilon: 1.0,
            n_constants: 1_000_000,
            n_boundary: 10_000,
            n_fit: 20_000,
            inflation: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverseResult {
    /// `P_d = (R_d − σ)² / γ`.
    pub certificate: SosCertificate,
    /// Coefficients `v` over `certificate.basis` with Gram `= v vᵀ`.
    pub factor: Vec<f64>,
    pub report: CertificateReport,
    pub params: ConverseConstructionParams,
    /// Held-out sup |H − R_d|.
    pub fit_error: f64,
    /// Held-out sup ‖∇H − ∇R_d‖.
    pub fit_gradient_error: f64,
    /// `fit_error < δσ`.
    pub fit_bound_met: bool,
}

/// Sampled-sup constants for W on Ω. Also enforces the preconditions on W.
struct Sampled {
    m1: f64,
    c: f64,
    min_w_boundary: f64,
    mu: f64,
}

fn sample_constants<W, G>(w: &W, grad_w: &G, sys: &DynamicalSystem, dom: &Domain, auto: &ConverseAuto) -> Result<Sampled, CertifyError>
where
    W: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    let n = sys.n;
    let f: Vec<PolyEval> = sys.f.iter().map(Polynomial::evaluator).collect();
    let vals = dom.sample_interior_map(auto.n_constants, auto.seed, |x| {
        let fx: f64 = f.iter().map(|p| p.eval(x).powi(2)).sum::<f64>().sqrt();
        let mut g = vec![0.0; n];
        grad_w(x, &mut g);
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        (fx, gn, w(x))
    })?;
    let pts = dom.sample_interior(64, auto.seed.wrapping_add(7))?;
    if let Some((k, v)) = vals.iter().map(|t| t.2).enumerate().find(|(_, v)| *v < 0.0 || !v.is_finite()) {
        let point = dom.sample_interior(k + 1, auto.seed)?.pop().unwrap_or_default();
        return Err(CertifyError::NegativeW { value: v, point });
    }
    for x in &pts {
        let mut g = vec![0.0; n];
        grad_w(x, &mut g);
        let scale = 1.0 + g.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for i in 0..n {
            let h = 1e-6 * (1.0 + x[i].abs());
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fd = (w(&xp) - w(&xm)) / (2.0 * h);
            let err = (fd - g[i]).abs() / scale;
            if err > 1e-4 {
                return Err(CertifyError::InconsistentGradient { error: err, point: x.clone() });
            }
        }
    }
    let up = 1.0 + auto.inflation;
    let m1 = up * vals.iter().map(|t| t.0).fold(0.0, f64::max);
    let c = up * vals.iter().map(|t| t.1).fold(0.0, f64::max);
    let bpts = dom.sample_boundary(auto.n_boundary, auto.seed.wrapping_add(3))?;
    let min_w_boundary = (1.0 - auto.inflation) * bpts.iter().map(|x| w(x)).fold(f64::INFINITY, f64::min);
    let mu = geometry::mc_volume(|x| dom.contains(x), &dom.bounding_box, auto.n_constants, auto.seed.wrapping_add(5)).value;
    Ok(Sampled { m1, c, min_w_boundary, mu })
}

/// Picks γ, α, θ, δ, σ from sampled constants. δ is chosen to maximize the
/// fit tolerance δσ.
pub fn auto_params<W, G>(
    w: &W,
    grad_w: &G,
    sys: &DynamicalSystem,
    dom: &Domain,
    d: u32,
    auto: &ConverseAuto,
) -> Result<ConverseConstructionParams, CertifyError>
where
    W: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    if !(auto.gamma_factor > 1.0) || !(auto.fraction > 0.0 && auto.fraction < 1.0) || !(auto.epsilon > 0.0) {
        return Err(CertifyError::Parameters("need gamma_factor > 1, 0 < fraction < 1, epsilon > 0".into()));
    }
    let s = sample_constants(w, grad_w, sys, dom, auto)?;
    if !(s.min_w_boundary > 0.0) {
        return Err(CertifyError::Parameters(format!(
            "min of W on the boundary is {:.3e}; the attractor must lie in the interior",
            s.min_w_boundary
        )));
    }
    let gamma = auto.gamma_factor * s.m1 * s.c / 2.0;
    let up = 1.0 + auto.inflation;
    let n = sys.n;
    let hs = dom.sample_interior_map(auto.n_constants, auto.seed, |x| {
        let wv = w(x);
        let mut g = vec![0.0; n];
        grad_w(x, &mut g);
        let h = (wv + gamma).sqrt();
        (h, g.iter().map(|v| v * v).sum::<f64>().sqrt() / (2.0 * h))
    })?;
    let m2 = up * hs.iter().map(|t| t.0).fold(0.0, f64::max);
    let m3 = up * hs.iter().map(|t| t.1).fold(0.0, f64::max);
    let fr = auto.fraction;
    let alpha = fr * s.min_w_boundary / gamma;
    let theta = fr * auto.epsilon.min((s.mu + 1.0) * (s.min_w_boundary - gamma * alpha));
    let mut p = ConverseConstructionParams {
        gamma,
        sigma: 0.0,
        delta: 0.0,
        theta,
        epsilon: auto.epsilon,
        alpha,
        m1: s.m1,
        m2,
        m3,
        c: s.c,
        min_w_boundary: s.min_w_boundary,
        mu_omega: s.mu,
        d,
        n_samples: auto.n_constants,
    };
    let dmax = p.delta_bound();
    if !(dmax > 0.0) {
        return Err(CertifyError::Parameters(format!("no admissible δ (bound {dmax:.3e})")));
    }
    let (mut best_d, mut best_prod) = (0.0, f64::NEG_INFINITY);
    for k in 0..=400 {
        let dl = fr * dmax * 10f64.powf(-8.0 * (1.0 - k as f64 / 400.0));
        let sg = fr * sigma_bound(gamma, s.m1, m2, m3, s.mu, theta, dl);
        if sg > 0.0 && dl * sg > best_prod {
            best_prod = dl * sg;
            best_d = dl;
        }
    }
    p.delta = best_d;
    p.sigma = fr * p.sigma_bound();
    p.validate()?;
    Ok(p)
}

/// Runs the converse construction: fit `R_d ≈ √(W+γ)`, return
/// `P_d = (R_d − σ)²/γ` as an explicit square with its sampled report.
///
/// When the held-out fit error is not below δσ the result is still built and
/// returned inside [`CertifyError::FitTooCoarse`].
#[allow(clippy::too_many_arguments)]
pub fn converse_construct<W, G>(
    w: W,
    grad_w: G,
    sys: &DynamicalSystem,
    dom: &Domain,
    d: u32,
    params: Option<ConverseConstructionParams>,
    auto: &ConverseAuto,
    check: &CheckSettings,
) -> Result<ConverseResult, CertifyError>
where
    W: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    let params = match params {
        Some(p) => {
            p.validate()?;
            p
        }
        None => auto_params(&w, &grad_w, sys, dom, d, auto)?,
    };
    let gamma = params.gamma;
    let h = |x: &[f64]| (w(x) + gamma).sqrt();
    let fit = fit_polynomial(h, dom, d, auto.n_fit, auto.seed.wrapping_add(11))?;

    let n = sys.n;
    let grad_r: Vec<PolyEval> = fit.poly.gradient().iter().map(Polynomial::evaluator).collect();
    let grad_errs = dom.sample_interior_map(auto.n_fit / 2, auto.seed.wrapping_add(13), |x| {
        let mut g = vec![0.0; n];
        grad_w(x, &mut g);
        let hx = h(x);
        g.iter()
            .zip(&grad_r)
            .map(|(gw, gr)| (gw / (2.0 * hx) - gr.eval(x)).powi(2))
            .sum::<f64>()
            .sqrt()
    })?;
    let fit_gradient_error = grad_errs.into_iter().fold(0.0, f64::max);

    let basis: Vec<Monomial> = monomial_basis(n, d);
    let sg = gamma.sqrt();
    let factor: Vec<f64> = basis
        .iter()
        .map(|m| {
            let c = fit.poly.coeff(m);
            if m.is_constant() {
                (c - params.sigma) / sg
            } else {
                c / sg
            }
        })
        .collect();
    let v = DVector::from_column_slice(&factor);
    let certificate = SosCertificate::from_gram(basis, &v * v.transpose());
    let report = check_lyapunov(&certificate.poly, params.alpha, sys, dom, check)?;
    let bound = params.delta * params.sigma;
    let result = ConverseResult {
        certificate,
        factor,
        report,
        fit_error: fit.sup_error,
        fit_gradient_error,
        fit_bound_met: fit.sup_error < bound && fit_gradient_error < bound,
        params,
    };
    if !result.fit_bound_met {
        return Err(CertifyError::FitTooCoarse {
            fit_error: fit.sup_error.max(fit_gradient_error),
            bound,
            degree: d,
            partial: Box::new(result),
        });
    }
    Ok(result)
}

/// Analytic strict Lyapunov functions for builtin systems, as `(W, ∇W)`.
pub type AnalyticW = (fn(&[f64]) -> f64, fn(&[f64], &mut [f64]));

pub fn analytic_w(system: &str) -> Option<AnalyticW> {
    match system {
        "ahmadi7" => Some((ahmadi_w, ahmadi_grad_w)),
        _ => None,
    }
}

/// `(x₁⁴ + x₂⁴) / (x₁² + x₂²)`, zero at the origin.
fn ahmadi_w(x: &[f64]) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 == 0.0 {
        return 0.0;
    }
    (x[0].powi(4) + x[1].powi(4)) / r2
}

fn ahmadi_grad_w(x: &[f64], g: &mut [f64]) {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 == 0.0 {
        g.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let q = x[0].powi(4) + x[1].powi(4);
    for i in 0..2 {
        g[i] = (4.0 * x[i].powi(3) * r2 - 2.0 * x[i] * q) / (r2 * r2);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    fn line(g: &str, lo: f64, hi: f64) -> Domain {
        Domain::new(parse_polynomial(g, 1).unwrap(), vec![[lo, hi]]).unwrap()
    }

    fn decay() -> DynamicalSystem {
        DynamicalSystem::new("decay", vec![parse_polynomial("-x1", 1).unwrap()], 1.0, 1.0).unwrap()
    }

    fn small() -> CheckSettings {
        CheckSettings { n_interior: 20_000, n_boundary: 200, ..Default::default() }
    }

    #[test]
    fn hand_computed_report() {
        let dom = line("4 - x1^2", -2.5, 2.5);
        let j = parse_polynomial("1 + x1^2", 1).unwrap();
        let r = check_lyapunov(&j, 0.01, &decay(), &dom, &small()).unwrap();
        assert!(r.max_lyapunov_residual <= 0.0 && r.max_lyapunov_residual > -1e-6);
        assert!((r.min_boundary_margin - (4.0 - 0.01)).abs() < 1e-9);
        assert!(r.sublevel_nonempty && r.witness_value < 1.0 + 1e-6);
        assert!(r.sublevel_inside_interior && r.passes(1e-6));
    }

    #[test]
    fn shifted_domain_asks_for_larger_omega() {
        // J = x²/2 decreases along f = -x, but Ω = [2, 4] misses the origin
        let basis = crate::poly::monomial_basis(1, 1);
        let gram = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 0.5]);
        let j = SosCertificate::from_gram(basis.clone(), gram.clone());
        let cert = PutinarCertificate {
            n: 1,
            d: 2,
            alpha: 1e-4,
            epsilon: 0.0,
            j: j.clone(),
            s0: None,
            p0: Polynomial::zero(1),
            k0: j,
            k1: None,
        };
        let dom = line("1 - (x1 - 3)^2", 1.5, 4.5);
        let r = check_boundary_condition_via_lemma(&cert, &decay(), &dom, &small()).unwrap();
        assert!(!r.nonempty);
        assert!(r.diagnostic.unwrap().contains("enlarge Ω"));

        let centred = line("1 - x1^2", -1.5, 1.5);
        let r = check_boundary_condition_via_lemma(&cert, &decay(), &centred, &small()).unwrap();
        assert!(r.nonempty && r.diagnostic.is_none());
    }

    #[test]
    fn degenerate_constants() {
        let dom = line("4 - x1^2", -2.5, 2.5);
        let two = Polynomial::constant(1, 2.0);
        let r = check_lyapunov(&two, 0.01, &decay(), &dom, &small()).unwrap();
        assert!(!r.sublevel_nonempty);
        let zero = Polynomial::zero(1);
        let r = check_lyapunov(&zero, 0.01, &decay(), &dom, &small()).unwrap();
        assert!(r.min_boundary_margin < 0.0 && !r.sublevel_inside_interior);
    }

    #[test]
    fn descent_finds_small_sublevel() {
        // J ≤ 1 only on |x| ≤ 1e-3, far smaller than the sample spacing.
        let dom = line("4 - x1^2", -2.5, 2.5);
        let j = parse_polynomial("0.999999 + x1^2", 1).unwrap();
        let s = CheckSettings { n_interior: 50, n_boundary: 20, ..Default::default() };
        let r = check_lyapunov(&j, 0.0, &decay(), &dom, &s).unwrap();
        assert!(r.sublevel_nonempty && r.witness_from_descent, "{r:?}");
    }

    #[test]
    fn fit_recovers_polynomials() {
        let dom = line("1 - x1^2", -1.2, 1.2);
        let p = parse_polynomial("0.5 - 2*x1 + 3*x1^3", 1).unwrap();
        let fit = fit_polynomial(|x| p.eval(x), &dom, 4, 200, 1).unwrap();
        assert!(fit.sup_error < 1e-8);
        assert!(matches!(
            fit_polynomial(|x| x[0], &dom, 8, 5, 1),
            Err(CertifyError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn abs_fit_improves_with_degree() {
        let dom = line("1 - x1^2", -1.2, 1.2);
        let e: Vec<f64> = [2, 4, 8]
            .iter()
            .map(|&d| fit_polynomial(|x| x[0].abs(), &dom, d, 2000, 2).unwrap().sup_error)
            .collect();
        assert!(e[0] > e[1] && e[1] > e[2] && e[2] > 0.0, "{e:?}");
    }

    #[test]
    fn converse_on_linear_decay() {
        let dom = line("4 - x1^2", -2.5, 2.5);
        let auto = ConverseAuto { n_constants: 50_000, n_boundary: 100, n_fit: 4000, ..Default::default() };
        let res = converse_construct(
            |x: &[f64]| x[0] * x[0],
            |x: &[f64], g: &mut [f64]| g[0] = 2.0 * x[0],
            &decay(),
            &dom,
            8,
            None,
            &auto,
            &small(),
        );
        let res = match res {
            Ok(r) => r,
            Err(CertifyError::FitTooCoarse { partial, .. }) => *partial,
            Err(e) => panic!("{e}"),
        };
        assert!(res.params.gamma > res.params.m1 * res.params.c / 2.0);
        assert!(res.report.max_lyapunov_residual < 0.0, "{:?}", res.report);
        assert!(res.report.sublevel_nonempty && res.report.sublevel_inside_interior);
        assert!(res.certificate.poly.eval(&[0.0]) <= 1.0);
        let v = DVector::from_column_slice(&res.factor);
        assert_eq!(res.certificate.gram, &v * v.transpose());
    }

    #[test]
    fn ahmadi_gradient_matches_differences() {
        let x = [0.3, -0.7];
        let mut g = [0.0; 2];
        ahmadi_grad_w(&x, &mut g);
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += 1e-6;
            xm[i] -= 1e-6;
            assert!(((ahmadi_w(&xp) - ahmadi_w(&xm)) / 2e-6 - g[i]).abs() < 1e-8);
        }
    }
}
