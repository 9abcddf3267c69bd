//! Compilation of sum-of-squares constraints into semidefinite programs.
//!
//! A polynomial `p` of degree at most `d` is SOS exactly when
//! `p = z(x)ᵀ P z(x)` for some PSD `P`, where `z` holds the monomials of
//! degree at most `d/2`. Matching coefficients of both sides gives linear
//! equalities on `P`. [`assemble_attractor_sdp`] builds the full attractor
//! program
//!
//! ```text
//! J  = zᵀ P_J z,  P_J ⪰ εI
//! k₀ = -∇Jᵀf - (J - 1) - s₀ g      (SOS)
//! k₁ = (J - 1 - α) - p₀ g          (SOS, optional)
//! s₀ SOS, p₀ free
//! ```
//!
//! Internally the program is posed in coordinates normalized by the radius
//! of the domain's bounding box so that every monomial is bounded by one on
//! the domain; certificates are mapped back on extraction.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynsys::{rescale_field, DynamicalSystem, Domain};
use crate::poly::{lie_derivative, monomial_basis, Monomial, PolyError, Polynomial};
use crate::sdp::{self, SdpError, SdpProblem, SdpSolution, SolveStatus, SolverSettings, VarRef};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SosError {
    #[error("degree {0} must be even")]
    OddDegree(u32),
    #[error("monomial {0} is not reachable by the Gram basis")]
    Unreachable(String),
    #[error("degree bookkeeping overflow: identity has a term of degree {found} above the multiplier capacity {cap}")]
    DegreeOverflow { found: u32, cap: u32 },
    #[error("empty monomial basis")]
    EmptyBasis,
    #[error("solution is not usable (status {0:?})")]
    NotSolved(SolveStatus),
    #[error("{which} identity residual {residual:.3e} exceeds tolerance; solver result is not a certificate")]
    IdentityResidual { which: &'static str, residual: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

/// Gram basis for degree-`d` SOS polynomials and the map from each
/// reachable monomial to the Gram positions `(i, j)`, `i <= j`, 0-based,
/// whose basis product equals it.
#[derive(Debug, Clone)]
pub struct GramIndex {
    pub n: usize,
    pub d: u32,
    pub basis: Vec<Monomial>,
    pub positions: BTreeMap<Monomial, Vec<(usize, usize)>>,
}

pub fn gram_parametrize(d: u32, n: usize) -> Result<GramIndex, SosError> {
    if d % 2 != 0 {
        return Err(SosError::OddDegree(d));
    }
    let basis = monomial_basis(n, d / 2);
    let mut positions: BTreeMap<Monomial, Vec<(usize, usize)>> = BTreeMap::new();
    for i in 0..basis.len() {
        for j in i..basis.len() {
            positions.entry(basis[i].mul(&basis[j])).or_default().push((i, j));
        }
    }
    Ok(GramIndex { n, d, basis, positions })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRow {
    pub monomial: Monomial,
    /// Gram positions with their coefficient (2 off the diagonal).
    pub entries: Vec<((usize, usize), f64)>,
    pub rhs: f64,
}

/// One equality per reachable monomial forcing `zᵀ P z = p`.
pub fn equate_coefficients(p: &Polynomial, index: &GramIndex) -> Result<Vec<CoefficientRow>, SosError> {
    if p.dim() != index.n {
        return Err(SosError::Dimension(format!("polynomial in {} variables, basis in {}", p.dim(), index.n)));
    }
    if let Some((m, _)) = p.terms().find(|(m, _)| !index.positions.contains_key(*m)) {
        return Err(SosError::Unreachable(m.to_string()));
    }
    Ok(index
        .positions
        .iter()
        .map(|(m, pos)| CoefficientRow {
            monomial: m.clone(),
            entries: pos.iter().map(|&(i, j)| ((i, j), if i == j { 1.0 } else { 2.0 })).collect(),
            rhs: p.coeff(m),
        })
        .collect())
}

/// Expands `zᵀ P z`.
pub fn gram_polynomial(basis: &[Monomial], gram: &DMatrix<f64>) -> Polynomial {
    let n = basis.first().map_or(0, |m| m.dim());
    let mut terms = Vec::with_capacity(basis.len() * (basis.len() + 1) / 2);
    for i in 0..basis.len() {
        terms.push((basis[i].mul(&basis[i]), gram[(i, i)]));
        for j in i + 1..basis.len() {
            terms.push((basis[i].mul(&basis[j]), gram[(i, j)] + gram[(j, i)]));
        }
    }
    Polynomial::from_terms(n, terms)
}

/// `p = zᵀ P z` with its basis and Gram matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SosRepr", try_from = "SosRepr")]
pub struct SosCertificate {
    pub basis: Vec<Monomial>,
    pub gram: DMatrix<f64>,
    pub poly: Polynomial,
}

impl SosCertificate {
    pub fn from_gram(basis: Vec<Monomial>, gram: DMatrix<f64>) -> Self {
        let gram = (&gram + gram.transpose()) * 0.5;
        let poly = gram_polynomial(&basis, &gram);
        SosCertificate { basis, gram, poly }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        sdp::min_eigenvalue(&self.gram).unwrap_or(f64::NAN)
    }

    pub fn is_sos(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Largest coefficient difference between `poly` and the expansion of
    /// the Gram matrix.
    pub fn expansion_error(&self) -> f64 {
        max_abs_coeff(&(&gram_polynomial(&self.basis, &self.gram) - &self.poly))
    }
}

#[derive(Serialize, Deserialize)]
struct SosRepr {
    basis: Vec<Monomial>,
    gram: Vec<Vec<f64>>,
    poly: Polynomial,
}

impl From<SosCertificate> for SosRepr {
    fn from(c: SosCertificate) -> Self {
        let n = c.gram.nrows();
        SosRepr {
            basis: c.basis,
            gram: (0..n).map(|i| c.gram.row(i).iter().copied().collect()).collect(),
            poly: c.poly,
        }
    }
}

impl TryFrom<SosRepr> for SosCertificate {
    type Error = SosError;
    fn try_from(r: SosRepr) -> Result<Self, SosError> {
        let n = r.basis.len();
        if r.gram.len() != n || r.gram.iter().any(|row| row.len() != n) {
            return Err(SosError::Dimension("Gram matrix does not match basis".into()));
        }
        let gram = DMatrix::from_fn(n, n, |i, j| r.gram[i][j]);
        Ok(SosCertificate {
            basis: r.basis,
            gram,
            poly: r.poly,
        })
    }
}

pub fn max_abs_coeff(p: &Polynomial) -> f64 {
    p.terms().map(|(_, c)| c.abs()).fold(0.0, f64::max)
}

/// Lyapunov certificate with its Putinar multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PutinarCertificate {
    pub n: usize,
    pub d: u32,
    pub alpha: f64,
    pub epsilon: f64,
    pub j: SosCertificate,
    pub s0: Option<SosCertificate>,
    pub p0: Polynomial,
    pub k0: SosCertificate,
    pub k1: Option<SosCertificate>,
}

impl PutinarCertificate {
    pub fn lyapunov(&self) -> &Polynomial {
        &self.j.poly
    }

    fn s0_poly(&self) -> Polynomial {
        self.s0.as_ref().map_or(Polynomial::zero(self.n), |s| s.poly.clone())
    }

    /// Coefficient-wise residuals of the two identities for the field `f`
    /// and domain polynomial `g` (second entry is `None` without `k₁`).
    pub fn identity_residuals(&self, f: &[Polynomial], g: &Polynomial) -> Result<(f64, Option<f64>), SosError> {
        let j = &self.j.poly;
        let one = Polynomial::constant(self.n, 1.0);
        let lie = lie_derivative(j, f)?;
        let k0 = &(&(-&lie) - &(j - &one)) - &(&self.s0_poly() * g);
        let r0 = max_abs_coeff(&(&k0 - &self.k0.poly));
        let r1 = self.k1.as_ref().map(|k1| {
            let rhs = &(j - &Polynomial::constant(self.n, 1.0 + self.alpha)) - &(&self.p0 * g);
            max_abs_coeff(&(&rhs - &k1.poly))
        });
        Ok((r0, r1))
    }

    /// Weighted sum of certificates of the same program. Both identities are
    /// linear in the unknowns, so a convex combination is again a
    /// certificate.
    pub fn combine(parts: &[(&PutinarCertificate, f64)]) -> Result<PutinarCertificate, SosError> {
        let (first, _) = *parts.first().ok_or(SosError::EmptyBasis)?;
        let same = |a: &PutinarCertificate| {
            a.n == first.n
                && a.d == first.d
                && a.j.basis == first.j.basis
                && a.k0.basis == first.k0.basis
                && a.s0.as_ref().map(|s| &s.basis) == first.s0.as_ref().map(|s| &s.basis)
                && a.k1.as_ref().map(|s| &s.basis) == first.k1.as_ref().map(|s| &s.basis)
        };
        if !parts.iter().all(|(c, _)| same(c)) {
            return Err(SosError::Dimension("certificates come from different programs".into()));
        }
        let mix = |pick: &dyn Fn(&PutinarCertificate) -> &SosCertificate| {
            let base = pick(first);
            let mut g = DMatrix::zeros(base.gram.nrows(), base.gram.ncols());
            for (c, w) in parts {
                g += pick(c).gram.clone() * *w;
            }
            SosCertificate::from_gram(base.basis.clone(), g)
        };
        let mut p0 = Polynomial::zero(first.n);
        for (c, w) in parts {
            p0 = &p0 + &c.p0.scale(*w);
        }
        Ok(PutinarCertificate {
            n: first.n,
            d: first.d,
            alpha: first.alpha,
            epsilon: first.epsilon,
            j: mix(&|c| &c.j),
            s0: first.s0.as_ref().map(|_| mix(&|c| c.s0.as_ref().unwrap())),
            p0,
            k0: mix(&|c| &c.k0),
            k1: first.k1.as_ref().map(|_| mix(&|c| c.k1.as_ref().unwrap())),
        })
    }

    /// Smallest Gram eigenvalue over J, s₀, k₀ and k₁.
    pub fn min_gram_eigenvalue(&self) -> f64 {
        let mut m = self.j.min_eigenvalue().min(self.k0.min_eigenvalue());
        if let Some(s) = &self.s0 {
            m = m.min(s.min_eigenvalue());
        }
        if let Some(k) = &self.k1 {
            m = m.min(k.min_eigenvalue());
        }
        m
    }
}

/// How multiplier degrees follow from the Lyapunov degree `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeRule {
    /// `k₀` is sized to hold `∇Jᵀf` and `s₀` fills the rest of that
    /// capacity; `p₀` fills the capacity of `k₁`.
    #[default]
    Full,
    /// Every multiplier product is capped at `d`.
    SharedCap,
    /// `s₀` and `p₀` both have degree `d`; `k₀`, `k₁` grow to fit.
    MultipliersAtD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplierDegrees {
    pub j: u32,
    pub s0: Option<u32>,
    pub k0: u32,
    pub p0: Option<u32>,
    pub k1: u32,
}

fn even_ceil(k: u32) -> u32 {
    k + k % 2
}

fn even_floor(k: u32) -> u32 {
    k - k % 2
}

impl MultiplierDegrees {
    pub fn new(d: u32, deg_f: u32, deg_g: u32, rule: DegreeRule) -> Self {
        let deg_lie = (d + deg_f).saturating_sub(1);
        match rule {
            DegreeRule::Full => {
                let k0 = even_ceil(deg_lie.max(d));
                let s0 = (k0 >= deg_g).then(|| even_floor(k0 - deg_g));
                let k1 = even_ceil(d.max(deg_g));
                let p0 = (k1 >= deg_g).then(|| k1 - deg_g);
                MultiplierDegrees { j: d, s0, k0, p0, k1 }
            }
            DegreeRule::SharedCap => {
                let s0 = (d >= deg_g).then(|| even_floor(d - deg_g));
                let p0 = (d >= deg_g).then(|| d - deg_g);
                let k0 = even_ceil(deg_lie.max(d).max(s0.map_or(0, |s| s + deg_g)));
                MultiplierDegrees { j: d, s0, k0, p0, k1: d }
            }
            DegreeRule::MultipliersAtD => {
                let k0 = even_ceil(deg_lie.max(d + deg_g));
                let k1 = even_ceil(d + deg_g);
                MultiplierDegrees { j: d, s0: Some(d), k0, p0: Some(d), k1 }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttractorOptions {
    pub d: u32,
    pub alpha: f64,
    pub include_k1: bool,
    /// Lower bound on the Gram matrix of J.
    pub epsilon: f64,
    /// Maximize `<G, P_J>` (normalized coordinates) when set.
    pub objective_gradient: Option<DMatrix<f64>>,
    /// Adds `trace(P_J) <= cap` (normalized coordinates).
    pub trace_cap: Option<f64>,
    /// Replaces `P_J ⪰ εI` by `P_J ⪰ (ε + t)I` with free `t` and maximizes `t`.
    pub min_eig_slack: bool,
    pub degree_rule: DegreeRule,
}

impl AttractorOptions {
    pub fn new(d: u32, alpha: f64) -> Self {
        AttractorOptions {
            d,
            alpha,
            include_k1: true,
            epsilon: 1e-6,
            objective_gradient: None,
            trace_cap: None,
            min_eig_slack: false,
            degree_rule: DegreeRule::Full,
        }
    }
}

#[derive(Debug, Clone)]
struct GramBlock {
    block: usize,
    index: GramIndex,
}

/// The compiled program plus the bookkeeping needed to read a certificate
/// back out of a solution.
#[derive(Debug, Clone)]
pub struct AttractorSdp {
    pub problem: SdpProblem,
    pub n: usize,
    pub d: u32,
    pub alpha: f64,
    pub epsilon: f64,
    pub degrees: MultiplierDegrees,
    /// Normalization radius: the program is posed in `u = x / radius`.
    pub radius: f64,
    j: GramBlock,
    s0: Option<GramBlock>,
    k0: GramBlock,
    k1: Option<GramBlock>,
    p0: Option<(usize, Vec<Monomial>)>,
    slack_var: Option<VarRef>,
    f_u: Vec<Polynomial>,
    g_u: Polynomial,
}

/// Polynomial whose coefficients are affine in the SDP unknowns.
#[derive(Debug, Default, Clone)]
struct LinPoly {
    vars: BTreeMap<Monomial, BTreeMap<VarRef, f64>>,
    constant: BTreeMap<Monomial, f64>,
}

impl LinPoly {
    fn add_var_poly(&mut self, v: VarRef, p: &Polynomial, scale: f64) {
        for (m, c) in p.terms() {
            *self.vars.entry(m.clone()).or_default().entry(v).or_insert(0.0) += scale * c;
        }
    }

    fn add_poly(&mut self, p: &Polynomial, scale: f64) {
        for (m, c) in p.terms() {
            *self.constant.entry(m.clone()).or_insert(0.0) += scale * c;
        }
    }

    /// Adds `scale * q * zᵀ X z` for Gram block `b`.
    fn add_gram(&mut self, b: &GramBlock, q: Option<&Polynomial>, scale: f64) {
        let z = &b.index.basis;
        for i in 0..z.len() {
            for j in i..z.len() {
                let mut p = Polynomial::from_terms(b.index.n, [(z[i].mul(&z[j]), if i == j { 1.0 } else { 2.0 })]);
                if let Some(q) = q {
                    p = &p * q;
                }
                self.add_var_poly(VarRef::entry(b.block, i, j), &p, scale);
            }
        }
    }

    fn max_degree(&self) -> u32 {
        self.vars
            .keys()
            .chain(self.constant.keys())
            .map(|m| m.degree())
            .max()
            .unwrap_or(0)
    }

    /// Appends `self == 0` as one row per monomial.
    fn emit_rows(&self, problem: &mut SdpProblem) {
        let mut monos: Vec<&Monomial> = self.vars.keys().chain(self.constant.keys()).collect();
        monos.sort();
        monos.dedup();
        for m in monos {
            let entries: Vec<(VarRef, f64)> = self
                .vars
                .get(m)
                .map(|row| row.iter().filter(|(_, c)| **c != 0.0).map(|(v, c)| (*v, *c)).collect())
                .unwrap_or_default();
            let rhs = -self.constant.get(m).copied().unwrap_or(0.0);
            if entries.is_empty() && rhs.abs() < 1e-14 {
                continue;
            }
            problem.add_constraint(entries, rhs);
        }
    }
}

fn new_gram_block(problem: &mut SdpProblem, d: u32, n: usize) -> Result<GramBlock, SosError> {
    let index = gram_parametrize(d, n)?;
    if index.basis.is_empty() {
        return Err(SosError::EmptyBasis);
    }
    let block = problem.add_block(index.basis.len());
    Ok(GramBlock { block, index })
}

/// Radius normalizing the bounding box into the unit cube.
pub fn normalization_radius(dom: &Domain) -> f64 {
    dom.bounding_box
        .iter()
        .map(|[lo, hi]| lo.abs().max(hi.abs()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
}

/// Compiles the attractor program for the field of `sys` as given (callers
/// pass the scaled system) on the domain `dom`.
pub fn assemble_attractor_sdp(
    sys: &DynamicalSystem,
    dom: &Domain,
    opts: &AttractorOptions,
) -> Result<AttractorSdp, SosError> {
    let n = sys.n;
    if dom.dim() != n {
        return Err(SosError::Dimension("domain and system dimensions differ".into()));
    }
    if opts.d % 2 != 0 {
        return Err(SosError::OddDegree(opts.d));
    }
    let radius = normalization_radius(dom);
    let f_u = rescale_field(&sys.f, radius, 1.0);
    let g_u = dom.g.scale_variables(radius);
    let degrees = MultiplierDegrees::new(opts.d, sys.degree(), g_u.degree(), opts.degree_rule);

    let mut problem = SdpProblem::default();
    let j = new_gram_block(&mut problem, opts.d, n)?;
    let s0 = match degrees.s0 {
        Some(ds) => Some(new_gram_block(&mut problem, ds, n)?),
        None => None,
    };
    let k0 = new_gram_block(&mut problem, degrees.k0, n)?;
    let (k1, p0) = if opts.include_k1 {
        let k1 = new_gram_block(&mut problem, degrees.k1, n)?;
        let p0 = degrees.p0.map(|dp| {
            let basis = monomial_basis(n, dp);
            (problem.add_free(basis.len()), basis)
        });
        (Some(k1), p0)
    } else {
        (None, None)
    };
    let slack_var = opts.min_eig_slack.then(|| VarRef::Free(problem.add_free(1)));

    // J = zᵀ(Q + (ε [+ t]) I)z
    let mut jpoly = LinPoly::default();
    jpoly.add_gram(&j, None, 1.0);
    let zz = Polynomial::from_terms(n, j.index.basis.iter().map(|m| (m.mul(m), 1.0)));
    jpoly.add_poly(&zz, opts.epsilon);
    if let Some(t) = slack_var {
        jpoly.add_var_poly(t, &zz, 1.0);
    }

    // Lie derivative of J, term by term
    let mut lie = LinPoly::default();
    for (m, row) in &jpoly.vars {
        let lm = lie_derivative(&Polynomial::from_terms(n, [(m.clone(), 1.0)]), &f_u)?;
        for (v, c) in row {
            lie.add_var_poly(*v, &lm, *c);
        }
    }
    for (m, c) in &jpoly.constant {
        let lm = lie_derivative(&Polynomial::from_terms(n, [(m.clone(), 1.0)]), &f_u)?;
        lie.add_poly(&lm, *c);
    }

    // -∇Jᵀf - J + 1 - s₀ g - k₀ = 0
    let mut id0 = LinPoly::default();
    merge(&mut id0, &lie, -1.0);
    merge(&mut id0, &jpoly, -1.0);
    id0.add_poly(&Polynomial::constant(n, 1.0), 1.0);
    if let Some(s) = &s0 {
        id0.add_gram(s, Some(&g_u), -1.0);
    }
    id0.add_gram(&k0, None, -1.0);
    let found = id0.max_degree();
    if found > degrees.k0 {
        return Err(SosError::DegreeOverflow { found, cap: degrees.k0 });
    }
    id0.emit_rows(&mut problem);

    // J - 1 - α - p₀ g - k₁ = 0
    if let Some(k1b) = &k1 {
        let mut id1 = LinPoly::default();
        merge(&mut id1, &jpoly, 1.0);
        id1.add_poly(&Polynomial::constant(n, 1.0 + opts.alpha), -1.0);
        if let Some((off, basis)) = &p0 {
            for (k, m) in basis.iter().enumerate() {
                let term = &Polynomial::from_terms(n, [(m.clone(), 1.0)]) * &g_u;
                id1.add_var_poly(VarRef::Free(off + k), &term, -1.0);
            }
        }
        id1.add_gram(k1b, None, -1.0);
        let found = id1.max_degree();
        if found > degrees.k1 {
            return Err(SosError::DegreeOverflow { found, cap: degrees.k1 });
        }
        id1.emit_rows(&mut problem);
    }

    let nj = j.index.basis.len();
    if let Some(cap) = opts.trace_cap {
        // (trace(Q) + N t) / cap + s = 1 - N ε / cap, scaled so the slack is O(1)
        let s = problem.add_block(1);
        let mut entries: Vec<(VarRef, f64)> = (0..nj).map(|i| (VarRef::entry(j.block, i, i), 1.0 / cap)).collect();
        if let Some(t) = slack_var {
            entries.push((t, nj as f64 / cap));
        }
        entries.push((VarRef::entry(s, 0, 0), 1.0));
        problem.add_constraint(entries, 1.0 - nj as f64 * opts.epsilon / cap);
    }

    if let Some(t) = slack_var {
        problem.objective = vec![(t, -1.0)];
    } else if let Some(grad) = &opts.objective_gradient {
        if grad.nrows() != nj || grad.ncols() != nj {
            return Err(SosError::Dimension(format!("objective gradient must be {}x{}", nj, nj)));
        }
        for i in 0..nj {
            for k in i..nj {
                let w = if i == k { grad[(i, i)] } else { grad[(i, k)] + grad[(k, i)] };
                if w != 0.0 {
                    problem.objective.push((VarRef::entry(j.block, i, k), -w));
                }
            }
        }
    }

    Ok(AttractorSdp {
        problem,
        n,
        d: opts.d,
        alpha: opts.alpha,
        epsilon: opts.epsilon,
        degrees,
        radius,
        j,
        s0,
        k0,
        k1,
        p0,
        slack_var,
        f_u,
        g_u,
    })
}

fn merge(dst: &mut LinPoly, src: &LinPoly, scale: f64) {
    for (m, row) in &src.vars {
        let e = dst.vars.entry(m.clone()).or_default();
        for (v, c) in row {
            *e.entry(*v).or_insert(0.0) += scale * c;
        }
    }
    for (m, c) in &src.constant {
        *dst.constant.entry(m.clone()).or_insert(0.0) += scale * c;
    }
}

impl AttractorSdp {
    /// Size of the Gram basis of J.
    pub fn j_size(&self) -> usize {
        self.j.index.basis.len()
    }

    pub fn j_basis(&self) -> &[Monomial] {
        &self.j.index.basis
    }

    /// Gram matrix of J in normalized coordinates, `Q + (ε [+ t]) I`.
    pub fn j_gram_normalized(&self, sol: &SdpSolution) -> DMatrix<f64> {
        let q = &sol.blocks[self.j.block];
        let shift = self.epsilon + self.slack_value(sol).unwrap_or(0.0);
        let q = (q + q.transpose()) * 0.5;
        q + DMatrix::identity(self.j_size(), self.j_size()) * shift
    }

    /// Min-eigenvalue slack `t` of a phase-1 solution.
    pub fn slack_value(&self, sol: &SdpSolution) -> Option<f64> {
        self.slack_var.map(|t| sol.value(t))
    }

    /// Maps a normalized Gram matrix on `basis` back to original coordinates.
    fn denormalize(&self, basis: &[Monomial], gram: &DMatrix<f64>) -> DMatrix<f64> {
        let scale: Vec<f64> = basis.iter().map(|m| self.radius.powi(-(m.degree() as i32))).collect();
        DMatrix::from_fn(gram.nrows(), gram.ncols(), |i, j| gram[(i, j)] * scale[i] * scale[j])
    }

    pub fn to_text(&self) -> String {
        sdp::write_sdp_text(&self.problem)
    }
}

/// Adjusts `gram` so that `zᵀ gram z` equals `target` exactly, placing each
/// coefficient residual on the first Gram position of its monomial.
fn absorb_residual(index: &GramIndex, gram: &DMatrix<f64>, target: &Polynomial) -> Result<(DMatrix<f64>, f64), SosError> {
    let mut g = (gram + gram.transpose()) * 0.5;
    let diff = target - &gram_polynomial(&index.basis, &g);
    let residual = max_abs_coeff(&diff);
    for (m, r) in diff.terms() {
        let &(i, j) = index
            .positions
            .get(m)
            .and_then(|p| p.first())
            .ok_or_else(|| SosError::Unreachable(m.to_string()))?;
        if i == j {
            g[(i, i)] += r;
        } else {
            g[(i, j)] += r / 2.0;
            g[(j, i)] += r / 2.0;
        }
    }
    Ok((g, residual))
}

/// Coefficient residual accepted by [`extract_certificate`].
pub const EXTRACTION_TOL: f64 = 1e-6;

/// Reads J, s₀, p₀, k₀ and k₁ out of a solution. The multiplier Gram
/// matrices are corrected so both identities hold to rounding; the size of
/// that correction is checked against [`EXTRACTION_TOL`].
pub fn extract_certificate(sdp: &AttractorSdp, sol: &SdpSolution) -> Result<PutinarCertificate, SosError> {
    if !matches!(sol.status, SolveStatus::Solved | SolveStatus::Inaccurate) {
        return Err(SosError::NotSolved(sol.status));
    }
    if sol.blocks.len() != sdp.problem.blocks.len() || sol.free.len() != sdp.problem.num_free {
        return Err(SosError::Dimension("solution does not match the program".into()));
    }
    let n = sdp.n;
    let pj = sdp.j_gram_normalized(sol);
    let j_u = gram_polynomial(sdp.j_basis(), &pj);
    let s0_gram = sdp.s0.as_ref().map(|b| {
        let s = &sol.blocks[b.block];
        (s + s.transpose()) * 0.5
    });
    let s0_u = match (&sdp.s0, &s0_gram) {
        (Some(b), Some(g)) => gram_polynomial(&b.index.basis, g),
        _ => Polynomial::zero(n),
    };
    let p0_u = match &sdp.p0 {
        Some((off, basis)) => Polynomial::from_coefficients(n, basis, &sol.free[*off..off + basis.len()]),
        None => Polynomial::zero(n),
    };
    let one = Polynomial::constant(n, 1.0);
    let k0_target = &(&(-&lie_derivative(&j_u, &sdp.f_u)?) - &(&j_u - &one)) - &(&s0_u * &sdp.g_u);
    let (k0_gram, r0) = absorb_residual(&sdp.k0.index, &sol.blocks[sdp.k0.block], &k0_target)?;
    if r0 > EXTRACTION_TOL || !r0.is_finite() {
        return Err(SosError::IdentityResidual { which: "k0", residual: r0 });
    }
    let k1 = match &sdp.k1 {
        Some(b) => {
            let target = &(&j_u - &Polynomial::constant(n, 1.0 + sdp.alpha)) - &(&p0_u * &sdp.g_u);
            let (g, r1) = absorb_residual(&b.index, &sol.blocks[b.block], &target)?;
            if r1 > EXTRACTION_TOL || !r1.is_finite() {
                return Err(SosError::IdentityResidual { which: "k1", residual: r1 });
            }
            Some(SosCertificate::from_gram(b.index.basis.clone(), sdp.denormalize(&b.index.basis, &g)))
        }
        None => None,
    };
    let r = 1.0 / sdp.radius;
    Ok(PutinarCertificate {
        n,
        d: sdp.d,
        alpha: sdp.alpha,
        epsilon: sdp.epsilon,
        j: SosCertificate::from_gram(sdp.j_basis().to_vec(), sdp.denormalize(sdp.j_basis(), &pj)),
        s0: match (&sdp.s0, s0_gram) {
            (Some(b), Some(g)) => Some(SosCertificate::from_gram(
                b.index.basis.clone(),
                sdp.denormalize(&b.index.basis, &g),
            )),
            _ => None,
        },
        p0: p0_u.scale_variables(r),
        k0: SosCertificate::from_gram(sdp.k0.index.basis.clone(), sdp.denormalize(&sdp.k0.index.basis, &k0_gram)),
        k1,
    })
}

#[derive(Debug, Clone)]
pub struct SosFeasibility {
    pub status: SolveStatus,
    pub certificate: Option<SosCertificate>,
    /// Largest coefficient mismatch between `p` and the returned Gram.
    pub coefficient_error: f64,
    pub iterations: usize,
}

/// Searches for a PSD Gram matrix of `p`. A certificate is returned only
/// for a solved program.
pub fn sos_feasibility(p: &Polynomial, settings: &SolverSettings) -> Result<SosFeasibility, SosError> {
    let d = even_ceil(p.degree());
    let index = gram_parametrize(d, p.dim())?;
    let rows = equate_coefficients(p, &index)?;
    let mut problem = SdpProblem::default();
    let b = problem.add_block(index.basis.len());
    for row in rows {
        problem.add_constraint(
            row.entries.iter().map(|&((i, j), c)| (VarRef::entry(b, i, j), c)).collect(),
            row.rhs,
        );
    }
    let sol = sdp::solve(&problem, settings)?;
    let (certificate, coefficient_error) = if sol.status == SolveStatus::Solved {
        let cert = SosCertificate::from_gram(index.basis.clone(), sol.blocks[b].clone());
        let err = max_abs_coeff(&(&cert.poly - p));
        (Some(cert), err)
    } else {
        (None, f64::INFINITY)
    };
    Ok(SosFeasibility {
        status: sol.status,
        certificate,
        coefficient_error,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    fn m(e: &[u32]) -> Monomial {
        Monomial::new(e.to_vec())
    }

    #[test]
    fn gram_parametrize_examples() {
        let g = gram_parametrize(2, 1).unwrap();
        assert_eq!(g.basis, vec![m(&[0]), m(&[1])]);
        assert_eq!(g.positions[&m(&[2])], vec![(1, 1)]);
        assert_eq!(g.positions[&m(&[1])], vec![(0, 1)]);

        let g = gram_parametrize(2, 2).unwrap();
        assert_eq!(g.basis.len(), 3);
        assert_eq!(g.positions[&m(&[0, 0])], vec![(0, 0)]);

        assert_eq!(gram_parametrize(4, 2).unwrap().basis.len(), 6);
        assert_eq!(gram_parametrize(3, 2).unwrap_err(), SosError::OddDegree(3));
    }

    #[test]
    fn equate_coefficients_examples() {
        let idx = gram_parametrize(2, 1).unwrap();
        let rows = equate_coefficients(&parse_polynomial("x1^2", 1).unwrap(), &idx).unwrap();
        let find = |e: u32| rows.iter().find(|r| r.monomial == m(&[e])).unwrap().clone();
        assert_eq!(find(2).entries, vec![((1, 1), 1.0)]);
        assert_eq!(find(2).rhs, 1.0);
        assert_eq!(find(1).entries, vec![((0, 1), 2.0)]);
        assert_eq!(find(1).rhs, 0.0);
        assert_eq!(find(0).rhs, 0.0);

        let cubic = parse_polynomial("x1^3", 1).unwrap();
        assert!(matches!(equate_coefficients(&cubic, &idx), Err(SosError::Unreachable(_))));
    }

    #[test]
    fn feasibility_examples() {
        let s = SolverSettings::default();
        let r = sos_feasibility(&parse_polynomial("1 + x1^2", 1).unwrap(), &s).unwrap();
        assert_eq!(r.status, SolveStatus::Solved);
        let c = r.certificate.unwrap();
        assert!(c.is_sos(1e-8));
        assert!(r.coefficient_error < 1e-6);

        let r = sos_feasibility(&parse_polynomial("-x1^2", 1).unwrap(), &s).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        let r = sos_feasibility(&parse_polynomial("-x1^2 - 1", 1).unwrap(), &s).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn multiplier_degrees() {
        let full = MultiplierDegrees::new(6, 3, 4, DegreeRule::Full);
        assert_eq!(full, MultiplierDegrees { j: 6, s0: Some(4), k0: 8, p0: Some(2), k1: 6 });
        let shared = MultiplierDegrees::new(6, 3, 4, DegreeRule::SharedCap);
        assert_eq!(shared.s0, Some(2));
        assert_eq!(shared.k0, 8);
        let low = MultiplierDegrees::new(2, 3, 4, DegreeRule::SharedCap);
        assert_eq!(low.s0, None);
        assert_eq!(low.p0, None);
    }

    fn toy() -> (DynamicalSystem, Domain) {
        let sys = DynamicalSystem::new("decay", vec![parse_polynomial("-x1", 1).unwrap()], 1.0, 1.0).unwrap();
        let dom = Domain::new(parse_polynomial("4 - x1^2", 1).unwrap(), vec![[-2.0, 2.0]]).unwrap();
        (sys, dom)
    }

    #[test]
    fn toy_program_is_feasible() {
        let (sys, dom) = toy();
        let opts = AttractorOptions::new(2, 1e-4);
        let prog = assemble_attractor_sdp(&sys, &dom, &opts).unwrap();
        assert_eq!(prog.j_size(), 2);
        let sol = sdp::solve(&prog.problem, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Solved);
        let cert = extract_certificate(&prog, &sol).unwrap();
        let (r0, r1) = cert.identity_residuals(&sys.f, &dom.g).unwrap();
        assert!(r0 < 1e-9 && r1.unwrap() < 1e-9);
        assert!(cert.min_gram_eigenvalue() > -1e-6);
        // J has no odd part worth mentioning and J(0) is at most 1 + residual
        assert!(cert.j.poly.eval(&[0.0]) <= 1.0 + 1e-6);
    }

    #[test]
    fn dropping_k1_removes_block_and_rows() {
        let (sys, dom) = toy();
        let mut opts = AttractorOptions::new(2, 1e-4);
        let full = assemble_attractor_sdp(&sys, &dom, &opts).unwrap();
        opts.include_k1 = false;
        let relaxed = assemble_attractor_sdp(&sys, &dom, &opts).unwrap();
        assert_eq!(relaxed.problem.blocks.len() + 1, full.problem.blocks.len());
        assert!(relaxed.problem.num_constraints() < full.problem.num_constraints());
        assert_eq!(relaxed.problem.num_free, 0);
    }

    #[test]
    fn vanderpol_block_size() {
        let (sys, dom) = crate::dynsys::builtin("vanderpol").unwrap();
        let prog = assemble_attractor_sdp(&crate::dynsys::apply_scaling(&sys), &dom, &AttractorOptions::new(4, 1e-4)).unwrap();
        assert_eq!(prog.problem.blocks[0], 6);
    }

    #[test]
    fn unsolved_solution_is_rejected() {
        let (sys, dom) = toy();
        let prog = assemble_attractor_sdp(&sys, &dom, &AttractorOptions::new(2, 1e-4)).unwrap();
        let settings = SolverSettings { max_iter: 0, ..Default::default() };
        let sol = sdp::solve(&prog.problem, &settings).unwrap();
        assert!(extract_certificate(&prog, &sol).is_err());
    }

    #[test]
    fn sos_certificate_serde_round_trip() {
        let basis = monomial_basis(2, 1);
        let gram = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.25, 0.0, 0.25, 3.0]);
        let c = SosCertificate::from_gram(basis, gram);
        let json = serde_json::to_string(&c).unwrap();
        let back: SosCertificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert!(back.expansion_error() < 1e-15);
    }
}
