//! Standard-form semidefinite programs and a first-order ADMM solver.
//!
//! Problems have the form
//!
//! ```text
//! minimize    <c, x>
//! subject to  <a_k, x> = b_k          k = 1..m
//!             X_1, ..., X_p  PSD      (symmetric blocks)
//!             y_1, ..., y_q  free
//! ```
//!
//! The solver alternates an exact projection onto the affine set
//! `{x : A x = b}` (pseudo-inverse of `A Aᵀ` computed once), an
//! eigenvalue-clipping projection onto the PSD blocks and a scaled dual
//! update, with over-relaxation and residual-balancing penalty updates.
//! Infeasibility and unboundedness are detected from the limits of the
//! dual and primal iterate differences. All steps are deterministic.

use std::fmt::Write as _;

pub mod ipm;

pub use ipm::{solve_ipm, IpmSettings};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Reference to one scalar unknown of an [`SdpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VarRef {
    /// Entry `(row, col)` of PSD block `block`, with `row <= col`. A
    /// coefficient on an off-diagonal entry multiplies `X[row][col]` once.
    Block { block: usize, row: usize, col: usize },
    Free(usize),
}

impl VarRef {
    pub fn entry(block: usize, i: usize, j: usize) -> Self {
        VarRef::Block {
            block,
            row: i.min(j),
            col: i.max(j),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Constraint {
    pub entries: Vec<(VarRef, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SdpProblem {
    /// Side lengths of the PSD blocks.
    pub blocks: Vec<usize>,
    pub num_free: usize,
    pub constraints: Vec<Constraint>,
    /// Linear objective to minimize.
    pub objective: Vec<(VarRef, f64)>,
}

impl SdpProblem {
    pub fn add_block(&mut self, size: usize) -> usize {
        self.blocks.push(size);
        self.blocks.len() - 1
    }

    /// Appends `count` free variables and returns the index of the first.
    pub fn add_free(&mut self, count: usize) -> usize {
        let first = self.num_free;
        self.num_free += count;
        first
    }

    pub fn add_constraint(&mut self, entries: Vec<(VarRef, f64)>, rhs: f64) -> usize {
        self.constraints.push(Constraint { entries, rhs });
        self.constraints.len() - 1
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    fn check_var(&self, v: &VarRef) -> Result<(), SdpError> {
        match *v {
            VarRef::Block { block, row, col } => {
                let Some(&n) = self.blocks.get(block) else {
                    return Err(SdpError::Malformed(format!("block {} out of range", block)));
                };
                if row > col || col >= n {
                    return Err(SdpError::Malformed(format!(
                        "invalid entry ({}, {}) of block {} with size {}",
                        row, col, block, n
                    )));
                }
            }
            VarRef::Free(k) => {
                if k >= self.num_free {
                    return Err(SdpError::Malformed(format!("free variable {} out of range", k)));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        for (k, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(SdpError::Malformed(format!("constraint {} has non-finite rhs", k)));
            }
            for (v, a) in &c.entries {
                self.check_var(v)?;
                if !a.is_finite() {
                    return Err(SdpError::Malformed(format!("constraint {} has a non-finite coefficient", k)));
                }
            }
        }
        for (v, a) in &self.objective {
            self.check_var(v)?;
            if !a.is_finite() {
                return Err(SdpError::Malformed("non-finite objective coefficient".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Solved,
    Inaccurate,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub blocks: Vec<DMatrix<f64>>,
    pub free: Vec<f64>,
    /// Equality multipliers (dual variables).
    pub dual: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    /// `max_k |<a_k, x> - b_k|` at the returned point.
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn value(&self, v: VarRef) -> f64 {
        match v {
            VarRef::Block { block, row, col } => self.blocks[block][(row, col)],
            VarRef::Free(k) => self.free[k],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub tol_psd: f64,
    /// Relative duality-gap tolerance.
    pub tol_gap: f64,
    pub max_iter: usize,
    /// Over-relaxation factor in (0, 2).
    pub relaxation: f64,
    pub rho: f64,
    pub adapt_rho: bool,
    pub check_every: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol_primal: 1e-7,
            tol_dual: 1e-7,
            tol_psd: 1e-8,
            tol_gap: 1e-6,
            max_iter: 50_000,
            relaxation: 1.5,
            rho: 1.0,
            adapt_rho: true,
            check_every: 10,
        }
    }
}

/// Pluggable solver contract.
pub trait SdpSolver {
    fn solve(&self, problem: &SdpProblem) -> Result<SdpSolution, SdpError>;
}

#[derive(Debug, Clone, Default)]
pub struct AdmmSolver {
    pub settings: SolverSettings,
}

impl AdmmSolver {
    pub fn new(settings: SolverSettings) -> Self {
        AdmmSolver { settings }
    }
}

impl SdpSolver for AdmmSolver {
    fn solve(&self, problem: &SdpProblem) -> Result<SdpSolution, SdpError> {
        solve(problem, &self.settings)
    }
}

#[derive(Debug, Clone, Default)]
pub struct InteriorPointSolver {
    pub settings: IpmSettings,
}

impl SdpSolver for InteriorPointSolver {
    fn solve(&self, problem: &SdpProblem) -> Result<SdpSolution, SdpError> {
        solve_ipm(problem, &self.settings)
    }
}

/// Solver selection as it appears in run configurations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SolverChoice {
    InteriorPoint(IpmSettings),
    Admm(SolverSettings),
}

impl Default for SolverChoice {
    fn default() -> Self {
        SolverChoice::InteriorPoint(IpmSettings::default())
    }
}

impl SdpSolver for SolverChoice {
    fn solve(&self, problem: &SdpProblem) -> Result<SdpSolution, SdpError> {
        match self {
            SolverChoice::InteriorPoint(s) => solve_ipm(problem, s),
            SolverChoice::Admm(s) => solve(problem, s),
        }
    }
}

/// Symmetrizes `m` and clips its negative eigenvalues: the Frobenius-nearest
/// PSD matrix.
pub fn project_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>, SdpError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SdpError::NonFinite);
    }
    let sym = (m + m.transpose()) * 0.5;
    Ok(clip_negative(sym))
}

fn clip_negative(sym: DMatrix<f64>) -> DMatrix<f64> {
    let n = sym.nrows();
    if n == 0 {
        return sym;
    }
    if n == 1 {
        return DMatrix::from_element(1, 1, sym[(0, 0)].max(0.0));
    }
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues) * eig.eigenvectors.transpose();
    }
    let mut out = DMatrix::zeros(n, n);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 0.0 {
            let v = eig.eigenvectors.column(k);
            out += l * v * v.transpose();
        }
    }
    out
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64, SdpError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SdpError::NonFinite);
    }
    if m.nrows() == 0 {
        return Ok(f64::INFINITY);
    }
    let sym = (m + m.transpose()) * 0.5;
    Ok(SymmetricEigen::new(sym).eigenvalues.min())
}

/// Layout of the scaled vectorization: off-diagonal block entries carry a
/// factor sqrt(2) so the Euclidean inner product matches the trace one.
struct Layout {
    blocks: Vec<usize>,
    offsets: Vec<usize>,
    free_offset: usize,
    len: usize,
}

impl Layout {
    fn new(p: &SdpProblem) -> Self {
        let mut offsets = Vec::with_capacity(p.blocks.len());
        let mut off = 0;
        for &n in &p.blocks {
            offsets.push(off);
            off += n * (n + 1) / 2;
        }
        Layout {
            blocks: p.blocks.clone(),
            offsets,
            free_offset: off,
            len: off + p.num_free,
        }
    }

    /// Index and the factor converting a coefficient on the matrix entry to
    /// a coefficient on the scaled coordinate.
    fn index(&self, v: VarRef) -> (usize, f64) {
        match v {
            VarRef::Block { block, row, col } => {
                let n = self.blocks[block];
                let idx = self.offsets[block] + tri_offset(n, row) + (col - row);
                let f = if row == col { 1.0 } else { std::f64::consts::FRAC_1_SQRT_2 };
                (idx, f)
            }
            VarRef::Free(k) => (self.free_offset + k, 1.0),
        }
    }

    fn unpack_block(&self, x: &DVector<f64>, b: usize) -> DMatrix<f64> {
        let n = self.blocks[b];
        let mut m = DMatrix::zeros(n, n);
        let mut idx = self.offsets[b];
        for i in 0..n {
            m[(i, i)] = x[idx];
            idx += 1;
            for j in i + 1..n {
                let v = x[idx] * std::f64::consts::FRAC_1_SQRT_2;
                m[(i, j)] = v;
                m[(j, i)] = v;
                idx += 1;
            }
        }
        m
    }

    fn pack_block(&self, m: &DMatrix<f64>, x: &mut DVector<f64>, b: usize) {
        let n = self.blocks[b];
        let mut idx = self.offsets[b];
        for i in 0..n {
            x[idx] = m[(i, i)];
            idx += 1;
            for j in i + 1..n {
                x[idx] = 0.5 * (m[(i, j)] + m[(j, i)]) * std::f64::consts::SQRT_2;
                idx += 1;
            }
        }
    }

    fn project_cone(&self, x: &mut DVector<f64>) {
        for b in 0..self.blocks.len() {
            let m = self.unpack_block(x, b);
            let p = clip_negative(m);
            self.pack_block(&p, x, b);
        }
    }

    /// Smallest eigenvalue over all blocks of `x`, and the largest free
    /// component magnitude.
    fn cone_violation(&self, x: &DVector<f64>) -> (f64, f64) {
        let mut min_eig = f64::INFINITY;
        for b in 0..self.blocks.len() {
            let m = self.unpack_block(x, b);
            if m.nrows() > 0 {
                min_eig = min_eig.min(SymmetricEigen::new(m).eigenvalues.min());
            }
        }
        let free = x.rows(self.free_offset, self.len - self.free_offset).amax();
        (min_eig, free)
    }
}

fn tri_offset(n: usize, i: usize) -> usize {
    // entries in rows 0..i of the row-major upper triangle
    i * n - i * i.saturating_sub(1) / 2
}

/// Dense operator data shared by all iterations.
struct Operator {
    a: DMatrix<f64>,
    /// Pseudo-inverse of `A Aᵀ`.
    gram_pinv: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
}

impl Operator {
    fn new(p: &SdpProblem, layout: &Layout) -> Self {
        let m = p.constraints.len();
        let mut a = DMatrix::zeros(m, layout.len);
        let mut b = DVector::zeros(m);
        for (k, con) in p.constraints.iter().enumerate() {
            for &(v, coef) in &con.entries {
                let (idx, f) = layout.index(v);
                a[(k, idx)] += coef * f;
            }
            b[k] = con.rhs;
        }
        let mut c = DVector::zeros(layout.len);
        for &(v, coef) in &p.objective {
            let (idx, f) = layout.index(v);
            c[idx] += coef * f;
        }
        let gram_pinv = pseudo_inverse_sym(&(&a * a.transpose()));
        Operator { a, gram_pinv, b, c }
    }

    /// Euclidean projection onto `{x : A x = b}`.
    fn project_affine(&self, v: &DVector<f64>) -> DVector<f64> {
        let r = &self.a * v - &self.b;
        let w = &self.gram_pinv * r;
        v - self.a.tr_mul(&w)
    }

    /// Least-squares multipliers `y` with `Aᵀ y ≈ g`.
    fn range_coefficients(&self, g: &DVector<f64>) -> DVector<f64> {
        &self.gram_pinv * (&self.a * g)
    }
}

fn pseudo_inverse_sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.amax();
    let cutoff = max * 1e-12 * n as f64;
    let mut out = DMatrix::zeros(n, n);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > cutoff {
            let v = eig.eigenvectors.column(k);
            out += (1.0 / l) * v * v.transpose();
        }
    }
    out
}

/// Solves `problem` with the ADMM splitting described in the module docs.
///
/// Starts from zero so that identical inputs produce identical iterates.
pub fn solve(problem: &SdpProblem, settings: &SolverSettings) -> Result<SdpSolution, SdpError> {
    problem.validate()?;
    let layout = Layout::new(problem);
    let op = Operator::new(problem, &layout);
    let n = layout.len;

    // An inconsistent affine set is infeasible regardless of the cone.
    let x_min_norm = op.project_affine(&DVector::zeros(n));
    let affine_gap = (&op.a * &x_min_norm - &op.b).amax();
    if affine_gap > 1e-9 * (1.0 + op.b.amax()) {
        return Ok(finish(problem, &layout, &op, SolveStatus::Infeasible, &x_min_norm, &DVector::zeros(n), settings.rho, 0));
    }

    let alpha = settings.relaxation;
    let mut rho = settings.rho;
    let mut z = DVector::zeros(n);
    let mut u = DVector::zeros(n);
    let mut infeasible_streak = 0;
    let mut unbounded_streak = 0;
    let check_every = settings.check_every.max(1);
    let mut best: Option<(f64, DVector<f64>, DVector<f64>, f64)> = None;

    for it in 1..=settings.max_iter {
        let v = &z - &u - &op.c / rho;
        let x_aff = op.project_affine(&v);
        let x_relaxed = alpha * &x_aff + (1.0 - alpha) * &z;
        let z_prev = z.clone();
        let mut w = &x_relaxed + &u;
        layout.project_cone(&mut w);
        z = w;
        let du = &x_relaxed - &z;
        u += &du;

        if it % check_every != 0 && it != settings.max_iter {
            continue;
        }

        let lambda = rho * &u;
        let g = &op.c + &lambda;
        let y = op.range_coefficients(&g);
        let primal_res = (&op.a * &z - &op.b).amax();
        let dual_res = (&g - op.a.tr_mul(&y)).amax();
        let pobj = op.c.dot(&z);
        let dobj = op.b.dot(&y);
        let gap = (pobj - dobj).abs();
        let converged = primal_res <= settings.tol_primal
            && dual_res <= settings.tol_dual
            && gap <= settings.tol_gap * (1.0 + pobj.abs() + dobj.abs());
        if converged {
            return Ok(finish(problem, &layout, &op, SolveStatus::Solved, &z, &u, rho, it));
        }
        let score = (primal_res / settings.tol_primal).max(dual_res / settings.tol_dual);
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, z.clone(), u.clone(), rho));
        }

        if it >= 200 {
            if looks_infeasible(&layout, &op, &du) {
                infeasible_streak += 1;
            } else {
                infeasible_streak = 0;
            }
            if looks_unbounded(&layout, &op, &(&z - &z_prev)) {
                unbounded_streak += 1;
            } else {
                unbounded_streak = 0;
            }
            if infeasible_streak >= 3 {
                return Ok(finish(problem, &layout, &op, SolveStatus::Infeasible, &z, &u, rho, it));
            }
            if unbounded_streak >= 3 {
                return Ok(finish(problem, &layout, &op, SolveStatus::Unbounded, &z, &u, rho, it));
            }
        }

        if settings.adapt_rho && it % (5 * check_every) == 0 {
            let r_norm = (&x_aff - &z).norm() / (1.0 + x_aff.norm().max(z.norm()));
            let s_norm = rho * (&z - &z_prev).norm() / (1.0 + lambda.norm());
            if r_norm > 10.0 * s_norm && rho < 1e6 {
                rho *= 2.0;
                u /= 2.0;
            } else if s_norm > 10.0 * r_norm && rho > 1e-6 {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }

    let (score, bz, bu, brho) = best.unwrap_or((f64::INFINITY, z, u, rho));
    let status = if score <= 100.0 {
        SolveStatus::Inaccurate
    } else {
        SolveStatus::IterationLimit
    };
    Ok(finish(problem, &layout, &op, status, &bz, &bu, brho, settings.max_iter))
}

fn looks_infeasible(layout: &Layout, op: &Operator, du: &DVector<f64>) -> bool {
    let norm = du.norm();
    if norm < 1e-10 {
        return false;
    }
    let v = du / norm;
    // v = Aᵀ w with -v in the dual cone and <b, -w> < 0
    let w = op.range_coefficients(&v);
    let range_err = (op.a.tr_mul(&w) - &v).norm();
    let neg = -&v;
    let (min_eig, free) = layout.cone_violation(&neg);
    let btw = -op.b.dot(&w);
    range_err < 1e-6 && min_eig > -1e-6 && free < 1e-6 && btw < -1e-6
}

fn looks_unbounded(layout: &Layout, op: &Operator, dz: &DVector<f64>) -> bool {
    let norm = dz.norm();
    if norm < 1e-10 {
        return false;
    }
    let d = dz / norm;
    let (min_eig, _) = layout.cone_violation(&d);
    (&op.a * &d).amax() < 1e-6 && min_eig > -1e-6 && op.c.dot(&d) < -1e-6
}

#[allow(clippy::too_many_arguments)]
fn finish(
    problem: &SdpProblem,
    layout: &Layout,
    op: &Operator,
    status: SolveStatus,
    z: &DVector<f64>,
    u: &DVector<f64>,
    rho: f64,
    iterations: usize,
) -> SdpSolution {
    let blocks = (0..problem.blocks.len()).map(|b| layout.unpack_block(z, b)).collect();
    let free = z.rows(layout.free_offset, problem.num_free).iter().copied().collect();
    let g = &op.c + rho * u;
    let y = op.range_coefficients(&g);
    SdpSolution {
        status,
        blocks,
        free,
        objective: op.c.dot(z),
        dual_objective: op.b.dot(&y),
        primal_residual: if op.b.is_empty() { 0.0 } else { (&op.a * z - &op.b).amax() },
        dual_residual: (&g - op.a.tr_mul(&y)).amax(),
        dual: y.iter().copied().collect(),
        iterations,
    }
}

/// Writes the sparse text format: a header followed by one line per
/// nonzero `block row col constraint value`. Indices are 1-based, block 0
/// holds the free variables (`row = col = index`) and constraint 0 is the
/// objective.
pub fn write_sdp_text(p: &SdpProblem) -> String {
    let mut s = String::new();
    writeln!(s, "# sparse SDP: minimize <c,x> s.t. <a_k,x> = b_k, blocks PSD, block 0 free").unwrap();
    write!(s, "blocks {}", p.blocks.len()).unwrap();
    for b in &p.blocks {
        write!(s, " {}", b).unwrap();
    }
    writeln!(s).unwrap();
    writeln!(s, "free {}", p.num_free).unwrap();
    writeln!(s, "constraints {}", p.constraints.len()).unwrap();
    for (k, c) in p.constraints.iter().enumerate() {
        if c.rhs != 0.0 {
            writeln!(s, "rhs {} {:e}", k + 1, c.rhs).unwrap();
        }
    }
    let mut line = |v: &VarRef, id: usize, val: f64| {
        let (blk, r, c) = match *v {
            VarRef::Block { block, row, col } => (block + 1, row + 1, col + 1),
            VarRef::Free(k) => (0, k + 1, k + 1),
        };
        writeln!(s, "{} {} {} {} {:e}", blk, r, c, id, val).unwrap();
    };
    for (v, a) in &p.objective {
        line(v, 0, *a);
    }
    for (k, c) in p.constraints.iter().enumerate() {
        for (v, a) in &c.entries {
            line(v, k + 1, *a);
        }
    }
    s
}

pub fn parse_sdp_text(text: &str) -> Result<SdpProblem, SdpError> {
    let mut p = SdpProblem::default();
    let mut declared = 0usize;
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let err = |msg: &str| SdpError::Parse {
            line: line_no,
            msg: msg.to_string(),
        };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let num = |t: &str| t.parse::<usize>().map_err(|_| err(&format!("bad integer '{}'", t)));
        let real = |t: &str| t.parse::<f64>().map_err(|_| err(&format!("bad number '{}'", t)));
        match toks[0] {
            "blocks" => {
                let k = num(toks.get(1).ok_or_else(|| err("missing block count"))?)?;
                if toks.len() != k + 2 {
                    return Err(err("block size count mismatch"));
                }
                p.blocks = toks[2..].iter().map(|t| num(t)).collect::<Result<_, _>>()?;
            }
            "free" => p.num_free = num(toks.get(1).ok_or_else(|| err("missing count"))?)?,
            "constraints" => {
                declared = num(toks.get(1).ok_or_else(|| err("missing count"))?)?;
                p.constraints = vec![Constraint::default(); declared];
            }
            "rhs" => {
                if toks.len() != 3 {
                    return Err(err("expected 'rhs <id> <value>'"));
                }
                let k = num(toks[1])?;
                if k == 0 || k > declared {
                    return Err(err("rhs id out of range"));
                }
                p.constraints[k - 1].rhs = real(toks[2])?;
            }
            _ => {
                if toks.len() != 5 {
                    return Err(err("expected 'block row col constraint value'"));
                }
                let (blk, r, c, id) = (num(toks[0])?, num(toks[1])?, num(toks[2])?, num(toks[3])?);
                let val = real(toks[4])?;
                if r == 0 || c == 0 {
                    return Err(err("indices are 1-based"));
                }
                let v = if blk == 0 {
                    VarRef::Free(r - 1)
                } else {
                    VarRef::entry(blk - 1, r - 1, c - 1)
                };
                if id == 0 {
                    p.objective.push((v, val));
                } else if id <= declared {
                    p.constraints[id - 1].entries.push((v, val));
                } else {
                    return Err(err("constraint id out of range"));
                }
            }
        }
    }
    p.validate()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn min_trace_problem() -> SdpProblem {
        let mut p = SdpProblem::default();
        let b = p.add_block(2);
        p.objective = vec![(VarRef::entry(b, 0, 0), 1.0), (VarRef::entry(b, 1, 1), 1.0)];
        p.add_constraint(vec![(VarRef::entry(b, 0, 1), 1.0)], 1.0);
        p
    }

    #[test]
    fn min_trace_with_fixed_off_diagonal() {
        let sol = solve(&min_trace_problem(), &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Solved);
        assert!((sol.objective - 2.0).abs() <= 1e-5, "objective {}", sol.objective);
        for v in sol.blocks[0].iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-4);
        }
        assert!(sol.objective >= sol.dual_objective - 1e-5);
    }

    #[test]
    fn unconstrained_feasibility_is_immediate() {
        let mut p = SdpProblem::default();
        p.add_block(3);
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Solved);
        assert!(sol.iterations <= SolverSettings::default().check_every);
        assert!(min_eigenvalue(&sol.blocks[0]).unwrap() >= -1e-12);
    }

    #[test]
    fn negative_diagonal_is_infeasible() {
        let mut p = SdpProblem::default();
        let b = p.add_block(1);
        p.add_constraint(vec![(VarRef::entry(b, 0, 0), 1.0)], -1.0);
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn inconsistent_equalities_are_infeasible() {
        let mut p = SdpProblem::default();
        let f = p.add_free(1);
        p.add_constraint(vec![(VarRef::Free(f), 1.0)], 1.0);
        p.add_constraint(vec![(VarRef::Free(f), 2.0)], 1.0);
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_is_detected() {
        // minimize -X11 with no constraints
        let mut p = SdpProblem::default();
        let b = p.add_block(1);
        p.objective = vec![(VarRef::entry(b, 0, 0), -1.0)];
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_blocks_mix() {
        // minimize y subject to y - X11 = 0.5, X11 + X22 = 1, X12 = 0
        let mut p = SdpProblem::default();
        let b = p.add_block(2);
        let y = p.add_free(1);
        p.objective = vec![(VarRef::Free(y), 1.0)];
        p.add_constraint(vec![(VarRef::Free(y), 1.0), (VarRef::entry(b, 0, 0), -1.0)], 0.5);
        p.add_constraint(vec![(VarRef::entry(b, 0, 0), 1.0), (VarRef::entry(b, 1, 1), 1.0)], 1.0);
        p.add_constraint(vec![(VarRef::entry(b, 0, 1), 1.0)], 0.0);
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Solved);
        assert_abs_diff_eq!(sol.objective, 0.5, epsilon = 1e-5);
        assert!(sol.objective >= sol.dual_objective - 1e-5);
    }

    #[test]
    fn malformed_problems_are_rejected() {
        let mut p = SdpProblem::default();
        p.add_block(2);
        p.add_constraint(vec![(VarRef::Block { block: 0, row: 1, col: 0 }, 1.0)], 0.0);
        assert!(solve(&p, &SolverSettings::default()).is_err());
        let mut q = SdpProblem::default();
        q.add_constraint(vec![(VarRef::Free(0), 1.0)], 0.0);
        assert!(q.validate().is_err());
        let mut r = min_trace_problem();
        r.constraints[0].rhs = f64::NAN;
        assert!(r.validate().is_err());
    }

    #[test]
    fn project_psd_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let p = project_psd(&m).unwrap();
        assert_abs_diff_eq!(p, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]), epsilon = 1e-12);

        let psd = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.0]);
        assert_abs_diff_eq!(project_psd(&psd).unwrap(), psd, epsilon = 1e-12);

        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let p = project_psd(&swap).unwrap();
        assert_abs_diff_eq!(p, DMatrix::from_element(2, 2, 0.5), epsilon = 1e-12);

        let bad = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert_eq!(project_psd(&bad), Err(SdpError::NonFinite));
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert_abs_diff_eq!(min_eigenvalue(&DMatrix::identity(4, 4)).unwrap(), 1.0, epsilon = 1e-12);
        let d = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -2.0]);
        assert_abs_diff_eq!(min_eigenvalue(&d).unwrap(), -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(min_eigenvalue(&DMatrix::from_element(2, 2, 1.0)).unwrap(), 0.0, epsilon = 1e-12);
        assert!(min_eigenvalue(&DMatrix::from_element(1, 1, f64::INFINITY)).is_err());
    }

    #[test]
    fn layout_indices_are_dense_and_unique() {
        let mut p = SdpProblem::default();
        p.add_block(4);
        p.add_block(1);
        p.add_block(3);
        p.add_free(2);
        let layout = Layout::new(&p);
        let mut seen = vec![false; layout.len];
        for (b, &n) in p.blocks.iter().enumerate() {
            for i in 0..n {
                for j in i..n {
                    let (idx, _) = layout.index(VarRef::entry(b, i, j));
                    assert!(!seen[idx]);
                    seen[idx] = true;
                }
            }
        }
        for k in 0..2 {
            let (idx, _) = layout.index(VarRef::Free(k));
            assert!(!seen[idx]);
            seen[idx] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn text_format_round_trip() {
        let mut p = min_trace_problem();
        let f = p.add_free(2);
        p.add_constraint(vec![(VarRef::Free(f + 1), -0.25), (VarRef::entry(0, 1, 1), 3.0)], 1e-3);
        let text = write_sdp_text(&p);
        assert_eq!(parse_sdp_text(&text).unwrap(), p);
        assert!(parse_sdp_text("blocks 1 2\nconstraints 1\n1 2 1 5 1.0\n").is_err());
    }
}
