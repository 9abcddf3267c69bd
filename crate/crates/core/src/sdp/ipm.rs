//! Dense infeasible-start primal-dual interior-point method with
//! Nesterov-Todd scaling and a Mehrotra predictor-corrector. Suited to the
//! small, dense and accuracy-hungry programs of the det-max loop.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use super::{SdpError, SdpProblem, SdpSolution, SolveStatus, VarRef};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IpmSettings {
    pub tol_primal: f64,
    pub tol_dual: f64,
    /// Relative duality-gap tolerance.
    pub tol_gap: f64,
    pub max_iter: usize,
}

impl Default for IpmSettings {
    fn default() -> Self {
        IpmSettings {
            tol_primal: 1e-8,
            tol_dual: 1e-8,
            tol_gap: 1e-8,
            max_iter: 100,
        }
    }
}

/// One constraint split by block: entries `(p, q, a)` with `p <= q` meaning
/// `a X[p][q]`.
#[derive(Debug, Clone, Default)]
struct Row {
    blocks: Vec<(usize, Vec<(usize, usize, f64)>)>,
    free: Vec<(usize, f64)>,
}

impl Row {
    fn new(entries: &[(VarRef, f64)], scale: f64) -> Self {
        let mut r = Row::default();
        let mut sorted: Vec<(VarRef, f64)> = entries.to_vec();
        sorted.sort_by_key(|a| a.0);
        for (v, a) in sorted {
            match v {
                VarRef::Block { block, row, col } => match r.blocks.last_mut() {
                    Some((b, list)) if *b == block => list.push((row, col, a * scale)),
                    _ => r.blocks.push((block, vec![(row, col, a * scale)])),
                },
                VarRef::Free(k) => r.free.push((k, a * scale)),
            }
        }
        r
    }

    fn norm(&self) -> f64 {
        let b: f64 = self
            .blocks
            .iter()
            .flat_map(|(_, l)| l.iter())
            .map(|&(p, q, a)| if p == q { a * a } else { 0.5 * a * a })
            .sum();
        let f: f64 = self.free.iter().map(|(_, a)| a * a).sum();
        (b + f).sqrt()
    }

    fn dot(&self, xs: &[DMatrix<f64>], xf: &DVector<f64>) -> f64 {
        let mut s = 0.0;
        for (b, list) in &self.blocks {
            let x = &xs[*b];
            for &(p, q, a) in list {
                s += if p == q { a * x[(p, p)] } else { 0.5 * a * (x[(p, q)] + x[(q, p)]) };
            }
        }
        for &(k, a) in &self.free {
            s += a * xf[k];
        }
        s
    }

    fn add_to(&self, scale: f64, ms: &mut [DMatrix<f64>], mf: &mut DVector<f64>) {
        for (b, list) in &self.blocks {
            let m = &mut ms[*b];
            for &(p, q, a) in list {
                if p == q {
                    m[(p, p)] += scale * a;
                } else {
                    m[(p, q)] += 0.5 * scale * a;
                    m[(q, p)] += 0.5 * scale * a;
                }
            }
        }
        for &(k, a) in &self.free {
            mf[k] += scale * a;
        }
    }
}

struct Data {
    sizes: Vec<usize>,
    nfree: usize,
    rows: Vec<Row>,
    /// Equilibration factor applied to each row (and its rhs).
    row_scale: Vec<f64>,
    b: DVector<f64>,
    c: Row,
    /// (row, index into row.blocks) for each block.
    block_rows: Vec<Vec<(usize, usize)>>,
}

impl Data {
    fn new(p: &SdpProblem) -> Self {
        let mut rows = Vec::with_capacity(p.constraints.len());
        let mut row_scale = Vec::with_capacity(p.constraints.len());
        let mut b = DVector::zeros(p.constraints.len());
        for (i, con) in p.constraints.iter().enumerate() {
            let nrm = Row::new(&con.entries, 1.0).norm();
            let s = if nrm > 0.0 { 1.0 / nrm } else { 1.0 };
            rows.push(Row::new(&con.entries, s));
            row_scale.push(s);
            b[i] = con.rhs * s;
        }
        let mut block_rows = vec![Vec::new(); p.blocks.len()];
        for (i, r) in rows.iter().enumerate() {
            for (k, (blk, _)) in r.blocks.iter().enumerate() {
                block_rows[*blk].push((i, k));
            }
        }
        Data {
            sizes: p.blocks.clone(),
            nfree: p.num_free,
            c: Row::new(&p.objective, 1.0),
            rows,
            row_scale,
            b,
            block_rows,
        }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn zeros(&self) -> (Vec<DMatrix<f64>>, DVector<f64>) {
        (
            self.sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
            DVector::zeros(self.nfree),
        )
    }

    fn apply(&self, xs: &[DMatrix<f64>], xf: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.rows.iter().map(|r| r.dot(xs, xf)))
    }

    fn adjoint(&self, y: &DVector<f64>) -> (Vec<DMatrix<f64>>, DVector<f64>) {
        let (mut ms, mut mf) = self.zeros();
        for (r, &yi) in self.rows.iter().zip(y.iter()) {
            if yi != 0.0 {
                r.add_to(yi, &mut ms, &mut mf);
            }
        }
        (ms, mf)
    }

    /// Max-norm of a primal residual, in the caller's units.
    fn unscaled_amax(&self, r: &DVector<f64>) -> f64 {
        r.iter()
            .zip(&self.row_scale)
            .map(|(r, s)| (r / s).abs())
            .fold(0.0, f64::max)
    }
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Nesterov-Todd scaling of one block: `W = G Gᵀ` with `Gᵀ S G = G⁻¹ X G⁻ᵀ = Λ`.
struct Scaling {
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    w: DMatrix<f64>,
    lambda: DVector<f64>,
    xchol: Cholesky<f64, Dyn>,
    schol: Cholesky<f64, Dyn>,
}

fn nt_scaling(x: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<Scaling> {
    let xchol = Cholesky::new(x.clone())?;
    let schol = Cholesky::new(s.clone())?;
    let lx = xchol.l();
    let ls = schol.l();
    let svd = SVD::new(ls.transpose() * &lx, true, true);
    let (u, v_t) = (svd.u?, svd.v_t?);
    let sv = svd.singular_values;
    if sv.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let mut g = lx * v_t.transpose();
    for (j, &l) in sv.iter().enumerate() {
        g.column_mut(j).scale_mut(1.0 / l.sqrt());
    }
    // G⁻¹ = Λ^{-1/2} Uᵀ Lsᵀ
    let mut ginv = u.transpose() * ls.transpose();
    for (i, &l) in sv.iter().enumerate() {
        ginv.row_mut(i).scale_mut(1.0 / l.sqrt());
    }
    let w = &g * g.transpose();
    Some(Scaling {
        g,
        ginv,
        w,
        lambda: sv,
        xchol,
        schol,
    })
}

/// Largest step `t` keeping `x + t dx` PSD, given the Cholesky factor of `x`.
fn max_step(chol: &Cholesky<f64, Dyn>, dx: &DMatrix<f64>) -> f64 {
    let l = chol.l();
    let Some(a) = l.solve_lower_triangular(dx) else { return 0.0 };
    let Some(w) = l.solve_lower_triangular(&a.transpose()) else { return 0.0 };
    let lmin = SymmetricEigen::new(sym(w)).eigenvalues.min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

struct Direction {
    dxs: Vec<DMatrix<f64>>,
    dxf: DVector<f64>,
    dy: DVector<f64>,
    dss: Vec<DMatrix<f64>>,
}

/// M_ij = <A_i, W A_j W> with one W per block.
fn schur_matrix(data: &Data, ws: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let m = data.rows.len();
    let mut schur = DMatrix::<f64>::zeros(m, m);
    for (b, w) in ws.iter().enumerate() {
        let rows = &data.block_rows[b];
        for (u, &(i, ki)) in rows.iter().enumerate() {
            let ei = &data.rows[i].blocks[ki].1;
            for &(j, kj) in &rows[u..] {
                let ej = &data.rows[j].blocks[kj].1;
                let mut v = 0.0;
                for &(p, q, a) in ei {
                    for &(r, s, c) in ej {
                        v += 0.5 * a * c * (w[(p, r)] * w[(q, s)] + w[(p, s)] * w[(q, r)]);
                    }
                }
                schur[(i, j)] += v;
                if i != j {
                    schur[(j, i)] += v;
                }
            }
        }
    }
    schur
}

/// Loosening factors for an `Inaccurate` (rather than failed) result.
const REDUCED_FEAS: f64 = 1e3;
const REDUCED_GAP: f64 = 1e5;

type Iterate = (Vec<DMatrix<f64>>, DVector<f64>, DVector<f64>, Vec<DMatrix<f64>>);

pub fn solve_ipm(problem: &SdpProblem, settings: &IpmSettings) -> Result<SdpSolution, SdpError> {
    problem.validate()?;
    let data = Data::new(problem);
    let m = data.m();
    let nb = data.sizes.len();
    let nf = data.nfree;
    let (cs, cf) = {
        let (mut ms, mut mf) = data.zeros();
        data.c.add_to(1.0, &mut ms, &mut mf);
        (ms, mf)
    };
    let cone_dim: usize = data.sizes.iter().sum();
    let rn = (cone_dim as f64).sqrt();
    let bnorm = data.b.amax();
    let cnorm = cs.iter().map(|c| c.amax()).fold(cf.amax(), f64::max);

    let xi = 10f64.max(rn).max(bnorm * rn);
    let eta = 10f64.max(rn).max(cnorm * rn);
    let mut xs: Vec<DMatrix<f64>> = data.sizes.iter().map(|&n| DMatrix::identity(n, n) * xi).collect();
    let mut ss: Vec<DMatrix<f64>> = data.sizes.iter().map(|&n| DMatrix::identity(n, n) * eta).collect();
    let mut xf = DVector::zeros(nf);

    let mut status = SolveStatus::IterationLimit;
    let mut iterations = 0;
    let mut best: Option<(f64, Iterate)> = None;
    let mut stalls = 0;
    let trace = std::env::var_os("ATTRACTOR_SOS_IPM_TRACE").is_some();
    let aat = {
        let mut g = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            let mut e = DVector::zeros(m);
            e[j] = 1.0;
            let (ms, mf) = data.adjoint(&e);
            g.set_column(j, &data.apply(&ms, &mf));
        }
        let g = (&g + g.transpose()) * 0.5;
        Cholesky::new(g)
    };
    // Free columns F = U Σ Vᵀ. Dual feasibility Fᵀ y = c_f pins y on range(F);
    // Newton systems are solved on the orthogonal complement, which keeps the
    // reduced Schur matrix definite.
    let fmat = {
        let mut f = DMatrix::<f64>::zeros(m, nf);
        for (i, r) in data.rows.iter().enumerate() {
            for &(k, a) in &r.free {
                f[(i, k)] += a;
            }
        }
        f
    };
    let (fu, fs, fv) = if nf == 0 {
        (DMatrix::zeros(m, 0), DVector::zeros(0), DMatrix::zeros(0, 0))
    } else {
        let svd = SVD::new(fmat.clone(), true, true);
        let smax = svd.singular_values.max();
        let r = svd.singular_values.iter().filter(|&&v| v > 1e-12 * smax).count();
        let u = svd.u.as_ref().map(|u| u.columns(0, r).into_owned());
        let v = svd.v_t.as_ref().map(|v| v.rows(0, r).transpose());
        match (u, v) {
            (Some(u), Some(v)) => (u, svd.singular_values.rows(0, r).into_owned(), v),
            _ => return Err(SdpError::NonFinite),
        }
    };
    // least-norm solutions of Fᵀ y = r and F x = v
    let pinv_ft = |r: &DVector<f64>| -> DVector<f64> { &fu * (fv.transpose() * r).component_div(&fs) };
    let pinv_f = |v: &DVector<f64>| -> DVector<f64> { &fv * (fu.transpose() * v).component_div(&fs) };
    let proj = DMatrix::identity(m, m) - &fu * fu.transpose();
    let range = &fu * fu.transpose();
    let mut y = pinv_ft(&cf);

    for it in 0..=settings.max_iter {
        iterations = it;
        let ax = data.apply(&xs, &xf);
        let rp = &data.b - &ax;
        let (aty, atyf) = data.adjoint(&y);
        let rds: Vec<DMatrix<f64>> = (0..nb).map(|k| &cs[k] - &ss[k] - &aty[k]).collect();
        let rdf = &cf - &atyf;
        let pobj = data.c.dot(&xs, &xf);
        let dobj = data.b.dot(&y);
        let pres = data.unscaled_amax(&rp);
        let dres = rds.iter().map(|r| r.amax()).fold(rdf.amax(), f64::max);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        // <= 1 means usable at reduced accuracy
        let score = (pres / (REDUCED_FEAS * settings.tol_primal))
            .max(dres / (REDUCED_FEAS * settings.tol_dual))
            .max(gap / (REDUCED_GAP * settings.tol_gap));
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, (xs.clone(), xf.clone(), y.clone(), ss.clone())));
        }
        if pres <= settings.tol_primal && dres <= settings.tol_dual && gap <= settings.tol_gap {
            status = SolveStatus::Solved;
            break;
        }
        // Farkas rays: bᵀy > 0 with Aᵀy + S ≈ 0, or cᵀx < 0 with Ax ≈ 0
        if dobj > 0.0 {
            let ray = (0..nb).map(|k| (&aty[k] + &ss[k]).amax()).fold(atyf.amax(), f64::max);
            if ray <= 1e-8 * dobj && dobj > 1e4 * (1.0 + cnorm) {
                status = SolveStatus::Infeasible;
                break;
            }
        }
        if pobj < 0.0 && data.unscaled_amax(&ax) <= 1e-8 * -pobj && -pobj > 1e4 * (1.0 + bnorm) {
            status = SolveStatus::Unbounded;
            break;
        }
        if it == settings.max_iter || stalls >= 3 {
            break;
        }

        let mu = (0..nb).map(|k| xs[k].dot(&ss[k])).sum::<f64>() / cone_dim.max(1) as f64;
        let Some(scal) = (0..nb).map(|k| nt_scaling(&xs[k], &ss[k])).collect::<Option<Vec<_>>>() else {
            break;
        };

        let ws: Vec<&DMatrix<f64>> = scal.iter().map(|sc| &sc.w).collect();
        let schur = schur_matrix(&data, &ws);
        // Regularize only the factor; refinement sees the true matrix.
        let reg = 1e-14 * schur.diagonal().amax().max(1.0);
        let mut reduced = &proj * &schur * &proj + &range;
        for i in 0..m {
            reduced[(i, i)] += reg;
        }
        let chol = Cholesky::new(reduced.clone());
        let lu = chol.is_none().then(|| reduced.clone().lu());
        // M dy + F dxf = h, Fᵀ dy = rf
        let kkt_solve = |h: &DVector<f64>, rf: &DVector<f64>| -> Option<(DVector<f64>, DVector<f64>)> {
            let yp = pinv_ft(rf);
            let rhs = &proj * (h - &schur * &yp);
            let z = match (&chol, &lu) {
                (Some(c), _) => c.solve(&rhs),
                (None, Some(l)) => l.solve(&rhs)?,
                _ => return None,
            };
            let dy = yp + &proj * z;
            let dxf = pinv_f(&(h - &schur * &dy));
            Some((dy, dxf))
        };

        // Newton direction for the scaled complementarity target `rc`,
        // i.e. Λ∘(dX̃ + dS̃) = rc in the NT frame.
        let solve_dir = |rcs: &[DMatrix<f64>]| -> Option<Direction> {
            let gz: Vec<DMatrix<f64>> = (0..nb)
                .map(|k| {
                    let l = &scal[k].lambda;
                    let z = DMatrix::from_fn(l.len(), l.len(), |i, j| 2.0 * rcs[k][(i, j)] / (l[i] + l[j]));
                    &scal[k].g * z * scal[k].g.transpose()
                })
                .collect();
            let t: Vec<DMatrix<f64>> = (0..nb).map(|k| &gz[k] - &scal[k].w * &rds[k] * &scal[k].w).collect();
            let h = &rp - data.apply(&t, &DVector::zeros(nf));
            let (mut dy, mut dxf) = kkt_solve(&h, &rdf)?;
            let r1 = &h - &schur * &dy - &fmat * &dxf;
            let r2 = &rdf - fmat.transpose() * &dy;
            if let Some((ey, ef)) = kkt_solve(&r1, &r2) {
                dy += ey;
                dxf += ef;
            }
            let (atdy, _) = data.adjoint(&dy);
            let mut dss: Vec<DMatrix<f64>> = (0..nb).map(|k| &rds[k] - &atdy[k]).collect();
            let mut dxs: Vec<DMatrix<f64>> = (0..nb)
                .map(|k| sym(&gz[k] - &scal[k].w * &dss[k] * &scal[k].w))
                .collect();
            // Refine in the scaled metric: dual and complementarity rows stay exact.
            for _ in 0..2 {
                let err = &rp - data.apply(&dxs, &dxf);
                if err.amax() <= 1e-3 * rp.amax() {
                    break;
                }
                let Some((ey, ef)) = kkt_solve(&err, &DVector::zeros(rdf.len())) else { break };
                let (atey, _) = data.adjoint(&ey);
                for k in 0..nb {
                    dss[k] -= &atey[k];
                    dxs[k] += sym(&scal[k].w * &atey[k] * &scal[k].w);
                }
                dy += ey;
                dxf += ef;
            }
            // Forming dX cancels badly near the boundary; restore A dX = rp
            // with a least-norm correction.
            if let Some(ch) = &aat {
                let err = &rp - data.apply(&dxs, &dxf);
                let (cx, cxf) = data.adjoint(&ch.solve(&err));
                for k in 0..nb {
                    dxs[k] += &cx[k];
                }
                dxf += cxf;
            }
            Some(Direction { dxs, dxf, dy, dss })
        };
        let steps = |d: &Direction| -> (f64, f64) {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            for k in 0..nb {
                ap = ap.min(max_step(&scal[k].xchol, &d.dxs[k]));
                ad = ad.min(max_step(&scal[k].schol, &d.dss[k]));
            }
            (ap, ad)
        };

        let rc_aff: Vec<DMatrix<f64>> = (0..nb)
            .map(|k| -DMatrix::from_diagonal(&scal[k].lambda.map(|l| l * l)))
            .collect();
        let Some(aff) = solve_dir(&rc_aff) else { break };
        let (ap, ad) = steps(&aff);
        let (ap_a, ad_a) = (ap.min(1.0), ad.min(1.0));
        let mu_aff: f64 = (0..nb)
            .map(|k| (&xs[k] + ap_a * &aff.dxs[k]).dot(&(&ss[k] + ad_a * &aff.dss[k])))
            .sum::<f64>()
            / cone_dim.max(1) as f64;
        let ratio = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0) } else { 0.0 };
        let expon = if ap_a.min(ad_a) > 0.3 { 3.0 } else { 2.0 };
        let sigma = ratio.powf(expon);
        let rc: Vec<DMatrix<f64>> = (0..nb)
            .map(|k| {
                let sc = &scal[k];
                let dx = &sc.ginv * &aff.dxs[k] * sc.ginv.transpose();
                let ds = sc.g.transpose() * &aff.dss[k] * &sc.g;
                let prod = dx * ds;
                let n = sc.lambda.len();
                DMatrix::identity(n, n) * (sigma * mu)
                    - DMatrix::from_diagonal(&sc.lambda.map(|l| l * l))
                    - (&prod + prod.transpose()) * 0.5
            })
            .collect();
        let Some(dir) = solve_dir(&rc) else { break };
        let (ap, ad) = steps(&dir);
        let gamma = 0.9 + 0.09 * ap.min(ad).min(1.0);
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        if trace {
            eprintln!(
                "ipm {it:3} pres {pres:.2e} dres {dres:.2e} gap {gap:.2e} mu {mu:.2e} sigma {sigma:.2e} ap {ap:.2e} ad {ad:.2e}"
            );
        }
        for k in 0..nb {
            xs[k] = sym(&xs[k] + ap * &dir.dxs[k]);
            ss[k] = sym(&ss[k] + ad * &dir.dss[k]);
        }
        xf += ap * &dir.dxf;
        y += ad * &dir.dy;
        if ap < 1e-8 && ad < 1e-8 {
            stalls += 1;
        } else {
            stalls = 0;
        }
    }

    if !matches!(status, SolveStatus::Solved | SolveStatus::Infeasible | SolveStatus::Unbounded) {
        if let Some((_, (bx, bf, by, bs))) = best {
            xs = bx;
            xf = bf;
            y = by;
            ss = bs;
            // Near-degenerate programs stall with a small primal residual.
            // Remove it with the correction of least X-relative size, which
            // keeps the blocks PSD when it is small.
            for _ in 0..3 {
                let err = &data.b - data.apply(&xs, &xf);
                let mut mx = schur_matrix(&data, &xs.iter().collect::<Vec<_>>()) + &fmat * fmat.transpose();
                let reg = 1e-14 * mx.diagonal().amax().max(1.0);
                for i in 0..m {
                    mx[(i, i)] += reg;
                }
                let Some(ch) = Cholesky::new(mx) else { break };
                let delta = ch.solve(&err);
                let (at, _) = data.adjoint(&delta);
                let trial: Vec<DMatrix<f64>> = (0..nb).map(|k| sym(&xs[k] + &xs[k] * &at[k] * &xs[k])).collect();
                let txf = &xf + fmat.transpose() * &delta;
                let better = data.unscaled_amax(&(&data.b - data.apply(&trial, &txf))) < data.unscaled_amax(&err);
                if !better || trial.iter().any(|t| Cholesky::new(t.clone()).is_none()) {
                    break;
                }
                xs = trial;
                xf = txf;
            }
            let (aty, atyf) = data.adjoint(&y);
            let pobj = data.c.dot(&xs, &xf);
            let dobj = data.b.dot(&y);
            let pres = data.unscaled_amax(&(&data.b - data.apply(&xs, &xf)));
            let dres = (0..nb)
                .map(|k| (&cs[k] - &ss[k] - &aty[k]).amax())
                .fold((&cf - &atyf).amax(), f64::max);
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            let score = (pres / (REDUCED_FEAS * settings.tol_primal))
                .max(dres / (REDUCED_FEAS * settings.tol_dual))
                .max(gap / (REDUCED_GAP * settings.tol_gap));
            status = if score <= 1.0 {
                SolveStatus::Inaccurate
            } else {
                SolveStatus::IterationLimit
            };
        }
    }

    let ax = data.apply(&xs, &xf);
    let (aty, atyf) = data.adjoint(&y);
    let dres = (0..nb)
        .map(|k| (&cs[k] - &ss[k] - &aty[k]).amax())
        .fold((&cf - &atyf).amax(), f64::max);
    Ok(SdpSolution {
        status,
        objective: data.c.dot(&xs, &xf),
        dual_objective: data.b.dot(&y),
        primal_residual: data.unscaled_amax(&(&data.b - &ax)),
        dual_residual: dres,
        dual: y.iter().zip(&data.row_scale).map(|(v, s)| v * s).collect(),
        blocks: xs,
        free: xf.iter().copied().collect(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::min_eigenvalue;
    use approx::assert_abs_diff_eq;

    #[test]
    fn min_trace_instance() {
        let mut p = SdpProblem::default();
        let b = p.add_block(2);
        p.objective = vec![(VarRef::entry(b, 0, 0), 1.0), (VarRef::entry(b, 1, 1), 1.0)];
        p.add_constraint(vec![(VarRef::entry(b, 0, 1), 1.0)], 1.0);
        let sol = solve_ipm(&p, &IpmSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Solved);
        assert_abs_diff_eq!(sol.objective, 2.0, epsilon = 1e-7);
        assert!(sol.objective >= sol.dual_objective - 1e-7);
        assert!(sol.iterations < 40);
    }

    #[test]
    fn free_variables() {
        let mut p = SdpProblem::default();
        let b = p.add_block(2);
        let y = p.add_free(1);
        p.objective = vec![(VarRef::Free(y), 1.0)];
        p.add_constraint(vec![(VarRef::Free(y), 1.0), (VarRef::entry(b, 0, 0), -1.0)], 0.5);
        p.add_constraint(vec![(VarRef::entry(b, 0, 0), 1.0), (VarRef::entry(b, 1, 1), 1.0)], 1.0);
        p.add_constraint(vec![(VarRef::entry(b, 0, 1), 1.0)], 0.0);
        let sol = solve_ipm(&p, &IpmSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Solved);
        assert_abs_diff_eq!(sol.objective, 0.5, epsilon = 1e-7);
        assert!(min_eigenvalue(&sol.blocks[0]).unwrap() >= 0.0);
    }

    #[test]
    fn dual_multipliers_are_in_caller_units() {
        // minimize X11 s.t. 3 X11 = 6, so y = 1/3
        let mut p = SdpProblem::default();
        let b = p.add_block(1);
        p.objective = vec![(VarRef::entry(b, 0, 0), 1.0)];
        p.add_constraint(vec![(VarRef::entry(b, 0, 0), 3.0)], 6.0);
        let sol = solve_ipm(&p, &IpmSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Solved);
        assert_abs_diff_eq!(sol.dual[0], 1.0 / 3.0, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.dual_objective, 2.0, epsilon = 1e-7);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = SdpProblem::default();
        let b = p.add_block(1);
        p.add_constraint(vec![(VarRef::entry(b, 0, 0), 1.0)], -1.0);
        assert_eq!(solve_ipm(&p, &IpmSettings::default()).unwrap().status, SolveStatus::Infeasible);

        let mut q = SdpProblem::default();
        let b = q.add_block(2);
        q.objective = vec![(VarRef::entry(b, 0, 0), -1.0)];
        q.add_constraint(vec![(VarRef::entry(b, 1, 1), 1.0)], 1.0);
        assert_eq!(solve_ipm(&q, &IpmSettings::default()).unwrap().status, SolveStatus::Unbounded);
    }
}
