//! Monte-Carlo volumes of sublevel sets, the symmetric-difference metric
//! `D_V`, and the closed-form ellipsoid volume used as an oracle.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::dynsys::{chunk_ranges, chunk_rng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("matrix is {rows}x{cols}, expected {n}x{n}")]
    Dimension { rows: usize, cols: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    /// `sqrt(p(1-p)/n) * box_volume` with `p` the hit fraction.
    pub standard_error: f64,
    pub hits: u64,
    pub n_samples: u64,
    pub seed: u64,
    pub bounding_box: Vec<[f64; 2]>,
}

impl VolumeEstimate {
    fn from_hits(hits: u64, n: u64, seed: u64, bbox: &[[f64; 2]]) -> Self {
        let vol = box_volume(bbox);
        let p = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        let se = if n == 0 { 0.0 } else { (p * (1.0 - p) / n as f64).sqrt() * vol };
        VolumeEstimate {
            value: p * vol,
            standard_error: se,
            hits,
            n_samples: n,
            seed,
            bounding_box: bbox.to_vec(),
        }
    }

    /// True when `|value - reference| <= k * standard_error`.
    pub fn agrees_with(&self, reference: f64, k: f64) -> bool {
        (self.value - reference).abs() <= k * self.standard_error
    }
}

pub fn box_volume(bbox: &[[f64; 2]]) -> f64 {
    bbox.iter().map(|[lo, hi]| hi - lo).product()
}

/// Counts uniform box points accepted by `f`, in fixed chunks so the result
/// only depends on the seed.
fn count_hits<F>(bbox: &[[f64; 2]], n: usize, seed: u64, f: F) -> u64
where
    F: Fn(&[f64]) -> bool + Sync,
{
    chunk_ranges(n)
        .par_iter()
        .map(|&(k, count)| {
            let mut rng = chunk_rng(seed, k as u64);
            let mut x = vec![0.0; bbox.len()];
            let mut hits = 0u64;
            for _ in 0..count {
                for (xi, [lo, hi]) in x.iter_mut().zip(bbox) {
                    *xi = lo + (hi - lo) * rng.random::<f64>();
                }
                hits += f(&x) as u64;
            }
            hits
        })
        .sum()
}

/// Lebesgue measure of `{x in box : indicator(x)}` by uniform sampling.
pub fn mc_volume<F>(indicator: F, bbox: &[[f64; 2]], n: usize, seed: u64) -> VolumeEstimate
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let hits = count_hits(bbox, n, seed, indicator);
    VolumeEstimate::from_hits(hits, n as u64, seed, bbox)
}

/// Volume of `{x : xᵀPx <= 1}`: `π^(n/2) / (Γ(n/2+1) sqrt(det P))`.
pub fn ellipsoid_volume(p: &DMatrix<f64>) -> Result<f64, GeometryError> {
    let n = p.nrows();
    if p.ncols() != n {
        return Err(GeometryError::Dimension { rows: n, cols: p.ncols(), n });
    }
    let asym = (p - p.transpose()).abs().max();
    if asym > 1e-10 * p.abs().max().max(1.0) {
        return Err(GeometryError::NotPositiveDefinite);
    }
    let chol = p.clone().cholesky().ok_or(GeometryError::NotPositiveDefinite)?;
    let half_logdet: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum();
    let nh = n as f64 / 2.0;
    Ok((nh * std::f64::consts::PI.ln() - ln_gamma(nh + 1.0) - half_logdet).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DvEstimate {
    pub dv: VolumeEstimate,
    pub volume_a: VolumeEstimate,
    pub volume_b: VolumeEstimate,
    /// Points in B but not in A; must be zero (up to noise) when `B ⊆ A`.
    pub b_outside_a: u64,
    /// `|D_V - (μ(A) - μ(B))|` when containment was asserted.
    pub containment_gap: Option<f64>,
}

/// Symmetric-difference volume `μ((A∖B) ∪ (B∖A))` with both sets evaluated on
/// the same sample stream, so swapping the arguments gives the same value.
///
/// With `b_in_a` set, the identity `D_V = μ(A) - μ(B)` is checked as well.
pub fn dv_metric<A, B>(ind_a: A, ind_b: B, bbox: &[[f64; 2]], n: usize, seed: u64, b_in_a: bool) -> DvEstimate
where
    A: Fn(&[f64]) -> bool + Sync,
    B: Fn(&[f64]) -> bool + Sync,
{
    let counts: [u64; 3] = chunk_ranges(n)
        .par_iter()
        .map(|&(k, count)| {
            let mut rng = chunk_rng(seed, k as u64);
            let mut x = vec![0.0; bbox.len()];
            let mut c = [0u64; 3];
            for _ in 0..count {
                for (xi, [lo, hi]) in x.iter_mut().zip(bbox) {
                    *xi = lo + (hi - lo) * rng.random::<f64>();
                }
                let (a, b) = (ind_a(&x), ind_b(&x));
                c[0] += a as u64;
                c[1] += b as u64;
                c[2] += (b && !a) as u64;
            }
            c
        })
        .reduce(|| [0; 3], |u, v| [u[0] + v[0], u[1] + v[1], u[2] + v[2]]);
    let n64 = n as u64;
    let [ha, hb, b_only] = counts;
    let a_only = ha - (hb - b_only);
    let dv = VolumeEstimate::from_hits(a_only + b_only, n64, seed, bbox);
    let volume_a = VolumeEstimate::from_hits(ha, n64, seed, bbox);
    let volume_b = VolumeEstimate::from_hits(hb, n64, seed, bbox);
    let containment_gap = b_in_a.then(|| (dv.value - (volume_a.value - volume_b.value)).abs());
    DvEstimate {
        dv,
        volume_a,
        volume_b,
        b_outside_a: b_only,
        containment_gap,
    }
}
