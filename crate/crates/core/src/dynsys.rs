//! Polynomial vector fields, semialgebraic domains and the built-in
//! benchmark systems.
//!
//! A [`DynamicalSystem`] stores its field in original coordinates together
//! with a state scale and a time scale. [`apply_scaling`] produces the field
//! actually handed to the optimizer: `y = x / scale`,
//! `dy/dt = time_scale * f(scale * y) / scale`. Domains are always expressed
//! in the scaled coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{parse_polynomial, PolyError, Polynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("unknown builtin system '{0}' (expected lorenz, vanderpol or ahmadi7)")]
    UnknownSystem(String),
    #[error("invalid system: {0}")]
    Invalid(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("domain sampling acceptance rate {rate:.2e} is below 1e-4; shrink the bounding box")]
    LowAcceptance { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicalSystem {
    pub name: String,
    pub n: usize,
    pub f: Vec<Polynomial>,
    pub scale: f64,
    pub time_scale: f64,
}

impl DynamicalSystem {
    pub fn new(name: &str, f: Vec<Polynomial>, scale: f64, time_scale: f64) -> Result<Self, SystemError> {
        let n = f.len();
        if n == 0 {
            return Err(SystemError::Invalid("empty vector field".into()));
        }
        if let Some(p) = f.iter().find(|p| p.dim() != n) {
            return Err(SystemError::Invalid(format!(
                "component of dimension {} in a {}-dimensional field",
                p.dim(),
                n
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) || !(time_scale > 0.0 && time_scale.is_finite()) {
            return Err(SystemError::Invalid("scale and time_scale must be positive".into()));
        }
        Ok(DynamicalSystem {
            name: name.to_string(),
            n,
            f,
            scale,
            time_scale,
        })
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.f) {
            *o = p.eval(x);
        }
    }

    pub fn degree(&self) -> u32 {
        self.f.iter().map(|p| p.degree()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    /// Ω = {x : g(x) ≥ 0}.
    pub g: Polynomial,
    pub bounding_box: Vec<[f64; 2]>,
}

impl Domain {
    pub fn new(g: Polynomial, bounding_box: Vec<[f64; 2]>) -> Result<Self, SystemError> {
        if bounding_box.len() != g.dim() {
            return Err(SystemError::Invalid(format!(
                "bounding box has {} axes for a {}-dimensional domain",
                bounding_box.len(),
                g.dim()
            )));
        }
        if bounding_box.iter().any(|[lo, hi]| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(SystemError::Invalid("bounding box intervals must be finite with lo < hi".into()));
        }
        Ok(Domain { g, bounding_box })
    }

    pub fn dim(&self) -> usize {
        self.bounding_box.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.g.eval(x) >= 0.0
    }

    pub fn box_volume(&self) -> f64 {
        self.bounding_box.iter().map(|[lo, hi]| hi - lo).product()
    }

    fn random_box_point(&self, rng: &mut ChaCha8Rng, x: &mut [f64]) {
        for (xi, [lo, hi]) in x.iter_mut().zip(&self.bounding_box) {
            *xi = lo + (hi - lo) * rng.random::<f64>();
        }
    }

    /// Draws `n` uniform points of Ω by rejection from the bounding box and
    /// maps each through `f`. Output order depends only on `seed`.
    pub fn sample_interior_map<T, F>(&self, n: usize, seed: u64, f: F) -> Result<Vec<T>, SystemError>
    where
        T: Send,
        F: Fn(&[f64]) -> T + Sync,
    {
        let g = self.g.evaluator();
        let chunks: Vec<(usize, usize)> = chunk_ranges(n);
        let parts: Vec<Result<Vec<T>, SystemError>> = chunks
            .par_iter()
            .map(|&(k, count)| {
                let mut rng = chunk_rng(seed, k as u64);
                let mut out = Vec::with_capacity(count);
                let mut x = vec![0.0; self.dim()];
                let mut tries: u64 = 0;
                while out.len() < count {
                    self.random_box_point(&mut rng, &mut x);
                    tries += 1;
                    if g.eval(&x) >= 0.0 {
                        out.push(f(&x));
                    } else if tries >= 1_000_000 && (out.len() as f64) < 1e-4 * tries as f64 {
                        return Err(SystemError::LowAcceptance {
                            rate: out.len() as f64 / tries as f64,
                        });
                    }
                }
                Ok(out)
            })
            .collect();
        let mut all = Vec::with_capacity(n);
        for p in parts {
            all.extend(p?);
        }
        Ok(all)
    }

    pub fn sample_interior(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, SystemError> {
        self.sample_interior_map(n, seed, |x| x.to_vec())
    }

    /// Interior point with the largest sampled value of `g`.
    pub fn anchor(&self, seed: u64) -> Result<Vec<f64>, SystemError> {
        let pts = self.sample_interior_map(20_000, seed, |x| (self.g.eval(x), x.to_vec()))?;
        Ok(pts
            .into_iter()
            .fold((f64::NEG_INFINITY, Vec::new()), |best, p| if p.0 > best.0 { p } else { best })
            .1)
    }

    /// Points of ∂Ω found by scanning random rays from an interior anchor and
    /// bisecting every sign change of `g` inside the bounding box.
    pub fn sample_boundary(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, SystemError> {
        let anchor = self.anchor(seed ^ 0x5eed)?;
        let dim = self.dim();
        let g = self.g.evaluator();
        let diam = self
            .bounding_box
            .iter()
            .map(|[lo, hi]| (hi - lo).powi(2))
            .sum::<f64>()
            .sqrt();
        let steps = 400;
        let chunks = chunk_ranges(n);
        let parts: Vec<Vec<Vec<f64>>> = chunks
            .par_iter()
            .map(|&(k, count)| {
                let mut rng = chunk_rng(seed.wrapping_add(0x0b0d), k as u64);
                let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
                let mut dir = vec![0.0; dim];
                let point = |t: f64, dir: &[f64]| -> Vec<f64> {
                    anchor.iter().zip(dir).map(|(a, d)| a + t * d).collect()
                };
                let mut rays = 0usize;
                while out.len() < count && rays < 1000 * count.max(1) {
                    rays += 1;
                    let norm = loop {
                        for d in dir.iter_mut() {
                            *d = rng.sample::<f64, _>(rand_distr::StandardNormal);
                        }
                        let nn = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
                        if nn > 1e-12 {
                            break nn;
                        }
                    };
                    dir.iter_mut().for_each(|d| *d /= norm);
                    let h = diam / steps as f64;
                    let mut t0 = 0.0;
                    let mut g0 = g.eval(&anchor);
                    for s in 1..=steps {
                        let t1 = s as f64 * h;
                        let x1 = point(t1, &dir);
                        if !self.in_box(&x1) {
                            break;
                        }
                        let g1 = g.eval(&x1);
                        if (g0 >= 0.0) != (g1 >= 0.0) {
                            let (mut a, mut b) = (t0, t1);
                            for _ in 0..60 {
                                let m = 0.5 * (a + b);
                                if (g.eval(&point(m, &dir)) >= 0.0) == (g0 >= 0.0) {
                                    a = m;
                                } else {
                                    b = m;
                                }
                            }
                            out.push(point(0.5 * (a + b), &dir));
                            if out.len() == count {
                                break;
                            }
                        }
                        t0 = t1;
                        g0 = g1;
                    }
                }
                out
            })
            .collect();
        Ok(parts.into_iter().flatten().collect())
    }

    pub fn in_box(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.bounding_box).all(|(v, [lo, hi])| *v >= *lo && *v <= *hi)
    }
}

const CHUNK: usize = 4096;

/// Splits `n` draws into fixed-size chunks so results do not depend on the
/// thread count.
pub(crate) fn chunk_ranges(n: usize) -> Vec<(usize, usize)> {
    (0..n.div_ceil(CHUNK)).map(|k| (k, CHUNK.min(n - k * CHUNK))).collect()
}

pub(crate) fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Field in scaled coordinates: `time_scale * f(scale * y) / scale`.
pub fn rescale_field(f: &[Polynomial], scale: f64, time_scale: f64) -> Vec<Polynomial> {
    f.iter()
        .map(|p| p.scale_variables(scale).scale(time_scale / scale))
        .collect()
}

/// Returns the system the optimizer sees, with unit scale and time scale.
/// Its attractor is the original attractor divided by `scale`.
pub fn apply_scaling(sys: &DynamicalSystem) -> DynamicalSystem {
    DynamicalSystem {
        name: sys.name.clone(),
        n: sys.n,
        f: rescale_field(&sys.f, sys.scale, sys.time_scale),
        scale: 1.0,
        time_scale: 1.0,
    }
}

pub const LORENZ_SIGMA: f64 = 10.0;
pub const LORENZ_RHO: f64 = 28.0;
pub const LORENZ_BETA: f64 = 8.0 / 3.0;

pub const LORENZ_SCALE: f64 = 25.0;
pub const VANDERPOL_SCALE: f64 = 3.1;
pub const AHMADI7_TIME_SCALE: f64 = 1000.0;

fn ball(n: usize, r: f64) -> Polynomial {
    let mut g = Polynomial::constant(n, r * r);
    for i in 0..n {
        let xi = Polynomial::var(n, i);
        g = &g - &(&xi * &xi);
    }
    g
}

fn lorenz_field() -> Vec<Polynomial> {
    let x = |i| Polynomial::var(3, i);
    let (x1, x2, x3) = (x(0), x(1), x(2));
    vec![
        &(&x2 - &x1) * LORENZ_SIGMA,
        &(&(&x1 * LORENZ_RHO) - &x2) - &(&x1 * &x3),
        &(&x1 * &x2) - &(&x3 * LORENZ_BETA),
    ]
}

fn vanderpol_field() -> Vec<Polynomial> {
    let x1 = Polynomial::var(2, 0);
    let x2 = Polynomial::var(2, 1);
    let one = Polynomial::constant(2, 1.0);
    vec![x2.clone(), &(&(&one - &(&x1 * &x1)) * &x2) - &x1]
}

fn ahmadi7_field() -> Vec<Polynomial> {
    let src = [
        "-2*x2*(-x1^4 + 2*x1^2*x2^2 + x2^4) - 2*x1*(x1^2 + x2^2)*(x1^4 + 2*x1^2*x2^2 - x2^4)",
        "2*x1*(x1^4 + 2*x1^2*x2^2 - x2^4) - 2*x2*(x1^2 + x2^2)*(-x1^4 + 2*x1^2*x2^2 + x2^4)",
    ];
    src.iter().map(|s| parse_polynomial(s, 2).expect("builtin field parses")).collect()
}

/// The three benchmark systems with their default domains (in scaled
/// coordinates) and scaling constants.
pub fn builtin(name: &str) -> Result<(DynamicalSystem, Domain), SystemError> {
    match name {
        "lorenz" => Ok((
            DynamicalSystem::new("lorenz", lorenz_field(), LORENZ_SCALE, 1.0)?,
            Domain::new(ball(3, 3.0), vec![[-3.0, 3.0]; 3])?,
        )),
        "vanderpol" => {
            let (r1, r2) = (0.45, 1.0);
            let g = -&(&ball(2, r1) * &ball(2, r2));
            Ok((
                DynamicalSystem::new("vanderpol", vanderpol_field(), VANDERPOL_SCALE, 1.0)?,
                Domain::new(g, vec![[-1.0, 1.0]; 2])?,
            ))
        }
        "ahmadi7" => Ok((
            DynamicalSystem::new("ahmadi7", ahmadi7_field(), 1.0, AHMADI7_TIME_SCALE)?,
            Domain::new(ball(2, 1.0), vec![[-1.0, 1.0]; 2])?,
        )),
        other => Err(SystemError::UnknownSystem(other.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSystem {
    pub f: Vec<String>,
    pub n: usize,
}

/// `{"name": "lorenz"}` or `{"custom": {"f": [...], "n": 2}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomSystem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub g: String,
    pub bounding_box: Vec<[f64; 2]>,
}

/// Builds the (unscaled) system and its domain from config pieces. A builtin
/// supplies default domain and scales; explicit values override them.
pub fn resolve(
    system: &SystemSpec,
    domain: Option<&DomainSpec>,
    scale: Option<f64>,
    time_scale: Option<f64>,
) -> Result<(DynamicalSystem, Domain), SystemError> {
    let (mut sys, default_dom) = match (&system.name, &system.custom) {
        (Some(name), None) => {
            let (s, d) = builtin(name)?;
            (s, Some(d))
        }
        (None, Some(c)) => {
            if c.f.len() != c.n {
                return Err(SystemError::Invalid(format!("{} components for n = {}", c.f.len(), c.n)));
            }
            let f = c
                .f
                .iter()
                .map(|s| parse_polynomial(s, c.n))
                .collect::<Result<Vec<_>, _>>()?;
            (DynamicalSystem::new("custom", f, 1.0, 1.0)?, None)
        }
        _ => {
            return Err(SystemError::Invalid(
                "system needs exactly one of 'name' or 'custom'".into(),
            ))
        }
    };
    if let Some(s) = scale {
        sys = DynamicalSystem::new(&sys.name, sys.f, s, sys.time_scale)?;
    }
    if let Some(t) = time_scale {
        sys = DynamicalSystem::new(&sys.name, sys.f, sys.scale, t)?;
    }
    let dom = match (domain, default_dom) {
        (Some(spec), _) => Domain::new(parse_polynomial(&spec.g, sys.n)?, spec.bounding_box.clone())?,
        (None, Some(d)) => d,
        (None, None) => return Err(SystemError::Invalid("custom systems need a domain".into())),
    };
    if dom.dim() != sys.n {
        return Err(SystemError::Invalid("domain and system dimensions differ".into()));
    }
    Ok((sys, dom))
}
