//! Monte-Carlo volumes of momentum sets over a radial shell, and log-log
//! scaling fits.

use crate::bandfn::{random_direction, BandFunction};
use crate::error::{Error, Result};
use crate::geom::Vecd;
use crate::lattice::unit_ball_volume;
use crate::resonance::{in_nonresonant, sphere_class, SphereClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Shell {
    pub r_lo: f64,
    pub r_hi: f64,
    pub d: usize,
}

impl Shell {
    pub fn volume(&self) -> f64 {
        let d = self.d as i32;
        unit_ball_volume(self.d) * (self.r_hi.powi(d) - self.r_lo.powi(d))
    }

    /// Uniform point: radius by CDF inversion, direction uniform.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vecd {
        let d = self.d as i32;
        let u: f64 = rng.gen();
        let r = (self.r_lo.powi(d) + u * (self.r_hi.powi(d) - self.r_lo.powi(d))).powf(1.0 / d as f64);
        random_direction(rng, self.d).scale(r)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub hits: u64,
    pub samples: u64,
    pub seed: u64,
    pub shell: Shell,
}

/// Stream `chunk` of the seeded generator; chunks are independent and can
/// run in any order.
fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(chunk);
    r
}

/// Counts hits of `pred` on uniform shell samples; counts per label are summed
/// exactly. Returns hits for each of the `k` outputs of `pred`.
pub fn estimate_many<F>(pred: F, k: usize, shell: Shell, n: u64, seed: u64) -> Result<Vec<VolumeEstimate>>
where
    F: Fn(&Vecd) -> Result<Vec<bool>> + Sync,
{
    if n == 0 {
        return Err(Error::Invalid("n_samples must be positive".into()));
    }
    let chunks = n.div_ceil(CHUNK as u64);
    let counts: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let len = (n - c * CHUNK as u64).min(CHUNK as u64);
            let mut h = vec![0u64; k];
            for _ in 0..len {
                let x = shell.sample(&mut rng);
                for (i, b) in pred(&x)?.into_iter().enumerate() {
                    h[i] += b as u64;
                }
            }
            Ok(h)
        })
        .collect::<Result<_>>()?;
    let vol = shell.volume();
    Ok((0..k)
        .map(|i| {
            let hits: u64 = counts.iter().map(|c| c[i]).sum();
            let p = hits as f64 / n as f64;
            VolumeEstimate {
                value: p * vol,
                std_error: vol * (p * (1.0 - p) / n as f64).sqrt(),
                hits,
                samples: n,
                seed,
                shell,
            }
        })
        .collect())
}

pub fn estimate_volume<F>(pred: F, shell: Shell, n: u64, seed: u64) -> Result<VolumeEstimate>
where
    F: Fn(&Vecd) -> Result<bool> + Sync,
{
    Ok(estimate_many(|x| Ok(vec![pred(x)?]), 1, shell, n, seed)?.remove(0))
}

/// vol{ξ : ξ ∈ S₁, ξ − b ∈ S₂}.
pub fn estimate_intersection<F, G>(p1: F, p2: G, shift: Vecd, shell: Shell, n: u64, seed: u64) -> Result<VolumeEstimate>
where
    F: Fn(&Vecd) -> Result<bool> + Sync,
    G: Fn(&Vecd) -> Result<bool> + Sync,
{
    estimate_volume(|x| Ok(p1(x)? && p2(&(*x - shift))?), shell, n, seed)
}

/// Membership in 𝒜(ρ,δ), ℬ(ρ,δ), 𝒟(ρ,δ), B̃(ρ,δ) at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SetHits {
    pub a: bool,
    pub b: bool,
    pub d: bool,
    pub b_tilde: bool,
}

pub fn classify_sets(bf: &BandFunction, rho: f64, delta: f64, xi: &Vecd) -> Result<SetHits> {
    let lambda = rho.powf(2.0 * bf.m);
    let g = bf.g(xi)?;
    if (g - lambda).abs() > delta {
        return Ok(SetHits::default());
    }
    let nonres = in_nonresonant(&bf.geo, xi)?;
    let r = xi.norm();
    let bt = r >= rho / 8.0 && sphere_class(&bf.geo, &xi.scale(1.0 / r)) == SphereClass::T;
    Ok(SetHits { a: true, b: nonres, d: !nonres, b_tilde: bt })
}

/// Shell that must contain 𝒜(ρ,δ) given a Weyl bound w on |g − |ξ|^{2m}|.
pub fn level_shell(d: usize, m: f64, rho: f64, delta: f64, w: f64) -> Shell {
    let lambda = rho.powf(2.0 * m);
    let inv = 1.0 / (2.0 * m);
    let pad = 1.25;
    Shell {
        r_lo: (lambda - pad * (delta + w)).max(0.0).powf(inv),
        r_hi: (lambda + pad * (delta + w)).powf(inv),
        d,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SetVolumes {
    pub rho: f64,
    pub delta: f64,
    pub a: VolumeEstimate,
    pub b: VolumeEstimate,
    pub d: VolumeEstimate,
    pub b_tilde: VolumeEstimate,
    /// Hits within the outer 2.5% on either side of the shell; must be 0.
    pub edge_hits: u64,
    /// B̃ hits that are not ℬ hits; must be 0.
    pub b_tilde_outside_b: u64,
}

pub fn set_volumes(bf: &BandFunction, rho: f64, delta: f64, n: u64, seed: u64) -> Result<SetVolumes> {
    let d = bf.geo.d();
    let w = bf.weyl_bound(1.5 * rho);
    let shell = level_shell(d, bf.m, rho, delta, w);
    let band = 0.025 * (shell.r_hi - shell.r_lo);
    let est = estimate_many(
        |x| {
            let h = classify_sets(bf, rho, delta, x)?;
            let r = x.norm();
            let edge = h.a && (r < shell.r_lo + band || r > shell.r_hi - band);
            Ok(vec![h.a, h.b, h.d, h.b_tilde, edge, h.b_tilde && !h.b])
        },
        6,
        shell,
        n,
        seed,
    )?;
    bf.clear();
    Ok(SetVolumes {
        rho,
        delta,
        a: est[0].clone(),
        b: est[1].clone(),
        d: est[2].clone(),
        b_tilde: est[3].clone(),
        edge_hits: est[4].hits,
        b_tilde_outside_b: est[5].hits,
    })
}

/// Angular fraction of S(ρ) on the unit sphere.
pub fn sphere_s_fraction(geo: &crate::params::Geometry, n: u64, seed: u64) -> (f64, f64) {
    let mut rng = chunk_rng(seed, 0);
    let mut hits = 0u64;
    for _ in 0..n {
        let o = random_direction(&mut rng, geo.d());
        hits += (sphere_class(geo, &o) == SphereClass::S) as u64;
    }
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingFit {
    pub rhos: Vec<f64>,
    pub values: Vec<f64>,
    pub exponent: f64,
    /// Propagated from the Monte-Carlo errors.
    pub exponent_se: f64,
    pub constant: f64,
    pub residuals: Vec<f64>,
}

/// Weighted least squares of log v = log c + p log ρ.
pub fn fit_scaling(rhos: &[f64], values: &[f64], std_errors: &[f64]) -> Result<ScalingFit> {
    let n = rhos.len();
    if n < 3 || values.len() != n || std_errors.len() != n {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {n}")));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::DegenerateFit("non-positive value; log-log fit undefined".into()));
    }
    let x: Vec<f64> = rhos.iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let w: Vec<f64> = values
        .iter()
        .zip(std_errors)
        .map(|(v, s)| {
            let rel = s / v;
            if rel > 0.0 {
                1.0 / (rel * rel)
            } else {
                1.0
            }
        })
        .collect();
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(&w).map(|(a, b)| b * (a - mx) * (a - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all rho values coincide".into()));
    }
    let sxy: f64 = x.iter().zip(&y).zip(&w).map(|((a, c), b)| b * (a - mx) * (c - my)).sum();
    let p = sxy / sxx;
    let lc = my - p * mx;
    let residuals = x.iter().zip(&y).map(|(a, c)| c - (lc + p * a)).collect();
    let exact = std_errors.iter().all(|s| *s == 0.0);
    Ok(ScalingFit {
        rhos: rhos.to_vec(),
        values: values.to_vec(),
        exponent: p,
        exponent_se: if exact { 0.0 } else { (1.0 / sxx).sqrt() },
        constant: lc.exp(),
        residuals,
    })
}

/// Area of {r₁ ≤ |ξ| ≤ r₂} ∩ {r₁ ≤ |ξ − b| ≤ r₂} in the plane, by quadrature.
pub fn annulus_lens_area(r1: f64, r2: f64, b: f64, nodes: usize) -> f64 {
    let arc = |s: f64| -> f64 {
        if b == 0.0 {
            return 2.0 * std::f64::consts::PI;
        }
        let c = |r: f64| ((s * s + b * b - r * r) / (2.0 * s * b)).clamp(-1.0, 1.0);
        2.0 * (c(r2).acos() - c(r1).acos()).max(0.0)
    };
    // Simpson on [r1, r2]
    let n = nodes + nodes % 2;
    let h = (r2 - r1) / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let s = r1 + h * i as f64;
        let wgt = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += wgt * s * arc(s);
    }
    acc * h / 3.0
}
