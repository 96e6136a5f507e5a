//! Band-overlap ζ(λ) over a quasi-momentum grid and truncation diagnostics.

use crate::bandfn::bisect_sup;
use crate::error::Result;
use crate::fiber::{build_fiber, counting, FiberMatrix, OperatorSpec, Truncation};
use crate::geom::Vecd;
use crate::lattice::Lattice;
use rayon::prelude::*;
use serde::Serialize;

/// Ascending eigenvalues of one fiber with their global index offset.
#[derive(Clone, Debug, Serialize)]
pub struct FiberSpectrum {
    pub k: Vecd,
    pub inner_count: usize,
    pub eigs: Vec<f64>,
}

impl FiberSpectrum {
    pub fn from_fiber(f: &FiberMatrix) -> Result<FiberSpectrum> {
        Ok(FiberSpectrum { k: f.k, inner_count: f.inner_count, eigs: f.eigenvalues()? })
    }

    pub fn counting(&self, lambda: f64) -> usize {
        counting(&self.eigs, self.inner_count, lambda)
    }

    /// Eigenvalue with 1-based global index j, if inside the block.
    pub fn band(&self, j: usize) -> Option<f64> {
        j.checked_sub(self.inner_count + 1).and_then(|i| self.eigs.get(i).copied())
    }
}

/// Fiber spectra over the grid, in parallel.
pub fn spectra(lat: &Lattice, op: &OperatorSpec, ks: &[Vecd], trunc: Truncation) -> Result<Vec<FiberSpectrum>> {
    ks.par_iter()
        .map(|k| FiberSpectrum::from_fiber(&build_fiber(lat, op, k, trunc)?))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct OverlapWitness {
    pub k_min: Vecd,
    pub k_max: Vecd,
    pub band: usize,
    pub band_min: f64,
    pub band_max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OverlapReport {
    pub lambda: f64,
    pub zeta: f64,
    pub witness: Option<OverlapWitness>,
    pub k_count: usize,
    /// Grid min/max make ζ a lower bound for the true overlap.
    pub lower_bound: bool,
    pub diagnostic: Option<String>,
}

/// ζ(λ) = max_j min(max_k λ_j − λ, λ − min_k λ_j), clipped at 0, over the
/// bands present at every grid point.
pub fn band_overlap(spec: &[FiberSpectrum], lambda: f64) -> OverlapReport {
    let lo_j = spec.iter().map(|s| s.inner_count + 1).max().unwrap_or(1);
    let hi_j = spec.iter().map(|s| s.inner_count + s.eigs.len()).min().unwrap_or(0);
    let mut best: Option<(f64, OverlapWitness)> = None;
    for j in lo_j..=hi_j {
        let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut kmin, mut kmax) = (Vecd::ZERO, Vecd::ZERO);
        for s in spec {
            let v = s.band(j).expect("band present at every k");
            if v < mn {
                mn = v;
                kmin = s.k;
            }
            if v > mx {
                mx = v;
                kmax = s.k;
            }
        }
        let score = (mx - lambda).min(lambda - mn);
        if best.as_ref().map_or(true, |b| score > b.0) {
            best = Some((score, OverlapWitness { k_min: kmin, k_max: kmax, band: j, band_min: mn, band_max: mx }));
        }
    }
    match best {
        Some((score, w)) if score > 0.0 => OverlapReport {
            lambda,
            zeta: score,
            witness: Some(w),
            k_count: spec.len(),
            lower_bound: true,
            diagnostic: None,
        },
        _ => OverlapReport {
            lambda,
            zeta: 0.0,
            witness: None,
            k_count: spec.len(),
            lower_bound: true,
            diagnostic: Some("lambda lies in a gap or at a band edge at grid resolution".into()),
        },
    }
}

/// The counting form: largest t with min_k N(λ+t) < max_k N(λ−t).
pub fn overlap_by_counting(spec: &[FiberSpectrum], lambda: f64, t_max: f64, rel: f64) -> f64 {
    let holds = |t: f64| -> Result<bool> {
        let lo = spec.iter().map(|s| s.counting(lambda + t)).min().unwrap_or(0);
        let hi = spec.iter().map(|s| s.counting(lambda - t)).max().unwrap_or(0);
        Ok(lo < hi)
    };
    bisect_sup(holds, t_max, rel).expect("infallible predicate")
}

/// Max eigenvalue shift in [w_lo, w_hi] after enlarging the truncation by 1.25.
pub fn truncation_error(
    lat: &Lattice,
    op: &OperatorSpec,
    k: &Vecd,
    trunc: Truncation,
    window: (f64, f64),
) -> Result<f64> {
    let a = FiberSpectrum::from_fiber(&build_fiber(lat, op, k, trunc)?)?;
    let b = FiberSpectrum::from_fiber(&build_fiber(lat, op, k, trunc.scaled(1.25))?)?;
    let mut worst: f64 = 0.0;
    for (i, e) in a.eigs.iter().enumerate() {
        if *e < window.0 || *e > window.1 {
            continue;
        }
        let j = a.inner_count + i + 1;
        if let Some(f) = b.band(j) {
            worst = worst.max((e - f).abs());
        }
    }
    Ok(worst)
}

/// Annulus of half-width w around the energy shell |ξ| = λ^{1/2m}.
pub fn shell_annulus(lambda: f64, m: f64, w: f64) -> Truncation {
    let r = lambda.powf(1.0 / (2.0 * m));
    Truncation::Annulus { r_in: (r - w).max(0.0), r_out: r + w }
}
