//! Resonant layers, congruence classes Υ(ξ), the zones Ξ(V) and the
//! spherical sets S(ρ), T(ρ).

use crate::error::{Error, Result};
use crate::geom::{iadd, IVec, Vecd, MAXD};
use crate::lattice::LatticeSubspace;
use crate::params::Geometry;
use serde::Serialize;
use std::collections::{HashSet, VecDeque};

/// Hard cap on the size of a congruence class.
pub const CLASS_CAP: usize = 100_000;

/// Λ(θ): |ξ·θ| < ρ^{α₁}|θ|; Λ(0) = R^d.
#[inline]
pub fn in_layer(theta: &Vecd, xi: &Vecd, rho_a1: f64) -> bool {
    let n = theta.norm();
    n == 0.0 || xi.dot(theta).abs() < rho_a1 * n
}

#[derive(Clone, Debug, Serialize)]
pub struct CongruenceClass {
    pub xi: Vecd,
    /// 𝖭(ξ), sorted so that ξ + shifts[i] runs by (|η|, lexicographic).
    pub shifts: Vec<IVec>,
    pub points: Vec<Vecd>,
    pub span: LatticeSubspace,
}

impl CongruenceClass {
    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    /// Position of ξ itself in the label order, i.e. ℓ(ξ) − 1.
    pub fn label_of_xi(&self) -> usize {
        self.shifts.iter().position(|s| s.iter().all(|&c| c == 0)).expect("0 is always a shift")
    }

    pub fn is_trivial(&self) -> bool {
        self.shifts.len() == 1
    }
}

/// Sort key for the labeling: (|η|, lexicographic coordinates).
pub fn label_order(a: &Vecd, b: &Vecd) -> std::cmp::Ordering {
    a.norm().partial_cmp(&b.norm()).unwrap().then_with(|| a.lex_cmp(b))
}

/// Breadth-first closure under η → η + lθ with η, η + lθ ∈ Λ(θ).
pub fn congruence_class(geo: &Geometry, xi: &Vecd) -> Result<CongruenceClass> {
    let lat = &geo.lat;
    let ra = geo.params.rho_alpha(1);
    let zero: IVec = [0; MAXD];
    let mut seen: HashSet<IVec> = HashSet::from([zero]);
    let mut queue = VecDeque::from([zero]);
    let mut shifts = vec![zero];
    while let Some(n) = queue.pop_front() {
        let eta = *xi + lat.dual_point(&n);
        for (t, th) in geo.theta.thetas.iter().zip(&geo.theta.vectors) {
            let tn2 = th.norm2();
            let p = eta.dot(th);
            let w = ra * tn2.sqrt();
            if p.abs() >= w {
                continue;
            }
            // (η + lθ)·θ = p + l|θ|² must stay inside (−w, w)
            let lo = ((-w - p) / tn2).floor() as i64 + 1;
            let hi = ((w - p) / tn2).ceil() as i64 - 1;
            for l in lo..=hi {
                if l == 0 {
                    continue;
                }
                let cand = eta + th.scale(l as f64);
                if !in_layer(th, &cand, ra) {
                    continue;
                }
                let step: IVec = std::array::from_fn(|i| t[i] * l as i32);
                let m = iadd(&n, &step);
                if seen.insert(m) {
                    if seen.len() > CLASS_CAP {
                        return Err(Error::ParamsInconsistent { cap: CLASS_CAP });
                    }
                    shifts.push(m);
                    queue.push_back(m);
                }
            }
        }
    }
    let mut pts: Vec<(IVec, Vecd)> = shifts.iter().map(|s| (*s, *xi + lat.dual_point(s))).collect();
    pts.sort_by(|a, b| label_order(&a.1, &b.1));
    let vecs: Vec<Vecd> = pts.iter().map(|p| lat.dual_point(&p.0)).collect();
    let span = LatticeSubspace::spanned_by(&vecs, &geo.theta, geo.d());
    Ok(CongruenceClass {
        xi: *xi,
        shifts: pts.iter().map(|p| p.0).collect(),
        points: pts.iter().map(|p| p.1).collect(),
        span,
    })
}

fn near_integer(x: f64, tol: f64) -> bool {
    (x - x.round()).abs() <= tol
}

/// Boundary test: some θ ∈ Θ_r has ξ·θ/|θ| ≡ ±ρ^{α₁} (mod |θ|), or some
/// point of Υ(ξ) sits on the edge of a layer or of an admissible step.
pub fn is_critical(geo: &Geometry, xi: &Vecd) -> Result<bool> {
    let ra = geo.params.rho_alpha(1);
    let tol = 1e-9;
    for th in &geo.theta.vectors {
        let tn = th.norm();
        let proj = xi.dot(th) / tn;
        for s in [-1.0, 1.0] {
            if near_integer((proj - s * ra) / tn, tol) {
                return Ok(true);
            }
        }
    }
    let class = congruence_class(geo, xi)?;
    for eta in &class.points {
        for th in &geo.theta.vectors {
            let tn2 = th.norm2();
            let p = eta.dot(th);
            let w = ra * tn2.sqrt();
            if (p.abs() - w).abs() <= tol * w {
                return Ok(true);
            }
            if p.abs() < w && (near_integer((w - p) / tn2, tol) || near_integer((-w - p) / tn2, tol)) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Fixed nudge direction for critical points.
fn nudge_dir(d: usize) -> Vecd {
    let mut v = Vecd::ZERO;
    for i in 0..d {
        v.0[i] = ((i + 2) as f64).sqrt();
    }
    v.scale(1.0 / v.norm())
}

/// Returns ξ, or ξ moved by multiples of 1e−9 along a fixed direction until
/// it is non-critical.
pub fn resolve_critical(geo: &Geometry, xi: &Vecd) -> Result<Vecd> {
    let dir = nudge_dir(geo.d());
    let mut x = *xi;
    for _ in 0..8 {
        if !is_critical(geo, &x)? {
            return Ok(x);
        }
        x += dir.scale(1e-9 * (1.0 + xi.norm()));
    }
    Err(Error::Invalid(format!("point {:?} stays critical after nudging", xi.coords(geo.d()))))
}

#[derive(Clone, Debug, Serialize)]
pub struct ZoneLabel {
    pub subspace: LatticeSubspace,
    pub tier: usize,
    /// (dimension, index within the family)
    pub index: (usize, usize),
}

/// ξ ∈ Ξ₂(V) iff some η ∈ Υ(ξ) has |η_V| < ρ^{α_{dim V}}.
pub fn in_xi2(geo: &Geometry, class: &CongruenceClass, v: &LatticeSubspace) -> bool {
    if v.dim == 0 {
        return true;
    }
    let bound = geo.params.rho_alpha(v.dim);
    class.points.iter().any(|eta| v.project(eta).norm() < bound)
}

/// The unique V with ξ ∈ Ξ(V), checking 𝖭(ξ) ⊂ V.
pub fn classify_class(geo: &Geometry, class: &CongruenceClass) -> Result<ZoneLabel> {
    let d = geo.d();
    for dim in (0..=d).rev() {
        let hits: Vec<usize> = geo.family.by_dim[dim]
            .iter()
            .enumerate()
            .filter(|(_, v)| in_xi2(geo, class, v))
            .map(|(i, _)| i)
            .collect();
        match hits.len() {
            0 => continue,
            1 => {
                let v = &geo.family.by_dim[dim][hits[0]];
                for s in &class.shifts {
                    if !v.contains(&geo.lat.dual_point(s)) {
                        return Err(Error::Internal(format!(
                            "shift {:?} of the class of {:?} is not in the zone subspace of dim {dim}",
                            &s[..d],
                            class.xi.coords(d)
                        )));
                    }
                }
                return Ok(ZoneLabel { subspace: v.clone(), tier: dim, index: (dim, hits[0]) });
            }
            _ => {
                return Err(Error::RhoTooSmall(format!(
                    "{} subspaces of dimension {dim} claim {:?}",
                    hits.len(),
                    class.xi.coords(d)
                )))
            }
        }
    }
    unreachable!("the zero subspace always matches")
}

/// Classifies ξ after resolving critical points.
pub fn classify(geo: &Geometry, xi: &Vecd) -> Result<(ZoneLabel, CongruenceClass)> {
    let x = resolve_critical(geo, xi)?;
    let class = congruence_class(geo, &x)?;
    Ok((classify_class(geo, &class)?, class))
}

/// ξ ∈ ℬ = Ξ(𝔛): no Ξ₂(V) membership with dim V ≥ 1.
pub fn in_nonresonant(geo: &Geometry, xi: &Vecd) -> Result<bool> {
    let class = congruence_class(geo, xi)?;
    Ok(geo.family.all().filter(|v| v.dim > 0).all(|v| !in_xi2(geo, &class, v)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SphereClass {
    S,
    T,
}

/// S iff |Ω·θ/|θ|| < 16ρ^{α_{d−1}−1} for some θ ∈ Θ_r.
pub fn sphere_class(geo: &Geometry, omega: &Vecd) -> SphereClass {
    let d = geo.d();
    let thr = 16.0 * geo.params.rho.powf(geo.params.alpha(d - 1) - 1.0);
    let hit = geo.theta.vectors.iter().any(|th| (omega.dot(th) / th.norm()).abs() < thr);
    if hit {
        SphereClass::S
    } else {
        SphereClass::T
    }
}
