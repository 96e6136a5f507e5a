//! Cluster matrices of the model operator A = H₀ + b^o + b^♭, the labeling
//! function g, global band indices, the intervals I(Ω; ρ, δ) and the search
//! for directions along which g stays a simple eigenvalue.

use crate::error::{Error, Result};
use crate::geom::Vecd;
use crate::linalg::eigvalsh_small;
use crate::params::Geometry;
use crate::resonance::{congruence_class, in_nonresonant, resolve_critical, sphere_class, CongruenceClass, SphereClass};
use crate::symbol::decompose::part;
use crate::symbol::norm::directions;
use crate::symbol::{h0, PartKind, Sym};
use dashmap::DashMap;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Clone, Debug, Serialize)]
pub struct ClusterMatrix {
    pub class: CongruenceClass,
    pub n: usize,
    /// Row-major entries 𝒜_{ij} = dc^{-1/2} â(s_i − s_j, μ + s_j).
    pub entries: Vec<C64>,
}

impl ClusterMatrix {
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        eigvalsh_small(self.n, &self.entries)
    }

    pub fn hermitian_residual(&self) -> f64 {
        let n = self.n;
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                r = r.max((self.entries[i * n + j] - self.entries[j * n + i].conj()).norm());
            }
        }
        r
    }
}

pub struct BandFunction {
    pub geo: Geometry,
    pub m: f64,
    pub b: Option<Sym>,
    o: Option<Sym>,
    flat: Option<Sym>,
    memo: DashMap<[i64; crate::geom::MAXD], f64>,
}

impl BandFunction {
    pub fn new(geo: &Geometry, m: f64, b: Option<Sym>) -> BandFunction {
        let o = b.as_ref().map(|s| part(s, PartKind::O, &geo.theta, geo.bank));
        let flat = b.as_ref().map(|s| part(s, PartKind::Flat, &geo.theta, geo.bank));
        BandFunction { geo: geo.clone(), m, b, o, flat, memo: DashMap::new() }
    }

    /// The parts b^o and b^♭ as symbols, for building model-operator fibers.
    pub fn model_symbols(&self) -> Vec<Sym> {
        self.o.iter().chain(self.flat.iter()).cloned().collect()
    }

    pub fn clear(&self) {
        self.memo.clear();
    }

    pub fn cluster_matrix(&self, class: &CongruenceClass) -> ClusterMatrix {
        let n = class.len();
        let s = 1.0 / self.geo.lat.sqrt_det();
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let p = &class.points[j];
            let mut d = C64::new(h0(p, self.m), 0.0);
            if let Some(o) = &self.o {
                if let Some(z) = o.eval(p).first() {
                    d += *z * s;
                }
            }
            entries[j * n + j] = d;
            if n == 1 {
                continue;
            }
            if let Some(f) = &self.flat {
                let fv = f.eval(p);
                let sup = f.support();
                for i in 0..n {
                    if i == j {
                        continue;
                    }
                    let t = crate::geom::isub(&class.shifts[i], &class.shifts[j]);
                    if !class.span.contains(&self.geo.lat.dual_point(&t)) {
                        continue;
                    }
                    if let Some(k) = sup.index_of(&t) {
                        entries[i * n + j] = fv[k] * s;
                    }
                }
            }
        }
        ClusterMatrix { class: class.clone(), n, entries }
    }

    /// g(ξ) = λ_{ℓ(ξ)}(𝒜(ξ)), ascending eigenvalues paired with the
    /// (|η|, lexicographic) order of Υ(ξ).
    pub fn g(&self, xi: &Vecd) -> Result<f64> {
        let key = xi.key();
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        let x = resolve_critical(&self.geo, xi)?;
        let class = congruence_class(&self.geo, &x)?;
        let val = if class.is_trivial() {
            let mut v = h0(&x, self.m);
            if let Some(o) = &self.o {
                if let Some(z) = o.eval(&x).first() {
                    v += z.re / self.geo.lat.sqrt_det();
                }
            }
            v
        } else {
            let eigs = self.cluster_matrix(&class).eigenvalues()?;
            if x == *xi {
                for (p, e) in class.points.iter().zip(&eigs) {
                    self.memo.insert(p.key(), *e);
                }
            }
            eigs[class.label_of_xi()]
        };
        self.memo.insert(key, val);
        Ok(val)
    }

    /// Sampled sup of dc^{-1/2} Σ_θ |b̂(θ, η)| over |η| ≤ radius, times 1.25.
    pub fn weyl_bound(&self, radius: f64) -> f64 {
        let Some(b) = &self.b else { return 0.0 };
        let s = 1.0 / self.geo.lat.sqrt_det();
        let dirs = directions(self.geo.d(), 720);
        let mut w: f64 = 0.0;
        for i in 0..=16 {
            let r = radius * i as f64 / 16.0;
            for u in &dirs {
                let v = b.eval(&u.scale(r));
                w = w.max(v.iter().map(|z| z.norm()).sum::<f64>() * s);
            }
        }
        1.25 * w
    }

    /// #{n ≠ 0 : g(ξ+n) < g(ξ)} + 1, with a Weyl-bound prefilter.
    pub fn global_index(&self, xi: &Vecd, weyl: f64) -> Result<usize> {
        let gx = self.g(xi)?;
        let lat = &self.geo.lat;
        let inv = 1.0 / (2.0 * self.m);
        let lo = (gx - weyl).max(0.0).powf(inv);
        let hi = (gx + weyl).max(0.0).powf(inv);
        let mut count = lat.count_inside(xi, lo);
        for n in lat.dual_points_in_shell(xi, lo, hi) {
            if n.iter().all(|&c| c == 0) {
                continue;
            }
            let eta = *xi + lat.dual_point(&n);
            if self.g(&eta)? < gx {
                count += 1;
            }
        }
        Ok(count + 1)
    }

    /// N(μ, A(k)) = #{n : g(k+n) ≤ μ}, no truncation.
    pub fn model_counting(&self, k: &Vecd, mu: f64, weyl: f64) -> Result<usize> {
        let lat = &self.geo.lat;
        let inv = 1.0 / (2.0 * self.m);
        let lo = (mu - weyl).max(0.0).powf(inv);
        let hi = (mu + weyl).max(0.0).powf(inv);
        let mut count = lat.count_inside(k, lo);
        for n in lat.dual_points_in_shell(k, lo, hi) {
            if self.g(&(*k + lat.dual_point(&n)))? <= mu {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Smallest |g(ξ+n) − g(ξ)| over n ≠ 0 with g(ξ+n) possibly near g(ξ).
    pub fn neighbour_gap(&self, xi: &Vecd, weyl: f64, window: f64) -> Result<f64> {
        let gx = self.g(xi)?;
        let lat = &self.geo.lat;
        let inv = 1.0 / (2.0 * self.m);
        let lo = (gx - weyl - window).max(0.0).powf(inv);
        let hi = (gx + weyl + window).max(0.0).powf(inv);
        let mut gap = f64::INFINITY;
        for n in lat.dual_points_in_shell(xi, lo, hi) {
            if n.iter().all(|&c| c == 0) {
                continue;
            }
            gap = gap.min((self.g(&(*xi + lat.dual_point(&n)))? - gx).abs());
        }
        Ok(gap)
    }

    /// I(Ω; ρ, δ) = {t : ρ^{2m} − δ ≤ g(tΩ) ≤ ρ^{2m} + δ}, assuming g is
    /// increasing along the ray; checked on 17 interior samples.
    pub fn interval_i(&self, omega: &Vecd, rho: f64, delta: f64, weyl: f64) -> Result<(f64, f64)> {
        let target = rho.powf(2.0 * self.m);
        if !(delta > 0.0 && delta <= target / 4.0) {
            return Err(Error::Invalid(format!("delta = {delta} outside (0, rho^2m/4]")));
        }
        let lo = self.solve_radial(omega, target - delta, weyl)?;
        let hi = self.solve_radial(omega, target + delta, weyl)?;
        if !(hi > lo) {
            return Err(Error::Monotonicity(format!("interval endpoints {lo} >= {hi}")));
        }
        let mut prev = self.g(&omega.scale(lo))?;
        for i in 1..=17 {
            let t = lo + (hi - lo) * i as f64 / 17.0;
            let v = self.g(&omega.scale(t))?;
            if !(v > prev) {
                return Err(Error::Monotonicity(format!("g not increasing along the ray at t = {t}")));
            }
            prev = v;
        }
        Ok((lo, hi))
    }

    /// t with g(tΩ) = level, by bracketing and bisection to machine precision.
    fn solve_radial(&self, omega: &Vecd, level: f64, weyl: f64) -> Result<f64> {
        let inv = 1.0 / (2.0 * self.m);
        let f = |t: f64| -> Result<f64> { Ok(self.g(&omega.scale(t))? - level) };
        let mut a = (level - weyl).max(0.0).powf(inv);
        let mut b = (level + weyl).powf(inv);
        let pad = 1e-9 * (1.0 + b);
        a = (a - pad).max(0.0);
        b += pad;
        let mut fa = f(a)?;
        let mut fb = f(b)?;
        let mut grow = 0;
        while fa > 0.0 || fb < 0.0 {
            grow += 1;
            if grow > 60 {
                return Err(Error::Monotonicity(format!("no bracket for g = {level}")));
            }
            if fa > 0.0 {
                a = (a - (b - a)).max(0.0);
                fa = f(a)?;
            }
            if fb < 0.0 {
                b += b - a;
                fb = f(b)?;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let fm = f(mid)?;
            if fm < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// Lower bound on ζ(λ; A) from counting at the given quasi-momenta:
    /// largest t with min_k N(λ+t) < max_k N(λ−t), bisected to `rel`.
    pub fn model_overlap(&self, ks: &[Vecd], lambda: f64, t_max: f64, weyl: f64, rel: f64) -> Result<f64> {
        let holds = |t: f64| -> Result<bool> {
            let mut lo = usize::MAX;
            let mut hi = 0;
            for k in ks {
                lo = lo.min(self.model_counting(k, lambda + t, weyl)?);
                hi = hi.max(self.model_counting(k, lambda - t, weyl)?);
            }
            Ok(lo < hi)
        };
        bisect_sup(holds, t_max, rel)
    }
}

/// sup{t ∈ [0, t_max] : p(t)} for a predicate true on an initial segment.
pub fn bisect_sup(mut p: impl FnMut(f64) -> Result<bool>, t_max: f64, rel: f64) -> Result<f64> {
    if !p(0.0)? {
        return Ok(0.0);
    }
    if p(t_max)? {
        return Ok(t_max);
    }
    let (mut a, mut b) = (0.0, t_max);
    while b - a > rel * b.max(1e-300) {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if p(mid)? {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(a)
}

#[derive(Clone, Debug, Serialize)]
pub struct SimpleDirection {
    pub omega: Vecd,
    pub interval: (f64, f64),
    pub band_index: usize,
    pub min_gap: f64,
    pub in_t: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionWitness {
    pub omega: Vecd,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimpleSearch {
    pub found: Option<SimpleDirection>,
    pub rejected: Vec<DirectionWitness>,
    /// True when T(ρ) had no sampled direction and non-resonant shell points
    /// were used instead.
    pub used_fallback: bool,
    pub tolerance: f64,
}

/// Searches directions Ω (from T(ρ), or with ρΩ non-resonant when T(ρ) is
/// empty) whose interval I(Ω; ρ, δ) keeps g simple with a fixed band index.
pub fn find_simple_direction(
    bf: &BandFunction,
    rho: f64,
    delta: f64,
    budget: usize,
    t_samples: usize,
    seed: u64,
) -> Result<SimpleSearch> {
    let d = bf.geo.d();
    let tol = 1e-8 * rho.powf(2.0 * bf.m);
    let weyl = bf.weyl_bound(2.0 * rho);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cands: Vec<Vecd> = (0..budget).map(|_| random_direction(&mut rng, d)).collect();
    let in_t: Vec<bool> = cands.iter().map(|o| sphere_class(&bf.geo, o) == SphereClass::T).collect();
    let used_fallback = !in_t.iter().any(|&b| b);
    if !used_fallback {
        cands = cands.into_iter().zip(&in_t).filter(|(_, &t)| t).map(|(c, _)| c).collect();
    }
    let mut rejected = Vec::new();
    'dirs: for omega in cands {
        if used_fallback && !in_nonresonant(&bf.geo, &omega.scale(rho))? {
            rejected.push(DirectionWitness { omega, reason: "resonant at the shell".into() });
            continue;
        }
        let (lo, hi) = match bf.interval_i(&omega, rho, delta, weyl) {
            Ok(iv) => iv,
            Err(e) => {
                rejected.push(DirectionWitness { omega, reason: e.to_string() });
                continue;
            }
        };
        let mut band = None;
        let mut min_gap = f64::INFINITY;
        for i in 0..t_samples.max(2) {
            let t = lo + (hi - lo) * i as f64 / (t_samples.max(2) - 1) as f64;
            let xi = omega.scale(t);
            let gap = bf.neighbour_gap(&xi, weyl, tol)?;
            min_gap = min_gap.min(gap);
            if gap <= tol {
                rejected.push(DirectionWitness { omega, reason: format!("multiplicity at t = {t}, gap {gap:e}") });
                continue 'dirs;
            }
            let j = bf.global_index(&xi, weyl)?;
            match band {
                None => band = Some(j),
                Some(j0) if j0 != j => {
                    rejected.push(DirectionWitness { omega, reason: format!("band index changes {j0} -> {j} at t = {t}") });
                    continue 'dirs;
                }
                _ => {}
            }
        }
        return Ok(SimpleSearch {
            found: Some(SimpleDirection {
                omega,
                interval: (lo, hi),
                band_index: band.unwrap(),
                min_gap,
                in_t: !used_fallback,
            }),
            rejected,
            used_fallback,
            tolerance: tol,
        });
    }
    Ok(SimpleSearch { found: None, rejected, used_fallback, tolerance: tol })
}

pub fn random_direction(rng: &mut impl Rng, d: usize) -> Vecd {
    if d == 2 {
        let a: f64 = rng.gen::<f64>() * 2.0 * PI;
        return Vecd::from_slice(&[a.cos(), a.sin()]);
    }
    loop {
        let mut v = Vecd::ZERO;
        for i in 0..d {
            v.0[i] = 2.0 * rng.gen::<f64>() - 1.0;
        }
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v.scale(1.0 / n);
        }
    }
}
