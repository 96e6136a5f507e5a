//! Gauge series: Ψ = Σ ψ_l with ad(H₀; ψ_l) + (B_l + T_l)^♮ = 0, and the
//! conjugated operator A₁ = H₀ + X_M − X_M^♮ + R_{M+1}.

use crate::error::{Error, Result};
use crate::geom::Vecd;
use crate::lattice::Lattice;
use crate::params::{Geometry, SymbolClass};
use crate::symbol::decompose::part;
use crate::symbol::norm::{estimate_norm, norm_grid};
use crate::symbol::{
    commutator, kinetic, lincomb, tau, Coeffs, Memo, PartKind, Support, Sym, Symbol,
};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// ψ̂(θ, ξ) = i â^♮(θ, ξ)/τ_θ(ξ), θ ≠ 0.
pub struct GaugePsi {
    natural: Sym,
    m: f64,
    floor: f64,
    support: Support,
    memo: Memo,
    fault: Mutex<Option<Error>>,
    name: String,
}

impl GaugePsi {
    pub fn new(src: &Sym, geo: &Geometry, m: f64, name: &str) -> GaugePsi {
        let natural = part(src, PartKind::Natural, &geo.theta, geo.bank);
        let p = &geo.params;
        let floor = 1e-12 * p.rho.powf(2.0 * m - 2.0 + p.beta());
        GaugePsi {
            support: natural.support().clone(),
            natural,
            m,
            floor,
            memo: Memo::new(true),
            fault: Mutex::new(None),
            name: name.to_string(),
        }
    }

    /// First degenerate-denominator hit, if any evaluation produced one.
    pub fn take_fault(&self) -> Option<Error> {
        self.fault.lock().unwrap().take()
    }
}

impl Symbol for GaugePsi {
    fn lattice(&self) -> &Lattice {
        self.natural.lattice()
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn eval(&self, xi: &Vecd) -> Coeffs {
        self.memo.get_or(xi, || {
            let nv = self.natural.eval(xi);
            let mut out = vec![C64::new(0.0, 0.0); nv.len()];
            for (i, a) in nv.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let th = &self.support.vecs[i];
                let t = tau(self.m, th, xi);
                if t.abs() < self.floor {
                    let mut f = self.fault.lock().unwrap();
                    if f.is_none() {
                        *f = Some(Error::DegenerateDenominator {
                            tau: t,
                            theta: self.support.thetas[i].to_vec(),
                            xi: xi.0.to_vec(),
                        });
                    }
                    continue;
                }
                out[i] = C64::new(0.0, 1.0) * *a / t;
            }
            out.into()
        })
    }
    fn children(&self) -> Vec<Sym> {
        vec![self.natural.clone()]
    }
    fn clear_local(&self) {
        self.memo.clear()
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

/// Solve ad(h₀; ψ) + a^♮ = 0.
pub fn solve_commutator_equation(a: &Sym, geo: &Geometry, m: f64) -> Arc<GaugePsi> {
    Arc::new(GaugePsi::new(a, geo, m, &format!("psi[{}]", a.name())))
}

/// Compositions of n into exactly j positive parts, lexicographic.
pub fn compositions(n: usize, j: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, j: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if j == 0 {
            if n == 0 {
                out.push(cur.clone());
            }
            return;
        }
        if n < j {
            return;
        }
        for first in 1..=n - (j - 1) {
            cur.push(first);
            rec(n - first, j - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if j > 0 {
        rec(n, j, &mut Vec::new(), &mut out);
    }
    out
}

fn factorial(j: usize) -> f64 {
    (1..=j).map(|i| i as f64).product()
}

pub struct GaugeSeries {
    pub depth: usize,
    pub geo: Geometry,
    pub class: SymbolClass,
    pub h0: Sym,
    pub b: Sym,
    /// ψ_1 … ψ_M
    pub psi: Vec<Arc<GaugePsi>>,
    /// B_1 … B_M
    pub b_levels: Vec<Sym>,
    /// T_2 … T_M at positions 1 … M−1; position 0 is None.
    pub t_levels: Vec<Option<Sym>>,
    /// B_l + T_l, the right-hand side of level l.
    pub sources: Vec<Sym>,
    pub x: Sym,
    pub psi_total: Sym,
}

/// Left-fold commutators with shared prefixes.
struct AdCache {
    base: Sym,
    map: HashMap<Vec<usize>, Sym>,
}

impl AdCache {
    fn new(base: Sym) -> AdCache {
        AdCache { base, map: HashMap::new() }
    }

    fn get(&mut self, ks: &[usize], psi: &[Arc<GaugePsi>]) -> Result<Sym> {
        if ks.is_empty() {
            return Ok(self.base.clone());
        }
        if let Some(s) = self.map.get(ks) {
            return Ok(s.clone());
        }
        let head = self.get(&ks[..ks.len() - 1], psi)?;
        let g: Sym = psi[ks[ks.len() - 1] - 1].clone();
        let s = commutator(&head, &g)?;
        self.map.insert(ks.to_vec(), s.clone());
        Ok(s)
    }
}

pub fn build_series(b: &Sym, geo: &Geometry, class: SymbolClass, depth: usize) -> Result<GaugeSeries> {
    if depth == 0 {
        return Err(Error::Invalid("gauge depth M must be at least 1".into()));
    }
    let m = class.m;
    let h0 = kinetic(&geo.lat, m);
    let mut bc = AdCache::new(b.clone());
    let mut hc = AdCache::new(h0.clone());
    let mut psi: Vec<Arc<GaugePsi>> = Vec::new();
    let mut b_levels: Vec<Sym> = Vec::new();
    let mut t_levels: Vec<Option<Sym>> = Vec::new();
    let mut sources: Vec<Sym> = Vec::new();
    for l in 1..=depth {
        let bl = if l == 1 {
            b.clone()
        } else {
            let mut terms = Vec::new();
            for j in 1..l {
                for ks in compositions(l - 1, j) {
                    terms.push((C64::new(1.0 / factorial(j), 0.0), bc.get(&ks, &psi)?));
                }
            }
            lincomb(terms)?
        };
        let tl = if l == 1 {
            None
        } else {
            let mut terms = Vec::new();
            for j in 2..=l {
                for ks in compositions(l, j) {
                    terms.push((C64::new(1.0 / factorial(j), 0.0), hc.get(&ks, &psi)?));
                }
            }
            Some(lincomb(terms)?)
        };
        let src = match &tl {
            None => bl.clone(),
            Some(t) => lincomb(vec![(C64::new(1.0, 0.0), bl.clone()), (C64::new(1.0, 0.0), t.clone())])?,
        };
        psi.push(Arc::new(GaugePsi::new(&src, geo, m, &format!("psi{l}"))));
        b_levels.push(bl);
        t_levels.push(tl);
        sources.push(src);
    }
    let mut xt: Vec<(C64, Sym)> = b_levels.iter().map(|s| (C64::new(1.0, 0.0), s.clone())).collect();
    xt.extend(t_levels.iter().flatten().map(|s| (C64::new(1.0, 0.0), s.clone())));
    let x = lincomb(xt)?;
    let psi_total = lincomb(psi.iter().map(|p| (C64::new(1.0, 0.0), p.clone() as Sym)).collect())?;
    Ok(GaugeSeries {
        depth,
        geo: geo.clone(),
        class,
        h0,
        b: b.clone(),
        psi,
        b_levels,
        t_levels,
        sources,
        x,
        psi_total,
    })
}

impl GaugeSeries {
    /// Perturbation part of A₁ without the remainder: X_M − X_M^♮.
    pub fn a1_perturbation(&self) -> Result<Sym> {
        let nat = part(&self.x, PartKind::Natural, &self.geo.theta, self.geo.bank);
        lincomb(vec![(C64::new(1.0, 0.0), self.x.clone()), (C64::new(-1.0, 0.0), nat)])
    }

    /// X_M^o, the x-independent part of the model A₀ = H₀ + X_M^o.
    pub fn x_o(&self) -> Sym {
        part(&self.x, PartKind::O, &self.geo.theta, self.geo.bank)
    }

    /// Relative residual |ad(h₀;ψ_l)^ + (B_l+T_l)^♮| / (|ad| + |src^♮|) at
    /// the given (θ index in Θ_r, ξ) pairs, max over pairs.
    pub fn level_residual(&self, l: usize, samples: &[(usize, Vecd)]) -> Result<f64> {
        let psi: Sym = self.psi[l - 1].clone();
        let ad = commutator(&self.h0, &psi)?;
        let nat = part(&self.sources[l - 1], PartKind::Natural, &self.geo.theta, self.geo.bank);
        let mut worst: f64 = 0.0;
        for (ti, xi) in samples {
            let t = &self.geo.theta.thetas[*ti];
            let a = ad.coeff(t, xi);
            let s = nat.coeff(t, xi);
            let den = a.norm() + s.norm();
            if den > 0.0 {
                worst = worst.max((a + s).norm() / den);
            }
        }
        if let Some(e) = self.psi[l - 1].take_fault() {
            return Err(e);
        }
        Ok(worst)
    }

    /// Non-certified remainder scale (⦀b⦀)^{M+1} ρ^{βε_{M+1}} with the
    /// implicit constant set to 1.
    pub fn remainder_bound(&self) -> RemainderBound {
        let p = &self.geo.params;
        let grid = norm_grid(self.geo.d(), p.rho, 12, 24);
        let nb = estimate_norm(self.b.as_ref(), 0, 0, self.class.alpha, self.class.beta, &grid).value;
        let eps = self.class.epsilon(self.depth + 1);
        RemainderBound {
            norm_b: nb,
            epsilon: eps,
            value: nb.powi(self.depth as i32 + 1) * p.rho.powf(self.class.beta * eps),
            certified: false,
        }
    }

    /// Sampled sup norms of ψ_1 … ψ_M with weight ⟨ξ⟩^0.
    pub fn psi_norms(&self, grid: &[Vecd]) -> Vec<f64> {
        self.psi
            .iter()
            .map(|p| estimate_norm(p.as_ref(), 0, 0, 0.0, self.class.beta, grid).value)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RemainderBound {
    pub norm_b: f64,
    pub epsilon: f64,
    pub value: f64,
    pub certified: bool,
}
