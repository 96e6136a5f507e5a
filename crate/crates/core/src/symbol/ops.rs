//! Products and commutators of symbols, evaluated lazily.

use super::{Coeffs, Memo, Support, Sym, Symbol};
use crate::error::{Error, Result};
use crate::geom::{iadd, IVec, Vecd};
use crate::lattice::Lattice;
use num_complex::Complex64 as C64;
use std::collections::HashMap;
use std::sync::Arc;

/// Support of θ+φ over both supports, plus the (ib, ig) → output index table.
fn sum_support(lat: &Lattice, b: &Support, g: &Support) -> (Support, Vec<usize>) {
    let mut thetas: Vec<IVec> = Vec::new();
    let mut seen: HashMap<IVec, usize> = HashMap::new();
    let mut table = Vec::with_capacity(b.len() * g.len());
    for tb in &b.thetas {
        for tg in &g.thetas {
            let s = iadd(tb, tg);
            let idx = *seen.entry(s).or_insert_with(|| {
                thetas.push(s);
                thetas.len() - 1
            });
            table.push(idx);
        }
    }
    (Support::new(lat, thetas), table)
}

fn check_same(b: &Sym, g: &Sym) -> Result<()> {
    if b.lattice().same_as(g.lattice()) {
        Ok(())
    } else {
        Err(Error::LatticeMismatch)
    }
}

#[inline]
fn nonzero(z: &C64) -> bool {
    z.re != 0.0 || z.im != 0.0
}

/// b ∘ g.
pub struct Product {
    b: Sym,
    g: Sym,
    support: Support,
    table: Vec<usize>,
    memo: Memo,
}

impl Symbol for Product {
    fn lattice(&self) -> &Lattice {
        self.b.lattice()
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn eval(&self, xi: &Vecd) -> Coeffs {
        self.memo.get_or(xi, || {
            let ng = self.g.support().len();
            let mut out = vec![C64::new(0.0, 0.0); self.support.len()];
            let gv = self.g.eval(xi);
            for (ig, phi) in self.g.support().vecs.iter().enumerate() {
                if !nonzero(&gv[ig]) {
                    continue;
                }
                let bv = self.b.eval(&(*xi + *phi));
                for (ib, bz) in bv.iter().enumerate() {
                    out[self.table[ib * ng + ig]] += *bz * gv[ig];
                }
            }
            let s = 1.0 / self.lattice().sqrt_det();
            out.iter_mut().for_each(|z| *z *= s);
            out.into()
        })
    }
    fn children(&self) -> Vec<Sym> {
        vec![self.b.clone(), self.g.clone()]
    }
    fn clear_local(&self) {
        self.memo.clear()
    }
    fn name(&self) -> String {
        format!("({})∘({})", self.b.name(), self.g.name())
    }
}

/// ad(b, g) = i(b∘g − g∘b).
pub struct Commutator {
    b: Sym,
    g: Sym,
    support: Support,
    table: Vec<usize>,
    memo: Memo,
}

impl Symbol for Commutator {
    fn lattice(&self) -> &Lattice {
        self.b.lattice()
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn eval(&self, xi: &Vecd) -> Coeffs {
        self.memo.get_or(xi, || {
            let ng = self.g.support().len();
            let mut out = vec![C64::new(0.0, 0.0); self.support.len()];
            let gv0 = self.g.eval(xi);
            let bv0 = self.b.eval(xi);
            for (ig, phi) in self.g.support().vecs.iter().enumerate() {
                if !nonzero(&gv0[ig]) {
                    continue;
                }
                let bv = self.b.eval(&(*xi + *phi));
                for (ib, bz) in bv.iter().enumerate() {
                    out[self.table[ib * ng + ig]] += *bz * gv0[ig];
                }
            }
            for (ib, th) in self.b.support().vecs.iter().enumerate() {
                if !nonzero(&bv0[ib]) {
                    continue;
                }
                let gv = self.g.eval(&(*xi + *th));
                for (ig, gz) in gv.iter().enumerate() {
                    out[self.table[ib * ng + ig]] -= bv0[ib] * *gz;
                }
            }
            let s = C64::new(0.0, 1.0 / self.lattice().sqrt_det());
            out.iter_mut().for_each(|z| *z *= s);
            out.into()
        })
    }
    fn children(&self) -> Vec<Sym> {
        vec![self.b.clone(), self.g.clone()]
    }
    fn clear_local(&self) {
        self.memo.clear()
    }
    fn name(&self) -> String {
        format!("ad({}, {})", self.b.name(), self.g.name())
    }
}

pub fn product(b: &Sym, g: &Sym) -> Result<Sym> {
    check_same(b, g)?;
    let (support, table) = sum_support(b.lattice(), b.support(), g.support());
    Ok(Arc::new(Product { b: b.clone(), g: g.clone(), support, table, memo: Memo::new(true) }))
}

pub fn commutator(b: &Sym, g: &Sym) -> Result<Sym> {
    check_same(b, g)?;
    let (support, table) = sum_support(b.lattice(), b.support(), g.support());
    Ok(Arc::new(Commutator { b: b.clone(), g: g.clone(), support, table, memo: Memo::new(true) }))
}

/// ad(b; g₁, …, g_N) = ad(ad(…ad(b, g₁)…), g_N); N = 0 returns b.
pub fn ad_fold(b: &Sym, gs: &[Sym]) -> Result<Sym> {
    let mut acc = b.clone();
    for g in gs {
        acc = commutator(&acc, g)?;
    }
    Ok(acc)
}
