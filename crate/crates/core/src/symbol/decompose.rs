//! The six-part cut-off decomposition b = b^o + b^↓ + b^♭ + b^♮ + b^♯ + b^↑.

use super::{Coeffs, CutoffBank, Support, Sym, Symbol};
use crate::geom::{is_zero, Vecd};
use crate::lattice::{FrequencySet, Lattice, LatticeSubspace};
use num_complex::Complex64 as C64;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub enum PartKind {
    /// θ ∉ Θ_r⁰
    Up,
    /// θ ∈ Θ_r, factor ℓ^>_θ
    Sharp,
    /// θ ∈ Θ_r, factor φ_θ e_θ
    Natural,
    /// θ ∈ Θ_r, factor ζ_θ e_θ
    Flat,
    /// θ ∈ Θ_r ∩ V, factor ζ_θ e_θ
    FlatV(LatticeSubspace),
    /// θ ∈ Θ_r, factor ℓ^<_θ
    Down,
    /// θ = 0
    O,
}

impl PartKind {
    fn label(&self) -> &'static str {
        match self {
            PartKind::Up => "up",
            PartKind::Sharp => "sharp",
            PartKind::Natural => "natural",
            PartKind::Flat => "flat",
            PartKind::FlatV(_) => "flatV",
            PartKind::Down => "down",
            PartKind::O => "o",
        }
    }
}

/// One cut-off part of a source symbol.
pub struct Part {
    src: Sym,
    kind: PartKind,
    bank: CutoffBank,
    support: Support,
    /// output index → source index
    map: Vec<usize>,
}

impl Part {
    pub fn new(src: &Sym, kind: PartKind, theta: &FrequencySet, bank: CutoffBank) -> Part {
        let lat = src.lattice();
        let sup = src.support();
        let mut thetas = Vec::new();
        let mut map = Vec::new();
        for (i, t) in sup.thetas.iter().enumerate() {
            let zero = is_zero(t);
            let in_r = !zero && theta.contains(t);
            let keep = match &kind {
                PartKind::Up => !zero && !in_r,
                PartKind::O => zero,
                PartKind::FlatV(v) => in_r && v.contains(&sup.vecs[i]),
                _ => in_r,
            };
            if keep {
                thetas.push(*t);
                map.push(i);
            }
        }
        Part { src: src.clone(), kind, bank, support: Support::new(lat, thetas), map }
    }

    pub fn kind(&self) -> &PartKind {
        &self.kind
    }

    #[inline]
    fn factor(&self, th: &Vecd, xi: &Vecd) -> f64 {
        let b = &self.bank;
        match self.kind {
            PartKind::Up | PartKind::O => 1.0,
            PartKind::Sharp => b.ell_gt(th, xi),
            PartKind::Natural => {
                let e = b.e(th, xi);
                if e == 0.0 {
                    0.0
                } else {
                    b.phi(th, xi) * e
                }
            }
            PartKind::Flat | PartKind::FlatV(_) => {
                let e = b.e(th, xi);
                if e == 0.0 {
                    0.0
                } else {
                    b.zeta(th, xi) * e
                }
            }
            PartKind::Down => b.ell_lt(th, xi),
        }
    }
}

impl Symbol for Part {
    fn lattice(&self) -> &Lattice {
        self.src.lattice()
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn eval(&self, xi: &Vecd) -> Coeffs {
        let mut out = vec![C64::new(0.0, 0.0); self.support.len()];
        if out.is_empty() {
            return out.into();
        }
        // Skip the source evaluation when every factor vanishes.
        let factors: Vec<f64> = self.support.vecs.iter().map(|th| self.factor(th, xi)).collect();
        if factors.iter().all(|f| *f == 0.0) {
            return out.into();
        }
        let sv = self.src.eval(xi);
        for (o, (&i, f)) in self.map.iter().zip(&factors).enumerate() {
            if *f != 0.0 {
                out[o] = sv[i] * *f;
            }
        }
        out.into()
    }
    fn children(&self) -> Vec<Sym> {
        vec![self.src.clone()]
    }
    fn name(&self) -> String {
        format!("{}^{}", self.src.name(), self.kind.label())
    }
}

pub fn part(src: &Sym, kind: PartKind, theta: &FrequencySet, bank: CutoffBank) -> Sym {
    Arc::new(Part::new(src, kind, theta, bank))
}

pub struct SixParts {
    pub up: Sym,
    pub sharp: Sym,
    pub natural: Sym,
    pub flat: Sym,
    pub down: Sym,
    pub o: Sym,
}

impl SixParts {
    pub fn all(&self) -> [&Sym; 6] {
        [&self.up, &self.sharp, &self.natural, &self.flat, &self.down, &self.o]
    }
}

/// `theta` is Θ_r (without 0); r and the bank come from the resonance parameters.
pub fn decompose(src: &Sym, theta: &FrequencySet, bank: CutoffBank) -> SixParts {
    let p = |k| part(src, k, theta, bank);
    SixParts {
        up: p(PartKind::Up),
        sharp: p(PartKind::Sharp),
        natural: p(PartKind::Natural),
        flat: p(PartKind::Flat),
        down: p(PartKind::Down),
        o: p(PartKind::O),
    }
}
