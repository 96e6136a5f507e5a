//! Periodic symbols as finite Fourier families b̂(θ, ξ), θ ∈ Γ†.
//!
//! A symbol is a node in a DAG: leaves hold closed-form coefficients,
//! inner nodes (sums, products, commutators, cut-off parts, gauge
//! solutions) evaluate their children lazily. Every node returns all of its
//! coefficients at one ξ at once, in the order of its [`Support`].

pub mod cutoff;
pub mod decompose;
pub mod expr;
pub mod magnetic;
pub mod norm;
pub mod ops;

use crate::error::{Error, Result};
use crate::geom::{ineg, is_zero, IVec, Vecd, MAXD};
use crate::lattice::Lattice;
use dashmap::DashMap;
use num_complex::Complex64 as C64;
use std::collections::{HashMap, HashSet};
use std::sync::Arc;

pub use cutoff::{iota, CutoffBank};
pub use decompose::{decompose, Part, PartKind, SixParts};
pub use expr::Expr;
pub use ops::{ad_fold, commutator, product};

pub type Coeffs = Arc<[C64]>;
pub type Sym = Arc<dyn Symbol>;

/// The set of frequencies carried by a symbol, with a reverse index.
#[derive(Debug, Clone)]
pub struct Support {
    pub thetas: Vec<IVec>,
    pub vecs: Vec<Vecd>,
    index: HashMap<IVec, usize>,
}

impl Support {
    pub fn new(lat: &Lattice, thetas: Vec<IVec>) -> Support {
        let vecs = thetas.iter().map(|t| lat.dual_point(t)).collect();
        let index = thetas.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        Support { thetas, vecs, index }
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    #[inline]
    pub fn index_of(&self, t: &IVec) -> Option<usize> {
        self.index.get(t).copied()
    }
}

pub trait Symbol: Send + Sync {
    fn lattice(&self) -> &Lattice;
    fn support(&self) -> &Support;
    /// All coefficients b̂(θ, ξ) in support order.
    fn eval(&self, xi: &Vecd) -> Coeffs;
    fn children(&self) -> Vec<Sym> {
        Vec::new()
    }
    /// Drop this node's memo (children untouched).
    fn clear_local(&self) {}
    fn name(&self) -> String;

    fn coeff(&self, theta: &IVec, xi: &Vecd) -> C64 {
        match self.support().index_of(theta) {
            Some(i) => self.eval(xi)[i],
            None => C64::new(0.0, 0.0),
        }
    }
}

/// Clear memo tables of every node reachable from `root`.
pub fn clear_caches(root: &Sym) {
    let mut seen: HashSet<usize> = HashSet::new();
    let mut stack = vec![root.clone()];
    while let Some(s) = stack.pop() {
        let id = Arc::as_ptr(&s) as *const () as usize;
        if !seen.insert(id) {
            continue;
        }
        s.clear_local();
        stack.extend(s.children());
    }
}

/// Concurrent memo table keyed by ξ rounded to 1e-9.
#[derive(Default)]
pub struct Memo {
    map: DashMap<[i64; MAXD], Coeffs>,
    enabled: bool,
}

impl Memo {
    pub fn new(enabled: bool) -> Memo {
        Memo { map: DashMap::new(), enabled }
    }

    #[inline]
    pub fn get_or(&self, xi: &Vecd, f: impl FnOnce() -> Coeffs) -> Coeffs {
        if !self.enabled {
            return f();
        }
        let key = xi.key();
        if let Some(v) = self.map.get(&key) {
            return v.clone();
        }
        let v = f();
        self.map.insert(key, v.clone());
        v
    }

    pub fn clear(&self) {
        self.map.clear();
        self.map.shrink_to_fit();
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

// ============================================================================
// Leaves
// ============================================================================

/// Closed-form coefficient evaluators.
#[derive(Clone, Debug)]
pub enum Coeff {
    Const(C64),
    /// c0 + c·ξ
    Affine { c0: C64, c: [C64; MAXD] },
    Expr(Expr),
    /// scale · |ξ|^{2m}
    Kinetic { m: f64, scale: f64 },
    Sum(Vec<Coeff>),
}

impl Coeff {
    pub fn eval(&self, xi: &Vecd) -> C64 {
        match self {
            Coeff::Const(c) => *c,
            Coeff::Affine { c0, c } => {
                let mut s = *c0;
                for i in 0..MAXD {
                    s += c[i] * xi.0[i];
                }
                s
            }
            Coeff::Expr(e) => e.eval(xi),
            Coeff::Kinetic { m, scale } => C64::new(scale * h0(xi, *m), 0.0),
            Coeff::Sum(v) => v.iter().map(|c| c.eval(xi)).sum(),
        }
    }
}

/// h₀(ξ) = |ξ|^{2m}.
#[inline]
pub fn h0(xi: &Vecd, m: f64) -> f64 {
    let r2 = xi.norm2();
    if m == 1.0 {
        r2
    } else if m == 2.0 {
        r2 * r2
    } else {
        r2.powf(m)
    }
}

/// τ_θ(ξ) = h₀(ξ+θ) − h₀(ξ).
#[inline]
pub fn tau(m: f64, theta: &Vecd, xi: &Vecd) -> f64 {
    h0(&(*xi + *theta), m) - h0(xi, m)
}

pub struct ModeSymbol {
    lat: Lattice,
    support: Support,
    coeffs: Vec<Coeff>,
    name: String,
}

impl ModeSymbol {
    /// Modes with repeated θ are merged into a sum.
    pub fn new(lat: &Lattice, modes: Vec<(IVec, Coeff)>, name: &str) -> ModeSymbol {
        let mut thetas: Vec<IVec> = Vec::new();
        let mut coeffs: Vec<Coeff> = Vec::new();
        for (t, c) in modes {
            if let Some(i) = thetas.iter().position(|x| *x == t) {
                let prev = std::mem::replace(&mut coeffs[i], Coeff::Const(C64::new(0.0, 0.0)));
                coeffs[i] = match prev {
                    Coeff::Sum(mut v) => {
                        v.push(c);
                        Coeff::Sum(v)
                    }
                    other => Coeff::Sum(vec![other, c]),
                };
            } else {
                thetas.push(t);
                coeffs.push(c);
            }
        }
        ModeSymbol {
            support: Support::new(lat, thetas),
            lat: lat.clone(),
            coeffs,
            name: name.to_string(),
        }
    }

    pub fn coeff_fns(&self) -> &[Coeff] {
        &self.coeffs
    }
}

impl Symbol for ModeSymbol {
    fn lattice(&self) -> &Lattice {
        &self.lat
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn eval(&self, xi: &Vecd) -> Coeffs {
        self.coeffs.iter().map(|c| c.eval(xi)).collect()
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

/// The symbol with no modes.
pub fn zero_symbol(lat: &Lattice) -> Sym {
    Arc::new(ModeSymbol::new(lat, vec![], "0"))
}

/// h₀ as a symbol: θ = 0 coefficient √dc·|ξ|^{2m}.
pub fn kinetic(lat: &Lattice, m: f64) -> Sym {
    Arc::new(ModeSymbol::new(
        lat,
        vec![([0; MAXD], Coeff::Kinetic { m, scale: lat.sqrt_det() })],
        "h0",
    ))
}

// ============================================================================
// Linear combinations
// ============================================================================

pub struct LinComb {
    lat: Lattice,
    support: Support,
    terms: Vec<(C64, Sym, Vec<usize>)>,
    memo: Memo,
    name: String,
}

impl LinComb {
    pub fn new(terms: Vec<(C64, Sym)>, memo: bool) -> Result<LinComb> {
        let lat = terms
            .first()
            .map(|t| t.1.lattice().clone())
            .ok_or_else(|| Error::Invalid("empty linear combination".into()))?;
        for (_, s) in &terms {
            if !s.lattice().same_as(&lat) {
                return Err(Error::LatticeMismatch);
            }
        }
        let mut thetas: Vec<IVec> = Vec::new();
        let mut seen: HashMap<IVec, usize> = HashMap::new();
        let mut mapped = Vec::new();
        for (c, s) in terms {
            let map: Vec<usize> = s
                .support()
                .thetas
                .iter()
                .map(|t| {
                    *seen.entry(*t).or_insert_with(|| {
                        thetas.push(*t);
                        thetas.len() - 1
                    })
                })
                .collect();
            mapped.push((c, s, map));
        }
        let name = mapped
            .iter()
            .map(|(c, s, _)| format!("{}*{}", fmt_c(*c), s.name()))
            .collect::<Vec<_>>()
            .join(" + ");
        Ok(LinComb { support: Support::new(&lat, thetas), lat, terms: mapped, memo: Memo::new(memo), name })
    }
}

fn fmt_c(c: C64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else {
        format!("({}{:+}i)", c.re, c.im)
    }
}

impl Symbol for LinComb {
    fn lattice(&self) -> &Lattice {
        &self.lat
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn eval(&self, xi: &Vecd) -> Coeffs {
        self.memo.get_or(xi, || {
            let mut out = vec![C64::new(0.0, 0.0); self.support.len()];
            for (c, s, map) in &self.terms {
                let v = s.eval(xi);
                for (j, &o) in map.iter().enumerate() {
                    out[o] += *c * v[j];
                }
            }
            out.into()
        })
    }
    fn children(&self) -> Vec<Sym> {
        self.terms.iter().map(|t| t.1.clone()).collect()
    }
    fn clear_local(&self) {
        self.memo.clear()
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

/// Σ c_i s_i, memoized.
pub fn lincomb(terms: Vec<(C64, Sym)>) -> Result<Sym> {
    Ok(Arc::new(LinComb::new(terms, true)?))
}

/// Σ s_i with unit weights, memoized.
pub fn sum(terms: &[Sym]) -> Result<Sym> {
    lincomb(terms.iter().map(|s| (C64::new(1.0, 0.0), s.clone())).collect())
}

// ============================================================================
// Pointwise helpers
// ============================================================================

/// b(x, ξ) = dc^{-1/2} Σ_θ b̂(θ, ξ) e^{iθ·x}.
pub fn eval_symbol(s: &dyn Symbol, x: &Vecd, xi: &Vecd) -> C64 {
    let v = s.eval(xi);
    let sup = s.support();
    let mut acc = C64::new(0.0, 0.0);
    for (i, th) in sup.vecs.iter().enumerate() {
        acc += v[i] * C64::from_polar(1.0, th.dot(x));
    }
    acc / s.lattice().sqrt_det()
}

/// max |b̂(θ, ξ) − conj b̂(−θ, ξ+θ)| over the given ξ and all θ.
pub fn symmetry_residual(s: &dyn Symbol, xis: &[Vecd]) -> f64 {
    let sup = s.support();
    let mut worst: f64 = 0.0;
    for xi in xis {
        let v = s.eval(xi);
        for (i, t) in sup.thetas.iter().enumerate() {
            let shifted = *xi + sup.vecs[i];
            let mirror = s.coeff(&ineg(t), &shifted);
            worst = worst.max((v[i] - mirror.conj()).norm());
        }
    }
    worst
}

/// True if the support is closed under negation.
pub fn support_negation_paired(s: &dyn Symbol) -> bool {
    let sup = s.support();
    sup.thetas
        .iter()
        .all(|t| is_zero(t) || sup.index_of(&ineg(t)).is_some())
}
