//! Sampled symbol norms sup ⟨θ⟩^l w(ξ)^{-α+|s|} |D^s b̂(θ, ξ)|, w(ξ) = ⟨ξ⟩^β.
//!
//! These are sampled estimates, never certified bounds.

use super::Symbol;
use crate::geom::Vecd;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormEstimate {
    pub l: i32,
    pub s: usize,
    pub value: f64,
}

/// Logarithmic radii in [1, 4ρ] times uniform directions.
pub fn norm_grid(d: usize, rho: f64, n_radial: usize, n_dir: usize) -> Vec<Vecd> {
    let dirs = directions(d, n_dir);
    let hi = (4.0 * rho).max(1.0);
    let mut out = Vec::with_capacity(n_radial * dirs.len());
    for i in 0..n_radial {
        let t = if n_radial == 1 { 1.0 } else { i as f64 / (n_radial - 1) as f64 };
        let r = hi.powf(t);
        for u in &dirs {
            out.push(u.scale(r));
        }
    }
    out
}

/// Deterministic, roughly uniform unit vectors (circle or Fibonacci sphere).
pub fn directions(d: usize, n: usize) -> Vec<Vecd> {
    let n = n.max(1);
    match d {
        1 => vec![Vecd::unit(0), Vecd::unit(0).scale(-1.0)],
        2 => (0..n)
            .map(|i| {
                let a = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                Vecd::from_slice(&[a.cos(), a.sin()])
            })
            .collect(),
        _ => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let rr = (1.0 - z * z).sqrt();
                    let a = golden * i as f64;
                    let mut v = Vecd::from_slice(&[rr * a.cos(), rr * a.sin(), z]);
                    if d == 4 {
                        v = Vecd::from_slice(&[v.0[0], v.0[1], v.0[2], 0.0]);
                    }
                    v
                })
                .collect()
        }
    }
}

/// Central-difference partial derivatives of every coefficient; `idx` lists
/// the differentiated coordinates (order = idx.len() ≤ 2).
fn derivative(sym: &dyn Symbol, xi: &Vecd, idx: &[usize]) -> Vec<f64> {
    let h = 1e-5 * xi.norm().max(1.0);
    match idx {
        [] => sym.eval(xi).iter().map(|z| z.norm()).collect(),
        [i] => {
            let e = Vecd::unit(*i).scale(h);
            let p = sym.eval(&(*xi + e));
            let m = sym.eval(&(*xi - e));
            p.iter().zip(m.iter()).map(|(a, b)| ((a - b) / (2.0 * h)).norm()).collect()
        }
        [i, j] => {
            let ei = Vecd::unit(*i).scale(h);
            let ej = Vecd::unit(*j).scale(h);
            let pp = sym.eval(&(*xi + ei + ej));
            let pm = sym.eval(&(*xi + ei - ej));
            let mp = sym.eval(&(*xi - ei + ej));
            let mm = sym.eval(&(*xi - ei - ej));
            (0..pp.len())
                .map(|k| ((pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * h * h)).norm())
                .collect()
        }
        _ => panic!("derivative order above 2 is not supported"),
    }
}

/// Sampled norm for derivative order `s` (max over multi-indices with |s| = s).
pub fn estimate_norm(
    sym: &dyn Symbol,
    l: i32,
    s: usize,
    alpha: f64,
    beta: f64,
    grid: &[Vecd],
) -> NormEstimate {
    assert!(s <= 2, "derivative order above 2 is not supported");
    let d = sym.lattice().d;
    let mut multi: Vec<Vec<usize>> = Vec::new();
    match s {
        0 => multi.push(vec![]),
        1 => (0..d).for_each(|i| multi.push(vec![i])),
        _ => (0..d).for_each(|i| (i..d).for_each(|j| multi.push(vec![i, j]))),
    }
    let weights: Vec<f64> = sym
        .support()
        .vecs
        .iter()
        .map(|t| (1.0 + t.norm2()).sqrt().powi(l))
        .collect();
    let mut value: f64 = 0.0;
    for xi in grid {
        let w = (1.0 + xi.norm2()).powf(0.5 * beta);
        let wf = w.powf(-alpha + s as f64);
        for idx in &multi {
            for (k, v) in derivative(sym, xi, idx).iter().enumerate() {
                value = value.max(weights[k] * wf * v);
            }
        }
    }
    NormEstimate { l, s, value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ivec;
    use crate::lattice::Lattice;
    use crate::symbol::{Coeff, ModeSymbol};
    use num_complex::Complex64 as C64;

    #[test]
    fn constant_and_weighted_single_mode() {
        let lat = Lattice::square(2);
        let grid = norm_grid(2, 10.0, 5, 8);
        let one = ModeSymbol::new(&lat, vec![(ivec(&[0, 0]), Coeff::Const(C64::new(1.0, 0.0)))], "1");
        assert!((estimate_norm(&one, 3, 0, 0.0, 1.0, &grid).value - 1.0).abs() < 1e-15);
        let m = ModeSymbol::new(&lat, vec![(ivec(&[1, 0]), Coeff::Const(C64::new(1.0, 0.0)))], "e1");
        assert!((estimate_norm(&m, 2, 0, 0.0, 1.0, &grid).value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn grid_union_is_monotone() {
        let lat = Lattice::square(2);
        let s = ModeSymbol::new(
            &lat,
            vec![(ivec(&[1, 0]), Coeff::Expr(crate::symbol::Expr::parse("xi1*xi2 + 1", 2).unwrap()))],
            "p",
        );
        let g1 = norm_grid(2, 10.0, 6, 12);
        let mut g2 = g1.clone();
        g2.extend(norm_grid(2, 10.0, 9, 17));
        for s_ord in 0..=2 {
            let a = estimate_norm(&s, 0, s_ord, 1.0, 1.0, &g1).value;
            let b = estimate_norm(&s, 0, s_ord, 1.0, 1.0, &g2).value;
            assert!(b >= a);
        }
    }
}
