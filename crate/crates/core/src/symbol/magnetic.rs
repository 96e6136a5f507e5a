//! Symbol of (−i∇ − a)² + V minus |ξ|²: b = −2a·ξ + i∇·a + |a|² + V.
//!
//! Real fields are given by cosine/sine amplitudes per frequency:
//! a(x) = Σ A_cos cos(θ·x) + A_sin sin(θ·x), likewise V with scalars.

use super::{Coeff, ModeSymbol};
use crate::error::{Error, Result};
use crate::geom::{iadd, ineg, is_zero, IVec, MAXD};
use crate::lattice::Lattice;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A real Fourier mode: `cos`/`sin` hold d amplitudes for the vector
/// potential or a single amplitude for the scalar potential.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RealMode {
    pub theta: Vec<i32>,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

type CVec = [C64; MAXD];

fn theta_of(m: &RealMode, d: usize) -> Result<IVec> {
    if m.theta.len() != d {
        return Err(Error::Config(format!("mode theta {:?} must have {d} entries", m.theta)));
    }
    Ok(crate::geom::ivec(&m.theta))
}

fn amp(v: &[f64], i: usize, width: usize, what: &str) -> Result<f64> {
    match v.len() {
        0 => Ok(0.0),
        n if n == width => Ok(v[i]),
        n => Err(Error::Config(format!("{what} amplitude has {n} entries, expected {width}"))),
    }
}

/// Complex Fourier coefficients c(θ) with f(x) = Σ c(θ) e^{iθ·x}, width components.
fn complex_coeffs(modes: &[RealMode], d: usize, width: usize, what: &str) -> Result<BTreeMap<IVec, CVec>> {
    let zero = [C64::new(0.0, 0.0); MAXD];
    let mut out: BTreeMap<IVec, CVec> = BTreeMap::new();
    for m in modes {
        let t = theta_of(m, d)?;
        for i in 0..width {
            let c = amp(&m.cos, i, width, what)?;
            let s = amp(&m.sin, i, width, what)?;
            if is_zero(&t) {
                if s != 0.0 {
                    return Err(Error::Config(format!("{what}: sine amplitude at theta = 0 is meaningless")));
                }
                out.entry(t).or_insert(zero)[i] += C64::new(c, 0.0);
            } else {
                // cos = (e + ē)/2, sin = (e − ē)/(2i)
                out.entry(t).or_insert(zero)[i] += C64::new(0.5 * c, -0.5 * s);
                out.entry(ineg(&t)).or_insert(zero)[i] += C64::new(0.5 * c, 0.5 * s);
            }
        }
    }
    Ok(out)
}

/// Builds b̂(θ, ξ) = √dc [−2c(θ)·ξ − θ·c(θ) + Σ_{θ₁+θ₂=θ} c(θ₁)·c(θ₂) + v(θ)].
pub fn magnetic_schrodinger(lat: &Lattice, a_modes: &[RealMode], v_modes: &[RealMode]) -> Result<ModeSymbol> {
    let d = lat.d;
    let a = complex_coeffs(a_modes, d, d, "vector potential")?;
    let v = complex_coeffs(v_modes, d, 1, "scalar potential")?;
    let zero = C64::new(0.0, 0.0);
    let mut c0: BTreeMap<IVec, C64> = BTreeMap::new();
    let mut lin: BTreeMap<IVec, CVec> = BTreeMap::new();
    for (t, c) in &a {
        let th = lat.dual_point(t);
        let div: C64 = (0..d).map(|i| c[i] * th.0[i]).sum();
        *c0.entry(*t).or_insert(zero) -= div;
        let e = lin.entry(*t).or_insert([zero; MAXD]);
        for i in 0..d {
            e[i] += -2.0 * c[i];
        }
    }
    for (t1, c1) in &a {
        for (t2, c2) in &a {
            let dot: C64 = (0..d).map(|i| c1[i] * c2[i]).sum();
            *c0.entry(iadd(t1, t2)).or_insert(zero) += dot;
        }
    }
    for (t, c) in &v {
        *c0.entry(*t).or_insert(zero) += c[0];
    }
    let sq = lat.sqrt_det();
    let mut keys: Vec<IVec> = c0.keys().chain(lin.keys()).copied().collect();
    keys.sort();
    keys.dedup();
    let modes = keys
        .into_iter()
        .map(|t| {
            let k0 = c0.get(&t).copied().unwrap_or(zero) * sq;
            let mut kc = lin.get(&t).copied().unwrap_or([zero; MAXD]);
            kc.iter_mut().for_each(|z| *z *= sq);
            (t, Coeff::Affine { c0: k0, c: kc })
        })
        .collect();
    Ok(ModeSymbol::new(lat, modes, "magnetic"))
}
