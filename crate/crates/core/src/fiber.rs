//! Truncated Floquet fiber matrices
//! H_{mn}(k) = h₀(n+k)δ_{mn} + dc^{-1/2} Σ_s ŝ(m−n, n+k).

use crate::error::{Error, Result};
use crate::geom::{iadd, IVec, Vecd};
use crate::lattice::Lattice;
use crate::linalg::{eigvalsh, from_faer, to_faer, CMat};
use crate::symbol::{h0, Sym};
use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

/// Largest dimension handed to the dense eigensolver.
pub const DENSE_CAP: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Truncation {
    /// |m + k| ≤ cutoff
    Ball(f64),
    /// r_in ≤ |m + k| ≤ r_out; eigenvalue j of the block is treated as global
    /// index inner_count + j.
    Annulus { r_in: f64, r_out: f64 },
}

impl Truncation {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Truncation::Ball(c) => (0.0, c),
            Truncation::Annulus { r_in, r_out } => (r_in, r_out),
        }
    }

    pub fn scaled(&self, f: f64) -> Truncation {
        match *self {
            Truncation::Ball(c) => Truncation::Ball(c * f),
            Truncation::Annulus { r_in, r_out } => {
                let mid = 0.5 * (r_in + r_out);
                let half = 0.5 * (r_out - r_in) * f;
                Truncation::Annulus { r_in: (mid - half).max(0.0), r_out: mid + half }
            }
        }
    }
}

/// What the fiber is built from: h₀ of order m (if any) plus symbols.
#[derive(Clone)]
pub struct OperatorSpec {
    pub m: Option<f64>,
    pub symbols: Vec<Sym>,
}

impl OperatorSpec {
    pub fn new(m: Option<f64>, symbols: Vec<Sym>) -> OperatorSpec {
        OperatorSpec { m, symbols }
    }
}

#[derive(Clone, Debug)]
pub struct FiberMatrix {
    pub k: Vecd,
    /// Sorted by (|m + k|, lexicographic).
    pub index: Vec<IVec>,
    /// m + k for each index entry.
    pub points: Vec<Vecd>,
    pub inner_count: usize,
    pub diag: Vec<C64>,
    /// Off-diagonal (row, col, value), one per pair, possibly repeated.
    pub off: Vec<(usize, usize, C64)>,
}

impl FiberMatrix {
    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn is_diagonal(&self) -> bool {
        self.off.iter().all(|e| e.2.norm() == 0.0)
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.dim();
        let mut a = Mat::<faer::c64>::zeros(n, n);
        for (i, d) in self.diag.iter().enumerate() {
            a[(i, i)] = to_faer(*d);
        }
        for &(i, j, v) in &self.off {
            a[(i, j)] += to_faer(v);
        }
        a
    }

    /// max |H_{ij} − conj H_{ji}|.
    pub fn hermitian_residual(&self) -> f64 {
        let mut acc: HashMap<(usize, usize), C64> = HashMap::new();
        for &(i, j, v) in &self.off {
            *acc.entry((i, j)).or_default() += v;
        }
        let mut r: f64 = self.diag.iter().map(|d| d.im.abs()).fold(0.0, f64::max);
        for (&(i, j), v) in &acc {
            let w = acc.get(&(j, i)).copied().unwrap_or_default();
            r = r.max((*v - w.conj()).norm());
        }
        r
    }

    /// Ascending eigenvalues; diagonal matrices skip the dense solver and its cap.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if self.is_diagonal() {
            let mut ev: Vec<f64> = self.diag.iter().map(|d| d.re).collect();
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            return Ok(ev);
        }
        if self.dim() > DENSE_CAP {
            return Err(Error::SizeCap { dim: self.dim(), cap: DENSE_CAP });
        }
        eigvalsh(&self.to_dense())
    }

    /// Y = H X for dense X.
    pub fn apply(&self, x: &CMat) -> CMat {
        let n = self.dim();
        let mut y = Mat::<faer::c64>::zeros(n, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..n {
                y[(i, c)] = to_faer(self.diag[i] * from_faer(x[(i, c)]));
            }
            for &(i, j, v) in &self.off {
                let add = v * from_faer(x[(j, c)]);
                y[(i, c)] += to_faer(add);
            }
        }
        y
    }

    /// Row-sum bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        let mut rows: Vec<f64> = self.diag.iter().map(|d| d.norm()).collect();
        for &(i, _, v) in &self.off {
            rows[i] += v.norm();
        }
        rows.into_iter().fold(0.0, f64::max)
    }
}

/// Canonical index set for quasi-momentum k.
pub fn index_set(lat: &Lattice, k: &Vecd, trunc: Truncation) -> (Vec<IVec>, Vec<Vecd>, usize) {
    let (r_in, r_out) = trunc.bounds();
    let mut pts: Vec<(IVec, Vecd)> = lat
        .dual_points_in_shell(k, r_in, r_out)
        .into_iter()
        .map(|n| (n, lat.dual_point(&n) + *k))
        .collect();
    pts.sort_by(|a, b| crate::resonance::label_order(&a.1, &b.1));
    let inner = lat.count_inside(k, r_in);
    (pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect(), inner)
}

pub fn build_fiber(lat: &Lattice, op: &OperatorSpec, k: &Vecd, trunc: Truncation) -> Result<FiberMatrix> {
    for s in &op.symbols {
        if !s.lattice().same_as(lat) {
            return Err(Error::LatticeMismatch);
        }
    }
    let (index, points, inner_count) = index_set(lat, k, trunc);
    let pos: HashMap<IVec, usize> = index.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let scale = 1.0 / lat.sqrt_det();
    let cols: Vec<(C64, Vec<(usize, usize, C64)>)> = points
        .par_iter()
        .enumerate()
        .map(|(j, p)| {
            let mut d = C64::new(op.m.map(|m| h0(p, m)).unwrap_or(0.0), 0.0);
            let mut off = Vec::new();
            for s in &op.symbols {
                let v = s.eval(p);
                for (t, z) in s.support().thetas.iter().zip(v.iter()) {
                    if z.re == 0.0 && z.im == 0.0 {
                        continue;
                    }
                    if t.iter().all(|&c| c == 0) {
                        d += *z * scale;
                    } else if let Some(&i) = pos.get(&iadd(&index[j], t)) {
                        off.push((i, j, *z * scale));
                    }
                }
            }
            (d, off)
        })
        .collect();
    let mut diag = Vec::with_capacity(cols.len());
    let mut off = Vec::new();
    for (d, o) in cols {
        diag.push(d);
        off.extend(o);
    }
    Ok(FiberMatrix { k: *k, index, points, inner_count, diag, off })
}

/// N(λ) = #{j : λ_j ≤ λ} on ascending eigenvalues, plus the inner offset.
pub fn counting(eigs: &[f64], inner_count: usize, lambda: f64) -> usize {
    inner_count + eigs.partition_point(|&e| e <= lambda)
}

/// Uniform grid k = Σ (i_j / n) b_j over the dual cell.
pub fn k_grid(lat: &Lattice, n: usize) -> Vec<Vecd> {
    let d = lat.d;
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            let mut k = Vecd::ZERO;
            for j in 0..d {
                let i = idx % n;
                idx /= n;
                k += lat.dual_basis[j] * (i as f64 / n as f64);
            }
            k
        })
        .collect()
}

/// U = exp(iΨ) by Taylor series with scaling and squaring.
pub fn expm_i(psi: &FiberMatrix) -> CMat {
    let n = psi.dim();
    let nb = psi.norm_bound();
    let s = if nb > 0.5 { (nb / 0.5).log2().ceil() as i32 } else { 0 };
    let f = C64::new(0.0, 1.0) / 2f64.powi(s);
    let scaled = FiberMatrix {
        k: psi.k,
        index: psi.index.clone(),
        points: vec![],
        inner_count: 0,
        diag: psi.diag.iter().map(|d| *d * f).collect(),
        off: psi.off.iter().map(|&(i, j, v)| (i, j, v * f)).collect(),
    };
    let mut u = Mat::<faer::c64>::identity(n, n);
    let mut term = Mat::<faer::c64>::identity(n, n);
    let tnorm = nb / 2f64.powi(s);
    let mut bound = 1.0;
    for k in 1..60 {
        term = scaled.apply(&term);
        scale_in_place(&mut term, 1.0 / k as f64);
        u += &term;
        bound *= tnorm / k as f64;
        if bound < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        u = &u * &u;
    }
    u
}

fn scale_in_place(m: &mut CMat, f: f64) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            m[(i, j)] *= f;
        }
    }
}

/// max |(U*U − I)_{ij}| over a sample of columns.
pub fn unitarity_defect(u: &CMat, n_cols: usize) -> f64 {
    let n = u.ncols();
    let step = (n / n_cols.max(1)).max(1);
    let mut worst: f64 = 0.0;
    for c in (0..n).step_by(step) {
        for i in 0..n {
            let mut s = C64::new(0.0, 0.0);
            for r in 0..n {
                s += from_faer(u[(r, i)]).conj() * from_faer(u[(r, c)]);
            }
            if i == c {
                s -= 1.0;
            }
            worst = worst.max(s.norm());
        }
    }
    worst
}

pub struct Conjugated {
    pub matrix: CMat,
    pub unitarity_defect: f64,
}

/// U* H U with U = exp(iΨ); both fibers must share the index set.
pub fn conjugate_fiber(h: &FiberMatrix, psi: &FiberMatrix) -> Result<Conjugated> {
    if h.index != psi.index {
        return Err(Error::Invalid("fiber index sets differ".into()));
    }
    let scale_h = 1e-12 * h.norm_bound().max(1.0);
    let rh = h.hermitian_residual();
    if rh > scale_h {
        return Err(Error::NonHermitian(rh));
    }
    let rp = psi.hermitian_residual();
    if rp > 1e-12 * psi.norm_bound().max(1.0) {
        return Err(Error::NonHermitian(rp));
    }
    let u = expm_i(psi);
    let defect = unitarity_defect(&u, 16);
    let hu = h.apply(&u);
    let matrix = u.adjoint() * &hu;
    Ok(Conjugated { matrix, unitarity_defect: defect })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_fiber_small() {
        let lat = Lattice::square(2);
        let op = OperatorSpec::new(Some(1.0), vec![]);
        let f = build_fiber(&lat, &op, &Vecd::ZERO, Truncation::Ball(2.0)).unwrap();
        let ev = f.eigenvalues().unwrap();
        let want: Vec<f64> = vec![0.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 4.0, 4.0, 4.0, 4.0];
        assert_eq!(ev, want);
        let f = build_fiber(&lat, &op, &Vecd::ZERO, Truncation::Ball(2f64.sqrt())).unwrap();
        assert_eq!(f.eigenvalues().unwrap(), want[..9].to_vec());
        assert_eq!(counting(&ev, 0, 2.0), 9);
        assert_eq!(counting(&ev, 0, 1.5), 5);
        assert_eq!(counting(&ev, 0, -1.0), 0);
    }
}
