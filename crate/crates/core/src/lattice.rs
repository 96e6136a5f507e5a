//! Lattices, dual lattices, frequency balls and lattice subspaces.

use crate::error::{Error, Result};
use crate::geom::{ineg, IVec, Vecd, MAXD};
use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::PI;

/// A full-rank lattice Γ ⊂ R^d with its dual Γ†.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub d: usize,
    /// Columns generate Γ.
    pub basis: Vec<Vecd>,
    /// Columns generate Γ†; `basis[i]·dual_basis[j] = 2π δ_ij`.
    pub dual_basis: Vec<Vecd>,
    /// |det basis|, the volume of the fundamental domain.
    pub det: f64,
    // rows of basis^{-1} and dual_basis^{-1}, used for coordinates and box bounds
    basis_inv_rows: Vec<Vecd>,
    dual_inv_rows: Vec<Vecd>,
}

fn to_matrix(cols: &[Vecd], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| cols[j].0[i])
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vecd> {
    (0..m.nrows())
        .map(|i| Vecd::from_slice(&m.row(i).iter().copied().collect::<Vec<_>>()))
        .collect()
}

fn cols_of(m: &DMatrix<f64>) -> Vec<Vecd> {
    (0..m.ncols())
        .map(|j| Vecd::from_slice(m.column(j).as_slice()))
        .collect()
}

impl Lattice {
    /// Build from generator rows as they appear in a config: row `i` is the
    /// `i`-th basis vector.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Lattice> {
        let d = rows.len();
        if d == 0 || d > MAXD || rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidLattice(format!(
                "basis must be d x d with 1 <= d <= {MAXD}"
            )));
        }
        let cols: Vec<Vecd> = rows.iter().map(|r| Vecd::from_slice(r)).collect();
        Lattice::new(&cols)
    }

    /// Build from basis columns.
    pub fn new(cols: &[Vecd]) -> Result<Lattice> {
        let d = cols.len();
        if d == 0 || d > MAXD {
            return Err(Error::InvalidLattice(format!("dimension {d} unsupported")));
        }
        let b = to_matrix(cols, d);
        let det = b.determinant();
        let scale = cols.iter().map(|c| c.norm()).product::<f64>();
        if !det.is_finite() || det.abs() <= 1e-12 * scale.max(1e-300) {
            return Err(Error::InvalidLattice("singular basis".into()));
        }
        let binv = b
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidLattice("singular basis".into()))?;
        // basis^T dual = 2π I  =>  dual = 2π basis^{-T}
        let dual = binv.transpose() * (2.0 * PI);
        let dinv = b.transpose() / (2.0 * PI);
        Ok(Lattice {
            d,
            basis: cols.to_vec(),
            dual_basis: cols_of(&dual),
            det: det.abs(),
            basis_inv_rows: rows_of(&binv),
            dual_inv_rows: rows_of(&dinv),
        })
    }

    /// Γ = (2πZ)^d, so that Γ† = Z^d.
    pub fn square(d: usize) -> Lattice {
        let cols: Vec<Vecd> = (0..d).map(|i| Vecd::unit(i) * (2.0 * PI)).collect();
        Lattice::new(&cols).expect("square lattice is nonsingular")
    }

    /// The lattice generated by the dual basis.
    pub fn dual(&self) -> Lattice {
        Lattice::new(&self.dual_basis).expect("dual of a lattice is nonsingular")
    }

    pub fn sqrt_det(&self) -> f64 {
        self.det.sqrt()
    }

    /// Cartesian coordinates of the dual lattice point with integer coordinates `n`.
    #[inline]
    pub fn dual_point(&self, n: &IVec) -> Vecd {
        let mut v = Vecd::ZERO;
        for (i, c) in self.dual_basis.iter().enumerate() {
            if n[i] != 0 {
                v += *c * n[i] as f64;
            }
        }
        v
    }

    /// Cartesian coordinates of the primal lattice point with integer coordinates `n`.
    pub fn primal_point(&self, n: &IVec) -> Vecd {
        let mut v = Vecd::ZERO;
        for (i, c) in self.basis.iter().enumerate() {
            v += *c * n[i] as f64;
        }
        v
    }

    /// Real coordinates of `xi` in the dual basis.
    pub fn dual_coords(&self, xi: &Vecd) -> [f64; MAXD] {
        let mut c = [0.0; MAXD];
        for (i, r) in self.dual_inv_rows.iter().enumerate() {
            c[i] = r.dot(xi);
        }
        c
    }

    /// Integer and fractional parts: `xi = [xi] + {xi}` with `{xi}` in the
    /// half-open cell spanned by the dual basis and anchored at 0.
    pub fn split_momentum(&self, xi: &Vecd) -> (IVec, Vecd) {
        let c = self.dual_coords(xi);
        let mut n = [0i32; MAXD];
        for i in 0..self.d {
            let mut f = c[i].floor();
            // guard against c = 1 - tiny rounding into the closed end
            if c[i] - f >= 1.0 {
                f += 1.0;
            }
            n[i] = f as i32;
        }
        let frac = *xi - self.dual_point(&n);
        (n, frac)
    }

    /// Sum of dual basis lengths, an upper bound for the dual cell diameter.
    pub fn dual_cell_diameter(&self) -> f64 {
        self.dual_basis.iter().map(|c| c.norm()).sum()
    }

    /// `min_m |eta - m|` over dual lattice points m.
    pub fn torus_distance(&self, eta: &Vecd) -> f64 {
        let (_, frac) = self.split_momentum(eta);
        let reach = frac.norm() + self.dual_cell_diameter();
        let mut best = frac.norm();
        for n in self.dual_points_in_shell(&frac.scale(-1.0), 0.0, reach) {
            let v = frac - self.dual_point(&n);
            best = best.min(v.norm());
        }
        best
    }

    /// Dual lattice points m (integer coordinates) with
    /// `r_in <= |m + k| <= r_out`.
    pub fn dual_points_in_shell(&self, k: &Vecd, r_in: f64, r_out: f64) -> Vec<IVec> {
        points_in_shell(self.d, &self.dual_basis, &self.dual_inv_rows, k, r_in, r_out)
    }

    /// Primal lattice points g with `|g| <= r`.
    pub fn primal_points_in_ball(&self, r: f64) -> Vec<IVec> {
        points_in_shell(self.d, &self.basis, &self.basis_inv_rows, &Vecd::ZERO, 0.0, r)
    }

    /// Number of dual lattice points m with `|m + k| < r`.
    pub fn count_inside(&self, k: &Vecd, r: f64) -> usize {
        if r <= 0.0 {
            return 0;
        }
        self.dual_points_in_shell(k, 0.0, r)
            .into_iter()
            .filter(|n| (self.dual_point(n) + *k).norm() < r)
            .count()
    }

    pub fn same_as(&self, o: &Lattice) -> bool {
        self.d == o.d
            && self
                .basis
                .iter()
                .zip(&o.basis)
                .all(|(a, b)| (*a - *b).norm() <= 1e-12 * (1.0 + a.norm()))
    }
}

/// Enumerate integer vectors n with `r_in <= |B n + k| <= r_out`. The box
/// bound uses `|c_i| <= |row_i(B^{-1})| * |x|`.
fn points_in_shell(
    d: usize,
    cols: &[Vecd],
    inv_rows: &[Vecd],
    k: &Vecd,
    r_in: f64,
    r_out: f64,
) -> Vec<IVec> {
    let mut lo = [0i64; MAXD];
    let mut hi = [0i64; MAXD];
    for i in 0..d {
        let center = -inv_rows[i].dot(k);
        let half = inv_rows[i].norm() * r_out;
        lo[i] = (center - half).floor() as i64;
        hi[i] = (center + half).ceil() as i64;
    }
    let mut out = Vec::new();
    let mut n = [0i64; MAXD];
    n[..d].copy_from_slice(&lo[..d]);
    let (rin2, rout2) = (r_in * r_in, r_out * r_out);
    loop {
        let mut v = *k;
        for i in 0..d {
            v += cols[i] * n[i] as f64;
        }
        let r2 = v.norm2();
        if r2 <= rout2 && r2 >= rin2 {
            let mut iv = [0i32; MAXD];
            for i in 0..d {
                iv[i] = n[i] as i32;
            }
            out.push(iv);
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == d {
                return out;
            }
            n[i] += 1;
            if n[i] <= hi[i] {
                break;
            }
            n[i] = lo[i];
            i += 1;
        }
    }
}

// ============================================================================
// Frequency sets
// ============================================================================

/// Dual lattice points with `0 < |θ| <= r`, optionally with θ = 0 added.
#[derive(Clone, Debug, Serialize)]
pub struct FrequencySet {
    pub r: f64,
    pub with_zero: bool,
    /// Integer coordinates, sorted by (|θ|, lexicographic cartesian).
    pub thetas: Vec<IVec>,
    pub vectors: Vec<Vecd>,
}

impl FrequencySet {
    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn contains(&self, n: &IVec) -> bool {
        self.thetas.contains(n)
    }

    /// Rank of the spanned space.
    pub fn rank(&self, d: usize) -> usize {
        gram_schmidt(&self.vectors, d).len()
    }
}

/// Θ_r, complete by a box scan around the ball.
pub fn enumerate_theta(lat: &Lattice, r: f64, with_zero: bool) -> FrequencySet {
    let tol = 1e-12 * (1.0 + r);
    let mut pts: Vec<(IVec, Vecd)> = lat
        .dual_points_in_shell(&Vecd::ZERO, 0.0, r + tol)
        .into_iter()
        .map(|n| (n, lat.dual_point(&n)))
        .filter(|(n, v)| {
            let z = n.iter().all(|&c| c == 0);
            (with_zero && z) || (!z && v.norm() <= r + tol)
        })
        .collect();
    pts.sort_by(|a, b| {
        a.1.norm()
            .partial_cmp(&b.1.norm())
            .unwrap()
            .then_with(|| a.1.lex_cmp(&b.1))
    });
    FrequencySet {
        r,
        with_zero,
        thetas: pts.iter().map(|p| p.0).collect(),
        vectors: pts.iter().map(|p| p.1).collect(),
    }
}

/// Θ_r with the standing assumption that it spans R^d.
pub fn enumerate_theta_spanning(lat: &Lattice, r: f64) -> Result<FrequencySet> {
    let t = enumerate_theta(lat, r, false);
    if t.rank(lat.d) < lat.d {
        return Err(Error::Constraint(format!(
            "Θ_r with r = {r} does not contain {} linearly independent vectors (r below r0)",
            lat.d
        )));
    }
    Ok(t)
}

// ============================================================================
// Lattice subspaces
// ============================================================================

/// Orthonormalise, dropping vectors dependent on earlier ones.
pub fn gram_schmidt(vs: &[Vecd], d: usize) -> Vec<Vecd> {
    let mut frame: Vec<Vecd> = Vec::new();
    for v in vs {
        let mut w = *v;
        for f in &frame {
            w = w - *f * f.dot(&w);
        }
        // second pass for stability
        for f in &frame {
            w = w - *f * f.dot(&w);
        }
        let n = w.norm();
        if n > 1e-9 * v.norm().max(1e-300) && frame.len() < d {
            frame.push(w.scale(1.0 / n));
        }
    }
    frame
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeSubspace {
    pub dim: usize,
    pub frame: Vec<Vecd>,
    /// All vectors of Θ_r lying in the subspace, in Θ_r order.
    pub generators: Vec<IVec>,
}

impl LatticeSubspace {
    pub fn zero() -> LatticeSubspace {
        LatticeSubspace { dim: 0, frame: vec![], generators: vec![] }
    }

    pub fn project(&self, xi: &Vecd) -> Vecd {
        let mut p = Vecd::ZERO;
        for f in &self.frame {
            p += *f * f.dot(xi);
        }
        p
    }

    pub fn contains(&self, v: &Vecd) -> bool {
        (*v - self.project(v)).norm() <= 1e-9 * (1.0 + v.norm())
    }

    /// Orthogonal projector entries, the canonical form used for equality.
    pub fn projector(&self, d: usize) -> Vec<f64> {
        let mut p = vec![0.0; d * d];
        for f in &self.frame {
            for i in 0..d {
                for j in 0..d {
                    p[i * d + j] += f.0[i] * f.0[j];
                }
            }
        }
        p
    }

    pub fn same_as(&self, o: &LatticeSubspace, d: usize) -> bool {
        self.dim == o.dim
            && self
                .projector(d)
                .iter()
                .zip(o.projector(d))
                .all(|(a, b)| (a - b).abs() <= 1e-9)
    }

    /// Subspace spanned by the given vectors with generators drawn from `theta`.
    pub fn spanned_by(vs: &[Vecd], theta: &FrequencySet, d: usize) -> LatticeSubspace {
        let frame0 = gram_schmidt(vs, d);
        let probe = LatticeSubspace { dim: frame0.len(), frame: frame0, generators: vec![] };
        let gens: Vec<(IVec, Vecd)> = theta
            .thetas
            .iter()
            .zip(&theta.vectors)
            .filter(|(_, v)| probe.contains(v))
            .map(|(n, v)| (*n, *v))
            .collect();
        let gv: Vec<Vecd> = gens.iter().map(|g| g.1).collect();
        let mut frame = gram_schmidt(&gv, d);
        if frame.len() != probe.dim {
            // spanning vectors not all from theta; keep the direct frame
            frame = probe.frame.clone();
        }
        LatticeSubspace { dim: frame.len(), frame, generators: gens.iter().map(|g| g.0).collect() }
    }
}

/// 𝒱(r, n) for each n, deduplicated, plus the union 𝒲(r).
#[derive(Clone, Debug, Serialize)]
pub struct SubspaceFamily {
    pub r: f64,
    pub d: usize,
    pub by_dim: Vec<Vec<LatticeSubspace>>,
}

impl SubspaceFamily {
    pub fn all(&self) -> impl Iterator<Item = &LatticeSubspace> {
        self.by_dim.iter().flatten()
    }

    pub fn total(&self) -> usize {
        self.by_dim.iter().map(|v| v.len()).sum()
    }
}

pub fn enumerate_subspaces(theta: &FrequencySet, d: usize) -> SubspaceFamily {
    // one representative of each ±θ pair
    let mut reps: Vec<Vecd> = Vec::new();
    for (n, v) in theta.thetas.iter().zip(&theta.vectors) {
        if n.iter().all(|&c| c == 0) {
            continue;
        }
        let neg = ineg(n);
        let seen = theta.thetas.iter().take_while(|t| *t != n).any(|t| *t == neg);
        if !seen {
            reps.push(*v);
        }
    }
    let mut by_dim: Vec<Vec<LatticeSubspace>> = vec![Vec::new(); d + 1];
    by_dim[0].push(LatticeSubspace::zero());
    for n in 1..=d {
        let mut combo: Vec<usize> = (0..n).collect();
        if reps.len() < n {
            break;
        }
        loop {
            let vs: Vec<Vecd> = combo.iter().map(|&i| reps[i]).collect();
            if gram_schmidt(&vs, d).len() == n {
                let s = LatticeSubspace::spanned_by(&vs, theta, d);
                if !by_dim[n].iter().any(|o| o.same_as(&s, d)) {
                    by_dim[n].push(s);
                }
            }
            if !next_combination(&mut combo, reps.len()) {
                break;
            }
        }
    }
    SubspaceFamily { r: theta.r, d, by_dim }
}

/// Advance `c` to the next k-subset of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Volume of the unit ball in R^n.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * PI / n as f64,
    }
}

/// A shortest nonzero primal vector orthogonal to a (d-1)-dimensional
/// subspace, searched up to `2 dc ω_{d-1}^{-1} π^{1-d} r^{d-1}`.
pub fn find_orthogonal_lattice_vector(
    lat: &Lattice,
    v: &LatticeSubspace,
    r: f64,
) -> Result<(IVec, Vecd)> {
    let d = lat.d;
    if v.dim + 1 != d {
        return Err(Error::Invalid(format!(
            "subspace has dimension {}, expected {}",
            v.dim,
            d - 1
        )));
    }
    let bound = 2.0 * lat.det / unit_ball_volume(d - 1) * PI.powi(1 - d as i32)
        * r.powi(d as i32 - 1);
    let mut best: Option<(IVec, Vecd)> = None;
    for n in lat.primal_points_in_ball(bound * (1.0 + 1e-12)) {
        if n.iter().all(|&c| c == 0) {
            continue;
        }
        let g = lat.primal_point(&n);
        let gn = g.norm();
        if v.frame.iter().all(|f| f.dot(&g).abs() <= 1e-9 * gn) {
            let better = match &best {
                None => true,
                Some((_, b)) => {
                    gn < b.norm() - 1e-12 || ((gn - b.norm()).abs() <= 1e-12 && g.lex_cmp(b).is_gt())
                }
            };
            if better {
                best = Some((n, g));
            }
        }
    }
    best.ok_or_else(|| {
        Error::Internal(format!(
            "no orthogonal lattice vector within the bound {bound}"
        ))
    })
}
