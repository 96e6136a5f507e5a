use num_complex::Complex64 as C64;
use pdo_bands::fiber::{build_fiber, conjugate_fiber, OperatorSpec, Truncation};
use pdo_bands::gauge::{build_series, solve_commutator_equation};
use pdo_bands::geom::ivec;
use pdo_bands::linalg::eigvalsh;
use pdo_bands::params::{Geometry, ResonanceParams, SymbolClass};
use pdo_bands::symbol::magnetic::{magnetic_schrodinger, RealMode};
use pdo_bands::symbol::decompose::part;
use pdo_bands::symbol::*;
use pdo_bands::{Lattice, Vecd};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn v(x: &[f64]) -> Vecd {
    Vecd::from_slice(x)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn geo(rho: f64) -> Geometry {
    let l = Lattice::square(2);
    Geometry::new(&l, ResonanceParams::new(2, rho, 0.02, &[0.6, 0.8]).unwrap(), None).unwrap()
}

fn class() -> SymbolClass {
    SymbolClass::new(1.0, 5.0 / 3.0, 0.6).unwrap()
}

fn magnetic() -> Sym {
    let a = vec![
        RealMode { theta: vec![1, 0], cos: vec![0.0, 0.02], sin: vec![] },
        RealMode { theta: vec![0, 1], cos: vec![0.02, 0.0], sin: vec![] },
        RealMode { theta: vec![1, 1], cos: vec![], sin: vec![0.01, -0.01] },
    ];
    let vm = vec![
        RealMode { theta: vec![1, 0], cos: vec![0.3], sin: vec![] },
        RealMode { theta: vec![1, -1], cos: vec![0.2], sin: vec![0.1] },
    ];
    Arc::new(magnetic_schrodinger(&Lattice::square(2), &a, &vm).unwrap())
}

/// (θ index, ξ) pairs with |ξ| ∈ [ρ/2, 3ρ/2].
fn samples(g: &Geometry, n: usize, seed: u64) -> Vec<(usize, Vecd)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let t = rng.gen_range(0..g.theta.len());
            let r = g.params.rho * rng.gen_range(0.5..1.5);
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            (t, v(&[r * a.cos(), r * a.sin()]))
        })
        .collect()
}

#[test]
fn psi_worked_value() {
    let g = geo(20.0);
    let l = &g.lat;
    let a: Sym = Arc::new(ModeSymbol::new(l, vec![(ivec(&[1, 0]), Coeff::Const(c(5.0, 0.0)))], "a"));
    let psi = solve_commutator_equation(&a, &g, 1.0);
    // τ = 7 and |θ·(ξ+θ/2)| = 3.5 > L/2, so the point is non-resonant
    let xi = v(&[3.0, 20.0]);
    assert_eq!(tau(1.0, &v(&[1.0, 0.0]), &xi), 7.0);
    let got = psi.coeff(&ivec(&[1, 0]), &xi);
    assert!((got - c(0.0, 5.0 / 7.0)).norm() < 1e-14, "{got}");
    assert!(psi.take_fault().is_none());

    // no natural part, no gauge
    let far = v(&[60.0, 0.0]);
    assert_eq!(psi.coeff(&ivec(&[1, 0]), &far), c(0.0, 0.0));
    let zero = zero_symbol(l);
    let p0 = solve_commutator_equation(&zero, &g, 1.0);
    assert!(p0.support().is_empty());
}

#[test]
fn depth_one_gives_x_equal_b() {
    let g = geo(40.0);
    let b = magnetic();
    let s = build_series(&b, &g, class(), 1).unwrap();
    for (_, xi) in samples(&g, 200, 1) {
        for t in &b.support().thetas {
            assert_eq!(s.x.coeff(t, &xi), b.coeff(t, &xi));
        }
    }
    assert!(build_series(&b, &g, class(), 0).is_err());
}

#[test]
fn second_level_terms() {
    let g = geo(40.0);
    let b = magnetic();
    let s = build_series(&b, &g, class(), 2).unwrap();
    let psi1: Sym = s.psi[0].clone();
    let b2 = commutator(&b, &psi1).unwrap();
    let t2 = ad_fold(&s.h0, &[psi1.clone(), psi1.clone()]).unwrap();
    let bnat = part(&b, PartKind::Natural, &g.theta, g.bank);
    let t2_alt = commutator(&bnat, &psi1).unwrap();
    let got_t2 = s.t_levels[1].clone().unwrap();
    for (ti, xi) in samples(&g, 300, 2) {
        let t = &g.theta.thetas[ti];
        let want = b2.coeff(t, &xi);
        assert!((s.b_levels[1].coeff(t, &xi) - want).norm() <= 1e-13 * want.norm().max(1.0));
        let want = t2.coeff(t, &xi) * 0.5;
        let got = got_t2.coeff(t, &xi);
        assert!((got - want).norm() <= 1e-12 * want.norm().max(1.0));
        // ad(h₀; ψ₁) = −B^♮ turns the double commutator into −½ ad(B^♮; ψ₁)
        let alt = t2_alt.coeff(t, &xi) * -0.5;
        assert!((got - alt).norm() <= 1e-10 * alt.norm().max(1.0), "{got} vs {alt}");
    }
}

#[test]
fn level_equations_hold() {
    let g = geo(40.0);
    let s = build_series(&magnetic(), &g, class(), 4).unwrap();
    let pts = samples(&g, 500, 3);
    for l in 1..=4 {
        let r = s.level_residual(l, &pts).unwrap();
        assert!(r <= 1e-9, "level {l}: {r}");
    }
}

#[test]
fn epsilon_table() {
    let k = class();
    assert!((k.sigma() - 2.0 / 3.0).abs() < 1e-15);
    for j in 1..=9 {
        assert!((k.epsilon(j) - (2.0 - j as f64 / 3.0)).abs() < 1e-14);
    }
    assert!(k.epsilon(6).abs() < 1e-14);
}

#[test]
fn psi_has_no_zero_mode_and_hermitian_fiber() {
    let g = geo(20.0);
    let s = build_series(&magnetic(), &g, class(), 3).unwrap();
    let zero = ivec(&[0, 0]);
    for (_, xi) in samples(&g, 200, 4) {
        assert_eq!(s.psi_total.coeff(&zero, &xi), c(0.0, 0.0));
    }
    let xs: Vec<Vecd> = samples(&g, 200, 5).into_iter().map(|p| p.1).collect();
    assert!(symmetry_residual(s.psi_total.as_ref(), &xs) <= 1e-12);
    let trunc = Truncation::Annulus { r_in: 17.0, r_out: 23.0 };
    let f = build_fiber(&g.lat, &OperatorSpec::new(None, vec![s.psi_total.clone()]), &v(&[0.21, 0.37]), trunc).unwrap();
    assert!(f.norm_bound() > 0.0);
    assert!(f.hermitian_residual() <= 1e-12 * f.norm_bound());
}

#[test]
fn conjugation_preserves_spectrum() {
    let g = geo(20.0);
    let b = magnetic();
    let s = build_series(&b, &g, class(), 3).unwrap();
    let k = v(&[0.21, 0.37]);
    let trunc = Truncation::Annulus { r_in: 17.0, r_out: 23.0 };
    let h = build_fiber(&g.lat, &OperatorSpec::new(Some(1.0), vec![b]), &k, trunc).unwrap();
    let p = build_fiber(&g.lat, &OperatorSpec::new(None, vec![s.psi_total.clone()]), &k, trunc).unwrap();
    let conj = conjugate_fiber(&h, &p).unwrap();
    assert!(conj.unitarity_defect <= 1e-12);
    let e0 = h.eigenvalues().unwrap();
    let e1 = eigvalsh(&conj.matrix).unwrap();
    let scale = h.norm_bound();
    let worst = e0.iter().zip(&e1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-11 * scale, "{worst} vs scale {scale}");

    // Ψ = 0 gives H back exactly up to rounding
    let z = build_fiber(&g.lat, &OperatorSpec::new(None, vec![zero_symbol(&g.lat)]), &k, trunc).unwrap();
    let same = conjugate_fiber(&h, &z).unwrap();
    let dense = h.to_dense();
    let mut diff: f64 = 0.0;
    for i in 0..dense.nrows() {
        for j in 0..dense.ncols() {
            let d = same.matrix[(i, j)] - dense[(i, j)];
            diff = diff.max((d.re * d.re + d.im * d.im).sqrt());
        }
    }
    assert!(diff <= 1e-12 * scale);
}
