use num_complex::Complex64 as C64;
use pdo_bands::bandfn::{find_simple_direction, BandFunction};
use pdo_bands::fiber::{build_fiber, counting, k_grid, OperatorSpec, Truncation};
use pdo_bands::geom::ivec;
use pdo_bands::params::{Geometry, ResonanceParams};
use pdo_bands::resonance::{classify, congruence_class};
use pdo_bands::spectrum::{band_overlap, overlap_by_counting, spectra};
use pdo_bands::symbol::magnetic::{magnetic_schrodinger, RealMode};
use pdo_bands::symbol::*;
use pdo_bands::{Lattice, Vecd};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn v(x: &[f64]) -> Vecd {
    Vecd::from_slice(x)
}

fn geo(rho: f64) -> Geometry {
    Geometry::new(&Lattice::square(2), ResonanceParams::new(2, rho, 0.02, &[0.6, 0.8]).unwrap(), None).unwrap()
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

/// #{n : |n + k|² ≤ λ} on Z² by direct scan.
fn free_count(k: &Vecd, lambda: f64) -> usize {
    let r = lambda.max(0.0).sqrt().ceil() as i32 + 2;
    let mut c = 0;
    for a in -r..=r {
        for b in -r..=r {
            if (v(&[a as f64, b as f64]) + *k).norm2() <= lambda {
                c += 1;
            }
        }
    }
    c
}

#[test]
fn free_fiber_energies() {
    let l = Lattice::square(2);
    let op = OperatorSpec::new(Some(1.0), vec![]);
    let f = build_fiber(&l, &op, &Vecd::ZERO, Truncation::Ball(2f64.sqrt())).unwrap();
    assert_eq!(f.eigenvalues().unwrap(), vec![0.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
    // a cutoff of 2 also picks up (±2, 0), (0, ±2)
    let f = build_fiber(&l, &op, &Vecd::ZERO, Truncation::Ball(2.0)).unwrap();
    let ev = f.eigenvalues().unwrap();
    assert_eq!(ev.len(), 13);
    assert_eq!(counting(&ev, 0, 2.0), 9);
    assert_eq!(counting(&ev, 0, 1.5), 5);
    assert_eq!(counting(&ev, 0, -0.5), 0);
}

#[test]
fn free_counting_matches_lattice_count() {
    let l = Lattice::square(2);
    let op = OperatorSpec::new(Some(1.0), vec![]);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let k = v(&[rng.gen::<f64>(), rng.gen::<f64>()]);
        let f = build_fiber(&l, &op, &k, Truncation::Ball(12.0)).unwrap();
        let ev = f.eigenvalues().unwrap();
        for lam in [0.3, 7.7, 50.0, 99.0] {
            assert_eq!(counting(&ev, f.inner_count, lam), free_count(&k, lam));
        }
    }
}

#[test]
fn cosine_fiber_entries() {
    let l = Lattice::square(2);
    let s = l.sqrt_det();
    let b: Sym = Arc::new(ModeSymbol::new(
        &l,
        vec![(ivec(&[1, 0]), Coeff::Const(C64::new(s, 0.0))), (ivec(&[-1, 0]), Coeff::Const(C64::new(s, 0.0)))],
        "2cos",
    ));
    let f = build_fiber(&l, &OperatorSpec::new(Some(1.0), vec![b]), &v(&[0.2, 0.1]), Truncation::Ball(3.0)).unwrap();
    let h = f.to_dense();
    for i in 0..f.dim() {
        for j in 0..f.dim() {
            let d = [f.index[i][0] - f.index[j][0], f.index[i][1] - f.index[j][1]];
            let want = if i == j {
                f.points[i].norm2()
            } else if d == [1, 0] || d == [-1, 0] {
                1.0
            } else {
                0.0
            };
            assert!((h[(i, j)].re - want).abs() < 1e-14 && h[(i, j)].im.abs() < 1e-14);
        }
    }
}

#[test]
fn magnetic_fiber_is_hermitian() {
    let l = Lattice::square(2);
    let f = build_fiber(&l, &OperatorSpec::new(Some(1.0), vec![magnetic()]), &v(&[0.3, 0.6]), Truncation::Ball(15.0)).unwrap();
    assert!(f.hermitian_residual() <= 1e-12);
}

#[test]
fn cluster_examples() {
    let g = geo(40.0);
    let b = magnetic();
    let bf = BandFunction::new(&g, 1.0, Some(b.clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    // trivial class: 1×1 with h₀ + b^o
    loop {
        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let xi = v(&[40.0 * a.cos(), 40.0 * a.sin()]);
        let c = congruence_class(&g, &xi).unwrap();
        if c.is_trivial() {
            let m = bf.cluster_matrix(&c);
            let bo = b.coeff(&ivec(&[0, 0]), &xi).re / g.lat.sqrt_det();
            assert_eq!(m.n, 1);
            assert!((m.entries[0].re - (xi.norm2() + bo)).abs() < 1e-10);
            assert!((bf.g(&xi).unwrap() - (xi.norm2() + bo)).abs() < 1e-10);
            break;
        }
    }

    // 13-point class with b = 0 is diagonal with entries |η|²
    let wg = Geometry::unchecked(&Lattice::square(2), ResonanceParams::unchecked(100.0, 1.5, &[0.4, 0.8]));
    let free = BandFunction::new(&wg, 1.0, None);
    let c = congruence_class(&wg, &v(&[3.0, 100.0])).unwrap();
    let m = free.cluster_matrix(&c);
    let mut want: Vec<f64> = c.points.iter().map(|p| p.norm2()).collect();
    want.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(m.eigenvalues().unwrap(), want);
    for p in &c.points {
        assert_eq!(free.g(p).unwrap(), p.norm2());
    }
}

#[test]
fn g_examples() {
    let wg = Geometry::unchecked(&Lattice::square(2), ResonanceParams::unchecked(100.0, 1.5, &[0.4, 0.8]));
    let free = BandFunction::new(&wg, 1.0, None);
    let got = free.g(&v(&[37.3, 95.1])).unwrap();
    assert!((got - 10435.30).abs() < 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let xi = v(&[rng.gen_range(-150.0..150.0), rng.gen_range(-150.0..150.0)]);
        assert!((free.g(&xi).unwrap() - xi.norm2()).abs() <= 1e-9 * xi.norm2().max(1.0));
    }
}

#[test]
fn cluster_classes_are_unitarily_equivalent_and_g_is_bijective() {
    let g = geo(40.0);
    let bf = BandFunction::new(&g, 1.0, Some(magnetic()));
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut seen = 0;
    while seen < 30 {
        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = rng.gen_range(30.0..50.0);
        let (_, c) = classify(&g, &v(&[r * a.cos(), r * a.sin()])).unwrap();
        if c.is_trivial() {
            continue;
        }
        seen += 1;
        let mref = bf.cluster_matrix(&c);
        assert!(mref.hermitian_residual() <= 1e-12);
        let e0 = mref.eigenvalues().unwrap();
        let other = congruence_class(&g, &c.points[rng.gen_range(0..c.len())]).unwrap();
        let e1 = bf.cluster_matrix(&other).eigenvalues().unwrap();
        for (x, y) in e0.iter().zip(&e1) {
            assert!((x - y).abs() <= 1e-11 * x.abs().max(1.0));
        }
        bf.clear();
        let mut gs: Vec<f64> = c.points.iter().map(|p| bf.g(p).unwrap()).collect();
        gs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, y) in gs.iter().zip(&e0) {
            assert!((x - y).abs() <= 1e-11 * x.abs().max(1.0));
        }
    }
}

#[test]
fn g_matches_model_fiber_spectrum() {
    let g = geo(20.0);
    let bf = BandFunction::new(&g, 1.0, Some(magnetic()));
    let op = OperatorSpec::new(Some(1.0), bf.model_symbols());
    let trunc = Truncation::Annulus { r_in: 13.0, r_out: 27.0 };
    let (lo, hi) = (17.0f64.powi(2), 23.0f64.powi(2));
    for k in [v(&[0.11, 0.43]), v(&[0.77, 0.05])] {
        let f = build_fiber(&g.lat, &op, &k, trunc).unwrap();
        let mut fib: Vec<f64> = f.eigenvalues().unwrap().into_iter().filter(|e| *e >= lo && *e <= hi).collect();
        let mut gs = Vec::new();
        for p in &f.points {
            let x = bf.g(p).unwrap();
            if x >= lo && x <= hi {
                gs.push(x);
            }
        }
        fib.sort_by(|a, b| a.partial_cmp(b).unwrap());
        gs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(fib.len(), gs.len());
        for (x, y) in fib.iter().zip(&gs) {
            assert!((x - y).abs() <= 1e-9 * x, "{x} vs {y}");
        }
    }
}

#[test]
fn free_interval_endpoints() {
    let g = geo(40.0);
    let free = BandFunction::new(&g, 1.0, None);
    let omega = v(&[0.6, 0.8]);
    for (rho, delta) in [(40.0f64, 30.0), (40.0, 1.0)] {
        let (lo, hi) = free.interval_i(&omega, rho, delta, 0.0).unwrap();
        let want = ((rho * rho - delta).sqrt(), (rho * rho + delta).sqrt());
        assert!((lo - want.0).abs() <= 1e-10 * want.0);
        assert!((hi - want.1).abs() <= 1e-10 * want.1);
        let scale = delta / (2.0 * rho);
        assert!(hi - lo >= scale / 4.0 && hi - lo <= 4.0 * scale);
    }
    assert!(free.interval_i(&omega, 40.0, 1e6, 0.0).is_err());
}

#[test]
fn magnetic_interval_is_increasing() {
    let g = geo(40.0);
    let bf = BandFunction::new(&g, 1.0, Some(magnetic()));
    let w = bf.weyl_bound(80.0);
    let omega = v(&[(0.3f64).cos(), (0.3f64).sin()]);
    let (lo, hi) = bf.interval_i(&omega, 40.0, 20.0, w).unwrap();
    assert!(hi > lo);
    let mut prev = bf.g(&omega.scale(lo)).unwrap();
    for i in 1..=50 {
        let t = lo + (hi - lo) * i as f64 / 50.0;
        let x = bf.g(&omega.scale(t)).unwrap();
        assert!(x > prev);
        prev = x;
    }
}

#[test]
fn free_simple_direction_and_mirror_multiplicity() {
    let rho = 41.0;
    let g = geo(rho);
    let free = BandFunction::new(&g, 1.0, None);
    // I(Ω) must be short enough that no other free level crosses it
    let delta = 1e-3;
    let s = find_simple_direction(&free, rho, delta, 16, 9, 3).unwrap();
    let found = s.found.clone().unwrap_or_else(|| panic!("{:?}", s.rejected));
    // no |ξ + n| = |ξ| coincidence at the sampled points
    let (lo, hi) = found.interval;
    for i in 0..9 {
        let xi = found.omega.scale(lo + (hi - lo) * i as f64 / 8.0);
        let r = xi.norm2();
        for a in -90..=90 {
            for b in -90..=90 {
                if (a, b) == (0, 0) {
                    continue;
                }
                let e = (xi + v(&[a as f64, b as f64])).norm2();
                assert!((e - r).abs() > s.tolerance);
            }
        }
    }
    // Ω = (1, 0) runs through (41, 0), which shares its energy with (0, 41)
    let omega = v(&[1.0, 0.0]);
    let (lo, hi) = free.interval_i(&omega, rho, delta, 0.0).unwrap();
    assert!(lo < 41.0 && hi > 41.0);
    assert_eq!(free.neighbour_gap(&omega.scale(41.0), 0.0, 1e-6).unwrap(), 0.0);
}

#[test]
fn free_overlap_at_ten() {
    let l = Lattice::square(2);
    let ks = k_grid(&l, 32);
    let spec = spectra(&l, &OperatorSpec::new(Some(1.0), vec![]), &ks, Truncation::Ball(8.0)).unwrap();
    let rep = band_overlap(&spec, 10.0);
    assert!(rep.zeta > 0.0);
    let by_count = overlap_by_counting(&spec, 10.0, 5.0, 1e-9);
    assert!((by_count - rep.zeta).abs() <= 1e-6 * rep.zeta.max(1.0));
    // same quantity from direct lattice counts
    let holds = |t: f64| {
        let lo = ks.iter().map(|k| free_count(k, 10.0 + t)).min().unwrap();
        let hi = ks.iter().map(|k| free_count(k, 10.0 - t)).max().unwrap();
        lo < hi
    };
    assert!(holds(0.999 * rep.zeta));
    assert!(!holds(1.001 * rep.zeta));
}
