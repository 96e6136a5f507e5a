use pdo_bands::geom::{ineg, ivec};
use pdo_bands::lattice::*;
use pdo_bands::{Lattice, Vecd};
use proptest::prelude::*;
use std::f64::consts::PI;

fn v(x: &[f64]) -> Vecd {
    Vecd::from_slice(x)
}

fn hexagonal() -> Lattice {
    Lattice::new(&[v(&[1.0, 0.0]), v(&[0.5, 3f64.sqrt() / 2.0])]).unwrap()
}

fn close(a: &Vecd, b: &Vecd, tol: f64) -> bool {
    (*a - *b).norm() <= tol
}

#[test]
fn square_and_unit_duals() {
    let l = Lattice::square(2);
    assert!(close(&l.dual_basis[0], &v(&[1.0, 0.0]), 1e-15));
    assert!(close(&l.dual_basis[1], &v(&[0.0, 1.0]), 1e-15));
    assert!((l.det - 4.0 * PI * PI).abs() < 1e-12);
    assert!((l.det - 39.478).abs() < 1e-3);

    let u = Lattice::new(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
    assert!(close(&u.dual_basis[0], &v(&[2.0 * PI, 0.0]), 1e-14));
    assert!(close(&u.dual_basis[1], &v(&[0.0, 2.0 * PI]), 1e-14));
}

#[test]
fn hexagonal_dual_pairing() {
    let l = hexagonal();
    let s = 3f64.sqrt();
    assert!(close(&l.dual_basis[0], &v(&[2.0 * PI, -2.0 * PI / s]), 1e-12));
    assert!(close(&l.dual_basis[1], &v(&[0.0, 4.0 * PI / s]), 1e-12));
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { 2.0 * PI } else { 0.0 };
            assert!((l.basis[i].dot(&l.dual_basis[j]) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn singular_basis_rejected() {
    let e = Lattice::new(&[v(&[1.0, 2.0]), v(&[2.0, 4.0])]).unwrap_err();
    assert!(matches!(e, pdo_bands::Error::InvalidLattice(_)));
}

#[test]
fn split_momentum_examples() {
    let l = Lattice::square(2);
    let (n, f) = l.split_momentum(&v(&[2.5, -0.3]));
    assert_eq!(&n[..2], &[2, -1]);
    assert!(close(&f, &v(&[0.5, 0.7]), 1e-12));
    let (n, f) = l.split_momentum(&Vecd::ZERO);
    assert_eq!(&n[..2], &[0, 0]);
    assert_eq!(f, Vecd::ZERO);
}

#[test]
fn torus_distance_examples() {
    let l = Lattice::square(2);
    assert!((l.torus_distance(&v(&[0.9, 0.0])) - 0.1).abs() < 1e-12);
    assert_eq!(l.torus_distance(&Vecd::ZERO), 0.0);
    assert!((l.torus_distance(&v(&[0.5, 0.5])) - 0.5f64.sqrt()).abs() < 1e-12);
}

fn theta_coords(t: &FrequencySet) -> Vec<Vec<i32>> {
    let mut c: Vec<Vec<i32>> = t.thetas.iter().map(|n| n[..2].to_vec()).collect();
    c.sort();
    c
}

#[test]
fn theta_balls_in_z2() {
    let l = Lattice::square(2);
    let t1 = enumerate_theta(&l, 1.0, false);
    assert_eq!(theta_coords(&t1), vec![vec![-1, 0], vec![0, -1], vec![0, 1], vec![1, 0]]);
    let t15 = enumerate_theta(&l, 1.5, false);
    assert_eq!(t15.len(), 8);
    for c in [[1, 1], [1, -1], [-1, 1], [-1, -1]] {
        assert!(t15.contains(&ivec(&c)));
    }
    assert!(enumerate_theta_spanning(&l, 0.5).is_err());
    assert_eq!(enumerate_theta(&l, 1.0, true).len(), 5);
}

/// Brute-force count of hexagonal dual vectors with 0 < |θ| ≤ r.
fn brute_theta(l: &Lattice, r: f64) -> usize {
    let mut c = 0;
    for a in -8..=8 {
        for b in -8..=8 {
            if (a, b) == (0, 0) {
                continue;
            }
            if l.dual_point(&ivec(&[a, b])).norm() <= r * (1.0 + 1e-12) {
                c += 1;
            }
        }
    }
    c
}

#[test]
fn hexagonal_shortest_shell_has_six() {
    let l = hexagonal();
    let shortest = l.dual_basis[1].norm();
    let t = enumerate_theta(&l, shortest, false);
    assert_eq!(t.len(), 6);
    assert_eq!(brute_theta(&l, shortest), 6);
}

#[test]
fn subspace_families() {
    let l = Lattice::square(2);
    let f1 = enumerate_subspaces(&enumerate_theta(&l, 1.0, false), 2);
    assert_eq!(f1.by_dim[0].len(), 1);
    assert_eq!(f1.by_dim[1].len(), 2);
    assert_eq!(f1.by_dim[2].len(), 1);
    assert_eq!(f1.total(), 4);
    let f15 = enumerate_subspaces(&enumerate_theta(&l, 1.5, false), 2);
    assert_eq!(f15.by_dim[1].len(), 4);
    let diag = LatticeSubspace::spanned_by(&[v(&[1.0, 1.0])], &enumerate_theta(&l, 1.5, false), 2);
    assert!(f15.by_dim[1].iter().any(|s| s.same_as(&diag, 2)));
    let empty = enumerate_subspaces(&enumerate_theta(&l, 0.5, false), 2);
    assert_eq!(empty.total(), 1);
    assert_eq!(empty.by_dim[0][0].dim, 0);
}

#[test]
fn projections() {
    let l = Lattice::square(2);
    let th = enumerate_theta(&l, 1.5, false);
    let e1 = LatticeSubspace::spanned_by(&[v(&[1.0, 0.0])], &th, 2);
    assert!(close(&e1.project(&v(&[3.0, 4.0])), &v(&[3.0, 0.0]), 1e-14));
    assert_eq!(LatticeSubspace::zero().project(&v(&[3.0, 4.0])), Vecd::ZERO);
    let d = LatticeSubspace::spanned_by(&[v(&[1.0, 1.0])], &th, 2);
    assert!(close(&d.project(&v(&[3.0, 4.0])), &v(&[3.5, 3.5]), 1e-14));
    assert_eq!(d.generators.len(), 2);
}

#[test]
fn orthogonal_lattice_vectors() {
    let l = Lattice::square(2);
    let th = enumerate_theta(&l, 1.5, false);
    let d = LatticeSubspace::spanned_by(&[v(&[1.0, 1.0])], &th, 2);
    let (_, g) = find_orthogonal_lattice_vector(&l, &d, 1.5).unwrap();
    let want = v(&[2.0 * PI, -2.0 * PI]);
    assert!(close(&g, &want, 1e-12) || close(&g, &want.scale(-1.0), 1e-12));
    let e1 = LatticeSubspace::spanned_by(&[v(&[1.0, 0.0])], &th, 2);
    let (_, g) = find_orthogonal_lattice_vector(&l, &e1, 1.5).unwrap();
    assert!(g.0[0].abs() < 1e-12 && (g.0[1].abs() - 2.0 * PI).abs() < 1e-12);

    let h = hexagonal();
    let r = h.dual_basis[1].norm();
    let ht = enumerate_theta(&h, r, false);
    let v0 = LatticeSubspace::spanned_by(&[ht.vectors[0]], &ht, 2);
    let (_, g) = find_orthogonal_lattice_vector(&h, &v0, r).unwrap();
    assert!(g.norm() > 0.0);
    for (t, tv) in ht.thetas.iter().zip(&ht.vectors) {
        if v0.contains(tv) {
            assert!(g.dot(tv).abs() < 1e-9, "θ = {t:?}");
        }
    }
}

#[test]
fn off_subspace_frequencies_keep_positive_distance() {
    let l = Lattice::square(2);
    let th = enumerate_theta(&l, 2.3, false);
    let fam = enumerate_subspaces(&th, 2);
    for vs in &fam.by_dim[1] {
        for tv in &th.vectors {
            if !vs.contains(tv) {
                assert!((*tv - vs.project(tv)).norm() > 1e-6);
            }
        }
    }
}

/// |ξ| / (r^d (|ξ_θ| + |ξ_V|)) over ξ ∈ V + span θ.
fn projection_ratio(seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let l = Lattice::square(2);
    let r = 1.5;
    let th = enumerate_theta(&l, r, false);
    let fam = enumerate_subspaces(&th, 2);
    let mut worst: f64 = 0.0;
    for vs in &fam.by_dim[1] {
        for tv in th.vectors.iter().filter(|t| !vs.contains(t)) {
            let theta_line = LatticeSubspace::spanned_by(&[*tv], &th, 2);
            for _ in 0..200 {
                let a: f64 = rng.gen_range(-50.0..50.0);
                let b: f64 = rng.gen_range(-50.0..50.0);
                let xi = vs.frame[0].scale(a) + tv.scale(b);
                let den = r * r * (theta_line.project(&xi).norm() + vs.project(&xi).norm());
                if den > 0.0 {
                    worst = worst.max(xi.norm() / den);
                }
            }
        }
    }
    worst
}

#[test]
fn projection_constant_is_stable() {
    let c1 = projection_ratio(1);
    let c2 = projection_ratio(2);
    assert!(c1.is_finite() && c1 > 0.0);
    assert!(c2 <= 3.0 * c1 && c1 <= 3.0 * c2, "{c1} vs {c2}");
}

fn lattice_strategy() -> impl Strategy<Value = Lattice> {
    (0.5f64..2.0, -0.7f64..0.7, 0.5f64..2.0, -0.7f64..0.7).prop_map(|(a, b, c, e)| {
        Lattice::new(&[v(&[a, b]), v(&[e, c])]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_of_dual_is_primal(l in lattice_strategy()) {
        let dd = l.dual();
        for i in 0..2 {
            prop_assert!(close(&dd.dual_basis[i], &l.basis[i], 1e-12 * (1.0 + l.basis[i].norm())));
        }
    }

    #[test]
    fn split_round_trip(l in lattice_strategy(), x in -30.0f64..30.0, y in -30.0f64..30.0) {
        let xi = v(&[x, y]);
        let (n, f) = l.split_momentum(&xi);
        prop_assert!(close(&(l.dual_point(&n) + f), &xi, 1e-12 * (1.0 + xi.norm())));
        let c = l.dual_coords(&f);
        for ci in &c[..2] {
            prop_assert!(*ci >= -1e-12 && *ci < 1.0 + 1e-12);
        }
    }

    #[test]
    fn theta_negation_closed_and_complete(l in lattice_strategy(), r in 3.0f64..15.0) {
        let t = enumerate_theta(&l, r, false);
        for n in &t.thetas {
            prop_assert!(t.contains(&ineg(n)));
        }
        // brute force over a box twice as large as needed
        let reach = 2.0 * r * l.basis.iter().map(|b| b.norm()).fold(0.0, f64::max) / (2.0 * PI) + 2.0;
        let k = reach.ceil() as i32;
        let mut count = 0;
        for a in -k..=k {
            for b in -k..=k {
                if (a, b) != (0, 0) && l.dual_point(&ivec(&[a, b])).norm() <= r {
                    count += 1;
                }
            }
        }
        prop_assert_eq!(count, t.len());
    }
}
