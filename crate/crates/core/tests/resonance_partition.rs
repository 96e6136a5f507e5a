use pdo_bands::geom::{ivec, IVec};
use pdo_bands::lattice::LatticeSubspace;
use pdo_bands::measure::sphere_s_fraction;
use pdo_bands::params::{Geometry, ResonanceParams};
use pdo_bands::resonance::*;
use pdo_bands::{Lattice, Vecd};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn v(x: &[f64]) -> Vecd {
    Vecd::from_slice(x)
}

/// ρ = 100, α₁ = 0.4, r = 1.5 on Z².
fn worked_geo() -> Geometry {
    Geometry::unchecked(&Lattice::square(2), ResonanceParams::unchecked(100.0, 1.5, &[0.4, 0.8]))
}

fn default_geo(rho: f64) -> Geometry {
    Geometry::new(&Lattice::square(2), ResonanceParams::new(2, rho, 0.02, &[0.6, 0.8]).unwrap(), None).unwrap()
}

fn shift_set(c: &CongruenceClass) -> BTreeSet<[i32; 2]> {
    c.shifts.iter().map(|s| [s[0], s[1]]).collect()
}

fn point_set(c: &CongruenceClass) -> BTreeSet<[i64; 2]> {
    c.points.iter().map(|p| [(p.0[0] * 1e6).round() as i64, (p.0[1] * 1e6).round() as i64]).collect()
}

/// Fixpoint iteration over a box of integer shifts, no queue.
fn brute_closure(geo: &Geometry, xi: &Vecd, reach: i32) -> BTreeSet<[i32; 2]> {
    let ra = geo.params.rho_alpha(1);
    let mut set = BTreeSet::from([[0, 0]]);
    loop {
        let mut next = set.clone();
        for s in &set {
            let eta = *xi + geo.lat.dual_point(&ivec(&s[..]));
            for (t, th) in geo.theta.thetas.iter().zip(&geo.theta.vectors) {
                if !in_layer(th, &eta, ra) {
                    continue;
                }
                for l in -reach..=reach {
                    let m = [s[0] + l * t[0], s[1] + l * t[1]];
                    if m[0].abs() > reach || m[1].abs() > reach {
                        continue;
                    }
                    let e2 = *xi + geo.lat.dual_point(&ivec(&m[..]));
                    if in_layer(th, &e2, ra) {
                        next.insert(m);
                    }
                }
            }
        }
        if next.len() == set.len() {
            return set;
        }
        set = next;
    }
}

#[test]
fn layer_examples() {
    let ra = 100f64.powf(0.4);
    let t = v(&[1.0, 0.0]);
    assert!(in_layer(&t, &v(&[5.0, 50.0]), ra));
    assert!(!in_layer(&t, &v(&[10.0, 50.0]), ra));
    assert!(in_layer(&Vecd::ZERO, &v(&[1e6, 0.0]), ra));
}

#[test]
fn thirteen_point_class_matches_brute_force() {
    let g = worked_geo();
    let xi = v(&[3.0, 100.0]);
    let c = congruence_class(&g, &xi).unwrap();
    assert_eq!(c.len(), 13);
    let want: BTreeSet<[i32; 2]> = (-6..=6).map(|j| [j - 3, 0]).collect();
    assert_eq!(shift_set(&c), want);
    assert_eq!(brute_closure(&g, &xi, 20), want);
    let e1 = LatticeSubspace::spanned_by(&[v(&[1.0, 0.0])], &g.theta, 2);
    assert!(c.span.same_as(&e1, 2));
    // every member generates the same class
    for eta in &c.points {
        assert_eq!(point_set(&congruence_class(&g, eta).unwrap()), point_set(&c));
    }
}

#[test]
fn classification_examples() {
    let g = worked_geo();
    let (lab, c) = classify(&g, &v(&[37.3, 95.1])).unwrap();
    assert_eq!((lab.tier, c.len()), (0, 1));
    assert_eq!(c.span.dim, 0);
    let (lab, _) = classify(&g, &v(&[3.0, 100.0])).unwrap();
    let e1 = LatticeSubspace::spanned_by(&[v(&[1.0, 0.0])], &g.theta, 2);
    assert_eq!(lab.tier, 1);
    assert!(lab.subspace.same_as(&e1, 2));
    let (lab, _) = classify(&g, &v(&[3.0, 5.0])).unwrap();
    assert_eq!(lab.tier, 2);
}

#[test]
fn critical_points_and_nudging() {
    let g = worked_geo();
    let ra = 100f64.powf(0.4);
    let edge = v(&[ra, 50.0]);
    assert!(is_critical(&g, &edge).unwrap());
    let moved = resolve_critical(&g, &edge).unwrap();
    assert!(!is_critical(&g, &moved).unwrap());
    assert!((moved - edge).norm() < 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let xi = v(&[rng.gen_range(-150.0..150.0), rng.gen_range(-150.0..150.0)]);
        assert!(!is_critical(&g, &xi).unwrap());
    }
}

/// Uniform in the annulus ρ/2 ≤ |ξ| ≤ 3ρ/2.
fn annulus_point(rng: &mut ChaCha8Rng, rho: f64) -> Vecd {
    let r = rho * (0.25 + 2.0 * rng.gen::<f64>()).sqrt();
    let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    v(&[r * a.cos(), r * a.sin()])
}

#[test]
fn partition_properties_on_samples() {
    let g = default_geo(100.0);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut tiers = [0usize; 3];
    for _ in 0..3000 {
        let xi = annulus_point(&mut rng, 100.0);
        let (lab, class) = classify(&g, &xi).unwrap();
        tiers[lab.tier] += 1;
        for s in &class.shifts {
            assert!(lab.subspace.contains(&g.lat.dual_point(s)));
        }
        if lab.tier > 0 {
            assert!(lab.subspace.project(&class.xi).norm() <= 2.0 * g.params.rho_alpha(lab.tier));
        }
        // the whole class lands in the same zone
        for eta in class.points.iter().take(5) {
            let (l2, _) = classify(&g, eta).unwrap();
            assert_eq!(l2.index, lab.index);
        }
    }
    assert!(tiers[0] > 0 && tiers[1] > 0, "{tiers:?}");
}

#[test]
fn translation_keeps_shifts() {
    let g = default_geo(100.0);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut checked = 0;
    for _ in 0..2000 {
        let xi = annulus_point(&mut rng, 100.0);
        let (lab, class) = classify(&g, &xi).unwrap();
        if lab.tier != 1 {
            continue;
        }
        let u = lab.subspace.frame[0];
        let perp = v(&[-u.0[1], u.0[0]]);
        let nu = perp.scale(rng.gen_range(-50.0..50.0));
        let moved = congruence_class(&g, &(class.xi + nu)).unwrap();
        assert!(shift_set(&class).is_subset(&shift_set(&moved)));
        checked += 1;
    }
    assert!(checked > 20, "{checked}");
}

#[test]
fn ray_keeps_zone_and_shifts() {
    let g = default_geo(100.0);
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..400 {
        let xi = annulus_point(&mut rng, 100.0);
        let (lab, class) = classify(&g, &xi).unwrap();
        let perp = class.xi - lab.subspace.project(&class.xi);
        for _ in 0..4 {
            let t = rng.gen_range(0.0..25.0);
            let xt = resolve_critical(&g, &(class.xi + perp.scale(t))).unwrap();
            let (lt, ct) = classify(&g, &xt).unwrap();
            assert_eq!(lt.index, lab.index, "ξ = {:?}, t = {t}", class.xi);
            assert_eq!(shift_set(&ct), shift_set(&class));
        }
    }
}

#[test]
fn sphere_examples() {
    let g = Geometry::unchecked(&Lattice::square(2), ResonanceParams::unchecked(1e4, 1.0, &[0.4, 0.8]));
    assert_eq!(sphere_class(&g, &v(&[1.0, 0.0])), SphereClass::S);
    let h = 0.5f64.sqrt();
    assert_eq!(sphere_class(&g, &v(&[h, h])), SphereClass::T);
}

#[test]
fn s_fraction_small_and_decreasing() {
    let mut last = 1.0;
    for rho in [1e4, 1e5, 1e6] {
        let g = default_geo(rho);
        let (p, se) = sphere_s_fraction(&g, 100_000, 1);
        assert!(p < last - 3.0 * se, "ρ = {rho}: {p} ± {se} vs {last}");
        last = p;
    }
    assert!(last < 0.2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn class_is_an_equivalence(x in -150.0f64..150.0, y in -150.0f64..150.0) {
        let g = default_geo(100.0);
        let c = congruence_class(&g, &v(&[x, y])).unwrap();
        prop_assert!(c.shifts.iter().any(|s| s[..2] == [0, 0]));
        let ps = point_set(&c);
        for eta in c.points.iter().take(8) {
            prop_assert_eq!(&point_set(&congruence_class(&g, eta).unwrap()), &ps);
        }
    }

    #[test]
    fn small_moves_translate_the_class(x in -150.0f64..150.0, y in -150.0f64..150.0, a in 0.0f64..6.3) {
        let g = default_geo(100.0);
        let xi = v(&[x, y]);
        prop_assume!(!is_critical(&g, &xi).unwrap());
        let mu = v(&[a.cos(), a.sin()]).scale(1e-6);
        let c0 = congruence_class(&g, &xi).unwrap();
        let c1 = congruence_class(&g, &(xi + mu)).unwrap();
        let s0: BTreeSet<IVec> = c0.shifts.iter().copied().collect();
        let s1: BTreeSet<IVec> = c1.shifts.iter().copied().collect();
        prop_assert_eq!(s0, s1);
    }
}
