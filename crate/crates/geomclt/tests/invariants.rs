//! Structural properties of the geometry, complex, and homology layers,
//! plus null-hypothesis calibration of the statistics kit. Randomized
//! properties run under proptest with a small case budget; calibration
//! batteries use fixed seeds and generous rejection allowances.

mod common;

use geomclt::cech::{build_cech, SimplicialComplex};
use geomclt::functionals::{evaluate, FunctionalSpec};
use geomclt::geometry::{distance, min_enclosing_ball, simplex_in_cech, Point, Window};
use geomclt::homology::{betti_numbers, BettiVector};
use geomclt::point_process::{sample_homogeneous, PointCloud, RngStream};
use geomclt::stats::{chi_square_gof, normal_cdf, one_sample_ks, paired_variance_gt, two_sample_ks};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn cloud_from(dim: usize, coords: &[Vec<f64>]) -> PointCloud {
    let points = coords.iter().map(|c| Point::new(c.clone())).collect();
    PointCloud::new(dim, points).unwrap()
}

fn full_betti(cloud: &PointCloud, r: f64) -> BettiVector {
    let k_max = cloud.len().saturating_sub(1).max(1);
    let complex = build_cech(cloud, r, k_max).unwrap();
    betti_numbers(&complex, k_max).unwrap()
}

/// Rotation about the origin (d = 2) or about the z then x axes (d = 3),
/// followed by a translation. Distances are preserved exactly up to
/// floating-point rounding.
fn rigid_motion(coords: &[Vec<f64>], theta: f64, phi: f64, shift: &[f64]) -> Vec<Vec<f64>> {
    coords
        .iter()
        .map(|c| {
            let mut p = c.clone();
            let (s, co) = theta.sin_cos();
            let (x, y) = (p[0], p[1]);
            p[0] = co * x - s * y;
            p[1] = s * x + co * y;
            if p.len() == 3 {
                let (s2, c2) = phi.sin_cos();
                let (y, z) = (p[1], p[2]);
                p[1] = c2 * y - s2 * z;
                p[2] = s2 * y + c2 * z;
            }
            for (pi, sh) in p.iter_mut().zip(shift) {
                *pi += sh;
            }
            p
        })
        .collect()
}

fn small_cloud() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (2usize..=3).prop_flat_map(|d| {
        (
            Just(d),
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d..=d), 1..=8),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 32,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn two_point_miniball_is_diametral((d, a, b) in (2usize..=3).prop_flat_map(|d| {
        let coord = prop::collection::vec(-5.0f64..5.0, d..=d);
        (Just(d), coord.clone(), coord)
    })) {
        let pa = Point::new(a);
        let pb = Point::new(b);
        let ball = min_enclosing_ball(&[pa.clone(), pb.clone()]).unwrap();
        let half = distance(&pa, &pb).unwrap() / 2.0;
        prop_assert!((ball.radius - half).abs() <= 1e-12);
        let da = distance(&ball.center, &pa).unwrap();
        let db = distance(&ball.center, &pb).unwrap();
        prop_assert!((da - db).abs() <= 1e-9);
        prop_assert_eq!(ball.center.dim(), d);
    }

    #[test]
    fn miniball_covers_and_matches_subset_oracle((d, coords) in small_cloud()) {
        let points: Vec<Point> = coords.iter().map(|c| Point::new(c.clone())).collect();
        let ball = min_enclosing_ball(&points).unwrap();
        for p in &points {
            prop_assert!(distance(&ball.center, p).unwrap() <= ball.radius + 1e-9);
        }
        let cloud = cloud_from(d, &coords);
        let oracle = common::oracle_min_ball_radius(&cloud.points);
        prop_assert!((ball.radius - oracle).abs() <= 1e-9,
            "engine {} vs oracle {}", ball.radius, oracle);
    }

    #[test]
    fn cech_complex_grows_with_radius(
        (d, coords) in small_cloud(),
        r1 in 0.05f64..0.8,
        dr in 0.01f64..0.8,
    ) {
        let cloud = cloud_from(d, &coords);
        let k_max = coords.len().saturating_sub(1).max(1);
        let small = build_cech(&cloud, r1, k_max).unwrap();
        let large = build_cech(&cloud, r1 + dr, k_max).unwrap();
        for k in 0..=k_max {
            for s in &small.simplices[k] {
                prop_assert!(large.simplices[k].binary_search(s).is_ok(),
                    "{s:?} lost when r grew");
            }
        }
    }

    #[test]
    fn betti_and_miniball_are_rigid_motion_invariant(
        (d, coords) in small_cloud(),
        theta in 0.0f64..std::f64::consts::TAU,
        phi in 0.0f64..std::f64::consts::TAU,
        shift in prop::collection::vec(-4.0f64..4.0, 3),
        r in 0.2f64..1.0,
    ) {
        let moved = rigid_motion(&coords, theta, phi, &shift[..d]);
        let a = cloud_from(d, &coords);
        let b = cloud_from(d, &moved);
        prop_assert_eq!(full_betti(&a, r).values, full_betti(&b, r).values);
        let ra = min_enclosing_ball(&a.points).unwrap().radius;
        let rb = min_enclosing_ball(&b.points).unwrap().radius;
        prop_assert!((ra - rb).abs() <= 1e-9, "radius moved {ra} to {rb}");
    }

    #[test]
    fn duplicated_point_leaves_betti_unchanged(
        (d, coords) in small_cloud(),
        pick in any::<prop::sample::Index>(),
        r in 0.2f64..1.0,
    ) {
        let mut doubled = coords.clone();
        doubled.push(coords[pick.index(coords.len())].clone());
        let a = cloud_from(d, &coords);
        let b = cloud_from(d, &doubled);
        // Shared cap keeps the two Betti vectors the same length; it is one
        // past the largest simplex either cloud can produce, so both stay
        // exact.
        let k_max = doubled.len().saturating_sub(1).max(1);
        let ca = build_cech(&a, r, k_max).unwrap();
        let cb = build_cech(&b, r, k_max).unwrap();
        prop_assert_eq!(
            betti_numbers(&ca, k_max).unwrap().values,
            betti_numbers(&cb, k_max).unwrap().values
        );
    }

    #[test]
    fn config_types_round_trip_through_json((d, coords) in small_cloud(), r in 0.1f64..1.0) {
        let spec = FunctionalSpec::BettiK { k: 1, r };
        let spec2: FunctionalSpec =
            serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        prop_assert_eq!(spec, spec2);

        let cloud = cloud_from(d, &coords);
        let cloud2: PointCloud =
            serde_json::from_str(&serde_json::to_string(&cloud).unwrap()).unwrap();
        prop_assert_eq!(cloud, cloud2);
    }
}

/// Random abstract complexes (not Čech-built): downward closures of random
/// maximal vertex sets. Exercises the reduction away from geometric inputs.
#[test]
fn reduction_matches_oracle_on_abstract_complexes() {
    for seed in 0..40u64 {
        let mut rng = RngStream::new(0xAB5EED + seed, 0).rng();
        let v = rng.random_range(3..=8usize);
        let generators = rng.random_range(1..=5usize);
        let mut masks: Vec<u32> = Vec::new();
        for _ in 0..generators {
            masks.push(rng.random_range(1..(1u32 << v)));
        }
        let mut by_dim: Vec<std::collections::BTreeSet<Vec<u32>>> = vec![Default::default(); v];
        for vertex in 0..v as u32 {
            by_dim[0].insert(vec![vertex]);
        }
        for &m in &masks {
            for sub in 1..(1u32 << v) {
                if sub & m == sub {
                    let simplex: Vec<u32> =
                        (0..v as u32).filter(|i| sub >> i & 1 == 1).collect();
                    by_dim[simplex.len() - 1].insert(simplex);
                }
            }
        }
        let cap = by_dim.iter().rposition(|s| !s.is_empty()).unwrap();
        let lists: Vec<Vec<Vec<u32>>> = by_dim[..=cap]
            .iter()
            .map(|s| s.iter().cloned().collect())
            .collect();
        let complex = SimplicialComplex::from_simplices(v, cap, lists).unwrap();
        assert!(complex.is_downward_closed());
        let engine = betti_numbers(&complex, cap).unwrap();
        let oracle = common::oracle_betti(&complex, cap);
        assert_eq!(engine.values, oracle, "seed {seed}");
    }
}

#[test]
fn functionals_add_over_distant_clusters() {
    let specs = [
        FunctionalSpec::BettiK { k: 0, r: 0.6 },
        FunctionalSpec::BettiK { k: 1, r: 0.6 },
        FunctionalSpec::ComponentCount { r: 0.6 },
    ];
    for seed in 0..10u64 {
        let a = common::random_cloud(25, 2, 5.0, 0xADD + seed);
        let far: Vec<Vec<f64>> = common::random_cloud(20, 2, 5.0, 0xBEE + seed)
            .points
            .iter()
            .map(|p| vec![p.coords[0] + 1000.0, p.coords[1]])
            .collect();
        let b = cloud_from(2, &far);
        let mut both = a.points.clone();
        both.extend_from_slice(&b.points);
        let union = PointCloud::new(2, both).unwrap();
        for spec in &specs {
            let ha = evaluate(spec, &a).unwrap();
            let hb = evaluate(spec, &b).unwrap();
            let hu = evaluate(spec, &union).unwrap();
            assert_eq!(hu, ha + hb, "{} seed {seed}", spec.label());
        }
    }
}

/// Čech complexes of planar clouds are nerves of good covers in the plane,
/// so nothing above dimension 1 survives in homology.
#[test]
fn planar_clouds_carry_no_second_homology() {
    for seed in 0..20u64 {
        let cloud = common::random_cloud(12, 2, 3.0, 0x2D + seed);
        let complex = build_cech(&cloud, 0.8, 3).unwrap();
        let betti = betti_numbers(&complex, 2).unwrap();
        assert_eq!(betti.values[2], 0, "seed {seed}");
    }
}

#[test]
fn known_triangles_pin_the_miniball() {
    let obtuse = [
        Point::new(vec![0.0, 0.0]),
        Point::new(vec![4.0, 0.0]),
        Point::new(vec![1.0, 0.5]),
    ];
    let ball = min_enclosing_ball(&obtuse).unwrap();
    assert!((ball.radius - 2.0).abs() <= 1e-12);
    assert!((ball.center.coords[0] - 2.0).abs() <= 1e-12);
    assert!(ball.center.coords[1].abs() <= 1e-12);
    assert!(simplex_in_cech(&obtuse, 2.0).unwrap());
    assert!(!simplex_in_cech(&obtuse, 1.999_999).unwrap());

    let equilateral = [
        Point::new(vec![0.0, 0.0]),
        Point::new(vec![1.0, 0.0]),
        Point::new(vec![0.5, 0.75f64.sqrt()]),
    ];
    let ball = min_enclosing_ball(&equilateral).unwrap();
    let circumradius = 1.0 / 3.0f64.sqrt();
    assert!((ball.radius - circumradius).abs() <= 1e-12);
    assert!(simplex_in_cech(&equilateral, circumradius + 1e-9).unwrap());
    assert!(!simplex_in_cech(&equilateral, circumradius - 1e-6).unwrap());
}

#[test]
fn miniball_agrees_with_grid_search_on_triples() {
    for seed in 0..5u64 {
        let cloud = common::random_cloud(3, 2, 2.0, 0x9123 + seed);
        let pts = &cloud.points;
        let ball = min_enclosing_ball(pts).unwrap();
        let step = 2e-3;
        let mut best = f64::INFINITY;
        let (cx, cy) = (ball.center.coords[0], ball.center.coords[1]);
        let mut y = cy - 0.1;
        while y <= cy + 0.1 {
            let mut x = cx - 0.1;
            while x <= cx + 0.1 {
                let center = Point::new(vec![x, y]);
                let reach = pts
                    .iter()
                    .map(|p| distance(&center, p).unwrap())
                    .fold(0.0f64, f64::max);
                best = best.min(reach);
                x += step;
            }
            y += step;
        }
        assert!(
            best + 1e-12 >= ball.radius && best - ball.radius <= 4e-3,
            "grid {best} vs engine {} at seed {seed}",
            ball.radius
        );
    }
}

#[test]
fn one_sample_ks_holds_its_level() {
    let mut rejections = 0;
    let mut p_sum = 0.0;
    for batch in 0..200u64 {
        let mut rng = RngStream::new(0x1CA1, batch).rng();
        let sample: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (_, p) = one_sample_ks(&sample, normal_cdf).unwrap();
        p_sum += p;
        if p < 0.01 {
            rejections += 1;
        }
    }
    assert!(rejections <= 8, "{rejections} rejections in 200 null batches");
    let mean_p = p_sum / 200.0;
    assert!((0.35..=0.65).contains(&mean_p), "mean null p drifted to {mean_p}");
}

#[test]
fn two_sample_ks_holds_its_level() {
    let mut rejections = 0;
    for batch in 0..200u64 {
        let mut rng = RngStream::new(0x2CA1, batch).rng();
        let a: Vec<f64> = (0..300).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..300).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (_, p) = two_sample_ks(&a, &b).unwrap();
        if p < 0.01 {
            rejections += 1;
        }
    }
    assert!(rejections <= 8, "{rejections} rejections in 200 null batches");
}

/// Conditional on the total, homogeneous Poisson counts spread uniformly
/// over congruent quadrants, so the chi-square statistic is on its null.
#[test]
fn chi_square_holds_its_level_on_quadrant_counts() {
    let window = Window::cube(10.0, 2).unwrap();
    let mut rejections = 0;
    for batch in 0..100u64 {
        let cloud = sample_homogeneous(2.0, &window, RngStream::new(0x3CA1, batch)).unwrap();
        let mut observed = [0.0f64; 4];
        for p in &cloud.points {
            let ix = (p.coords[0] >= 5.0) as usize;
            let iy = (p.coords[1] >= 5.0) as usize;
            observed[ix + 2 * iy] += 1.0;
        }
        let total: f64 = observed.iter().sum();
        let expected = [total / 4.0; 4];
        let (_, p) = chi_square_gof(&observed, &expected).unwrap();
        if p < 0.01 {
            rejections += 1;
        }
    }
    assert!(rejections <= 5, "{rejections} rejections in 100 null batches");
}

/// Correlated pairs with equal marginal variances sit on the null of the
/// paired one-sided variance test.
#[test]
fn paired_variance_test_holds_its_level() {
    let mut rejections = 0;
    for batch in 0..300u64 {
        let mut rng = RngStream::new(0x4CA1, batch).rng();
        let mut a = Vec::with_capacity(200);
        let mut b = Vec::with_capacity(200);
        for _ in 0..200 {
            let x: f64 = StandardNormal.sample(&mut rng);
            let z: f64 = StandardNormal.sample(&mut rng);
            a.push(x);
            b.push(0.8 * x + 0.6 * z);
        }
        let (_, p) = paired_variance_gt(&a, &b).unwrap();
        if p < 0.01 {
            rejections += 1;
        }
    }
    assert!(rejections <= 10, "{rejections} rejections in 300 null batches");
}

#[test]
fn paired_variance_test_detects_inflation() {
    let mut rng = RngStream::new(0x5CA1, 0).rng();
    let mut a = Vec::with_capacity(400);
    let mut b = Vec::with_capacity(400);
    for _ in 0..400 {
        let x: f64 = StandardNormal.sample(&mut rng);
        let z: f64 = StandardNormal.sample(&mut rng);
        a.push(1.3 * x);
        b.push(0.8 * x + 0.6 * z);
    }
    let (_, p) = paired_variance_gt(&a, &b).unwrap();
    assert!(p < 1e-6, "inflated variance went undetected, p = {p}");
}
