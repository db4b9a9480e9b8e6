use geomreach::cones::{cone_contains, cone_subset, dual_cone, PolyhedralCone};
use geomreach::geodesics::{build_graph, GraphParams};
use geomreach::io::{parse_csv, write_csv_string};
use geomreach::linalg::{
    angle_vector_to_subspace, dist, dist_to_affine, grassmann_angle, grassmann_sine_distance, norm,
    principal_angles, projector_distance, sub,
};
use geomreach::patch::operator_norm_angle_bound;
use geomreach::reach::{distortion_radius, federer_reach};
use geomreach::shapes::Shape;
use geomreach::{LinearMap, PointCloud, Subspace};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn subspace(d: usize, k: usize, entries: &[f64]) -> Option<Subspace> {
    let vecs: Vec<&[f64]> = entries.chunks(d).take(k).collect();
    let s = Subspace::span(d, &vecs).ok()?;
    (s.dim() == k).then_some(s)
}

/// Ambient dimension, subspace dimension and raw entries for three subspaces.
fn three_subspaces() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (2usize..=5)
        .prop_flat_map(|d| (Just(d), 1..d))
        .prop_flat_map(|(d, k)| (Just(d), Just(k), prop::collection::vec(-1.0..1.0f64, 3 * d * k)))
}

fn cone_gens() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (1usize..=4).prop_flat_map(|d| {
        (
            Just(d),
            prop::collection::vec(prop::collection::vec(-1.0..1.0f64, d), 1..=d + 2),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn grassmann_angle_is_a_metric((d, k, e) in three_subspaces()) {
        let n = d * k;
        let (Some(a), Some(b), Some(c)) = (subspace(d, k, &e[..n]), subspace(d, k, &e[n..2 * n]), subspace(d, k, &e[2 * n..])) else {
            return Err(TestCaseError::reject("degenerate span"));
        };
        let ab = grassmann_angle(&a, &b).unwrap();
        let ba = grassmann_angle(&b, &a).unwrap();
        let bc = grassmann_angle(&b, &c).unwrap();
        let ac = grassmann_angle(&a, &c).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!(grassmann_angle(&a, &a).unwrap() < 1e-7);
        let sab = grassmann_sine_distance(&a, &b).unwrap();
        let sbc = grassmann_sine_distance(&b, &c).unwrap();
        let sac = grassmann_sine_distance(&a, &c).unwrap();
        prop_assert!(sac <= sab + sbc + 1e-12);
    }

    #[test]
    fn sine_routes_and_principal_angles_agree((d, k, e) in three_subspaces()) {
        let n = d * k;
        let (Some(a), Some(b)) = (subspace(d, k, &e[..n]), subspace(d, k, &e[n..2 * n])) else {
            return Err(TestCaseError::reject("degenerate span"));
        };
        let by_angle = grassmann_sine_distance(&a, &b).unwrap();
        let by_projectors = projector_distance(&a, &b).unwrap();
        prop_assert!((by_angle - by_projectors).abs() < 1e-9, "{by_angle} vs {by_projectors}");

        let ab = principal_angles(&a, &b).unwrap();
        let ba = principal_angles(&b, &a).unwrap();
        prop_assert_eq!(ab.len(), k);
        for (x, y) in ab.iter().zip(&ba) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        prop_assert!(ab.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        let max = ab.last().copied().unwrap();
        prop_assert!((max - grassmann_angle(&a, &b).unwrap()).abs() < 1e-9);

        // Complements of equal-dimension subspaces are as far apart as the
        // subspaces themselves.
        let comp = grassmann_angle(&a.orthogonal_complement(), &b.orthogonal_complement()).unwrap();
        prop_assert!((comp - max).abs() < 1e-9, "{comp} vs {max}");
    }

    #[test]
    fn affine_distance_is_pythagorean(
        (d, k, e) in three_subspaces(),
        q in prop::collection::vec(-3.0..3.0f64, 5),
        base in prop::collection::vec(-3.0..3.0f64, 5),
    ) {
        let Some(t) = subspace(d, k, &e[..d * k]) else {
            return Err(TestCaseError::reject("degenerate span"));
        };
        let (q, base) = (&q[..d], &base[..d]);
        let off = sub(q, base);
        let along = norm(&t.project(&off));
        let across = dist_to_affine(q, base, &t).unwrap();
        let total = norm(&off);
        prop_assert!((along * along + across * across - total * total).abs() < 1e-9 * (1.0 + total * total));
        if total > 1e-6 {
            let angle = angle_vector_to_subspace(&off, &t).unwrap();
            prop_assert!((angle.sin() * total - across).abs() < 1e-9 * (1.0 + total));
        }
    }

    #[test]
    fn dual_of_dual_and_containment_reversal((d, gens) in cone_gens(), extra in prop::collection::vec(-1.0..1.0f64, 4)) {
        prop_assume!(gens.iter().all(|g| norm(g) > 1e-3));
        let c = PolyhedralCone::new(d, &gens).unwrap();
        let cd = dual_cone(&c).unwrap();
        let cdd = dual_cone(&cd).unwrap();
        for g in c.generators() {
            prop_assert!(cone_contains(&cdd, g, 1e-8));
        }
        for g in cdd.generators() {
            prop_assert!(cone_contains(&c, g, 1e-8));
        }
        // Each dual generator is polar to every generator of the cone.
        for h in cd.generators() {
            for g in c.generators() {
                prop_assert!(h.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() <= 1e-9);
            }
        }
        let mut bigger = gens.clone();
        bigger.push(extra[..d].to_vec());
        prop_assume!(norm(&extra[..d]) > 1e-3);
        let big = PolyhedralCone::new(d, &bigger).unwrap();
        prop_assert!(cone_subset(&c, &big, 1e-9));
        prop_assert!(cone_subset(&dual_cone(&big).unwrap(), &cd, 1e-8));
    }

    #[test]
    fn graph_distances_dominate_chords(
        coords in prop::collection::vec(-1.0..1.0f64, 3 * 30),
        k in 1usize..6,
    ) {
        let cloud = PointCloud::new(3, coords).unwrap();
        let g = build_graph(&cloud, GraphParams::Knn(k)).unwrap();
        let rows: Vec<Vec<f64>> = (0..cloud.len()).map(|i| g.distances_from(i)).collect();
        for i in 0..cloud.len() {
            for j in 0..cloud.len() {
                let h = dist(cloud.point(i), cloud.point(j));
                prop_assert!(rows[i][j] >= h * (1.0 - 1e-12));
                prop_assert!(rows[i][j] == rows[j][i] || (rows[i][j] - rows[j][i]).abs() <= 1e-12 * (1.0 + rows[i][j]));
                for m in 0..cloud.len() {
                    prop_assert!(rows[i][j] <= rows[i][m] + rows[m][j] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn operator_norm_bounds_graph_angle(
        (m, n) in (1usize..=5, 1usize..=5),
        a in prop::collection::vec(-3.0..3.0f64, 25),
        b in prop::collection::vec(-3.0..3.0f64, 25),
    ) {
        let f1 = LinearMap::new(DMatrix::from_row_slice(m, n, &a[..m * n])).unwrap();
        let f2 = LinearMap::new(DMatrix::from_row_slice(m, n, &b[..m * n])).unwrap();
        let bound = operator_norm_angle_bound(&f1, &f2).unwrap();
        prop_assert!(bound.lhs <= bound.rhs + 1e-12, "{bound:?}");
        prop_assert!(bound.pass);
    }

    #[test]
    fn distortion_radius_inverts_the_arc_relation(r in 0.1..10.0f64, frac in 0.05..0.95f64) {
        let h = 2.0 * r * frac;
        let ell = 2.0 * r * (h / (2.0 * r)).asin();
        let got = distortion_radius(h, ell).unwrap();
        prop_assert!(!got.semicircle_exceeded);
        prop_assert!((got.radius - r).abs() <= 1e-8 * r, "{} vs {r}", got.radius);
    }

    #[test]
    fn federer_reach_scales_exactly_by_powers_of_two(a in 1.0..3.0f64, b in 0.3..1.0f64, p in -3i32..4, seed in 0u64..100) {
        let s = Shape::Ellipse { a, b }.generate(200, seed).unwrap();
        let f = 2f64.powi(p);
        let base = federer_reach(&s.cloud).unwrap();
        let scaled = federer_reach(&s.cloud.scaled(f)).unwrap();
        prop_assert_eq!(scaled.value, base.value * f);
        prop_assert_eq!(scaled.pair, base.pair);
    }

    #[test]
    fn csv_round_trip_is_exact(coords in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, 2..40)) {
        let even = coords.len() / 2 * 2;
        let cloud = PointCloud::new(2, coords[..even].to_vec()).unwrap();
        let back = parse_csv(&write_csv_string(&cloud)).unwrap();
        for (x, y) in back.coords().iter().zip(cloud.coords()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

/// Value of a defining function that vanishes on the shape, and its gradient.
fn implicit(shape: &Shape, p: &[f64]) -> Option<(f64, Vec<f64>)> {
    match *shape {
        Shape::Circle { radius } | Shape::Sphere { radius } => {
            Some((norm(p) - radius, p.iter().map(|x| x / norm(p)).collect()))
        }
        Shape::Ellipse { a, b } => {
            let v = (p[0] / a).powi(2) + (p[1] / b).powi(2) - 1.0;
            Some((v, vec![2.0 * p[0] / (a * a), 2.0 * p[1] / (b * b)]))
        }
        Shape::Torus { major, minor } => {
            let rho = p[0].hypot(p[1]);
            let v = (rho - major).hypot(p[2]) - minor;
            let s = (rho - major) / rho;
            Some((v, vec![p[0] * s, p[1] * s, p[2]]))
        }
        _ => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_frames_are_tangent(
        which in 0usize..4,
        size in 0.5..2.0f64,
        ratio in 0.2..0.45f64,
        seed in 0u64..1000,
    ) {
        let shape = match which {
            0 => Shape::Circle { radius: size },
            1 => Shape::Sphere { radius: size },
            2 => Shape::Ellipse { a: size + 0.5, b: size },
            _ => Shape::Torus { major: size, minor: ratio * size },
        };
        let s = shape.generate(64, seed).unwrap();
        let (d, n) = shape.dims();
        prop_assert_eq!(s.cloud.dim(), d);
        for i in 0..s.cloud.len() {
            let p = s.cloud.point(i);
            let t = s.cloud.tangent(i).unwrap();
            prop_assert_eq!(t.dim(), n);
            let basis = t.basis();
            let gram = basis.transpose() * basis;
            prop_assert!((gram - DMatrix::identity(n, n)).amax() < 1e-12);
            let (value, grad) = implicit(&shape, p).unwrap();
            prop_assert!(value.abs() < 1e-12 * (1.0 + size), "off the shape by {value}");
            let gn = norm(&grad);
            for j in 0..n {
                let c: f64 = t.basis_vector(j).iter().zip(&grad).map(|(x, y)| x * y).sum();
                prop_assert!(c.abs() < 1e-10 * gn, "tangent not orthogonal to the normal");
            }
        }
    }
}
