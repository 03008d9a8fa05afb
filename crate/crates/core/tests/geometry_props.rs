use glmp_core::generate::UniformStream;
use glmp_core::oracle::sample_simplex;
use glmp_core::simplex_geom::{barycentric, bisect, contains, initial_simplex, longest_edge, volume};
use glmp_core::{BoundsBox, ParamPoint, SimplexNode};
use proptest::prelude::*;

fn random_simplex(dim: usize, seed: u64) -> SimplexNode {
    let mut rng = UniformStream::new(seed);
    let points = (0..=dim)
        .map(|_| ParamPoint::new((0..dim).map(|_| rng.between(0.1, 2.0)).collect()).unwrap())
        .collect();
    SimplexNode::from_points(0, points).unwrap()
}

fn random_box(dim: usize, seed: u64) -> BoundsBox {
    let mut rng = UniformStream::new(seed);
    let lower: Vec<f64> = (0..dim).map(|_| rng.between(0.05, 1.0)).collect();
    let upper = lower.iter().map(|l| l + rng.between(0.01, 2.0)).collect();
    BoundsBox::new(lower, upper).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bisection_preserves_volume(dim in 1usize..=5, seed in any::<u64>()) {
        let node = random_simplex(dim, seed);
        let (a, b) = bisect(&node, 1).unwrap();
        let (v, va, vb) = (volume(&node).unwrap(), volume(&a).unwrap(), volume(&b).unwrap());
        prop_assert!((v - va - vb).abs() <= 1e-9 * (1.0 + v), "{v} vs {va} + {vb}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn children_share_midpoint_and_shrink(dim in 1usize..=5, seed in any::<u64>()) {
        let node = random_simplex(dim, seed);
        let (i, j, len) = longest_edge(&node);
        let (a, b) = bisect(&node, 1).unwrap();
        let mid: Vec<f64> = node.vertices[i].point().iter()
            .zip(node.vertices[j].point().iter())
            .map(|(p, q)| 0.5 * (p + q))
            .collect();
        for child in [&a, &b] {
            prop_assert!(child.points().any(|p| p.as_ref() == mid.as_slice()));
            prop_assert!(longest_edge(child).2 <= len);
        }
        let mut rng = UniformStream::new(seed);
        let pts: Vec<&ParamPoint> = node.points().collect();
        for t in sample_simplex(&pts, &mut rng, 20) {
            prop_assert!(contains(&a, &t).unwrap() || contains(&b, &t).unwrap());
        }
    }

    #[test]
    fn diameter_falls_along_any_chain(dim in 1usize..=5, seed in any::<u64>()) {
        let mut node = random_simplex(dim, seed);
        let mut rng = UniformStream::new(seed ^ 1);
        let window = dim * (dim + 1) / 2;
        let mut history = vec![longest_edge(&node).2];
        for _ in 0..4 * window {
            let (a, b) = bisect(&node, 0).unwrap();
            node = if rng.uniform() < 0.5 { a } else { b };
            history.push(longest_edge(&node).2);
        }
        prop_assert!(history.windows(2).all(|w| w[1] <= w[0]));
        for w in history.windows(window + 1) {
            prop_assert!(w[window] < w[0], "no decrease within {window} steps: {w:?}");
        }
    }

    #[test]
    fn initial_simplex_covers_box(dim in 1usize..=6, seed in any::<u64>()) {
        let bounds = random_box(dim, seed);
        let s0 = initial_simplex(&bounds).unwrap();
        let mut rng = UniformStream::new(seed);
        for _ in 0..20 {
            let t: Vec<f64> = bounds.t_lower().iter().zip(bounds.t_upper())
                .map(|(lo, hi)| rng.between(*lo, *hi))
                .collect();
            let w = barycentric(&s0, &t).unwrap();
            prop_assert!(w.iter().all(|v| *v >= -1e-10));
        }
    }
}
