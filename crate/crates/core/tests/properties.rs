//! Randomised invariants of the search-space geometry and the acquisition.

use hubo_core::prelude::*;
use hubo_core::space::{envelope, expand, translate, ExpandingSpace, ExpansionConfig};
use proptest::prelude::*;

fn config() -> impl Strategy<Value = (ExpansionConfig, usize)> {
    (
        1usize..=4,
        -1.0f64..-0.05,
        -5.0f64..5.0,
        0.1f64..3.0,
        1.0f64..10.0,
    )
        .prop_map(|(d, alpha, a, w, scale)| {
            let alpha = if alpha < -0.95 { -1.0 } else { alpha };
            let c_min = a - scale * w;
            let c_max = a + w + scale * w;
            (
                ExpansionConfig::from_intervals(a, a + w, c_min, c_max, alpha, d).unwrap(),
                d,
            )
        })
}

/// Box containment up to rounding of the two summation orders.
fn inside(outer: &SearchBox, inner: &SearchBox) -> bool {
    (0..outer.dim()).all(|i| {
        let tol = 1e-12 * (outer.lower(i).abs() + outer.upper(i).abs());
        inner.lower(i) >= outer.lower(i) - tol && inner.upper(i) <= outer.upper(i) + tol
    })
}

proptest! {
    #[test]
    fn expand_then_translate_keeps_centre_in_domain(
        (cfg, d) in config(),
        targets in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 4), 1..30),
    ) {
        let mut bx = cfg.initial().clone();
        let mut space = ExpandingSpace::new(cfg.clone());
        for (i, target) in targets.iter().enumerate() {
            let t = i as u64 + 1;
            let grown = expand(&bx, t, &cfg);
            prop_assert!(grown.half_side() > bx.half_side());
            bx = translate(&grown, &target[..d], &cfg).unwrap();
            prop_assert!(cfg.domain().contains(bx.center()).unwrap());
            prop_assert!(inside(&envelope(t, &cfg), &bx));
            let tracked = space.advance(&target[..d]).unwrap();
            prop_assert!((tracked.side() - bx.side()).abs() <= 1e-12 * bx.side());
            prop_assert_eq!(tracked.center(), bx.center());
        }
    }

    #[test]
    fn clamp_lands_inside(center in prop::collection::vec(-10.0f64..10.0, 3), h in 0.01f64..5.0,
                          x in prop::collection::vec(-50.0f64..50.0, 3)) {
        let bx = SearchBox::new(center, h).unwrap();
        let c = bx.clamp(&x);
        prop_assert!(bx.contains(&c).unwrap());
        if bx.contains(&x).unwrap() {
            prop_assert_eq!(c, x);
        }
    }

    #[test]
    fn ucb_dominates_posterior_mean(
        pts in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -5.0f64..5.0), 1..12),
        q in (-3.0f64..3.0, -3.0f64..3.0),
        beta in 0.0f64..50.0,
    ) {
        let mut data = Dataset::new(2);
        for (a, b, y) in &pts {
            data.push(vec![*a, *b], *y).unwrap();
        }
        let model = GpModel::new(KernelSpec::squared_exponential(0.7, 1.5).unwrap(), 1e-3, 0.0).unwrap();
        let post = Posterior::new(model, &data).unwrap();
        let x = [q.0, q.1];
        let (mean, var) = post.predict(&x).unwrap();
        prop_assert!(var >= 0.0);
        let u = ucb(&model, &data, beta, &x).unwrap();
        prop_assert!(u >= mean);
        prop_assert!((u - (mean + beta.sqrt() * var.sqrt())).abs() <= 1e-9 * (1.0 + u.abs()));
    }

    #[test]
    fn nearest_point_is_a_member(seed in any::<u64>(), x in prop::collection::vec(-3.0f64..3.0, 2)) {
        use rand::SeedableRng;
        let parent = SearchBox::new(vec![0.0, 0.0], 1.0).unwrap();
        let cfg = HdConfig::new(1.0, 1, 0.3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let set = sample_cubes(&parent, 6, &cfg, &mut rng);
        let (p, dist) = set.nearest(&x).unwrap();
        prop_assert!(set.membership(&p).unwrap());
        prop_assert_eq!(dist == 0.0, set.membership(&x).unwrap());
    }
}
