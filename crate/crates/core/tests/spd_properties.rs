mod common;

use common::*;
use mspd_core::{initial_clusters, spd_flow};
use proptest::prelude::*;

#[test]
fn matches_stepping_integrator() {
    let mut r = rng(11);
    for trial in 0..60 {
        let n = 2 + trial % 5;
        let x = if trial % 2 == 0 {
            tied_positions(&mut r, n)
        } else {
            config(&mut r, 1, n).into_rows().remove(0)
        };
        let v = velocities(&mut r, n);
        let t = 1.5;
        let (state, _) = spd_flow(&x, &v, t).unwrap();
        let oracle = stepping_spd(&x, &v, t);
        let err = max_abs_diff(&state.positions(), &oracle);
        assert!(err < 1e-9, "trial {trial}: x={x:?} v={v:?} err={err}");
    }
}

#[test]
fn initial_clusters_match_definition() {
    let mut r = rng(5);
    for _ in 0..300 {
        let n = 1 + r.random_range(0..7usize);
        let x = tied_positions(&mut r, n);
        let v = velocities(&mut r, n);
        let got: Vec<(usize, usize)> = initial_clusters(&x, &v)
            .unwrap()
            .iter()
            .map(|c| (c.start, c.end))
            .collect();
        assert_eq!(got, definition_clusters(&x, &v), "x={x:?} v={v:?}");
    }
}

use rand::Rng;

fn lp(a: &[f64], b: &[f64], p: f64) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    if p.is_infinite() {
        d.fold(0.0, f64::max)
    } else {
        d.map(|t| t.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn momentum_order_and_velocity_bounds(
        x in prop::collection::vec(-2.0f64..2.0, 1..12).prop_map(sorted),
        seed in any::<u64>(),
        t in 0.0f64..3.0,
    ) {
        let mut r = rng(seed);
        let v: Vec<f64> = (0..x.len()).map(|_| r.random_range(-1.0..1.0)).collect();
        let (state, _) = spd_flow(&x, &v, t).unwrap();
        let pos = state.positions();
        let expect = x.iter().sum::<f64>() + t * v.iter().sum::<f64>();
        let got: f64 = pos.iter().sum();
        prop_assert!((got - expect).abs() <= 1e-10 * (1.0 + expect.abs() + x.len() as f64));
        prop_assert!(pos.windows(2).all(|w| w[0] <= w[1]));
        let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), &u| (a.min(u), b.max(u)));
        for u in state.velocities() {
            prop_assert!(u >= lo - 1e-12 && u <= hi + 1e-12);
        }
        // stability condition inside every cluster
        for c in state.clusters() {
            for j in c.start + 1..c.end {
                let left = v[c.start..j].iter().sum::<f64>() / (j - c.start) as f64;
                let right = v[j..c.end].iter().sum::<f64>() / (c.end - j) as f64;
                prop_assert!(left >= right - 1e-9);
            }
        }
    }

    #[test]
    fn clusters_only_grow(
        x in prop::collection::vec(-2.0f64..2.0, 2..10).prop_map(sorted),
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let v: Vec<f64> = (0..x.len()).map(|_| r.random_range(-1.0..1.0)).collect();
        let mut prev: Option<Vec<(usize, usize)>> = None;
        for i in 1..=10 {
            let (s, _) = spd_flow(&x, &v, 0.3 * i as f64).unwrap();
            let now: Vec<(usize, usize)> = s.clusters().iter().map(|c| (c.start, c.end)).collect();
            if let Some(p) = prev {
                for (a, b) in p {
                    prop_assert!(now.iter().any(|&(c, d)| c <= a && b <= d));
                }
            }
            prev = Some(now);
        }
    }

    #[test]
    fn contraction_and_perturbation_bound(
        x in prop::collection::vec(-2.0f64..2.0, 2..10).prop_map(sorted),
        seed in any::<u64>(),
    ) {
        let n = x.len();
        let mut r = rng(seed);
        let y = sorted((0..n).map(|_| r.random_range(-2.0..2.0)).collect());
        let v: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let mu: Vec<f64> = v.iter().map(|a| a + r.random_range(-0.2..0.2)).collect();
        for p in [1.0, 2.0, f64::INFINITY] {
            let mut last = lp(&x, &y, p);
            for i in 1..=12 {
                let t = 0.25 * i as f64;
                let (a, _) = spd_flow(&x, &v, t).unwrap();
                let (b, _) = spd_flow(&y, &v, t).unwrap();
                let now = lp(&a.positions(), &b.positions(), p);
                prop_assert!(now <= last + 1e-9, "p={p}: {now} > {last}");
                last = now;
            }
        }
        let l1_0 = lp(&x, &y, 1.0);
        let dv: f64 = v.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        for i in 1..=8 {
            let t = 0.4 * i as f64;
            let (a, _) = spd_flow(&x, &v, t).unwrap();
            let (b, _) = spd_flow(&y, &mu, t).unwrap();
            prop_assert!(lp(&a.positions(), &b.positions(), 1.0) <= l1_0 + t * dv + 1e-9);
        }
    }

    #[test]
    fn flow_property(
        x in prop::collection::vec(-2.0f64..2.0, 1..10).prop_map(sorted),
        seed in any::<u64>(),
        s in 0.0f64..2.0,
        t in 0.0f64..2.0,
    ) {
        let mut r = rng(seed);
        let v: Vec<f64> = (0..x.len()).map(|_| r.random_range(-1.0..1.0)).collect();
        let (direct, _) = spd_flow(&x, &v, s + t).unwrap();
        let (mid, _) = spd_flow(&x, &v, s).unwrap();
        let (two, _) = spd_flow(&mid.positions(), &v, t).unwrap();
        prop_assert!(max_abs_diff(&direct.positions(), &two.positions()) <= 1e-9);
    }
}

#[test]
fn simultaneous_merges_are_order_independent() {
    // mirror image of a configuration evolves as the mirror image
    let mut r = rng(21);
    for _ in 0..100 {
        let n = 2 + r.random_range(0..6usize);
        let x = tied_positions(&mut r, n);
        let v = velocities(&mut r, n);
        let xm: Vec<f64> = x.iter().rev().map(|a| -a).collect();
        let vm: Vec<f64> = v.iter().rev().map(|a| -a).collect();
        let (a, _) = spd_flow(&x, &v, 2.0).unwrap();
        let (b, _) = spd_flow(&xm, &vm, 2.0).unwrap();
        let bm: Vec<f64> = b.positions().iter().rev().map(|a| -a).collect();
        assert!(max_abs_diff(&a.positions(), &bm) < 1e-12, "x={x:?} v={v:?}");
    }
}
