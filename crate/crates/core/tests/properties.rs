use std::collections::BTreeSet;

use nalgebra::Vector3;
use proptest::prelude::*;

use radarcloud::cfar::{cfar, cfar_oracle, CfarAxis, CfarConfig, EdgePolicy};
use radarcloud::metrics::{evaluate, threshold_sweep, MetricConfig};
use radarcloud::{GridSpec, Point, PointCloud, RadarTensor4D, RigidTransform};

fn spec(d: usize, r: usize) -> GridSpec {
    GridSpec {
        doppler_bins: d,
        range_bins: r,
        elevation_bins: 2,
        azimuth_bins: 2,
        ..GridSpec::k_radar()
    }
}

fn tensor() -> impl Strategy<Value = RadarTensor4D> {
    (7usize..12, 12usize..24).prop_flat_map(|(d, r)| {
        prop::collection::vec(0.0f64..50.0, d * r * 4).prop_map(move |v| RadarTensor4D::new(spec(d, r), v).unwrap())
    })
}

fn config() -> impl Strategy<Value = CfarConfig> {
    (
        0usize..2,
        1usize..3,
        1usize..5,
        0.5f64..8.0,
        any::<bool>(),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(g, t, k, delta, os, doppler, clamp)| {
            let cfg = if os {
                CfarConfig::os(g, t, k.min(2 * t), delta)
            } else {
                CfarConfig::ca(g, t, delta)
            };
            cfg.with_axis(if doppler { CfarAxis::Doppler } else { CfarAxis::Range })
                .with_edge_policy(if clamp { EdgePolicy::Clamp } else { EdgePolicy::Skip })
        })
}

fn detected(t: &RadarTensor4D, cfg: &CfarConfig) -> BTreeSet<[usize; 4]> {
    cfar(t, cfg).unwrap().indices().into_iter().collect()
}

fn axis_position(cell: [usize; 4], axis: CfarAxis) -> usize {
    match axis {
        CfarAxis::Doppler => cell[0],
        CfarAxis::Range => cell[1],
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 300,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn fast_path_equals_oracle(t in tensor(), cfg in config()) {
        prop_assert_eq!(cfar(&t, &cfg).unwrap(), cfar_oracle(&t, &cfg).unwrap());
    }

    #[test]
    fn lower_delta_detects_a_superset(t in tensor(), cfg in config(), f in 0.05f64..1.0) {
        let lower = cfg.with_threshold_scale(cfg.threshold_scale * f);
        prop_assert!(detected(&t, &lower).is_superset(&detected(&t, &cfg)));
    }

    #[test]
    fn scaling_the_tensor_keeps_detections(t in tensor(), cfg in config(), exp in -6i32..6) {
        let c = 2f64.powi(exp);
        prop_assert_eq!(detected(&t.scaled(c).unwrap(), &cfg), detected(&t, &cfg));
    }

    /// Changing any cell outside a cell's window along the axis never flips
    /// that cell's decision.
    #[test]
    fn decisions_are_local(t in tensor(), cfg in config(), pick in any::<prop::sample::Index>(), other in any::<prop::sample::Index>(), v in 0.0f64..500.0) {
        let n = t.data().len();
        let cell = t.index_of(pick.index(n));
        let far = t.index_of(other.index(n));
        let reach = cfg.guard_cells + cfg.train_cells;
        let same_line = match cfg.axis {
            CfarAxis::Doppler => far[1..] == cell[1..],
            CfarAxis::Range => far[0] == cell[0] && far[2..] == cell[2..],
        };
        let inside = same_line && axis_position(far, cfg.axis).abs_diff(axis_position(cell, cfg.axis)) <= reach;
        prop_assume!(!inside);
        let mut data = t.data().to_vec();
        data[t.offset(far[0], far[1], far[2], far[3])] = v;
        let changed = RadarTensor4D::new(*t.spec(), data).unwrap();
        prop_assert_eq!(detected(&t, &cfg).contains(&cell), detected(&changed, &cfg).contains(&cell));
    }

    #[test]
    fn sweep_is_monotone(scores in prop::collection::vec(0.0f64..10.0, 1..400), mut budgets in prop::collection::vec(1usize..500, 1..6)) {
        budgets.sort_unstable();
        let entries = threshold_sweep(&scores, &budgets).unwrap();
        for w in entries.windows(2) {
            prop_assert!(w[1].threshold <= w[0].threshold);
        }
    }

    #[test]
    fn metrics_are_rigid_invariant(
        gt in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -1.0f64..1.0), 1..80),
        radar in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -1.0f64..1.0), 1..80),
        yaw in -180.0f64..180.0, tx in -20.0f64..20.0,
    ) {
        let cloud = |v: &[(f64, f64, f64)]| PointCloud::new(v.iter().map(|&(x, y, z)| Point::new(x, y, z, 1.0)).collect(), 0);
        let (gt, radar) = (cloud(&gt), cloud(&radar));
        let cfg = MetricConfig::default();
        // pairs too close to a radius are ambiguous under rounding
        let near_boundary = gt.positions().any(|g| radar.positions().any(|r| {
            let d = (g - r).norm();
            (d - cfg.density_radius).abs() < 1e-9 || (d - cfg.accuracy_radius).abs() < 1e-9
        }));
        prop_assume!(!near_boundary);
        let t = RigidTransform::from_euler_deg(3.0, -2.0, yaw, Vector3::new(tx, 1.0, 0.5));
        let before = evaluate(&gt, &radar, &cfg).unwrap();
        let after = evaluate(&gt.transformed(&t), &radar.transformed(&t), &cfg).unwrap();
        prop_assert_eq!(before, after);
        let mut union = radar.clone();
        union.extend_from(&gt);
        prop_assert_eq!(evaluate(&gt, &union, &cfg).unwrap().rpcd, 1.0);
    }
}
