use proptest::prelude::*;

use dynkde::harness::{check_lipschitz, exact_kde, level_sizes, DatasetSpec, Generator};
use dynkde::lsh::CollisionModel;
use dynkde::stats::lower_median;
use dynkde::{weight_level_of, KdeConfig, KernelKind, KernelSpec, LevelSchedule, LshParams, LshTable, PointSet};

fn kernel() -> impl Strategy<Value = KernelSpec> {
    (prop_oneof![Just(KernelKind::Gaussian), Just(KernelKind::Exponential)], 0.05f64..5.0)
        .prop_map(|(k, bw)| KernelSpec::new(k, bw).unwrap())
}

fn generator() -> impl Strategy<Value = Generator> {
    prop::sample::select(Generator::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn levels_partition_and_respect_size_bound(
        k in kernel(),
        g in generator(),
        seed in any::<u64>(),
        q in prop::collection::vec(-2.0f64..2.0, 3),
        levels in 1u32..8,
    ) {
        let pts = DatasetSpec::new(g, 150, 3, seed).generate();
        let sizes = level_sizes(&pts, &k, &q, levels);
        prop_assert_eq!(sizes.iter().sum::<usize>(), pts.len());
        let f = exact_kde(&pts, &k, &q).unwrap();
        for r in 1..=levels {
            let bound = 2f64.powi(r as i32) * pts.len() as f64 * f;
            prop_assert!(sizes[r as usize - 1] as f64 <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn lipschitz_holds(
        k in kernel(),
        g in generator(),
        q1 in prop::collection::vec(-3.0f64..3.0, 2),
        q2 in prop::collection::vec(-3.0f64..3.0, 2),
    ) {
        let pts = DatasetSpec::new(g, 60, 2, 5).generate();
        prop_assert!(check_lipschitz(&pts, &k, &q1, &q2).unwrap());
    }

    #[test]
    fn schedule_invariants(k in kernel(), n in 1usize..100_000, f in 0.001f64..0.999) {
        let cfg = KdeConfig::default();
        let s = LevelSchedule::build(&k, n, f, &cfg).unwrap();
        let big_r = s.levels();
        prop_assert!(2f64.powi(-(big_r as i32)) <= f * (1.0 + 1e-12));
        for r in 1..=big_r {
            prop_assert!(s.distance(r) < s.distance(r + 1));
            prop_assert!(s.concat(r) >= 1);
            prop_assert!(s.repetitions(r) >= 1 && s.repetitions(r) <= cfg.max_repetitions);
            prop_assert!(s.sampling_rate(r) > 0.0 && s.sampling_rate(r) <= 1.0);
            // boundary orientation: z_r nudged inward falls in level r
            let w = k.eval(s.distance(r) * (1.0 - 1e-12)).unwrap();
            prop_assert_eq!(weight_level_of(w, big_r).unwrap(), r);
            for i in (r + 1)..=(big_r + 1) {
                let c = s.ratio(i, r);
                prop_assert!(c >= 1.0 - 1e-12 && c <= s.ratio_cap() + 1e-12);
            }
        }
    }

    #[test]
    fn every_table_holds_every_index_once(
        seed in any::<u64>(),
        k in 1usize..5,
        reps in 1usize..6,
        n in 0usize..40,
    ) {
        let pts = DatasetSpec::new(Generator::GaussianCluster, n, 3, seed).generate();
        let params = LshParams::new(k, reps, 0.7, &CollisionModel::new(1.4).unwrap());
        let table = LshTable::initialize(pts.iter().enumerate(), 3, params, seed).unwrap();
        for l in 0..reps {
            prop_assert_eq!(table.bucket_sizes(l).iter().sum::<usize>(), n);
        }
        for (i, x) in pts.iter().enumerate() {
            prop_assert!(table.recover(x).contains(&i));
        }
    }

    #[test]
    fn median_breakdown(
        mut values in prop::collection::vec(-100.0f64..100.0, 3..40),
        junk in -1e6f64..1e6,
    ) {
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let m = lower_median(&values);
        values.reverse();
        prop_assert_eq!(lower_median(&values), m);
        // corrupt a strict minority; the median stays within the honest range
        let bad = (values.len() - 1) / 2;
        for v in values.iter_mut().take(bad) {
            *v = junk;
        }
        let corrupted = lower_median(&values);
        prop_assert!(corrupted >= sorted[0] && corrupted <= sorted[sorted.len() - 1]);
    }
}

#[test]
fn dataset_shapes_are_enforced() {
    let pts = PointSet::from_rows(&[vec![0.0, 1.0]]).unwrap();
    assert!(exact_kde(&pts, &KernelSpec::gaussian(1.0).unwrap(), &[0.0]).is_err());
    assert!(PointSet::from_rows(&[vec![0.0, 1.0], vec![2.0]]).is_err());
}
