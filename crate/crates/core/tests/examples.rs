//! Fixed-value examples. Expected constants were computed separately with
//! 50-digit arithmetic and are frozen here.

use dynkde::harness::{exact_kde, DatasetSpec, Generator};
use dynkde::lsh::CollisionModel;
use dynkde::{
    ensemble_size, weight_level_of, DynamicKde, KdeConfig, KernelSpec, LevelSchedule, LshTable, PointSet,
    RobustEnsemble,
};

const E_INV: f64 = 0.367_879_441_171_442_3;
const SQRT_LN2: f64 = 0.832_554_611_157_697_8;
const SQRT_LN4: f64 = 1.177_410_022_515_474_6;
const LN4: f64 = 1.386_294_361_119_890_6;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn kernel_values() {
    let g = KernelSpec::gaussian(1.0).unwrap();
    let e = KernelSpec::exponential(2.0).unwrap();
    assert!(close(g.eval(1.0).unwrap(), E_INV, 1e-15));
    assert!(close(e.eval(2.0).unwrap(), E_INV, 1e-15));
    assert_eq!(g.eval(0.0).unwrap(), 1.0);
    assert!(close(g.invert(0.5).unwrap(), SQRT_LN2, 1e-15));
    assert!(close(KernelSpec::exponential(1.0).unwrap().invert(0.25).unwrap(), LN4, 1e-15));
    assert!(close(g.lipschitz_const(), 0.857_763_884_960_706_8, 1e-15));
}

#[test]
fn weight_levels() {
    assert_eq!(weight_level_of(1.0, 4).unwrap(), 1);
    assert_eq!(weight_level_of(0.3, 4).unwrap(), 2);
    assert_eq!(weight_level_of(0.01, 4).unwrap(), 5);
    assert!(weight_level_of(1.5, 4).is_err());
}

#[test]
fn schedule_example() {
    let g = KernelSpec::gaussian(1.0).unwrap();
    let s = LevelSchedule::build(&g, 1024, 0.25, &KdeConfig::default()).unwrap();
    assert_eq!(s.levels(), 2);
    assert!(close(s.distance(1), SQRT_LN2, 1e-14));
    assert!(close(s.distance(2), SQRT_LN4, 1e-14));
    assert_eq!(s.ratio(2, 1), 1.0);
    // enumeration over (i, r): r=1 gives max(ceil(1/1), ceil(2/10^(1/7))) = 2, r=2 gives 1
    assert_eq!(s.kernel_cost(), 4.0);

    let two = LevelSchedule::build(&KernelSpec::exponential(0.3).unwrap(), 2, 0.5, &KdeConfig::default()).unwrap();
    assert_eq!(two.levels(), 1);
    assert_eq!(two.distances().len(), 1);
    assert!(two.distance(2) > two.distance(1));
}

#[test]
fn collision_model_values() {
    let m = CollisionModel::new(1.0).unwrap();
    assert_eq!(m.collision_prob(0.0, 1.0), 1.0);
    assert!(close(m.collision_prob(1.0, 1.0), 0.368_746_380_373, 1e-9));
    assert!(close(CollisionModel::prob_normalized(10.0), 0.039_861_016_066, 1e-9));
}

#[test]
fn ensemble_size_example() {
    assert_eq!(ensemble_size(1, 0.1, 1.0, 0.05, 1.0, 1.0).unwrap(), 8);
}

#[test]
fn exact_density_example() {
    let pts = PointSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
    let f = exact_kde(&pts, &KernelSpec::gaussian(1.0).unwrap(), &[0.0]).unwrap();
    assert!(close(f, 0.683_939_720_585_721_2, 1e-15));
}

#[test]
fn group_count_for_two_points() {
    let pts = PointSet::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
    let cfg = KdeConfig::default();
    let kde = DynamicKde::initialize(KernelSpec::gaussian(1.0).unwrap(), pts, 0.5, 0.5, 1, cfg).unwrap();
    let expected = (cfg.group_constant * 4.0 * 2f64.ln()).ceil() as usize;
    assert_eq!(kde.group_count(), expected.max(1));
    assert_eq!(kde.schedule().levels(), 1);
    assert!(kde.groups().iter().all(|g| g.level(1).members().len() <= 2));
}

#[test]
fn singleton_query_is_one() {
    let pts = PointSet::from_rows(&[vec![0.3, -0.7]]).unwrap();
    let kde = DynamicKde::initialize(KernelSpec::gaussian(1.0).unwrap(), pts, 0.3, 0.5, 4, KdeConfig::default())
        .unwrap();
    assert_eq!(kde.estimate(&[0.3, -0.7]).unwrap(), 1.0);
}

#[test]
fn first_level_sample_size() {
    // n = 1000, f_kde = 0.01: rate 1 / (2 * 1000 * 0.01) = 0.05, mean 50, variance 47.5
    let pts = DatasetSpec::new(Generator::UniformCube, 1000, 2, 3).generate();
    let k = KernelSpec::gaussian(0.2).unwrap();
    let sizes: Vec<f64> = (0..100)
        .map(|seed| {
            let kde = DynamicKde::initialize_with_groups(k, pts.clone(), 0.5, 0.01, seed, KdeConfig::default(), 1)
                .unwrap();
            kde.groups()[0].level(1).members().len() as f64
        })
        .collect();
    let mean = sizes.iter().sum::<f64>() / 100.0;
    let stderr = (47.5f64 / 100.0).sqrt();
    assert!((mean - 50.0).abs() <= 3.0 * stderr, "mean {mean}");
}

#[test]
fn lsh_single_update_matches_rebuild() {
    let pts = DatasetSpec::new(Generator::GaussianCluster, 50, 4, 9).generate();
    let model = CollisionModel::new(1.4).unwrap();
    let params = dynkde::LshParams::new(3, 6, 0.8, &model);
    let mut table = LshTable::initialize(pts.iter().enumerate(), 4, params, 31).unwrap();
    let replacement = [0.4, -0.1, 0.9, 0.0];
    table.update(&replacement, pts.get(17), 17).unwrap();
    let mut rows = pts.to_rows();
    rows[17] = replacement.to_vec();
    let fresh = LshTable::initialize(rows.iter().map(Vec::as_slice).enumerate(), 4, params, 31).unwrap();
    assert_eq!(table, fresh);
    let queries = DatasetSpec::new(Generator::GaussianCluster, 20, 4, 10).generate();
    for q in queries.iter() {
        assert_eq!(table.recover(q), fresh.recover(q));
    }
}

#[test]
fn robust_update_matches_member_rebuild() {
    let pts = DatasetSpec::new(Generator::TwoClusters, 80, 2, 12).generate();
    let k = KernelSpec::gaussian(0.8).unwrap();
    let cfg = KdeConfig { group_constant: 0.5, ..Default::default() };
    let mut ens = RobustEnsemble::initialize(k, &pts, 0.4, 0.3, 6, cfg, 5).unwrap();
    let mut rows = pts.to_rows();
    for (i, v) in [(3usize, [1.0, 1.0]), (40, [-1.5, 0.0]), (3, [0.0, 0.2])] {
        ens.robust_update(&v, i).unwrap();
        rows[i] = v.to_vec();
    }
    let rebuilt = RobustEnsemble::initialize(k, &PointSet::from_rows(&rows).unwrap(), 0.4, 0.3, 6, cfg, 5).unwrap();
    for q in [[0.0, 0.0], [1.5, 0.1], [-1.4, -0.2]] {
        assert_eq!(ens.robust_query(&q).unwrap(), rebuilt.robust_query(&q).unwrap());
    }
}
