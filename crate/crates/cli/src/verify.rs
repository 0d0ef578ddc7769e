//! Runs the statistical and deterministic checks against a dataset.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dynkde::harness::{
    check_lipschitz, exact_kde, level_sizes, run_recovery_test, run_unbiasedness_test,
    run_update_equivalence_test, run_variance_test, summary_csv, tune_bandwidth, DatasetSpec, Generator,
    HarnessError, RecoveryProbe, TestOutcome, TrialSetup, TrialStats,
};
use dynkde::{KernelSpec, LevelSchedule, PointSet};

use crate::commands::write_output;
use crate::data::read_points;
use crate::error::{CliError, CliResult};
use crate::run_config::RunConfig;

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub quick: bool,
    pub data: Option<std::path::PathBuf>,
}

fn config_error(e: HarnessError) -> CliError {
    match e {
        HarnessError::Configuration(msg) => CliError::Data(format!("configuration error: {msg}")),
        other => other.into(),
    }
}

fn deterministic(name: &str, events: &[bool]) -> TestOutcome {
    let values: Vec<f64> = events.iter().map(|&ok| f64::from(u8::from(!ok))).collect();
    let stats = TrialStats::from_values(&values, events);
    let violations = values.iter().sum::<f64>();
    TestOutcome::new(name, stats, 0.0, 0.0, violations == 0.0)
}

pub fn verify(cfg: &RunConfig, opts: &VerifyOptions, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    let points = match &opts.data {
        Some(p) => read_points(p)?,
        None => DatasetSpec::new(Generator::TwoClusters, 500, 8, cfg.seed).generate(),
    };
    let q = points.get(0).to_vec();
    let kernel = match cfg.bandwidth {
        Some(bw) => KernelSpec::new(cfg.kernel, bw)?,
        None => KernelSpec::new(cfg.kernel, tune_bandwidth(&points, cfg.kernel, &q, cfg.f_kde / 2.0)?)?,
    };
    let trials = if opts.quick { 50 } else { 200 };
    let setup = TrialSetup {
        kernel,
        epsilon: cfg.epsilon,
        f_kde: cfg.f_kde,
        config: cfg.constants,
        trials,
        master_seed: cfg.seed,
    };
    let mut outcomes = vec![
        run_unbiasedness_test(&points, &q, &setup).map_err(config_error)?,
        run_variance_test(&points, &q, &setup).map_err(config_error)?,
    ];

    let schedule = LevelSchedule::build(&kernel, points.len(), cfg.f_kde, &cfg.constants)?;
    let recovery = TrialSetup { trials: if opts.quick { 2_000 } else { 10_000 }, ..setup };
    for r in 1..=schedule.levels() {
        for factor in [0.99, 3.0] {
            let probe = RecoveryProbe { level: r, distance_factor: factor };
            outcomes.push(run_recovery_test(&points, probe, &recovery).map_err(config_error)?);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = points.len();
    let script: Vec<(usize, Vec<f64>)> = (0..20)
        .map(|_| {
            let src = points.get(rng.gen_range(0..n));
            (rng.gen_range(0..n), src.iter().map(|c| c + rng.gen_range(-0.1..0.1)).collect())
        })
        .collect();
    let queries: Vec<Vec<f64>> = (0..10.min(n)).map(|i| points.get(i).to_vec()).collect();
    let equal = run_update_equivalence_test(&points, &script, &queries, &setup).map_err(config_error)?;
    outcomes.push(deterministic("update_equivalence", &[equal]));

    let level_events: Vec<bool> = (0..100.min(n))
        .map(|i| {
            let x = points.get(i);
            let f = exact_kde(&points, &kernel, x)?;
            let sizes = level_sizes(&points, &kernel, x, schedule.levels());
            Ok((1..=schedule.levels())
                .all(|r| sizes[r as usize - 1] as f64 <= 2f64.powi(r as i32) * n as f64 * f))
        })
        .collect::<Result<_, dynkde::KdeError>>()?;
    outcomes.push(deterministic("level_set_sizes", &level_events));

    let lipschitz_events: Vec<bool> = (0..1000)
        .map(|_| {
            let a = point_near(&points, &mut rng);
            let b = point_near(&points, &mut rng);
            check_lipschitz(&points, &kernel, &a, &b)
        })
        .collect::<Result<_, dynkde::KdeError>>()?;
    outcomes.push(deterministic("lipschitz", &lipschitz_events));

    // effective configuration first, so the report can be reproduced with --config
    let effective = RunConfig { bandwidth: Some(kernel.bandwidth()), ..cfg.clone() };
    for line in effective.to_file_string().lines() {
        writeln!(stdout, "# {line}")?;
    }
    for o in &outcomes {
        writeln!(stdout, "{o}")?;
    }
    if let Some(p) = out {
        write_output(Some(p), &summary_csv(&outcomes), stdout)?;
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.name.as_str()).collect();
    if failed.is_empty() {
        writeln!(stdout, "verify=pass tests={}", outcomes.len())?;
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

fn point_near(points: &PointSet, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let base = points.get(rng.gen_range(0..points.len()));
    base.iter().map(|c| c + rng.gen_range(-1.0..1.0)).collect()
}
