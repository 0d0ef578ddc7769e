//! Timing of build, update, query and rebuild across dataset sizes.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use dynkde::harness::{exact_kde, tune_bandwidth, DatasetSpec, Generator};
use dynkde::{DynamicKde, KernelSpec, PointSet};

use crate::commands::write_output;
use crate::error::{CliError, CliResult};
use crate::run_config::RunConfig;

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub sizes: Vec<usize>,
    pub generator: Generator,
    pub dim: usize,
    /// Timings are medians over this many runs.
    pub repeats: usize,
    pub queries: usize,
}

fn median_of<T>(repeats: usize, mut f: impl FnMut(usize) -> T) -> Duration {
    let mut times: Vec<Duration> = (0..repeats)
        .map(|i| {
            let start = Instant::now();
            std::hint::black_box(f(i));
            start.elapsed()
        })
        .collect();
    times.sort();
    times[(repeats - 1) / 2]
}

/// Fresh generator draws whose exact density lies in `[f_kde / 4, f_kde]`; falls
/// back to the first data point if none does.
fn bench_queries(points: &PointSet, kernel: &KernelSpec, opts: &BenchOptions, cfg: &RunConfig) -> CliResult<Vec<Vec<f64>>> {
    let pool = DatasetSpec::new(opts.generator, 50 * opts.queries, opts.dim, cfg.seed ^ 0x5EED).generate();
    let mut out = Vec::new();
    for q in pool.iter() {
        let f = exact_kde(points, kernel, q)?;
        if (cfg.f_kde / 4.0..=cfg.f_kde).contains(&f) {
            out.push(q.to_vec());
            if out.len() == opts.queries {
                break;
            }
        }
    }
    if out.is_empty() {
        out.push(points.get(0).to_vec());
    }
    Ok(out)
}

pub fn bench(cfg: &RunConfig, opts: &BenchOptions, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    if opts.sizes.is_empty() || opts.sizes.contains(&0) {
        return Err(CliError::Usage("--sizes needs positive dataset sizes".into()));
    }
    if opts.repeats == 0 || opts.queries == 0 || opts.dim == 0 {
        return Err(CliError::Usage("--repeats, --queries and --dim must be positive".into()));
    }
    let mut sizes = opts.sizes.clone();
    sizes.sort_unstable();
    let kernel = match cfg.bandwidth {
        Some(bw) => KernelSpec::new(cfg.kernel, bw)?,
        None => {
            // fixed across sizes: tuned once on the smallest dataset
            let pts = DatasetSpec::new(opts.generator, sizes[0], opts.dim, cfg.seed).generate();
            KernelSpec::new(cfg.kernel, tune_bandwidth(&pts, cfg.kernel, pts.get(0), cfg.f_kde / 2.0)?)?
        }
    };
    let mut csv = String::from(
        "n,d,bandwidth,groups,tables,build_ms,update_us,query_us,rebuild_ms,candidates_per_query\n",
    );
    for &n in &sizes {
        let points = DatasetSpec::new(opts.generator, n, opts.dim, cfg.seed).generate();
        let queries = bench_queries(&points, &kernel, opts, cfg)?;
        let init = |pts: &PointSet| DynamicKde::initialize(kernel, pts.clone(), cfg.epsilon, cfg.f_kde, cfg.seed, cfg.constants);
        let mut kde = init(&points)?;
        let build = median_of(opts.repeats, |_| init(&points));
        let candidates: u64 = queries.iter().map(|q| kde.query(q).map(|r| r.candidates_examined)).sum::<Result<_, _>>()?;
        let query = median_of(opts.repeats, |i| kde.query(&queries[i % queries.len()]));
        let replacements = DatasetSpec::new(opts.generator, opts.repeats, opts.dim, cfg.seed ^ 0xA11).generate();
        let mut failure = None;
        let update = median_of(opts.repeats, |i| {
            if let Err(e) = kde.update(replacements.get(i), (i * 7919) % n) {
                failure.get_or_insert(e);
            }
        });
        if let Some(e) = failure {
            return Err(e.into());
        }
        let updated = kde.dataset().clone();
        let rebuild = median_of(opts.repeats, |_| init(&updated));
        let _ = writeln!(
            csv,
            "{n},{},{:?},{},{},{:.3},{:.3},{:.3},{:.3},{:.3}",
            opts.dim,
            kernel.bandwidth(),
            kde.group_count(),
            kde.table_count(),
            build.as_secs_f64() * 1e3,
            update.as_secs_f64() * 1e6,
            query.as_secs_f64() * 1e6,
            rebuild.as_secs_f64() * 1e3,
            candidates as f64 / queries.len() as f64
        );
    }
    write_output(out, &csv, stdout)
}
