//! `build`, `query` and `update`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use dynkde::harness::exact_kde;
use dynkde::stats::lower_median;
use dynkde::{ensemble_size, member_seed, snapshot, DynamicKde, KernelSpec, PointSet, RobustEnsemble};

use crate::data::{read_points, read_updates};
use crate::error::{CliError, CliResult};
use crate::run_config::RunConfig;

pub fn load_snapshot(path: &Path) -> CliResult<DynamicKde> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    snapshot::from_bytes(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_output(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", p.display()))),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

/// Largest exact density over the probe queries, used as `f_kde`.
pub fn auto_f_kde(points: &PointSet, kernel: &KernelSpec, probes: &Path) -> CliResult<f64> {
    let probes = read_points(probes)?;
    let mut max = 0.0f64;
    for q in probes.iter() {
        max = max.max(exact_kde(points, kernel, q)?);
    }
    if !(max > 0.0 && max < 1.0) {
        return Err(CliError::Data(format!("probe densities give f_kde = {max}, outside (0, 1)")));
    }
    Ok(max)
}

/// `key=value` description of a built structure.
pub fn summary(kde: &DynamicKde) -> String {
    let s = kde.schedule();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "n={} d={} kernel={} bandwidth={} epsilon={} f_kde={} seed={} R={} K1={} tables={} kernel_cost={}",
        kde.n(),
        kde.dim(),
        kde.kernel().kind(),
        kde.kernel().bandwidth(),
        kde.epsilon(),
        kde.f_kde(),
        kde.seed(),
        s.levels(),
        kde.group_count(),
        kde.table_count(),
        s.kernel_cost()
    );
    for r in 1..=s.levels() {
        let _ = writeln!(
            out,
            "level={r} z={} k={} K2={} p_near={:.6} sampling_rate={}",
            s.distance(r),
            s.concat(r),
            s.repetitions(r),
            s.p_near(r),
            s.sampling_rate(r)
        );
    }
    out
}

pub fn build(
    cfg: &RunConfig,
    data: &Path,
    auto_probes: Option<&Path>,
    out: &Path,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let points = read_points(data)?;
    let kernel = KernelSpec::new(cfg.kernel, cfg.bandwidth.unwrap_or(1.0))?;
    let f_kde = match auto_probes {
        Some(p) => {
            let f = auto_f_kde(&points, &kernel, p)?;
            eprintln!(
                "warning: f_kde = {f} set from probe queries; f_kde >= f* now holds only for those probes"
            );
            f
        }
        None => cfg.f_kde,
    };
    let kde = DynamicKde::initialize(kernel, points, cfg.epsilon, f_kde, cfg.seed, cfg.constants)?;
    std::fs::write(out, snapshot::to_bytes(&kde))
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", out.display())))?;
    write!(stdout, "{}", summary(&kde))?;
    writeln!(stdout, "snapshot={}", out.display())?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct QueryOptions {
    pub robust: bool,
    pub ensemble_size: Option<usize>,
    pub with_oracle: bool,
}

/// Ensemble whose member 0 is `kde` itself and whose other members are built
/// over the same dataset with derived seeds.
pub fn ensemble_from(kde: DynamicKde, cfg: &RunConfig, size: Option<usize>) -> CliResult<RobustEnsemble> {
    let tau = cfg.tau.unwrap_or(kde.f_kde() / 4.0);
    let size = match size {
        Some(0) => return Err(CliError::Usage("--ensemble-size must be positive".into())),
        Some(s) => s,
        None => ensemble_size(
            kde.dim(),
            kde.epsilon(),
            tau,
            cfg.delta,
            kde.kernel().lipschitz_const(),
            kde.config().boost_constant,
        )?,
    };
    let mut members = Vec::with_capacity(size);
    for j in 1..size {
        members.push(DynamicKde::initialize(
            *kde.kernel(),
            kde.dataset().clone(),
            kde.epsilon(),
            kde.f_kde(),
            member_seed(kde.seed(), j),
            *kde.config(),
        )?);
    }
    members.insert(0, kde);
    Ok(RobustEnsemble::from_members(members)?.with_tau(tau)?.with_delta(cfg.delta)?)
}

pub fn query(
    cfg: &RunConfig,
    snapshot_path: &Path,
    queries_path: &Path,
    opts: QueryOptions,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let kde = load_snapshot(snapshot_path)?;
    let queries = read_points(queries_path)?;
    if queries.dim() != kde.dim() {
        return Err(CliError::Data(format!(
            "{}: queries have {} coordinates, snapshot has {}",
            queries_path.display(),
            queries.dim(),
            kde.dim()
        )));
    }
    let levels = kde.schedule().levels();
    let (plain, ensemble) = if opts.robust {
        (None, Some(ensemble_from(kde, cfg, opts.ensemble_size)?))
    } else {
        (Some(kde), None)
    };
    let members: &[DynamicKde] = match (&plain, &ensemble) {
        (Some(p), _) => std::slice::from_ref(p),
        (None, Some(e)) => e.members(),
        (None, None) => unreachable!(),
    };

    let mut csv = String::from("query,estimate");
    if opts.with_oracle {
        csv.push_str(",exact,rel_error");
    }
    csv.push_str(",candidates_examined");
    for r in 1..=levels + 1 {
        let _ = write!(csv, ",level_{r}");
    }
    csv.push('\n');
    for (qi, q) in queries.iter().enumerate() {
        let mut candidates = 0u64;
        let mut hist = vec![0u64; levels as usize + 1];
        let mut estimates = Vec::with_capacity(members.len());
        for m in members {
            let rep = m.query(q)?;
            candidates += rep.candidates_examined;
            for (h, v) in hist.iter_mut().zip(&rep.levels_hit) {
                *h += v;
            }
            estimates.push(rep.estimate);
        }
        // the lower median of member estimates is exactly what robust_query returns
        let estimate = lower_median(&estimates);
        let _ = write!(csv, "{qi},{estimate:?}");
        if opts.with_oracle {
            let exact = exact_kde(members[0].dataset(), members[0].kernel(), q)?;
            let _ = write!(csv, ",{exact:?},{:?}", (estimate - exact).abs() / exact);
        }
        let _ = write!(csv, ",{candidates}");
        for h in hist {
            let _ = write!(csv, ",{h}");
        }
        csv.push('\n');
    }
    write_output(out, &csv, stdout)
}

pub fn update(snapshot_path: &Path, updates_path: &Path, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    let mut kde = load_snapshot(snapshot_path)?;
    let updates = read_updates(updates_path)?;
    for u in &updates {
        kde.update(&u.point, u.index)
            .map_err(|e| CliError::Data(format!("{} line {}: {e}", updates_path.display(), u.line)))?;
    }
    let target = out.unwrap_or(snapshot_path);
    std::fs::write(target, snapshot::to_bytes(&kde))
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", target.display())))?;
    writeln!(stdout, "updates={} update_counter={} snapshot={}", updates.len(), kde.update_counter(), target.display())?;
    Ok(())
}
