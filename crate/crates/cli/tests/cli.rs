use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dynkde::harness::{exact_kde, tune_bandwidth, DatasetSpec, Generator};
use dynkde::{DynamicKde, KdeConfig, KernelKind, KernelSpec, LevelSchedule, PointSet};

fn dynkde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynkde")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_points(path: &Path, pts: &PointSet, header: bool) {
    let mut s = String::new();
    if header {
        s.push_str(&(0..pts.dim()).map(|j| format!("x{j}")).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    for x in pts.iter() {
        s.push_str(&x.iter().map(|c| format!("{c:?}")).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    fs::write(path, s).unwrap();
}

struct Dir(tempfile::TempDir);

impl Dir {
    fn new() -> Self {
        Self(tempfile::tempdir().unwrap())
    }
    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
    fn s(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }
}

/// Column `col` of every data row.
fn column(csv: &str, col: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == col).unwrap();
    lines.map(|l| l.split(',').nth(j).unwrap().parse().unwrap()).collect()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(dynkde(&[]).status.code(), Some(2));
    assert_eq!(dynkde(&["query"]).status.code(), Some(2));
    assert_eq!(dynkde(&["verify", "--no-such-flag"]).status.code(), Some(2));
    let d = Dir::new();
    fs::write(d.path("p.csv"), "1,2\n").unwrap();
    // build without --out
    assert_eq!(dynkde(&["build", &d.s("p.csv")]).status.code(), Some(2));
}

#[test]
fn three_point_build_matches_library() {
    let d = Dir::new();
    let pts = PointSet::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.5], vec![-0.5, 2.0]]).unwrap();
    write_points(&d.path("data.csv"), &pts, true);
    let o = dynkde(&["build", &d.s("data.csv"), "--out", &d.s("s.bin"), "--seed", "5", "--f-kde", "0.4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("n=3 d=2"));
    write_points(&d.path("q.csv"), &pts, false);
    let o = dynkde(&["query", &d.s("s.bin"), &d.s("q.csv")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = KdeConfig::default();
    let lib = DynamicKde::initialize(KernelSpec::gaussian(1.0).unwrap(), pts.clone(), 0.25, 0.4, 5, cfg).unwrap();
    let expected: Vec<f64> = pts.iter().map(|q| lib.estimate(q).unwrap()).collect();
    assert_eq!(column(&stdout(&o), "estimate"), expected);
    // loading the snapshot through the library gives the same structure
    let loaded = dynkde::snapshot::from_bytes(&fs::read(d.path("s.bin")).unwrap()).unwrap();
    assert_eq!(loaded, lib);
}

#[test]
fn data_errors_exit_3_and_name_the_line() {
    let d = Dir::new();
    fs::write(d.path("empty.csv"), "").unwrap();
    let o = dynkde(&["build", &d.s("empty.csv"), "--out", &d.s("s.bin")]);
    assert_eq!(o.status.code(), Some(3));
    fs::write(d.path("bad.csv"), "a,b\n1,2\n3,oops\n").unwrap();
    let o = dynkde(&["build", &d.s("bad.csv"), "--out", &d.s("s.bin")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    fs::write(d.path("c.conf"), "epsilon = 2\n").unwrap();
    let o = dynkde(&["--config", &d.s("c.conf"), "verify", "--quick"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn singleton_query_is_one_and_robust_size_one_is_plain() {
    let d = Dir::new();
    fs::write(d.path("one.csv"), "0.25,-1.5\n").unwrap();
    let o = dynkde(&["build", &d.s("one.csv"), "--out", &d.s("s.bin"), "--f-kde", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = dynkde(&["query", &d.s("s.bin"), &d.s("one.csv"), "--with-oracle"]);
    assert_eq!(column(&stdout(&o), "estimate"), vec![1.0]);
    assert_eq!(column(&stdout(&o), "exact"), vec![1.0]);

    let pts = DatasetSpec::new(Generator::TwoClusters, 200, 3, 1).generate();
    write_points(&d.path("data.csv"), &pts, false);
    write_points(&d.path("q.csv"), &DatasetSpec::new(Generator::TwoClusters, 15, 3, 2).generate(), false);
    assert!(dynkde(&["build", &d.s("data.csv"), "--out", &d.s("t.bin"), "--bandwidth", "0.7"]).status.success());
    let plain = dynkde(&["query", &d.s("t.bin"), &d.s("q.csv")]);
    let robust = dynkde(&["query", &d.s("t.bin"), &d.s("q.csv"), "--robust", "--ensemble-size", "1"]);
    assert!(robust.status.success(), "{}", stderr(&robust));
    assert_eq!(stdout(&plain), stdout(&robust));
    let three = dynkde(&["query", &d.s("t.bin"), &d.s("q.csv"), "--robust", "--ensemble-size", "3"]);
    assert!(three.status.success());
    assert_eq!(column(&stdout(&three), "estimate").len(), 15);
}

#[test]
fn oracle_rows_are_mostly_within_epsilon() {
    let d = Dir::new();
    let pts = DatasetSpec::new(Generator::TwoClusters, 1000, 8, 21).generate();
    let bw = tune_bandwidth(&pts, KernelKind::Gaussian, pts.get(0), 0.05).unwrap();
    let k = KernelSpec::gaussian(bw).unwrap();
    let pool = DatasetSpec::new(Generator::TwoClusters, 3000, 8, 22).generate();
    let queries: Vec<Vec<f64>> = pool
        .iter()
        .filter(|q| (0.025..=0.1).contains(&exact_kde(&pts, &k, q).unwrap()))
        .take(60)
        .map(<[f64]>::to_vec)
        .collect();
    assert_eq!(queries.len(), 60);
    write_points(&d.path("data.csv"), &pts, false);
    write_points(&d.path("q.csv"), &PointSet::from_rows(&queries).unwrap(), true);
    let bw = format!("{bw:?}");
    let o = dynkde(&["build", &d.s("data.csv"), "--out", &d.s("s.bin"), "--bandwidth", &bw, "--seed", "9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = dynkde(&["query", &d.s("s.bin"), &d.s("q.csv"), "--with-oracle", "--out", &d.s("r.csv")]);
    assert!(o.status.success());
    let errs = column(&fs::read_to_string(d.path("r.csv")).unwrap(), "rel_error");
    let within = errs.iter().filter(|&&e| e <= 0.25).count();
    assert!(within * 100 >= 95 * errs.len(), "{within}/{}", errs.len());
}

#[test]
fn updates_match_rebuild_and_report_bad_rows() {
    let d = Dir::new();
    let pts = DatasetSpec::new(Generator::UniformCube, 300, 2, 4).generate();
    write_points(&d.path("data.csv"), &pts, false);
    write_points(&d.path("q.csv"), &DatasetSpec::new(Generator::UniformCube, 10, 2, 5).generate(), false);
    let build = ["--bandwidth", "0.4", "--seed", "17"];
    let mut args = vec!["build", "data.csv", "--out", "s.bin"];
    args.extend(build);
    let args: Vec<String> = args.iter().map(|a| if a.ends_with(".csv") || a.ends_with(".bin") { d.s(a) } else { a.to_string() }).collect();
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    assert!(dynkde(&args).status.success());
    let original = fs::read(d.path("s.bin")).unwrap();

    fs::write(d.path("none.csv"), "").unwrap();
    let o = dynkde(&["update", &d.s("s.bin"), &d.s("none.csv"), "--out", &d.s("same.bin")]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(d.path("same.bin")).unwrap(), original);

    fs::write(d.path("bad.csv"), "index,x,y\n1,0.5,0.5\n300,0,0\n").unwrap();
    let o = dynkde(&["update", &d.s("s.bin"), &d.s("bad.csv")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    assert_eq!(fs::read(d.path("s.bin")).unwrap(), original);

    fs::write(d.path("u.csv"), "7,0.1,0.2\n250,-0.9,0.9\n7,0.3,0.3\n").unwrap();
    let o = dynkde(&["update", &d.s("s.bin"), &d.s("u.csv"), "--out", &d.s("u.bin")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rows = pts.to_rows();
    rows[7] = vec![0.3, 0.3];
    rows[250] = vec![-0.9, 0.9];
    write_points(&d.path("mod.csv"), &PointSet::from_rows(&rows).unwrap(), false);
    let mut args = vec!["build".to_string(), d.s("mod.csv"), "--out".into(), d.s("r.bin")];
    args.extend(build.iter().map(|s| s.to_string()));
    assert!(dynkde(&args.iter().map(String::as_str).collect::<Vec<_>>()).status.success());
    let a = dynkde(&["query", &d.s("u.bin"), &d.s("q.csv")]);
    let b = dynkde(&["query", &d.s("r.bin"), &d.s("q.csv")]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn large_build_reports_schedule() {
    let d = Dir::new();
    let pts = DatasetSpec::new(Generator::GaussianCluster, 10_000, 4, 8).generate();
    write_points(&d.path("big.csv"), &pts, false);
    let o = dynkde(&["build", &d.s("big.csv"), "--out", &d.s("s.bin"), "--bandwidth", "1.5", "--f-kde", "0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = LevelSchedule::build(&KernelSpec::gaussian(1.5).unwrap(), 10_000, 0.05, &KdeConfig::default()).unwrap();
    let text = stdout(&o);
    for r in 1..=s.levels() {
        let line = text.lines().find(|l| l.starts_with(&format!("level={r} "))).unwrap();
        assert!(line.contains(&format!(" k={} K2={} ", s.concat(r), s.repetitions(r))), "{line}");
    }
}

#[test]
fn equal_seeds_give_equal_outputs() {
    let d = Dir::new();
    write_points(&d.path("data.csv"), &DatasetSpec::new(Generator::Line, 150, 3, 3).generate(), false);
    write_points(&d.path("q.csv"), &DatasetSpec::new(Generator::Line, 8, 3, 4).generate(), false);
    for name in ["a.bin", "b.bin"] {
        assert!(dynkde(&["build", &d.s("data.csv"), "--out", &d.s(name), "--seed", "42"]).status.success());
    }
    assert_eq!(fs::read(d.path("a.bin")).unwrap(), fs::read(d.path("b.bin")).unwrap());
    let a = dynkde(&["query", &d.s("a.bin"), &d.s("q.csv"), "--robust", "--ensemble-size", "2", "--with-oracle"]);
    let b = dynkde(&["query", &d.s("b.bin"), &d.s("q.csv"), "--robust", "--ensemble-size", "2", "--with-oracle"]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn auto_f_kde_warns() {
    let d = Dir::new();
    let pts = DatasetSpec::new(Generator::GaussianCluster, 100, 2, 3).generate();
    write_points(&d.path("data.csv"), &pts, false);
    write_points(&d.path("probe.csv"), &DatasetSpec::new(Generator::GaussianCluster, 5, 2, 9).generate(), false);
    let o = dynkde(&["build", &d.s("data.csv"), "--out", &d.s("s.bin"), "--auto-f-kde", &d.s("probe.csv"), "--bandwidth", "0.3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    assert_eq!(dynkde(&["build", &d.s("data.csv"), "--out", &d.s("s.bin"), "--auto-f-kde", "x", "--f-kde", "0.1"]).status.code(), Some(2));
}

#[test]
fn bench_is_deterministic_in_work_units() {
    let d = Dir::new();
    let run = |out: &str| {
        let o = dynkde(&["bench", "--sizes", "300,600", "--repeats", "3", "--dim", "4", "--seed", "2", "--out", &d.s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read_to_string(d.path(out)).unwrap()
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(a.lines().count(), 3);
    assert_eq!(column(&a, "candidates_per_query"), column(&b, "candidates_per_query"));
    assert_eq!(column(&a, "n"), vec![300.0, 600.0]);
}

#[test]
fn verify_passes_by_default_and_flags_bad_f_kde() {
    let d = Dir::new();
    let o = dynkde(&["verify", "--quick", "--out", &d.s("v.csv")]);
    assert!(o.status.success(), "{}\n{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("test=unbiasedness pass=true trials=50"));
    assert!(fs::read_to_string(d.path("v.csv")).unwrap().starts_with("name,trials,mean,reference,bound,pass\n"));
    // a wide kernel puts the exact density far above f_kde
    let o = dynkde(&["verify", "--quick", "--bandwidth", "50", "--f-kde", "0.05"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("configuration error"), "{}", stderr(&o));
}

#[test]
fn config_file_is_honored() {
    let d = Dir::new();
    fs::write(d.path("c.conf"), "# test\nkernel = exponential\nbandwidth = 0.5\nseed = 11\nf_kde = 0.3\n").unwrap();
    fs::write(d.path("p.csv"), "0,0\n1,1\n2,0\n").unwrap();
    let o = dynkde(&["--config", &d.s("c.conf"), "build", &d.s("p.csv"), "--out", &d.s("s.bin")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("kernel=exponential bandwidth=0.5") && text.contains("f_kde=0.3 seed=11"), "{text}");
    // flags override the file
    let o = dynkde(&["--config", &d.s("c.conf"), "build", &d.s("p.csv"), "--out", &d.s("s.bin"), "--seed", "12"]);
    assert!(stdout(&o).contains("seed=12"));
}
