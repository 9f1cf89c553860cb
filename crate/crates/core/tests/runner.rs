use std::fs;
use std::path::Path;

use qic_core::runner::output::sha256_file;
use qic_core::runner::{fit_run, reproduce, run_sweep, Figure, ReproduceOptions, RunConfig, Status};

fn small(dir: &Path, parameter: &str, kind: &str) -> RunConfig {
    RunConfig::parse(&format!(
        r#"
        model.N = 5
        sweep.parameter = "{parameter}"
        sweep.log_min = 0.1
        sweep.log_max = 0.5
        sweep.log_points = 3
        observable.kind = "{kind}"
        observable.indices = [1, 2]
        krylov.max_steps = 30
        ergodize.n_target = 200
        ergodize.n_seeds = 2
        output.directory = "{}"
        "#,
        dir.display()
    ))
    .unwrap()
}

#[test]
fn empty_grid_gives_header_only_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path(), "h", "srn_site");
    cfg.sweep.grid = Some(Vec::new());
    let m = run_sweep(&cfg, 2).unwrap();
    assert!(m.points.is_empty());
    let text = fs::read_to_string(tmp.path().join("lyapunov.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(tmp.path().join("manifest.json").is_file());
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run_sweep(&small(a.path(), "g", "lrn_ik"), 1).unwrap();
    let mb = run_sweep(&small(b.path(), "g", "lrn_ik"), 3).unwrap();
    assert_eq!(ma.files, mb.files);
    for name in ["lanczos.csv", "lyapunov.csv", "ergodize.csv", "stability.csv"] {
        let (x, y) = (
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
        );
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn manifest_lists_every_output_with_its_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let m = run_sweep(&small(tmp.path(), "h", "srn_site"), 1).unwrap();
    let mut on_disk: Vec<String> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    assert_eq!(on_disk, m.files.keys().cloned().collect::<Vec<_>>());
    for (name, hash) in &m.files {
        assert_eq!(&sha256_file(&tmp.path().join(name)).unwrap(), hash);
    }
    assert_eq!(m.seeds, vec![1, 2]);
    assert_eq!(m.points.len(), 3 * 2);
    assert!(m.points.iter().all(|p| p.ergodize.len() == 2));
}

#[test]
fn failures_are_recorded_not_fatal() {
    // g = 0 makes every I^(k) conserved: no growth and no dynamics there.
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path(), "g", "lrn_ik");
    cfg.sweep.grid = Some(vec![0.0, 0.3]);
    let m = run_sweep(&cfg, 1).unwrap();
    let at_zero: Vec<_> = m.points.iter().filter(|p| p.x == 0.0).collect();
    assert!(at_zero.iter().all(|p| p.lanczos_status != Status::Ok));
    assert!(at_zero
        .iter()
        .all(|p| p.ergodize.iter().all(|e| e.status == Status::NoDynamics)));
    assert!(m
        .points
        .iter()
        .filter(|p| p.x == 0.3)
        .all(|p| p.lanczos_status == Status::Ok));
    let report = fit_run(tmp.path()).unwrap();
    assert_eq!(report.excluded_x, vec![0.0]);
}

#[test]
fn fit_and_reproduce_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let (srn, lrn, out) = (tmp.path().join("srn"), tmp.path().join("lrn"), tmp.path().join("rep"));
    run_sweep(&small(&srn, "h", "srn_site"), 1).unwrap();
    run_sweep(&small(&lrn, "g", "lrn_ik"), 1).unwrap();
    let report = fit_run(&lrn).unwrap();
    assert_eq!(report.operators.len(), 2);
    assert!(lrn.join("fit_report.json").is_file());
    let opts = ReproduceOptions {
        srn_dir: srn,
        lrn_dir: lrn,
        out_dir: out.clone(),
    };
    for what in [Figure::Fig1, Figure::Fig2, Figure::Fig4] {
        let files = reproduce(what, &opts).unwrap();
        assert_eq!(files.len(), 2);
    }
    reproduce(Figure::TablePwlaw, &opts).unwrap();
    let table = fs::read_to_string(out.join("table_pwlaw.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[2].starts_with("SRN,family,"));
    let fig4 = fs::read_to_string(out.join("fig4_fits.csv")).unwrap();
    assert!(fig4.lines().any(|l| l.starts_with("TE_plus_over_TL,SRN,family,")));
}

#[test]
fn reproduce_without_data_is_a_missing_dependency() {
    let tmp = tempfile::tempdir().unwrap();
    let opts = ReproduceOptions {
        srn_dir: tmp.path().join("none"),
        lrn_dir: tmp.path().join("none"),
        out_dir: tmp.path().join("out"),
    };
    let err = reproduce(Figure::Fig1, &opts).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    assert!(err.to_string().contains("qic sweep --config configs/srn.conf"));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["srn.conf", "lrn.conf"] {
        let cfg = RunConfig::from_file(&root.join(name)).unwrap();
        assert_eq!(cfg.grid().unwrap().len(), 12);
        assert_eq!(cfg.model.n, 8);
    }
    let lrn = RunConfig::from_file(&root.join("lrn.conf")).unwrap();
    assert_eq!(lrn.observables().unwrap().len(), 7);
}
