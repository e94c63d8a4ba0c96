use std::path::{Path, PathBuf};
use std::process::Command;

use acquire_cli::output::read_grid;
use acquire_core::admissible::admissible;
use acquire_core::sim::{init_search_set, Scenario};

fn config(name: &str) -> PathBuf {
    PathBuf::from(format!("{}/../../configs/{name}.toml", env!("CARGO_MANIFEST_DIR")))
}

fn acquire(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_acquire")).args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn ar_points_satisfy_the_constraints() {
    let dir = tempfile::tempdir().unwrap();
    acquire(&["ar", "--config", config("case2").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let s = Scenario::case2();
    let att = init_search_set(&s).unwrap().attributable;
    let mut r = csv::ReaderBuilder::new().delimiter(b'\t').from_path(dir.path().join("ar_points.tsv")).unwrap();
    assert_eq!(r.headers().unwrap().get(0), Some("range[km]"));
    let mut n = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        let v: Vec<f64> = rec.iter().map(|x| x.parse().unwrap()).collect();
        assert!(admissible(&att, v[0], v[1], &s.ar), "{v:?}");
        assert!(s.ar.accepts(v[2], v[3]), "{v:?}");
        n += 1;
    }
    assert!(n > 0);
    let gmm = std::fs::read_to_string(dir.path().join("ar_gmm.tsv")).unwrap();
    assert_eq!(gmm.lines().count(), n + 1);
    assert_eq!(gmm.lines().next().unwrap().split('\t').count(), 1 + 6 + 21);
}

#[test]
fn run_writes_one_grid_per_scan() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    acquire(&["run", "--config", config("case1").to_str().unwrap(), "--policy", "scan", "--scans", "3", "--out", out]);
    let grid = init_search_set(&Scenario::case1()).unwrap().grid;
    for kind in ["rewards", "intensity"] {
        let files = std::fs::read_dir(dir.path().join(kind)).unwrap().count();
        assert_eq!(files, 3, "{kind}");
        for scan in 0..3 {
            let (header, rows) = read_grid(&dir.path().join(kind).join(format!("scan_{scan:03}.grid"))).unwrap();
            assert_eq!((header[0] as usize, header[1] as usize), (grid.n_dec, grid.n_ra));
            assert_eq!(rows.len(), grid.n_dec);
            assert!(rows.iter().all(|r| r.len() == grid.n_ra));
        }
    }
    let scans = std::fs::read_to_string(dir.path().join("scans.tsv")).unwrap();
    assert_eq!(scans.lines().count(), 4);
    let header = scans.lines().next().unwrap();
    assert!(header.split('\t').skip(1).all(|h| h.ends_with(']')), "{header}");
    assert!(!header.contains("wall"));
}

#[test]
fn mc_is_byte_reproducible() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        acquire(&[
            "mc", "--config", config("case1").to_str().unwrap(), "--trials", "1", "--scans", "2", "--n-samp", "500", "--seed", "7",
            "--out", d.path().to_str().unwrap(),
        ]);
    }
    for name in ["aggregate.tsv", "trials.tsv", "summary.tsv"] {
        assert_eq!(read(&dirs[0].path().join(name)), read(&dirs[1].path().join(name)), "{name}");
    }

    let report = acquire(&["report", dirs[0].path().to_str().unwrap()]);
    let text = String::from_utf8(report.stdout).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");
    assert!(text.starts_with("scan\tinfo_divergence_median[nat]"));
}

#[test]
fn bad_config_exits_nonzero_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, std::fs::read_to_string(config("case1")).unwrap().replace("p_d = 0.75\n", "")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_acquire"))
        .args(["ar", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("p_d"));
}
