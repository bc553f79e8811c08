use std::path::Path;
use std::process::{Command, Output};

fn dsap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field(summary: &str, key: &str) -> f64 {
    summary
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in summary"))
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn presets_listed() {
    let o = dsap(&["presets"]);
    assert!(o.status.success());
    let names = stdout(&o);
    for name in ["fig2a", "fig3d", "fig4f", "table-2a", "table-spin3half-n3"] {
        assert!(names.lines().any(|l| l == name), "{name}");
    }
}

#[test]
fn run_fig2a_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = dsap(&["run", "--preset", "fig2a", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = std::fs::read_to_string(out.join("fig2a_summary.txt")).unwrap();
    assert_eq!(summary, stdout(&o));
    assert!(field(&summary, "fidelity") >= 0.99);
    assert!((field(&summary, "entanglement_bits") - 1.0).abs() < 1e-3);
    let csv = std::fs::read_to_string(out.join("fig2a_trajectory.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "t,t_over_tmax,min_gap,adiabaticity_ratio,norm,|1̄1̄1̄1⟩,|1̄1̄11̄⟩,|1̄11̄1̄⟩,|11̄1̄1̄⟩"
    );
    assert_eq!(csv.lines().count(), 502);
}

#[test]
fn run_table_4d() {
    let o = dsap(&["run", "--preset", "table-4d"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(field(&stdout(&o), "fidelity") >= 0.99);
}

#[test]
fn flags_match_preset_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    let by_preset = dsap(&["run", "--preset", "fig3d", "--samples", "101", "--out", a.to_str().unwrap()]);
    let by_flags = dsap(&[
        "run", "--spin", "1", "--leaves", "2", "--left-projection", "2", "--tmax-product", "1000",
        "--samples", "101", "--out", b.to_str().unwrap(),
    ]);
    let again = dsap(&["run", "--preset", "fig3d", "--samples", "101", "--out", c.to_str().unwrap()]);
    for o in [&by_preset, &by_flags, &again] {
        assert_eq!(o.status.code(), Some(0), "{}", stderr(o));
    }
    let read = |p: &Path, name: &str| std::fs::read(p.join(name)).unwrap();
    assert_eq!(read(&a, "fig3d_trajectory.csv"), read(&b, "s2-n2-m2_trajectory.csv"));
    assert_eq!(read(&a, "fig3d_trajectory.csv"), read(&c, "fig3d_trajectory.csv"));
    assert_eq!(read(&a, "fig3d_summary.txt"), read(&c, "fig3d_summary.txt"));
}

#[test]
fn config_file_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.cfg");
    std::fs::write(&cfg, "# spin-3/2, one quantum\nspin = 3/2\nleaves = 3\nleft_projection = -1\nsamples = 51\n").unwrap();
    let o = dsap(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("reference: spin3half-n3"));
    assert!((field(&s, "entanglement_bits") - 0.9183).abs() < 1e-3);
}

#[test]
fn usage_and_config_errors_exit_2() {
    let o = dsap(&["run", "--preset", "fig9z"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown preset"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "spin = 1\ncolour = blue\n").unwrap();
    let o = dsap(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key"));

    let o = dsap(&["run", "--config", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = dsap(&["run", "--preset", "fig2a", "--samples", "11", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = dsap(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));

    let o = dsap(&["sweep", "--preset", "fig2a", "--sweep", "1000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("≥ 2 sweep points"));
}

#[test]
fn sweep_fig2a_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = dsap(&["sweep", "--preset", "fig2a", "--sweep", "10,100,1000", "--samples", "101", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0][1] > rows[1][1] && rows[1][1] > rows[2][1]);
    assert!(rows[2][1] < 1e-2);
}

#[test]
fn run_with_oracle() {
    let o = dsap(&["run", "--preset", "fig3a", "--samples", "51", "--oracle"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("overlap_deficit"));
    assert!(!s.contains("FAIL"));
}

#[test]
fn hamiltonian_dump() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.csv");
    let o = dsap(&["run", "--preset", "fig2a", "--samples", "11", "--dump-hamiltonian", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(path).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "row,col,re,im");
    let entries: Vec<(usize, usize, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    for &(r, c, v) in &entries {
        assert!(entries.iter().any(|&(r2, c2, v2)| r2 == c && c2 == r && v2 == v));
    }
}
