use std::path::Path;
use std::process::{Command, Output};

fn endotomo(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_endotomo"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn malformed_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.toml", "scenario = \"in_phase\"\n[interaction]\nkappa = 1.0\ncoupling = 2.0\n");
    let out = endotomo(&["run", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("coupling") && err.contains("line 4"), "{err}");

    write(dir.path(), "range.toml", "scenario = \"in_phase\"\n\n[grid]\npoints = 4\n");
    let out = endotomo(&["run", "range.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`points`"));

    write(dir.path(), "name.toml", "scenario = \"tomograpy\"\n");
    assert_eq!(endotomo(&["run", "name.toml"], dir.path()).status.code(), Some(2));
}

#[test]
fn sampling_scenarios_require_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "weak.toml", "scenario = \"weak\"\n");
    let out = endotomo(&["run", "weak.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn in_phase_defaults_preserve_the_meter_marginal() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ip.toml", "scenario = \"in_phase\"\n");
    let out = endotomo(&["run", "ip.toml", "--out", "run"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    let m = manifest(&run);
    assert!(m["metrics"]["meter_marginal_max_diff"].as_f64().unwrap() < 1e-8);
    assert_eq!(m["config"]["interaction"]["homodyne"], "in_phase");
    assert_eq!(m["config"]["meter"]["kind"], "vacuum");
    for f in m["files"].as_array().unwrap() {
        let name = f.as_str().unwrap();
        if name.ends_with(".csv") {
            let text = std::fs::read_to_string(run.join(name)).unwrap();
            let header = text.lines().next().unwrap();
            assert!(header.split(',').all(|c| c.contains('[')), "{name}: {header}");
        }
    }
}

#[test]
fn tomography_of_a_single_photon_shows_negativity() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "tomo.toml",
        "scenario = \"tomography\"\noutput = \"tomo\"\n[signal]\nkind = \"fock\"\nn = 1\n[tomography]\nphases = 32\n",
    );
    let out = endotomo(&["run", "tomo.toml", "--seed", "5"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&dir.path().join("tomo"));
    assert_eq!(m["seed"], 5);
    assert!(m["metrics"]["wigner_min"].as_f64().unwrap() < -0.25);
    let wigner = std::fs::read_to_string(dir.path().join("tomo/wigner.csv")).unwrap();
    let min = wigner
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(min < -0.25, "{min}");
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tomo.toml", "scenario = \"tomography\"\nseed = 1\n[tomography]\nexact = true\n");
    let out = endotomo(&["run", "tomo.toml", "--phases", "8"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("hint") && err.contains("phases"), "{err}");
}

#[test]
fn unresolvable_grid_gives_a_hint() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "wide.toml",
        "scenario = \"out_of_phase\"\n[signal]\nkind = \"coherent\"\nalpha = [0.0, 2.5]\n",
    );
    let out = endotomo(&["run", "wide.toml"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("half_width"));
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "tomo.toml",
        "scenario = \"tomography\"\nseed = 9\n[tomography]\nphases = 16\nshots = 2000\n",
    );
    for out in ["a", "b"] {
        assert!(endotomo(&["run", "tomo.toml", "--out", out], dir.path()).status.success());
    }
    for f in ["samples.csv", "marginals.csv", "wigner.csv", "manifest.json"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        if f == "manifest.json" {
            assert_eq!(a.len(), b.len());
        } else {
            assert_eq!(a, b, "{f}");
        }
    }
}

#[test]
fn check_prints_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = endotomo(&["check"], dir.path());
    assert!(out.status.success());
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.lines().count() >= 10);
    assert!(table.lines().all(|l| l.ends_with("PASS")), "{table}");
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            endotomo_cli::ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert_eq!(seen, 6);
}
