use std::path::Path;
use std::process::{Command, Output};

fn risgain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risgain"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

// Data rows (no metadata, no header) split into fields.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn header(csv: &str) -> Vec<String> {
    csv.lines().find(|l| !l.starts_with('#')).unwrap().split(',').map(str::to_owned).collect()
}

fn col(csv: &str, name: &str) -> Vec<f64> {
    let idx = header(csv).iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows(csv).iter().map(|r| r[idx].parse().unwrap()).collect()
}

fn run_ok(args: &[&str]) -> String {
    let out = risgain(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn corr_gaussian_three_degrees() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "curves = [\"gaussian:3\"]\nlags = 32\n");
    let csv = run_ok(&["corr", "--config", &cfg, "--degrees"]);
    assert_eq!(rows(&csv).len(), 32);
    let abs = col(&csv, "abs");
    assert!((abs[0] - 1.0).abs() < 1e-9);
    assert!(abs.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{abs:?}");
    let approx = col(&csv, "abs_approx");
    assert!(approx.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(approx[0], 1.0);
}

#[test]
fn corr_exponential_is_geometric() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "curves = [\"exponential:0.5\"]\nlags = 20\n");
    let csv = run_ok(&["corr", "--config", &cfg]);
    for (n, a) in col(&csv, "abs").iter().enumerate() {
        assert!((a - 0.5f64.powi(n as i32)).abs() <= 1e-15 * 0.5f64.powi(n as i32), "n={n}: {a}");
    }
}

#[test]
fn gain_vs_n_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "g.toml",
        "curves = [\"gaussian:6\", \"laplacian:23\", \"exponential:0.7\"]\nn_r = [1, 2, 8, 32]\n",
    );
    let csv = run_ok(&["gain-vs-n", "--config", &cfg, "--degrees"]);
    let n = col(&csv, "N_r");
    let (z, d, l, b) = (col(&csv, "zeta"), col(&csv, "zeta_dft"), col(&csv, "lambda_max"), col(&csv, "bound"));
    for i in 0..n.len() {
        assert!(z[i] <= b[i] + 1e-6 && z[i] <= l[i] + 1e-6 && d[i] <= z[i] + 1e-9);
        if n[i] == 1.0 {
            assert!((z[i] - 1.0).abs() < 1e-12 && (d[i] - 1.0).abs() < 1e-12 && (l[i] - 1.0).abs() < 1e-12);
        } else {
            assert!(z[i] < n[i]);
        }
    }
    assert!(csv.contains("# config_hash: sha256:"));
    assert!(csv.contains("# rng: ChaCha20"));
}

#[test]
fn gain_vs_spread_decreasing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "spreads = [2, 5, 10, 20, 40, 60]\nn_elements = 64\n");
    let csv = run_ok(&["gain-vs-spread", "--config", &cfg, "--degrees", "--defaults", "fig2"]);
    let z = col(&csv, "zeta");
    assert_eq!(z.len(), 12);
    for fam in z.chunks(6) {
        assert!(fam.windows(2).all(|w| w[1] < w[0]), "{fam:?}");
        assert!(fam[5] > 1.0 && fam[5] < 1.1 * fam[5].min(2.0));
    }
}

#[test]
fn snr_vs_n_unit_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "n_r = [1, 32]\nsamples = 4000\nbenchmark_samples = 1000\n");
    let csv = run_ok(&["snr-vs-n", "--config", &cfg, "--defaults", "fig3"]);
    let h = header(&csv);
    let ni = h.iter().position(|x| x == "N_r").unwrap();
    let mi = h.iter().position(|x| x == "method").unwrap();
    let ai = h.iter().position(|x| x == "snr_analytic_db").unwrap();
    let r = rows(&csv);
    for row in r.iter().filter(|r| r[ni] == "1" && r[mi] != "instantaneous") {
        assert!(row[ai].parse::<f64>().unwrap().abs() < 1e-9);
    }
    for curve in ["gaussian:3deg", "laplacian:23deg"] {
        let at32: Vec<f64> = r
            .iter()
            .filter(|x| x[0] == curve && x[ni] == "32" && x[mi] != "instantaneous")
            .map(|x| x[ai].parse().unwrap())
            .collect();
        assert!((at32[0] - at32[1]).abs() < 0.2, "{curve}: {at32:?}");
    }
}

#[test]
fn deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "n_r = [4, 16]\nsamples = 2000\nbenchmark_samples = 1000\n");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        run_ok(&["snr-vs-n", "--config", &cfg, "--seed", "9", "--out", p.to_str().unwrap()]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = run_ok(&["snr-vs-n", "--config", &cfg, "--seed", "10"]);
    assert_ne!(std::fs::read_to_string(&a).unwrap(), c);
    assert!(c.contains("# seed: 10"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = write(dir.path(), "k.toml", "n_r = [2]\nbogus = 1\n");
    let out = risgain(&["gain-vs-n", "--config", &bad_key]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("bogus") && msg.contains("line 2"), "{msg}");

    let unsorted = write(dir.path(), "u.toml", "n_r = [8, 4]\n");
    assert_eq!(risgain(&["gain-vs-n", "--config", &unsorted]).status.code(), Some(2));
    let bad_kappa = write(dir.path(), "e.toml", "curves = [\"exponential:1.0\"]\n");
    assert_eq!(risgain(&["corr", "--config", &bad_kappa]).status.code(), Some(2));
    assert_eq!(risgain(&["corr", "--defaults", "fig9"]).status.code(), Some(2));
    assert_eq!(risgain(&["corr", "--config", "/nonexistent/x.toml"]).status.code(), Some(2));
}
