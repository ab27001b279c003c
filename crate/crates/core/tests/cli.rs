use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn warpspec(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_warpspec"))
        .args(args)
        .current_dir(cwd)
        .env("WARPSPEC_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn field_output_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.toml"), "[field]\nnx = 32\nny = 24\n").unwrap();
    let out = tmp.path().join("out");
    let run = || {
        let o = warpspec(&["field", "--config", "run.toml", "--output", "out"], tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let files = read_dir_sorted(&out);
        fs::remove_dir_all(&out).unwrap();
        files
    };
    let a = run();
    let b = run();
    let names: Vec<_> = a.iter().map(|(n, _)| n.as_str()).collect();
    for f in ["density.grid", "density.pgm", "manifest.toml", "psi1_re.grid", "psi2_im.grid"] {
        assert!(names.contains(&f), "missing {f} in {names:?}");
    }
    assert_eq!(a, b);
}

#[test]
fn refuses_to_overwrite_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let first = warpspec(&["torus", "--output", "out"], tmp.path());
    assert!(first.status.success());
    let report = String::from_utf8_lossy(&first.stdout);
    assert!(report.contains("9.3905391378"), "{report}");
    let again = warpspec(&["torus", "--output", "out"], tmp.path());
    assert_eq!(again.status.code(), Some(1));
    let forced = warpspec(&["torus", "--output", "out", "--force"], tmp.path());
    assert!(forced.status.success());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.toml"), "[torus]\nnu1 = -3\n").unwrap();
    fs::write(tmp.path().join("typo.toml"), "[torus]\nnuu1 = 3\n").unwrap();
    let o = warpspec(&["torus", "--config", "bad.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert_eq!(warpspec(&["torus", "--config", "typo.toml"], tmp.path()).status.code(), Some(2));
    assert_eq!(warpspec(&["torus", "--bogus"], tmp.path()).status.code(), Some(1));
    assert_eq!(warpspec(&["--help"], tmp.path()).status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_warpspec"))
        .args(["torus"])
        .current_dir(tmp.path())
        .env("WARPSPEC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_passes_on_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let o = warpspec(&["verify", "--output", "v"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn spectrum_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let o = warpspec(&["spectrum", "--nu1", "15:16", "--nu2", "15", "--output", "s"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("s/spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
