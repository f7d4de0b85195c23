//! End-to-end runs of the `pdfi` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use parabolic_dfi::cli::Config;
use parabolic_dfi::prelude::*;

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn pdfi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdfi")).args(args).env_remove("PDFI_OUT_DIR").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn values(path: &Path) -> Vec<f64> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records().map(|r| r.unwrap()[3].parse::<f64>().unwrap()).collect()
}

#[test]
fn simulate_zero_problem_writes_zero_state() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdfi(&["simulate", s(&problem("zero.toml")), "--out-dir", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("cfl_margin"));
    assert!(values(&dir.path().join("state.csv")).iter().all(|v| *v == 0.0));
}

#[test]
fn simulated_state_rereads_as_admissible() {
    let dir = tempfile::tempdir().unwrap();
    let path = problem("tiny_bang_bang.toml");
    let config = Config::load(&path).unwrap();
    let spec = *config.spec();
    let w = ControlField::constant(&spec, &[-0.5]);
    let wpath = dir.path().join("w.csv");
    w.write_csv(fs::File::create(&wpath).unwrap()).unwrap();
    let o = pdfi(&["simulate", s(&path), "--control", s(&wpath), "--out-dir", s(dir.path())]);
    assert_eq!(code(&o), 0);
    let u = Field::read_csv(fs::File::open(dir.path().join("state.csv")).unwrap(), &spec, 1).unwrap();
    let rep = check_feasible(&config.problem.map, &config.problem.boundary, &u, 1e-10).unwrap();
    assert!(rep.pass, "{rep}");
}

/// Plain explicit heat step with source `w`, written independently of the grid module.
fn heat_oracle(points: usize, h: f64, steps: usize, w: f64) -> Vec<f64> {
    let d = 1.0 / (points - 1) as f64;
    let c = h / (d * d);
    let mut u = vec![0.0; points * points];
    let mut all = u.clone();
    for _ in 0..steps {
        let mut next = vec![0.0; points * points];
        for iy in 1..points - 1 {
            for ix in 1..points - 1 {
                let i = iy * points + ix;
                next[i] = u[i] + c * (u[i - 1] + u[i + 1] + u[i - points] + u[i + points] - 4.0 * u[i]) + h * w;
            }
        }
        u = next;
        all.extend_from_slice(&u);
    }
    all
}

#[test]
fn simulate_bang_bang_file_matches_heat_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let path = problem("bang_bang.toml");
    let config = Config::load(&path).unwrap();
    let spec = *config.spec();
    let wpath = dir.path().join("w.csv");
    ControlField::constant(&spec, &[-1.0]).write_csv(fs::File::create(&wpath).unwrap()).unwrap();
    let o = pdfi(&["simulate", s(&path), "--control", s(&wpath), "--out-dir", s(dir.path())]);
    assert_eq!(code(&o), 0);
    let got = values(&dir.path().join("state.csv"));
    let want = heat_oracle(11, 0.002, spec.nt() - 1, -1.0);
    assert_eq!(got.len(), want.len());
    let diff = got.iter().zip(&want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(diff < 1e-14, "{diff}");
}

#[test]
fn malformed_section_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(problem("zero.toml")).unwrap().replace("[objective]", "[objectiv]");
    let path = dir.path().join("bad.toml");
    fs::write(&path, text).unwrap();
    let o = pdfi(&["solve", s(&path), "--out-dir", s(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("objectiv"));
    assert_eq!(code(&pdfi(&["frobnicate"])), 2);
}

#[test]
fn solve_then_verify_bang_bang() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let path = problem("tiny_bang_bang.toml");
    let o = pdfi(&["solve", s(&path), "--out-dir", s(d)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let w = values(&d.join("control.csv"));
    let ustar = values(&d.join("adjoint.csv"));
    let config = Config::load(&path).unwrap();
    let spec = *config.spec();
    for p in spec.interior_points(0..spec.nt() - 1) {
        let i = (p.it * spec.ny() + p.iy) * spec.nx() + p.ix;
        if ustar[i].abs() > 1e-8 {
            assert_eq!(w[i], -1.0);
        }
    }
    let state = d.join("state.csv");
    let adjoint = d.join("adjoint.csv");
    let o = pdfi(&["verify", s(&path), "--state", s(&state), "--adjoint", s(&adjoint), "--out-dir", s(d)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(fs::read_to_string(d.join("report.csv")).unwrap().contains("maximum_principle,"));

    // Scale the adjoint: the argmax and inclusion conditions break.
    let text = fs::read_to_string(&adjoint).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(rdr.headers().unwrap()).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let v: f64 = rec[3].parse().unwrap();
        wtr.write_record([&rec[0], &rec[1], &rec[2], &format!("{:e}", -2.0 * v - 0.5 * v.abs())]).unwrap();
    }
    let bad = d.join("bad_adjoint.csv");
    fs::write(&bad, wtr.into_inner().unwrap()).unwrap();
    let o = pdfi(&["verify", s(&path), "--state", s(&state), "--adjoint", s(&bad), "--out-dir", s(d)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("adjoint_inclusion        FAIL"));
}

#[test]
fn polyhedral_solve_and_verify_with_multipliers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let path = problem("state_constrained.toml");
    assert_eq!(code(&pdfi(&["solve", s(&path), "--out-dir", s(d)])), 0);
    let o = pdfi(&[
        "verify",
        s(&path),
        "--state",
        s(&d.join("state.csv")),
        "--adjoint",
        s(&d.join("adjoint.csv")),
        "--multiplier",
        s(&d.join("multiplier.csv")),
        "--out-dir",
        s(d),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("complementarity"));
}

#[test]
fn capability_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(problem("polyhedral.toml")).unwrap() + "\n[solver]\nmethod = \"frank_wolfe\"\n";
    let path = dir.path().join("fw_on_poly.toml");
    fs::write(&path, text).unwrap();
    let o = pdfi(&["solve", s(&path), "--out-dir", s(dir.path())]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("linear-control"));

    let big = fs::read_to_string(problem("polyhedral.toml"))
        .unwrap()
        .replace("T = 0.1", "T = 2.0")
        .replace("delta = 0.5", "delta = 0.05")
        .replace("sigma = 0.5", "sigma = 0.05")
        .replace("h = 0.05", "h = 0.0005");
    let path = dir.path().join("big.toml");
    fs::write(&path, big).unwrap();
    let o = pdfi(&["solve", s(&path), "--out-dir", s(dir.path())]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds the dense limit"));
}

#[test]
fn oracle_matches_solver_on_tiny_problem() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdfi(&["oracle", s(&problem("tiny_bang_bang.toml")), "--out-dir", s(dir.path())]);
    assert_eq!(code(&o), 0);
    let oracle = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    let o = pdfi(&["solve", s(&problem("tiny_bang_bang.toml")), "--out-dir", s(dir.path())]);
    assert_eq!(code(&o), 0);
    let solved = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(oracle.lines().next(), solved.lines().next());
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pdfi"))
        .args(["simulate", s(&problem("zero.toml"))])
        .env("PDFI_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("state.csv").exists());
}

#[test]
fn plots() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = GridSpec::unit_square(4, 0.1, 0.2, 1).unwrap();
    let constant = Field::from_fn(&spec, 1, |_, _, _| vec![1.5]);
    let cpath = d.join("constant.csv");
    constant.write_csv(fs::File::create(&cpath).unwrap()).unwrap();
    let o = pdfi(&["plot", s(&cpath), "--t-index", "0", "--t-index", "2", "--out-dir", s(d)]);
    assert_eq!(code(&o), 0);
    let svg = fs::read_to_string(d.join("constant_t2.svg")).unwrap();
    assert_eq!(svg.matches("rgb(128,64,128)").count(), 16);
    assert!(svg.contains("min=1.500000e0 max=1.500000e0"));

    let mut bump = Field::state_zeros(&spec);
    bump.get_mut(GridPoint::new(2, 1, 1))[0] = 3.0;
    let bpath = d.join("bump.csv");
    bump.write_csv(fs::File::create(&bpath).unwrap()).unwrap();
    assert_eq!(code(&pdfi(&["plot", s(&bpath), "--t-index", "1", "--out-dir", s(d)])), 0);
    let svg = fs::read_to_string(d.join("bump_t1.svg")).unwrap();
    assert_eq!(svg.matches("rgb(0,64,255)").count(), 15);
    assert_eq!(svg.matches("rgb(255,64,0)").count(), 1);

    assert_eq!(code(&pdfi(&["plot", s(&bpath), "--t-index", "9", "--out-dir", s(d)])), 2);

    // Adjoint slice of the bang-bang problem is nonpositive.
    assert_eq!(code(&pdfi(&["solve", s(&problem("tiny_bang_bang.toml")), "--out-dir", s(d)])), 0);
    let o = pdfi(&["plot", s(&d.join("adjoint.csv")), "--t-index", "0", "--out-dir", s(d)]);
    let line = String::from_utf8(o.stdout).unwrap();
    let max: f64 = line.split_whitespace().nth(5).unwrap().parse().unwrap();
    assert!(max <= 0.0, "{line}");
}
