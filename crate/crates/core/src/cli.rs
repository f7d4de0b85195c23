//! Problem files and the command implementations behind the `pdfi` binary.
//!
//! A problem file is TOML with the sections `[grid]`, `[map]`,
//! `[objective]`, `[boundary]`, `[solver]` and `[tolerances]`:
//!
//! ```toml
//! [grid]
//! L = 1.0
//! S = 1.0
//! T = 0.1
//! delta = 0.25
//! sigma = 0.25
//! h = 0.01
//! n = 1
//!
//! [map]
//! variant = "linear_control"
//! a = [[0.0]]
//! b = [[1.0]]
//! set = { kind = "box", lower = [-1.0], upper = [1.0] }
//!
//! [objective]
//! variant = "linear"
//! c = [1.0]
//!
//! [boundary]
//! initial = "zero"
//! y0 = "const:0"
//! ```
//!
//! Boundary faces are `initial`, `y0`, `yS`, `x0`, `xL`, each `"zero"`,
//! `"const:<v1>,<v2>,..."` or an inline CSV table whose first two columns
//! index the face (`ix,iy` on `initial`, `ix,it` on the y-faces, `iy,it` on
//! the x-faces) followed by one column per state component.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::certificate::{sufficiency_sampling, verify, Certificate, Tolerances, VerifyReport, DEFAULT_SEED};
use crate::dynamics::{check_feasible, simulate, ControlField};
use crate::error::{Error, Face, Result};
use crate::grid::{BoundaryData, Field, GridSpec};
use crate::inclusion::InclusionMap;
use crate::linalg::Matrix;
use crate::objective::{AffinePiece, Objective};
use crate::optimizer::{brute_force, solve_frank_wolfe, solve_polyhedral_lp, Problem, SolveResult};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PDFI_OUT_DIR";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    grid: GridSection,
    map: InclusionMap,
    objective: ObjectiveSection,
    #[serde(default)]
    boundary: BoundarySection,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    tolerances: ToleranceSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    #[serde(rename = "L")]
    length_x: f64,
    #[serde(rename = "S")]
    length_y: f64,
    #[serde(rename = "T")]
    horizon: f64,
    delta: f64,
    sigma: f64,
    h: f64,
    n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
enum ObjectiveSection {
    Linear {
        #[serde(default)]
        c: Option<Vec<f64>>,
        /// CSV `ix,iy,it,c_1,...`; nodes not listed take `c`.
        #[serde(default)]
        table: Option<String>,
    },
    Quadratic {
        q: Matrix,
        c: Vec<f64>,
    },
    PolyhedralMax {
        pieces: Vec<PieceSection>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceSection {
    slope: Vec<f64>,
    offset: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundarySection {
    initial: Option<String>,
    y0: Option<String>,
    #[serde(rename = "yS")]
    y_s: Option<String>,
    x0: Option<String>,
    #[serde(rename = "xL")]
    x_l: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FrankWolfe,
    Lp,
    BruteForce,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    method: Option<Method>,
    max_iters: Option<usize>,
    gap_tol: Option<f64>,
    alphabet: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToleranceSection {
    inclusion: Option<f64>,
    boundary: Option<f64>,
    argmax: Option<f64>,
    complementarity: Option<f64>,
    sufficiency: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub method: Method,
    pub max_iters: usize,
    pub gap_tol: f64,
    pub alphabet: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

/// A parsed problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub problem: Problem,
    pub solver: SolverSettings,
    pub tolerances: Tolerances,
    pub sampling: Sampling,
}

/// Command-line overrides applied on top of a problem file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ProblemFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let g = &file.grid;
        let spec = GridSpec::new(g.length_x, g.length_y, g.horizon, g.delta, g.sigma, g.h, g.n)?;
        file.map.validate()?;
        let objective = build_objective(&file.objective, &spec)?;
        let boundary = build_boundary(&file.boundary, &spec)?;
        let problem = Problem::new(file.map, objective, boundary)?;

        let s = &file.solver;
        let method = s.method.unwrap_or(match problem.map {
            InclusionMap::Polyhedral { .. } => Method::Lp,
            _ => Method::FrankWolfe,
        });
        let alphabet = match &s.alphabet {
            Some(a) => a.clone(),
            None => ternary_alphabet(problem.map.control_dim()),
        };
        let solver =
            SolverSettings { method, max_iters: s.max_iters.unwrap_or(500), gap_tol: s.gap_tol.unwrap_or(1e-9), alphabet };

        let t = &file.tolerances;
        let def = Tolerances::default();
        let tolerances = Tolerances {
            inclusion: t.inclusion.unwrap_or(def.inclusion),
            boundary: t.boundary.unwrap_or(def.boundary),
            argmax: t.argmax.unwrap_or(def.argmax),
            complementarity: t.complementarity.unwrap_or(def.complementarity),
        };
        tolerances.validate()?;
        let sampling = Sampling {
            samples: t.samples.unwrap_or(100),
            seed: t.seed.unwrap_or(DEFAULT_SEED),
            tol: t.sufficiency.unwrap_or(1e-6),
        };
        Ok(Self { problem, solver, tolerances, sampling })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(t) = o.tol {
            self.tolerances = Tolerances::uniform(t);
            self.tolerances.validate()?;
        }
        if let Some(s) = o.seed {
            self.sampling.seed = s;
        }
        if let Some(m) = o.max_iters {
            self.solver.max_iters = m;
        }
        Ok(())
    }

    pub fn spec(&self) -> &GridSpec {
        self.problem.spec()
    }
}

/// `{-1, 0, 1}^r` in odometer order (first coordinate fastest).
pub fn ternary_alphabet(r: usize) -> Vec<Vec<f64>> {
    let total = 3usize.pow(r as u32);
    (0..total)
        .map(|mut k| {
            (0..r)
                .map(|_| {
                    let d = k % 3;
                    k /= 3;
                    d as f64 - 1.0
                })
                .collect()
        })
        .collect()
}

fn build_objective(o: &ObjectiveSection, spec: &GridSpec) -> Result<Objective> {
    let n = spec.dim();
    match o {
        ObjectiveSection::Linear { c, table: None } => Ok(Objective::linear(c.clone().unwrap_or(vec![0.0; n]))),
        ObjectiveSection::Linear { c, table: Some(t) } => {
            let base = c.clone().unwrap_or(vec![0.0; n]);
            if base.len() != n {
                return Err(Error::Shape(format!("objective c has length {} for state dimension {n}", base.len())));
            }
            let mut f = Field::from_fn(spec, n, |_, _, _| base.clone());
            for (line, idx, vals) in parse_table(t, &["ix", "iy", "it"], n, "objective.table")? {
                let p = crate::grid::GridPoint::new(idx[0], idx[1], idx[2]);
                if !spec.contains(p) {
                    return Err(Error::Parse(format!("objective.table line {line}: node {p} is off the grid")));
                }
                f.get_mut(p).copy_from_slice(&vals);
            }
            Ok(Objective::linear_per_point(f))
        }
        ObjectiveSection::Quadratic { q, c } => Objective::quadratic(q.clone(), c.clone()),
        ObjectiveSection::PolyhedralMax { pieces } => Objective::polyhedral_max(
            pieces.iter().map(|p| AffinePiece { slope: p.slope.clone(), offset: p.offset }).collect(),
        ),
    }
}

/// Rows of an inline CSV table: `(line, index columns, value columns)`.
fn parse_table(text: &str, index: &[&str], n: usize, what: &str) -> Result<Vec<(usize, Vec<usize>, Vec<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.trim().as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Parse(format!("{what}: {e}")))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() != index.len() + n || names[..index.len()] != *index {
        return Err(Error::Parse(format!(
            "{what}: header must be {} followed by {n} value columns, got {}",
            index.join(","),
            names.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Parse(format!("{what} line {line}: {e}")))?;
        let idx = rec
            .iter()
            .take(index.len())
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("{what} line {line}: index {e}")))?;
        let vals = rec
            .iter()
            .skip(index.len())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("{what} line {line}: value {e}")))?;
        rows.push((line, idx, vals));
    }
    Ok(rows)
}

/// Samples of one face, indexed `(outer, inner)` as stored by [`BoundaryData`].
fn face_samples(text: Option<&str>, face: Face, name: &str, spec: &GridSpec) -> Result<Vec<f64>> {
    let n = spec.dim();
    let (inner, outer, cols): (usize, usize, [&str; 2]) = match face {
        Face::Time => (spec.nx(), spec.ny(), ["ix", "iy"]),
        Face::Y0 | Face::YS => (spec.nx(), spec.nt(), ["ix", "it"]),
        Face::X0 | Face::XL => (spec.ny(), spec.nt(), ["iy", "it"]),
    };
    let count = inner * outer;
    let text = text.unwrap_or("zero").trim();
    if text == "zero" {
        return Ok(vec![0.0; count * n]);
    }
    if let Some(rest) = text.strip_prefix("const:") {
        let v = rest
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("boundary.{name}: {e}")))?;
        if v.len() != n {
            return Err(Error::Parse(format!("boundary.{name}: {} values for state dimension {n}", v.len())));
        }
        return Ok((0..count).flat_map(|_| v.iter().copied()).collect());
    }
    let mut out = vec![0.0; count * n];
    let mut seen = vec![false; count];
    for (line, idx, vals) in parse_table(text, &cols, n, &format!("boundary.{name}"))? {
        if idx[0] >= inner || idx[1] >= outer {
            return Err(Error::Parse(format!("boundary.{name} line {line}: index ({}, {}) off the face", idx[0], idx[1])));
        }
        let k = idx[1] * inner + idx[0];
        seen[k] = true;
        out[k * n..(k + 1) * n].copy_from_slice(&vals);
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(Error::Parse(format!(
            "boundary.{name}: no row for {}={}, {}={}",
            cols[0],
            k % inner,
            cols[1],
            k / inner
        )));
    }
    Ok(out)
}

fn build_boundary(b: &BoundarySection, spec: &GridSpec) -> Result<BoundaryData> {
    BoundaryData::new(
        spec,
        face_samples(b.initial.as_deref(), Face::Time, "initial", spec)?,
        face_samples(b.y0.as_deref(), Face::Y0, "y0", spec)?,
        face_samples(b.y_s.as_deref(), Face::YS, "yS", spec)?,
        face_samples(b.x0.as_deref(), Face::X0, "x0", spec)?,
        face_samples(b.x_l.as_deref(), Face::XL, "xL", spec)?,
    )
}

/// Output directory: explicit flag, then [`OUT_DIR_ENV`], then `.`.
pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, bytes)?;
    Ok(path)
}

fn csv_bytes(f: &Field, prefix: &str) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f.write_csv_with_prefix(&mut buf, prefix)?;
    Ok(buf)
}

fn read_field(path: &Path, spec: &GridSpec, dim: usize) -> Result<Field> {
    let file = fs::File::open(path)?;
    Field::read_csv(file, spec, dim).map_err(|e| match e {
        Error::Shape(m) => Error::Shape(format!("{}: {m}", path.display())),
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Simulates with the control in `control` (zero when absent) and writes `state.csv`.
pub fn cmd_simulate(config: &Config, control: Option<&Path>, out_dir: &Path, out: &mut dyn Write) -> Result<i32> {
    let spec = *config.spec();
    let map = &config.problem.map;
    let w = match control {
        Some(p) => ControlField::from_field(read_field(p, &spec, map.control_dim())?),
        None => ControlField::zeros(&spec, map.control_dim()),
    };
    let sim = simulate(map, &config.problem.boundary, &w)?;
    let path = write_file(out_dir, "state.csv", &csv_bytes(&sim.state, "u")?)?;
    let feas = check_feasible(map, &config.problem.boundary, &sim.state, 1e-10)?;
    writeln!(out, "cfl_margin {:.16e}", sim.cfl_margin)?;
    for warn in &sim.warnings {
        writeln!(out, "warning {warn}")?;
    }
    writeln!(out, "{feas}")?;
    writeln!(out, "objective {:.16e}", config.problem.cost(&sim.state)?)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(0)
}

/// Runs the configured solver.
pub fn run_solver(config: &Config) -> Result<SolveResult> {
    let s = &config.solver;
    match s.method {
        Method::FrankWolfe => solve_frank_wolfe(&config.problem, s.max_iters, s.gap_tol),
        Method::Lp => solve_polyhedral_lp(&config.problem),
        Method::BruteForce => brute_force(&config.problem, &s.alphabet),
    }
}

/// Writes `control.csv`, `state.csv`, `adjoint.csv`, `multiplier.csv` (when
/// present) and `summary.txt`.
pub fn write_solution(res: &SolveResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = vec![
        write_file(out_dir, "control.csv", &csv_bytes(res.control.field(), "w")?)?,
        write_file(out_dir, "state.csv", &csv_bytes(&res.state, "u")?)?,
    ];
    if let Some(a) = &res.adjoint {
        paths.push(write_file(out_dir, "adjoint.csv", &csv_bytes(a, "ustar")?)?);
    }
    if let Some(q) = &res.multiplier {
        paths.push(write_file(out_dir, "multiplier.csv", &csv_bytes(q, "q")?)?);
    }
    paths.push(write_file(out_dir, "summary.txt", format!("{res}\n").as_bytes())?);
    Ok(paths)
}

fn report_solution(res: &SolveResult, paths: &[PathBuf], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{res}")?;
    for p in paths {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(())
}

/// Solves; exit 3 when the iteration budget ran out before the gap tolerance.
pub fn cmd_solve(config: &Config, out_dir: &Path, out: &mut dyn Write) -> Result<i32> {
    let res = run_solver(config)?;
    let paths = write_solution(&res, out_dir)?;
    report_solution(&res, &paths, out)?;
    Ok(if res.gap <= config.solver.gap_tol { 0 } else { 3 })
}

/// Exhaustive search over the configured alphabet.
pub fn cmd_oracle(config: &Config, out_dir: &Path, out: &mut dyn Write) -> Result<i32> {
    let res = brute_force(&config.problem, &config.solver.alphabet)?;
    let paths = write_solution(&res, out_dir)?;
    report_solution(&res, &paths, out)?;
    Ok(0)
}

/// Input files for [`cmd_verify`].
#[derive(Debug, Clone, Default)]
pub struct VerifyInputs {
    pub state: PathBuf,
    pub adjoint: PathBuf,
    pub multiplier: Option<PathBuf>,
    pub control: Option<PathBuf>,
}

/// Builds the certificate from files and runs every applicable check,
/// including random sampling when the structural checks pass.
pub fn verify_files(config: &Config, inputs: &VerifyInputs) -> Result<VerifyReport> {
    let spec = *config.spec();
    let n = spec.dim();
    let utilde = read_field(&inputs.state, &spec, n)?;
    let ustar = read_field(&inputs.adjoint, &spec, n)?;
    let q = match (&inputs.multiplier, &config.problem.map) {
        (Some(p), InclusionMap::Polyhedral { d, .. }) => Some(read_field(p, &spec, d.len())?),
        (Some(_), _) => return Err(Error::Invalid("multiplier files apply to polyhedral maps only".into())),
        (None, _) => None,
    };
    let control = match &inputs.control {
        Some(p) => Some(ControlField::from_field(read_field(p, &spec, config.problem.map.control_dim())?)),
        None => None,
    };
    let cert = Certificate::new(utilde, ustar, q, 1.0, config.tolerances)?;
    let report = verify(&config.problem, &cert, control.as_ref())?;
    if !report.pass || config.sampling.samples == 0 {
        return Ok(report);
    }
    let s = config.sampling;
    Ok(report.merge(sufficiency_sampling(&config.problem, &cert, s.samples, s.seed, s.tol)?))
}

/// Writes `report.txt` and `report.csv`; exit 0 on pass, 1 on failure.
pub fn cmd_verify(config: &Config, inputs: &VerifyInputs, out_dir: &Path, out: &mut dyn Write) -> Result<i32> {
    let report = verify_files(config, inputs)?;
    write_file(out_dir, "report.txt", format!("{report}\n").as_bytes())?;
    write_file(out_dir, "report.csv", report.records().as_bytes())?;
    writeln!(out, "{report}")?;
    Ok(if report.pass { 0 } else { 1 })
}

/// One time slice of a field CSV, read without a problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub t: f64,
    /// Row-major in `y`, then `x`.
    pub values: Vec<f64>,
    pub label: String,
}

fn key(v: f64) -> i64 {
    (v * 1e9).round() as i64
}

/// Reads component `component` (zero based) at time index `t_index` from a
/// CSV with header `x,y,t,<name>_1,...`.
pub fn read_slice(text: &str, t_index: usize, component: usize) -> Result<Slice> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.len() < 4 || &headers[0] != "x" || &headers[1] != "y" || &headers[2] != "t" {
        return Err(Error::Parse("field CSV must start with columns x,y,t".into()));
    }
    if component + 3 >= headers.len() {
        return Err(Error::Invalid(format!("component {component} out of range ({} available)", headers.len() - 3)));
    }
    let mut rows: Vec<[f64; 4]> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| {
            rec.get(i)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", k + 2)))
        };
        rows.push([get(0)?, get(1)?, get(2)?, get(3 + component)?]);
    }
    let mut times: BTreeMap<i64, f64> = BTreeMap::new();
    for r in &rows {
        times.insert(key(r[2]), r[2]);
    }
    let Some((&tk, &t)) = times.iter().nth(t_index) else {
        return Err(Error::Invalid(format!("time index {t_index} out of range (0..{})", times.len())));
    };
    let level: Vec<&[f64; 4]> = rows.iter().filter(|r| key(r[2]) == tk).collect();
    let xs: BTreeMap<i64, f64> = level.iter().map(|r| (key(r[0]), r[0])).collect();
    let ys: BTreeMap<i64, f64> = level.iter().map(|r| (key(r[1]), r[1])).collect();
    let xk: Vec<i64> = xs.keys().copied().collect();
    let yk: Vec<i64> = ys.keys().copied().collect();
    if level.len() != xk.len() * yk.len() {
        return Err(Error::Shape(format!("time slice {t_index} is not a full rectangular grid")));
    }
    let mut values = vec![0.0; level.len()];
    for r in level {
        let ix = xk.binary_search(&key(r[0])).unwrap_or_default();
        let iy = yk.binary_search(&key(r[1])).unwrap_or_default();
        values[iy * xk.len() + ix] = r[3];
    }
    Ok(Slice {
        xs: xs.into_values().collect(),
        ys: ys.into_values().collect(),
        t,
        values,
        label: headers[3 + component].to_string(),
    })
}

/// Heatmap with a linear blue-to-red scale and the slice range in the caption.
pub fn render_svg(s: &Slice) -> String {
    const CELL: usize = 32;
    let (nx, ny) = (s.xs.len(), s.ys.len());
    let lo = s.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (w, h) = (nx * CELL, ny * CELL + 40);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    for iy in 0..ny {
        for ix in 0..nx {
            let v = s.values[iy * nx + ix];
            let frac = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            let r = (255.0 * frac).round() as u8;
            let b = (255.0 * (1.0 - frac)).round() as u8;
            // y grows upward in the plot.
            let top = (ny - 1 - iy) * CELL;
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{top}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"rgb({r},64,{b})\"><title>{v:.16e}</title></rect>\n",
                ix * CELL
            ));
        }
    }
    svg.push_str(&format!(
        "<text x=\"4\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{} t={:.6} min={lo:.6e} max={hi:.6e}</text>\n",
        ny * CELL + 16,
        s.label,
        s.t
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Writes one SVG per requested time index, named `<stem>_t<k>.svg`.
pub fn cmd_plot(
    csv_path: &Path,
    t_indices: &[usize],
    component: usize,
    out_dir: &Path,
    out: &mut dyn Write,
) -> Result<i32> {
    let text = fs::read_to_string(csv_path)?;
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
    for &k in t_indices {
        let slice = read_slice(&text, k, component)?;
        let lo = slice.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = slice.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let path = write_file(out_dir, &format!("{stem}_t{k}.svg"), render_svg(&slice).as_bytes())?;
        writeln!(out, "t_index {k} min {lo:.16e} max {hi:.16e} wrote {}", path.display())?;
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[grid]
L = 1.0
S = 1.0
T = 0.1
delta = 0.5
sigma = 0.5
h = 0.05
n = 1

[map]
variant = "linear_control"
a = [[0.0]]
b = [[1.0]]
set = { kind = "box", lower = [-1.0], upper = [1.0] }

[objective]
variant = "linear"
c = [1.0]
"#;

    #[test]
    fn parses_defaults() {
        let c = Config::from_toml(BASE).unwrap();
        assert_eq!(c.solver.method, Method::FrankWolfe);
        assert_eq!(c.solver.alphabet, vec![vec![-1.0], vec![0.0], vec![1.0]]);
        assert_eq!(c.spec().nt(), 3);
        assert_eq!(c.sampling.seed, DEFAULT_SEED);
    }

    #[test]
    fn unknown_section_is_named() {
        let err = Config::from_toml(&format!("{BASE}\n[solverr]\nmethod = \"lp\"\n")).unwrap_err();
        assert!(matches!(&err, Error::Parse(m) if m.contains("solverr")), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn boundary_forms() {
        let text = format!(
            "{BASE}\n[boundary]\ninitial = \"const:0.5\"\ny0 = \"const:0.5\"\nyS = \"const:0.5\"\nx0 = \"const:0.5\"\nxL = \"\"\"\niy,it,u_1\n0,0,0.5\n1,0,0.5\n2,0,0.5\n0,1,0.5\n1,1,0.25\n2,1,0.5\n0,2,0.5\n1,2,0.0\n2,2,0.5\n\"\"\"\n"
        );
        let c = Config::from_toml(&text).unwrap();
        let p = crate::grid::GridPoint::new(2, 1, 1);
        assert_eq!(c.problem.boundary.value_at(p), Some(&[0.25][..]));
        let missing = text.replace("2,2,0.5\n", "");
        let err = Config::from_toml(&missing).unwrap_err();
        assert!(err.to_string().contains("iy=2, it=2"), "{err}");
    }

    #[test]
    fn ternary_order() {
        let a = ternary_alphabet(2);
        assert_eq!(a.len(), 9);
        assert_eq!(a[0], vec![-1.0, -1.0]);
        assert_eq!(a[1], vec![0.0, -1.0]);
    }

    #[test]
    fn slice_of_constant_field() {
        let spec = GridSpec::new(1.0, 1.0, 0.1, 0.5, 0.5, 0.05, 1).unwrap();
        let f = Field::from_fn(&spec, 1, |_, _, _| vec![2.0]);
        let text = String::from_utf8(csv_bytes(&f, "u").unwrap()).unwrap();
        let s = read_slice(&text, 2, 0).unwrap();
        assert_eq!(s.values, vec![2.0; 9]);
        let svg = render_svg(&s);
        assert!(svg.contains("min=2.000000e0 max=2.000000e0"));
        assert_eq!(svg.matches("rgb(128,64,128)").count(), 9);
        assert!(read_slice(&text, 3, 0).is_err());
    }
}
