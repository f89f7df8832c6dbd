//! Result files: legacy ASCII VTK for the wake mesh and the vorticity grid,
//! CSV for circulation histories and sectional slices, JSON manifest.
//!
//! Floats are written in shortest round-trip decimal form, so every file
//! reloads to the exact in-memory values.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::SimConfig;
use crate::sim::{CirculationHistory, RunDiagnostics, SimulationRun};
use crate::wake::{FieldGrid, SliceSample, WakeStructure};
use crate::{Error, Result, Vec3};

pub const WAKE_FILE: &str = "wake.vtk";
pub const FIELD_FILE: &str = "vorticity.vtk";
pub const CIRCULATION_FILE: &str = "circulation.csv";
pub const SLICES_FILE: &str = "slices.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

/// Shortest decimal that parses back to `v`; exponent form outside `[1e-5, 1e16)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn push_scalars(out: &mut String, name: &str, values: &[f64]) {
    let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
    for v in values {
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
}

fn push_vec3(out: &mut String, v: &Vec3) {
    let _ = writeln!(out, "{} {} {}", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z));
}

/// Wake mesh as POLYDATA: quads, per-vertex `phase`, per-face `gamma`.
pub fn wake_to_vtk(wake: &WakeStructure) -> String {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "wakegait wake rows {} strips {}", wake.n_rows, wake.n_strips);
    out.push_str("ASCII\nDATASET POLYDATA\n");
    let _ = writeln!(out, "POINTS {} double", wake.vertices.len());
    for v in &wake.vertices {
        push_vec3(&mut out, v);
    }
    let _ = writeln!(out, "POLYGONS {} {}", wake.faces.len(), 5 * wake.faces.len());
    for f in &wake.faces {
        let _ = writeln!(out, "4 {} {} {} {}", f[0], f[1], f[2], f[3]);
    }
    let _ = writeln!(out, "POINT_DATA {}", wake.vertices.len());
    push_scalars(&mut out, "phase", &wake.phase);
    let _ = writeln!(out, "CELL_DATA {}", wake.faces.len());
    push_scalars(&mut out, "gamma", &wake.face_gamma);
    out
}

pub fn write_wake_vtk(wake: &WakeStructure, path: &Path) -> Result<()> {
    write_file(path, &wake_to_vtk(wake))
}

struct Tokens<'a> {
    it: std::iter::Peekable<std::str::SplitWhitespace<'a>>,
    path: &'a Path,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.it.next().ok_or_else(|| parse_err(self.path, "unexpected end of file"))
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let t = self.next()?;
        if t.eq_ignore_ascii_case(word) {
            Ok(())
        } else {
            Err(parse_err(self.path, format!("expected `{word}`, found `{t}`")))
        }
    }

    fn parse<T: std::str::FromStr>(&mut self) -> Result<T> {
        let t = self.next()?;
        t.parse().map_err(|_| parse_err(self.path, format!("bad number `{t}`")))
    }

    fn scalars(&mut self, n: usize) -> Result<(String, Vec<f64>)> {
        self.expect("SCALARS")?;
        let name = self.next()?.to_string();
        self.next()?;
        if self.it.peek().is_some_and(|t| *t == "1") {
            self.next()?;
        }
        self.expect("LOOKUP_TABLE")?;
        self.next()?;
        let values = (0..n).map(|_| self.parse()).collect::<Result<_>>()?;
        Ok((name, values))
    }
}

/// Read a wake mesh written by [`wake_to_vtk`].
pub fn wake_from_vtk(text: &str, path: &Path) -> Result<WakeStructure> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if !header.starts_with("# vtk DataFile") {
        return Err(parse_err(path, "missing VTK header"));
    }
    let title: Vec<&str> = lines.next().unwrap_or_default().split_whitespace().collect();
    let field = |key: &str| -> Option<usize> {
        title.iter().position(|t| *t == key).and_then(|i| title.get(i + 1)?.parse().ok())
    };
    let (n_rows, n_strips) = (field("rows"), field("strips"));
    let rest: String = lines.collect::<Vec<_>>().join("\n");
    let mut tk = Tokens {
        it: rest.split_whitespace().peekable(),
        path,
    };
    tk.expect("ASCII")?;
    tk.expect("DATASET")?;
    tk.expect("POLYDATA")?;
    tk.expect("POINTS")?;
    let np: usize = tk.parse()?;
    tk.next()?;
    let mut vertices = Vec::with_capacity(np);
    for _ in 0..np {
        vertices.push(Vec3::new(tk.parse()?, tk.parse()?, tk.parse()?));
    }
    tk.expect("POLYGONS")?;
    let nf: usize = tk.parse()?;
    let _size: usize = tk.parse()?;
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let k: usize = tk.parse()?;
        if k != 4 {
            return Err(parse_err(path, format!("expected quads, found a {k}-gon")));
        }
        let mut f = [0usize; 4];
        for v in f.iter_mut() {
            *v = tk.parse()?;
            if *v >= np {
                return Err(parse_err(path, format!("vertex index {v} out of range")));
            }
        }
        faces.push(f);
    }
    let mut phase = vec![0.0; np];
    let mut gamma = vec![0.0; nf];
    while let Some(section) = tk.it.next() {
        let n: usize = tk.parse()?;
        let (name, values) = tk.scalars(n)?;
        match (section, name.as_str()) {
            ("POINT_DATA", "phase") if n == np => phase = values,
            ("CELL_DATA", "gamma") if n == nf => gamma = values,
            _ => return Err(parse_err(path, format!("unexpected {section} array `{name}`"))),
        }
    }
    let n_strips = n_strips.unwrap_or(0);
    let n_rows = n_rows.unwrap_or(np / (n_strips + 1));
    Ok(WakeStructure::new(vertices, faces, gamma, phase, n_rows, n_strips))
}

pub fn read_wake_vtk(path: &Path) -> Result<WakeStructure> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    wake_from_vtk(&text, path)
}

/// Vorticity grid as STRUCTURED_POINTS; iso thresholds go in the title line.
pub fn field_to_vtk(grid: &FieldGrid) -> String {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let th: Vec<String> = grid.thresholds.iter().map(|t| fmt_f64(*t)).collect();
    let _ = writeln!(out, "wakegait omega_x iso {}", th.join(" "));
    out.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
    let [nx, ny, nz] = grid.dims;
    let _ = writeln!(out, "DIMENSIONS {nx} {ny} {nz}");
    out.push_str("ORIGIN ");
    push_vec3(&mut out, &grid.origin);
    out.push_str("SPACING ");
    push_vec3(&mut out, &grid.spacing);
    let _ = writeln!(out, "POINT_DATA {}", grid.len());
    push_scalars(&mut out, "omega_x", &grid.omega_x);
    out.push_str("VECTORS velocity double\n");
    for v in &grid.velocity {
        push_vec3(&mut out, v);
    }
    out
}

pub fn write_field_vtk(grid: &FieldGrid, path: &Path) -> Result<()> {
    write_file(path, &field_to_vtk(grid))
}

pub fn circulation_to_csv(history: &CirculationHistory) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let n = history.stations.len();
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("s_{i}")));
    header.extend((0..n).map(|i| format!("gamma_{i}")));
    let to_err = |e: csv::Error| Error::InvalidArgument(e.to_string());
    w.write_record(&header).map_err(to_err)?;
    for (t, g) in history.times.iter().zip(&history.gamma) {
        let mut rec = Vec::with_capacity(1 + 2 * n);
        rec.push(fmt_f64(*t));
        rec.extend(history.stations.iter().map(|s| fmt_f64(*s)));
        rec.extend(g.iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec).map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii csv"))
}

pub fn circulation_from_csv(text: &str, path: &Path) -> Result<CirculationHistory> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| parse_err(path, e.to_string()))?.clone();
    if headers.is_empty() || headers.len() % 2 == 0 || &headers[0] != "t" {
        return Err(parse_err(path, "expected columns t, s_i.., gamma_i.."));
    }
    let n = (headers.len() - 1) / 2;
    let mut out = CirculationHistory::default();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(path, e.to_string()))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(path, format!("record {}: {e}", line + 1)))?;
        if line == 0 {
            out.stations = vals[1..=n].to_vec();
        }
        out.times.push(vals[0]);
        out.gamma.push(vals[n + 1..].to_vec());
    }
    Ok(out)
}

pub fn slices_to_csv(slices: &[SliceSample]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::InvalidArgument(e.to_string());
    w.write_record(["x", "y", "z", "v_y", "v_z", "omega_x"]).map_err(to_err)?;
    for s in slices {
        w.write_record([s.x, s.y, s.z, s.v_y, s.v_z, s.omega_x].map(fmt_f64))
            .map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii csv"))
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldSummary {
    pub dims: [usize; 3],
    pub iso_thresholds: [f64; 4],
    pub max_abs_omega_x: f64,
    pub max_speed: f64,
    /// Largest `|div v|` on interior points, relative to `max|v| / spacing`.
    pub relative_divergence: f64,
}

impl FieldSummary {
    pub fn of(grid: &FieldGrid) -> Self {
        let h = grid.spacing.x.min(grid.spacing.y).min(grid.spacing.z);
        let vmax = grid.max_speed();
        let div = grid.divergence().iter().fold(0.0_f64, |a, d| a.max(d.abs()));
        Self {
            dims: grid.dims,
            iso_thresholds: grid.thresholds,
            max_abs_omega_x: grid.omega_x.iter().fold(0.0, |a, w| a.max(w.abs())),
            max_speed: vmax,
            relative_divergence: if vmax > 0.0 { div * h / vmax } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub program: &'static str,
    pub version: &'static str,
    pub config: &'a SimConfig,
    pub diagnostics: &'a RunDiagnostics,
    pub wake_vertices: usize,
    pub wake_faces: usize,
    pub field: Option<FieldSummary>,
    pub files: Vec<String>,
}

/// Everything one CLI run produces.
pub struct RunArtifacts<'a> {
    pub config: &'a SimConfig,
    pub run: &'a SimulationRun,
    pub field: Option<&'a FieldGrid>,
    pub slices: &'a [SliceSample],
}

/// Write all result files into `dir`. Returns the paths written, manifest last.
pub fn export_outputs(artifacts: &RunArtifacts, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: &str| -> Result<()> {
        let p = dir.join(name);
        write_file(&p, text)?;
        written.push(p);
        Ok(())
    };
    put(WAKE_FILE, &wake_to_vtk(&artifacts.run.wake))?;
    put(CIRCULATION_FILE, &circulation_to_csv(&artifacts.run.history)?)?;
    if let Some(grid) = artifacts.field {
        put(FIELD_FILE, &field_to_vtk(grid))?;
    }
    if !artifacts.slices.is_empty() {
        put(SLICES_FILE, &slices_to_csv(artifacts.slices)?)?;
    }
    let files: Vec<String> = written
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let manifest = Manifest {
        program: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: artifacts.config,
        diagnostics: &artifacts.run.diagnostics,
        wake_vertices: artifacts.run.wake.vertices.len(),
        wake_faces: artifacts.run.wake.faces.len(),
        field: artifacts.field.map(FieldSummary::of),
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    let p = dir.join(MANIFEST_FILE);
    write_file(&p, &text)?;
    written.push(p);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 1e-20, -2.5e-7, 6.02e23, f64::MIN_POSITIVE, 123456.789] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(0.25), "0.25");
    }

    #[test]
    fn wake_round_trip() {
        let vertices: Vec<Vec3> = (0..6).map(|k| Vec3::new(0.1 * k as f64, 1.0 / 3.0, -1e-9 * k as f64)).collect();
        let w = WakeStructure::new(
            vertices,
            vec![[0, 1, 4, 3], [1, 2, 5, 4]],
            vec![0.5, -1.0 / 7.0],
            (0..6).map(|k| k as f64 / 6.0).collect(),
            1,
            2,
        );
        let back = wake_from_vtk(&wake_to_vtk(&w), Path::new("w.vtk")).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn circulation_round_trip() {
        let h = CirculationHistory {
            stations: vec![-0.1, 0.1],
            times: vec![0.0, 0.0025],
            gamma: vec![vec![0.0, 0.0], vec![1.0 / 3.0, -2e-17]],
        };
        let text = circulation_to_csv(&h).unwrap();
        assert!(text.starts_with("t,s_0,s_1,gamma_0,gamma_1\n"));
        assert_eq!(circulation_from_csv(&text, Path::new("c.csv")).unwrap(), h);
    }

    #[test]
    fn rejects_garbage() {
        assert!(wake_from_vtk("hello", Path::new("x")).is_err());
        let bad = "# vtk DataFile Version 3.0\nt\nASCII\nDATASET POLYDATA\nPOINTS 1 double\n0 0 0\nPOLYGONS 1 5\n4 0 0 0 7\n";
        assert!(wake_from_vtk(bad, Path::new("x")).is_err());
    }
}
