//! Vortex-ring wake lattice and Biot-Savart induction.
//!
//! Rings are shed once per time step between the previous trailing row and
//! the current trailing edge. Ring `(r, j)` spans node rows `r` (older) and
//! `r + 1` (newer) and strips `j`, `j + 1`, with vertices ordered
//! `[new(j+1), new(j), old(j), old(j+1)]`; its front edge therefore runs in
//! the `-s` direction, matching the bound vortex of a lifting wing flying
//! towards `+x`.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::{Error, Result, Vec3};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Straight vortex filament from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexSegment {
    pub start: Vec3,
    pub end: Vec3,
    pub gamma: f64,
}

impl VortexSegment {
    pub fn new(start: Vec3, end: Vec3, gamma: f64) -> Self {
        Self { start, end, gamma }
    }

    pub fn reversed(&self) -> Self {
        Self {
            start: self.end,
            end: self.start,
            gamma: self.gamma,
        }
    }
}

/// Velocity induced at `target` by one segment.
///
/// The singular factor `1/|r1 x r2|^2` is smoothed to
/// `1/(|r1 x r2|^2 + (core |r0|)^2)`, which turns the near field of a long
/// filament into `Gamma h / (2 pi (h^2 + core^2))`.
#[inline]
pub fn segment_velocity(seg: &VortexSegment, target: &Vec3, core: f64) -> Vec3 {
    let r0 = seg.end - seg.start;
    let r1 = target - seg.start;
    let r2 = target - seg.end;
    let n1 = r1.norm();
    let n2 = r2.norm();
    if n1 == 0.0 || n2 == 0.0 {
        return Vec3::zeros();
    }
    let cross = r1.cross(&r2);
    let denom = cross.norm_squared() + core * core * r0.norm_squared();
    if denom == 0.0 {
        return Vec3::zeros();
    }
    let k = seg.gamma / FOUR_PI * r0.dot(&(r1 / n1 - r2 / n2)) / denom;
    cross * k
}

const LANES: usize = 4;

/// Segments in structure-of-arrays form, padded with inert entries to a
/// multiple of [`LANES`].
struct PackedSegments {
    sx: Vec<f64>,
    sy: Vec<f64>,
    sz: Vec<f64>,
    dx: Vec<f64>,
    dy: Vec<f64>,
    dz: Vec<f64>,
    /// `gamma / (4 pi)`
    g: Vec<f64>,
    /// `core^2 |r0|^2`
    reg: Vec<f64>,
}

impl PackedSegments {
    fn new(segments: &[VortexSegment], core: f64) -> Self {
        let n = segments.len().div_ceil(LANES) * LANES;
        let mut p = Self {
            sx: Vec::with_capacity(n),
            sy: Vec::with_capacity(n),
            sz: Vec::with_capacity(n),
            dx: Vec::with_capacity(n),
            dy: Vec::with_capacity(n),
            dz: Vec::with_capacity(n),
            g: Vec::with_capacity(n),
            reg: Vec::with_capacity(n),
        };
        for s in segments {
            let d = s.end - s.start;
            p.sx.push(s.start.x);
            p.sy.push(s.start.y);
            p.sz.push(s.start.z);
            p.dx.push(d.x);
            p.dy.push(d.y);
            p.dz.push(d.z);
            p.g.push(s.gamma / FOUR_PI);
            p.reg.push(core * core * d.norm_squared());
        }
        for v in [&mut p.sx, &mut p.sy, &mut p.sz, &mut p.dx, &mut p.dy, &mut p.dz, &mut p.g, &mut p.reg] {
            v.resize(n, 0.0);
        }
        p
    }

    fn velocity_at(&self, t: &Vec3) -> Vec3 {
        #[cfg(target_arch = "x86_64")]
        {
            if std::is_x86_feature_detected!("avx2") {
                // SAFETY: the CPU supports AVX2, checked just above
                return unsafe { self.velocity_at_avx2(t) };
            }
        }
        self.velocity_at_generic(t)
    }

    // Same arithmetic as the generic path; only the instruction selection differs.
    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn velocity_at_avx2(&self, t: &Vec3) -> Vec3 {
        self.velocity_at_generic(t)
    }

    #[inline(always)]
    fn velocity_at_generic(&self, t: &Vec3) -> Vec3 {
        let mut ax = [0.0; LANES];
        let mut ay = [0.0; LANES];
        let mut az = [0.0; LANES];
        let lanes = |v: &[f64], c: usize| -> [f64; LANES] { v[c..c + LANES].try_into().expect("padded") };
        for c in (0..self.g.len()).step_by(LANES) {
            let (sx, sy, sz) = (lanes(&self.sx, c), lanes(&self.sy, c), lanes(&self.sz, c));
            let (dx, dy, dz) = (lanes(&self.dx, c), lanes(&self.dy, c), lanes(&self.dz, c));
            let (g, reg) = (lanes(&self.g, c), lanes(&self.reg, c));
            for l in 0..LANES {
                let (r1x, r1y, r1z) = (t.x - sx[l], t.y - sy[l], t.z - sz[l]);
                let (r2x, r2y, r2z) = (r1x - dx[l], r1y - dy[l], r1z - dz[l]);
                let cx = r1y * r2z - r1z * r2y;
                let cy = r1z * r2x - r1x * r2z;
                let cz = r1x * r2y - r1y * r2x;
                let n1 = (r1x * r1x + r1y * r1y + r1z * r1z).sqrt();
                let n2 = (r2x * r2x + r2y * r2y + r2z * r2z).sqrt();
                let denom = cx * cx + cy * cy + cz * cz + reg[l];
                let dot = (dx[l] * r1x + dy[l] * r1y + dz[l] * r1z) / n1 - (dx[l] * r2x + dy[l] * r2y + dz[l] * r2z) / n2;
                let valid = n1 > 0.0 && n2 > 0.0 && denom > 0.0;
                let k = if valid { g[l] * dot / denom } else { 0.0 };
                ax[l] += cx * k;
                ay[l] += cy * k;
                az[l] += cz * k;
            }
        }
        let sum = |a: [f64; LANES]| (a[0] + a[1]) + (a[2] + a[3]);
        Vec3::new(sum(ax), sum(ay), sum(az))
    }
}

/// Sum of all segment contributions at each target. Parallel over targets;
/// each target is summed in a fixed order, so results do not depend on the
/// thread count.
pub fn induced_velocity(segments: &[VortexSegment], core: f64, targets: &[Vec3]) -> Vec<Vec3> {
    let packed = PackedSegments::new(segments, core);
    targets.par_iter().map(|t| packed.velocity_at(t)).collect()
}

/// Closed quadrilateral ring as four segments.
pub fn ring_segments(corners: [Vec3; 4], gamma: f64) -> [VortexSegment; 4] {
    [
        VortexSegment::new(corners[0], corners[1], gamma),
        VortexSegment::new(corners[1], corners[2], gamma),
        VortexSegment::new(corners[2], corners[3], gamma),
        VortexSegment::new(corners[3], corners[0], gamma),
    ]
}

/// Bound vortex rings on the wing: one ring per strip from the quarter-chord
/// line back to the trailing edge, same orientation as shed rings.
pub fn bound_segments(quarter_chord_nodes: &[Vec3], trailing_edge_nodes: &[Vec3], gamma: &[f64]) -> Vec<VortexSegment> {
    let mut out = Vec::with_capacity(4 * gamma.len());
    for (j, &g) in gamma.iter().enumerate() {
        out.extend(ring_segments(
            [
                quarter_chord_nodes[j + 1],
                quarter_chord_nodes[j],
                trailing_edge_nodes[j],
                trailing_edge_nodes[j + 1],
            ],
            g,
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdvectMode {
    /// Vertices move with the freestream plus the induced velocity.
    #[default]
    Free,
    /// Vertices move with the freestream only.
    Prescribed,
}

/// One spanwise row of wake nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WakeRow {
    pub nodes: Vec<Vec3>,
    pub time: f64,
    /// Global time-step index at which the row left the trailing edge.
    pub step: usize,
}

/// Circulations of one row of rings, fixed at shed time.
#[derive(Debug, Clone, PartialEq)]
pub struct RingRow {
    pub gamma: Vec<f64>,
    pub shed_time: f64,
}

/// One ring in flat form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ring {
    pub vertices: [usize; 4],
    pub gamma: f64,
    pub shed_time: f64,
}

/// Wake of shed vortex rings. Node rows are stored oldest first; the last
/// row is attached to the trailing edge.
#[derive(Debug, Clone, PartialEq)]
pub struct WakeLattice {
    rows: VecDeque<WakeRow>,
    rings: VecDeque<RingRow>,
    pub core_radius: f64,
    n_strips: usize,
}

impl WakeLattice {
    /// Seed the lattice with the trailing edge at the initial time.
    pub fn new(trailing_edge: Vec<Vec3>, time: f64, core_radius: f64) -> Self {
        let n_strips = trailing_edge.len().saturating_sub(1);
        let mut rows = VecDeque::new();
        rows.push_back(WakeRow {
            nodes: trailing_edge,
            time,
            step: 0,
        });
        Self {
            rows,
            rings: VecDeque::new(),
            core_radius,
            n_strips,
        }
    }

    pub fn n_strips(&self) -> usize {
        self.n_strips
    }

    /// Number of node rows.
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_rings(&self) -> usize {
        self.rings.len() * self.n_strips
    }

    pub fn rows(&self) -> impl Iterator<Item = &WakeRow> {
        self.rows.iter()
    }

    pub fn ring_rows(&self) -> impl Iterator<Item = &RingRow> {
        self.rings.iter()
    }

    pub fn trailing_row(&self) -> &WakeRow {
        self.rows.back().expect("lattice always holds the trailing row")
    }

    /// All vertices, row-major (oldest row first, increasing station within a row).
    pub fn vertices(&self) -> Vec<Vec3> {
        self.rows.iter().flat_map(|r| r.nodes.iter().copied()).collect()
    }

    pub fn rings(&self) -> Vec<Ring> {
        let w = self.n_strips + 1;
        let mut out = Vec::with_capacity(self.n_rings());
        for (r, row) in self.rings.iter().enumerate() {
            for (j, &g) in row.gamma.iter().enumerate() {
                let old = r * w;
                let new = (r + 1) * w;
                out.push(Ring {
                    vertices: [new + j + 1, new + j, old + j, old + j + 1],
                    gamma: g,
                    shed_time: row.shed_time,
                });
            }
        }
        out
    }

    /// Append one row of rings between the previous trailing row and `trailing_edge`.
    pub fn shed(&mut self, trailing_edge: Vec<Vec3>, gamma: &[f64], time: f64) -> Result<()> {
        if trailing_edge.len() != self.n_strips + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.n_strips + 1,
                found: trailing_edge.len(),
            });
        }
        if gamma.len() != self.n_strips {
            return Err(Error::DimensionMismatch {
                expected: self.n_strips,
                found: gamma.len(),
            });
        }
        let step = self.trailing_row().step + 1;
        self.rows.push_back(WakeRow {
            nodes: trailing_edge,
            time,
            step,
        });
        self.rings.push_back(RingRow {
            gamma: gamma.to_vec(),
            shed_time: time,
        });
        Ok(())
    }

    /// Drop ring rows shed before `oldest_time`, keeping at least the trailing row.
    pub fn truncate_before(&mut self, oldest_time: f64) {
        while let Some(front) = self.rings.front() {
            if front.shed_time < oldest_time {
                self.rings.pop_front();
                self.rows.pop_front();
            } else {
                break;
            }
        }
    }

    /// Every ring edge as its own segment.
    pub fn ring_edge_segments(&self) -> Vec<VortexSegment> {
        let verts = self.vertices();
        self.rings()
            .iter()
            .flat_map(|ring| ring_segments(ring.vertices.map(|v| verts[v]), ring.gamma))
            .collect()
    }

    /// Ring edges with shared edges merged into single filaments carrying
    /// the circulation difference. Same field as [`Self::ring_edge_segments`]
    /// with roughly half the segments.
    pub fn segments(&self) -> Vec<VortexSegment> {
        let n = self.n_strips;
        let n_ring_rows = self.rings.len();
        let mut out = Vec::with_capacity((n_ring_rows + 1) * n + n_ring_rows * (n + 1));
        let gamma = |r: isize, j: isize| -> f64 {
            if r < 0 || j < 0 || r as usize >= n_ring_rows || j as usize >= n {
                0.0
            } else {
                self.rings[r as usize].gamma[j as usize]
            }
        };
        for (r, row) in self.rows.iter().enumerate() {
            let r = r as isize;
            // spanwise edges along node row r, oriented +s
            for j in 0..n {
                let g = gamma(r, j as isize) - gamma(r - 1, j as isize);
                if g != 0.0 {
                    out.push(VortexSegment::new(row.nodes[j], row.nodes[j + 1], g));
                }
            }
            // streamwise edges from node row r to r+1, oriented old -> new
            if (r as usize) < n_ring_rows {
                let next = &self.rows[r as usize + 1];
                for j in 0..=n {
                    let ji = j as isize;
                    let g = gamma(r, ji - 1) - gamma(r, ji);
                    if g != 0.0 {
                        out.push(VortexSegment::new(row.nodes[j], next.nodes[j], g));
                    }
                }
            }
        }
        out
    }

    /// Move every wake vertex (including the row that was attached to the
    /// trailing edge) through one forward-Euler step.
    pub fn advect(&mut self, dt: f64, freestream: Vec3, mode: AdvectMode, bound: &[VortexSegment]) -> Result<()> {
        match mode {
            AdvectMode::Prescribed => {
                for row in self.rows.iter_mut() {
                    for p in row.nodes.iter_mut() {
                        *p += freestream * dt;
                    }
                }
            }
            AdvectMode::Free => {
                let mut segments = self.segments();
                segments.extend_from_slice(bound);
                let targets = self.vertices();
                let velocities = induced_velocity(&segments, self.core_radius, &targets);
                if let Some(idx) = velocities.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
                    return Err(Error::NonFinite {
                        what: "wake vertex velocity",
                        index: idx,
                    });
                }
                let mut it = velocities.into_iter();
                for row in self.rows.iter_mut() {
                    for p in row.nodes.iter_mut() {
                        *p += (freestream + it.next().expect("one velocity per vertex")) * dt;
                    }
                }
            }
        }
        Ok(())
    }

    /// Quad mesh of node rows whose step index lies in `[first_step, last_step]`.
    pub fn mesh_between(&self, first_step: usize, last_step: usize, steps_per_cycle: usize) -> WakeStructure {
        let w = self.n_strips + 1;
        let mut vertices = Vec::new();
        let mut phase = Vec::new();
        let mut row_steps = Vec::new();
        let mut first_row = None;
        for (r, row) in self.rows.iter().enumerate() {
            if row.step >= first_step && row.step <= last_step {
                first_row.get_or_insert(r);
                vertices.extend(row.nodes.iter().copied());
                let p = (row.step - first_step) as f64 / steps_per_cycle.max(1) as f64;
                phase.extend(std::iter::repeat_n(p, w));
                row_steps.push(row.step);
            }
        }
        let n_rows = row_steps.len();
        let mut faces = Vec::new();
        let mut face_gamma = Vec::new();
        if let Some(r0) = first_row {
            for k in 0..n_rows.saturating_sub(1) {
                let ring_row = &self.rings[r0 + k];
                for j in 0..self.n_strips {
                    let old = k * w;
                    let new = (k + 1) * w;
                    faces.push([new + j + 1, new + j, old + j, old + j + 1]);
                    face_gamma.push(ring_row.gamma[j]);
                }
            }
        }
        WakeStructure::new(vertices, faces, face_gamma, phase, n_rows, self.n_strips)
    }

    /// Mesh of the whole lattice.
    pub fn mesh(&self, steps_per_cycle: usize) -> WakeStructure {
        let first = self.rows.front().map(|r| r.step).unwrap_or(0);
        let last = self.trailing_row().step;
        self.mesh_between(first, last, steps_per_cycle)
    }
}

/// Polygonal wake geometry: row-major vertices and quad faces.
#[derive(Debug, Clone, PartialEq)]
pub struct WakeStructure {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 4]>,
    pub edges: Vec<[usize; 2]>,
    pub face_gamma: Vec<f64>,
    /// Gait phase in cycles since the first row, one value per vertex.
    pub phase: Vec<f64>,
    /// Node rows; ring rows are one fewer.
    pub n_rows: usize,
    pub n_strips: usize,
}

impl WakeStructure {
    pub fn new(
        vertices: Vec<Vec3>,
        faces: Vec<[usize; 4]>,
        face_gamma: Vec<f64>,
        phase: Vec<f64>,
        n_rows: usize,
        n_strips: usize,
    ) -> Self {
        let mut edges: Vec<[usize; 2]> = faces
            .iter()
            .flat_map(|f| (0..4).map(move |k| {
                let (a, b) = (f[k], f[(k + 1) % 4]);
                [a.min(b), a.max(b)]
            }))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        Self {
            vertices,
            faces,
            edges,
            face_gamma,
            phase,
            n_rows,
            n_strips,
        }
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        let mut out = self.clone();
        for v in out.vertices.iter_mut() {
            *v += offset;
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.faces.iter().all(|f| f.iter().all(|&v| v < self.vertices.len()))
    }
}

/// Regular sampling grid, x-index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub origin: Vec3,
    pub spacing: Vec3,
    pub dims: [usize; 3],
    pub velocity: Vec<Vec3>,
    /// Streamwise vorticity; zero on boundary points.
    pub omega_x: Vec<f64>,
    pub thresholds: [f64; 4],
}

/// Iso-levels for the streamwise vorticity (1/s).
pub const DEFAULT_THRESHOLDS: [f64; 4] = [300.0, 100.0, -300.0, -100.0];

impl FieldGrid {
    pub fn new(origin: Vec3, spacing: Vec3, dims: [usize; 3]) -> Result<Self> {
        if !spacing.iter().all(|h| *h > 0.0) {
            return Err(Error::InvalidArgument("grid spacing must be positive".into()));
        }
        if dims.iter().any(|&d| d < 3) {
            return Err(Error::InvalidArgument("grid needs at least 3 points per axis".into()));
        }
        let n = dims[0] * dims[1] * dims[2];
        Ok(Self {
            origin,
            spacing,
            dims,
            velocity: vec![Vec3::zeros(); n],
            omega_x: vec![0.0; n],
            thresholds: DEFAULT_THRESHOLDS,
        })
    }

    /// Grid spanning the box `[lo, hi]` with `dims` points per axis.
    pub fn spanning(lo: Vec3, hi: Vec3, dims: [usize; 3]) -> Result<Self> {
        let spacing = Vec3::from_fn(|k, _| (hi[k] - lo[k]) / (dims[k].max(2) - 1) as f64);
        Self::new(lo, spacing, dims)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64 * self.spacing.x, j as f64 * self.spacing.y, k as f64 * self.spacing.z)
    }

    pub fn points(&self) -> Vec<Vec3> {
        let [nx, ny, nz] = self.dims;
        let mut out = Vec::with_capacity(self.len());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    out.push(self.point(i, j, k));
                }
            }
        }
        out
    }

    pub fn is_interior(&self, i: usize, j: usize, k: usize) -> bool {
        let [nx, ny, nz] = self.dims;
        i > 0 && j > 0 && k > 0 && i + 1 < nx && j + 1 < ny && k + 1 < nz
    }

    /// `dv_z/dy - dv_y/dz` by central differences at interior points.
    fn compute_vorticity(&mut self) {
        let [nx, ny, nz] = self.dims;
        let (hy, hz) = (self.spacing.y, self.spacing.z);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let idx = self.index(i, j, k);
                    self.omega_x[idx] = if self.is_interior(i, j, k) {
                        let dvz_dy = (self.velocity[self.index(i, j + 1, k)].z
                            - self.velocity[self.index(i, j - 1, k)].z)
                            / (2.0 * hy);
                        let dvy_dz = (self.velocity[self.index(i, j, k + 1)].y
                            - self.velocity[self.index(i, j, k - 1)].y)
                            / (2.0 * hz);
                        dvz_dy - dvy_dz
                    } else {
                        0.0
                    };
                }
            }
        }
    }

    /// Central-difference divergence at interior points (zero elsewhere).
    pub fn divergence(&self) -> Vec<f64> {
        let [nx, ny, nz] = self.dims;
        let h = self.spacing;
        let mut out = vec![0.0; self.len()];
        for k in 1..nz - 1 {
            for j in 1..ny - 1 {
                for i in 1..nx - 1 {
                    let v = |a, b, c| self.velocity[self.index(a, b, c)];
                    out[self.index(i, j, k)] = (v(i + 1, j, k).x - v(i - 1, j, k).x) / (2.0 * h.x)
                        + (v(i, j + 1, k).y - v(i, j - 1, k).y) / (2.0 * h.y)
                        + (v(i, j, k + 1).z - v(i, j, k - 1).z) / (2.0 * h.z);
                }
            }
        }
        out
    }

    pub fn max_speed(&self) -> f64 {
        self.velocity.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Sample the induced velocity on `grid` and derive the streamwise vorticity.
pub fn vorticity_field(segments: &[VortexSegment], core: f64, grid: &FieldGrid) -> FieldGrid {
    let mut out = grid.clone();
    out.velocity = induced_velocity(segments, core, &grid.points());
    out.compute_vorticity();
    out
}

/// Velocity and streamwise vorticity on one `x = const` plane.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSample {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub v_y: f64,
    pub v_z: f64,
    pub omega_x: f64,
}

/// Sample a `y`-`z` plane at station `x` using the grid's lateral resolution;
/// vorticity by central differences on interior plane points.
pub fn sectional_slice(segments: &[VortexSegment], core: f64, grid: &FieldGrid, x: f64) -> Vec<SliceSample> {
    let [_, ny, nz] = grid.dims;
    let mut pts = Vec::with_capacity(ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            pts.push(Vec3::new(
                x,
                grid.origin.y + j as f64 * grid.spacing.y,
                grid.origin.z + k as f64 * grid.spacing.z,
            ));
        }
    }
    let vel = induced_velocity(segments, core, &pts);
    let at = |j: usize, k: usize| vel[j + ny * k];
    let mut out = Vec::with_capacity(pts.len());
    for k in 0..nz {
        for j in 0..ny {
            let w = if j > 0 && k > 0 && j + 1 < ny && k + 1 < nz {
                (at(j + 1, k).z - at(j - 1, k).z) / (2.0 * grid.spacing.y)
                    - (at(j, k + 1).y - at(j, k - 1).y) / (2.0 * grid.spacing.z)
            } else {
                0.0
            };
            let p = pts[j + ny * k];
            let v = at(j, k);
            out.push(SliceSample {
                x: p.x,
                y: p.y,
                z: p.z,
                v_y: v.y,
                v_z: v.z,
                omega_x: w,
            });
        }
    }
    out
}
