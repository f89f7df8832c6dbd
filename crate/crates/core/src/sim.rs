//! End-to-end composition: kinematics, indicial aerodynamics, wake shedding
//! and body evolution, producing the wake structure of the final gait cycle.

use std::sync::Arc;

use nalgebra::DVector;

use crate::aero::{assemble_aero, force_output, AeroState, SpanBasis};
use crate::config::SimConfig;
use crate::morphology::{build_wing, eval_gait, motion_wash, step_body, BodyState, Wing, WingPose, QUARTER_CHORD};
use crate::wake::{bound_segments, vorticity_field, FieldGrid, VortexSegment, WakeLattice, WakeStructure};
use crate::{Result, Vec3};

/// Spanwise circulation sampled once per time step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CirculationHistory {
    pub stations: Vec<f64>,
    pub times: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
}

impl CirculationHistory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Checks evaluated during the run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunDiagnostics {
    pub steps: usize,
    pub max_substeps: usize,
    pub span_condition: f64,
    pub min_relative_speed: f64,
    /// Every retained ring still carries the circulation it was shed with.
    pub kelvin_ok: bool,
    /// Largest `|Gamma|` evaluated at the wingtips over the run.
    pub max_tip_gamma: f64,
    pub max_gamma: f64,
    pub mean_force: [f64; 3],
    pub final_body_position: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub wing: Wing,
    pub lattice: WakeLattice,
    /// Wake structure of the final gait cycle.
    pub wake: WakeStructure,
    /// Bound rings on the wing at the final time.
    pub bound: Vec<VortexSegment>,
    pub history: CirculationHistory,
    pub diagnostics: RunDiagnostics,
    pub final_state: AeroState,
    pub time_step: f64,
    pub steps_per_cycle: usize,
    /// Rows shed before this step belong to the warm-up cycles.
    pub warmup_steps: usize,
    pub frequency: f64,
}

impl SimulationRun {
    /// Every filament of the final flow: merged wake edges plus bound rings.
    pub fn segments(&self) -> Vec<VortexSegment> {
        let mut s = self.lattice.segments();
        s.extend_from_slice(&self.bound);
        s
    }

    pub fn vorticity(&self, grid: &FieldGrid) -> FieldGrid {
        vorticity_field(&self.segments(), self.lattice.core_radius, grid)
    }

    /// Gait phase (cycles, in `[0, 1)`) at which the wake row nearest in `x`
    /// left the wing; `None` where that row was shed during warm-up.
    pub fn phase_lookup(&self) -> PhaseLookup {
        let mut rows: Vec<(f64, Option<f64>)> = self
            .lattice
            .rows()
            .map(|r| {
                let mx = r.nodes.iter().map(|p| p.x).sum::<f64>() / r.nodes.len() as f64;
                let phase = (r.step % self.steps_per_cycle) as f64 / self.steps_per_cycle as f64;
                (mx, (r.step >= self.warmup_steps).then_some(phase))
            })
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        PhaseLookup { rows }
    }
}

/// Nearest-row gait phase by streamwise position.
pub struct PhaseLookup {
    rows: Vec<(f64, Option<f64>)>,
}

impl PhaseLookup {
    pub fn phase_at(&self, x: f64) -> Option<f64> {
        if self.rows.is_empty() {
            return None;
        }
        let k = self.rows.partition_point(|r| r.0 < x);
        let candidates = [k.checked_sub(1), (k < self.rows.len()).then_some(k)];
        candidates
            .into_iter()
            .flatten()
            .min_by(|&a, &b| (self.rows[a].0 - x).abs().total_cmp(&(self.rows[b].0 - x).abs()))
            .and_then(|i| self.rows[i].1)
    }
}

/// Positive and negative streamwise vorticity integrated separately over
/// wake regions shed during the upstroke and the downstroke (1/s * m^3).
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct StrokeVorticity {
    pub upstroke_positive: f64,
    pub upstroke_negative: f64,
    pub downstroke_positive: f64,
    pub downstroke_negative: f64,
}

/// Classify interior grid points by the flap direction at shedding time
/// (upstroke while the flap angle increases) and integrate `omega_x`.
/// Points nearest to warm-up rows are skipped.
pub fn stroke_vorticity(run: &SimulationRun, field: &FieldGrid) -> StrokeVorticity {
    let lookup = run.phase_lookup();
    let dv = field.spacing.x * field.spacing.y * field.spacing.z;
    let mut out = StrokeVorticity::default();
    let [nx, ny, nz] = field.dims;
    for i in 1..nx - 1 {
        let x = field.origin.x + i as f64 * field.spacing.x;
        let Some(phase) = lookup.phase_at(x) else { continue };
        let upstroke = (2.0 * std::f64::consts::PI * phase).cos() > 0.0;
        for k in 1..nz - 1 {
            for j in 1..ny - 1 {
                let w = field.omega_x[field.index(i, j, k)];
                let (pos, neg) = (w.max(0.0) * dv, w.min(0.0) * dv);
                if upstroke {
                    out.upstroke_positive += pos;
                    out.upstroke_negative += neg;
                } else {
                    out.downstroke_positive += pos;
                    out.downstroke_negative += neg;
                }
            }
        }
    }
    out
}

/// Run the configured number of gait cycles.
pub fn simulate(config: &SimConfig) -> Result<SimulationRun> {
    config.validate()?;
    let wing = build_wing(&config.wing)?;
    let basis = Arc::new(SpanBasis::from_wing(&wing, config.solver.downwash_mode)?);
    let n = wing.len();
    let gait = &config.gait;
    let wagner = config.solver.wagner;
    let rho = config.flight.air_density;
    let wind = config.wind();
    let dt = config.time_step();
    let m = config.solver.dt_per_cycle;
    let total_steps = config.solver.n_cycles * m;
    let keep_time = config.solver.n_keep_cycles as f64 * gait.period();

    let mut body = BodyState::cruising(config.flight.forward_speed);
    let mut state = AeroState::zeros(n);
    let pose0 = WingPose::new(&wing, eval_gait(gait, 0.0), body);
    let mut lattice = WakeLattice::new(pose0.trailing_edge(), 0.0, config.core_radius());

    let mut history = CirculationHistory {
        stations: wing.elements.iter().map(|e| e.station).collect(),
        ..Default::default()
    };
    history.times.push(0.0);
    history.gamma.push(vec![0.0; n]);

    let wash_at = |body: &BodyState, t: f64, tau: f64| {
        let mut b = *body;
        b.position += b.velocity * tau;
        let pose = WingPose::new(&wing, eval_gait(gait, t + tau), b);
        motion_wash(&pose.kinematics(), wind)
    };

    let tip_thetas = [0.0, std::f64::consts::PI];
    let mut max_tip_gamma: f64 = 0.0;
    let mut max_gamma: f64 = 0.0;
    let mut max_substeps = 1;
    let mut min_speed = f64::INFINITY;
    let mut force_sum = Vec3::zeros();

    for step in 0..total_steps {
        let t = step as f64 * dt;
        let pose = WingPose::new(&wing, eval_gait(gait, t), body);
        let kin = pose.kinematics();
        let wash = motion_wash(&kin, wind);
        wash.check_floor()?;
        min_speed = wash.speed.iter().copied().fold(min_speed, f64::min);

        // system frozen at the step midpoint
        let mid = wash_at(&body, t, 0.5 * dt);
        mid.check_floor()?;
        let sys = assemble_aero(basis.clone(), &mid.speed, &wagner)?;

        let y1_now = DVector::from_vec(wash.y1.clone());
        let forces = force_output(&sys, &state, &y1_now, &kin, &wash, rho);
        force_sum += forces.total;
        let gamma_now: Vec<f64> = forces.gamma.iter().copied().collect();

        let substeps = sys.substeps_for(dt);
        max_substeps = max_substeps.max(substeps);
        let h = dt / substeps as f64;
        for sub in 0..substeps {
            let t0 = sub as f64 * h;
            state = sys.step_with(&state, h, |s| DVector::from_vec(wash_at(&body, t, t0 + s).y1))?;
        }

        let bound = bound_segments(&pose.node_points(QUARTER_CHORD), &pose.trailing_edge(), &gamma_now);
        lattice.advect(dt, wind, config.solver.wake_mode, &bound)?;

        body = step_body(&body, forces.total, config.flight.body_mass, dt, config.flight.body_mode);

        let t_next = (step + 1) as f64 * dt;
        let gamma_next: Vec<f64> = sys.circulation(&state).iter().copied().collect();
        let next_pose = WingPose::new(&wing, eval_gait(gait, t_next), body);
        lattice.shed(next_pose.trailing_edge(), &gamma_next, t_next)?;
        lattice.truncate_before(t_next - keep_time - 0.5 * dt);

        let a = state.a();
        for th in tip_thetas {
            let tip: f64 = a.iter().enumerate().map(|(k, ak)| ak * ((k + 1) as f64 * th).sin()).sum();
            max_tip_gamma = max_tip_gamma.max(tip.abs());
        }
        max_gamma = gamma_next.iter().fold(max_gamma, |acc, g| acc.max(g.abs()));
        history.times.push(t_next);
        history.gamma.push(gamma_next);
    }

    let kelvin_ok = lattice.ring_rows().all(|row| {
        let step = (row.shed_time / dt).round() as usize;
        history.gamma.get(step).is_some_and(|g| *g == row.gamma)
    });

    let t_end = total_steps as f64 * dt;
    let final_pose = WingPose::new(&wing, eval_gait(gait, t_end), body);
    let gamma_end = history.gamma.last().cloned().unwrap_or_default();
    let bound = bound_segments(&final_pose.node_points(QUARTER_CHORD), &final_pose.trailing_edge(), &gamma_end);
    let wake = lattice.mesh_between(total_steps - m, total_steps, m);

    let mean_force = force_sum / total_steps as f64;
    let diagnostics = RunDiagnostics {
        steps: total_steps,
        max_substeps,
        span_condition: basis.condition,
        min_relative_speed: min_speed,
        kelvin_ok,
        max_tip_gamma,
        max_gamma,
        mean_force: [mean_force.x, mean_force.y, mean_force.z],
        final_body_position: [body.position.x, body.position.y, body.position.z],
    };

    Ok(SimulationRun {
        wing,
        lattice,
        wake,
        bound,
        history,
        diagnostics,
        final_state: state,
        time_step: dt,
        steps_per_cycle: m,
        warmup_steps: config.solver.n_warmup * m,
        frequency: gait.frequency,
    })
}

/// Wake structure of the final gait cycle for a configuration.
pub fn biot_savart_map(config: &SimConfig) -> Result<WakeStructure> {
    simulate(config).map(|run| run.wake)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphology::GaitMode;
    use crate::wake::AdvectMode;

    fn quick_config() -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.wing.n_elements_per_side = 4;
        cfg.solver.dt_per_cycle = 50;
        cfg.solver.n_cycles = 2;
        cfg.solver.wake_mode = AdvectMode::Prescribed;
        cfg.resolve();
        cfg
    }

    #[test]
    fn final_cycle_mesh_counts() {
        let cfg = quick_config();
        let run = simulate(&cfg).unwrap();
        assert_eq!(run.wake.vertices.len(), 51 * 9);
        assert_eq!(run.wake.faces.len(), 50 * 8);
        assert_eq!(run.history.len(), 101);
        assert!(run.diagnostics.kelvin_ok);
        assert!(run.diagnostics.max_gamma > 0.0);
    }

    #[test]
    fn degenerate_gait_gives_flat_zero_sheet() {
        let mut cfg = quick_config();
        cfg.gait.flap_amplitude = 0.0;
        let run = simulate(&cfg).unwrap();
        assert!(run.wake.vertices.iter().all(|v| v.z == 0.0));
        assert!(run.wake.face_gamma.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn simulation_is_deterministic() {
        let mut cfg = quick_config();
        cfg.solver.wake_mode = AdvectMode::Free;
        cfg.gait.mode = GaitMode::ThreeAxes;
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.wake, b.wake);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn phase_lookup_picks_nearest_row() {
        let run = simulate(&quick_config()).unwrap();
        let lookup = run.phase_lookup();
        // wing starts at the origin and flies +x at 1 m/s with a 0.5 s period
        let te0 = run.lattice.rows().next().unwrap().nodes[4].x;
        // first cycle is warm-up
        assert_eq!(lookup.phase_at(te0), None);
        assert_eq!(lookup.phase_at(te0 + 0.5), Some(0.0));
        let p = lookup.phase_at(te0 + 0.62).unwrap();
        assert!((p - 0.24).abs() < 1e-9, "{p}");
    }
}
