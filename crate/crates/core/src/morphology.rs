//! Morphing wing geometry, gait waveforms and rigid-chain forward kinematics.
//!
//! Frame conventions: `x` points forward (direction of flight), `y` to the
//! left wing, `z` up. The signed spanwise station `s` equals the `y`
//! coordinate of the undeformed wing, so the left wing has `s > 0`.
//!
//! Each wing is a two-link chain. The proximal link flaps about the body
//! `x` axis at the root, the whole wing feathers (pitches nose-up) about the
//! spanwise axis through the root quarter chord, and the distal link folds
//! downward about a streamwise hinge at the proximal/distal boundary.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Standard gravity, world frame.
pub const GRAVITY: Vec3 = Vec3::new(0.0, 0.0, -9.81);

/// Relative speed below which a blade element is flagged (m/s).
pub const SPEED_FLOOR: f64 = 0.05;

/// Chordwise position of the bound vortex, as a fraction of chord from the leading edge.
pub const QUARTER_CHORD: f64 = 0.25;
/// Chordwise position of the collocation point.
pub const THREE_QUARTER_CHORD: f64 = 0.75;
/// Chordwise position of the trailing edge.
pub const TRAILING_EDGE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// Stations at uniform angular spacing in `theta = acos(s / l)`.
    #[default]
    Cosine,
    /// Stations at uniform spanwise spacing.
    Uniform,
}

/// Planform of a symmetric two-segment wing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WingGeometry {
    pub semispan_proximal: f64,
    pub semispan_distal: f64,
    pub chord_proximal: f64,
    pub chord_distal: f64,
    /// Streamwise sweep of the distal segment, positive swept back (rad).
    pub sweep_distal: f64,
    pub n_elements_per_side: usize,
    pub spacing: Spacing,
}

impl Default for WingGeometry {
    /// Rectangular wing: 0.34 m tip to tip, 0.15 m chord, hinge at mid-semispan.
    fn default() -> Self {
        Self {
            semispan_proximal: 0.085,
            semispan_distal: 0.085,
            chord_proximal: 0.15,
            chord_distal: 0.15,
            sweep_distal: 0.0,
            n_elements_per_side: 8,
            spacing: Spacing::Cosine,
        }
    }
}

impl WingGeometry {
    /// Semi-span `l` (root to tip).
    pub fn semispan(&self) -> f64 {
        self.semispan_proximal + self.semispan_distal
    }

    /// Area-weighted mean chord of the linear chord distribution.
    pub fn mean_chord(&self) -> f64 {
        0.5 * (self.chord_proximal + self.chord_distal)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("semispan_proximal", self.semispan_proximal),
            ("semispan_distal", self.semispan_distal),
            ("chord_proximal", self.chord_proximal),
            ("chord_distal", self.chord_distal),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(name, format!("must be a positive length, got {value}")));
            }
        }
        if self.n_elements_per_side < 2 {
            return Err(Error::config("n_elements_per_side", "must be at least 2"));
        }
        if !(self.sweep_distal.is_finite() && self.sweep_distal.abs() < FRAC_PI_2) {
            return Err(Error::config("sweep_distal", "must satisfy |sweep| < pi/2"));
        }
        Ok(())
    }

    /// Chord, linear in `|s|` from the root (`chord_proximal`) to the tip (`chord_distal`).
    pub fn chord_at(&self, s: f64) -> f64 {
        let eta = (s.abs() / self.semispan()).min(1.0);
        self.chord_proximal + (self.chord_distal - self.chord_proximal) * eta
    }

    /// Streamwise set-back of the quarter-chord line (m, positive aft).
    pub fn sweep_offset_at(&self, s: f64) -> f64 {
        let outboard = s.abs() - self.semispan_proximal;
        if outboard > 0.0 {
            outboard * self.sweep_distal.tan()
        } else {
            0.0
        }
    }

    pub fn is_distal(&self, s: f64) -> bool {
        s.abs() > self.semispan_proximal
    }

    /// Undeformed wing-frame position of the point at station `s` located
    /// `chord_fraction` of the chord behind the leading edge.
    pub fn reference_point(&self, s: f64, chord_fraction: f64) -> Vec3 {
        let c = self.chord_at(s);
        let x = -self.sweep_offset_at(s) - (chord_fraction - QUARTER_CHORD) * c;
        Vec3::new(x, s, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BladeElement {
    pub index: usize,
    /// Signed spanwise station of the strip midpoint (m).
    pub station: f64,
    /// `acos(station / l)`.
    pub theta: f64,
    pub chord: f64,
    /// Strip width (m).
    pub width: f64,
    pub quarter_chord_ref: Vec3,
    pub sweep_offset: f64,
    pub distal: bool,
}

/// A discretized wing: strips ordered by increasing station (right tip to left tip).
#[derive(Debug, Clone)]
pub struct Wing {
    pub geometry: WingGeometry,
    pub elements: Vec<BladeElement>,
    /// Strip boundary stations, `elements.len() + 1` of them, increasing.
    pub nodes: Vec<f64>,
}

impl Wing {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn semispan(&self) -> f64 {
        self.geometry.semispan()
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.theta).collect()
    }

    pub fn chords(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.chord).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.width).collect()
    }
}

/// Discretize the wing into `2 * n_elements_per_side` strips.
///
/// The left half is generated first and the right half is its exact mirror,
/// so stations, widths and angles are symmetric to the last bit.
pub fn build_wing(geom: &WingGeometry) -> Result<Wing> {
    geom.validate()?;
    let n = geom.n_elements_per_side;
    let total = 2 * n;
    let l = geom.semispan();

    // Left-half boundaries from root (s = 0) to tip (s = l), and midpoints.
    let mut left_nodes = Vec::with_capacity(n + 1);
    let mut left_mid = Vec::with_capacity(n);
    match geom.spacing {
        Spacing::Cosine => {
            for j in 0..=n {
                // theta runs from pi/2 at the root down to 0 at the tip
                let theta = (n - j) as f64 * PI / total as f64;
                left_nodes.push(if j == 0 { 0.0 } else if j == n { l } else { l * theta.cos() });
            }
            for j in 0..n {
                let theta = (n - j) as f64 * PI / total as f64 - 0.5 * PI / total as f64;
                left_mid.push(l * theta.cos());
            }
        }
        Spacing::Uniform => {
            for j in 0..=n {
                left_nodes.push(l * j as f64 / n as f64);
            }
            for j in 0..n {
                left_mid.push(0.5 * (left_nodes[j] + left_nodes[j + 1]));
            }
        }
    }

    let mut nodes: Vec<f64> = left_nodes.iter().rev().map(|s| -s).collect();
    nodes.pop(); // root appears once
    nodes.push(0.0);
    nodes.extend(left_nodes.iter().skip(1));

    let mut stations: Vec<f64> = left_mid.iter().rev().map(|s| -s).collect();
    stations.extend(left_mid.iter());

    let mut elements = Vec::with_capacity(total);
    for (i, &s) in stations.iter().enumerate() {
        let theta = (s / l).acos();
        elements.push(BladeElement {
            index: i,
            station: s,
            theta,
            chord: geom.chord_at(s),
            width: nodes[i + 1] - nodes[i],
            quarter_chord_ref: geom.reference_point(s, QUARTER_CHORD),
            sweep_offset: geom.sweep_offset_at(s),
            distal: geom.is_distal(s),
        });
    }

    for pair in elements.windows(2) {
        if !(pair[0].theta > pair[1].theta) {
            return Err(Error::DegenerateGeometry(format!(
                "blade element angles not distinct at elements {} and {}",
                pair[0].index, pair[1].index
            )));
        }
    }
    if elements.iter().any(|e| !(e.theta > 0.0 && e.theta < PI) || !(e.width > 0.0)) {
        return Err(Error::DegenerateGeometry("blade element outside the open span".into()));
    }

    Ok(Wing {
        geometry: geom.clone(),
        elements,
        nodes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GaitMode {
    /// Flap only.
    #[default]
    OneAxis,
    /// Flap, upstroke fold of the distal segment, and pitch slaved to fold.
    ThreeAxes,
}

/// Joint-trajectory parameters. Left and right wings are driven symmetrically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaitParams {
    pub mode: GaitMode,
    /// Flapping frequency (Hz).
    pub frequency: f64,
    pub flap_amplitude: f64,
    pub flap_offset: f64,
    /// Constant nose-up feathering of both wings (rad).
    pub incidence: f64,
    pub fold_amplitude: f64,
    pub fold_phase: f64,
    /// Nose-up pitch per radian of fold.
    pub pitch_gain: f64,
}

impl Default for GaitParams {
    fn default() -> Self {
        Self {
            mode: GaitMode::OneAxis,
            frequency: 2.0,
            flap_amplitude: 0.6,
            flap_offset: 0.0,
            incidence: 0.0,
            fold_amplitude: 1.0,
            fold_phase: FRAC_PI_2,
            pitch_gain: 0.2,
        }
    }
}

impl GaitParams {
    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::config("frequency", "must be positive"));
        }
        for (name, value) in [
            ("flap_amplitude", self.flap_amplitude),
            ("fold_amplitude", self.fold_amplitude),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::config(name, "must be non-negative"));
            }
        }
        for (name, value) in [
            ("flap_offset", self.flap_offset),
            ("incidence", self.incidence),
            ("fold_phase", self.fold_phase),
            ("pitch_gain", self.pitch_gain),
        ] {
            if !value.is_finite() {
                return Err(Error::config(name, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Joint angles and rates shared by both wings.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShapeState {
    pub flap: f64,
    pub fold: f64,
    pub pitch: f64,
    pub flap_rate: f64,
    pub fold_rate: f64,
    pub pitch_rate: f64,
}

impl ShapeState {
    /// Independent shape variables: `[flap]` in one-axis mode,
    /// `[flap, fold, pitch]` otherwise (applied to both wings).
    pub fn q_a(&self, mode: GaitMode) -> Vec<f64> {
        match mode {
            GaitMode::OneAxis => vec![self.flap],
            GaitMode::ThreeAxes => vec![self.flap, self.fold, self.pitch],
        }
    }
}

/// Joint angles at time `t` with exact analytic rates.
pub fn eval_gait(gait: &GaitParams, t: f64) -> ShapeState {
    let omega = 2.0 * PI * gait.frequency;
    let phase = omega * t;
    let flap = gait.flap_offset + gait.flap_amplitude * phase.sin();
    let flap_rate = gait.flap_amplitude * omega * phase.cos();

    let fold_amplitude = match gait.mode {
        GaitMode::OneAxis => 0.0,
        GaitMode::ThreeAxes => gait.fold_amplitude,
    };
    let pitch_gain = match gait.mode {
        GaitMode::OneAxis => 0.0,
        GaitMode::ThreeAxes => gait.pitch_gain,
    };
    // half-rectified: the distal segment folds only while the sine is positive
    let fold_arg = phase + gait.fold_phase;
    let (fold, fold_rate) = if fold_arg.sin() > 0.0 {
        (fold_amplitude * fold_arg.sin(), fold_amplitude * omega * fold_arg.cos())
    } else {
        (0.0, 0.0)
    };

    ShapeState {
        flap,
        fold,
        pitch: gait.incidence + pitch_gain * fold,
        flap_rate,
        fold_rate,
        pitch_rate: pitch_gain * fold_rate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BodyMode {
    /// Constant velocity, frozen attitude.
    #[default]
    Prescribed,
    /// Translational point mass under aerodynamic force and gravity.
    PointMass,
}

/// Reduced body state: position, Euler angles (roll, pitch, yaw), velocity, angular rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub position: Vec3,
    pub euler: Vec3,
    pub velocity: Vec3,
    pub angular_rate: Vec3,
}

impl BodyState {
    pub fn cruising(speed: f64) -> Self {
        Self {
            position: Vec3::zeros(),
            euler: Vec3::zeros(),
            velocity: Vec3::new(speed, 0.0, 0.0),
            angular_rate: Vec3::zeros(),
        }
    }

    /// Body-to-world rotation (yaw-pitch-roll).
    pub fn attitude(&self) -> Matrix3<f64> {
        rot_z(self.euler.z) * rot_y(self.euler.y) * rot_x(self.euler.x)
    }
}

pub fn step_body(body: &BodyState, total_force: Vec3, mass: f64, dt: f64, mode: BodyMode) -> BodyState {
    let mut next = *body;
    match mode {
        BodyMode::Prescribed => {
            next.position += body.velocity * dt;
        }
        BodyMode::PointMass => {
            next.velocity += (total_force / mass + GRAVITY) * dt;
            next.position += next.velocity * dt;
        }
    }
    next
}

fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_x_deriv(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s)
}

fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rot_y_deriv(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s)
}

fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rotations of one wing side for a given shape, with their time derivatives.
struct SideChain {
    flap: Matrix3<f64>,
    flap_dot: Matrix3<f64>,
    pitch: Matrix3<f64>,
    pitch_dot: Matrix3<f64>,
    fold: Matrix3<f64>,
    fold_dot: Matrix3<f64>,
    hinge: Vec3,
}

impl SideChain {
    fn new(shape: &ShapeState, side: f64, hinge_span: f64) -> Self {
        // positive flap raises the tip, positive fold lowers the distal tip,
        // positive pitch is nose-up
        let flap_angle = side * shape.flap;
        let fold_angle = -side * shape.fold;
        let pitch_angle = -shape.pitch;
        Self {
            flap: rot_x(flap_angle),
            flap_dot: rot_x_deriv(flap_angle) * (side * shape.flap_rate),
            pitch: rot_y(pitch_angle),
            pitch_dot: rot_y_deriv(pitch_angle) * (-shape.pitch_rate),
            fold: rot_x(fold_angle),
            fold_dot: rot_x_deriv(fold_angle) * (-side * shape.fold_rate),
            hinge: Vec3::new(0.0, side * hinge_span, 0.0),
        }
    }

    /// Position and velocity of a wing-frame point in the body frame.
    fn point(&self, r0: &Vec3, distal: bool) -> (Vec3, Vec3) {
        let (q, q_dot) = if distal {
            let arm = r0 - self.hinge;
            (self.hinge + self.fold * arm, self.fold_dot * arm)
        } else {
            (*r0, Vec3::zeros())
        };
        // pitch acts about the body lateral axis after flapping, so the root
        // chord of both sides stays in the symmetry plane
        let pf = self.pitch * self.flap;
        let pos = pf * q;
        let vel = self.pitch_dot * self.flap * q + self.pitch * self.flap_dot * q + pf * q_dot;
        (pos, vel)
    }

    fn direction(&self, d0: &Vec3, distal: bool) -> Vec3 {
        let d = if distal { self.fold * d0 } else { *d0 };
        self.pitch * self.flap * d
    }
}

/// A posed wing: geometry plus joint and body state at one instant.
pub struct WingPose<'a> {
    pub wing: &'a Wing,
    pub shape: ShapeState,
    pub body: BodyState,
    left: SideChain,
    right: SideChain,
    attitude: Matrix3<f64>,
}

/// World position and velocity of a material point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialPoint {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl<'a> WingPose<'a> {
    pub fn new(wing: &'a Wing, shape: ShapeState, body: BodyState) -> Self {
        let hinge = wing.geometry.semispan_proximal;
        Self {
            wing,
            shape,
            body,
            left: SideChain::new(&shape, 1.0, hinge),
            right: SideChain::new(&shape, -1.0, hinge),
            attitude: body.attitude(),
        }
    }

    fn chain(&self, s: f64) -> &SideChain {
        if s >= 0.0 {
            &self.left
        } else {
            &self.right
        }
    }

    /// Material point at station `s`, `chord_fraction` of the local chord behind the leading edge.
    pub fn point(&self, s: f64, chord_fraction: f64) -> MaterialPoint {
        let geom = &self.wing.geometry;
        let r0 = geom.reference_point(s, chord_fraction);
        let (p, v) = self.chain(s).point(&r0, geom.is_distal(s));
        let p_world = self.attitude * p;
        MaterialPoint {
            position: self.body.position + p_world,
            velocity: self.body.velocity + self.body.angular_rate.cross(&p_world) + self.attitude * v,
        }
    }

    fn direction(&self, s: f64, d0: Vec3) -> Vec3 {
        self.attitude * self.chain(s).direction(&d0, self.wing.geometry.is_distal(s))
    }

    /// Points at every strip boundary, `chord_fraction` behind the leading edge.
    pub fn node_points(&self, chord_fraction: f64) -> Vec<Vec3> {
        self.wing
            .nodes
            .iter()
            .map(|&s| self.point(s, chord_fraction).position)
            .collect()
    }

    pub fn trailing_edge(&self) -> Vec<Vec3> {
        self.node_points(TRAILING_EDGE)
    }

    pub fn kinematics(&self) -> ElementKinematics {
        let n = self.wing.len();
        let mut kin = ElementKinematics {
            quarter_chord: Vec::with_capacity(n),
            collocation: Vec::with_capacity(n),
            normal: Vec::with_capacity(n),
            tangent: Vec::with_capacity(n),
            velocity: Vec::with_capacity(n),
        };
        for e in &self.wing.elements {
            kin.quarter_chord.push(self.point(e.station, QUARTER_CHORD).position);
            let colloc = self.point(e.station, THREE_QUARTER_CHORD);
            kin.collocation.push(colloc.position);
            kin.velocity.push(colloc.velocity);
            kin.normal.push(self.direction(e.station, Vec3::z()));
            kin.tangent.push(self.direction(e.station, Vec3::y()));
        }
        kin
    }
}

/// Per-element kinematic quantities in the world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementKinematics {
    pub quarter_chord: Vec<Vec3>,
    pub collocation: Vec<Vec3>,
    pub normal: Vec<Vec3>,
    pub tangent: Vec<Vec3>,
    /// Velocity of the collocation point.
    pub velocity: Vec<Vec3>,
}

pub fn element_kinematics(wing: &Wing, shape: &ShapeState, body: &BodyState) -> ElementKinematics {
    WingPose::new(wing, *shape, *body).kinematics()
}

/// Normal wash and in-plane speed at each collocation point.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionWash {
    /// `y1_i = v_rel . n_i` (m/s).
    pub y1: Vec<f64>,
    /// In-plane relative speed `U_i` (m/s).
    pub speed: Vec<f64>,
    /// Air velocity relative to each collocation point.
    pub relative: Vec<Vec3>,
}

impl MotionWash {
    /// Elements whose relative speed is below [`SPEED_FLOOR`].
    pub fn stalled(&self) -> Vec<usize> {
        self.speed
            .iter()
            .enumerate()
            .filter(|(_, &u)| !(u >= SPEED_FLOOR))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn check_floor(&self) -> Result<()> {
        match self.stalled().first() {
            Some(&i) => Err(Error::ModelStall {
                element: i,
                speed: self.speed[i],
            }),
            None => Ok(()),
        }
    }
}

/// `freestream` is the air velocity in the world frame (zero for still air).
pub fn motion_wash(kin: &ElementKinematics, freestream: Vec3) -> MotionWash {
    let n = kin.velocity.len();
    let mut out = MotionWash {
        y1: Vec::with_capacity(n),
        speed: Vec::with_capacity(n),
        relative: Vec::with_capacity(n),
    };
    for i in 0..n {
        let rel = freestream - kin.velocity[i];
        let normal = kin.normal[i];
        let wash = rel.dot(&normal);
        out.y1.push(wash);
        out.speed.push((rel - normal * wash).norm());
        out.relative.push(rel);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_wing() -> Wing {
        build_wing(&WingGeometry::default()).unwrap()
    }

    #[test]
    fn baseline_wing_spans_both_sides() {
        let wing = paper_wing();
        assert_eq!(wing.len(), 16);
        assert_eq!(wing.nodes[0], -0.17);
        assert_eq!(*wing.nodes.last().unwrap(), 0.17);
        let covered: f64 = wing.widths().iter().sum();
        assert!((covered - 0.34).abs() < 1e-15);
        assert!((wing.geometry.mean_chord() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn theta_of_root_is_half_pi() {
        assert_eq!((0.0f64 / 0.17).acos(), FRAC_PI_2);
    }

    #[test]
    fn stations_are_mirrored_exactly() {
        for spacing in [Spacing::Cosine, Spacing::Uniform] {
            let geom = WingGeometry {
                spacing,
                n_elements_per_side: 7,
                ..Default::default()
            };
            let wing = build_wing(&geom).unwrap();
            let n = wing.len();
            for i in 0..n {
                assert_eq!(wing.elements[i].station, -wing.elements[n - 1 - i].station);
                assert_eq!(wing.elements[i].width, wing.elements[n - 1 - i].width);
            }
        }
    }

    #[test]
    fn cosine_stations_are_uniform_in_theta() {
        let wing = paper_wing();
        let thetas = wing.thetas();
        let step = PI / thetas.len() as f64;
        for pair in thetas.windows(2) {
            assert!((pair[0] - pair[1] - step).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_sweep_gives_straight_quarter_chord() {
        let wing = paper_wing();
        assert!(wing.elements.iter().all(|e| e.sweep_offset == 0.0));
        assert!(wing.elements.iter().all(|e| e.quarter_chord_ref.x == 0.0));
    }

    #[test]
    fn sweep_offsets_only_distal_elements() {
        let geom = WingGeometry {
            sweep_distal: 0.3,
            ..Default::default()
        };
        let wing = build_wing(&geom).unwrap();
        for e in &wing.elements {
            let expected = (e.station.abs() - 0.085).max(0.0) * 0.3f64.tan();
            assert!((e.sweep_offset - expected).abs() < 1e-15);
            assert_eq!(e.distal, e.station.abs() > 0.085);
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        let geom = WingGeometry {
            chord_proximal: -0.1,
            ..Default::default()
        };
        match build_wing(&geom) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "chord_proximal"),
            other => panic!("unexpected {other:?}"),
        }
        let geom = WingGeometry {
            n_elements_per_side: 1,
            ..Default::default()
        };
        assert!(build_wing(&geom).is_err());
        let geom = WingGeometry {
            sweep_distal: 1.6,
            ..Default::default()
        };
        assert!(build_wing(&geom).is_err());
    }

    #[test]
    fn gait_period_at_two_hertz() {
        let gait = GaitParams::default();
        assert_eq!(gait.period(), 0.5);
        let a = eval_gait(&gait, 0.1);
        let b = eval_gait(&gait, 0.6);
        assert!((a.flap - b.flap).abs() < 1e-12);
    }

    #[test]
    fn static_gait_is_constant() {
        let gait = GaitParams {
            flap_amplitude: 0.0,
            flap_offset: 0.2,
            ..Default::default()
        };
        for k in 0..20 {
            let s = eval_gait(&gait, k as f64 * 0.037);
            assert_eq!(s.flap, 0.2);
            assert_eq!(s.flap_rate, 0.0);
        }
    }

    #[test]
    fn fold_peaks_mid_upstroke() {
        let gait = GaitParams {
            mode: GaitMode::ThreeAxes,
            fold_phase: FRAC_PI_2,
            ..Default::default()
        };
        // dense scan over one period
        let samples = 20_000;
        let (mut best_t, mut best) = (0.0, f64::MIN);
        for k in 0..samples {
            let t = gait.period() * k as f64 / samples as f64;
            let s = eval_gait(&gait, t);
            if s.fold > best {
                best = s.fold;
                best_t = t;
            }
        }
        assert!((best - gait.fold_amplitude).abs() < 1e-9);
        assert!(best_t < 1e-4);
        // flap rate positive (upstroke) at the fold peak
        assert!(eval_gait(&gait, best_t).flap_rate > 0.0);
        // never folds on the downstroke
        for k in 0..samples {
            let t = gait.period() * k as f64 / samples as f64;
            let s = eval_gait(&gait, t);
            if s.flap_rate < 0.0 {
                assert_eq!(s.fold, 0.0);
            }
        }
    }

    #[test]
    fn gait_rates_match_finite_differences() {
        let gait = GaitParams {
            mode: GaitMode::ThreeAxes,
            ..Default::default()
        };
        let h = 1e-6;
        for k in 1..50 {
            let t = 0.0113 * k as f64;
            let s = eval_gait(&gait, t);
            let (a, b) = (eval_gait(&gait, t - h), eval_gait(&gait, t + h));
            assert!(((b.flap - a.flap) / (2.0 * h) - s.flap_rate).abs() < 1e-5);
            if a.fold > 0.0 && b.fold > 0.0 {
                assert!(((b.fold - a.fold) / (2.0 * h) - s.fold_rate).abs() < 1e-5);
                assert!(((b.pitch - a.pitch) / (2.0 * h) - s.pitch_rate).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn one_axis_is_three_axes_without_fold() {
        let one = GaitParams {
            mode: GaitMode::OneAxis,
            pitch_gain: 0.7,
            fold_amplitude: 1.2,
            ..Default::default()
        };
        let three = GaitParams {
            mode: GaitMode::ThreeAxes,
            fold_amplitude: 0.0,
            pitch_gain: 0.7,
            ..Default::default()
        };
        for k in 0..500 {
            let t = k as f64 * 1e-3;
            assert_eq!(eval_gait(&one, t), eval_gait(&three, t));
        }
    }

    #[test]
    fn identity_pose() {
        let wing = paper_wing();
        let body = BodyState::cruising(0.0);
        let kin = element_kinematics(&wing, &ShapeState::default(), &body);
        for (e, p) in wing.elements.iter().zip(&kin.quarter_chord) {
            assert_eq!(*p, e.quarter_chord_ref);
        }
        assert!(kin.velocity.iter().all(|v| *v == Vec3::zeros()));
    }

    #[test]
    fn frozen_joints_move_with_body() {
        let wing = paper_wing();
        let shape = ShapeState {
            flap: 0.3,
            fold: 0.4,
            pitch: 0.1,
            ..Default::default()
        };
        let kin = element_kinematics(&wing, &shape, &BodyState::cruising(1.0));
        for v in &kin.velocity {
            assert_eq!(*v, Vec3::new(1.0, 0.0, 0.0));
        }
    }

    #[test]
    fn flap_speed_is_rate_times_radius() {
        let wing = paper_wing();
        let rate = 3.0;
        let shape = ShapeState {
            flap: 0.2,
            flap_rate: rate,
            ..Default::default()
        };
        let body = BodyState::cruising(0.0);
        let pose = WingPose::new(&wing, shape, body);
        let dt = 1e-6;
        let later = WingPose::new(
            &wing,
            ShapeState {
                flap: 0.2 + rate * dt,
                ..shape
            },
            body,
        );
        for e in &wing.elements {
            let p = pose.point(e.station, THREE_QUARTER_CHORD);
            let radius = (p.position.y.powi(2) + p.position.z.powi(2)).sqrt();
            assert!((p.velocity.norm() - rate * radius).abs() < 1e-12);
            let fd = (later.point(e.station, THREE_QUARTER_CHORD).position - p.position) / dt;
            assert!((fd - p.velocity).norm() < 1e-5);
        }
    }

    #[test]
    fn frames_are_orthonormal() {
        let wing = build_wing(&WingGeometry {
            sweep_distal: 0.4,
            ..Default::default()
        })
        .unwrap();
        let gait = GaitParams {
            mode: GaitMode::ThreeAxes,
            ..Default::default()
        };
        let kin = element_kinematics(&wing, &eval_gait(&gait, 0.03), &BodyState::cruising(1.0));
        for (n, t) in kin.normal.iter().zip(&kin.tangent) {
            assert!((n.norm() - 1.0).abs() < 1e-14);
            assert!((t.norm() - 1.0).abs() < 1e-14);
            assert!(n.dot(t).abs() < 1e-14);
        }
    }

    #[test]
    fn posed_wing_is_mirror_symmetric() {
        let wing = paper_wing();
        let shape = ShapeState {
            flap: 0.57,
            fold: 0.31,
            pitch: 0.06,
            flap_rate: 2.1,
            fold_rate: -7.4,
            pitch_rate: -1.5,
        };
        let pose = WingPose::new(&wing, shape, BodyState::cruising(1.0));
        let mirrored = |p: &Vec3, q: &Vec3| (p.x - q.x).abs().max((p.y + q.y).abs()).max((p.z - q.z).abs());
        for frac in [0.0, QUARTER_CHORD, TRAILING_EDGE] {
            let pts = pose.node_points(frac);
            let n = pts.len() - 1;
            for j in 0..=n {
                assert!(mirrored(&pts[j], &pts[n - j]) < 1e-15, "frac {frac} node {j}");
            }
        }
        let kin = pose.kinematics();
        let n = kin.velocity.len();
        for i in 0..n {
            assert!(mirrored(&kin.velocity[i], &kin.velocity[n - 1 - i]) < 1e-14);
            assert!(mirrored(&kin.normal[i], &kin.normal[n - 1 - i]) < 1e-15);
        }
    }

    #[test]
    fn hinge_node_is_continuous_under_fold() {
        let wing = paper_wing();
        let shape = ShapeState {
            flap: 0.3,
            fold: 0.9,
            pitch: 0.2,
            ..Default::default()
        };
        let pose = WingPose::new(&wing, shape, BodyState::cruising(0.0));
        let geom = &wing.geometry;
        for frac in [QUARTER_CHORD, TRAILING_EDGE] {
            let s = geom.semispan_proximal;
            let inner = pose.point(s, frac).position;
            let outer = pose.point(s + 1e-12, frac).position;
            assert!((inner - outer).norm() < 1e-10);
        }
    }

    #[test]
    fn incidence_gives_sine_wash() {
        let wing = paper_wing();
        let alpha = 5f64.to_radians();
        let shape = ShapeState {
            pitch: alpha,
            ..Default::default()
        };
        let kin = element_kinematics(&wing, &shape, &BodyState::cruising(1.0));
        let wash = motion_wash(&kin, Vec3::zeros());
        for (y1, u) in wash.y1.iter().zip(&wash.speed) {
            assert!((y1 - 0.0872).abs() < 1e-4);
            assert!((y1 - alpha.sin()).abs() < 1e-14);
            assert!((u - alpha.cos()).abs() < 1e-14);
        }
        assert!(wash.check_floor().is_ok());
    }

    #[test]
    fn chordwise_flow_has_no_wash() {
        let wing = paper_wing();
        let kin = element_kinematics(&wing, &ShapeState::default(), &BodyState::cruising(1.0));
        let wash = motion_wash(&kin, Vec3::zeros());
        assert!(wash.y1.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn hovering_wing_is_flagged() {
        let wing = paper_wing();
        let kin = element_kinematics(&wing, &ShapeState::default(), &BodyState::cruising(0.0));
        let wash = motion_wash(&kin, Vec3::zeros());
        assert_eq!(wash.stalled().len(), wing.len());
        assert!(matches!(wash.check_floor(), Err(Error::ModelStall { element: 0, .. })));
    }

    #[test]
    fn prescribed_body_step() {
        let body = BodyState::cruising(1.0);
        let next = step_body(&body, Vec3::new(5.0, 0.0, 3.0), 0.1, 0.0025, BodyMode::Prescribed);
        assert_eq!(next.position - body.position, Vec3::new(0.0025, 0.0, 0.0));
        assert_eq!(next.velocity, body.velocity);
    }

    #[test]
    fn point_mass_falls_ballistically() {
        let mut body = BodyState::cruising(0.0);
        let dt = 0.001;
        for _ in 0..100 {
            body = step_body(&body, Vec3::zeros(), 0.05, dt, BodyMode::PointMass);
        }
        let t = 0.1;
        let exact = 0.5 * GRAVITY.z * t * t;
        // semi-implicit Euler overshoots by g*t*dt/2
        assert!((body.position.z - exact).abs() <= 9.81 * t * dt);
        assert!((body.velocity.z - GRAVITY.z * t).abs() < 1e-12);
    }

    #[test]
    fn point_mass_hovers_when_weight_is_balanced() {
        let mass = 0.04;
        let mut body = BodyState::cruising(1.0);
        for _ in 0..50 {
            body = step_body(&body, -GRAVITY * mass, mass, 0.01, BodyMode::PointMass);
        }
        assert!((body.velocity - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
    }
}
