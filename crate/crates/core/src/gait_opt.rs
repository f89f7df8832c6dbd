//! Wake-structure gait design: find wing morphology (and optionally gait)
//! parameters whose wake mesh matches a desired one.
//!
//! The objective is the squared Euclidean distance between index-aligned
//! wake vertices. It is a simulation with no usable gradient, so the search
//! is a bounded Nelder-Mead simplex in unit-box coordinates.

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::sim::biot_savart_map;
use crate::wake::WakeStructure;
use crate::{Error, Result};

/// Added to every out-of-bounds evaluation. Any feasible cost at or above
/// this value is treated as infeasible, so penalized points always lose.
pub const PENALTY_OFFSET: f64 = 1e6;
/// Cost of a candidate whose simulation fails.
pub const INFEASIBLE_COST: f64 = 1e9;
/// Weight of the squared clamp distance (unit-box coordinates).
pub const CLAMP_WEIGHT: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignField {
    ChordProximal,
    SweepDistal,
    FlapAmplitude,
    FoldAmplitude,
    FoldPhase,
}

impl DesignField {
    pub fn get(self, config: &SimConfig) -> f64 {
        match self {
            DesignField::ChordProximal => config.wing.chord_proximal,
            DesignField::SweepDistal => config.wing.sweep_distal,
            DesignField::FlapAmplitude => config.gait.flap_amplitude,
            DesignField::FoldAmplitude => config.gait.fold_amplitude,
            DesignField::FoldPhase => config.gait.fold_phase,
        }
    }

    pub fn set(self, config: &mut SimConfig, value: f64) {
        match self {
            DesignField::ChordProximal => config.wing.chord_proximal = value,
            DesignField::SweepDistal => config.wing.sweep_distal = value,
            DesignField::FlapAmplitude => config.gait.flap_amplitude = value,
            DesignField::FoldAmplitude => config.gait.fold_amplitude = value,
            DesignField::FoldPhase => config.gait.fold_phase = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParameter {
    pub field: DesignField,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl DesignParameter {
    pub fn normalized(&self) -> f64 {
        (self.value - self.lower) / (self.upper - self.lower)
    }

    pub fn denormalize(&self, u: f64) -> f64 {
        self.lower + u * (self.upper - self.lower)
    }
}

/// Morphology/gait parameters under search. Span lengths are never part of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignVector {
    pub params: Vec<DesignParameter>,
}

impl DesignVector {
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.value).collect()
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.normalized()).collect()
    }

    pub fn with_normalized(&self, u: &[f64]) -> Self {
        let mut out = self.clone();
        for (p, &ui) in out.params.iter_mut().zip(u) {
            p.value = p.denormalize(ui);
        }
        out
    }

    pub fn with_values(&self, values: &[f64]) -> Self {
        let mut out = self.clone();
        for (p, &v) in out.params.iter_mut().zip(values) {
            p.value = v;
        }
        out
    }

    pub fn in_bounds(&self) -> bool {
        self.params.iter().all(|p| p.value >= p.lower && p.value <= p.upper)
    }

    /// Clamped copy and the squared clamp distance in unit-box coordinates.
    pub fn clamped(&self) -> (Self, f64) {
        let mut out = self.clone();
        let mut dist2 = 0.0;
        for p in out.params.iter_mut() {
            let c = p.value.clamp(p.lower, p.upper);
            let d = (p.value - c) / (p.upper - p.lower);
            dist2 += d * d;
            p.value = c;
        }
        (out, dist2)
    }

    pub fn apply(&self, config: &SimConfig) -> SimConfig {
        let mut out = config.clone();
        for p in &self.params {
            p.field.set(&mut out, p.value);
        }
        out
    }
}

/// Sum of squared distances between index-aligned vertices (m^2).
pub fn wake_distance(w: &WakeStructure, wd: &WakeStructure) -> Result<f64> {
    if w.vertices.len() != wd.vertices.len() {
        return Err(Error::MeshMismatch {
            left: w.vertices.len(),
            right: wd.vertices.len(),
        });
    }
    Ok(w.vertices
        .iter()
        .zip(&wd.vertices)
        .map(|(a, b)| (a - b).norm_squared())
        .sum())
}

/// Outcome of one objective evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub values: Vec<f64>,
    pub cost: f64,
    pub feasible: bool,
}

/// Cost of one candidate; never fails.
pub fn evaluate_candidate(x: &DesignVector, config: &SimConfig, wd: &WakeStructure) -> Evaluation {
    let (clamped, dist2) = x.clamped();
    let raw = biot_savart_map(&clamped.apply(config)).and_then(|w| wake_distance(&w, wd));
    let (cost, feasible) = match raw {
        Ok(c) if c.is_finite() && c < PENALTY_OFFSET => {
            if dist2 > 0.0 {
                (PENALTY_OFFSET + c + CLAMP_WEIGHT * dist2, false)
            } else {
                (c, true)
            }
        }
        _ => (INFEASIBLE_COST + CLAMP_WEIGHT * dist2, false),
    };
    Evaluation {
        values: x.values(),
        cost,
        feasible,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Budget,
    Tolerance,
    SimplexCollapse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Maximum number of objective evaluations.
    pub budget: usize,
    /// Initial simplex edge (unit-box coordinates).
    pub initial_step: f64,
    /// Simplex diameter below which the search stops (unit-box coordinates).
    pub x_tolerance: f64,
    /// Stop when the simplex cost spread falls below this (m^2).
    pub f_tolerance: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            budget: 200,
            initial_step: 0.1,
            x_tolerance: 1e-6,
            f_tolerance: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub best: Vec<f64>,
    pub best_cost: f64,
    pub history: Vec<(Vec<f64>, f64)>,
    pub terminated_by: Termination,
}

struct Budgeted<F> {
    f: F,
    budget: usize,
    history: Vec<(Vec<f64>, f64)>,
}

impl<F: FnMut(&[f64]) -> f64> Budgeted<F> {
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.history.len() >= self.budget {
            return None;
        }
        let v = (self.f)(x);
        self.history.push((x.to_vec(), v));
        Some(v)
    }
}

/// Nelder-Mead with standard coefficients (1, 2, 1/2, 1/2). Stops the moment
/// the evaluation budget is spent.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut obj = Budgeted {
        f,
        budget: opts.budget,
        history: Vec::with_capacity(opts.budget),
    };
    let finish = |obj: Budgeted<F>, reason| {
        let (best, best_cost) = obj
            .history
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(x, c)| (x.clone(), *c))
            .unwrap_or_else(|| (x0.to_vec(), f64::INFINITY));
        SimplexResult {
            best,
            best_cost,
            history: obj.history,
            terminated_by: reason,
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    for k in 0..=dim {
        let mut x = x0.to_vec();
        if k > 0 {
            // step inward when starting near the upper face of the unit box
            let step = if x[k - 1] + opts.initial_step <= 1.0 { opts.initial_step } else { -opts.initial_step };
            x[k - 1] += step;
        }
        match obj.eval(&x) {
            Some(v) => simplex.push((x, v)),
            None => return finish(obj, Termination::Budget),
        }
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex
            .iter()
            .skip(1)
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diameter < opts.x_tolerance {
            return finish(obj, Termination::SimplexCollapse);
        }
        if simplex[dim].1 - simplex[0].1 <= opts.f_tolerance {
            return finish(obj, Termination::Tolerance);
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|i| simplex[..dim].iter().map(|(x, _)| x[i]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = along(-1.0);
        let Some(fr) = obj.eval(&xr) else { return finish(obj, Termination::Budget) };
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let Some(fe) = obj.eval(&xe) else { return finish(obj, Termination::Budget) };
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        // contraction: outside if the reflection improved on the worst, inside otherwise
        let (xc, reference) = if fr < simplex[dim].1 { (along(-0.5), fr) } else { (along(0.5), simplex[dim].1) };
        let Some(fc) = obj.eval(&xc) else { return finish(obj, Termination::Budget) };
        if fc < reference {
            simplex[dim] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for k in 1..=dim {
            let xs: Vec<f64> = best.iter().zip(&simplex[k].0).map(|(b, x)| b + 0.5 * (x - b)).collect();
            let Some(fs) = obj.eval(&xs) else { return finish(obj, Termination::Budget) };
            simplex[k] = (xs, fs);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    pub best: DesignVector,
    pub best_cost: f64,
    pub history: Vec<Evaluation>,
    pub evaluations: usize,
    pub terminated_by: Termination,
}

impl OptResult {
    /// Running minimum of the cost over the evaluation history.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.history
            .iter()
            .scan(f64::INFINITY, |best, e| {
                *best = best.min(e.cost);
                Some(*best)
            })
            .collect()
    }
}

/// Search the design space for the wake `wd`, starting from `x0`.
pub fn optimize(config: &SimConfig, wd: &WakeStructure, x0: &DesignVector, opts: &NelderMeadOptions) -> Result<OptResult> {
    if opts.budget < x0.len() + 2 {
        return Err(Error::InvalidArgument(format!(
            "budget {} is below dim + 2 = {}",
            opts.budget,
            x0.len() + 2
        )));
    }
    let mut history = Vec::with_capacity(opts.budget);
    let res = nelder_mead(
        |u| {
            let e = evaluate_candidate(&x0.with_normalized(u), config, wd);
            let c = e.cost;
            history.push(e);
            c
        },
        &x0.normalized(),
        opts,
    );
    let best_idx = history
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.cost.total_cmp(&b.1.cost))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(OptResult {
        best: x0.with_values(&history[best_idx].values),
        best_cost: history[best_idx].cost,
        evaluations: history.len(),
        history,
        terminated_by: res.terminated_by,
    })
}
