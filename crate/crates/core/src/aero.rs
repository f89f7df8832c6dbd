//! Unsteady lifting line with Wagner indicial lag.
//!
//! The spanwise circulation is a sine series over the full span,
//! `Gamma_i = sum_k a_k sin(k theta_i)`. Each blade element carries two
//! deficiency states realizing the two-term exponential Wagner function, so
//! the effective wash
//!
//! ```text
//! beta_i = Phi0 * y'_i + sum_k psi_k lambda_ki z_ki,   z_ki' = -lambda_ki z_ki + y'_i
//! ```
//!
//! equals the Duhamel convolution of the wash history `y'` with the Wagner
//! response. The circulation relaxes towards the flat-plate value
//! `pi c_i beta_i` over one semichord travel time:
//!
//! ```text
//! A a' = mu o (pi c o beta - A a),   mu_i = 2 U_i / c_i
//! ```
//!
//! with `y' = y1 + P a` where `P` is the lifting-line downwash matrix.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, LU};
use serde::{Deserialize, Serialize};

use crate::morphology::{ElementKinematics, MotionWash, Wing, SPEED_FLOOR};
use crate::{Error, Result, Vec3};

/// Largest accepted condition number of the span matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// RK4 is stable for `dt * rho(A_xi)` below roughly 2.78 on the negative real axis.
pub const RK4_STABILITY_BUDGET: f64 = 2.0;

/// Two-term exponential approximation of the Wagner function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WagnerParams {
    pub psi: [f64; 2],
    pub eps: [f64; 2],
}

impl Default for WagnerParams {
    /// R. T. Jones' coefficients.
    fn default() -> Self {
        Self {
            psi: [0.165, 0.335],
            eps: [0.0455, 0.3],
        }
    }
}

impl WagnerParams {
    pub fn phi0(&self) -> f64 {
        1.0 - self.psi[0] - self.psi[1]
    }
}

/// Wagner lift-growth function of the distance travelled in semichords.
pub fn wagner_phi(tau_bar: f64, params: &WagnerParams) -> f64 {
    1.0 - params.psi[0] * (-params.eps[0] * tau_bar).exp() - params.psi[1] * (-params.eps[1] * tau_bar).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DownwashMode {
    /// Classical lifting-line downwash `-(1/4l) sum k a_k sin(k theta)/sin(theta)`.
    #[default]
    Prandtl,
    /// The unscaled matrix `sum a_k sin(k theta)/sin(theta)` without harmonic weights.
    PaperLiteral,
    /// No self-induced wash (isolated sections).
    Off,
}

/// Evaluate the sine series at each angle.
pub fn circulation(a: &DVector<f64>, thetas: &[f64]) -> Result<DVector<f64>> {
    if a.len() != thetas.len() {
        return Err(Error::DimensionMismatch {
            expected: thetas.len(),
            found: a.len(),
        });
    }
    Ok(span_matrix(thetas) * a)
}

/// Rows `[sin theta_i, sin 2 theta_i, ..., sin n theta_i]`.
pub fn span_matrix(thetas: &[f64]) -> DMatrix<f64> {
    let n = thetas.len();
    DMatrix::from_fn(n, n, |i, k| ((k + 1) as f64 * thetas[i]).sin())
}

/// Matrix `P` with `y_Gamma = P a`.
pub fn downwash_matrix(thetas: &[f64], semispan: f64, mode: DownwashMode) -> Result<DMatrix<f64>> {
    let n = thetas.len();
    if let Some(i) = thetas.iter().position(|t| t.sin() <= 0.0) {
        return Err(Error::DegenerateGeometry(format!("element {i} sits on a wingtip")));
    }
    Ok(match mode {
        DownwashMode::Prandtl => DMatrix::from_fn(n, n, |i, k| {
            let m = (k + 1) as f64;
            -m * (m * thetas[i]).sin() / (4.0 * semispan * thetas[i].sin())
        }),
        DownwashMode::PaperLiteral => {
            DMatrix::from_fn(n, n, |i, k| ((k + 1) as f64 * thetas[i]).sin() / thetas[i].sin())
        }
        DownwashMode::Off => DMatrix::zeros(n, n),
    })
}

/// Circulation-induced wash at each element.
pub fn induced_wash(a: &DVector<f64>, thetas: &[f64], semispan: f64, mode: DownwashMode) -> Result<DVector<f64>> {
    if a.len() != thetas.len() {
        return Err(Error::DimensionMismatch {
            expected: thetas.len(),
            found: a.len(),
        });
    }
    Ok(downwash_matrix(thetas, semispan, mode)? * a)
}

/// Constant part of the aerodynamic system: depends only on the element angles.
#[derive(Debug, Clone)]
pub struct SpanBasis {
    pub thetas: Vec<f64>,
    pub chords: Vec<f64>,
    pub widths: Vec<f64>,
    pub semispan: f64,
    pub downwash: DownwashMode,
    pub a: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub condition: f64,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl SpanBasis {
    pub fn new(
        thetas: Vec<f64>,
        chords: Vec<f64>,
        widths: Vec<f64>,
        semispan: f64,
        downwash: DownwashMode,
    ) -> Result<Self> {
        let n = thetas.len();
        if chords.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: chords.len() });
        }
        if widths.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: widths.len() });
        }
        let a = span_matrix(&thetas);
        let sv = a.clone().svd(false, false).singular_values;
        let (smax, smin) = (sv.max(), sv.min());
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { cond: condition });
        }
        let p = downwash_matrix(&thetas, semispan, downwash)?;
        let lu = a.clone().lu();
        Ok(Self {
            thetas,
            chords,
            widths,
            semispan,
            downwash,
            a,
            p,
            condition,
            lu,
        })
    }

    pub fn from_wing(wing: &Wing, downwash: DownwashMode) -> Result<Self> {
        Self::new(wing.thetas(), wing.chords(), wing.widths(), wing.semispan(), downwash)
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// `A^{-1} M`.
    pub fn solve(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        // A is square and well conditioned by construction
        self.lu.solve(m).expect("span matrix factorization")
    }
}

/// Aerodynamic state `xi = [a; z_11, z_21, z_12, z_22, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AeroState {
    pub xi: DVector<f64>,
    n: usize,
}

impl AeroState {
    pub fn zeros(n: usize) -> Self {
        Self {
            xi: DVector::zeros(3 * n),
            n,
        }
    }

    pub fn from_parts(a: &DVector<f64>, z: &[[f64; 2]]) -> Result<Self> {
        let n = a.len();
        if z.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: z.len() });
        }
        let mut xi = DVector::zeros(3 * n);
        xi.rows_mut(0, n).copy_from(a);
        for (i, zi) in z.iter().enumerate() {
            xi[n + 2 * i] = zi[0];
            xi[n + 2 * i + 1] = zi[1];
        }
        Ok(Self { xi, n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Fourier coefficients.
    pub fn a(&self) -> DVector<f64> {
        self.xi.rows(0, self.n).into_owned()
    }

    /// Deficiency states of element `i`.
    pub fn z(&self, i: usize) -> [f64; 2] {
        [self.xi[self.n + 2 * i], self.xi[self.n + 2 * i + 1]]
    }
}

/// State-space realization for one set of relative speeds.
#[derive(Debug, Clone)]
pub struct AeroSystem {
    pub basis: Arc<SpanBasis>,
    pub params: WagnerParams,
    pub speeds: Vec<f64>,
    /// `lambda_ki = 2 eps_k U_i / c_i`.
    pub lambda: Vec<[f64; 2]>,
    /// `mu_i = 2 U_i / c_i`.
    pub mu: Vec<f64>,
    /// Block-diagonal `C` (n x 2n), rows `[psi_1 lambda_1i, psi_2 lambda_2i]`.
    pub c: DMatrix<f64>,
    /// Block-diagonal `D` (2n x 2n), entries `-lambda_ki`.
    pub d: DMatrix<f64>,
    /// Block-diagonal `E` (2n x n), columns `[1, 1]^T`.
    pub e: DMatrix<f64>,
    pub a_xi: DMatrix<f64>,
    pub b_xi: DMatrix<f64>,
    /// Output map from `xi` to `beta` with the wash `y'` as input.
    pub c_xi: DMatrix<f64>,
    pub d_xi: DMatrix<f64>,
}

/// Assemble the stacked system for per-element speeds.
pub fn assemble_aero(basis: Arc<SpanBasis>, speeds: &[f64], params: &WagnerParams) -> Result<AeroSystem> {
    let n = basis.len();
    if speeds.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: speeds.len() });
    }
    if let Some(i) = speeds.iter().position(|u| !(*u >= SPEED_FLOOR)) {
        return Err(Error::ModelStall { element: i, speed: speeds[i] });
    }

    let phi0 = params.phi0();
    let mut lambda = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    let mut c = DMatrix::zeros(n, 2 * n);
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    let mut e = DMatrix::zeros(2 * n, n);
    for i in 0..n {
        let rate = 2.0 * speeds[i] / basis.chords[i];
        let l = [params.eps[0] * rate, params.eps[1] * rate];
        for k in 0..2 {
            c[(i, 2 * i + k)] = params.psi[k] * l[k];
            d[(2 * i + k, 2 * i + k)] = -l[k];
            e[(2 * i + k, i)] = 1.0;
        }
        lambda.push(l);
        mu.push(rate);
    }

    // gain from beta to the circulation rate: diag(mu * pi * c)
    let gain = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| mu[i] * std::f64::consts::PI * basis.chords[i]));
    let relax = DMatrix::from_diagonal(&DVector::from_vec(mu.clone())) * &basis.a;

    let aa = basis.solve(&(&gain * &basis.p * phi0 - relax));
    let az = basis.solve(&(&gain * &c));
    let za = &e * &basis.p;

    let mut a_xi = DMatrix::zeros(3 * n, 3 * n);
    a_xi.view_mut((0, 0), (n, n)).copy_from(&aa);
    a_xi.view_mut((0, n), (n, 2 * n)).copy_from(&az);
    a_xi.view_mut((n, 0), (2 * n, n)).copy_from(&za);
    a_xi.view_mut((n, n), (2 * n, 2 * n)).copy_from(&d);

    let mut b_xi = DMatrix::zeros(3 * n, n);
    b_xi.view_mut((0, 0), (n, n)).copy_from(&basis.solve(&(gain * phi0)));
    b_xi.view_mut((n, 0), (2 * n, n)).copy_from(&e);

    let mut c_xi = DMatrix::zeros(n, 3 * n);
    c_xi.view_mut((0, n), (n, 2 * n)).copy_from(&c);
    let d_xi = DMatrix::identity(n, n) * phi0;

    Ok(AeroSystem {
        basis,
        params: *params,
        speeds: speeds.to_vec(),
        lambda,
        mu,
        c,
        d,
        e,
        a_xi,
        b_xi,
        c_xi,
        d_xi,
    })
}

impl AeroSystem {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn condition(&self) -> f64 {
        self.basis.condition
    }

    pub fn derivative(&self, xi: &DVector<f64>, y1: &DVector<f64>) -> DVector<f64> {
        &self.a_xi * xi + &self.b_xi * y1
    }

    /// Cheap upper bound on the spectral radius of `A_xi` (Gershgorin).
    pub fn gershgorin_radius(&self) -> f64 {
        self.a_xi
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.a_xi
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Number of equal RK4 sub-steps keeping `dt * rho(A_xi)` inside the stability budget.
    pub fn substeps_for(&self, dt: f64) -> usize {
        if dt * self.gershgorin_radius() <= RK4_STABILITY_BUDGET {
            return 1;
        }
        ((dt * self.spectral_radius() / RK4_STABILITY_BUDGET).ceil() as usize).max(1)
    }

    /// One RK4 step with the motion wash given as a function of the stage time offset in `[0, dt]`.
    pub fn step_with<F>(&self, state: &AeroState, dt: f64, y1: F) -> Result<AeroState>
    where
        F: Fn(f64) -> DVector<f64>,
    {
        let xi = &state.xi;
        let (u0, uh, u1) = (y1(0.0), y1(0.5 * dt), y1(dt));
        for u in [&u0, &uh, &u1] {
            if u.len() != self.len() {
                return Err(Error::DimensionMismatch { expected: self.len(), found: u.len() });
            }
        }
        let k1 = self.derivative(xi, &u0);
        let k2 = self.derivative(&(xi + &k1 * (0.5 * dt)), &uh);
        let k3 = self.derivative(&(xi + &k2 * (0.5 * dt)), &uh);
        let k4 = self.derivative(&(xi + &k3 * dt), &u1);
        let next = xi + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if let Some(idx) = next.iter().position(|v| !v.is_finite()) {
            let n = self.len();
            return Err(if idx < n {
                Error::NonFinite { what: "fourier coefficient", index: idx }
            } else {
                Error::NonFinite { what: "deficiency state of element", index: (idx - n) / 2 }
            });
        }
        Ok(AeroState { xi: next, n: state.n })
    }

    /// One RK4 step with constant motion wash.
    pub fn step(&self, state: &AeroState, y1: &DVector<f64>, dt: f64) -> Result<AeroState> {
        self.step_with(state, dt, |_| y1.clone())
    }

    /// Total wash `y' = y1 + P a`.
    pub fn total_wash(&self, state: &AeroState, y1: &DVector<f64>) -> DVector<f64> {
        y1 + &self.basis.p * state.a()
    }

    /// Effective (Wagner-lagged) wash `beta = C_xi xi + D_xi y'`.
    pub fn beta(&self, state: &AeroState, y1: &DVector<f64>) -> DVector<f64> {
        &self.c_xi * &state.xi + &self.d_xi * self.total_wash(state, y1)
    }

    pub fn circulation(&self, state: &AeroState) -> DVector<f64> {
        &self.basis.a * state.a()
    }
}

/// Aerodynamic output at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceOutput {
    pub beta: DVector<f64>,
    pub gamma: DVector<f64>,
    /// Kutta-Joukowski force on each strip (N).
    pub element_forces: Vec<Vec3>,
    pub left: Vec3,
    pub right: Vec3,
    pub total: Vec3,
}

/// Per-element forces `rho U_i Gamma_i ds_i` normal to the relative flow.
pub fn force_output(
    sys: &AeroSystem,
    state: &AeroState,
    y1: &DVector<f64>,
    kin: &ElementKinematics,
    wash: &MotionWash,
    air_density: f64,
) -> ForceOutput {
    let beta = sys.beta(state, y1);
    let gamma = sys.circulation(state);
    let mut element_forces = Vec::with_capacity(sys.len());
    let (mut left, mut right) = (Vec3::zeros(), Vec3::zeros());
    for i in 0..sys.len() {
        let dir = kin.tangent[i].cross(&wash.relative[i]);
        let dir = if dir.norm() > 0.0 { dir.normalize() } else { Vec3::zeros() };
        let f = dir * (air_density * wash.speed[i] * gamma[i] * sys.basis.widths[i]);
        if kin.collocation[i].y >= 0.0 {
            left += f;
        } else {
            right += f;
        }
        element_forces.push(f);
    }
    ForceOutput {
        beta,
        gamma,
        element_forces,
        left,
        right,
        total: left + right,
    }
}

/// Steady lifting-line circulation for a frozen wash: solves
/// `A a = pi c o (y1 + P a)` directly.
pub fn steady_coefficients(basis: &SpanBasis, y1: &DVector<f64>) -> Result<DVector<f64>> {
    let n = basis.len();
    let pc = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| std::f64::consts::PI * basis.chords[i]));
    let lhs = &basis.a - &pc * &basis.p;
    lhs.lu()
        .solve(&(pc * y1))
        .ok_or_else(|| Error::DegenerateGeometry("singular steady lifting-line system".into()))
}
