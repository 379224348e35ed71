//! Galerkin discrete Lagrangians over Lagrange-polynomial control points.
//!
//! The action over one step is restricted to the span of the degree-`s`
//! interpolant through `s + 1` control points and approximated by a
//! quadrature rule. With the endpoints pinned, the interior points are
//! chosen to make the quadrature sum stationary; the stationarity residual
//! is the analytic gradient of the sum, so the interior solve is free of
//! finite-difference noise. Only the outer boundary derivatives D1/D2 use
//! central differences.

use crate::error::Result;
use crate::linalg;
use crate::numerics::{
    lagrange_basis, lagrange_basis_deriv, newton_refine, quartic_fd_step, NewtonConfig,
    QuadratureRule,
};
use crate::systems::{inverse_legendre, LagrangianSystem, PhaseState, TangentState};

/// Configuration for a Galerkin discrete Lagrangian of polynomial degree `s`.
#[derive(Debug, Clone)]
pub struct GalerkinConfig {
    pub s: usize,
    /// Control times `0 = d_0 < ... < d_s = 1`.
    pub control_times: Vec<f64>,
    pub rule: QuadratureRule,
    pub newton: NewtonConfig,
}

impl GalerkinConfig {
    /// Uniform control times `d_nu = nu / s`.
    pub fn new(s: usize, rule: QuadratureRule) -> Self {
        assert!(s >= 1);
        let control_times = (0..=s).map(|nu| nu as f64 / s as f64).collect();
        GalerkinConfig {
            s,
            control_times,
            rule,
            newton: NewtonConfig::default(),
        }
    }

    pub fn with_control_times(mut self, d: Vec<f64>) -> Self {
        assert_eq!(d.len(), self.s + 1);
        assert_eq!(d[0], 0.0);
        assert_eq!(*d.last().unwrap(), 1.0);
        assert!(d.windows(2).all(|w| w[0] < w[1]));
        self.control_times = d;
        self
    }
}

/// Result of extremizing the one-step action over the interior points.
#[derive(Debug, Clone)]
pub struct GalerkinLd {
    pub value: f64,
    /// All `s + 1` control points, endpoints included.
    pub points: Vec<Vec<f64>>,
}

/// Evaluate the interpolant and its velocity at fraction `tau` of the step.
pub fn interpolant(cfg: &GalerkinConfig, points: &[Vec<f64>], tau: f64, h: f64) -> TangentState {
    assert_eq!(points.len(), cfg.s + 1);
    let m = points[0].len();
    let mut q = vec![0.0; m];
    let mut v = vec![0.0; m];
    for (nu, point) in points.iter().enumerate() {
        let basis = lagrange_basis(&cfg.control_times, nu, tau);
        let dbasis = lagrange_basis_deriv(&cfg.control_times, nu, tau);
        for j in 0..m {
            q[j] += point[j] * basis;
            v[j] += point[j] * dbasis / h;
        }
    }
    TangentState::new(q, v)
}

/// Quadrature sum of the Lagrangian along the interpolant through `points`.
fn action_sum(
    cfg: &GalerkinConfig,
    sys: &dyn LagrangianSystem,
    points: &[Vec<f64>],
    h: f64,
) -> f64 {
    let mut total = 0.0;
    for (i, &c) in cfg.rule.nodes.iter().enumerate() {
        let state = interpolant(cfg, points, c, h);
        total += cfg.rule.weights[i] * sys.lagrangian(&state.q, &state.v);
    }
    h * total
}

/// Analytic gradient of the action sum with respect to interior point `nu`.
fn stationarity_residual(
    cfg: &GalerkinConfig,
    sys: &dyn LagrangianSystem,
    points: &[Vec<f64>],
    h: f64,
) -> Vec<f64> {
    let m = points[0].len();
    let mut residual = vec![0.0; (cfg.s - 1) * m];
    for (i, &c) in cfg.rule.nodes.iter().enumerate() {
        let state = interpolant(cfg, points, c, h);
        let dq = sys.dl_dq(&state.q, &state.v);
        let dv = sys.dl_dv(&state.q, &state.v);
        let w = h * cfg.rule.weights[i];
        for nu in 1..cfg.s {
            let basis = lagrange_basis(&cfg.control_times, nu, c);
            let dbasis = lagrange_basis_deriv(&cfg.control_times, nu, c);
            for j in 0..m {
                residual[(nu - 1) * m + j] += w * (dq[j] * basis + dv[j] * dbasis / h);
            }
        }
    }
    residual
}

fn pack_points(q0: &[f64], q1: &[f64], interior: &[f64], s: usize) -> Vec<Vec<f64>> {
    let m = q0.len();
    let mut points = Vec::with_capacity(s + 1);
    points.push(q0.to_vec());
    for nu in 0..s.saturating_sub(1) {
        points.push(interior[nu * m..(nu + 1) * m].to_vec());
    }
    points.push(q1.to_vec());
    points
}

fn eval_galerkin_ld(
    cfg: &GalerkinConfig,
    sys: &dyn LagrangianSystem,
    q0: &[f64],
    q1: &[f64],
    h: f64,
    warm: Option<&[f64]>,
) -> Result<GalerkinLd> {
    let m = q0.len();
    if cfg.s == 1 {
        let points = pack_points(q0, q1, &[], 1);
        return Ok(GalerkinLd {
            value: action_sum(cfg, sys, &points, h),
            points,
        });
    }
    let guess: Vec<f64> = match warm {
        Some(w) => w.to_vec(),
        None => {
            // Linear interpolation of the endpoints at the control times.
            let mut g = Vec::with_capacity((cfg.s - 1) * m);
            for nu in 1..cfg.s {
                let d = cfg.control_times[nu];
                for j in 0..m {
                    g.push(q0[j] + d * (q1[j] - q0[j]));
                }
            }
            g
        }
    };
    let residual = |interior: &[f64]| -> Vec<f64> {
        let points = pack_points(q0, q1, interior, cfg.s);
        stationarity_residual(cfg, sys, &points, h)
    };
    let (interior, _) = newton_refine(residual, &guess, &cfg.newton)?;
    let points = pack_points(q0, q1, &interior, cfg.s);
    Ok(GalerkinLd {
        value: action_sum(cfg, sys, &points, h),
        points,
    })
}

/// The Galerkin discrete Lagrangian: extremize the quadrature-approximated
/// action over the interior control points with `q^0 = q0`, `q^s = q1`.
pub fn galerkin_ld(
    cfg: &GalerkinConfig,
    sys: &dyn LagrangianSystem,
    q0: &[f64],
    q1: &[f64],
    h: f64,
) -> Result<GalerkinLd> {
    eval_galerkin_ld(cfg, sys, q0, q1, h, None)
}

fn interior_of(points: &[Vec<f64>]) -> Vec<f64> {
    points[1..points.len() - 1]
        .iter()
        .flatten()
        .copied()
        .collect()
}

/// Fourth-order central difference in one endpoint coordinate, warm-starting
/// the interior extremization from the base solution.
fn slot_derivative(
    cfg: &GalerkinConfig,
    sys: &dyn LagrangianSystem,
    q0: &[f64],
    q1: &[f64],
    h: f64,
    warm: &[f64],
    first_slot: bool,
    j: usize,
) -> Result<f64> {
    let base = if first_slot { q0[j] } else { q1[j] };
    let s = quartic_fd_step() * base.abs().max(1.0);
    let eval = |offset: f64| -> Result<f64> {
        let (mut a, mut b) = (q0.to_vec(), q1.to_vec());
        if first_slot {
            a[j] += offset;
        } else {
            b[j] += offset;
        }
        Ok(eval_galerkin_ld(cfg, sys, &a, &b, h, Some(warm))?.value)
    };
    Ok((eval(-2.0 * s)? - 8.0 * eval(-s)? + 8.0 * eval(s)? - eval(2.0 * s)?) / (12.0 * s))
}

pub fn galerkin_d1(
    cfg: &GalerkinConfig,
    sys: &dyn LagrangianSystem,
    q0: &[f64],
    q1: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    let base = eval_galerkin_ld(cfg, sys, q0, q1, h, None)?;
    let warm = interior_of(&base.points);
    (0..q0.len())
        .map(|j| slot_derivative(cfg, sys, q0, q1, h, &warm, true, j))
        .collect()
}

pub fn galerkin_d2(
    cfg: &GalerkinConfig,
    sys: &dyn LagrangianSystem,
    q0: &[f64],
    q1: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    let base = eval_galerkin_ld(cfg, sys, q0, q1, h, None)?;
    let warm = interior_of(&base.points);
    (0..q1.len())
        .map(|j| slot_derivative(cfg, sys, q0, q1, h, &warm, false, j))
        .collect()
}

/// One step of the discrete Hamiltonian map generated by the Galerkin
/// discrete Lagrangian: solve `p0 = -D1 L_d(q0, q1)` for `q1` by Newton over
/// `q1` with finite-difference derivatives, then return `(q1, D2 L_d)`.
pub fn galerkin_step(
    cfg: &GalerkinConfig,
    sys: &dyn LagrangianSystem,
    z: &PhaseState,
    h: f64,
) -> Result<PhaseState> {
    let q1_guess = {
        let v0 = inverse_legendre(sys, &z.q, &z.p)?.v;
        linalg::axpy(&z.q, h, &v0)
    };
    galerkin_step_from(cfg, sys, z, h, &q1_guess)
}

/// `galerkin_step` with an explicit initial guess for `q1`.
pub fn galerkin_step_from(
    cfg: &GalerkinConfig,
    sys: &dyn LagrangianSystem,
    z: &PhaseState,
    h: f64,
    q1_guess: &[f64],
) -> Result<PhaseState> {
    let m = z.q.len();
    // The residual is assembled from finite differences of L_d, so cap the
    // outer tolerance above the derivative noise floor; the refinement loop
    // still polishes toward it.
    let outer = NewtonConfig {
        tol: cfg.newton.tol.max(1e-10),
        max_iter: cfg.newton.max_iter,
        fd_step: cfg.newton.fd_step,
    };
    let residual = |q1: &[f64]| -> Vec<f64> {
        match galerkin_d1(cfg, sys, &z.q, q1, h) {
            Ok(d1) => linalg::add(&z.p, &d1),
            Err(_) => vec![f64::NAN; m],
        }
    };
    let (q1, _) = newton_refine(residual, q1_guess, &outer)?;
    let p1 = galerkin_d2(cfg, sys, &z.q, &q1, h)?;
    Ok(PhaseState::new(q1, p1))
}
