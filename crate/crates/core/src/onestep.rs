//! Catalog of one-step methods with order and self-adjointness metadata.
//!
//! Tangent-space methods integrate the second-order form
//! `(dq/dt, dv/dt) = (v, accel(q, v))`; phase-space methods integrate
//! Hamilton's equations `(dq/dt, dp/dt) = (dH/dp, -dH/dq)` and require the
//! system to provide the Hamiltonian side.

use crate::error::{Error, Result};
use crate::linalg;
use crate::numerics::{newton_solve, NewtonConfig};
use crate::systems::LagrangianSystem;

/// State space a method acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// (q, v) with the Euler-Lagrange acceleration.
    Tangent,
    /// (q, p) with Hamilton's equations.
    Phase,
}

type StepFn = Box<
    dyn Fn(&dyn LagrangianSystem, &[f64], &[f64], f64) -> Result<(Vec<f64>, Vec<f64>)>
        + Send
        + Sync,
>;

/// A one-step map with its metadata. The stepper takes and returns the two
/// state halves, `(q, v)` or `(q, p)` depending on `space`.
pub struct OneStepMethod {
    pub name: &'static str,
    pub order: u32,
    pub self_adjoint: bool,
    pub space: Space,
    /// Whether the map commutes with affine point transformations, which is
    /// what makes the resulting discrete Lagrangian inherit translation
    /// invariance from the system.
    pub affine_equivariant: bool,
    stepper: StepFn,
}

impl OneStepMethod {
    pub fn step(
        &self,
        sys: &dyn LagrangianSystem,
        a: &[f64],
        b: &[f64],
        h: f64,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        if h == 0.0 {
            return Ok((a.to_vec(), b.to_vec()));
        }
        (self.stepper)(sys, a, b, h)
    }
}

impl std::fmt::Debug for OneStepMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OneStepMethod")
            .field("name", &self.name)
            .field("order", &self.order)
            .field("self_adjoint", &self.self_adjoint)
            .field("space", &self.space)
            .finish()
    }
}

fn rhs(
    sys: &dyn LagrangianSystem,
    space: Space,
    a: &[f64],
    b: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    match space {
        Space::Tangent => Ok((b.to_vec(), sys.accel(a, b))),
        Space::Phase => {
            let dq = sys.dh_dp(a, b).ok_or(Error::MissingHamiltonian)?;
            let dp = linalg::scale(&sys.dh_dq(a, b).ok_or(Error::MissingHamiltonian)?, -1.0);
            Ok((dq, dp))
        }
    }
}

fn explicit_euler_step(
    sys: &dyn LagrangianSystem,
    space: Space,
    a: &[f64],
    b: &[f64],
    h: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (da, db) = rhs(sys, space, a, b)?;
    Ok((linalg::axpy(a, h, &da), linalg::axpy(b, h, &db)))
}

fn explicit_midpoint_step(
    sys: &dyn LagrangianSystem,
    space: Space,
    a: &[f64],
    b: &[f64],
    h: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (k1a, k1b) = rhs(sys, space, a, b)?;
    let am = linalg::axpy(a, 0.5 * h, &k1a);
    let bm = linalg::axpy(b, 0.5 * h, &k1b);
    let (k2a, k2b) = rhs(sys, space, &am, &bm)?;
    Ok((linalg::axpy(a, h, &k2a), linalg::axpy(b, h, &k2b)))
}

fn rk4_step(
    sys: &dyn LagrangianSystem,
    space: Space,
    a: &[f64],
    b: &[f64],
    h: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (k1a, k1b) = rhs(sys, space, a, b)?;
    let (k2a, k2b) = rhs(
        sys,
        space,
        &linalg::axpy(a, 0.5 * h, &k1a),
        &linalg::axpy(b, 0.5 * h, &k1b),
    )?;
    let (k3a, k3b) = rhs(
        sys,
        space,
        &linalg::axpy(a, 0.5 * h, &k2a),
        &linalg::axpy(b, 0.5 * h, &k2b),
    )?;
    let (k4a, k4b) = rhs(
        sys,
        space,
        &linalg::axpy(a, h, &k3a),
        &linalg::axpy(b, h, &k3b),
    )?;
    let m = a.len();
    let mut qa = a.to_vec();
    let mut qb = b.to_vec();
    for j in 0..m {
        qa[j] += h / 6.0 * (k1a[j] + 2.0 * k2a[j] + 2.0 * k3a[j] + k4a[j]);
        qb[j] += h / 6.0 * (k1b[j] + 2.0 * k2b[j] + 2.0 * k3b[j] + k4b[j]);
    }
    Ok((qa, qb))
}

/// Residual tolerance for the stage equations of the implicit methods. Tight
/// enough that adjoint and quadratic-invariant identities hold to 1e-12.
const STAGE_TOL: f64 = 1e-13;

fn implicit_midpoint_step(
    sys: &dyn LagrangianSystem,
    space: Space,
    a: &[f64],
    b: &[f64],
    h: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = a.len();
    let cfg = NewtonConfig {
        tol: STAGE_TOL,
        max_iter: 30,
        ..Default::default()
    };
    // Stage equation: s = y0 + (h/2) f(s); then y1 = 2 s - y0.
    let residual = |s: &[f64]| -> Vec<f64> {
        let (sa, sb) = s.split_at(m);
        match rhs(sys, space, sa, sb) {
            Ok((fa, fb)) => {
                let mut r = Vec::with_capacity(2 * m);
                for j in 0..m {
                    r.push(s[j] - a[j] - 0.5 * h * fa[j]);
                }
                for j in 0..m {
                    r.push(s[m + j] - b[j] - 0.5 * h * fb[j]);
                }
                r
            }
            Err(_) => vec![f64::NAN; 2 * m],
        }
    };
    // Half explicit-Euler predictor keeps the solve translation-equivariant.
    let (fa, fb) = rhs(sys, space, a, b)?;
    let mut guess = Vec::with_capacity(2 * m);
    guess.extend(linalg::axpy(a, 0.5 * h, &fa));
    guess.extend(linalg::axpy(b, 0.5 * h, &fb));
    let s = newton_solve(residual, &guess, &cfg, None)?;
    let mut qa = vec![0.0; m];
    let mut qb = vec![0.0; m];
    for j in 0..m {
        qa[j] = 2.0 * s[j] - a[j];
        qb[j] = 2.0 * s[m + j] - b[j];
    }
    Ok((qa, qb))
}

fn gauss2_step(
    sys: &dyn LagrangianSystem,
    space: Space,
    a: &[f64],
    b: &[f64],
    h: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = a.len();
    let s3 = 3.0f64.sqrt();
    // Two-stage Gauss collocation tableau (order 4).
    let acoef = [[0.25, 0.25 - s3 / 6.0], [0.25 + s3 / 6.0, 0.25]];
    let bcoef = [0.5, 0.5];
    let cfg = NewtonConfig {
        tol: STAGE_TOL,
        max_iter: 30,
        ..Default::default()
    };
    // Unknowns: both stage states stacked as (a1, b1, a2, b2).
    let residual = |s: &[f64]| -> Vec<f64> {
        let stage = |i: usize| {
            (
                &s[2 * m * i..2 * m * i + m],
                &s[2 * m * i + m..2 * m * (i + 1)],
            )
        };
        let (a1, b1) = stage(0);
        let (a2, b2) = stage(1);
        let f1 = rhs(sys, space, a1, b1);
        let f2 = rhs(sys, space, a2, b2);
        match (f1, f2) {
            (Ok((f1a, f1b)), Ok((f2a, f2b))) => {
                let mut r = Vec::with_capacity(4 * m);
                for (i, (sa, sb)) in [(a1, b1), (a2, b2)].iter().enumerate() {
                    for j in 0..m {
                        r.push(sa[j] - a[j] - h * (acoef[i][0] * f1a[j] + acoef[i][1] * f2a[j]));
                    }
                    for j in 0..m {
                        r.push(sb[j] - b[j] - h * (acoef[i][0] * f1b[j] + acoef[i][1] * f2b[j]));
                    }
                }
                r
            }
            _ => vec![f64::NAN; 4 * m],
        }
    };
    let (fa, fb) = rhs(sys, space, a, b)?;
    let c = [0.5 - s3 / 6.0, 0.5 + s3 / 6.0];
    let mut guess = Vec::with_capacity(4 * m);
    for ci in c {
        guess.extend(linalg::axpy(a, ci * h, &fa));
        guess.extend(linalg::axpy(b, ci * h, &fb));
    }
    let s = newton_solve(residual, &guess, &cfg, None)?;
    let (mut qa, mut qb) = (a.to_vec(), b.to_vec());
    for i in 0..2 {
        let (sa, sb) = (
            &s[2 * m * i..2 * m * i + m],
            &s[2 * m * i + m..2 * m * (i + 1)],
        );
        let (fia, fib) = rhs(sys, space, sa, sb)?;
        for j in 0..m {
            qa[j] += h * bcoef[i] * fia[j];
            qb[j] += h * bcoef[i] * fib[j];
        }
    }
    Ok((qa, qb))
}

pub fn explicit_euler() -> OneStepMethod {
    OneStepMethod {
        name: "explicit_euler",
        order: 1,
        self_adjoint: false,
        space: Space::Tangent,
        affine_equivariant: true,
        stepper: Box::new(|sys, a, b, h| explicit_euler_step(sys, Space::Tangent, a, b, h)),
    }
}

pub fn explicit_midpoint() -> OneStepMethod {
    OneStepMethod {
        name: "explicit_midpoint",
        order: 2,
        self_adjoint: false,
        space: Space::Tangent,
        affine_equivariant: true,
        stepper: Box::new(|sys, a, b, h| explicit_midpoint_step(sys, Space::Tangent, a, b, h)),
    }
}

pub fn rk4() -> OneStepMethod {
    OneStepMethod {
        name: "rk4",
        order: 4,
        self_adjoint: false,
        space: Space::Tangent,
        affine_equivariant: true,
        stepper: Box::new(|sys, a, b, h| rk4_step(sys, Space::Tangent, a, b, h)),
    }
}

pub fn implicit_midpoint() -> OneStepMethod {
    OneStepMethod {
        name: "implicit_midpoint",
        order: 2,
        self_adjoint: true,
        space: Space::Tangent,
        affine_equivariant: true,
        stepper: Box::new(|sys, a, b, h| implicit_midpoint_step(sys, Space::Tangent, a, b, h)),
    }
}

pub fn explicit_midpoint_phase() -> OneStepMethod {
    OneStepMethod {
        name: "explicit_midpoint_phase",
        order: 2,
        self_adjoint: false,
        space: Space::Phase,
        affine_equivariant: true,
        stepper: Box::new(|sys, a, b, h| explicit_midpoint_step(sys, Space::Phase, a, b, h)),
    }
}

pub fn rk4_phase() -> OneStepMethod {
    OneStepMethod {
        name: "rk4_phase",
        order: 4,
        self_adjoint: false,
        space: Space::Phase,
        affine_equivariant: true,
        stepper: Box::new(|sys, a, b, h| rk4_step(sys, Space::Phase, a, b, h)),
    }
}

pub fn implicit_midpoint_phase() -> OneStepMethod {
    OneStepMethod {
        name: "implicit_midpoint_phase",
        order: 2,
        self_adjoint: true,
        space: Space::Phase,
        affine_equivariant: true,
        stepper: Box::new(|sys, a, b, h| implicit_midpoint_step(sys, Space::Phase, a, b, h)),
    }
}

/// Two-stage Gauss collocation on phase space: symplectic, order 4.
pub fn gauss2_phase() -> OneStepMethod {
    OneStepMethod {
        name: "gauss2_phase",
        order: 4,
        self_adjoint: true,
        space: Space::Phase,
        affine_equivariant: true,
        stepper: Box::new(|sys, a, b, h| gauss2_step(sys, Space::Phase, a, b, h)),
    }
}

/// Drive a state through the quadrature nodes `c` of one step of size `h`,
/// taking substeps of size `(c_{i+1} - c_i) h`. Returns one state per node;
/// zero-length substeps are the identity.
pub fn propagate_nodes(
    method: &OneStepMethod,
    sys: &dyn LagrangianSystem,
    a0: &[f64],
    b0: &[f64],
    h: f64,
    c: &[f64],
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    debug_assert!(c.windows(2).all(|w| w[0] <= w[1]));
    let mut states = Vec::with_capacity(c.len());
    states.push((a0.to_vec(), b0.to_vec()));
    for i in 1..c.len() {
        let dt = (c[i] - c[i - 1]) * h;
        let (a, b) = {
            let (pa, pb) = &states[i - 1];
            method.step(sys, pa, pb, dt)?
        };
        states.push((a, b));
    }
    Ok(states)
}
