//! Registry mapping method names to phase-space step maps.
//!
//! Shooting and Galerkin integrators keep warm-start state between steps, so
//! the registry hands out stateful boxed steppers; construct a fresh one per
//! trajectory.

use crate::error::{HarnessError, Result};
use variational::galerkin::{galerkin_step_from, GalerkinConfig};
use variational::numerics::make_rule;
use variational::onestep::{
    explicit_midpoint_phase, gauss2_phase, implicit_midpoint, implicit_midpoint_phase, rk4,
    OneStepMethod,
};
use variational::shooting::{step_hamiltonian, step_lagrangian_from, step_type2, ShootingConfig};
use variational::systems::{inverse_legendre, LagrangianSystem, PhaseState};

pub trait PhaseStepper {
    fn name(&self) -> &str;
    fn step(&mut self, sys: &dyn LagrangianSystem, z: &PhaseState, h: f64) -> Result<PhaseState>;
}

/// Shooting-based variational integrator on the Lagrangian side, warm-started
/// with the previous step's terminal node velocity.
pub struct ShootingStepper {
    pub cfg: ShootingConfig,
    name: String,
    warm: Option<Vec<f64>>,
}

impl ShootingStepper {
    pub fn new(name: impl Into<String>, cfg: ShootingConfig) -> Self {
        ShootingStepper {
            cfg,
            name: name.into(),
            warm: None,
        }
    }
}

impl PhaseStepper for ShootingStepper {
    fn name(&self) -> &str {
        &self.name
    }

    fn step(&mut self, sys: &dyn LagrangianSystem, z: &PhaseState, h: f64) -> Result<PhaseState> {
        let guess = match &self.warm {
            Some(v) => v.clone(),
            None => inverse_legendre(sys, &z.q, &z.p)?.v,
        };
        let (z1, v1) = step_lagrangian_from(&self.cfg, sys, z, h, &guess)?;
        self.warm = Some(v1);
        Ok(z1)
    }
}

pub struct HamiltonianStepper {
    pub cfg: ShootingConfig,
    name: String,
}

impl PhaseStepper for HamiltonianStepper {
    fn name(&self) -> &str {
        &self.name
    }

    fn step(&mut self, sys: &dyn LagrangianSystem, z: &PhaseState, h: f64) -> Result<PhaseState> {
        Ok(step_hamiltonian(&self.cfg, sys, z, h)?)
    }
}

pub struct Type2Stepper {
    pub cfg: ShootingConfig,
    name: String,
}

impl PhaseStepper for Type2Stepper {
    fn name(&self) -> &str {
        &self.name
    }

    fn step(&mut self, sys: &dyn LagrangianSystem, z: &PhaseState, h: f64) -> Result<PhaseState> {
        Ok(step_type2(&self.cfg, sys, z, h)?)
    }
}

pub struct GalerkinStepper {
    pub cfg: GalerkinConfig,
    name: String,
}

impl PhaseStepper for GalerkinStepper {
    fn name(&self) -> &str {
        &self.name
    }

    fn step(&mut self, sys: &dyn LagrangianSystem, z: &PhaseState, h: f64) -> Result<PhaseState> {
        let v0 = inverse_legendre(sys, &z.q, &z.p)?.v;
        let guess: Vec<f64> = z.q.iter().zip(&v0).map(|(q, v)| q + h * v).collect();
        Ok(galerkin_step_from(&self.cfg, sys, z, h, &guess)?)
    }
}

/// A catalog one-step method applied directly on phase space (the
/// non-variational baselines).
pub struct DirectStepper {
    method: OneStepMethod,
    name: String,
}

impl PhaseStepper for DirectStepper {
    fn name(&self) -> &str {
        &self.name
    }

    fn step(&mut self, sys: &dyn LagrangianSystem, z: &PhaseState, h: f64) -> Result<PhaseState> {
        let (q, p) = self.method.step(sys, &z.q, &z.p, h)?;
        Ok(PhaseState::new(q, p))
    }
}

/// Method names the rigid-body comparison owns; they are not phase-space
/// steppers for the scalar systems.
pub const RIGID_BODY_METHODS: [&str; 5] = [
    "lgvi-exp",
    "lgvi-cayley",
    "baseline-rk-explicit-midpoint",
    "baseline-srk-implicit-midpoint",
    "baseline-lgm-crouch-grossman",
];

pub fn phase_method_names() -> Vec<&'static str> {
    vec![
        "svi-mid-trap",
        "svi-rk4-simpson",
        "svi-rk4-em",
        "svi-ham-mid",
        "svi-type2",
        "galerkin-s1-trap",
        "galerkin-s2-simpson",
        "baseline-rk-explicit-midpoint",
        "baseline-srk-implicit-midpoint",
        "baseline-srk4-gauss2",
    ]
}

fn shooting_cfg(method: OneStepMethod, rule: &str, tol: Option<f64>) -> Result<ShootingConfig> {
    let mut cfg = ShootingConfig::new(method, make_rule(rule)?);
    if let Some(t) = tol {
        cfg.outer_cfg.tol = t;
    }
    Ok(cfg)
}

fn galerkin_cfg(s: usize, rule: &str, tol: Option<f64>) -> Result<GalerkinConfig> {
    let mut cfg = GalerkinConfig::new(s, make_rule(rule)?);
    if let Some(t) = tol {
        cfg.newton.tol = t;
    }
    Ok(cfg)
}

/// Construct a fresh stepper for a scalar-system experiment. `tol`, when
/// given, overrides the outer Newton tolerance.
pub fn make_stepper(name: &str, tol: Option<f64>) -> Result<Box<dyn PhaseStepper>> {
    let stepper: Box<dyn PhaseStepper> = match name {
        "svi-mid-trap" => Box::new(ShootingStepper::new(
            name,
            shooting_cfg(implicit_midpoint(), "trapezoid", tol)?,
        )),
        "svi-rk4-simpson" => Box::new(ShootingStepper::new(
            name,
            shooting_cfg(rk4(), "simpson", tol)?,
        )),
        "svi-rk4-em" => Box::new(ShootingStepper::new(
            name,
            shooting_cfg(rk4(), "euler_maclaurin2", tol)?,
        )),
        "svi-ham-mid" => Box::new(HamiltonianStepper {
            cfg: shooting_cfg(implicit_midpoint_phase(), "trapezoid", tol)?,
            name: name.to_string(),
        }),
        "svi-type2" => Box::new(Type2Stepper {
            cfg: shooting_cfg(implicit_midpoint_phase(), "trapezoid", tol)?,
            name: name.to_string(),
        }),
        "galerkin-s1-trap" => Box::new(GalerkinStepper {
            cfg: galerkin_cfg(1, "trapezoid", tol)?,
            name: name.to_string(),
        }),
        "galerkin-s2-simpson" => Box::new(GalerkinStepper {
            cfg: galerkin_cfg(2, "simpson", tol)?,
            name: name.to_string(),
        }),
        "baseline-rk-explicit-midpoint" => Box::new(DirectStepper {
            method: explicit_midpoint_phase(),
            name: name.to_string(),
        }),
        "baseline-srk-implicit-midpoint" => Box::new(DirectStepper {
            method: implicit_midpoint_phase(),
            name: name.to_string(),
        }),
        "baseline-srk4-gauss2" => Box::new(DirectStepper {
            method: gauss2_phase(),
            name: name.to_string(),
        }),
        other if RIGID_BODY_METHODS.contains(&other) => {
            return Err(HarnessError::invalid(format!(
                "method `{other}` runs under the `rigidbody` subcommand"
            )));
        }
        other => {
            return Err(HarnessError::invalid(format!(
                "unknown method `{other}`; known: {}",
                phase_method_names().join(", ")
            )));
        }
    };
    Ok(stepper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use variational::systems::builtin_sho;

    #[test]
    fn registry_builds_every_phase_method() {
        let sys = builtin_sho();
        for name in phase_method_names() {
            let mut stepper = make_stepper(name, None).unwrap();
            let z = PhaseState::new(vec![1.0], vec![0.0]);
            let z1 = stepper.step(&sys, &z, 0.1).unwrap();
            let err = ((z1.q[0] - 0.1f64.cos()).powi(2) + (z1.p[0] + 0.1f64.sin()).powi(2)).sqrt();
            assert!(err < 1e-2, "{name}: one step error {err}");
        }
    }

    #[test]
    fn rigid_body_only_methods_are_rejected_here() {
        // The rk/srk baselines double as scalar-system methods; only the
        // Lie-group-specific names are rigidbody-only.
        for name in ["lgvi-exp", "lgvi-cayley", "baseline-lgm-crouch-grossman"] {
            match make_stepper(name, None) {
                Err(e) => assert_eq!(e.exit_code(), 3, "{name}"),
                Ok(_) => panic!("{name} should not build as a phase stepper"),
            }
        }
        assert!(make_stepper("midnight-rule", None).is_err());
    }
}
