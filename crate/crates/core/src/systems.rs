//! Mechanical models: a Lagrangian with analytic first derivatives and the
//! second-order Euler-Lagrange acceleration, optionally paired with the
//! Hamiltonian side, plus the builtin example systems.

use crate::error::Result;
use crate::linalg;
use crate::numerics::{newton_solve, NewtonConfig};

/// Position/velocity pair on the tangent bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentState {
    pub q: Vec<f64>,
    pub v: Vec<f64>,
}

impl TangentState {
    pub fn new(q: Vec<f64>, v: Vec<f64>) -> Self {
        assert_eq!(q.len(), v.len());
        assert!(linalg::all_finite(&q) && linalg::all_finite(&v));
        TangentState { q, v }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

/// Position/momentum pair on the cotangent bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseState {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Self {
        assert_eq!(q.len(), p.len());
        assert!(linalg::all_finite(&q) && linalg::all_finite(&p));
        PhaseState { q, p }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
}

/// Infinitesimal symmetry: maps a configuration to the generator vector field
/// evaluated there.
pub struct SymmetryGenerator {
    pub name: String,
    action: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl SymmetryGenerator {
    pub fn new(
        name: impl Into<String>,
        action: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        SymmetryGenerator {
            name: name.into(),
            action: Box::new(action),
        }
    }

    pub fn eval(&self, q: &[f64]) -> Vec<f64> {
        (self.action)(q)
    }
}

/// The model contract. All callables take raw slices of length `dim()`.
///
/// `accel` is the Euler-Lagrange vector field in second-order form, i.e. the
/// acceleration solving d/dt (dL/dv) = dL/dq along (q, v). The Hamiltonian
/// side is optional; systems that provide it return `Some` from all three of
/// `hamiltonian`, `dh_dq`, `dh_dp`.
pub trait LagrangianSystem: Send + Sync {
    fn dim(&self) -> usize;
    fn name(&self) -> &'static str;

    fn lagrangian(&self, q: &[f64], v: &[f64]) -> f64;
    fn dl_dq(&self, q: &[f64], v: &[f64]) -> Vec<f64>;
    fn dl_dv(&self, q: &[f64], v: &[f64]) -> Vec<f64>;
    fn accel(&self, q: &[f64], v: &[f64]) -> Vec<f64>;

    /// Total energy as a function of (q, v): `dL/dv . v - L`.
    fn energy(&self, q: &[f64], v: &[f64]) -> f64 {
        linalg::dot(&self.dl_dv(q, v), v) - self.lagrangian(q, v)
    }

    fn hamiltonian(&self, _q: &[f64], _p: &[f64]) -> Option<f64> {
        None
    }

    fn dh_dq(&self, _q: &[f64], _p: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn dh_dp(&self, _q: &[f64], _p: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn has_hamiltonian(&self) -> bool {
        false
    }

    fn symmetry_generators(&self) -> Vec<SymmetryGenerator> {
        Vec::new()
    }
}

/// Continuous Legendre transform: `p = dL/dv(q, v)`.
pub fn legendre(sys: &dyn LagrangianSystem, q: &[f64], v: &[f64]) -> PhaseState {
    PhaseState::new(q.to_vec(), sys.dl_dv(q, v))
}

/// Inverse Legendre transform: solve `dL/dv(q, v) = p` for `v` by Newton,
/// starting from `v = p` (exact for unit-mass quadratic kinetic energies).
pub fn inverse_legendre(sys: &dyn LagrangianSystem, q: &[f64], p: &[f64]) -> Result<TangentState> {
    let cfg = NewtonConfig::default();
    let residual = |v: &[f64]| linalg::sub(&sys.dl_dv(q, v), p);
    let v = newton_solve(residual, p, &cfg, None)?;
    Ok(TangentState::new(q.to_vec(), v))
}

/// Planar pendulum, unit mass and length: `L = v^2/2 + cos q`.
pub struct Pendulum;

impl LagrangianSystem for Pendulum {
    fn dim(&self) -> usize {
        1
    }

    fn name(&self) -> &'static str {
        "pendulum"
    }

    fn lagrangian(&self, q: &[f64], v: &[f64]) -> f64 {
        0.5 * v[0] * v[0] + q[0].cos()
    }

    fn dl_dq(&self, q: &[f64], _v: &[f64]) -> Vec<f64> {
        vec![-q[0].sin()]
    }

    fn dl_dv(&self, _q: &[f64], v: &[f64]) -> Vec<f64> {
        vec![v[0]]
    }

    fn accel(&self, q: &[f64], _v: &[f64]) -> Vec<f64> {
        vec![-q[0].sin()]
    }

    fn hamiltonian(&self, q: &[f64], p: &[f64]) -> Option<f64> {
        Some(0.5 * p[0] * p[0] - q[0].cos())
    }

    fn dh_dq(&self, q: &[f64], _p: &[f64]) -> Option<Vec<f64>> {
        Some(vec![q[0].sin()])
    }

    fn dh_dp(&self, _q: &[f64], p: &[f64]) -> Option<Vec<f64>> {
        Some(vec![p[0]])
    }

    fn has_hamiltonian(&self) -> bool {
        true
    }
}

/// Simple harmonic oscillator: `L = v^2/2 - q^2/2`.
pub struct Sho;

impl LagrangianSystem for Sho {
    fn dim(&self) -> usize {
        1
    }

    fn name(&self) -> &'static str {
        "sho"
    }

    fn lagrangian(&self, q: &[f64], v: &[f64]) -> f64 {
        0.5 * (v[0] * v[0] - q[0] * q[0])
    }

    fn dl_dq(&self, q: &[f64], _v: &[f64]) -> Vec<f64> {
        vec![-q[0]]
    }

    fn dl_dv(&self, _q: &[f64], v: &[f64]) -> Vec<f64> {
        vec![v[0]]
    }

    fn accel(&self, q: &[f64], _v: &[f64]) -> Vec<f64> {
        vec![-q[0]]
    }

    fn hamiltonian(&self, q: &[f64], p: &[f64]) -> Option<f64> {
        Some(0.5 * (p[0] * p[0] + q[0] * q[0]))
    }

    fn dh_dq(&self, q: &[f64], _p: &[f64]) -> Option<Vec<f64>> {
        Some(vec![q[0]])
    }

    fn dh_dp(&self, _q: &[f64], p: &[f64]) -> Option<Vec<f64>> {
        Some(vec![p[0]])
    }

    fn has_hamiltonian(&self) -> bool {
        true
    }
}

/// Free particle in `m` dimensions: `L = |v|^2/2`, straight-line flow. Used
/// as the exactness oracle; its exact discrete Lagrangian is
/// `|q1 - q0|^2 / (2h)`.
pub struct FreeParticle {
    dim: usize,
}

impl FreeParticle {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1);
        FreeParticle { dim }
    }
}

impl LagrangianSystem for FreeParticle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &'static str {
        "free_particle"
    }

    fn lagrangian(&self, _q: &[f64], v: &[f64]) -> f64 {
        0.5 * linalg::dot(v, v)
    }

    fn dl_dq(&self, q: &[f64], _v: &[f64]) -> Vec<f64> {
        vec![0.0; q.len()]
    }

    fn dl_dv(&self, _q: &[f64], v: &[f64]) -> Vec<f64> {
        v.to_vec()
    }

    fn accel(&self, q: &[f64], _v: &[f64]) -> Vec<f64> {
        vec![0.0; q.len()]
    }

    fn hamiltonian(&self, _q: &[f64], p: &[f64]) -> Option<f64> {
        Some(0.5 * linalg::dot(p, p))
    }

    fn dh_dq(&self, q: &[f64], _p: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; q.len()])
    }

    fn dh_dp(&self, _q: &[f64], p: &[f64]) -> Option<Vec<f64>> {
        Some(p.to_vec())
    }

    fn has_hamiltonian(&self) -> bool {
        true
    }

    fn symmetry_generators(&self) -> Vec<SymmetryGenerator> {
        (0..self.dim)
            .map(|axis| {
                let dim = self.dim;
                SymmetryGenerator::new(format!("translate_e{axis}"), move |_q: &[f64]| {
                    let mut g = vec![0.0; dim];
                    g[axis] = 1.0;
                    g
                })
            })
            .collect()
    }
}

/// Two unit-mass particles on a line joined by an anharmonic spring:
/// `L = (v1^2 + v2^2)/2 - V(q1 - q2)` with `V(r) = r^2/2 + r^4/4`.
/// Invariant under simultaneous translation, so total momentum is the
/// Noether quantity.
pub struct TwoParticle;

impl TwoParticle {
    fn potential_deriv(r: f64) -> f64 {
        r + r * r * r
    }
}

impl LagrangianSystem for TwoParticle {
    fn dim(&self) -> usize {
        2
    }

    fn name(&self) -> &'static str {
        "two_particle"
    }

    fn lagrangian(&self, q: &[f64], v: &[f64]) -> f64 {
        let r = q[0] - q[1];
        0.5 * (v[0] * v[0] + v[1] * v[1]) - (0.5 * r * r + 0.25 * r * r * r * r)
    }

    fn dl_dq(&self, q: &[f64], _v: &[f64]) -> Vec<f64> {
        let dv = Self::potential_deriv(q[0] - q[1]);
        vec![-dv, dv]
    }

    fn dl_dv(&self, _q: &[f64], v: &[f64]) -> Vec<f64> {
        v.to_vec()
    }

    fn accel(&self, q: &[f64], _v: &[f64]) -> Vec<f64> {
        let dv = Self::potential_deriv(q[0] - q[1]);
        vec![-dv, dv]
    }

    fn hamiltonian(&self, q: &[f64], p: &[f64]) -> Option<f64> {
        let r = q[0] - q[1];
        Some(0.5 * (p[0] * p[0] + p[1] * p[1]) + 0.5 * r * r + 0.25 * r * r * r * r)
    }

    fn dh_dq(&self, q: &[f64], _p: &[f64]) -> Option<Vec<f64>> {
        let dv = Self::potential_deriv(q[0] - q[1]);
        Some(vec![dv, -dv])
    }

    fn dh_dp(&self, _q: &[f64], p: &[f64]) -> Option<Vec<f64>> {
        Some(p.to_vec())
    }

    fn has_hamiltonian(&self) -> bool {
        true
    }

    fn symmetry_generators(&self) -> Vec<SymmetryGenerator> {
        vec![SymmetryGenerator::new("translate_both", |_q: &[f64]| {
            vec![1.0, 1.0]
        })]
    }
}

pub fn builtin_pendulum() -> Pendulum {
    Pendulum
}

pub fn builtin_sho() -> Sho {
    Sho
}

pub fn builtin_free_particle(dim: usize) -> FreeParticle {
    FreeParticle::new(dim)
}

pub fn builtin_two_particle() -> TwoParticle {
    TwoParticle
}

/// Look up a builtin by its CLI name.
pub fn builtin_by_name(name: &str) -> Option<Box<dyn LagrangianSystem>> {
    match name {
        "pendulum" => Some(Box::new(builtin_pendulum())),
        "sho" => Some(Box::new(builtin_sho())),
        "free_particle" => Some(Box::new(builtin_free_particle(1))),
        "two_particle" => Some(Box::new(builtin_two_particle())),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::fd_grad;
    use crate::rng::SplitMix64;
    use std::f64::consts::PI;

    fn builtins() -> Vec<Box<dyn LagrangianSystem>> {
        vec![
            Box::new(builtin_pendulum()),
            Box::new(builtin_sho()),
            Box::new(builtin_free_particle(3)),
            Box::new(builtin_two_particle()),
        ]
    }

    #[test]
    fn pendulum_values() {
        let p = builtin_pendulum();
        assert!((p.lagrangian(&[0.0], &[0.0]) - 1.0).abs() < 1e-15);
        assert!(p.accel(&[PI], &[0.3])[0].abs() < 1e-15);
        assert!((p.hamiltonian(&[0.0], &[0.0]).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn sho_values() {
        let s = builtin_sho();
        assert_eq!(s.lagrangian(&[1.0], &[1.0]), 0.0);
        assert_eq!(s.accel(&[0.0], &[2.0])[0], 0.0);
        // Analytic flow from (1, 0) keeps H = 1/2.
        for t in [0.3f64, 1.0, 2.5] {
            let q = t.cos();
            let p = -t.sin();
            assert!((s.hamiltonian(&[q], &[p]).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn free_particle_values() {
        let f = builtin_free_particle(3);
        assert!(f
            .accel(&[0.3, -0.4, 2.0], &[1.0, 1.0, 1.0])
            .iter()
            .all(|a| *a == 0.0));
        let gens = f.symmetry_generators();
        assert_eq!(gens.len(), 3);
        for (axis, gen) in gens.iter().enumerate() {
            let g = gen.eval(&[0.1, 0.2, 0.3]);
            for (j, val) in g.iter().enumerate() {
                assert_eq!(*val, if j == axis { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = SplitMix64::new(20);
        for sys in builtins() {
            let m = sys.dim();
            for _ in 0..100 {
                let q = rng.uniform_vec(m, -1.5, 1.5);
                let v = rng.uniform_vec(m, -1.5, 1.5);
                let gq = fd_grad(|qq| sys.lagrangian(qq, &v), &q, 1e-6);
                let gv = fd_grad(|vv| sys.lagrangian(&q, vv), &v, 1e-6);
                let dq = sys.dl_dq(&q, &v);
                let dv = sys.dl_dv(&q, &v);
                for j in 0..m {
                    assert!(
                        (gq[j] - dq[j]).abs() < 1e-6 * (1.0 + dq[j].abs()),
                        "{}",
                        sys.name()
                    );
                    assert!(
                        (gv[j] - dv[j]).abs() < 1e-6 * (1.0 + dv[j].abs()),
                        "{}",
                        sys.name()
                    );
                }
            }
        }
    }

    #[test]
    fn accel_is_consistent_with_lagrangian() {
        // d/dt (dL/dv) - dL/dq = 0 along (q, v, accel), checked with a
        // central difference in time.
        let mut rng = SplitMix64::new(21);
        let delta = 1e-6;
        for sys in builtins() {
            let m = sys.dim();
            for _ in 0..100 {
                let q = rng.uniform_vec(m, -1.2, 1.2);
                let v = rng.uniform_vec(m, -1.2, 1.2);
                let a = sys.accel(&q, &v);
                let qp = linalg::axpy(&q, delta, &v);
                let vp = linalg::axpy(&v, delta, &a);
                let qm = linalg::axpy(&q, -delta, &v);
                let vm = linalg::axpy(&v, -delta, &a);
                let dldv_dot: Vec<f64> = sys
                    .dl_dv(&qp, &vp)
                    .iter()
                    .zip(sys.dl_dv(&qm, &vm))
                    .map(|(p, mn)| (p - mn) / (2.0 * delta))
                    .collect();
                let dldq = sys.dl_dq(&q, &v);
                for j in 0..m {
                    assert!(
                        (dldv_dot[j] - dldq[j]).abs() < 1e-6,
                        "{} component {j}: {} vs {}",
                        sys.name(),
                        dldv_dot[j],
                        dldq[j]
                    );
                }
            }
        }
    }

    #[test]
    fn hamiltonian_matches_energy_through_legendre() {
        let mut rng = SplitMix64::new(22);
        for sys in builtins() {
            let m = sys.dim();
            for _ in 0..50 {
                let q = rng.uniform_vec(m, -1.0, 1.0);
                let v = rng.uniform_vec(m, -1.0, 1.0);
                let z = legendre(sys.as_ref(), &q, &v);
                let h = sys.hamiltonian(&z.q, &z.p).unwrap();
                assert!((h - sys.energy(&q, &v)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn legendre_round_trip() {
        let mut rng = SplitMix64::new(23);
        for sys in builtins() {
            let m = sys.dim();
            for _ in 0..50 {
                let q = rng.uniform_vec(m, -1.0, 1.0);
                let v = rng.uniform_vec(m, -1.0, 1.0);
                let z = legendre(sys.as_ref(), &q, &v);
                let back = inverse_legendre(sys.as_ref(), &z.q, &z.p).unwrap();
                for j in 0..m {
                    assert!((back.v[j] - v[j]).abs() < 1e-10);
                }
            }
        }
        // Unit-mass systems have p = v.
        let s = builtin_sho();
        let z = legendre(&s, &[0.3], &[0.7]);
        assert_eq!(z.p, vec![0.7]);
        let p = builtin_pendulum();
        let z = legendre(&p, &[1.1], &[-0.4]);
        assert_eq!(z.p, vec![-0.4]);
    }

    #[test]
    fn builtin_lookup_by_name() {
        for name in ["pendulum", "sho", "free_particle", "two_particle"] {
            assert!(builtin_by_name(name).is_some());
        }
        assert!(builtin_by_name("rigid_rotor").is_none());
    }
}
