//! Quadrature over one step, Lagrange polynomial bases, Newton root finding,
//! and finite differences.

use crate::error::{Error, Result};
use crate::linalg;

/// Default finite-difference step for two-point central differences,
/// `eps^(1/3)`; scaled by `max(1, |x|)` componentwise at use sites.
pub fn default_fd_step() -> f64 {
    f64::EPSILON.cbrt()
}

/// Default step for the four-point central stencil, `eps^(1/5)`.
pub fn quartic_fd_step() -> f64 {
    f64::EPSILON.powf(0.2)
}

/// Quadrature rule on the reference interval [0, 1], applied to [0, h] by
/// `integrate`. Nodes always include both endpoints; their weights may be
/// zero. `deriv_weights = (w0, w1)` adds `h^2 (w0 f'(0) + w1 f'(h))`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub name: &'static str,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: u32,
    pub symmetric: bool,
    pub deriv_weights: Option<(f64, f64)>,
}

impl QuadratureRule {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Node/weight symmetry predicate: c_i + c_{n-i} = 1 and b_i = b_{n-i},
    /// with antisymmetric endpoint-derivative weights when present.
    pub fn is_symmetric(&self) -> bool {
        let n = self.nodes.len() - 1;
        let nodes_ok = (0..=n).all(|i| (self.nodes[i] + self.nodes[n - i] - 1.0).abs() < 1e-14);
        let weights_ok = (0..=n).all(|i| (self.weights[i] - self.weights[n - i]).abs() < 1e-14);
        let deriv_ok = match self.deriv_weights {
            Some((w0, w1)) => (w0 + w1).abs() < 1e-14,
            None => true,
        };
        nodes_ok && weights_ok && deriv_ok
    }
}

/// Build one of the catalog rules by name.
pub fn make_rule(name: &str) -> Result<QuadratureRule> {
    let rule = match name {
        "trapezoid" => QuadratureRule {
            name: "trapezoid",
            nodes: vec![0.0, 1.0],
            weights: vec![0.5, 0.5],
            order: 2,
            symmetric: true,
            deriv_weights: None,
        },
        "simpson" => QuadratureRule {
            name: "simpson",
            nodes: vec![0.0, 0.5, 1.0],
            weights: vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
            order: 4,
            symmetric: true,
            deriv_weights: None,
        },
        "lobatto4" => {
            // Nodes of the 4-point Gauss-Lobatto rule mapped to [0, 1].
            let d = 1.0 / (2.0 * 5.0f64.sqrt());
            QuadratureRule {
                name: "lobatto4",
                nodes: vec![0.0, 0.5 - d, 0.5 + d, 1.0],
                weights: vec![1.0 / 12.0, 5.0 / 12.0, 5.0 / 12.0, 1.0 / 12.0],
                order: 6,
                symmetric: true,
                deriv_weights: None,
            }
        }
        "gauss2_padded" => {
            // Interior 2-point Gauss nodes plus zero-weight endpoints so the
            // node set still brackets the step.
            let d = 3.0f64.sqrt() / 6.0;
            QuadratureRule {
                name: "gauss2_padded",
                nodes: vec![0.0, 0.5 - d, 0.5 + d, 1.0],
                weights: vec![0.0, 0.5, 0.5, 0.0],
                order: 4,
                symmetric: true,
                deriv_weights: None,
            }
        }
        "gauss3_padded" => {
            let d = 15.0f64.sqrt() / 10.0;
            QuadratureRule {
                name: "gauss3_padded",
                nodes: vec![0.0, 0.5 - d, 0.5, 0.5 + d, 1.0],
                weights: vec![0.0, 5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0, 0.0],
                order: 6,
                symmetric: true,
                deriv_weights: None,
            }
        }
        "euler_maclaurin2" => QuadratureRule {
            name: "euler_maclaurin2",
            nodes: vec![0.0, 1.0],
            weights: vec![0.5, 0.5],
            order: 4,
            symmetric: true,
            deriv_weights: Some((1.0 / 12.0, -1.0 / 12.0)),
        },
        other => {
            return Err(Error::UnknownRule {
                name: other.to_string(),
            })
        }
    };
    debug_assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    debug_assert_eq!(rule.symmetric, rule.is_symmetric());
    Ok(rule)
}

/// Apply a rule to samples taken at the nodes of [0, h]:
/// `h * sum_i b_i f(c_i h) + h^2 (w0 f'(0) + w1 f'(h))`.
///
/// `deriv_samples` is the endpoint pair `(f'(0), f'(h))`, required exactly
/// when the rule carries derivative weights.
pub fn integrate(
    rule: &QuadratureRule,
    h: f64,
    samples: &[f64],
    deriv_samples: Option<(f64, f64)>,
) -> Result<f64> {
    assert_eq!(
        samples.len(),
        rule.node_count(),
        "one sample per quadrature node"
    );
    let mut value = h * linalg::dot(&rule.weights, samples);
    if let Some((w0, w1)) = rule.deriv_weights {
        let (d0, d1) = deriv_samples.ok_or(Error::MissingDerivatives)?;
        value += h * h * (w0 * d0 + w1 * d1);
    }
    Ok(value)
}

/// Cardinal Lagrange polynomial `l_nu` for control times `d`, evaluated at
/// `tau`. Satisfies `l_nu(d_mu) = delta_{nu mu}`.
pub fn lagrange_basis(d: &[f64], nu: usize, tau: f64) -> f64 {
    debug_assert!(nu < d.len());
    let mut p = 1.0;
    for (j, &dj) in d.iter().enumerate() {
        if j != nu {
            p *= (tau - dj) / (d[nu] - dj);
        }
    }
    p
}

/// Exact derivative of the cardinal Lagrange polynomial at `tau`.
pub fn lagrange_basis_deriv(d: &[f64], nu: usize, tau: f64) -> f64 {
    debug_assert!(nu < d.len());
    let mut sum = 0.0;
    for (k, &dk) in d.iter().enumerate() {
        if k == nu {
            continue;
        }
        let mut p = 1.0 / (d[nu] - dk);
        for (j, &dj) in d.iter().enumerate() {
            if j != nu && j != k {
                p *= (tau - dj) / (d[nu] - dj);
            }
        }
        sum += p;
    }
    sum
}

/// Newton iteration controls. `fd_step` feeds the finite-difference Jacobian
/// and is scaled by `max(1, |x|)` inside the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-12,
            max_iter: 50,
            fd_step: default_fd_step(),
        }
    }
}

impl NewtonConfig {
    pub fn with_tol(tol: f64) -> Self {
        NewtonConfig {
            tol,
            ..Default::default()
        }
    }
}

/// Jacobian of `residual` at `x` by central differences, row-major.
fn fd_jacobian<F>(residual: &F, x: &[f64], r_dim: usize, step: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let scale = step * linalg::norm(x).max(1.0);
    let mut jac = vec![0.0; r_dim * n];
    let mut xp = x.to_vec();
    for j in 0..n {
        let x0 = xp[j];
        xp[j] = x0 + scale;
        let rp = residual(&xp);
        xp[j] = x0 - scale;
        let rm = residual(&xp);
        xp[j] = x0;
        for i in 0..r_dim {
            jac[i * n + j] = (rp[i] - rm[i]) / (2.0 * scale);
        }
    }
    jac
}

/// Solve `residual(x) = 0` by Newton's method.
///
/// The Jacobian comes from `jac` when supplied, otherwise from central finite
/// differences with `cfg.fd_step`. Returns the first iterate whose residual
/// norm is below `cfg.tol`; the iterate count in `NoConvergence` is the
/// number of Newton steps taken.
pub fn newton_solve<F>(
    residual: F,
    x0: &[f64],
    cfg: &NewtonConfig,
    jac: Option<&dyn Fn(&[f64]) -> Vec<f64>>,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    newton_solve_counted(residual, x0, cfg, jac).map(|(x, _)| x)
}

/// `newton_solve` that also reports the number of Newton steps taken.
pub fn newton_solve_counted<F>(
    residual: F,
    x0: &[f64],
    cfg: &NewtonConfig,
    jac: Option<&dyn Fn(&[f64]) -> Vec<f64>>,
) -> Result<(Vec<f64>, usize)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    assert!(cfg.tol > 0.0 && cfg.max_iter >= 1);
    let mut x = x0.to_vec();
    let mut r = residual(&x);
    assert_eq!(
        r.len(),
        x.len(),
        "residual dimension must match the unknown"
    );
    for iter in 0..=cfg.max_iter {
        let rnorm = linalg::norm(&r);
        if rnorm < cfg.tol {
            return Ok((x, iter));
        }
        if iter == cfg.max_iter || !rnorm.is_finite() {
            return Err(Error::NoConvergence {
                iterations: iter,
                residual: rnorm,
            });
        }
        let mut j = match jac {
            Some(jf) => jf(&x),
            None => fd_jacobian(&residual, &x, r.len(), cfg.fd_step),
        };
        let mut rhs = linalg::scale(&r, -1.0);
        let dx = linalg::solve_dense(&mut j, &mut rhs)?;
        x = linalg::add(&x, &dx);
        r = residual(&x);
    }
    unreachable!()
}

/// Newton driver for the inner solves of discrete Lagrangians: converge to
/// `cfg.tol`, then keep stepping while the residual still shrinks by 4x, up
/// to three extra iterations. Outer finite differences divide these
/// residuals by steps of ~1e-3, so stopping just under `tol` is not enough.
pub(crate) fn newton_refine<F>(
    residual: F,
    x0: &[f64],
    cfg: &NewtonConfig,
) -> Result<(Vec<f64>, usize)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = x0.to_vec();
    let mut r = residual(&x);
    let mut rnorm = linalg::norm(&r);
    let mut iters = 0;
    let mut converged = false;
    let mut extra = 0;
    loop {
        if rnorm < cfg.tol {
            converged = true;
        }
        let floor = 1e-2 * cfg.tol;
        if converged && (rnorm < floor || extra >= 3) {
            return Ok((x, iters));
        }
        if iters >= cfg.max_iter || !rnorm.is_finite() {
            if converged {
                return Ok((x, iters));
            }
            return Err(Error::NoConvergence {
                iterations: iters,
                residual: rnorm,
            });
        }
        let mut j = fd_jacobian(&residual, &x, r.len(), cfg.fd_step);
        let mut rhs = linalg::scale(&r, -1.0);
        let dx = match linalg::solve_dense(&mut j, &mut rhs) {
            Ok(dx) => dx,
            Err(e) => {
                if converged {
                    return Ok((x, iters));
                }
                return Err(e);
            }
        };
        let xn = linalg::add(&x, &dx);
        let rn = residual(&xn);
        let rn_norm = linalg::norm(&rn);
        if converged {
            extra += 1;
            if rn_norm >= 0.25 * rnorm {
                // No longer improving; keep the better iterate and stop.
                if rn_norm < rnorm {
                    return Ok((xn, iters + 1));
                }
                return Ok((x, iters));
            }
        }
        x = xn;
        r = rn;
        rnorm = rn_norm;
        iters += 1;
    }
}

/// Gradient of a scalar function by two-point central differences.
pub fn fd_grad<F>(f: F, x: &[f64], step: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    assert!(step > 0.0);
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let x0 = xp[j];
        xp[j] = x0 + step;
        let fp = f(&xp);
        xp[j] = x0 - step;
        let fm = f(&xp);
        xp[j] = x0;
        g[j] = (fp - fm) / (2.0 * step);
    }
    g
}

/// Fourth-order directional derivative of a scalar function of one real:
/// `(f(-2s) - 8 f(-s) + 8 f(s) - f(2s)) / (12 s)` about `t = 0`.
pub fn fd_derivative4<F>(f: F, step: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    assert!(step > 0.0);
    (f(-2.0 * step) - 8.0 * f(-step) + 8.0 * f(step) - f(2.0 * step)) / (12.0 * step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_rules_are_consistent() {
        for name in [
            "trapezoid",
            "simpson",
            "lobatto4",
            "gauss2_padded",
            "gauss3_padded",
            "euler_maclaurin2",
        ] {
            let rule = make_rule(name).unwrap();
            assert!(
                (rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14,
                "{name}"
            );
            assert_eq!(rule.nodes[0], 0.0, "{name}");
            assert_eq!(*rule.nodes.last().unwrap(), 1.0, "{name}");
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]), "{name}");
            assert_eq!(rule.symmetric, rule.is_symmetric(), "{name}");
        }
        assert!(matches!(
            make_rule("midknight"),
            Err(Error::UnknownRule { .. })
        ));
    }

    #[test]
    fn gauss2_padded_has_expected_nodes() {
        let rule = make_rule("gauss2_padded").unwrap();
        let d = 3.0f64.sqrt() / 6.0;
        assert!((rule.nodes[1] - (0.5 - d)).abs() < 1e-15);
        assert!((rule.nodes[2] - (0.5 + d)).abs() < 1e-15);
        assert_eq!(rule.weights, vec![0.0, 0.5, 0.5, 0.0]);
    }

    fn integrate_monomial(rule: &QuadratureRule, k: u32, h: f64) -> f64 {
        let samples: Vec<f64> = rule.nodes.iter().map(|&c| (c * h).powi(k as i32)).collect();
        let derivs = rule.deriv_weights.map(|_| {
            let dk = |t: f64| {
                if k == 0 {
                    0.0
                } else {
                    k as f64 * t.powi(k as i32 - 1)
                }
            };
            (dk(0.0), dk(h))
        });
        integrate(rule, h, &samples, derivs).unwrap()
    }

    #[test]
    fn rules_are_exact_below_their_order() {
        for name in [
            "trapezoid",
            "simpson",
            "lobatto4",
            "gauss2_padded",
            "gauss3_padded",
            "euler_maclaurin2",
        ] {
            let rule = make_rule(name).unwrap();
            for h in [0.3f64, 1.0, 2.0] {
                for k in 0..rule.order {
                    let exact = h.powi(k as i32 + 1) / (k as f64 + 1.0);
                    let got = integrate_monomial(&rule, k, h);
                    assert!(
                        (got - exact).abs() <= 1e-13 * exact.abs().max(1.0),
                        "{name} k={k} h={h}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let rule = make_rule("simpson").unwrap();
        let samples: Vec<f64> = rule.nodes.iter().map(|&c| c * c * c).collect();
        let v = integrate(&rule, 1.0, &samples, None).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn euler_maclaurin_corrects_trapezoid_on_squares() {
        let rule = make_rule("euler_maclaurin2").unwrap();
        let samples: Vec<f64> = rule.nodes.iter().map(|&c| c * c).collect();
        let v = integrate(&rule, 1.0, &samples, Some((0.0, 2.0))).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            integrate(&rule, 1.0, &samples, None),
            Err(Error::MissingDerivatives)
        );
    }

    #[test]
    fn integrate_basics() {
        let rule = make_rule("trapezoid").unwrap();
        assert!((integrate(&rule, 0.3, &[1.0, 1.0], None).unwrap() - 0.3).abs() < 1e-16);
        assert_eq!(integrate(&rule, 0.3, &[0.0, 0.0], None).unwrap(), 0.0);
        // f(t) = t integrates to h^2/2 under every catalog rule.
        for name in [
            "trapezoid",
            "simpson",
            "lobatto4",
            "gauss2_padded",
            "gauss3_padded",
        ] {
            let rule = make_rule(name).unwrap();
            let h = 0.7;
            let samples: Vec<f64> = rule.nodes.iter().map(|&c| c * h).collect();
            let v = integrate(&rule, h, &samples, None).unwrap();
            assert!((v - h * h / 2.0).abs() < 1e-15, "{name}");
        }
    }

    #[test]
    fn lagrange_cardinal_property() {
        let d = [0.0, 0.5, 1.0];
        for nu in 0..3 {
            for mu in 0..3 {
                let expect = if nu == mu { 1.0 } else { 0.0 };
                assert!((lagrange_basis(&d, nu, d[mu]) - expect).abs() < 1e-14);
            }
        }
        let linear = [0.0, 1.0];
        assert!((lagrange_basis(&linear, 0, 0.25) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn lagrange_partition_of_unity() {
        let mut rng = crate::rng::SplitMix64::new(13);
        let d = [0.0, 0.3, 0.7, 1.0];
        for _ in 0..50 {
            let tau = rng.uniform(0.0, 1.0);
            let sum: f64 = (0..4).map(|nu| lagrange_basis(&d, nu, tau)).sum();
            assert!((sum - 1.0).abs() < 1e-13);
            let dsum: f64 = (0..4).map(|nu| lagrange_basis_deriv(&d, nu, tau)).sum();
            assert!(dsum.abs() < 1e-12);
        }
    }

    #[test]
    fn lagrange_derivative_matches_finite_differences() {
        let d = [0.0, 0.25, 0.6, 1.0];
        for nu in 0..4 {
            for tau in [0.1, 0.37, 0.81] {
                let fd = (lagrange_basis(&d, nu, tau + 1e-6) - lagrange_basis(&d, nu, tau - 1e-6))
                    / 2e-6;
                assert!((lagrange_basis_deriv(&d, nu, tau) - fd).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn newton_scalar_square_root() {
        let cfg = NewtonConfig::default();
        let x = newton_solve(|x| vec![x[0] * x[0] - 4.0], &[3.0], &cfg, None).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn newton_linear_converges_in_one_iteration() {
        let cfg = NewtonConfig::default();
        // residual = A x - b with A = [[2,1],[1,3]], b = (3,5).
        let residual = |x: &[f64]| vec![2.0 * x[0] + x[1] - 3.0, x[0] + 3.0 * x[1] - 5.0];
        let jac = |_: &[f64]| vec![2.0, 1.0, 1.0, 3.0];
        let (x, iters) = newton_solve_counted(residual, &[10.0, -4.0], &cfg, Some(&jac)).unwrap();
        assert_eq!(iters, 1);
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn newton_reports_no_convergence_without_root() {
        let cfg = NewtonConfig {
            tol: 1e-12,
            max_iter: 25,
            fd_step: default_fd_step(),
        };
        let err = newton_solve(|x| vec![x[0] * x[0] + 1.0], &[0.7], &cfg, None).unwrap_err();
        match err {
            Error::NoConvergence {
                iterations,
                residual,
            } => {
                assert_eq!(iterations, 25);
                assert!(residual >= 1.0);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn newton_quadratic_residual_decay() {
        // Track residual norms on a smooth scalar problem and check the decay
        // exponent between consecutive iterations approaches 2.
        let residual = |x: &[f64]| vec![x[0].exp() - 2.0];
        let mut norms = Vec::new();
        let mut x = vec![2.0];
        for _ in 0..6 {
            let r = residual(&x)[0];
            norms.push(r.abs());
            if r.abs() < 1e-14 {
                break;
            }
            let j = x[0].exp();
            x[0] -= r / j;
        }
        let mut saw_quadratic = false;
        for w in norms.windows(3) {
            if w[2] > 1e-15 && w[1] < 1.0 {
                let p = (w[2].ln() - w[1].ln()) / (w[1].ln() - w[0].ln());
                if (p - 2.0).abs() < 0.5 {
                    saw_quadratic = true;
                }
            }
        }
        assert!(saw_quadratic, "no quadratic decay seen in {norms:?}");
    }

    #[test]
    fn fd_grad_on_quadratic() {
        let g = fd_grad(|x| 0.5 * (x[0] * x[0] + x[1] * x[1]), &[1.0, 2.0], 1e-5);
        assert!((g[0] - 1.0).abs() < 1e-9 && (g[1] - 2.0).abs() < 1e-9);
        let zero = fd_grad(|_| 3.5, &[0.3, -0.4], 1e-5);
        assert!(zero.iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn fd_grad_truncation_error_is_quadratic_in_step() {
        let step = 1e-4;
        let g = fd_grad(|x| x[0].sin(), &[0.0], step);
        assert!((g[0] - 1.0).abs() < step * step);
    }

    #[test]
    fn fd_derivative4_is_high_order() {
        let d = fd_derivative4(|t| (1.3 + t).sin(), 1e-3);
        assert!((d - 1.3f64.cos()).abs() < 1e-12);
    }
}
