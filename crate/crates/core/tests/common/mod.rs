#![allow(dead_code)]

//! Shared helpers for the integration tests.

use variational::systems::LagrangianSystem;

/// Least-squares slope of log(err) against log(h).
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(h, e) in points {
        let x = h.ln();
        let y = e.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Exact discrete Lagrangian of the unit harmonic oscillator.
pub fn sho_exact_ld(q0: f64, q1: f64, h: f64) -> f64 {
    ((q0 * q0 + q1 * q1) * h.cos() - 2.0 * q0 * q1) / (2.0 * h.sin())
}

/// Analytic SHO flow from (q, p) over time t.
pub fn sho_flow(q: f64, p: f64, t: f64) -> (f64, f64) {
    (q * t.cos() + p * t.sin(), -q * t.sin() + p * t.cos())
}

/// Reference phase-space solution by fine-step classical RK4 on Hamilton's
/// equations.
pub fn rk4_reference(
    sys: &dyn LagrangianSystem,
    q0: &[f64],
    p0: &[f64],
    t: f64,
    steps: usize,
) -> (Vec<f64>, Vec<f64>) {
    let m = q0.len();
    let h = t / steps as f64;
    let mut q = q0.to_vec();
    let mut p = p0.to_vec();
    let rhs = |q: &[f64], p: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let dq = sys
            .dh_dp(q, p)
            .expect("reference needs the Hamiltonian side");
        let dp: Vec<f64> = sys.dh_dq(q, p).unwrap().iter().map(|x| -x).collect();
        (dq, dp)
    };
    for _ in 0..steps {
        let (k1q, k1p) = rhs(&q, &p);
        let at = |q0: &[f64], dq: &[f64], s: f64| -> Vec<f64> {
            q0.iter().zip(dq).map(|(a, b)| a + s * b).collect()
        };
        let (k2q, k2p) = rhs(&at(&q, &k1q, 0.5 * h), &at(&p, &k1p, 0.5 * h));
        let (k3q, k3p) = rhs(&at(&q, &k2q, 0.5 * h), &at(&p, &k2p, 0.5 * h));
        let (k4q, k4p) = rhs(&at(&q, &k3q, h), &at(&p, &k3p, h));
        for j in 0..m {
            q[j] += h / 6.0 * (k1q[j] + 2.0 * k2q[j] + 2.0 * k3q[j] + k4q[j]);
            p[j] += h / 6.0 * (k1p[j] + 2.0 * k2p[j] + 2.0 * k3p[j] + k4p[j]);
        }
    }
    (q, p)
}

/// Frobenius norm of `DPhi^T Omega DPhi - Omega` for a phase-space map,
/// with the Jacobian from central differences of step `delta`.
pub fn symplecticity_defect<F>(step: F, q: &[f64], p: &[f64], delta: f64) -> f64
where
    F: Fn(&[f64], &[f64]) -> (Vec<f64>, Vec<f64>),
{
    let m = q.len();
    let dim = 2 * m;
    let mut jac = vec![vec![0.0; dim]; dim];
    for col in 0..dim {
        let mut qp = q.to_vec();
        let mut pp = p.to_vec();
        let mut qm = q.to_vec();
        let mut pm = p.to_vec();
        if col < m {
            qp[col] += delta;
            qm[col] -= delta;
        } else {
            pp[col - m] += delta;
            pm[col - m] -= delta;
        }
        let (q1p, p1p) = step(&qp, &pp);
        let (q1m, p1m) = step(&qm, &pm);
        for row in 0..dim {
            let (vp, vm) = if row < m {
                (q1p[row], q1m[row])
            } else {
                (p1p[row - m], p1m[row - m])
            };
            jac[row][col] = (vp - vm) / (2.0 * delta);
        }
    }
    // Omega = [[0, I], [-I, 0]].
    let omega = |i: usize, j: usize| -> f64 {
        if i < m && j == i + m {
            1.0
        } else if i >= m && j == i - m {
            -1.0
        } else {
            0.0
        }
    };
    let mut defect = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let mut s = 0.0;
            for a in 0..dim {
                for b in 0..dim {
                    s += jac[a][i] * omega(a, b) * jac[b][j];
                }
            }
            let d = s - omega(i, j);
            defect += d * d;
        }
    }
    defect.sqrt()
}
