//! Empirical verification of the order metadata in the method catalog.

mod common;

use common::{loglog_slope, sho_flow};
use variational::onestep::{
    explicit_euler, explicit_midpoint, gauss2_phase, implicit_midpoint, implicit_midpoint_phase,
    rk4, OneStepMethod, Space,
};
use variational::systems::builtin_sho;

fn global_error_on_sho(method: &OneStepMethod, h: f64, t_final: f64) -> f64 {
    let sys = builtin_sho();
    // On the oscillator, tangent (q, v) and phase (q, p) coordinates agree.
    let mut a = vec![1.0];
    let mut b = vec![0.0];
    let steps = (t_final / h).round() as usize;
    for _ in 0..steps {
        let (an, bn) = method.step(&sys, &a, &b, h).unwrap();
        a = an;
        b = bn;
    }
    let (qe, pe) = sho_flow(1.0, 0.0, h * steps as f64);
    ((a[0] - qe).powi(2) + (b[0] - pe).powi(2)).sqrt()
}

#[test]
fn measured_orders_match_metadata() {
    let methods = [
        explicit_euler(),
        explicit_midpoint(),
        rk4(),
        implicit_midpoint(),
        implicit_midpoint_phase(),
        gauss2_phase(),
    ];
    for method in methods {
        let points: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&h| (h, global_error_on_sho(&method, h, 1.0)))
            .filter(|&(_, e)| e > 1e-13)
            .collect();
        assert!(points.len() >= 3, "{}: errors hit the floor", method.name);
        let slope = loglog_slope(&points);
        assert!(
            (slope - method.order as f64).abs() <= 0.25,
            "{}: measured slope {slope}, declared order {}",
            method.name,
            method.order
        );
        let _ = method.space == Space::Phase;
    }
}
