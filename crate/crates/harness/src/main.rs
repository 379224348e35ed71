use std::process::ExitCode;
use vibench::error::HarnessError;
use vibench::experiments::{run_convergence, run_energy, run_integrate, run_rigidbody};
use vibench::spec::{apply_setting, spec_from_args, ExperimentSpec};

const USAGE: &str = "vibench -- variational integrator benchmarks

USAGE:
    vibench <SUBCOMMAND> [FLAGS]

SUBCOMMANDS:
    integrate    run one trajectory, writing per-step state and energy
    energy       alias of `integrate` for energy-drift studies
    converge     sweep --h-list and fit the global-error order
    rigidbody    free rigid body comparison: lgvi-exp, lgvi-cayley and the
                 rk/srk/Crouch-Grossman baselines (writes one file per
                 method plus summary.json into --out)

FLAGS (also accepted as `key = value` lines via --config <path>;
explicit flags override the file):
    --system <name>      pendulum | sho | free_particle | two_particle
    --method <name>      svi-mid-trap | svi-rk4-simpson | svi-rk4-em |
                         svi-ham-mid | svi-type2 | galerkin-s1-trap |
                         galerkin-s2-simpson | baseline-rk-explicit-midpoint |
                         baseline-srk-implicit-midpoint | baseline-srk4-gauss2
    --h <real>           step size
    --h-list <reals>     comma-separated steps for `converge`
    --T <real>           final time
    --q0/--p0 <reals>    comma-separated initial state (rigidbody: p0 is the
                         3-component body angular velocity)
    --tol <real>         outer Newton tolerance override
    --out <path>         output file (directory for `rigidbody`)
    --format <fmt>       csv | json  (default csv)
    --seed <int>         recorded in the run for reproducibility
    --config <path>      read `key = value` defaults first

EXIT CODES:
    0 success, 2 solver non-convergence, 3 invalid spec";

fn run() -> Result<(), HarnessError> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(subcommand) = args.first() else {
        eprintln!("{USAGE}");
        return Err(HarnessError::invalid("missing subcommand"));
    };
    let rest = &args[1..];
    match subcommand.as_str() {
        "integrate" => {
            let spec = spec_from_args(rest)?;
            let samples = run_integrate(&spec)?;
            let last = samples.last().unwrap();
            println!(
                "{}: {} steps of h={} on {}; final energy error {:.3e}",
                spec.method,
                last.step,
                spec.h,
                spec.system,
                last.energy - samples[0].energy
            );
            Ok(())
        }
        "energy" => {
            let spec = spec_from_args(rest)?;
            let samples = run_energy(&spec)?;
            let e0 = samples[0].energy;
            let band = samples
                .iter()
                .fold(0.0f64, |m, s| m.max((s.energy - e0).abs()));
            println!(
                "{} on {}: T={}, h={}, max |E - E0| = {:.6e}",
                spec.method, spec.system, spec.t_final, spec.h, band
            );
            Ok(())
        }
        "converge" => {
            let spec = spec_from_args(rest)?;
            let report = run_convergence(&spec)?;
            for (h, e) in &report.points {
                println!("h={h:<10} global_error={e:.6e}");
            }
            println!("slope={:.4}", report.slope);
            Ok(())
        }
        "rigidbody" => {
            // Comparison defaults follow the figure: h = 0.2 over 30 time
            // units, all five methods unless one is named.
            let mut defaults = ExperimentSpec::default();
            apply_setting(&mut defaults, "h", "0.2")?;
            apply_setting(&mut defaults, "T", "30")?;
            apply_setting(&mut defaults, "method", "comparison")?;
            let spec = vibench::spec::spec_from_args_with(defaults, rest)?;
            let reports = run_rigidbody(&spec)?;
            for r in &reports {
                println!(
                    "{:<32} energy_band={:.3e} ortho={:.3e} momentum_err={:.3e} newton<= {} wall={:.3}s",
                    r.name,
                    r.energy_band,
                    r.max_ortho_error,
                    r.max_momentum_error,
                    r.max_newton_iters,
                    r.wall_time_s
                );
            }
            Ok(())
        }
        "--help" | "-h" | "help" => {
            println!("{USAGE}");
            Ok(())
        }
        other => {
            eprintln!("{USAGE}");
            Err(HarnessError::invalid(format!(
                "unknown subcommand `{other}`"
            )))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
