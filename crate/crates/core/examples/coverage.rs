//! Monte Carlo coverage of the matrix bounds, and a rate fit of the error.

use finite_sysid::estimators::BatchMode;
use finite_sysid::lti::LtiSystem;
use finite_sysid::montecarlo::{coverage_experiment, coverage_floor, summary_csv, Experiment, Scenario, Target};
use finite_sysid::Result;

fn main() -> Result<()> {
    let sys = LtiSystem::double_integrator();
    let sc = Scenario::new("matrix", &sys, Experiment::MatrixTheorem { horizon: 6 }, vec![1000, 4000], 0.05, 200, 1);
    let rep = coverage_experiment(&sc)?;
    print!("{}", summary_csv(&rep));
    println!("three-sigma floor at 200 replicates: {:.3}", coverage_floor(0.05, 200));

    let rate = Scenario::new(
        "rate",
        &sys,
        Experiment::BatchRate {
            horizon: 6,
            mode: BatchMode::LastStep,
        },
        vec![64, 256, 1024, 4096],
        0.05,
        200,
        1,
    );
    let rep = coverage_experiment(&rate)?;
    let fit = rep.target(Target::ErrorA).unwrap().slope.as_ref().unwrap();
    println!("median error slope {:.3} +/- {:.3}", fit.slope, fit.slope_stderr);
    Ok(())
}
