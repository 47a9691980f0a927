//! Simulate a batch of double-integrator experiments and compare the sample
//! covariance of the last regression covariate with its exact value.

use finite_sysid::lti::{batch_to_csv, simulate_batch, LtiSystem};
use finite_sysid::Result;

fn main() -> Result<()> {
    let sys = LtiSystem::double_integrator();
    let horizon = 6;
    let batch = simulate_batch(&sys, 20_000, horizon, 1)?;

    let mut emp = nalgebra::DMatrix::zeros(2, 2);
    for rec in &batch.records {
        let x = rec.states.row(horizon - 1).transpose();
        emp += &x * x.transpose();
    }
    emp /= batch.len() as f64;
    println!("exact covariance of x_{}:{}", horizon - 1, sys.last_step_covariance(horizon));
    println!("sample covariance over {} experiments:{emp}", batch.len());

    let small = simulate_batch(&sys, 2, 3, 1)?;
    print!("{}", batch_to_csv(&small));
    Ok(())
}
