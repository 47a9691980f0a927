//! Batch and single-trajectory least squares on the double integrator.

use finite_sysid::estimators::{ols_batch, ols_single_traj, BatchMode, TrajectoryMode};
use finite_sysid::lti::{simulate_batch, simulate_single, LtiSystem};
use finite_sysid::Result;

fn main() -> Result<()> {
    let sys = LtiSystem::double_integrator();
    for n in [100, 1_000, 10_000] {
        let data = simulate_batch(&sys, n, 6, 3)?;
        for mode in [BatchMode::LastStep, BatchMode::Pooled] {
            let est = ols_batch(&data, mode, Some(&sys))?;
            let e = est.errors.unwrap();
            println!(
                "N={n:>5} {mode:?}: samples {:>5}  ||A-A^||={:.4}  ||B-B^||={:.4}",
                est.samples,
                e.eps_a,
                e.eps_b.unwrap()
            );
        }
    }
    let traj = simulate_single(&sys, 5_000, false, 3);
    let est = ols_single_traj(&traj, TrajectoryMode::Controlled, Some(&sys))?;
    println!("single trajectory T=5000: A^ ={}sigma_w^ = {:.4}", est.a_hat(), est.sigma_w_hat());
    Ok(())
}
