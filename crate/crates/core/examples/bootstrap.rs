//! Parametric bootstrap of the estimation error.

use finite_sysid::bootstrap::{bootstrap_from_data, BootstrapConfig};
use finite_sysid::estimators::{ols_batch, BatchMode};
use finite_sysid::lti::{simulate_batch, LtiSystem};
use finite_sysid::Result;

fn main() -> Result<()> {
    let sys = LtiSystem::double_integrator();
    let data = simulate_batch(&sys, 100, 6, 5)?;
    let fit = ols_batch(&data, BatchMode::Pooled, Some(&sys))?;
    let errs = fit.errors.as_ref().unwrap();
    for sigma_w in [Some(sys.sigma_w()), None] {
        let res = bootstrap_from_data(
            &data,
            &BootstrapConfig {
                trials: 200,
                delta: 0.05,
                seed: 6,
                sigma_w,
                sigma_u: sys.sigma_u(),
            },
        )?;
        println!(
            "sigma_w {:.4} (estimated: {}): eps_A {:.4}  eps_B {:.4}",
            res.sigma_w, res.sigma_w_estimated, res.eps_a, res.eps_b
        );
    }
    println!("realized: eps_A {:.4}  eps_B {:.4}", errs.eps_a, errs.eps_b.unwrap());
    Ok(())
}
