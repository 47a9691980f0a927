//! Single-trajectory certificate: ordering condition and alpha sweep.

use finite_sysid::certificates::{single_traj_cert, single_traj_cert_sweep, BSource, SingleTrajInputs};
use finite_sysid::estimators::{ols_single_traj, TrajectoryMode};
use finite_sysid::lti::{simulate_single, LtiSystem};
use finite_sysid::Result;

fn main() -> Result<()> {
    let sys = LtiSystem::double_integrator();
    for horizon in [500, 2_000, 8_000] {
        let traj = simulate_single(&sys, horizon, false, 4);
        let est = ols_single_traj(&traj, TrajectoryMode::Controlled, Some(&sys))?;
        let b_hat = est.b_hat();
        let inp = SingleTrajInputs {
            gram: &est.gram,
            samples: est.samples,
            n_x: 2,
            b: &b_hat,
            b_source: BSource::Estimated,
            sigma_u: sys.sigma_u(),
            sigma_w: sys.sigma_w(),
            alpha: 1.0,
            delta: 0.05,
        };
        let err = est.errors.as_ref().unwrap().eps_theta;
        match single_traj_cert(&inp) {
            Ok(c) => println!("T={horizon}: alpha=1 bound {:.4} (error {err:.4}, margin {:.2})", c.bound.value, c.ordering_margin),
            Err(e) => println!("T={horizon}: alpha=1 not certified: {e}"),
        }
        let c = single_traj_cert_sweep(&inp, &[1.0, 1.5, 2.0, 4.0])?;
        println!("T={horizon}: sweep picks alpha={} bound {:.4}", c.alpha, c.bound.value);
    }
    Ok(())
}
