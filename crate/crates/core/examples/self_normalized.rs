//! Any-time self-normalized martingale bound along one AR(1) path.

use finite_sysid::certificates::SnmState;
use finite_sysid::lti::{simulate_single, LtiSystem};
use finite_sysid::Result;
use nalgebra::{DMatrix, DVector};

fn main() -> Result<()> {
    let sys = LtiSystem::autonomous(DMatrix::from_element(1, 1, 0.9), 1.0)?;
    let horizon = 1_000;
    let traj = simulate_single(&sys, horizon, true, 8);
    let noise = traj.trajectory.recover_noise(&sys);
    let mut st = SnmState::new(DMatrix::identity(1, 1), 1, 1.0)?;
    let mut worst: f64 = 0.0;
    for t in 0..horizon {
        st.push(
            &DVector::from_element(1, traj.states()[(t, 0)]),
            &DVector::from_element(1, noise[(t, 0)]),
        );
        let ratio = st.lhs() / st.radius(0.1)?;
        worst = worst.max(ratio);
        if (t + 1) % 200 == 0 {
            println!("t={:>4}: |S|^2_Vbar^-1 = {:.3}  radius {:.3}", t + 1, st.lhs(), st.radius(0.1)?);
        }
    }
    println!("worst ratio over the path: {worst:.3} (violation if > 1)");
    Ok(())
}
