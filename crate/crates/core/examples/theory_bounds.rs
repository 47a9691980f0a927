//! Closed-form finite-sample bounds and their sample-size preconditions.

use finite_sysid::lti::LtiSystem;
use finite_sysid::theory::{
    choose_k, lwm_bound, matrix_error_bounds, min_eig_lower_bound, scalar_error_bound, KRegime, LwmInputs,
};
use finite_sysid::linalg::min_eig;
use finite_sysid::Result;
use nalgebra::DMatrix;

fn main() -> Result<()> {
    for n in [50, 200, 1000, 10_000] {
        let c = scalar_error_bound(1.0, 2.0, n, 0.05)?;
        println!("scalar N={n:>5}: {:.5} precondition_ok={}", c.value, c.precondition_ok);
    }

    let sys = LtiSystem::double_integrator();
    let lam = min_eig(&sys.last_step_covariance(6));
    for n in [500, 5_000, 50_000] {
        let (a, b) = matrix_error_bounds(lam, sys.sigma_w(), sys.sigma_u(), 2, 1, n, 0.05)?;
        println!("matrix N={n:>5}: eps_A {:.4} eps_B {:.4} ok={}", a.value, b.value, a.precondition_ok);
    }
    let g = min_eig_lower_bound(lam, 5_000, 2, 0.05)?;
    println!("lambda_min(Gram) >= {:.3} w.p. 0.95 at N=5000", g.value);

    let id = DMatrix::<f64>::identity(2, 2);
    let horizon = 100_000;
    let k = choose_k(KRegime::Orthogonal { horizon, n: 2, delta: 0.1 })?;
    let c = lwm_bound(&LwmInputs {
        k,
        p: 0.15,
        gamma_min: &id,
        gamma_max: &(&id * k as f64),
        sigma_w: 1.0,
        ell: 2,
        horizon,
        delta: 0.1,
    })?;
    println!("single trajectory (rotation) T={horizon}: k={k} bound {:.4} ok={}", c.value, c.precondition_ok);
    Ok(())
}
