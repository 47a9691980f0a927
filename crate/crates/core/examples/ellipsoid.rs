//! Confidence ellipsoid for [A B] from one batch, with its block bounds.

use finite_sysid::certificates::{confidence_ellipsoid, confidence_ellipsoid_from_gram};
use finite_sysid::estimators::{ols_batch, BatchMode};
use finite_sysid::lti::{simulate_batch, LtiSystem};
use finite_sysid::Result;

fn main() -> Result<()> {
    let sys = LtiSystem::double_integrator();
    let data = simulate_batch(&sys, 500, 6, 21)?;
    let est = ols_batch(&data, BatchMode::LastStep, Some(&sys))?;
    let cert = confidence_ellipsoid_from_gram(&est.gram, est.samples, 2, sys.sigma_w(), 0.05)?;
    let (eps_a, eps_b) = cert.block_spectral_bounds();
    let errs = est.errors.as_ref().unwrap();
    println!("C^2 = {:.5}", cert.scale_c2);
    println!("eps_A <= {eps_a:.4} (realized {:.4})", errs.eps_a);
    println!("eps_B <= {:.4} (realized {:.4})", eps_b.unwrap(), errs.eps_b.unwrap());
    let theta_err = &est.theta_hat - sys.theta();
    println!(
        "truth inside: {} (margin {:.4})",
        cert.contains(&theta_err)?,
        cert.containment_margin(&theta_err)?
    );

    // straight from a regressor matrix whose input column never moved
    let z = nalgebra::DMatrix::from_fn(4, 3, |i, j| if i == j && j < 2 { 1.0 } else { 0.0 });
    let flat = confidence_ellipsoid(&z, 2, 0.1, 0.05)?;
    let (a, b) = flat.block_spectral_bounds();
    println!(
        "unexcited input: {} unbounded direction(s), eps_A <= {a}, eps_B <= {}",
        flat.infinite_directions,
        b.unwrap()
    );
    Ok(())
}
