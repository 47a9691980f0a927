//! Moment generating functions: closed forms against quadrature, sub-exponential
//! domination, and an empirical tail against the Chernoff bound.

use finite_sysid::montecarlo::{empirical_tail, mgf_quadrature};
use finite_sysid::theory::{interior_grid, mgf_closed_form, subexp_domination_check, subexp_tail, MgfKind};
use finite_sysid::Result;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> Result<()> {
    for (kind, lo, hi) in [(MgfKind::ChiSqCentered, -1.0, 0.5), (MgfKind::GaussProduct, -1.0, 1.0)] {
        let worst = interior_grid(lo, hi, 50)
            .into_iter()
            .map(|l| Ok((mgf_quadrature(kind, l)? - mgf_closed_form(kind, l)?).abs()))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        println!("{kind:?}: max |quadrature - closed form| = {worst:.2e}");
    }
    let chi = subexp_domination_check(MgfKind::ChiSqCentered, 4.0, 4.0, &interior_grid(-0.25, 0.25, 500))?;
    println!("chi-square dominated by SE(4, 4): {} (slack {:.2e})", chi.pass, chi.min_slack);

    // average of 20 centered chi-squares: SE(4/20, 4/20)
    let n = 20;
    let sampler = |rng: &mut rand_chacha::ChaCha8Rng| {
        (0..n)
            .map(|_| {
                let g: f64 = rng.sample(StandardNormal);
                g * g - 1.0
            })
            .sum::<f64>()
            / n as f64
    };
    let grid = [0.25, 0.5, 1.0, 1.5];
    for p in empirical_tail(sampler, &grid, 20_000, 1)? {
        let bound = subexp_tail(4.0 / n as f64, 4.0 / n as f64, p.t)?;
        println!("t={:.2}: empirical {:.4} <= bound {:.4}", p.t, p.frequency, bound);
    }
    Ok(())
}
