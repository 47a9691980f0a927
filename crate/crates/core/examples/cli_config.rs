//! Drive the command layer from an inline config: certify a batch and render
//! the figure panels into a scratch directory.

use finite_sysid::cli::{cmd_certify, cmd_figure, Config};
use finite_sysid::Result;

const CONFIG: &str = r#"
schema = 1
seed = 3
delta = 0.05

[system]
preset = "double_integrator"

[certify]
data = "batch"
experiments = 400
horizon = 6

[certify.bootstrap]
enabled = true
trials = 100

[figure]
runs = 4
horizons = [250, 1000, 4000]
experiments = [50, 200, 800]
bootstrap_trials = 100
"#;

fn main() -> Result<()> {
    let cfg = Config::parse(CONFIG)?;
    let seed = cfg.resolved_seed(None)?;
    let out = std::env::temp_dir().join("finite_sysid_cli_example");
    let (bundle, files) = cmd_certify(&cfg, &out, seed)?;
    let theory = bundle.theory.as_ref().unwrap();
    println!(
        "theory eps_A {:.4}, ellipsoid eps_A {:.4}, bootstrap eps_A {:.4}",
        theory.matrix_a.as_ref().unwrap().value,
        bundle.ellipsoid.as_ref().unwrap().eps_a,
        bundle.bootstrap.as_ref().unwrap().eps_a
    );
    let (panels, more) = cmd_figure(&cfg, &out, seed)?;
    for p in &panels {
        for r in p.series("A", "bound") {
            println!("{:<18} n={:>5}  median bound {:.4}", p.name, r.grid_value, r.median);
        }
    }
    println!("wrote {} files under {}", files.len() + more.len(), out.display());
    Ok(())
}
