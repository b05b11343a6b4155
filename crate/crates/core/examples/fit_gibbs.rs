//! Runs the collapsed Gibbs sampler and reports chain diagnostics.

use mmblock::gibbs::{self, GibbsConfig, PSRF_WARNING};
use mmblock::simgen::{self, Preset, SimConfig};
use mmblock::{eval, Hyperparams};

fn main() -> mmblock::Result<()> {
    let truth = simgen::generate(&SimConfig::preset(Preset::Small, 3))?;
    let hyper = Hyperparams::symmetric(0.05, 0.05, 0.01)?;
    let cfg = GibbsConfig { chains: 4, seed: 3, ..Default::default() };
    let fit = gibbs::fit(&truth.table, &hyper, 2, 3, &cfg)?;

    println!("{} chains x {} retained draws", fit.chains.len(), fit.draws_per_chain);
    for (g, row) in fit.psrf.iter_rows().enumerate() {
        println!("psrf row {g}: {:?}", row.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    }
    println!("any psrf above {PSRF_WARNING}: {}", fit.convergence_warning);

    let (acc, alignment) = eval::accuracy_report(&fit.mean_pi, &truth.pi, &fit.mean_p, &truth.p)?;
    println!("row accuracy {:.3}, column accuracy {:.3}", acc.first_row, acc.first_col);
    println!("blockmodel error {:.3}", eval::blockmodel_error(&truth.b, &fit.mean_b, &alignment)?);
    Ok(())
}
