//! Compares the variational bound with the exact marginal likelihood on a
//! table small enough to enumerate.

use mmblock::vem::{self, VemConfig};
use mmblock::model::exact_posterior;
use mmblock::{Hyperparams, InteractionTable, LikelihoodKind};

fn main() -> mmblock::Result<()> {
    let y = InteractionTable::from_rows(
        &[vec![0.9, -0.4, 1.1], vec![-0.5, 0.8, -0.3], vec![1.0, -0.6, 0.7]],
        LikelihoodKind::Gaussian,
    )?;
    let hyper = Hyperparams::symmetric(0.5, 0.5, 0.1)?;
    let fit = vem::fit(&y, &hyper, 2, 2, &VemConfig::default())?;
    let exact = exact_posterior(&y, &hyper, fit.b())?;

    println!("variational bound   {:.6}", fit.elbo);
    println!("exact log marginal  {:.6}", exact.log_marginal);
    println!("gap                 {:.6}", exact.log_marginal - fit.elbo);
    println!("cell (0,0) posterior over (g,h): {:?}", exact.cell_marginals[0].iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    Ok(())
}
