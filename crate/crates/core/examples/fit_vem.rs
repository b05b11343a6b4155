//! Fits a synthetic table by variational EM and scores the recovery.

use mmblock::simgen::{self, Preset, SimConfig};
use mmblock::vem::{self, VemConfig};
use mmblock::{eval, Hyperparams};

fn main() -> mmblock::Result<()> {
    let truth = simgen::generate(&SimConfig::preset(Preset::Small, 1))?;
    let hyper = Hyperparams::symmetric(0.05, 0.05, 0.01)?;
    let fit = vem::fit(&truth.table, &hyper, 2, 3, &VemConfig { seed: 1, ..Default::default() })?;

    println!("best restart {} of {}, bound {:.3}", fit.restart_index, fit.restart_elbos.len(), fit.elbo);
    println!("outer iterations {}, converged {}", fit.outer_iters, fit.converged);
    println!("largest bound decrease {:.2e}", fit.max_elbo_decrease);

    let (acc, alignment) = eval::accuracy_report(&fit.estimated_pi, &truth.pi, &fit.estimated_p, &truth.p)?;
    let err = eval::blockmodel_errors(&truth.b, fit.b(), &alignment)?;
    println!("row accuracy {:.3}, column accuracy {:.3}", acc.first_row, acc.first_col);
    println!("blockmodel mean absolute error {:.3}", err.mae);

    let cells = [(0, 0), (4, 7)];
    for ((j, k), yhat) in cells.iter().zip(vem::predict(&fit, &cells)?) {
        println!("cell ({j},{k}) observed {:+.3} fitted {yhat:+.3}", truth.table.get(*j, *k));
    }
    Ok(())
}
