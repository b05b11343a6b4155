//! Masks part of a table, fits the rest and predicts the masked cells.

use mmblock::simgen::{self, Preset, SimConfig};
use mmblock::vem::{self, VemConfig};
use mmblock::{eval, Hyperparams};

fn main() -> mmblock::Result<()> {
    let truth = simgen::generate(&SimConfig::preset(Preset::Small, 2))?;
    let h = simgen::mask_holdout(&truth.table, 2)?;
    println!("masked {} cells ({:.1}% of the table)", h.heldout.len(), 100.0 * h.missing_fraction());

    let hyper = Hyperparams::symmetric(0.05, 0.05, 0.01)?;
    let fit = vem::fit(&h.table, &hyper, 2, 3, &VemConfig { seed: 2, ..Default::default() })?;
    let cells: Vec<(usize, usize)> = h.heldout.iter().map(|c| (c.row, c.col)).collect();
    let pred = vem::predict(&fit, &cells)?;
    let mae = h.heldout.iter().zip(&pred).map(|(c, p)| (c.value - p).abs()).sum::<f64>() / pred.len() as f64;
    println!("held-out mean absolute error {mae:.3}");

    let (acc, _) = eval::accuracy_report(&fit.estimated_pi, &truth.pi, &fit.estimated_p, &truth.p)?;
    println!("row accuracy {:.3} against a 0.5 coin-flip baseline", acc.first_row);
    Ok(())
}
