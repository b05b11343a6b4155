//! Scans candidate group counts and picks the one with the lowest BIC.

use mmblock::experiment;
use mmblock::simgen::{self, SimConfig};
use mmblock::vem::VemConfig;
use mmblock::Hyperparams;

fn main() -> mmblock::Result<()> {
    let truth = simgen::generate(&SimConfig::new(30, 45, 2, 3, 0))?;
    let hyper = Hyperparams::symmetric(0.05, 0.05, 0.01)?;
    let cfg = VemConfig { restarts: 4, ..Default::default() };
    let scan = experiment::select_k(&truth.table, &hyper, &[1, 2, 3], &[2, 3], &cfg)?;
    println!("{:>3} {:>3} {:>12} {:>12}", "k1", "k2", "bound", "bic");
    for c in &scan.candidates {
        println!("{:>3} {:>3} {:>12.2} {:>12.2}", c.k1, c.k2, c.elbo, c.bic);
    }
    let best = scan.best();
    println!("selected ({}, {}), generated with (2, 3)", best.k1, best.k2);
    Ok(())
}
