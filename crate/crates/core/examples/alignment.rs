//! Recovers a label permutation with the exhaustive and Hungarian solvers.

use mmblock::eval;
use mmblock::simgen::{self, SimConfig};

fn main() -> mmblock::Result<()> {
    let truth = simgen::generate(&SimConfig::new(40, 60, 6, 9, 1))?;
    let perm = [3, 0, 5, 1, 4, 2];
    let shuffled = truth.pi.permute_groups(&perm);

    let cost = eval::alignment_costs(&shuffled, &truth.pi)?;
    let (exhaustive, c1) = eval::exhaustive_assignment(&cost);
    let (hungarian, c2) = eval::hungarian(&cost);
    println!("applied permutation  {perm:?}");
    println!("exhaustive           {exhaustive:?} cost {c1:.3}");
    println!("hungarian            {hungarian:?} cost {c2:.3}");

    let side = eval::align(&shuffled, &truth.pi)?;
    println!("align() picks        {:?}", side.perm);
    Ok(())
}
