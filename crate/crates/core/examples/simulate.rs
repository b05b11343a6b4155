//! Draws a synthetic table from a preset and prints its ground truth.

use mmblock::simgen::{self, Preset, SimConfig};
use mmblock::table_io;

fn main() -> mmblock::Result<()> {
    let cfg = SimConfig::preset(Preset::Small, 7);
    let truth = simgen::generate(&cfg)?;
    let y = &truth.table;
    println!("table {} x {}, blocks {} x {}", y.n1(), y.n2(), cfg.k1, cfg.k2);
    println!("observed mean {:.3}, sd {:.3}", y.observed_mean(), y.observed_sd());
    println!("blockmodel:");
    for row in truth.b.matrix().iter_rows() {
        println!("  {:?}", row.iter().map(|v| format!("{v:+.3}")).collect::<Vec<_>>());
    }
    for j in 0..3 {
        println!("row {j} membership {:?}", truth.pi.row(j).iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    }
    let csv = table_io::format_table(&truth.table.clone().into());
    println!("first lines of the table file:");
    for line in csv.lines().take(3) {
        println!("  {}", &line[..line.len().min(72)]);
    }
    Ok(())
}
