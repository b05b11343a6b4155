//! Runs a small replicated recovery study and a timing comparison.

use mmblock::experiment::{self, StudyConfig};

fn main() -> mmblock::Result<()> {
    let mut cfg = StudyConfig { replicates: 4, ..Default::default() };
    cfg.engine.vem.restarts = 5;
    let study = experiment::recovery_study(&cfg)?;
    for (name, agg) in &study.report.aggregate {
        println!("{name:<28} {}", agg.formatted);
    }
    print!("{}", study.metrics_csv());

    let bench = experiment::bench_study(&StudyConfig { replicates: 1, ..cfg })?;
    println!("gibbs / vem wall-clock ratio {:.1}", bench.report.summary["ratio_of_mean_seconds"]);
    Ok(())
}
