//! Dichotomizes a table with each threshold rule and compares the Bernoulli
//! fit with the Gaussian fit on the raw values.

use mmblock::experiment::{self, StudyConfig};
use mmblock::simgen::{self, CensorRule, SimConfig};

fn main() -> mmblock::Result<()> {
    let truth = simgen::generate(&SimConfig::new(20, 30, 2, 3, 5))?;
    for rule in [CensorRule::Median, CensorRule::Mean, CensorRule::Fixed(0.5)] {
        let (binary, tau) = simgen::censor(&truth.table, rule)?;
        let ones = binary.observed_cells().filter(|c| c.2 == 1.0).count();
        println!("{:<10} threshold {tau:.3}, {ones} of {} cells positive", experiment::rule_key(&rule), binary.observed_count());
    }

    let mut cfg = StudyConfig { replicates: 2, ..Default::default() };
    (cfg.sim.n1, cfg.sim.n2, cfg.sim.k1, cfg.sim.k2) = (20, 30, 2, 3);
    cfg.engine.vem.restarts = 4;
    let study = experiment::censor_study(&cfg)?;
    for (name, value) in &study.report.summary {
        println!("{name} = {value:.3}");
    }
    Ok(())
}
