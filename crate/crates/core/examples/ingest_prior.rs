//! Turns paired time courses into a correlation table and fits it with a
//! class-informed prior on the columns.

use std::io::Cursor;

use mmblock::ingest::{self, build_class_prior};
use mmblock::rng;
use mmblock::vem::{self, VemConfig};
use mmblock::{Hyperparams, InteractionTable, LikelihoodKind};
use rand::Rng;

fn series(name: &str, base: &[f64], noise: f64, r: &mut impl Rng) -> String {
    let vals: Vec<String> = base.iter().map(|b| format!("{:.4}", b + noise * (r.random::<f64>() - 0.5))).collect();
    format!("{name},{}\n", vals.join(","))
}

fn main() -> mmblock::Result<()> {
    let t = 12;
    let rise: Vec<f64> = (0..t).map(|i| i as f64).collect();
    let wave: Vec<f64> = (0..t).map(|i| (i as f64).sin() * 4.0).collect();
    let header = format!("id,{}\n", (0..t).map(|i| format!("t{i}")).collect::<Vec<_>>().join(","));
    let mut r = rng::seeded(1);

    let mut genes = header.clone();
    for j in 0..8 {
        genes.push_str(&series(&format!("g{j}"), if j < 4 { &rise } else { &wave }, 2.0, &mut r));
    }
    let mut mets = header;
    let mut class_of = Vec::new();
    for k in 0..6 {
        mets.push_str(&series(&format!("m{k}"), if k % 2 == 0 { &rise } else { &wave }, 2.0, &mut r));
        class_of.push(k % 2);
    }

    let g = ingest::load_timecourses(Cursor::new(genes))?;
    let m = ingest::load_timecourses(Cursor::new(mets))?;
    let corr = ingest::correlation(&g, &m)?;
    println!("{} x {} correlations over {} time points, se {:.3}", corr.rho.rows(), corr.rho.cols(), corr.t, corr.fisher_se());

    let prior = build_class_prior(&class_of, 2, 100.0)?;
    println!("column 0 prior {:?}", prior.raw.row(0));

    let y = InteractionTable::new(corr.z.rows(), corr.z.cols(), corr.z.as_slice().to_vec(), LikelihoodKind::Gaussian)?;
    let hyper = Hyperparams::symmetric(0.05, 0.05, corr.fisher_se().powi(2))?;
    let cfg = VemConfig { prior_xi: Some(prior.raw), ..Default::default() };
    let fit = vem::fit(&y, &hyper, 2, 2, &cfg)?;
    for (j, row) in fit.estimated_pi.matrix().iter_rows().enumerate() {
        println!("{} membership {:?}", corr.row_ids[j], row.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>());
    }
    Ok(())
}
