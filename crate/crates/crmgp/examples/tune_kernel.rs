//! Coordinate ascent on the exact multi-output GP log marginal likelihood over a
//! coarse grid of kernel hyperparameters, using the default training data.
//!
//! Usage: cargo run --release -p crmgp --example tune_kernel [config.toml]

use crmgp::config::{ComponentSpec, ExperimentConfig};
use crmgp_core::exact::ExactGp;
use crmgp_core::linalg::JitterPolicy;
use crmgp_core::windfield::{generate, Split};
use crmgp_core::Vector;

fn lml(cfg: &ExperimentConfig, comps: &[ComponentSpec]) -> f64 {
    let mut c = cfg.clone();
    c.kernel.components = comps.to_vec();
    let Ok(kernel) = c.kernel() else { return f64::NEG_INFINITY };
    let data = generate(&c.windfield_config()).expect("valid windfield");
    let (x, raw) = data.subset(Split::Train);
    let mean = c.prior_mean();
    let y = Vector::from_iterator(raw.len(), raw.iter().enumerate().map(|(k, v)| v - mean[k % 2]));
    ExactGp::fit(kernel, c.noise_variance, x, y, &JitterPolicy::default())
        .map(|g| g.log_marginal_likelihood())
        .unwrap_or(f64::NEG_INFINITY)
}

fn main() {
    let cfg = match std::env::args().nth(1) {
        Some(p) => ExperimentConfig::load(p.as_ref()).expect("config"),
        None => ExperimentConfig::from_toml("noise_variance = 0.0025\n").expect("config"),
    }
    .resolve()
    .expect("config");
    let variances = [0.003, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5];
    let lengthscales = [0.03, 0.05, 0.07, 0.1, 0.15, 0.2, 0.3];
    let mixes = [-0.5, -0.2, 0.0, 0.2, 0.5];
    let mut comps = cfg.kernel.components.clone();
    let mut best = lml(&cfg, &comps);
    println!("start {best:.3}");
    for sweep in 0..3 {
        for q in 0..comps.len() {
            for field in 0..3 {
                let values: &[f64] = match field {
                    0 => &variances,
                    1 => &lengthscales,
                    _ => &mixes,
                };
                for &v in values {
                    let mut trial = comps.clone();
                    match field {
                        0 => trial[q].variance = v,
                        1 => trial[q].lengthscale = v,
                        // off-diagonal entry of the coregionalization vector
                        _ => trial[q].coreg[1 - q] = v,
                    }
                    let score = lml(&cfg, &trial);
                    if score > best {
                        best = score;
                        comps = trial;
                    }
                }
            }
        }
        println!("sweep {sweep}: {best:.3} {comps:?}");
    }
}
