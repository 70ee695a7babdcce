//! Synthetic 2-D wind field with Jensen-style turbine wakes.
//!
//! Each turbine casts a wake downstream along the freestream direction. At
//! streamwise distance `s` the wake has radius `r + k_w s` and a velocity deficit
//! `C_t / (1 + k_w s / r)²`, uniform across the wake except for a smoothstep blend
//! of width `0.1 × wake radius` at its edge. Deficits from several turbines combine
//! root-sum-square and reduce the streamwise `U` component. The cross-stream `V`
//! component picks up an outward deflection proportional to the cross-stream
//! gradient of a Gaussian profile with the same centreline deficit and width.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::points::PointSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Turbine {
    pub position: [f64; 2],
    pub rotor_radius: f64,
    pub wake_expansion: f64,
    /// Centreline deficit right behind the rotor.
    pub thrust_deficit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindFieldConfig {
    /// `[x0, x1, y0, y1]`.
    pub domain: [f64; 4],
    /// `(U∞, V∞)`.
    pub freestream: [f64; 2],
    pub turbines: Vec<Turbine>,
    /// Scale of the cross-stream deflection.
    pub lateral_gain: f64,
    /// Observation noise standard deviation per component.
    pub noise_std: f64,
    pub n_total: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for WindFieldConfig {
    fn default() -> Self {
        let turbine = |x, y| Turbine { position: [x, y], rotor_radius: 0.08, wake_expansion: 0.08, thrust_deficit: 0.6 };
        WindFieldConfig {
            domain: [0.0, 1.0, 0.0, 1.0],
            freestream: [1.0, 0.1],
            turbines: alloc::vec![turbine(0.15, 0.35), turbine(0.45, 0.6), turbine(0.7, 0.3)],
            lateral_gain: 0.8,
            noise_std: 0.05,
            n_total: 1200,
            n_train: 900,
            n_test: 300,
            seed: 7,
        }
    }
}

impl WindFieldConfig {
    pub fn validate(&self) -> Result<()> {
        let [x0, x1, y0, y1] = self.domain;
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::InvalidParameter("domain must have positive extent"));
        }
        if self.n_train + self.n_test != self.n_total {
            return Err(Error::InvalidParameter("n_train + n_test must equal n_total"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidParameter("noise_std must be non-negative"));
        }
        let [u, v] = self.freestream;
        if !(u.is_finite() && v.is_finite()) || u * u + v * v == 0.0 {
            return Err(Error::InvalidParameter("freestream must be a finite nonzero vector"));
        }
        if !self.lateral_gain.is_finite() {
            return Err(Error::InvalidParameter("lateral_gain must be finite"));
        }
        for t in &self.turbines {
            let [px, py] = t.position;
            if !(px >= x0 && px <= x1 && py >= y0 && py <= y1) {
                return Err(Error::InvalidParameter("turbine position outside the domain"));
            }
            if !(t.rotor_radius > 0.0 && t.wake_expansion >= 0.0) {
                return Err(Error::InvalidParameter("turbine radius must be positive and expansion non-negative"));
            }
            if !(0.0..=1.0).contains(&t.thrust_deficit) {
                return Err(Error::InvalidParameter("thrust deficit must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Noise-free `(U, V)` at `x`.
pub fn true_field(cfg: &WindFieldConfig, x: &[f64]) -> [f64; 2] {
    let [u_inf, v_inf] = cfg.freestream;
    let speed = libm::sqrt(u_inf * u_inf + v_inf * v_inf);
    let along = [u_inf / speed, v_inf / speed];
    let across = [-along[1], along[0]];

    let mut deficit_sq = 0.0;
    let mut lateral = 0.0;
    for t in &cfg.turbines {
        let rel = [x[0] - t.position[0], x[1] - t.position[1]];
        let s = rel[0] * along[0] + rel[1] * along[1];
        if s <= 0.0 {
            continue;
        }
        let c = rel[0] * across[0] + rel[1] * across[1];
        let wake_radius = t.rotor_radius + t.wake_expansion * s;
        let expansion = 1.0 + t.wake_expansion * s / t.rotor_radius;
        let centre = t.thrust_deficit / (expansion * expansion);

        let edge = 0.1 * wake_radius;
        let inside = smoothstep((wake_radius + 0.5 * edge - c.abs()) / edge);
        let d = centre * inside;
        deficit_sq += d * d;

        let z = c / wake_radius;
        lateral += centre * 2.0 * z * libm::exp(-z * z);
    }
    let deficit = libm::sqrt(deficit_sq).min(1.0);
    [u_inf * (1.0 - deficit), v_inf + cfg.lateral_gain * speed * lateral]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Inputs, noisy outputs and the noise-free field at the same inputs, with a train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: PointSet,
    /// Point-major `(u, v)` observations.
    pub outputs: Vec<f64>,
    pub truth: Vec<f64>,
    pub split: Vec<Split>,
    /// Owning agent of each training datum, once partitioned.
    pub agent: Vec<Option<usize>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn indices(&self, which: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.split[i] == which).collect()
    }

    /// Inputs and point-major outputs of one split, in index order.
    pub fn subset(&self, which: Split) -> (PointSet, Vec<f64>) {
        let idx = self.indices(which);
        let x = self.inputs.select(&idx);
        let y = idx.iter().flat_map(|&i| [self.outputs[2 * i], self.outputs[2 * i + 1]]).collect();
        (x, y)
    }

    pub fn output(&self, i: usize) -> &[f64] {
        &self.outputs[2 * i..2 * i + 2]
    }
}

/// Samples inputs uniformly over the domain, observes the field with Gaussian noise
/// and splits by a seeded permutation.
pub fn generate(cfg: &WindFieldConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let [x0, x1, y0, y1] = cfg.domain;
    let mut coords = Vec::with_capacity(2 * cfg.n_total);
    for _ in 0..cfg.n_total {
        coords.push(x0 + (x1 - x0) * rng.random::<f64>());
        coords.push(y0 + (y1 - y0) * rng.random::<f64>());
    }
    let inputs = PointSet::new(2, coords)?;
    let mut truth = Vec::with_capacity(2 * cfg.n_total);
    let mut outputs = Vec::with_capacity(2 * cfg.n_total);
    for p in inputs.iter() {
        for v in true_field(cfg, p) {
            let eps: f64 = rng.sample(StandardNormal);
            truth.push(v);
            outputs.push(v + cfg.noise_std * eps);
        }
    }
    let mut order: Vec<usize> = (0..cfg.n_total).collect();
    order.shuffle(&mut rng);
    let mut split = alloc::vec![Split::Test; cfg.n_total];
    for &i in &order[..cfg.n_train] {
        split[i] = Split::Train;
    }
    Ok(Dataset { inputs, outputs, truth, split, agent: alloc::vec![None; cfg.n_total] })
}

/// Noise-free field on the cell-centred `g × g` grid (rows along y, x fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub resolution: usize,
    pub points: PointSet,
    /// Point-major `(U, V)`.
    pub values: Vec<f64>,
}

pub fn grid_truth(cfg: &WindFieldConfig, resolution: usize) -> Result<FieldGrid> {
    if resolution == 0 {
        return Err(Error::InvalidParameter("grid resolution must be positive"));
    }
    let points = PointSet::grid_2d(cfg.domain, resolution);
    let values = points.iter().flat_map(|p| true_field(cfg, p)).collect();
    Ok(FieldGrid { resolution, points, values })
}
