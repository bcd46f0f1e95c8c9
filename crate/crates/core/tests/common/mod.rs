#![allow(dead_code)]

use coman::kinematics::{ManipulatorModel, Pose2};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// A 4-link arm with unequal links, masses and torque limits.
pub fn four_link() -> ManipulatorModel {
    ManipulatorModel::new(
        vec![1.0, 0.8, 0.6, 0.4],
        vec![1.2, 0.9, 0.6, 0.3],
        vec![0.10, 0.05, 0.02, 0.005],
        Pose2::new(0.2, -0.1, 0.3),
        vec![6.0, 4.0, 2.5, 1.5],
    )
    .unwrap()
}

pub fn random_angles(r: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| r.random_range(-2.5..2.5))
}

pub fn random_spd(r: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| r.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(d, d) * 0.2
}

pub fn random_symmetric(r: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| r.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

/// Largest relative entry error, with an absolute floor for tiny entries.
pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.amax().max(1e-3);
    (a - b).amax() / scale
}
