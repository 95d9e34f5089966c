#![allow(dead_code)]

pub mod fock;

use bellswitch_core::linalg::{c, Mat4, C64};
use bellswitch_core::DensityMatrix;
use nalgebra::{Matrix2, SMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Hilbert–Schmidt random state of the given rank: G·G†/Tr with G a 4×rank
/// complex Gaussian matrix.
pub fn random_density(seed: u64, rank: usize) -> DensityMatrix {
    let mut r = rng(seed);
    let mut m = Mat4::zeros();
    for _ in 0..rank {
        let v: SMatrix<C64, 4, 1> = SMatrix::from_fn(|_, _| gaussian(&mut r));
        m += v * v.adjoint();
    }
    let tr = m.trace();
    m /= tr;
    DensityMatrix::new((m + m.adjoint()) * c(0.5, 0.0)).expect("Gram matrix is physical")
}

/// Haar-ish random 2×2 unitary from the QR of a Gaussian matrix.
pub fn random_unitary(seed: u64) -> Matrix2<C64> {
    let mut r = rng(seed);
    let g = Matrix2::from_fn(|_, _| gaussian(&mut r));
    g.qr().q()
}
