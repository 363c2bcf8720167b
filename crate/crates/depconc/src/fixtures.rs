//! Shared desk-scale fixtures used across the test suites and the docs.

use crate::linalg::Matrix;
use crate::model::{CoordinateSpace, FunctionTable, JointLaw, ProductModel};

/// P1: product of three fair coins with unit trivial metrics.
pub fn p1() -> ProductModel {
    let coords = (0..3)
        .map(|_| CoordinateSpace::trivial(2, 1.0).expect("valid trivial metric"))
        .collect();
    let marginals = vec![vec![0.5, 0.5]; 3];
    ProductModel::new(coords, JointLaw::Product(marginals)).expect("P1 is valid")
}

/// M1: the 3-step binary chain with initial (0.5, 0.5) and kernel
/// [[0.9, 0.1], [0.2, 0.8]] applied twice, unit trivial metrics.
pub fn m1() -> ProductModel {
    let coords = (0..3)
        .map(|_| CoordinateSpace::trivial(2, 1.0).expect("valid trivial metric"))
        .collect();
    let kernel = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).expect("2x2 kernel");
    ProductModel::new(
        coords,
        JointLaw::Markov { initial: vec![0.5, 0.5], kernels: vec![kernel.clone(), kernel] },
    )
    .expect("M1 is valid")
}

/// Hamming weight: the number of coordinates with a nonzero state.
pub fn hamming_weight(model: &ProductModel) -> FunctionTable {
    let values = (0..model.state_count())
        .map(|idx| {
            model
                .decode_state(idx)
                .iter()
                .filter(|&&x| x != 0)
                .count() as f64
        })
        .collect();
    FunctionTable::new(values).expect("finite table")
}
