//! Reference systems used by the examples, tests and guide.

use crate::lti::StateSpace;
use crate::numkernel::Matrix;

/// A stable four-state, single-input, single-output system with
/// `‖G‖₂ ≈ 9.0797`. Its positive norm lies in `[5.94, 6.91]`.
pub fn four_state_siso() -> StateSpace {
    let a = Matrix::from_rows(&[
        [0.27, 0.06, -0.24, 0.19],
        [-0.26, -0.18, 0.35, 0.43],
        [0.06, -0.88, -0.78, 0.27],
        [-0.07, 0.11, -0.25, -0.01],
    ])
    .expect("constant data");
    let b = Matrix::column(&[0.68, 1.46, -0.22, 0.45]);
    let c = Matrix::from_rows(&[[0.33, -2.06, 1.22, 1.12]]).expect("constant data");
    let d = Matrix::from_rows(&[[0.05]]).expect("constant data");
    StateSpace::new(a, b, c, d).expect("consistent dimensions")
}

/// Input weight of the six-channel ReLU network template at `(a, b) = (0, 0)`.
/// The template perturbs entry `(0, 2)` by `a` and sets entry `(2, 1)` to `b`.
pub fn relu_template_input_weight() -> Matrix {
    Matrix::from_rows(&[
        [0.29, -0.04, 0.02, -0.35, -0.05, -0.12],
        [-0.29, -0.24, -0.01, 0.12, -0.13, 0.18],
        [-0.50, 0.0, 0.23, 0.40, -0.28, -0.08],
        [0.14, -0.27, -0.15, 0.13, -0.47, -0.28],
        [-0.10, -0.10, 0.08, 0.14, -0.22, 0.50],
        [-0.11, -0.28, -0.21, -0.14, -0.09, 0.20],
    ])
    .expect("constant data")
}
