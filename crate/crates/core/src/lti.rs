//! Discrete-time state-space systems, finite-horizon signals, and N-step
//! lifting.
//!
//! A system `x(k+1) = A x(k) + B w(k)`, `z(k) = C x(k) + D w(k)` with
//! `x(0) = 0`. Lifting by `N` regroups `N` consecutive samples into one:
//! the lifted quadruple is `(A^N, [A^{N-1}B .. AB B], [C; CA; ..; CA^{N-1}],
//! T_N)` where `T_N` is the block lower-triangular Toeplitz matrix of Markov
//! parameters with `D` on the diagonal. Lifting leaves both the ordinary and
//! the nonnegative-input induced norms unchanged.

use crate::error::{Error, Result};
use crate::numkernel::{is_schur_stable, norm2, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: Matrix,
}

impl StateSpace {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() {
            return Err(Error::dim(format!("A must be square, got {}x{}", a.rows(), a.cols())));
        }
        if b.rows() != n {
            return Err(Error::dim(format!("B has {} rows, expected {n}", b.rows())));
        }
        if c.cols() != n {
            return Err(Error::dim(format!("C has {} columns, expected {n}", c.cols())));
        }
        if d.shape() != (c.rows(), b.cols()) {
            return Err(Error::dim(format!(
                "D is {}x{}, expected {}x{}",
                d.rows(),
                d.cols(),
                c.rows(),
                b.cols()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// Memoryless system `z(k) = D w(k)` (zero states).
    pub fn static_gain(d: Matrix) -> Self {
        let (nz, nw) = d.shape();
        Self {
            a: Matrix::zeros(0, 0),
            b: Matrix::zeros(0, nw),
            c: Matrix::zeros(nz, 0),
            d,
        }
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn c(&self) -> &Matrix {
        &self.c
    }
    pub fn d(&self) -> &Matrix {
        &self.d
    }

    pub fn states(&self) -> usize {
        self.a.rows()
    }
    pub fn inputs(&self) -> usize {
        self.b.cols()
    }
    pub fn outputs(&self) -> usize {
        self.c.rows()
    }

    pub fn is_stable(&self) -> Result<bool> {
        Ok(is_schur_stable(&self.a)?.stable)
    }

    /// True when every entry of `A, B, C, D` is nonnegative, which makes the
    /// system externally positive.
    pub fn is_entrywise_nonnegative(&self) -> bool {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .all(|m| m.as_slice().iter().all(|&v| v >= 0.0))
    }
}

/// Finite-horizon vector signal, one sample per step.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    channels: usize,
    data: Vec<f64>,
}

impl Signal {
    pub fn zeros(channels: usize, len: usize) -> Self {
        Self {
            channels,
            data: vec![0.0; channels * len],
        }
    }

    pub fn from_steps<S: AsRef<[f64]>>(channels: usize, steps: &[S]) -> Result<Self> {
        let mut data = Vec::with_capacity(channels * steps.len());
        for (k, s) in steps.iter().enumerate() {
            let s = s.as_ref();
            if s.len() != channels {
                return Err(Error::dim(format!(
                    "sample {k} has {} channels, expected {channels}",
                    s.len()
                )));
            }
            data.extend_from_slice(s);
        }
        Ok(Self { channels, data })
    }

    /// Unit impulse at step 0 on every channel.
    pub fn impulse(channels: usize, len: usize) -> Self {
        let mut s = Self::zeros(channels, len);
        if len > 0 {
            s.data[..channels].fill(1.0);
        }
        s
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        if self.channels == 0 {
            0
        } else {
            self.data.len() / self.channels
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step(&self, k: usize) -> &[f64] {
        &self.data[k * self.channels..(k + 1) * self.channels]
    }

    pub fn step_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.channels..(k + 1) * self.channels]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `sqrt(sum_k |w(k)|^2)` over the stored horizon.
    pub fn l2_norm(&self) -> f64 {
        norm2(&self.data)
    }

    /// Membership in the nonnegative signal cone.
    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }

    /// Keeps samples `0..len`, zero-padding if the signal is shorter.
    pub fn truncated(&self, len: usize) -> Signal {
        let mut out = Signal::zeros(self.channels, len);
        let keep = len.min(self.len()) * self.channels;
        out.data[..keep].copy_from_slice(&self.data[..keep]);
        out
    }

    /// Stacks channels of equally long signals: `[a(k); b(k)]`.
    pub fn stack(parts: &[&Signal]) -> Result<Signal> {
        let len = parts.first().map_or(0, |p| p.len());
        if parts.iter().any(|p| p.len() != len) {
            return Err(Error::dim("stacked signals must have equal length"));
        }
        let channels = parts.iter().map(|p| p.channels).sum();
        let mut out = Signal::zeros(channels, len);
        for k in 0..len {
            let mut off = 0;
            for p in parts {
                out.step_mut(k)[off..off + p.channels].copy_from_slice(p.step(k));
                off += p.channels;
            }
        }
        Ok(out)
    }
}

/// Output and state trajectories of a simulation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `z(0..K)`.
    pub z: Signal,
    /// `x(0..K)`, the state at the same step as each output.
    pub x: Signal,
}

/// Runs the recursion for `horizon` steps from `x(0) = 0`.
pub fn simulate(sys: &StateSpace, w: &Signal, horizon: usize) -> Result<Trajectory> {
    if w.channels() != sys.inputs() {
        return Err(Error::dim(format!(
            "input has {} channels, system expects {}",
            w.channels(),
            sys.inputs()
        )));
    }
    if w.len() < horizon {
        return Err(Error::dim(format!(
            "input has {} samples, horizon is {horizon}",
            w.len()
        )));
    }
    let n = sys.states();
    let mut x = vec![0.0; n];
    let mut zs = Signal::zeros(sys.outputs(), horizon);
    let mut xs = Signal::zeros(n, horizon);
    for k in 0..horizon {
        let wk = w.step(k);
        xs.step_mut(k).copy_from_slice(&x);
        let cx = sys.c.mul_vec(&x);
        let dw = sys.d.mul_vec(wk);
        for (o, (p, q)) in zs.step_mut(k).iter_mut().zip(cx.iter().zip(&dw)) {
            *o = p + q;
        }
        let ax = sys.a.mul_vec(&x);
        let bw = sys.b.mul_vec(wk);
        x = ax.iter().zip(&bw).map(|(p, q)| p + q).collect();
    }
    Ok(Trajectory { z: zs, x: xs })
}

/// The N-step lifted quadruple.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSystem {
    pub order: usize,
    /// `A^N`
    pub a: Matrix,
    /// `[A^{N-1}B, .., AB, B]`
    pub b: Matrix,
    /// `[C; CA; ..; CA^{N-1}]`
    pub c: Matrix,
    /// Block lower-triangular Toeplitz matrix of Markov parameters.
    pub d: Matrix,
}

impl LiftedSystem {
    pub fn as_state_space(&self) -> StateSpace {
        StateSpace {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
        }
    }
}

pub fn lift(sys: &StateSpace, order: usize) -> Result<LiftedSystem> {
    if order == 0 {
        return Err(Error::InvalidOrder);
    }
    let (n, nw, nz) = (sys.states(), sys.inputs(), sys.outputs());
    let mut powers = Vec::with_capacity(order + 1);
    powers.push(Matrix::identity(n));
    for k in 1..=order {
        let next = &powers[k - 1] * &sys.a;
        powers.push(next);
    }
    let ca: Vec<Matrix> = powers[..order].iter().map(|p| &sys.c * p).collect();
    let ab: Vec<Matrix> = powers[..order].iter().map(|p| p * &sys.b).collect();

    let b_blocks: Vec<&Matrix> = (0..order).map(|j| &ab[order - 1 - j]).collect();
    let c_blocks: Vec<&Matrix> = ca.iter().collect();
    // Markov parameters h_k = C A^{k-1} B for k >= 1.
    let markov: Vec<Matrix> = (1..order).map(|k| &ca[k - 1] * &sys.b).collect();

    let mut d = Matrix::zeros(order * nz, order * nw);
    for i in 0..order {
        for j in 0..=i {
            let block = if i == j { &sys.d } else { &markov[i - j - 1] };
            d.set_block(i * nz, j * nw, block);
        }
    }
    Ok(LiftedSystem {
        order,
        a: powers[order].clone(),
        b: Matrix::hstack(&b_blocks),
        c: Matrix::vstack(&c_blocks),
        d,
    })
}

const IDENTITY_TOL: f64 = 1e-10;

/// Checks the four composition identities relating lifts of orders `n1`,
/// `n2` and `n1 + n2`:
///
/// * `A_{n2} A_{n1} = A_{n1+n2}`
/// * `[A_{n2} B_{n1}, B_{n2}] = B_{n1+n2}`
/// * `[C_{n1}; C_{n2} A_{n1}] = C_{n1+n2}`
/// * `[[D_{n1}, 0], [C_{n2} B_{n1}, D_{n2}]] = D_{n1+n2}`
///
/// Returns false for zero orders.
pub fn lifting_identities_check(sys: &StateSpace, n1: usize, n2: usize) -> bool {
    let (Ok(l1), Ok(l2), Ok(l12)) = (lift(sys, n1), lift(sys, n2), lift(sys, n1 + n2)) else {
        return false;
    };
    let a = &l2.a * &l1.a;
    let b = Matrix::hstack(&[&(&l2.a * &l1.b), &l2.b]);
    let c = Matrix::vstack(&[&l1.c, &(&l2.c * &l1.a)]);
    let zero = Matrix::zeros(l1.d.rows(), l2.d.cols());
    let d = Matrix::vstack(&[
        &Matrix::hstack(&[&l1.d, &zero]),
        &Matrix::hstack(&[&(&l2.c * &l1.b), &l2.d]),
    ]);
    a.max_abs_diff(&l12.a) <= IDENTITY_TOL
        && b.max_abs_diff(&l12.b) <= IDENTITY_TOL
        && c.max_abs_diff(&l12.c) <= IDENTITY_TOL
        && d.max_abs_diff(&l12.d) <= IDENTITY_TOL
}

/// Groups `order` consecutive samples into one lifted sample.
///
/// A length that is not a multiple of `order` is zero-padded at the tail,
/// which matches truncation semantics.
pub fn pack_signal(w: &Signal, order: usize) -> Result<Signal> {
    if order == 0 {
        return Err(Error::InvalidOrder);
    }
    let len = w.len().div_ceil(order);
    let padded = w.truncated(len * order);
    Ok(Signal {
        channels: w.channels * order,
        data: padded.data,
    })
}

/// Inverse of [`pack_signal`]; the result has `len * order` samples.
pub fn unpack_signal(packed: &Signal, channels: usize, order: usize) -> Result<Signal> {
    if order == 0 {
        return Err(Error::InvalidOrder);
    }
    if packed.channels != channels * order {
        return Err(Error::dim(format!(
            "packed signal has {} channels, expected {channels} x {order}",
            packed.channels
        )));
    }
    Ok(Signal {
        channels,
        data: packed.data.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, b: f64, c: f64, d: f64) -> StateSpace {
        StateSpace::new(
            Matrix::diag(&[a]),
            Matrix::diag(&[b]),
            Matrix::diag(&[c]),
            Matrix::diag(&[d]),
        )
        .unwrap()
    }

    #[test]
    fn dimension_checks() {
        let err = StateSpace::new(
            Matrix::zeros(2, 2),
            Matrix::zeros(3, 1),
            Matrix::zeros(1, 2),
            Matrix::zeros(1, 1),
        );
        assert!(matches!(err, Err(Error::DimensionError(_))));
        assert!(StateSpace::new(
            Matrix::zeros(2, 2),
            Matrix::zeros(2, 1),
            Matrix::zeros(1, 2),
            Matrix::zeros(2, 1),
        )
        .is_err());
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let sys = scalar(0.5, 1.0, 1.0, 0.3);
        let t = simulate(&sys, &Signal::zeros(1, 10), 10).unwrap();
        assert!(t.z.as_slice().iter().all(|&v| v == 0.0));
        assert!(t.x.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_delay_impulse() {
        let sys = scalar(0.0, 1.0, 1.0, 0.0);
        let t = simulate(&sys, &Signal::impulse(1, 5), 5).unwrap();
        assert_eq!(t.z.as_slice(), &[0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn channel_mismatch_rejected() {
        let sys = scalar(0.0, 1.0, 1.0, 0.0);
        assert!(matches!(
            simulate(&sys, &Signal::zeros(2, 5), 5),
            Err(Error::DimensionError(_))
        ));
        assert!(simulate(&sys, &Signal::zeros(1, 3), 5).is_err());
    }

    #[test]
    fn lift_order_one_is_identity() {
        let sys = scalar(0.3, 2.0, -1.0, 0.5);
        let l = lift(&sys, 1).unwrap();
        assert_eq!(l.as_state_space(), sys);
        assert_eq!(lift(&sys, 0), Err(Error::InvalidOrder));
    }

    #[test]
    fn lift_scalar_order_two() {
        let (a, b, c, d) = (0.3, 2.0, -1.5, 0.5);
        let l = lift(&scalar(a, b, c, d), 2).unwrap();
        assert_eq!(l.a.as_slice(), &[a * a]);
        assert_eq!(l.b.as_slice(), &[a * b, b]);
        assert_eq!(l.c.as_slice(), &[c, c * a]);
        assert_eq!(l.d.as_slice(), &[d, 0.0, c * b, d]);
    }

    #[test]
    fn pack_unpack() {
        let w = Signal::from_steps(2, &[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]]).unwrap();
        assert_eq!(pack_signal(&w, 1).unwrap(), w);
        let p = pack_signal(&w, 2).unwrap();
        assert_eq!((p.channels(), p.len()), (4, 2));
        assert_eq!(p.step(1), &[5.0, 6.0, 7.0, 8.0]);
        assert_eq!(unpack_signal(&p, 2, 2).unwrap(), w);
        assert!(p.is_nonnegative());

        let odd = w.truncated(3);
        let p = pack_signal(&odd, 2).unwrap();
        assert_eq!(p.step(1), &[5.0, 6.0, 0.0, 0.0]);
        assert_eq!(unpack_signal(&p, 2, 2).unwrap().truncated(3), odd);
        assert!(unpack_signal(&p, 3, 2).is_err());
    }

    #[test]
    fn static_gain_shapes() {
        let s = StateSpace::static_gain(Matrix::diag(&[2.0, 5.0]));
        assert_eq!((s.states(), s.inputs(), s.outputs()), (0, 2, 2));
        let l = lift(&s, 3).unwrap();
        assert_eq!(l.d.shape(), (6, 6));
        let t = simulate(&s, &Signal::impulse(2, 3), 3).unwrap();
        assert_eq!(t.z.step(0), &[2.0, 5.0]);
    }
}
