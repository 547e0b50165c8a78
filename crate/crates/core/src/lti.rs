//! SISO transfer functions, their composition, and controllable canonical realizations.
//!
//! Polynomials are coefficient lists in descending powers of `s`. Compositions keep raw
//! coefficients and never cancel common factors; [`near_common_roots`] reports candidates.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::sim::Plant;

/// Product of two descending-power polynomials.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Sum of two descending-power polynomials (aligned at the constant term).
pub fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, v) in a.iter().rev().enumerate() {
        out[n - 1 - i] += v;
    }
    for (i, v) in b.iter().rev().enumerate() {
        out[n - 1 - i] += v;
    }
    out
}

/// Horner evaluation at a real point.
pub fn poly_eval(p: &[f64], s: f64) -> f64 {
    p.iter().fold(0.0, |acc, c| acc * s + c)
}

fn strip_leading_zeros(p: &[f64]) -> &[f64] {
    let first = p.iter().position(|c| *c != 0.0).unwrap_or(p.len());
    &p[first..]
}

/// Roots of a polynomial (eigenvalues of its companion matrix).
pub fn poly_roots(p: &[f64]) -> Vec<Complex<f64>> {
    let p = strip_leading_zeros(p);
    if p.len() < 2 {
        return Vec::new();
    }
    let n = p.len() - 1;
    let lead = p[0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -p[j + 1] / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

/// Routh–Hurwitz test: true when every root has a strictly negative real part.
pub fn is_hurwitz(p: &[f64]) -> bool {
    let p = strip_leading_zeros(p);
    if p.is_empty() {
        return false;
    }
    let sgn = if p[0] > 0.0 { 1.0 } else { -1.0 };
    let p: Vec<f64> = p.iter().map(|c| c * sgn).collect();
    let n = p.len();
    if n == 1 {
        return true;
    }
    if p.iter().any(|c| *c <= 0.0) {
        return false;
    }
    let width = n.div_ceil(2);
    let mut prev: Vec<f64> = p.iter().step_by(2).copied().collect();
    let mut cur: Vec<f64> = p.iter().skip(1).step_by(2).copied().collect();
    prev.resize(width, 0.0);
    cur.resize(width, 0.0);
    for _ in 2..n {
        if cur[0] <= 0.0 {
            return false;
        }
        let mut next = vec![0.0; width];
        for j in 0..width - 1 {
            next[j] = (cur[0] * prev[j + 1] - prev[0] * cur[j + 1]) / cur[0];
        }
        prev = cur;
        cur = next;
    }
    cur[0] > 0.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TransferFunction {
    /// Validates finiteness and a non-zero leading denominator coefficient.
    /// Improper ratios are representable; operations that need properness check it.
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if den.is_empty() || den[0] == 0.0 {
            return Err(Error::InvalidTransferFunction(String::from(
                "leading denominator coefficient must be non-zero",
            )));
        }
        if num.is_empty() {
            return Err(Error::InvalidTransferFunction(String::from(
                "numerator is empty",
            )));
        }
        if num.iter().chain(&den).any(|c| !c.is_finite()) {
            return Err(Error::InvalidTransferFunction(String::from(
                "coefficients must be finite",
            )));
        }
        Ok(TransferFunction { num, den })
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn num_degree(&self) -> Result<usize> {
        let n = strip_leading_zeros(&self.num);
        if n.is_empty() {
            return Err(Error::InvalidTransferFunction(String::from(
                "numerator is identically zero",
            )));
        }
        Ok(n.len() - 1)
    }

    pub fn den_degree(&self) -> usize {
        self.den.len() - 1
    }

    /// Evaluates at a real `s` (DC gain at `s = 0`).
    pub fn eval(&self, s: f64) -> f64 {
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    pub fn dc_gain(&self) -> f64 {
        self.eval(0.0)
    }

    pub fn poles(&self) -> Vec<Complex<f64>> {
        poly_roots(&self.den)
    }

    pub fn zeros(&self) -> Vec<Complex<f64>> {
        poly_roots(&self.num)
    }

    pub fn is_proper(&self) -> bool {
        self.num_degree().is_ok_and(|d| d <= self.den_degree())
    }

    /// The launch-vehicle gimbal-to-pitch benchmark model used for relative-degree
    /// identification, with coefficients exactly as tabulated.
    pub fn lv_prd_bench() -> Self {
        TransferFunction {
            num: vec![-117.1, -13.55, -16870.0],
            den: vec![0.2, 3.425, 72.39, 679.0, 6364.0, 22230.0, -2557.0, -9000.0],
        }
    }
}

/// Denominator degree minus numerator degree (leading zero numerator coefficients ignored).
pub fn relative_degree(tf: &TransferFunction) -> Result<usize> {
    let nd = tf.num_degree()?;
    let dd = tf.den_degree();
    if nd > dd {
        return Err(Error::Improper {
            num_degree: nd,
            den_degree: dd,
        });
    }
    Ok(dd - nd)
}

/// `g2 · g1` (signal flows through `g1` then `g2`).
pub fn tf_series(g1: &TransferFunction, g2: &TransferFunction) -> TransferFunction {
    TransferFunction {
        num: poly_mul(&g1.num, &g2.num),
        den: poly_mul(&g1.den, &g2.den),
    }
}

/// `g1 + g2` over the common denominator `den1 · den2`.
pub fn tf_parallel(g1: &TransferFunction, g2: &TransferFunction) -> TransferFunction {
    TransferFunction {
        num: poly_add(&poly_mul(&g1.num, &g2.den), &poly_mul(&g2.num, &g1.den)),
        den: poly_mul(&g1.den, &g2.den),
    }
}

/// Pairs of (pole, zero) closer than `tol`: candidates for cancellation the composition
/// operators deliberately do not perform.
pub fn near_common_roots(tf: &TransferFunction, tol: f64) -> Vec<(Complex<f64>, Complex<f64>)> {
    let zeros = tf.zeros();
    let mut out = Vec::new();
    for p in tf.poles() {
        for z in &zeros {
            if crate::math::sqrt((p.re - z.re) * (p.re - z.re) + (p.im - z.im) * (p.im - z.im)) <= tol {
                out.push((p, *z));
            }
        }
    }
    out
}

/// Single-input single-output state-space model `ẋ = Ax + Bu`, `y = Cx + Du`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    pub d: f64,
}

impl StateSpace {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        let n = self.order();
        for i in 0..n {
            let mut acc = self.b[i] * u;
            for j in 0..n {
                acc += self.a[(i, j)] * x[j];
            }
            dx[i] = acc;
        }
    }

    pub fn output(&self, x: &[f64], u: f64) -> f64 {
        let mut y = self.d * u;
        for (ci, xi) in self.c.iter().zip(x) {
            y += ci * xi;
        }
        y
    }

    /// `C A^k x` for `k = 0..count`: the output derivatives `y^(k)` while `k` is below the
    /// relative degree (the input does not enter them).
    pub fn output_derivatives(&self, x: &[f64], count: usize) -> Vec<f64> {
        let mut v = DVector::from_column_slice(x);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push((&self.c * &v)[0]);
            v = &self.a * v;
        }
        out
    }

    /// `C A^k B` for `k = 0..count`.
    pub fn markov_parameters(&self, count: usize) -> Vec<f64> {
        let mut v = self.b.clone();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push((&self.c * &v)[0]);
            v = &self.a * v;
        }
        out
    }
}

/// Controllable canonical realization (companion last row, `B = e_n`).
/// The denominator is normalized to monic here only.
pub fn to_state_space(tf: &TransferFunction) -> Result<StateSpace> {
    let nd = tf.num_degree()?;
    let n = tf.den_degree();
    if nd > n {
        return Err(Error::Improper {
            num_degree: nd,
            den_degree: n,
        });
    }
    let lead = tf.den[0];
    let a_coef: Vec<f64> = tf.den.iter().map(|c| c / lead).collect();
    let mut b_coef = vec![0.0; n + 1];
    let num = strip_leading_zeros(&tf.num);
    for (i, c) in num.iter().rev().enumerate() {
        b_coef[n - i] = c / lead;
    }
    let d = b_coef[0];
    // strictly proper remainder, ascending powers
    let c_asc: Vec<f64> = (0..n).map(|k| b_coef[n - k] - d * a_coef[n - k]).collect();

    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    for k in 0..n {
        a[(n - 1, k)] = -a_coef[n - k];
    }
    let mut b = DVector::<f64>::zeros(n);
    if n > 0 {
        b[n - 1] = 1.0;
    }
    let c = RowDVector::from_vec(c_asc);
    Ok(StateSpace { a, b, c, d })
}

/// A strictly proper transfer function driven as a simulation plant.
#[derive(Debug, Clone)]
pub struct LtiPlant {
    ss: StateSpace,
}

impl LtiPlant {
    pub fn new(tf: &TransferFunction) -> Result<Self> {
        let ss = to_state_space(tf)?;
        if ss.d != 0.0 {
            return Err(Error::Unsupported(format!(
                "plant with direct feedthrough (D = {}) cannot close a loop without an algebraic loop",
                ss.d
            )));
        }
        Ok(LtiPlant { ss })
    }

    pub fn state_space(&self) -> &StateSpace {
        &self.ss
    }
}

impl Plant for LtiPlant {
    fn state_dim(&self) -> usize {
        self.ss.order()
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn derivative(&self, x: &[f64], u: &[f64], _t: f64, dx: &mut [f64]) {
        self.ss.derivative(x, u[0], dx);
    }

    fn output(&self, x: &[f64], _t: f64, y: &mut [f64]) {
        y[0] = self.ss.output(x, 0.0);
    }

    fn output_names(&self) -> Vec<String> {
        vec![String::from("y")]
    }
}
