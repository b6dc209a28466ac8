//! Grid discretization of `ε D_xx + c D_x + M_Ω + a` on `Ω = (−R, R)`.
//!
//! The drift is first-order upwind, with the direction tied to the sign of
//! `c`: forward differences for `c > 0` (ghost value at `+R` is zero),
//! backward differences for `c < 0` (ghost value at `−R` is zero). With
//! `ε > 0` the second difference is centered with both ghosts zero. Every
//! off-diagonal entry is then nonnegative, so the matrix is Metzler and
//! Perron theory applies; the vanishing ghost sits at the endpoint where the
//! principal eigenfunction of the continuum problem vanishes.
//!
//! Kernel weights are not renormalized after restriction to `Ω`: rows near
//! the boundary lose mass, and that defect is the truncated operator `M_Ω`.
//!
//! The dual operator is the exact transpose. Transposing a forward
//! difference gives `−c` times a backward difference and transposing the
//! convolution reflects the kernel, so the dual is stored with the two drift
//! couplings swapped and the weights reversed.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::banded::BandedLu;
use crate::kernel::{DiscreteKernel, Kernel, KernelError};

/// Largest size for which dense assembly is offered.
pub const DENSE_LIMIT: usize = 2048;
/// Convolution work `n (2K + 1)` above which the FFT path is used.
pub const FFT_THRESHOLD: usize = 1 << 22;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("operator::{op}: parameter `{name}` invalid ({value})")]
    InvalidParameter {
        op: &'static str,
        name: &'static str,
        value: f64,
    },
    #[error("operator::grid: need n ≥ 16 points, got {0}")]
    TooFewPoints(usize),
    #[error("operator::grid: 2R/h = {ratio} is not an integer")]
    IncommensurateSpacing { ratio: f64 },
    #[error("operator::apply: vector length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("operator::assemble: off-diagonal entry {value} < 0 at ({row}, {col})")]
    NotMetzler { row: usize, col: usize, value: f64 },
    #[error("operator::dense: n = {0} exceeds the dense limit {DENSE_LIMIT}")]
    TooLargeForDense(usize),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("operator::export_csv: {0}")]
    Io(#[from] std::io::Error),
}

/// Uniform grid `x_i = −R + i h`, `h = 2R/(n − 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    half_width: f64,
    n: usize,
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self, OperatorError> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(OperatorError::InvalidParameter {
                op: "grid",
                name: "R",
                value: half_width,
            });
        }
        if n < 16 {
            return Err(OperatorError::TooFewPoints(n));
        }
        Ok(Grid { half_width, n })
    }

    /// Grid with a prescribed spacing; `2R/h` must be an integer.
    pub fn with_spacing(half_width: f64, h: f64) -> Result<Self, OperatorError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(OperatorError::InvalidParameter {
                op: "grid",
                name: "h",
                value: h,
            });
        }
        let ratio = 2.0 * half_width / h;
        let cells = ratio.round();
        if (ratio - cells).abs() > 1e-9 * ratio.max(1.0) {
            return Err(OperatorError::IncommensurateSpacing { ratio });
        }
        Grid::new(half_width, cells as usize + 1)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    /// `x_i`, computed so that `x(n − 1 − i) = −x(i)` exactly.
    pub fn x(&self, i: usize) -> f64 {
        let m = (self.n - 1) as f64;
        (2.0 * i as f64 - m) * (self.half_width / m)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Index offset of this grid inside a larger grid of the same spacing.
    pub fn offset_in(&self, outer: &Grid) -> Option<usize> {
        if outer.n < self.n || !(outer.n - self.n).is_multiple_of(2) {
            return None;
        }
        let off = (outer.n - self.n) / 2;
        let rel = (outer.h() - self.h()).abs() / self.h();
        (rel < 1e-9).then_some(off)
    }
}

/// Which ghost values vanish.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryConvention {
    pub left_ghost_zero: bool,
    pub right_ghost_zero: bool,
}

impl fmt::Display for BoundaryConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |b: bool| if b { "zero" } else { "inactive" };
        write!(
            f,
            "left={} right={}",
            side(self.left_ghost_zero),
            side(self.right_ghost_zero)
        )
    }
}

/// How [`DiscreteOperator::apply`] evaluates the convolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConvolutionPath {
    /// Direct below [`FFT_THRESHOLD`], FFT above.
    #[default]
    Auto,
    Direct,
    Fft,
}

struct FftPlan {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex<f64>>,
}

/// The assembled operator, stored as a stencil.
///
/// Row `i` reads
/// `(A v)_i = Σ_j w_{i−j} v_j + d_i v_i + up · v_{i+1} + down · v_{i−1}`
/// with `d_i = −1 + diag_shift + a_i` and out-of-range `v` taken as zero.
#[derive(Clone)]
pub struct DiscreteOperator {
    grid: Grid,
    c: f64,
    epsilon: f64,
    dual: bool,
    weights: Vec<f64>,
    reach: usize,
    a_values: Vec<f64>,
    up: f64,
    down: f64,
    diag_shift: f64,
    path: ConvolutionPath,
    plan: Arc<OnceLock<FftPlan>>,
}

impl fmt::Debug for DiscreteOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteOperator")
            .field("grid", &self.grid)
            .field("c", &self.c)
            .field("epsilon", &self.epsilon)
            .field("dual", &self.dual)
            .field("reach", &self.reach)
            .finish_non_exhaustive()
    }
}

impl DiscreteOperator {
    /// Assembles the operator, evaluating `a` at the grid points.
    pub fn assemble(
        grid: Grid,
        kernel: &Kernel,
        c: f64,
        epsilon: f64,
        a: impl Fn(f64) -> f64,
        dual: bool,
    ) -> Result<Self, OperatorError> {
        let a_values = grid.points().into_iter().map(a).collect();
        let weights = kernel.discretize(grid.h())?;
        Self::from_parts(grid, &weights, c, epsilon, a_values, dual)
    }

    /// Assembles from precomputed kernel weights and potential values.
    pub fn from_parts(
        grid: Grid,
        kernel: &DiscreteKernel,
        c: f64,
        epsilon: f64,
        a_values: Vec<f64>,
        dual: bool,
    ) -> Result<Self, OperatorError> {
        let bad = |name, value| OperatorError::InvalidParameter {
            op: "assemble",
            name,
            value,
        };
        if !c.is_finite() {
            return Err(bad("c", c));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(bad("epsilon", epsilon));
        }
        let n = grid.n();
        if a_values.len() != n {
            return Err(OperatorError::LengthMismatch {
                expected: n,
                got: a_values.len(),
            });
        }
        if let Some(bad_a) = a_values.iter().find(|v| !v.is_finite()) {
            return Err(bad("a", *bad_a));
        }
        if (kernel.h - grid.h()).abs() > 1e-12 * grid.h() {
            return Err(bad("kernel.h", kernel.h));
        }
        let h = grid.h();
        let reach = kernel.reach.min(n - 1);
        let skip = kernel.reach - reach;
        let mut weights: Vec<f64> = kernel.weights[skip..kernel.weights.len() - skip].to_vec();
        // forward difference for c > 0 couples to i+1, backward for c < 0 to i−1
        let visc = epsilon / (h * h);
        let mut up = visc + if c > 0.0 { c / h } else { 0.0 };
        let mut down = visc + if c < 0.0 { -c / h } else { 0.0 };
        let diag_shift = -(c.abs() / h) - 2.0 * visc;
        if dual {
            weights.reverse();
            std::mem::swap(&mut up, &mut down);
        }
        let op = DiscreteOperator {
            grid,
            c,
            epsilon,
            dual,
            weights,
            reach,
            a_values,
            up,
            down,
            diag_shift,
            path: ConvolutionPath::Auto,
            plan: Arc::new(OnceLock::new()),
        };
        let (row, col, value) = op.min_off_diagonal();
        if value < 0.0 {
            return Err(OperatorError::NotMetzler { row, col, value });
        }
        Ok(op)
    }

    /// The exact transpose.
    pub fn transpose(&self) -> DiscreteOperator {
        let mut weights = self.weights.clone();
        weights.reverse();
        DiscreteOperator {
            dual: !self.dual,
            weights,
            up: self.down,
            down: self.up,
            plan: Arc::new(OnceLock::new()),
            ..self.clone()
        }
    }

    /// Same operator with a different potential.
    pub fn with_potential(&self, a_values: Vec<f64>) -> Result<DiscreteOperator, OperatorError> {
        if a_values.len() != self.n() {
            return Err(OperatorError::LengthMismatch {
                expected: self.n(),
                got: a_values.len(),
            });
        }
        Ok(DiscreteOperator {
            a_values,
            ..self.clone()
        })
    }

    pub fn with_path(mut self, path: ConvolutionPath) -> Self {
        self.path = path;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn is_dual(&self) -> bool {
        self.dual
    }

    pub fn reach(&self) -> usize {
        self.reach
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a_values
    }

    /// Kernel weights as applied in this operator (reversed for the dual).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn boundary_convention(&self) -> BoundaryConvention {
        let viscous = self.epsilon > 0.0;
        BoundaryConvention {
            left_ghost_zero: viscous || self.c < 0.0,
            right_ghost_zero: viscous || self.c > 0.0,
        }
    }

    /// `k = 1 + sup|a| + |c|/h + 2ε/h²`, which makes `A + kI` nonnegative.
    pub fn power_shift(&self) -> f64 {
        let h = self.grid.h();
        let sup_a = self.a_values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        1.0 + sup_a + self.c.abs() / h + 2.0 * self.epsilon / (h * h)
    }

    fn w(&self, k: i64) -> f64 {
        if k.unsigned_abs() as usize > self.reach {
            0.0
        } else {
            self.weights[(k + self.reach as i64) as usize]
        }
    }

    /// Matrix entry `A_ij`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let k = i as i64 - j as i64;
        let mut v = self.w(k);
        if i == j {
            v = self.w(0) + self.diagonal_rest(i);
        } else if j == i + 1 {
            v += self.up;
        } else if i == j + 1 {
            v += self.down;
        }
        v
    }

    fn diagonal_rest(&self, i: usize) -> f64 {
        -1.0 + self.diag_shift + self.a_values[i]
    }

    /// Lower and upper bandwidths of the assembled matrix.
    pub fn bandwidths(&self) -> (usize, usize) {
        let lo = if self.down != 0.0 {
            self.reach.max(1)
        } else {
            self.reach
        };
        let hi = if self.up != 0.0 { self.reach.max(1) } else { self.reach };
        (lo.min(self.n() - 1), hi.min(self.n() - 1))
    }

    /// Smallest off-diagonal entry and its position.
    pub fn min_off_diagonal(&self) -> (usize, usize, f64) {
        let n = self.n() as i64;
        let mut best = (0usize, 1usize, f64::INFINITY);
        let span = self.reach.max(1) as i64;
        for k in -span..=span {
            if k == 0 || k.abs() >= n {
                continue;
            }
            let v = self.w(k) + if k == -1 { self.up } else { 0.0 } + if k == 1 { self.down } else { 0.0 };
            if v < best.2 {
                let (i, j) = if k > 0 { (k as usize, 0) } else { (0, (-k) as usize) };
                best = (i, j, v);
            }
        }
        if best.2 == f64::INFINITY {
            best.2 = 0.0;
        }
        best
    }

    /// `A v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, OperatorError> {
        let mut out = vec![0.0; self.n()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    /// `A v` written into `out`.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<(), OperatorError> {
        let n = self.n();
        if v.len() != n {
            return Err(OperatorError::LengthMismatch {
                expected: n,
                got: v.len(),
            });
        }
        if out.len() != n {
            return Err(OperatorError::LengthMismatch {
                expected: n,
                got: out.len(),
            });
        }
        self.transport_into(v, out);
        for i in 0..n {
            out[i] += self.a_values[i] * v[i];
        }
        Ok(())
    }

    /// `(ε D_xx + c D_x + M_Ω) v`, i.e. `A v` without the potential.
    pub fn apply_transport(&self, v: &[f64]) -> Result<Vec<f64>, OperatorError> {
        let n = self.n();
        if v.len() != n {
            return Err(OperatorError::LengthMismatch {
                expected: n,
                got: v.len(),
            });
        }
        let mut out = vec![0.0; n];
        self.transport_into(v, &mut out);
        Ok(out)
    }

    fn use_fft(&self) -> bool {
        match self.path {
            ConvolutionPath::Direct => false,
            ConvolutionPath::Fft => true,
            ConvolutionPath::Auto => self.n() * self.weights.len() > FFT_THRESHOLD,
        }
    }

    fn transport_into(&self, v: &[f64], out: &mut [f64]) {
        if self.use_fft() {
            self.convolve_fft(v, out);
        } else {
            self.convolve_direct(v, out);
        }
        let n = self.n();
        let d = -1.0 + self.diag_shift;
        for i in 0..n {
            let mut acc = out[i] + d * v[i];
            if i + 1 < n {
                acc += self.up * v[i + 1];
            }
            if i > 0 {
                acc += self.down * v[i - 1];
            }
            out[i] = acc;
        }
    }

    /// `out_i = Σ_j w_{i−j} v_j`, ascending `j`.
    fn convolve_direct(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n();
        let r = self.reach;
        for (i, slot) in out.iter_mut().enumerate() {
            let j0 = i.saturating_sub(r);
            let j1 = (i + r).min(n - 1);
            let mut acc = 0.0;
            for j in j0..=j1 {
                acc += self.weights[i + r - j] * v[j];
            }
            *slot = acc;
        }
    }

    fn plan(&self) -> &FftPlan {
        self.plan.get_or_init(|| {
            let len = self.n() + self.weights.len() - 1;
            let size = len.next_power_of_two();
            let mut planner = FftPlanner::<f64>::new();
            let forward = planner.plan_fft_forward(size);
            let inverse = planner.plan_fft_inverse(size);
            let mut spectrum = vec![Complex::new(0.0, 0.0); size];
            for (k, w) in self.weights.iter().enumerate() {
                spectrum[k].re = *w;
            }
            forward.process(&mut spectrum);
            FftPlan {
                size,
                forward,
                inverse,
                spectrum,
            }
        })
    }

    /// Zero-padded cyclic convolution; the linear convolution of `v` with the
    /// weights, read from offset `reach`.
    fn convolve_fft(&self, v: &[f64], out: &mut [f64]) {
        let plan = self.plan();
        let mut buf = vec![Complex::new(0.0, 0.0); plan.size];
        for (slot, x) in buf.iter_mut().zip(v) {
            slot.re = *x;
        }
        plan.forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&plan.spectrum) {
            *b *= s;
        }
        plan.inverse.process(&mut buf);
        let scale = 1.0 / plan.size as f64;
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = buf[i + self.reach].re * scale;
        }
    }

    /// Row-major dense matrix; only for `n ≤ DENSE_LIMIT`.
    pub fn dense(&self) -> Result<Vec<Vec<f64>>, OperatorError> {
        let n = self.n();
        if n > DENSE_LIMIT {
            return Err(OperatorError::TooLargeForDense(n));
        }
        Ok((0..n).map(|i| (0..n).map(|j| self.entry(i, j)).collect()).collect())
    }

    /// Dense matrix as `nalgebra` storage.
    pub fn dense_matrix(&self) -> Result<nalgebra::DMatrix<f64>, OperatorError> {
        let n = self.n();
        if n > DENSE_LIMIT {
            return Err(OperatorError::TooLargeForDense(n));
        }
        Ok(nalgebra::DMatrix::from_fn(n, n, |i, j| self.entry(i, j)))
    }

    /// `σ I − A` in banded storage, ready to factor.
    pub fn shifted_band(&self, sigma: f64) -> BandedLu {
        let n = self.n();
        let (lo, hi) = self.bandwidths();
        let mut m = BandedLu::zeros(n, lo, hi);
        for i in 0..n {
            for j in i.saturating_sub(lo)..=(i + hi).min(n - 1) {
                let a = self.entry(i, j);
                m.set(i, j, if i == j { sigma - a } else { -a });
            }
        }
        m
    }

    /// Largest row sum: an upper bound on the Perron root of a Metzler matrix.
    pub fn max_row_sum(&self) -> f64 {
        let ones = vec![1.0; self.n()];
        let mut out = vec![0.0; self.n()];
        self.transport_into(&ones, &mut out);
        out.iter()
            .zip(&self.a_values)
            .map(|(t, a)| t + a)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Writes the dense matrix as header-free row-major CSV.
    pub fn export_csv(&self, path: &Path) -> Result<(), OperatorError> {
        let rows = self.dense()?;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for row in rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn asym_kernel() -> Kernel {
        let zs: Vec<f64> = (0..=40).map(|i| -1.0 + i as f64 * 0.05).collect();
        let ds: Vec<f64> = zs.iter().map(|&z| (1.0 - z * z) * (1.0 + 0.6 * z)).collect();
        Kernel::tabulated(zs, ds).unwrap()
    }

    fn op(c: f64, eps: f64, dual: bool) -> DiscreteOperator {
        let grid = Grid::new(5.0, 101).unwrap();
        DiscreteOperator::assemble(grid, &asym_kernel(), c, eps, |x| (x * 0.7).sin(), dual).unwrap()
    }

    #[test]
    fn grid_is_exactly_symmetric() {
        let g = Grid::new(3.7, 1001).unwrap();
        for i in 0..g.n() {
            assert_eq!(g.x(i), -g.x(g.n() - 1 - i));
        }
        assert_eq!(g.x(0), -3.7);
        assert_eq!(g.x(1000), 3.7);
        assert!(Grid::new(1.0, 8).is_err());
        assert!(Grid::with_spacing(1.0, 0.3).is_err());
        assert_eq!(Grid::with_spacing(8.0, 0.05).unwrap().n(), 321);
    }

    #[test]
    fn constant_vector_interior_and_boundary() {
        let grid = Grid::new(10.0, 401).unwrap();
        let k = Kernel::uniform(1.0).unwrap();
        let a = DiscreteOperator::assemble(grid, &k, 0.0, 0.0, |_| 0.0, false).unwrap();
        let out = a.apply(&vec![1.0; grid.n()]).unwrap();
        for i in 0..grid.n() {
            if grid.x(i).abs() < 10.0 - 1.0 - 1e-9 {
                assert!(out[i].abs() < 1e-12, "row {i}: {}", out[i]);
            }
        }
        assert!(out[0] < 0.0 && out[grid.n() - 1] < 0.0 && out[5] < 0.0);
    }

    #[test]
    fn metzler_for_every_sign() {
        for c in [-1.3, 0.0, 0.4] {
            for eps in [0.0, 0.01] {
                for dual in [false, true] {
                    let a = op(c, eps, dual);
                    let dense = a.dense().unwrap();
                    for (i, row) in dense.iter().enumerate() {
                        for (j, v) in row.iter().enumerate() {
                            if i != j {
                                assert!(*v >= 0.0);
                            }
                        }
                    }
                    assert!(a.min_off_diagonal().2 >= 0.0);
                }
            }
        }
    }

    #[test]
    fn dual_is_exact_transpose() {
        for c in [-0.7, 0.0, 0.7] {
            for eps in [0.0, 0.02] {
                let a = op(c, eps, false).dense().unwrap();
                let d = op(c, eps, true).dense().unwrap();
                let t = op(c, eps, false).transpose().dense().unwrap();
                for i in 0..a.len() {
                    for j in 0..a.len() {
                        assert_eq!(d[i][j].to_bits(), a[j][i].to_bits());
                        assert_eq!(t[i][j].to_bits(), a[j][i].to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn apply_matches_columns() {
        let a = op(0.7, 0.01, false);
        let dense = a.dense().unwrap();
        let n = a.n();
        for j in [0, 1, 50, n - 2, n - 1] {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = a.apply(&e).unwrap();
            for i in 0..n {
                assert!((col[i] - dense[i][j]).abs() <= 1e-12);
            }
        }
        assert!(a.apply(&vec![0.0; n]).unwrap().iter().all(|v| *v == 0.0));
        assert!(a.apply(&[1.0]).is_err());
    }

    #[test]
    fn upwind_ghosts() {
        assert_eq!(
            op(1.0, 0.0, false).boundary_convention(),
            BoundaryConvention {
                left_ghost_zero: false,
                right_ghost_zero: true
            }
        );
        assert_eq!(
            op(-1.0, 0.0, false).boundary_convention(),
            BoundaryConvention {
                left_ghost_zero: true,
                right_ghost_zero: false
            }
        );
        assert_eq!(
            op(0.0, 0.1, false).boundary_convention(),
            BoundaryConvention {
                left_ghost_zero: true,
                right_ghost_zero: true
            }
        );
    }

    #[test]
    fn second_difference_exact_on_quadratics() {
        let grid = Grid::new(2.0, 81).unwrap();
        let k = Kernel::uniform(0.3).unwrap();
        let eps = 0.05;
        let with = DiscreteOperator::assemble(grid, &k, 0.0, eps, |_| 0.0, false).unwrap();
        let without = DiscreteOperator::assemble(grid, &k, 0.0, 0.0, |_| 0.0, false).unwrap();
        let v: Vec<f64> = grid.points().iter().map(|x| x * x).collect();
        let a = with.apply(&v).unwrap();
        let b = without.apply(&v).unwrap();
        for i in 1..grid.n() - 1 {
            assert!((a[i] - b[i] - 2.0 * eps).abs() < 1e-9, "row {i}");
        }
    }

    #[test]
    fn upwind_first_order() {
        let k = Kernel::uniform(0.5).unwrap();
        let mut errs = Vec::new();
        for n in [201, 401, 801] {
            let grid = Grid::new(3.0, n).unwrap();
            let with = DiscreteOperator::assemble(grid, &k, 1.0, 0.0, |_| 0.0, false).unwrap();
            let without = DiscreteOperator::assemble(grid, &k, 0.0, 0.0, |_| 0.0, false).unwrap();
            let xs = grid.points();
            let v: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
            let a = with.apply(&v).unwrap();
            let b = without.apply(&v).unwrap();
            let err = (0..n - 1)
                .map(|i| (a[i] - b[i] - xs[i].cos()).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((rate - 1.0).abs() < 0.1, "rate {rate}");
        }
    }

    #[test]
    fn fft_agrees_with_direct() {
        let grid = Grid::new(20.0, 1024).unwrap();
        let k = Kernel::gaussian(1.0, 8.0).unwrap();
        let a = DiscreteOperator::assemble(grid, &k, 0.3, 0.0, |x| x.cos(), false).unwrap();
        let direct = a.clone().with_path(ConvolutionPath::Direct);
        let fft = a.with_path(ConvolutionPath::Fft);
        let v: Vec<f64> = (0..1024).map(|i| ((i * 7919) % 1013) as f64 / 1013.0).collect();
        let sup = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let x = direct.apply(&v).unwrap();
        let y = fft.apply(&v).unwrap();
        for i in 0..1024 {
            assert!((x[i] - y[i]).abs() <= 1e-10 * sup);
        }
    }

    #[test]
    fn band_matches_dense() {
        let a = op(-0.4, 0.0, true);
        let band = a.shifted_band(3.0);
        let dense = a.dense().unwrap();
        for i in 0..a.n() {
            for j in 0..a.n() {
                let expected = if i == j { 3.0 - dense[i][j] } else { -dense[i][j] };
                assert_eq!(band.get(i, j), expected);
            }
        }
    }

    #[test]
    fn csv_export_round_trip() {
        let a = op(0.2, 0.0, false);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        a.export_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let first: Vec<f64> = text
            .lines()
            .next()
            .unwrap()
            .split(',')
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(first.len(), a.n());
        assert_eq!(first[1], a.entry(0, 1));
    }
}
