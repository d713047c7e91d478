//! Orthonormal DCT-II (forward) and DCT-III (inverse) along arbitrary axes.
//!
//! With `X[k] = α(k) Σₙ x[n] cos(π(2n+1)k / 2M)`, `α(0) = √(1/M)` and
//! `α(k≥1) = √(2/M)`, the forward transform is orthogonal, so the inverse is its
//! transpose and norms are preserved.
//!
//! Short axes (up to 32) apply the basis matrix directly; longer fibers use a
//! single length-`M` complex FFT (the even/odd reordering of Makhoul).
//! Multi-dimensional transforms are applied
//! separably, one axis at a time. [`dct_nd_naive`] evaluates the full nested
//! sum directly and exists as a reference for testing.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::par;
use crate::tensor::{next_index, Tensor};

/// Element budget for [`dct_nd_naive`]. The oracle is quadratic in size.
pub const NAIVE_MAX_ELEMENTS: usize = 10_000;

/// Coefficient tensor produced by [`dct_nd`]. Index 0 along a transformed axis is DC.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum(Tensor);

impl Spectrum {
    pub fn new(coefficients: Tensor) -> Self {
        Self(coefficients)
    }

    pub fn as_tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }

    pub fn shape(&self) -> &[usize] {
        self.0.shape()
    }

    pub fn rank(&self) -> usize {
        self.0.rank()
    }

    pub fn data(&self) -> &[f64] {
        self.0.data()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.0.sum_squares()
    }

    /// Zero-pads and/or truncates every axis independently to `shape`.
    pub fn resized(&self, shape: &[usize]) -> Result<Self> {
        self.0.resized_corner(shape).map(Self)
    }
}

impl From<Tensor> for Spectrum {
    fn from(t: Tensor) -> Self {
        Self(t)
    }
}

fn alpha(k: usize, n: usize) -> f64 {
    if k == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    }
}

/// Lengths up to this use a dense basis matrix instead of an FFT.
const DIRECT_MAX_LEN: usize = 32;

/// Per-length transform: dense basis for short axes, FFT otherwise.
enum Dct1d {
    Direct(DirectKernel),
    Fft(FftKernel),
}

struct DirectKernel {
    len: usize,
    /// `forward[k * n + m] = α(k) cos(π(2m+1)k / 2n)`
    forward: Vec<f64>,
    /// Transpose of `forward`.
    inverse: Vec<f64>,
}

struct FftKernel {
    len: usize,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
    /// `e^{-iπk/2M}` for `k < M`.
    twiddle: Vec<Complex<f64>>,
    alpha: Vec<f64>,
}

struct Workspace {
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
    real: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

impl Dct1d {
    fn new(planner: &mut FftPlanner<f64>, len: usize) -> Self {
        if len <= DIRECT_MAX_LEN {
            let mut forward = vec![0.0; len * len];
            let mut inverse = vec![0.0; len * len];
            for k in 0..len {
                let a = alpha(k, len);
                for m in 0..len {
                    let c = a * (PI * ((2 * m + 1) * k) as f64 / (2 * len) as f64).cos();
                    forward[k * len + m] = c;
                    inverse[m * len + k] = c;
                }
            }
            return Dct1d::Direct(DirectKernel {
                len,
                forward,
                inverse,
            });
        }
        let fft_forward = planner.plan_fft_forward(len);
        let fft_inverse = planner.plan_fft_inverse(len);
        let twiddle = (0..len)
            .map(|k| Complex::from_polar(1.0, -PI * k as f64 / (2.0 * len as f64)))
            .collect();
        let alpha = (0..len).map(|k| alpha(k, len)).collect();
        Dct1d::Fft(FftKernel {
            len,
            fft_forward,
            fft_inverse,
            twiddle,
            alpha,
        })
    }

    fn len(&self) -> usize {
        match self {
            Dct1d::Direct(d) => d.len,
            Dct1d::Fft(f) => f.len,
        }
    }

    fn workspace(&self) -> Workspace {
        match self {
            Dct1d::Direct(d) => Workspace {
                buf: Vec::new(),
                scratch: Vec::new(),
                real: vec![0.0; d.len * COLUMN_TILE.max(1)],
            },
            Dct1d::Fft(f) => {
                let scratch_len = f
                    .fft_forward
                    .get_inplace_scratch_len()
                    .max(f.fft_inverse.get_inplace_scratch_len());
                Workspace {
                    buf: vec![Complex::default(); f.len],
                    scratch: vec![Complex::default(); scratch_len],
                    real: vec![0.0; f.len * FIBER_TILE],
                }
            }
        }
    }

    /// Transforms one contiguous fiber in place.
    fn fiber(&self, x: &mut [f64], ws: &mut Workspace, dir: Direction) {
        match self {
            Dct1d::Direct(d) => {
                let n = d.len;
                let table = match dir {
                    Direction::Forward => &d.forward,
                    Direction::Inverse => &d.inverse,
                };
                let out = &mut ws.real[..n];
                for (k, o) in out.iter_mut().enumerate() {
                    let row = &table[k * n..(k + 1) * n];
                    *o = row.iter().zip(x.iter()).fold(0.0, |acc, (c, v)| acc + c * v);
                }
                x.copy_from_slice(out);
            }
            Dct1d::Fft(f) => match dir {
                Direction::Forward => f.forward(x, ws),
                Direction::Inverse => f.inverse(x, ws),
            },
        }
    }

    /// Transforms every column of a row-major `n × cols` block in place.
    fn columns(&self, block: &mut [f64], cols: usize, ws: &mut Workspace, dir: Direction) {
        let n = self.len();
        match self {
            Dct1d::Direct(d) => {
                let table = match dir {
                    Direction::Forward => &d.forward,
                    Direction::Inverse => &d.inverse,
                };
                for c0 in (0..cols).step_by(COLUMN_TILE) {
                    let w = COLUMN_TILE.min(cols - c0);
                    let out = &mut ws.real[..n * w];
                    out.fill(0.0);
                    for k in 0..n {
                        let dst = &mut out[k * w..(k + 1) * w];
                        for m in 0..n {
                            let c = table[k * n + m];
                            let src = &block[m * cols + c0..m * cols + c0 + w];
                            for (o, v) in dst.iter_mut().zip(src) {
                                *o += c * v;
                            }
                        }
                    }
                    for k in 0..n {
                        block[k * cols + c0..k * cols + c0 + w].copy_from_slice(&out[k * w..(k + 1) * w]);
                    }
                }
            }
            Dct1d::Fft(f) => {
                let mut fibers = std::mem::take(&mut ws.real);
                for c0 in (0..cols).step_by(FIBER_TILE) {
                    let w = FIBER_TILE.min(cols - c0);
                    for m in 0..n {
                        let row = &block[m * cols + c0..m * cols + c0 + w];
                        for (j, &v) in row.iter().enumerate() {
                            fibers[j * n + m] = v;
                        }
                    }
                    for fiber in fibers[..n * w].chunks_exact_mut(n) {
                        match dir {
                            Direction::Forward => f.forward(fiber, ws),
                            Direction::Inverse => f.inverse(fiber, ws),
                        }
                    }
                    for m in 0..n {
                        let row = &mut block[m * cols + c0..m * cols + c0 + w];
                        for (j, v) in row.iter_mut().enumerate() {
                            *v = fibers[j * n + m];
                        }
                    }
                }
                ws.real = fibers;
            }
        }
    }
}

/// Columns per pass for the dense kernel.
const COLUMN_TILE: usize = 256;
/// Fibers gathered per pass for the FFT kernel.
const FIBER_TILE: usize = 16;

impl FftKernel {
    fn forward(&self, x: &mut [f64], ws: &mut Workspace) {
        let n = self.len;
        let buf = &mut ws.buf;
        for i in 0..n.div_ceil(2) {
            buf[i] = Complex::new(x[2 * i], 0.0);
        }
        for i in 0..n / 2 {
            buf[n - 1 - i] = Complex::new(x[2 * i + 1], 0.0);
        }
        self.fft_forward.process_with_scratch(buf, &mut ws.scratch);
        for k in 0..n {
            x[k] = self.alpha[k] * (buf[k] * self.twiddle[k]).re;
        }
    }

    fn inverse(&self, x: &mut [f64], ws: &mut Workspace) {
        let n = self.len;
        let buf = &mut ws.buf;
        // Undo the α scaling, then rebuild the DFT of the reordered signal from
        // V[k] = e^{iπk/2M} (Y[k] - i Y[M-k]), with Y[M] = 0.
        buf[0] = Complex::new(x[0] / self.alpha[0], 0.0);
        for k in 1..n {
            let y = Complex::new(x[k] / self.alpha[k], -x[n - k] / self.alpha[n - k]);
            buf[k] = y * self.twiddle[k].conj();
        }
        self.fft_inverse.process_with_scratch(buf, &mut ws.scratch);
        let scale = 1.0 / n as f64;
        for i in 0..n.div_ceil(2) {
            x[2 * i] = buf[i].re * scale;
        }
        for i in 0..n / 2 {
            x[2 * i + 1] = buf[n - 1 - i].re * scale;
        }
    }
}

fn transform_1d(signal: &[f64], direction: Direction) -> Result<Vec<f64>> {
    if signal.is_empty() {
        return Err(Error::EmptySignal);
    }
    let mut out = signal.to_vec();
    if out.len() > 1 {
        let plan = Dct1d::new(&mut FftPlanner::new(), out.len());
        let mut ws = plan.workspace();
        plan.fiber(&mut out, &mut ws, direction);
    }
    Ok(out)
}

/// Orthonormal DCT-II of a 1-D signal.
pub fn dct_1d(signal: &[f64]) -> Result<Vec<f64>> {
    transform_1d(signal, Direction::Forward)
}

/// Orthonormal DCT-III, the exact inverse of [`dct_1d`].
pub fn idct_1d(coeffs: &[f64]) -> Result<Vec<f64>> {
    transform_1d(coeffs, Direction::Inverse)
}

fn validate_axes(axes: &[usize], rank: usize) -> Result<Vec<usize>> {
    let bad = || Error::BadAxis {
        axes: axes.to_vec(),
        rank,
    };
    if axes.is_empty() {
        return Err(bad());
    }
    let mut sorted = axes.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) || sorted.iter().any(|&a| a >= rank) {
        return Err(bad());
    }
    Ok(sorted)
}

fn transform_axis(data: &mut [f64], shape: &[usize], axis: usize, plan: &Dct1d, dir: Direction) {
    let n = shape[axis];
    if n == 1 {
        return;
    }
    let inner: usize = shape[axis + 1..].iter().product();
    if inner == 1 {
        let fibers_per_task = (8192 / n).max(1);
        par::for_each_chunk(
            data,
            n * fibers_per_task,
            || plan.workspace(),
            |ws, chunk| {
                for fiber in chunk.chunks_exact_mut(n) {
                    plan.fiber(fiber, ws, dir);
                }
            },
        );
    } else {
        // Each outer index owns a contiguous n × inner block whose columns are the fibers.
        par::for_each_chunk(
            data,
            n * inner,
            || plan.workspace(),
            |ws, block| plan.columns(block, inner, ws, dir),
        );
    }
}

fn transform_nd(t: &Tensor, axes: &[usize], dir: Direction) -> Result<Tensor> {
    let axes = validate_axes(axes, t.rank())?;
    let shape = t.shape().to_vec();
    let mut data = t.data().to_vec();
    let mut planner = FftPlanner::new();
    for &axis in &axes {
        if shape[axis] > 1 {
            let plan = Dct1d::new(&mut planner, shape[axis]);
            transform_axis(&mut data, &shape, axis, &plan, dir);
        }
    }
    Ok(Tensor::from_parts(shape, data))
}

/// Separable forward DCT over `axes` (each at most once, any order).
pub fn dct_nd(t: &Tensor, axes: &[usize]) -> Result<Spectrum> {
    transform_nd(t, axes, Direction::Forward).map(Spectrum)
}

/// Separable inverse DCT over `axes`.
pub fn idct_nd(s: &Spectrum, axes: &[usize]) -> Result<Tensor> {
    transform_nd(s.as_tensor(), axes, Direction::Inverse)
}

pub fn all_axes(rank: usize) -> Vec<usize> {
    (0..rank).collect()
}

/// Forward DCT over every axis.
pub fn dct_full(t: &Tensor) -> Spectrum {
    // All-axes sets are always valid.
    dct_nd(t, &all_axes(t.rank())).expect("full axis set is valid")
}

/// Inverse DCT over every axis.
pub fn idct_full(s: &Spectrum) -> Tensor {
    idct_nd(s, &all_axes(s.rank())).expect("full axis set is valid")
}

/// `table[k * n + m] = α(k) cos(π(2m+1)k / 2n)`
fn basis_table(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n * n);
    for k in 0..n {
        for m in 0..n {
            table.push(alpha(k, n) * (PI * (2 * m + 1) as f64 * k as f64 / (2.0 * n as f64)).cos());
        }
    }
    table
}

fn naive(t: &Tensor, inverse: bool) -> Result<Tensor> {
    if t.len() > NAIVE_MAX_ELEMENTS {
        return Err(Error::TooLarge(t.len()));
    }
    let shape = t.shape().to_vec();
    let tables: Vec<Vec<f64>> = shape.iter().map(|&n| basis_table(n)).collect();
    let mut out = Vec::with_capacity(t.len());
    let mut k = vec![0usize; shape.len()];
    loop {
        let mut acc = 0.0;
        let mut m = vec![0usize; shape.len()];
        for &x in t.data() {
            let mut w = 1.0;
            for d in 0..shape.len() {
                let n = shape[d];
                // forward: basis(k_d, m_d); inverse: basis(m_d, k_d) with output index k
                w *= if inverse {
                    tables[d][m[d] * n + k[d]]
                } else {
                    tables[d][k[d] * n + m[d]]
                };
            }
            acc += x * w;
            next_index(&mut m, &shape);
        }
        out.push(acc);
        if !next_index(&mut k, &shape) {
            break;
        }
    }
    Ok(Tensor::from_parts(shape, out))
}

/// Direct evaluation of the full nested DCT sum over every axis (oracle).
pub fn dct_nd_naive(t: &Tensor) -> Result<Spectrum> {
    naive(t, false).map(Spectrum)
}

/// Direct evaluation of the full nested inverse sum over every axis (oracle).
pub fn idct_nd_naive(s: &Spectrum) -> Result<Tensor> {
    naive(s.as_tensor(), true)
}
