//! One-dimensional real trigonometric transforms that diagonalise the
//! dimensionless second-difference operator `(Lx)_j = 2x_j - x_{j-1} - x_{j+1}`
//! under each ghost-node convention:
//!
//! | family        | ghost rule                          | basis                         | eigenvalue `k`              |
//! |---------------|-------------------------------------|-------------------------------|-----------------------------|
//! | `SineI`       | `x_{-1} = x_m = 0`                  | `sin(pi (j+1)(k+1)/(m+1))`    | `2(1 - cos(pi (k+1)/(m+1)))`|
//! | `CosineEven`  | `x_{-1} = x_0`, `x_m = x_{m-1}`     | `cos(pi k (j+1/2)/m)`         | `2(1 - cos(pi k/m))`        |
//! | `FourierReal` | `x_{-1} = x_{m-1}`, `x_m = x_0`     | `cas(2 pi j k/m)`             | `2(1 - cos(2 pi k/m))`      |
//!
//! `forward` evaluates the unnormalised sums `c_k = sum_j x_j v_k(j)`; all
//! scaling sits on `inverse`, which uses `2/(m+1)` for `SineI`, `1/m` for
//! `FourierReal` (Hartley), and `1/m` on `k = 0`, `2/m` elsewhere for
//! `CosineEven`.
//!
//! Every transform is computed in `O(m log m)` through one complex FFT: of
//! the odd extension for `SineI`, of the even/odd reordering of the input
//! (Makhoul) for `CosineEven`, and of the input itself for `FourierReal`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::Bc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransformFamily {
    /// Discrete sine transform, type I (homogeneous Dirichlet).
    SineI,
    /// Discrete cosine transform, type II (homogeneous Neumann, half-cell reflection).
    CosineEven,
    /// Real discrete Hartley transform (periodic).
    FourierReal,
}

impl TransformFamily {
    pub fn for_bc(bc: Bc) -> Self {
        match bc {
            Bc::DirichletZero => Self::SineI,
            Bc::NeumannZero => Self::CosineEven,
            Bc::Periodic => Self::FourierReal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TransformKind {
    family: TransformFamily,
    len: usize,
}

impl TransformKind {
    pub fn new(family: TransformFamily, len: usize) -> Result<Self> {
        if len < crate::grid::MIN_NODES_PER_AXIS {
            return Err(Error::InvalidArgument(format!(
                "transform length {len} below minimum {}",
                crate::grid::MIN_NODES_PER_AXIS
            )));
        }
        Ok(Self { family, len })
    }

    pub fn family(&self) -> TransformFamily {
        self.family
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Eigenvalues of the dimensionless 1D second-difference operator, in the
/// coefficient order produced by [`forward`].
#[derive(Clone, Debug, PartialEq)]
pub struct EigenTable {
    kind: TransformKind,
    values: Vec<f64>,
}

impl EigenTable {
    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn laplacian_eigenvalues(kind: TransformKind) -> EigenTable {
    let m = kind.len;
    let values = (0..m)
        .map(|k| {
            let theta = match kind.family {
                TransformFamily::SineI => (k + 1) as f64 * PI / (m + 1) as f64,
                TransformFamily::CosineEven => k as f64 * PI / m as f64,
                TransformFamily::FourierReal => 2.0 * PI * k as f64 / m as f64,
            };
            // 2(1 - cos t) = 4 sin^2(t/2), exact zero at t = 0
            4.0 * (0.5 * theta).sin().powi(2)
        })
        .collect();
    EigenTable { kind, values }
}

/// A planned transform. Cheap to clone; plans are shared.
#[derive(Clone)]
pub struct Transform {
    kind: TransformKind,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// `exp(-i pi k / 2m)` for the cosine family.
    twiddle: Vec<Complex64>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("kind", &self.kind).finish()
    }
}

/// Scratch buffers for one transform; reuse across calls on one thread.
pub struct TransformScratch {
    buf: Vec<Complex64>,
    fft_scratch: Vec<Complex64>,
}

impl Transform {
    pub fn new(kind: TransformKind) -> Self {
        let m = kind.len;
        let n = match kind.family {
            TransformFamily::SineI => 2 * (m + 1),
            TransformFamily::CosineEven | TransformFamily::FourierReal => m,
        };
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let twiddle = match kind.family {
            TransformFamily::CosineEven => (0..m)
                .map(|k| Complex64::from_polar(1.0, -PI * k as f64 / (2 * m) as f64))
                .collect(),
            _ => Vec::new(),
        };
        Self {
            kind,
            fft,
            ifft,
            twiddle,
        }
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn scratch(&self) -> TransformScratch {
        let n = self.fft.len();
        TransformScratch {
            buf: vec![Complex64::default(); n],
            fft_scratch: vec![
                Complex64::default();
                self.fft
                    .get_inplace_scratch_len()
                    .max(self.ifft.get_inplace_scratch_len())
            ],
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.kind.len {
            return Err(Error::LengthMismatch {
                expected: self.kind.len,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// In-place forward transform. Panics on length mismatch; see [`forward`]
    /// for the checked version.
    pub fn forward_in_place(&self, x: &mut [f64], s: &mut TransformScratch) {
        let m = self.kind.len;
        assert_eq!(x.len(), m);
        let buf = &mut s.buf;
        match self.kind.family {
            TransformFamily::SineI => {
                // odd extension of length 2(m+1)
                buf.iter_mut().for_each(|c| *c = Complex64::default());
                for j in 0..m {
                    buf[j + 1] = Complex64::new(x[j], 0.0);
                    buf[2 * m + 1 - j] = Complex64::new(-x[j], 0.0);
                }
                self.fft.process_with_scratch(buf, &mut s.fft_scratch);
                for k in 0..m {
                    x[k] = -0.5 * buf[k + 1].im;
                }
            }
            TransformFamily::CosineEven => {
                // even samples ascending, odd samples descending
                for j in 0..m.div_ceil(2) {
                    buf[j] = Complex64::new(x[2 * j], 0.0);
                }
                for j in 0..m / 2 {
                    buf[m - 1 - j] = Complex64::new(x[2 * j + 1], 0.0);
                }
                self.fft.process_with_scratch(buf, &mut s.fft_scratch);
                for k in 0..m {
                    x[k] = (self.twiddle[k] * buf[k]).re;
                }
            }
            TransformFamily::FourierReal => {
                for j in 0..m {
                    buf[j] = Complex64::new(x[j], 0.0);
                }
                self.fft.process_with_scratch(buf, &mut s.fft_scratch);
                for k in 0..m {
                    x[k] = buf[k].re - buf[k].im;
                }
            }
        }
    }

    /// In-place inverse transform; exact inverse of [`Transform::forward_in_place`].
    pub fn inverse_in_place(&self, c: &mut [f64], s: &mut TransformScratch) {
        let m = self.kind.len;
        assert_eq!(c.len(), m);
        match self.kind.family {
            TransformFamily::SineI => {
                // DST-I is its own inverse up to 2/(m+1)
                self.forward_in_place(c, s);
                let scale = 2.0 / (m + 1) as f64;
                c.iter_mut().for_each(|v| *v *= scale);
            }
            TransformFamily::FourierReal => {
                self.forward_in_place(c, s);
                let scale = 1.0 / m as f64;
                c.iter_mut().for_each(|v| *v *= scale);
            }
            TransformFamily::CosineEven => {
                // spectrum of the reordered sequence: w_k V_k = c_k - i c_{m-k}
                let buf = &mut s.buf;
                buf[0] = Complex64::new(c[0], 0.0);
                for k in 1..m {
                    buf[k] = self.twiddle[k].conj() * Complex64::new(c[k], -c[m - k]);
                }
                self.ifft.process_with_scratch(buf, &mut s.fft_scratch);
                let scale = 1.0 / m as f64;
                for j in 0..m.div_ceil(2) {
                    c[2 * j] = buf[j].re * scale;
                }
                for j in 0..m / 2 {
                    c[2 * j + 1] = buf[m - 1 - j].re * scale;
                }
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut out = x.to_vec();
        self.forward_in_place(&mut out, &mut self.scratch());
        Ok(out)
    }

    pub fn inverse(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.check(c)?;
        let mut out = c.to_vec();
        self.inverse_in_place(&mut out, &mut self.scratch());
        Ok(out)
    }
}

pub fn forward(kind: TransformKind, x: &[f64]) -> Result<Vec<f64>> {
    Transform::new(kind).forward(x)
}

pub fn inverse(kind: TransformKind, c: &[f64]) -> Result<Vec<f64>> {
    Transform::new(kind).inverse(c)
}

/// Applies `f` to every line of `data` running along `axis`, in parallel.
/// `data` is laid out axis-0-fastest with extents `dims`.
pub(crate) fn for_each_line<S, I, F>(data: &mut [f64], dims: [usize; 3], axis: usize, init: I, f: F)
where
    S: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &mut [f64]) + Sync + Send,
{
    use rayon::prelude::*;
    let len = dims[axis];
    let stride: usize = dims[..axis].iter().product();
    if stride == 1 {
        data.par_chunks_mut(len).for_each_init(&init, |st, line| f(st, line));
        return;
    }
    let block = stride * len;
    let mut lines = vec![0.0; data.len()];
    // gather: line number = b * stride + o
    lines
        .par_chunks_mut(len)
        .enumerate()
        .for_each(|(l, line)| {
            let (b, o) = (l / stride, l % stride);
            let base = b * block + o;
            for (t, v) in line.iter_mut().enumerate() {
                *v = data[base + t * stride];
            }
        });
    lines.par_chunks_mut(len).for_each_init(&init, |st, line| f(st, line));
    // scatter: each output chunk of `stride` values shares (b, t)
    data.par_chunks_mut(stride).enumerate().for_each(|(c, chunk)| {
        let (b, t) = (c / len, c % len);
        for (o, v) in chunk.iter_mut().enumerate() {
            *v = lines[(b * stride + o) * len + t];
        }
    });
}
