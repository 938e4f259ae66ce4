//! Multi-dimensional complex FFT built from rustfft line transforms.

use crate::par;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::Arc;

/// Forward and inverse plans for a row-major array of shape `dims`.
/// The inverse is unnormalized.
pub struct FftNd {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl fmt::Debug for FftNd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FftNd").field("dims", &self.dims).finish()
    }
}

impl FftNd {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dims: dims.to_vec(),
            forward: dims.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.len());
        let nd = self.dims.len();
        for axis in 0..nd {
            let len = self.dims[axis];
            if len == 1 {
                continue;
            }
            let plan = &plans[axis];
            let stride: usize = self.dims[axis + 1..].iter().product();
            if stride == 1 {
                par::for_each_chunk_mut(data, len, |_, line| plan.process(line));
                continue;
            }
            let lines = data.len() / len;
            let src: &[Complex64] = data;
            let transformed = par::map_range(lines, |l| {
                let base = (l / stride) * len * stride + l % stride;
                let mut line: Vec<Complex64> = (0..len).map(|t| src[base + t * stride]).collect();
                plan.process(&mut line);
                line
            });
            for (l, line) in transformed.into_iter().enumerate() {
                let base = (l / stride) * len * stride + l % stride;
                for (t, v) in line.into_iter().enumerate() {
                    data[base + t * stride] = v;
                }
            }
        }
    }
}
