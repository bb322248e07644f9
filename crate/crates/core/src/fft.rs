//! Row-major n-dimensional FFT built from per-axis passes.

use num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    /// `X_k = Σ x_j e^{-2πi jk/N}`
    Forward,
    /// `x_j = Σ X_k e^{+2πi jk/N}`, unnormalized.
    Inverse,
}

/// In-place transform of a row-major array with the given shape (last axis
/// contiguous).
pub(crate) fn fft_nd(buf: &mut [Complex64], dims: &[usize], dir: Direction) {
    let total: usize = dims.iter().product();
    assert_eq!(buf.len(), total, "buffer does not match shape");
    let mut planner = FftPlanner::new();
    let mut stride = 1usize;
    for axis in (0..dims.len()).rev() {
        let n = dims[axis];
        if n > 1 {
            let fft = match dir {
                Direction::Forward => planner.plan_fft_forward(n),
                Direction::Inverse => planner.plan_fft_inverse(n),
            };
            if stride == 1 {
                fft.process(buf);
            } else {
                let mut line = vec![Complex64::new(0.0, 0.0); n];
                let block = n * stride;
                for base in (0..total).step_by(block) {
                    for off in 0..stride {
                        for (j, v) in line.iter_mut().enumerate() {
                            *v = buf[base + off + j * stride];
                        }
                        fft.process(&mut line);
                        for (j, v) in line.iter().enumerate() {
                            buf[base + off + j * stride] = *v;
                        }
                    }
                }
            }
        }
        stride *= n;
    }
}

/// Position of exponent `k` in a periodic array: each component taken mod N.
pub(crate) fn wrapped_index(k: &[i64], dims: &[usize]) -> usize {
    k.iter()
        .zip(dims)
        .fold(0, |acc, (&kj, &n)| acc * n + kj.rem_euclid(n as i64) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: &[Complex64], dims: &[usize], sign: f64) -> Vec<Complex64> {
        let total = x.len();
        let unflat = |mut f: usize| {
            let mut v = vec![0usize; dims.len()];
            for a in (0..dims.len()).rev() {
                v[a] = f % dims[a];
                f /= dims[a];
            }
            v
        };
        (0..total)
            .map(|k| {
                let kk = unflat(k);
                (0..total)
                    .map(|j| {
                        let jj = unflat(j);
                        let ph: f64 = (0..dims.len())
                            .map(|a| (kk[a] * jj[a]) as f64 / dims[a] as f64)
                            .sum();
                        x[j] * Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * ph)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_in_three_dims() {
        let dims = [3, 4, 5];
        let x: Vec<Complex64> = (0..60)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.1).cos()))
            .collect();
        for (dir, sign) in [(Direction::Forward, -1.0), (Direction::Inverse, 1.0)] {
            let mut y = x.clone();
            fft_nd(&mut y, &dims, dir);
            let want = naive(&x, &dims, sign);
            for (a, b) in y.iter().zip(&want) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }
}
