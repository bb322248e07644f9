#![allow(dead_code)]

use covext::{moments, GridField, GridSpec, HermitianSeq, IndexSet, WeightMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Sum-of-squares polynomial `|Σ_k a_k e^{i(k,θ)}|² + floor` on `index`,
/// with `a` supported on the nonnegative part of the box.
pub fn random_positive_poly(rng: &mut ChaCha8Rng, index: &IndexSet, floor: f64) -> HermitianSeq {
    let ext = index.max_abs();
    let d = index.dim();
    let mut taps: Vec<(Vec<i64>, f64)> = Vec::new();
    let total: usize = ext.iter().map(|&n| n + 1).product();
    for flat in 0..total {
        let mut f = flat;
        let mut k = vec![0i64; d];
        for a in (0..d).rev() {
            k[a] = (f % (ext[a] + 1)) as i64;
            f /= ext[a] + 1;
        }
        taps.push((k, normal(rng) / (total as f64).sqrt()));
    }
    let mut seq = HermitianSeq::from_fn(index.clone(), |k| {
        let mut acc = 0.0;
        for (m, am) in &taps {
            let shifted: Vec<i64> = m.iter().zip(k).map(|(a, b)| a + b).collect();
            if let Some((_, an)) = taps.iter().find(|(n, _)| *n == shifted) {
                acc += am * an;
            }
        }
        Complex64::new(acc, 0.0)
    })
    .unwrap();
    seq = seq.add(&HermitianSeq::unit(index.clone()).scale(floor)).unwrap();
    seq
}

/// Moments of a smooth positive density `floor + |Σ a_k e^{i(k,θ)}|²` with
/// random taps extending a little beyond `index`.
pub fn random_bona_fide(rng: &mut ChaCha8Rng, index: &IndexSet, floor: f64) -> HermitianSeq {
    let d = index.dim();
    let fine = GridSpec::uniform(d, if d == 1 { 256 } else { 48 }, false).unwrap();
    let taps: Vec<(Vec<f64>, Complex64)> = (0..4)
        .map(|_| {
            let k: Vec<f64> = (0..d).map(|_| rng.random_range(-2..=2) as f64).collect();
            (k, Complex64::new(normal(rng), normal(rng)) * 0.5)
        })
        .collect();
    let field = GridField::from_fn(fine, |th| {
        let mut s = Complex64::new(0.0, 0.0);
        for (k, a) in &taps {
            let ph: f64 = k.iter().zip(th).map(|(a, b)| a * b).sum();
            s += a * Complex64::from_polar(1.0, ph);
        }
        floor + s.norm_sqr()
    })
    .unwrap();
    moments(&field, index).unwrap()
}

/// Hermitian noise of standard deviation `sigma` per real coordinate.
pub fn noise(rng: &mut ChaCha8Rng, index: &IndexSet, sigma: f64) -> HermitianSeq {
    let z: Vec<f64> = (0..index.len()).map(|_| sigma * normal(rng)).collect();
    HermitianSeq::from_real(index.clone(), &z).unwrap()
}

/// Random positive-definite weight that commutes with `k ↦ -k`.
pub fn random_weight(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> WeightMatrix {
    let a = DMatrix::from_fn(n, n, |_, _| normal(rng));
    let b = &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.2;
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (b[(i, j)] + b[(n - 1 - i, n - 1 - j)]) * scale);
    WeightMatrix::from_real(&m).unwrap()
}

/// A random perturbation of the real coordinates of `q` that keeps it
/// within `frac` relative size.
pub fn jitter(rng: &mut ChaCha8Rng, q: &HermitianSeq, frac: f64) -> HermitianSeq {
    let z: Vec<f64> = q.to_real().iter().map(|v| v + frac * normal(rng)).collect();
    HermitianSeq::from_real(q.index_set().clone(), &z).unwrap()
}

/// Circular covariance `(1/N) Σ_t (y_t - m)(y_{t+k} - m)` of a real 2-D field.
pub fn circular_cov(values: &[f64], dims: &[usize], lag: &[i64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let (r, c) = (dims[0], dims[1]);
    let mut acc = 0.0;
    for i in 0..r {
        for j in 0..c {
            let i2 = (i as i64 + lag[0]).rem_euclid(r as i64) as usize;
            let j2 = (j as i64 + lag[1]).rem_euclid(c as i64) as usize;
            acc += (values[i * c + j] - m) * (values[i2 * c + j2] - m);
        }
    }
    acc / n
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Prints and records one criterion line.
pub fn report(id: &str, name: &str, ok: bool, detail: impl AsRef<str>) {
    println!("criterion {id:>2} {name}: {} ({})", if ok { "PASS" } else { "FAIL" }, detail.as_ref());
}
