//! Small numerical helpers: compensated summation, Gauss–Hermite nodes and a
//! deterministic parallel reduction.

use rayon::prelude::*;

/// Neumaier (improved Kahan–Babuška) compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

/// Deterministic parallel map-reduce over `0..len`.
///
/// The index range is cut into fixed chunks of `chunk` items independent of
/// the thread count; each chunk is reduced serially and the chunk partials
/// are merged in index order. Results are bit-identical for any pool size.
pub fn par_chunked_sum<const K: usize, F>(len: usize, chunk: usize, f: F) -> [f64; K]
where
    F: Fn(usize) -> [f64; K] + Sync + Send,
{
    let chunk = chunk.max(1);
    let n_chunks = len.div_ceil(chunk);
    let partials: Vec<[NeumaierSum; K]> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = [NeumaierSum::new(); K];
            for i in c * chunk..((c + 1) * chunk).min(len) {
                let v = f(i);
                for (a, x) in acc.iter_mut().zip(v) {
                    a.add(x);
                }
            }
            acc
        })
        .collect();
    let mut total = [NeumaierSum::new(); K];
    for p in &partials {
        for (t, x) in total.iter_mut().zip(p) {
            t.merge(x);
        }
    }
    total.map(|t| t.value())
}

/// Gauss–Hermite nodes and weights for ∫ e^{-x²} f(x) dx, `n` points.
///
/// Newton iteration on the orthonormal Hermite recurrence; nodes are
/// returned in increasing order.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_hermite needs at least one node");
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    x.reverse();
    w.reverse();
    (x, w)
}

/// Nodes (in units of σ) and probability weights for E[f(X)], X ~ N(0, 1).
pub fn normal_quadrature(n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_hermite(n);
    let norm = std::f64::consts::PI.sqrt();
    x.into_iter()
        .zip(w)
        .map(|(xi, wi)| (xi * std::f64::consts::SQRT_2, wi / norm))
        .collect()
}
