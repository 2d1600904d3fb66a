//! Gaussian spherical codebooks: K-means design on the unit sphere,
//! encoding, maximum-likelihood decoding, and an AWGN error-rate harness.
//!
//! Codewords are the renormalized centroids of a K-means partition of
//! i.i.d. Gaussian points projected onto the unit N-sphere. Decoding is
//! minimum Euclidean distance, which for unit-norm codewords reduces to a
//! correlation maximum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::{derive_seed, JrcError, Result};

/// Design statistics recorded by [`design`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignMeta {
    pub num_samples: usize,
    pub iterations: usize,
    /// Mean squared centroid movement of the final iteration.
    pub final_update_error: f64,
}

/// A spherical code of `2^rate_bits` unit-norm codewords in `N` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    codewords: Vec<Vec<f64>>,
    block_length: usize,
    rate_bits: usize,
    pub design_meta: DesignMeta,
}

impl Codebook {
    pub fn from_codewords(codewords: Vec<Vec<f64>>, rate_bits: usize) -> Result<Self> {
        if codewords.len() != 1 << rate_bits {
            return Err(JrcError::invalid(format!(
                "expected {} codewords for {} bits, got {}",
                1usize << rate_bits,
                rate_bits,
                codewords.len()
            )));
        }
        let n = codewords.first().map_or(0, Vec::len);
        if n < 2 || codewords.iter().any(|c| c.len() != n) {
            return Err(JrcError::invalid("codewords must share a dimension ≥ 2"));
        }
        Ok(Codebook {
            codewords,
            block_length: n,
            rate_bits,
            design_meta: DesignMeta {
                num_samples: 0,
                iterations: 0,
                final_update_error: 0.0,
            },
        })
    }

    pub fn codewords(&self) -> &[Vec<f64>] {
        &self.codewords
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn rate_bits(&self) -> usize {
        self.rate_bits
    }

    pub fn num_codewords(&self) -> usize {
        self.codewords.len()
    }

    /// Codeword for a message index, scaled to transmit amplitude σ_x.
    pub fn encode(&self, index: usize, sigma_x: f64) -> Result<Vec<f64>> {
        let cw = self
            .codewords
            .get(index)
            .ok_or_else(|| JrcError::invalid(format!("message index {index} out of range")))?;
        Ok(cw.iter().map(|v| v * sigma_x).collect())
    }

    /// Maximum-likelihood (minimum-distance) decoding; ties break to the
    /// lowest index. Scale-invariant for positive scalings of the input.
    pub fn ml_decode(&self, received: &[f64]) -> Result<usize> {
        if received.len() != self.block_length {
            return Err(JrcError::invalid(format!(
                "received length {} does not match block length {}",
                received.len(),
                self.block_length
            )));
        }
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, cw) in self.codewords.iter().enumerate() {
            let dot: f64 = cw.iter().zip(received).map(|(a, b)| a * b).sum();
            if dot > best.1 {
                best = (i, dot);
            }
        }
        Ok(best.0)
    }

    /// Mean signed off-diagonal correlation between codeword dimensions.
    /// With 2^r codewords the per-pair estimate has a 1/sqrt(2^r) noise
    /// floor, so the aggregate mean is the statistic that reflects the
    /// design quality.
    pub fn mean_dimension_cross_correlation(&self) -> f64 {
        let n = self.block_length;
        let k = self.codewords.len() as f64;
        let mut means = vec![0.0; n];
        for cw in &self.codewords {
            for (d, v) in cw.iter().enumerate() {
                means[d] += v / k;
            }
        }
        let mut vars = vec![0.0; n];
        for cw in &self.codewords {
            for (d, v) in cw.iter().enumerate() {
                vars[d] += (v - means[d]) * (v - means[d]) / k;
            }
        }
        let mut acc = 0.0;
        let mut count = 0usize;
        for a in 0..n {
            for b in a + 1..n {
                let mut cov = 0.0;
                for cw in &self.codewords {
                    cov += (cw[a] - means[a]) * (cw[b] - means[b]) / k;
                }
                acc += cov / (vars[a] * vars[b]).sqrt();
                count += 1;
            }
        }
        acc / count as f64
    }

    /// Minimum and maximum pairwise codeword distance.
    pub fn distance_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..self.codewords.len() {
            for j in i + 1..self.codewords.len() {
                let d2: f64 = self.codewords[i]
                    .iter()
                    .zip(&self.codewords[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let d = d2.sqrt();
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
        (lo, hi)
    }
}

/// Natural-binary bits of a message index, LSB first.
pub fn index_bits(index: usize, rate_bits: usize) -> Vec<u8> {
    (0..rate_bits).map(|b| ((index >> b) & 1) as u8).collect()
}

/// Designs a `(n, rate_bits)` spherical code by K-means over `num_samples`
/// unit-norm Gaussian draws.
///
/// Seeding is k-means++; centroids are renormalized after every update;
/// an emptied cluster is re-seeded from the sample farthest from all
/// current centroids. Iteration stops at `max_iters` or when the mean
/// squared centroid movement drops below `tol`.
pub fn design(
    n: usize,
    rate_bits: usize,
    num_samples: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<Codebook> {
    if n < 2 {
        return Err(JrcError::invalid("block length must be ≥ 2"));
    }
    let k = 1usize << rate_bits;
    if num_samples < k {
        return Err(JrcError::invalid(format!(
            "need at least {k} samples for {k} clusters, got {num_samples}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, "codebook-design"));
    // unit-norm Gaussian cloud, flattened row-major
    let mut samples = vec![0.0f64; num_samples * n];
    for row in samples.chunks_mut(n) {
        loop {
            let mut norm2 = 0.0;
            for v in row.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
                norm2 += *v * *v;
            }
            if norm2 > 0.0 {
                let inv = 1.0 / norm2.sqrt();
                row.iter_mut().for_each(|v| *v *= inv);
                break;
            }
        }
    }

    // k-means++ seeding
    let mut centroids = vec![0.0f64; k * n];
    let first = rng.gen_range(0..num_samples);
    centroids[..n].copy_from_slice(&samples[first * n..(first + 1) * n]);
    let mut min_d2 = vec![0.0f64; num_samples];
    for (s, d) in min_d2.iter_mut().enumerate() {
        *d = dist2(&samples[s * n..(s + 1) * n], &centroids[..n]);
    }
    for c in 1..k {
        let total: f64 = min_d2.iter().sum();
        let mut pick = rng.gen_range(0.0..total.max(f64::MIN_POSITIVE));
        let mut chosen = num_samples - 1;
        for (s, d) in min_d2.iter().enumerate() {
            pick -= d;
            if pick <= 0.0 {
                chosen = s;
                break;
            }
        }
        let (dst, src) = (
            c * n,
            &samples[chosen * n..(chosen + 1) * n].to_vec(),
        );
        centroids[dst..dst + n].copy_from_slice(src);
        for (s, d) in min_d2.iter_mut().enumerate() {
            let nd = dist2(&samples[s * n..(s + 1) * n], &centroids[dst..dst + n]);
            if nd < *d {
                *d = nd;
            }
        }
    }

    let mut assignments = vec![0usize; num_samples];
    let mut iterations = 0;
    let mut update_error = f64::INFINITY;
    for iter in 0..max_iters {
        iterations = iter + 1;
        // assignment: argmax correlation (all vectors unit norm)
        assignments
            .par_iter_mut()
            .enumerate()
            .for_each(|(s, a)| {
                let row = &samples[s * n..(s + 1) * n];
                let mut best = (0usize, f64::NEG_INFINITY);
                for c in 0..k {
                    let cw = &centroids[c * n..(c + 1) * n];
                    let mut dot = 0.0;
                    for d in 0..n {
                        dot += row[d] * cw[d];
                    }
                    if dot > best.1 {
                        best = (c, dot);
                    }
                }
                *a = best.0;
            });

        // centroid update (sequential accumulation keeps runs bit-stable)
        let mut sums = vec![0.0f64; k * n];
        let mut counts = vec![0usize; k];
        for (s, &a) in assignments.iter().enumerate() {
            counts[a] += 1;
            let row = &samples[s * n..(s + 1) * n];
            let dst = &mut sums[a * n..(a + 1) * n];
            for d in 0..n {
                dst[d] += row[d];
            }
        }
        let mut moved = 0.0;
        for c in 0..k {
            let dst = c * n;
            if counts[c] == 0 {
                // repair rule: restart the cluster at the sample farthest
                // from every current centroid
                let far = (0..num_samples)
                    .map(|s| {
                        let row = &samples[s * n..(s + 1) * n];
                        let nearest = (0..k)
                            .map(|cc| dist2(row, &centroids[cc * n..(cc + 1) * n]))
                            .fold(f64::INFINITY, f64::min);
                        (s, nearest)
                    })
                    .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .map(|(s, _)| s)
                    .unwrap();
                let row = samples[far * n..(far + 1) * n].to_vec();
                moved += dist2(&row, &centroids[dst..dst + n]);
                centroids[dst..dst + n].copy_from_slice(&row);
                continue;
            }
            let norm2: f64 = sums[dst..dst + n].iter().map(|v| v * v).sum();
            let inv = 1.0 / norm2.sqrt();
            let mut delta = 0.0;
            for d in 0..n {
                let nv = sums[dst + d] * inv;
                let diff = nv - centroids[dst + d];
                delta += diff * diff;
                centroids[dst + d] = nv;
            }
            moved += delta;
        }
        update_error = moved / k as f64;
        if update_error < tol {
            break;
        }
    }

    let codewords: Vec<Vec<f64>> = (0..k)
        .map(|c| centroids[c * n..(c + 1) * n].to_vec())
        .collect();
    let mut cb = Codebook::from_codewords(codewords, rate_bits)?;
    cb.design_meta = DesignMeta {
        num_samples,
        iterations,
        final_update_error: update_error,
    };
    Ok(cb)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One row of the Monte Carlo error-rate table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    /// Per-symbol SNR `Es/N0` in dB (Es is the codeword energy).
    pub snr_db: f64,
    pub ber: f64,
    pub ser: f64,
    pub trials: usize,
}

/// Monte Carlo bit/symbol error rates of the code over an AWGN channel
/// with ML decoding. Per-trial noise derives deterministically from
/// `seed`, so curves are reproducible and trials are independent.
pub fn awgn_ber_curve(
    cb: &Codebook,
    snr_grid_db: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<BerPoint>> {
    if trials == 0 {
        return Err(JrcError::invalid("need at least one trial"));
    }
    let n = cb.block_length();
    let r = cb.rate_bits();
    let k = cb.num_codewords();
    let mut out = Vec::with_capacity(snr_grid_db.len());
    for (gi, &snr_db) in snr_grid_db.iter().enumerate() {
        // Es = 1 (unit-norm codewords); noise per dimension N0/2
        let n0 = 10f64.powf(-snr_db / 10.0);
        let sigma = (n0 / 2.0).sqrt();
        let errors: (u64, u64) = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(
                    seed,
                    &format!("awgn-{gi}-{t}"),
                ));
                let msg = rng.gen_range(0..k);
                let cw = &cb.codewords()[msg];
                let mut rx = vec![0.0f64; n];
                for (d, v) in rx.iter_mut().enumerate() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = cw[d] + sigma * z;
                }
                let dec = cb.ml_decode(&rx).expect("dimension matches");
                let bit_errors = (dec ^ msg).count_ones() as u64;
                ((dec != msg) as u64, bit_errors)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        out.push(BerPoint {
            snr_db,
            ser: errors.0 as f64 / trials as f64,
            ber: errors.1 as f64 / (trials * r) as f64,
            trials,
        });
    }
    Ok(out)
}
