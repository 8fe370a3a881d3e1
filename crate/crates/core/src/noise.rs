//! Counter-based Gaussian noise.
//!
//! Every standard normal is addressed by `(seed, particle, step, component)`:
//! particle `p` reads ChaCha8 stream `p` keyed by the seed, and the normal for
//! `(step, component)` is built by Box-Muller from the two 64-bit words at
//! counter position `step · m + component`. Values therefore do not depend on
//! how particles are scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// ChaCha words consumed by one normal deviate (two `u64`).
const WORDS_PER_NORMAL: u128 = 4;

fn unit_open(bits: u64) -> f64 {
    // (0, 1]
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn unit_closed_open(bits: u64) -> f64 {
    // [0, 1)
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn box_muller(a: u64, b: u64) -> f64 {
    (-2.0 * unit_open(a).ln()).sqrt() * (std::f64::consts::TAU * unit_closed_open(b)).cos()
}

fn stream(seed: u64, particle: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(particle as u64);
    rng
}

/// Random access to a single normal deviate.
pub fn normal_at(seed: u64, particle: usize, step: usize, component: usize, noise_dim: usize) -> f64 {
    let mut rng = stream(seed, particle);
    let index = (step * noise_dim + component) as u128;
    rng.set_word_pos(index * WORDS_PER_NORMAL);
    let a = rng.next_u64();
    let b = rng.next_u64();
    box_muller(a, b)
}

/// Standard normals for every `(particle, step, component)` of one run.
///
/// Layout is `[step][particle][component]` so that a step's block is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTensor {
    seed: u64,
    particles: usize,
    steps: usize,
    noise_dim: usize,
    data: Vec<f64>,
}

impl NoiseTensor {
    pub fn generate(seed: u64, particles: usize, steps: usize, noise_dim: usize) -> Self {
        let per_particle = steps * noise_dim;
        let columns: Vec<Vec<f64>> = (0..particles)
            .into_par_iter()
            .map(|p| {
                let mut rng = stream(seed, p);
                (0..per_particle)
                    .map(|_| {
                        let a = rng.next_u64();
                        let b = rng.next_u64();
                        box_muller(a, b)
                    })
                    .collect()
            })
            .collect();
        let mut data = vec![0.0; particles * per_particle];
        for (p, column) in columns.iter().enumerate() {
            for k in 0..steps {
                let dst = (k * particles + p) * noise_dim;
                data[dst..dst + noise_dim].copy_from_slice(&column[k * noise_dim..(k + 1) * noise_dim]);
            }
        }
        Self {
            seed,
            particles,
            steps,
            noise_dim,
            data,
        }
    }

    /// All-zero noise, for deterministic runs or tests.
    pub fn zeros(particles: usize, steps: usize, noise_dim: usize) -> Self {
        Self {
            seed: 0,
            particles,
            steps,
            noise_dim,
            data: vec![0.0; particles * steps * noise_dim],
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    /// `particles × noise_dim` block for one step.
    pub fn step_block(&self, step: usize) -> &[f64] {
        let len = self.particles * self.noise_dim;
        &self.data[step * len..(step + 1) * len]
    }

    pub fn get(&self, particle: usize, step: usize) -> &[f64] {
        let start = (step * self.particles + particle) * self.noise_dim;
        &self.data[start..start + self.noise_dim]
    }

    /// Reassigns noise rows: particle `i` of the result receives the noise of
    /// particle `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.particles, "permutation length");
        let mut data = vec![0.0; self.data.len()];
        for k in 0..self.steps {
            for (i, &src) in perm.iter().enumerate() {
                let d = (k * self.particles + i) * self.noise_dim;
                data[d..d + self.noise_dim].copy_from_slice(self.get(src, k));
            }
        }
        Self { data, ..self.clone() }
    }
}

/// Uniform deviate in `[0, 1)` addressed by `(seed, particle, index)`.
pub fn uniform_at(seed: u64, particle: usize, index: usize) -> f64 {
    let mut rng = stream(seed, particle);
    rng.set_word_pos(index as u128 * 2);
    unit_closed_open(rng.next_u64())
}

/// Seeded ChaCha stream for auxiliary sampling (initial laws, bootstrap).
pub fn auxiliary_rng(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(purpose);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_agrees_with_random_access() {
        let t = NoiseTensor::generate(42, 5, 7, 3);
        for p in 0..5 {
            for k in 0..7 {
                for c in 0..3 {
                    assert_eq!(t.get(p, k)[c], normal_at(42, p, k, c, 3));
                }
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_noise() {
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| NoiseTensor::generate(9, 64, 10, 2));
        let b = four.install(|| NoiseTensor::generate(9, 64, 10, 2));
        assert_eq!(a, b);
    }

    #[test]
    fn moments_are_standard() {
        let t = NoiseTensor::generate(1, 2000, 50, 1);
        let n = t.data.len() as f64;
        let mean = t.data.iter().sum::<f64>() / n;
        let var = t.data.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 4.0 / n.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 6.0 * (2.0 / n).sqrt(), "variance {var}");
    }

    #[test]
    fn seeds_and_particles_are_distinct() {
        assert_ne!(normal_at(1, 0, 0, 0, 1), normal_at(2, 0, 0, 0, 1));
        assert_ne!(normal_at(1, 0, 0, 0, 1), normal_at(1, 1, 0, 0, 1));
    }
}
