use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::NoiseMode;

/// Stream ids inside one seeded ChaCha generator.
pub(crate) const INIT_STREAM: u64 = 0;
pub(crate) const NOISE_STREAM: u64 = 1;

/// Seeded source of the per-step standard Gaussian vectors.
#[derive(Clone, Debug)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
    mode: NoiseMode,
    buf: Vec<f64>,
}

impl NoiseSource {
    pub fn new(seed: u64, mode: NoiseMode) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(NOISE_STREAM);
        NoiseSource { rng, mode, buf: Vec::new() }
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    /// Draws the Gaussian vector(s) for one step: `dim` values in common mode,
    /// `n * dim` (row-major by particle) in independent mode.
    pub fn draw(&mut self, n: usize, dim: usize) -> &[f64] {
        let len = match self.mode {
            NoiseMode::Common => dim,
            NoiseMode::Independent => n * dim,
        };
        self.buf.resize(len, 0.0);
        for w in self.buf.iter_mut() {
            *w = self.rng.sample(StandardNormal);
        }
        &self.buf
    }
}

pub(crate) fn init_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INIT_STREAM);
    rng
}
