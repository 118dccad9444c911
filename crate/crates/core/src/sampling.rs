//! Seeded random vectors for probes, certificates and error schedules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`.
/// Gives random access to the `n`-th draw of a sequence.
pub fn seeded_stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Uniformly distributed direction on the unit sphere of `R^n`.
pub fn unit_vector(rng: &mut Rng, n: usize) -> Vec<f64> {
    loop {
        let mut v = gaussian(rng, n);
        let nrm = crate::spaces::norm(&v);
        if nrm > 1e-300 {
            v.iter_mut().for_each(|e| *e /= nrm);
            return v;
        }
    }
}
