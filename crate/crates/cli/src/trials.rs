use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ConfigError;

/// Runs independent trials, each with its own random stream derived from
/// the experiment seed and the trial index. Results come back in trial
/// order, so a report does not depend on the number of threads.
pub struct Runner {
    seed: u64,
    #[cfg(feature = "parallel")]
    pool: rayon::ThreadPool,
}

impl Runner {
    #[cfg(feature = "parallel")]
    pub fn new(seed: u64, jobs: Option<usize>) -> Result<Self, ConfigError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = jobs {
            if j == 0 {
                return Err(ConfigError::new("--jobs must be at least 1"));
            }
            b = b.num_threads(j);
        }
        let pool = b.build().map_err(|e| ConfigError(format!("cannot start thread pool: {e}")))?;
        Ok(Self { seed, pool })
    }

    #[cfg(not(feature = "parallel"))]
    pub fn new(seed: u64, jobs: Option<usize>) -> Result<Self, ConfigError> {
        if jobs == Some(0) {
            return Err(ConfigError::new("--jobs must be at least 1"));
        }
        Ok(Self { seed })
    }

    /// Random stream `stream` of the experiment seed.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
    {
        let one = |k: usize| f(k, &mut self.rng(k as u64));
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.pool.install(|| (0..n).into_par_iter().map(one).collect())
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..n).map(one).collect()
        }
    }
}
