use std::sync::Mutex;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::source::{FactSource, Request, SourceError};
use crate::equiv::section_marker;

/// Replays a fixed fact text, dropping each fact line independently with
/// probability `withhold` on every call. Section markers and blank lines
/// are always kept.
pub struct MockSource {
    lines: Vec<String>,
    withhold: f64,
    rng: Mutex<ChaCha8Rng>,
}

impl MockSource {
    pub fn new(ground_truth: &str, withhold: f64, seed: u64) -> MockSource {
        assert!((0.0..1.0).contains(&withhold), "withhold fraction must be in [0, 1)");
        MockSource {
            lines: ground_truth.lines().map(str::to_string).collect(),
            withhold,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
        }
    }
}

pub fn mock_source(ground_truth: &str, withhold: f64, seed: u64) -> MockSource {
    MockSource::new(ground_truth, withhold, seed)
}

impl FactSource for MockSource {
    fn propose(&self, _req: &Request) -> Result<String, SourceError> {
        let mut rng = self.rng.lock().expect("mock rng");
        let mut out = String::new();
        for line in &self.lines {
            let t = line.trim();
            let keep = t.is_empty() || section_marker(t).is_some() || !rng.gen_bool(self.withhold);
            if keep {
                out.push_str(line);
                out.push('\n');
            }
        }
        Ok(out)
    }
}
