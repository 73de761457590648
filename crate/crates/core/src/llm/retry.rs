use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Exponential backoff for transient failures (timeouts, 429, 5xx).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Total attempts including the first one.
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub multiplier: f64,
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            initial_backoff: Duration::from_secs(1),
            multiplier: 2.0,
            max_backoff: Duration::from_secs(60),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based), i.e. after attempt `retry + 1` failed.
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = self.multiplier.max(1.0).powi(retry as i32);
        let secs = self.initial_backoff.as_secs_f64() * factor;
        Duration::from_secs_f64(secs.min(self.max_backoff.as_secs_f64()))
    }

    /// All delays the policy can produce, one per retry.
    pub fn delays(&self) -> Vec<Duration> {
        (0..self.max_attempts.saturating_sub(1))
            .map(|r| self.delay(r))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_schedule() {
        let d = RetryPolicy::default().delays();
        assert_eq!(
            d,
            vec![1, 2, 4, 8]
                .into_iter()
                .map(Duration::from_secs)
                .collect::<Vec<_>>()
        );
    }

    proptest! {
        #[test]
        fn delays_bounded_and_non_decreasing(
            attempts in 1u32..12,
            init_ms in 0u64..5000,
            mult in 0.5f64..4.0,
            cap_ms in 0u64..100_000,
        ) {
            let p = RetryPolicy {
                max_attempts: attempts,
                initial_backoff: Duration::from_millis(init_ms),
                multiplier: mult,
                max_backoff: Duration::from_millis(cap_ms),
            };
            let d = p.delays();
            prop_assert_eq!(d.len() as u32, attempts - 1);
            for w in d.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            for x in &d {
                prop_assert!(*x <= p.max_backoff);
            }
        }
    }
}
