use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Success,
    Miss,
    Collision,
    TooWide,
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Success)
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Success => "success",
            Outcome::Miss => "miss",
            Outcome::Collision => "collision",
            Outcome::TooWide => "too-wide",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessRates {
    pub attempt_centric: f64,
    pub object_centric: f64,
}

/// Attempt-centric rate is successes over attempts. Object-centric rate is
/// the fraction of objects that succeed within their first two attempts.
pub fn success_rates<K: PartialEq>(log: &[(K, Outcome)]) -> Result<SuccessRates> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let successes = log.iter().filter(|(_, o)| o.is_success()).count();
    // (object, attempts seen, succeeded within two)
    let mut objects: Vec<(&K, usize, bool)> = Vec::new();
    for (k, o) in log {
        let entry = match objects.iter().position(|(id, _, _)| *id == k) {
            Some(i) => &mut objects[i],
            None => {
                objects.push((k, 0, false));
                objects.last_mut().unwrap()
            }
        };
        entry.1 += 1;
        if entry.1 <= 2 && o.is_success() {
            entry.2 = true;
        }
    }
    let grasped = objects.iter().filter(|o| o.2).count();
    Ok(SuccessRates {
        attempt_centric: successes as f64 / log.len() as f64,
        object_centric: grasped as f64 / objects.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seven_of_ten() {
        let log: Vec<(u32, Outcome)> = (0..10)
            .map(|i| {
                (
                    i,
                    if i < 7 {
                        Outcome::Success
                    } else {
                        Outcome::Miss
                    },
                )
            })
            .collect();
        assert_eq!(success_rates(&log).unwrap().attempt_centric, 0.7);
    }

    #[test]
    fn retry_counts_for_the_object() {
        let log = [
            (0u32, Outcome::Miss),
            (0, Outcome::Success),
            (1, Outcome::Success),
        ];
        let r = success_rates(&log).unwrap();
        assert_eq!(r.object_centric, 1.0);
        assert!((r.attempt_centric - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn all_failures_and_empty() {
        let r = success_rates(&[(0u32, Outcome::Miss), (1, Outcome::TooWide)]).unwrap();
        assert_eq!((r.attempt_centric, r.object_centric), (0.0, 0.0));
        assert!(matches!(success_rates::<u32>(&[]), Err(Error::EmptyLog)));
    }

    #[test]
    fn third_attempt_does_not_count() {
        let log = [
            (0u32, Outcome::Miss),
            (0, Outcome::Miss),
            (0, Outcome::Success),
        ];
        assert_eq!(success_rates(&log).unwrap().object_centric, 0.0);
    }

    fn failure() -> impl Strategy<Value = Outcome> {
        prop_oneof![
            Just(Outcome::Miss),
            Just(Outcome::Collision),
            Just(Outcome::TooWide)
        ]
    }

    /// Attempts for one object: a retry happens only after a failure.
    fn attempts() -> impl Strategy<Value = Vec<Outcome>> {
        prop_oneof![
            Just(vec![Outcome::Success]),
            failure().prop_map(|f| vec![f, Outcome::Success]),
            (failure(), failure()).prop_map(|(a, b)| vec![a, b]),
            failure().prop_map(|f| vec![f]),
        ]
    }

    proptest! {
        #[test]
        fn object_centric_dominates(attempts in prop::collection::vec(attempts(), 1..30)) {
            let log: Vec<(usize, Outcome)> = attempts
                .iter()
                .enumerate()
                .flat_map(|(i, a)| a.iter().map(move |o| (i, *o)))
                .collect();
            let r = success_rates(&log).unwrap();
            prop_assert!(r.object_centric >= r.attempt_centric);
            prop_assert!((0.0..=1.0).contains(&r.object_centric));
        }
    }
}
