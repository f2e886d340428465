use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "valid" | "validation" => Ok(Split::Valid),
            "test" | "eval" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitSizes {
    /// Exact piece counts; they must add up to the number of source pieces.
    Counts { train: usize, valid: usize, test: usize },
    /// Fractions summing to 1. Train and valid are floored, test takes the remainder.
    Ratios {
        train: f64,
        #[serde(default)]
        valid: f64,
        test: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub sizes: SplitSizes,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sizes: SplitSizes::Ratios {
                train: 0.8,
                valid: 0.1,
                test: 0.1,
            },
        }
    }
}

impl SplitSizes {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if let SplitSizes::Ratios { train, valid, test } = *self {
            if [train, valid, test].iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(DatasetError::Split("ratios must lie in [0, 1]".into()));
            }
            if (train + valid + test - 1.0).abs() > 1e-6 {
                return Err(DatasetError::Split(format!(
                    "ratios sum to {}, expected 1",
                    train + valid + test
                )));
            }
        }
        Ok(())
    }

    /// (train, valid, test) sizes for `n` pieces.
    pub fn sizes(&self, n: usize) -> Result<[usize; 3], DatasetError> {
        self.validate()?;
        match *self {
            SplitSizes::Counts { train, valid, test } => {
                let total = train + valid + test;
                if total > n {
                    return Err(DatasetError::Split(format!(
                        "split counts {train}/{valid}/{test} exceed the {n} available pieces"
                    )));
                }
                if total < n {
                    return Err(DatasetError::Split(format!(
                        "split counts {train}/{valid}/{test} cover {total} of {n} pieces"
                    )));
                }
                Ok([train, valid, test])
            }
            SplitSizes::Ratios { train, valid, .. } => {
                let floor = |r: f64| (r * n as f64 + 1e-9).floor() as usize;
                let (tr, va) = (floor(train), floor(valid));
                Ok([tr, va, n - tr - va])
            }
        }
    }
}

/// Seeded shuffle of the sorted ids, partitioned train, valid, test in that order.
pub fn split(ids: &[String], cfg: &SplitConfig) -> Result<BTreeMap<String, Split>, DatasetError> {
    let mut sorted: Vec<&String> = ids.iter().collect();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != ids.len() {
        return Err(DatasetError::Split("piece ids are not unique".into()));
    }
    let sizes = cfg.sizes.sizes(sorted.len())?;
    sorted.shuffle(&mut rng::stream(cfg.seed, &["split"]));
    let mut out = BTreeMap::new();
    let mut it = sorted.into_iter();
    for (split, size) in Split::ALL.into_iter().zip(sizes) {
        for id in it.by_ref().take(size) {
            out.insert(id.clone(), split);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("bwv{i:03}")).collect()
    }

    fn count(a: &BTreeMap<String, Split>, s: Split) -> usize {
        a.values().filter(|&&v| v == s).count()
    }

    #[test]
    fn counts_277_35_35() {
        let cfg = SplitConfig {
            seed: 3,
            sizes: SplitSizes::Counts { train: 277, valid: 35, test: 35 },
        };
        let a = split(&ids(347), &cfg).unwrap();
        assert_eq!([count(&a, Split::Train), count(&a, Split::Valid), count(&a, Split::Test)], [277, 35, 35]);
        assert_eq!(a, split(&ids(347), &cfg).unwrap());
        let other = split(&ids(347), &SplitConfig { seed: 4, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn ratio_floor_for_train_remainder_for_eval() {
        let cfg = SplitConfig {
            seed: 0,
            sizes: SplitSizes::Ratios { train: 0.1, valid: 0.0, test: 0.9 },
        };
        let a = split(&ids(20), &cfg).unwrap();
        assert_eq!(count(&a, Split::Train), 2);
        assert_eq!(count(&a, Split::Test), 18);
        for (r, n, expect) in [(0.4, 20, 8), (0.7, 20, 14), (0.1, 35, 3), (0.7, 10, 7)] {
            let s = SplitSizes::Ratios { train: r, valid: 0.0, test: 1.0 - r };
            assert_eq!(s.sizes(n).unwrap()[0], expect, "{r} of {n}");
        }
    }

    #[test]
    fn input_order_does_not_matter() {
        let mut rev = ids(30);
        rev.reverse();
        let cfg = SplitConfig::default();
        assert_eq!(split(&ids(30), &cfg).unwrap(), split(&rev, &cfg).unwrap());
    }

    #[test]
    fn errors() {
        let over = SplitConfig {
            seed: 0,
            sizes: SplitSizes::Counts { train: 10, valid: 1, test: 1 },
        };
        assert!(split(&ids(5), &over).is_err());
        let bad = SplitSizes::Ratios { train: 0.5, valid: 0.0, test: 0.2 };
        assert!(bad.validate().is_err());
        let dup = vec!["a".to_string(), "a".to_string()];
        assert!(split(&dup, &SplitConfig::default()).is_err());
    }

    #[test]
    fn toml_forms() {
        let c: SplitConfig = toml::from_str("seed = 5\n[counts]\ntrain = 1\nvalid = 1\ntest = 1\n").unwrap();
        assert_eq!(c.sizes, SplitSizes::Counts { train: 1, valid: 1, test: 1 });
        let r: SplitConfig = toml::from_str("[ratios]\ntrain = 0.1\ntest = 0.9\n").unwrap();
        assert_eq!(r.sizes, SplitSizes::Ratios { train: 0.1, valid: 0.0, test: 0.9 });
    }
}
