//! Inter-arrival distributions and list policies.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::SimError;

/// One copy of a post sitting in a Wall or Newsfeed slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ListEntry {
    /// Author of the original post. Never changes when re-posted.
    pub origin: u32,
    /// Original post this copy descends from; indexes the re-post counters.
    pub lineage: u32,
    /// Global insertion sequence number. Larger means more recent.
    pub stamp: u64,
}

/// Which Newsfeed entry a user re-posts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Random,
    Newest,
    MostPopular,
    LeastPopular,
}

/// Which slot a new entry overwrites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eviction {
    Random,
    Oldest,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Interarrival {
    Exponential,
    /// Two-phase hyperexponential with balanced means.
    HyperExponential { scv: f64 },
    Deterministic,
}

impl Interarrival {
    pub fn check(&self) -> Result<(), SimError> {
        match *self {
            Interarrival::HyperExponential { scv } if !(scv > 1.0 && scv.is_finite()) => Err(
                SimError::InvalidConfig(format!("hyperexponential needs scv > 1, got {scv}")),
            ),
            _ => Ok(()),
        }
    }

    /// Draws one inter-arrival time with mean `1 / rate`.
    pub fn sample<R: Rng + ?Sized>(&self, rate: f64, rng: &mut R) -> f64 {
        debug_assert!(rate > 0.0);
        match *self {
            Interarrival::Exponential => Exp::new(rate).expect("positive rate").sample(rng),
            Interarrival::Deterministic => 1.0 / rate,
            Interarrival::HyperExponential { scv } => {
                let (p1, _) = hyperexp_phases(scv);
                let p = if rng.random::<f64>() < p1 { p1 } else { 1.0 - p1 };
                Exp::new(2.0 * p * rate).expect("positive rate").sample(rng)
            }
        }
    }
}

/// Phase probabilities `(p1, p2)` of the balanced-means hyperexponential.
/// Phase `k` has rate `2 p_k rate`.
pub fn hyperexp_phases(scv: f64) -> (f64, f64) {
    let s = ((scv - 1.0) / (scv + 1.0)).sqrt();
    (0.5 * (1.0 + s), 0.5 * (1.0 - s))
}

/// Index of the Newsfeed entry to re-post.
pub fn select_post<R: Rng + ?Sized>(
    feed: &[ListEntry],
    repost_counts: &[u32],
    policy: Selection,
    rng: &mut R,
) -> usize {
    debug_assert!(!feed.is_empty());
    let newest_by = |score: &dyn Fn(&ListEntry) -> i64| {
        feed.iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| score(a).cmp(&score(b)).then(a.stamp.cmp(&b.stamp)))
            .map(|(k, _)| k)
            .expect("feed is not empty")
    };
    match policy {
        Selection::Random => rng.random_range(0..feed.len()),
        Selection::Newest => newest_by(&|_| 0),
        Selection::MostPopular => newest_by(&|e| i64::from(repost_counts[e.lineage as usize])),
        Selection::LeastPopular => newest_by(&|e| -i64::from(repost_counts[e.lineage as usize])),
    }
}

/// Slot a new arrival overwrites. `Oldest` picks the smallest stamp, ties by
/// slot index.
pub fn evict_slot<R: Rng + ?Sized>(list: &[ListEntry], policy: Eviction, rng: &mut R) -> usize {
    debug_assert!(!list.is_empty());
    match policy {
        Eviction::Random => rng.random_range(0..list.len()),
        Eviction::Oldest => {
            let mut best = 0;
            for (k, e) in list.iter().enumerate().skip(1) {
                if e.stamp < list[best].stamp {
                    best = k;
                }
            }
            best
        }
    }
}

macro_rules! name_table {
    ($ty:ty, $($name:literal => $value:expr),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = SimError;

            fn from_str(s: &str) -> Result<Self, SimError> {
                match s {
                    $($name => Ok($value),)+
                    other => Err(SimError::InvalidConfig(format!(
                        concat!("unknown ", stringify!($ty), " {:?}"),
                        other
                    ))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $value { return f.write_str($name); })+
                unreachable!()
            }
        }
    };
}

name_table!(Selection,
    "random" => Selection::Random,
    "newest" => Selection::Newest,
    "most_popular" => Selection::MostPopular,
    "least_popular" => Selection::LeastPopular,
);

name_table!(Eviction,
    "random" => Eviction::Random,
    "oldest" => Eviction::Oldest,
);

impl fmt::Display for Interarrival {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interarrival::Exponential => f.write_str("exponential"),
            Interarrival::Deterministic => f.write_str("deterministic"),
            Interarrival::HyperExponential { scv } => write!(f, "hyperexp(scv={scv})"),
        }
    }
}
