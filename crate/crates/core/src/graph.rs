//! Leader/follower graph with per-user activity rates.
//!
//! User `j` appears in `leaders(n)` when everything `j` puts on its Wall is
//! copied into the Newsfeed of `n`. The follower relation is the transpose and
//! is materialized at construction time.
//!
//! A [`LeaderGraph`] may be built in an illegal state (for instance from a
//! hand-written file), so that [`LeaderGraph::validate`] can report every
//! problem at once. The generators always produce legal graphs, and the
//! solver refuses graphs whose report is not empty.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense user index in `[0, N)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId(pub usize);

impl UserId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for UserId {
    fn from(index: usize) -> Self {
        UserId(index)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Self-post rate `lambda` and re-post rate `mu`, in posts per unit time.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivityRates {
    pub lambda: f64,
    pub mu: f64,
}

impl ActivityRates {
    pub const fn new(lambda: f64, mu: f64) -> Self {
        ActivityRates { lambda, mu }
    }

    /// Rate at which posts arrive on this user's Wall.
    #[inline]
    pub fn total(&self) -> f64 {
        self.lambda + self.mu
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("a complete graph needs at least 2 users, got {0}")]
    TooFewUsers(usize),
    #[error("grid must be at least 2x2, got {rows}x{cols}")]
    DegenerateGrid { rows: usize, cols: usize },
    #[error("ring needs at least 3 users, got {0}")]
    RingTooSmall(usize),
    #[error("ring radius {radius} of user {user} is outside 1..={max}")]
    BadRingRadius { user: usize, radius: usize, max: usize },
    #[error("expected {expected} per-user entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("user {user} lists leader index {leader} but the graph has {n_users} users")]
    LeaderOutOfRange {
        user: usize,
        leader: usize,
        n_users: usize,
    },
    #[error("duplicate user id {0:?}")]
    DuplicateId(String),
    #[error("user {user:?} lists unknown leader {leader:?}")]
    UnknownLeader { user: String, leader: String },
    #[error("invalid graph: {0}")]
    Invalid(ValidationReport),
    #[error("graph file: {0}")]
    Io(String),
    #[error("graph file does not match the schema: {0}")]
    Schema(String),
}

/// One violated invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    SelfLoop { user: UserId },
    EmptyLeaderSet { user: UserId },
    InactiveUser { user: UserId },
    DuplicateLeader { user: UserId, leader: UserId },
    BadRate { user: UserId },
}

impl Violation {
    pub fn user(&self) -> UserId {
        match *self {
            Violation::SelfLoop { user }
            | Violation::EmptyLeaderSet { user }
            | Violation::InactiveUser { user }
            | Violation::DuplicateLeader { user, .. }
            | Violation::BadRate { user } => user,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop { user } => write!(f, "user {user}: self-loop"),
            Violation::EmptyLeaderSet { user } => write!(f, "user {user}: empty leader set"),
            Violation::InactiveUser { user } => write!(f, "user {user}: inactive user"),
            Violation::DuplicateLeader { user, leader } => {
                write!(f, "user {user}: leader {leader} listed twice")
            }
            Violation::BadRate { user } => {
                write!(f, "user {user}: rates must be finite and non-negative")
            }
        }
    }
}

/// Every invariant violation found in a graph. Empty iff the graph is legal.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "no violations");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Directed leader graph over `N` users.
#[derive(Clone, Debug, PartialEq)]
pub struct LeaderGraph {
    names: Vec<String>,
    leaders: Vec<Vec<UserId>>,
    followers: Vec<Vec<UserId>>,
    rates: Vec<ActivityRates>,
}

impl LeaderGraph {
    /// Assembles a graph from per-user leader lists and rates. Leader lists are
    /// sorted; indices must be in range. Semantic invariants are not enforced
    /// here, see [`LeaderGraph::validate`].
    pub fn from_parts(
        leaders: Vec<Vec<usize>>,
        rates: Vec<ActivityRates>,
    ) -> Result<Self, GraphError> {
        let n = leaders.len();
        if rates.len() != n {
            return Err(GraphError::LengthMismatch {
                expected: n,
                got: rates.len(),
            });
        }
        let mut sorted = Vec::with_capacity(n);
        for (user, list) in leaders.into_iter().enumerate() {
            if let Some(&leader) = list.iter().find(|&&l| l >= n) {
                return Err(GraphError::LeaderOutOfRange {
                    user,
                    leader,
                    n_users: n,
                });
            }
            let mut list: Vec<UserId> = list.into_iter().map(UserId).collect();
            list.sort_unstable();
            sorted.push(list);
        }
        let mut followers = vec![Vec::new(); n];
        for (user, list) in sorted.iter().enumerate() {
            for &leader in list {
                followers[leader.0].push(UserId(user));
            }
        }
        Ok(LeaderGraph {
            names: (0..n).map(|i| i.to_string()).collect(),
            leaders: sorted,
            followers,
            rates,
        })
    }

    /// Each user follows every other user.
    pub fn complete(n_users: usize, rates: ActivityRates) -> Result<Self, GraphError> {
        if n_users < 2 {
            return Err(GraphError::TooFewUsers(n_users));
        }
        let leaders = (0..n_users)
            .map(|n| (0..n_users).filter(|&k| k != n).collect())
            .collect();
        Self::from_parts(leaders, vec![rates; n_users])
    }

    /// `rows x cols` lattice, users numbered row-major. Leaders are the
    /// 4-neighborhood clipped at the boundary, so the relation is symmetric.
    pub fn grid(rows: usize, cols: usize, rates: ActivityRates) -> Result<Self, GraphError> {
        if rows < 2 || cols < 2 {
            return Err(GraphError::DegenerateGrid { rows, cols });
        }
        let mut leaders = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let mut list = Vec::with_capacity(4);
                if r > 0 {
                    list.push((r - 1) * cols + c);
                }
                if c > 0 {
                    list.push(r * cols + c - 1);
                }
                if c + 1 < cols {
                    list.push(r * cols + c + 1);
                }
                if r + 1 < rows {
                    list.push((r + 1) * cols + c);
                }
                leaders.push(list);
            }
        }
        Self::from_parts(leaders, vec![rates; rows * cols])
    }

    /// Users on a circle; user `i` has leaders `i±1, …, i±radii[i]` modulo `N`.
    /// Radii above `(N-1)/2` would list a leader twice and are rejected.
    pub fn ring(radii: &[usize], rates: &[ActivityRates]) -> Result<Self, GraphError> {
        let n = radii.len();
        if n < 3 {
            return Err(GraphError::RingTooSmall(n));
        }
        if rates.len() != n {
            return Err(GraphError::LengthMismatch {
                expected: n,
                got: rates.len(),
            });
        }
        let max = (n - 1) / 2;
        let mut leaders = Vec::with_capacity(n);
        for (user, &radius) in radii.iter().enumerate() {
            if radius == 0 || radius > max {
                return Err(GraphError::BadRingRadius { user, radius, max });
            }
            let mut list = Vec::with_capacity(2 * radius);
            for step in 1..=radius {
                list.push((user + step) % n);
                list.push((user + n - step) % n);
            }
            leaders.push(list);
        }
        Self::from_parts(leaders, rates.to_vec())
    }

    /// Ring where every user shares one radius and one rate pair.
    pub fn uniform_ring(n_users: usize, radius: usize, rates: ActivityRates) -> Result<Self, GraphError> {
        Self::ring(&vec![radius; n_users], &vec![rates; n_users])
    }

    /// Ring with radii uniform in `1..=max_radius` and rates uniform in
    /// `rate_range x rate_range`.
    pub fn random_ring<R: Rng + ?Sized>(
        n_users: usize,
        max_radius: usize,
        rate_range: (f64, f64),
        rng: &mut R,
    ) -> Result<Self, GraphError> {
        let radii: Vec<usize> = (0..n_users).map(|_| rng.random_range(1..=max_radius)).collect();
        let rates: Vec<ActivityRates> = (0..n_users)
            .map(|_| {
                ActivityRates::new(
                    rng.random_range(rate_range.0..=rate_range.1),
                    rng.random_range(rate_range.0..=rate_range.1),
                )
            })
            .collect();
        Self::ring(&radii, &rates)
    }

    /// Each user draws between 1 and `max_leaders` distinct leaders uniformly
    /// among the others; rates are uniform in `rate_range x rate_range`.
    pub fn random_leaders<R: Rng + ?Sized>(
        n_users: usize,
        max_leaders: usize,
        rate_range: (f64, f64),
        rng: &mut R,
    ) -> Result<Self, GraphError> {
        if n_users < 2 {
            return Err(GraphError::TooFewUsers(n_users));
        }
        let cap = max_leaders.clamp(1, n_users - 1);
        let leaders = (0..n_users)
            .map(|user| {
                let k = rng.random_range(1..=cap);
                rand::seq::index::sample(rng, n_users - 1, k)
                    .into_iter()
                    .map(|x| if x >= user { x + 1 } else { x })
                    .collect()
            })
            .collect();
        let rates = (0..n_users)
            .map(|_| {
                ActivityRates::new(
                    rng.random_range(rate_range.0..=rate_range.1),
                    rng.random_range(rate_range.0..=rate_range.1),
                )
            })
            .collect();
        Self::from_parts(leaders, rates)
    }

    /// Replaces the display names used by the file format.
    pub fn with_names(mut self, names: Vec<String>) -> Result<Self, GraphError> {
        if names.len() != self.n_users() {
            return Err(GraphError::LengthMismatch {
                expected: self.n_users(),
                got: names.len(),
            });
        }
        self.names = names;
        Ok(self)
    }

    pub fn n_users(&self) -> usize {
        self.leaders.len()
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        (0..self.n_users()).map(UserId)
    }

    pub fn leaders(&self, user: UserId) -> &[UserId] {
        &self.leaders[user.0]
    }

    pub fn followers(&self, user: UserId) -> &[UserId] {
        &self.followers[user.0]
    }

    pub fn rates(&self, user: UserId) -> ActivityRates {
        self.rates[user.0]
    }

    pub fn all_rates(&self) -> &[ActivityRates] {
        &self.rates
    }

    pub fn name(&self, user: UserId) -> &str {
        &self.names[user.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn is_leader_of(&self, leader: UserId, user: UserId) -> bool {
        self.leaders[user.0].binary_search(&leader).is_ok()
    }

    /// Copy of the graph with one user's rates replaced.
    pub fn with_rates(&self, user: UserId, rates: ActivityRates) -> Self {
        let mut g = self.clone();
        g.rates[user.0] = rates;
        g
    }

    /// Total rate of posts arriving on the Newsfeed of `user`.
    pub fn feed_input_rate(&self, user: UserId) -> f64 {
        self.leaders[user.0].iter().map(|&k| self.rates[k.0].total()).sum()
    }

    /// Lists every violated invariant.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for user in self.users() {
            let list = self.leaders(user);
            if list.is_empty() {
                violations.push(Violation::EmptyLeaderSet { user });
            }
            if list.binary_search(&user).is_ok() {
                violations.push(Violation::SelfLoop { user });
            }
            for pair in list.windows(2) {
                if pair[0] == pair[1] {
                    violations.push(Violation::DuplicateLeader {
                        user,
                        leader: pair[0],
                    });
                }
            }
            let r = self.rates(user);
            if !(r.lambda.is_finite() && r.mu.is_finite() && r.lambda >= 0.0 && r.mu >= 0.0) {
                violations.push(Violation::BadRate { user });
            } else if r.total() <= 0.0 {
                violations.push(Violation::InactiveUser { user });
            }
        }
        ValidationReport { violations }
    }

    pub fn ensure_valid(&self) -> Result<(), GraphError> {
        let report = self.validate();
        if report.is_empty() {
            Ok(())
        } else {
            Err(GraphError::Invalid(report))
        }
    }

    pub fn to_file_format(&self) -> GraphFile {
        GraphFile {
            users: self
                .users()
                .map(|u| UserRecord {
                    id: self.name(u).to_owned(),
                    lambda: self.rates(u).lambda,
                    mu: self.rates(u).mu,
                    leaders: self.leaders(u).iter().map(|&l| self.name(l).to_owned()).collect(),
                })
                .collect(),
        }
    }

    /// Builds and validates a graph from its file representation. User order
    /// in the file defines the dense indices.
    pub fn from_file_format(file: GraphFile) -> Result<Self, GraphError> {
        let mut index = std::collections::HashMap::with_capacity(file.users.len());
        for (k, u) in file.users.iter().enumerate() {
            if index.insert(u.id.clone(), k).is_some() {
                return Err(GraphError::DuplicateId(u.id.clone()));
            }
        }
        let mut leaders = Vec::with_capacity(file.users.len());
        let mut rates = Vec::with_capacity(file.users.len());
        let mut names = Vec::with_capacity(file.users.len());
        for u in file.users {
            let mut list = Vec::with_capacity(u.leaders.len());
            for l in &u.leaders {
                match index.get(l) {
                    Some(&k) => list.push(k),
                    None => {
                        return Err(GraphError::UnknownLeader {
                            user: u.id.clone(),
                            leader: l.clone(),
                        })
                    }
                }
            }
            leaders.push(list);
            rates.push(ActivityRates::new(u.lambda, u.mu));
            names.push(u.id);
        }
        let graph = Self::from_parts(leaders, rates)?.with_names(names)?;
        graph.ensure_valid()?;
        Ok(graph)
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| GraphError::Schema(e.to_string()))?;
        Self::from_file_format(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_format()).expect("graph file serializes")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_file(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        let path = path.as_ref();
        let mut text = self.to_json();
        text.push('\n');
        fs::write(path, text).map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))
    }
}

/// On-disk graph representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub users: Vec<UserRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserRecord {
    pub id: String,
    pub lambda: f64,
    pub mu: f64,
    pub leaders: Vec<String>,
}

/// Grid coordinates of a row-major user index.
pub fn grid_position(user: UserId, cols: usize) -> (usize, usize) {
    (user.0 / cols, user.0 % cols)
}
