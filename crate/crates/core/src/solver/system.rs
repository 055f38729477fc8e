use crate::graph::{GraphError, LeaderGraph, UserId};
use crate::matrix::CsrMatrix;

/// Linear system `p_i = A p_i + b_i`, `q_i = C p_i + d_i`, shared by all
/// labels `i`.
///
/// Row `j` of `A` weights the re-post rate of each leader of `j` by the total
/// Newsfeed input rate of `j`; the matrix `b` holds, in row `j` and column
/// `i`, the self-post share of leader `i` in that same input. `C` and the
/// `d_i` are diagonal and kept as plain vectors.
#[derive(Clone, Debug)]
pub struct PropagationSystem {
    a: CsrMatrix,
    b: CsrMatrix,
    c: Vec<f64>,
    d: Vec<f64>,
}

impl PropagationSystem {
    /// Assembles the system for a legal graph.
    pub fn build(graph: &LeaderGraph) -> Result<Self, GraphError> {
        graph.ensure_valid()?;
        let n = graph.n_users();
        let mut a_rows = Vec::with_capacity(n);
        let mut b_rows = Vec::with_capacity(n);
        for j in graph.users() {
            let input = graph.feed_input_rate(j);
            let leaders = graph.leaders(j);
            a_rows.push(
                leaders
                    .iter()
                    .map(|&k| (k.index(), graph.rates(k).mu / input))
                    .collect(),
            );
            b_rows.push(
                leaders
                    .iter()
                    .map(|&k| (k.index(), graph.rates(k).lambda / input))
                    .collect(),
            );
        }
        let (c, d) = graph
            .all_rates()
            .iter()
            .map(|r| (r.mu / r.total(), r.lambda / r.total()))
            .unzip();
        Ok(PropagationSystem {
            a: CsrMatrix::from_rows(n, a_rows),
            b: CsrMatrix::from_rows(n, b_rows),
            c,
            d,
        })
    }

    pub fn n_users(&self) -> usize {
        self.a.dim()
    }

    /// Propagation matrix `A`.
    pub fn propagation(&self) -> &CsrMatrix {
        &self.a
    }

    /// `b_{j,i}` for all rows `j` (row index) and labels `i` (column index).
    pub fn self_post_shares(&self) -> &CsrMatrix {
        &self.b
    }

    /// Right-hand side `b_i` for label `i`.
    pub fn b(&self, label: UserId) -> Vec<f64> {
        self.b.column(label.index())
    }

    /// Diagonal of `C`: re-post share of each user's own Wall input.
    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Vector `d_i`: a single entry `lambda_i / (lambda_i + mu_i)` at `i`.
    pub fn d(&self, label: UserId) -> Vec<f64> {
        let mut v = vec![0.0; self.n_users()];
        v[label.index()] = self.d[label.index()];
        v
    }

    /// Diagonal entries of all `d_i`, indexed by label.
    pub fn d_diagonal(&self) -> &[f64] {
        &self.d
    }

    /// Wall vector `q_i = C p_i + d_i` written into `out`.
    pub fn wall_from_feed(&self, label: UserId, feed: &[f64], out: &mut [f64]) {
        for ((o, &p), &c) in out.iter_mut().zip(feed).zip(&self.c) {
            *o = c * p;
        }
        out[label.index()] += self.d[label.index()];
    }

    /// Largest deviation from 1 of `(A 1)_j + sum_i b_{j,i}` over rows `j`.
    pub fn row_mass_defect(&self) -> f64 {
        self.a
            .row_sums()
            .iter()
            .zip(self.b.row_sums())
            .map(|(a, b)| (a + b - 1.0).abs())
            .fold(0.0, f64::max)
    }
}
