use super::{SolutionSet, SolveError};
use crate::graph::{LeaderGraph, UserId};
use crate::matrix::DenseMatrix;

/// Influence of each label: the mean of `Q[i][n]` over users `n != i`.
pub fn psi(q: &DenseMatrix) -> Result<Vec<f64>, SolveError> {
    let n = q.cols();
    if n < 2 {
        return Err(SolveError::TooFewUsers(n));
    }
    Ok((0..q.rows())
        .map(|i| {
            let row = q.row(i);
            let others: f64 = row.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, v)| v).sum();
            others / (n - 1) as f64
        })
        .collect())
}

/// Users by decreasing influence, ties by increasing id.
pub fn rank(psi: &[f64]) -> Vec<(UserId, f64)> {
    let mut order: Vec<(UserId, f64)> = psi.iter().enumerate().map(|(i, &v)| (UserId(i), v)).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order
}

/// Largest absolute residuals of the Newsfeed balance equations (in rate
/// units) and of the Wall relations (in probability units).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BalanceResiduals {
    pub feed: f64,
    pub wall: f64,
}

/// Plugs a solution back into the per-user balance equations, computed from
/// the graph rather than the assembled matrices.
///
/// For label `i` and user `j`, the outflow of label-`i` posts from the
/// Newsfeed of `j`, `p_i[j] * sum_{k in L(j)} (lambda_k + mu_k)`, must equal
/// the inflow `lambda_i [i in L(j)] + sum_{k in L(j)} mu_k p_i[k]`. The Wall
/// relation is `q_i[j] = (lambda_j [i == j] + mu_j p_i[j]) / (lambda_j + mu_j)`.
pub fn balance_residuals(graph: &LeaderGraph, solution: &SolutionSet) -> BalanceResiduals {
    let mut feed: f64 = 0.0;
    let mut wall: f64 = 0.0;
    for i in graph.users() {
        let p = solution.p.row(i.index());
        let q = solution.q.row(i.index());
        let lambda_i = graph.rates(i).lambda;
        for j in graph.users() {
            let leaders = graph.leaders(j);
            let outflow = p[j.index()] * graph.feed_input_rate(j);
            let mut inflow: f64 = leaders.iter().map(|&k| graph.rates(k).mu * p[k.index()]).sum();
            if leaders.binary_search(&i).is_ok() {
                inflow += lambda_i;
            }
            feed = feed.max((outflow - inflow).abs());

            let r = graph.rates(j);
            let own = if i == j { r.lambda } else { 0.0 };
            let expected = (own + r.mu * p[j.index()]) / r.total();
            wall = wall.max((q[j.index()] - expected).abs());
        }
    }
    BalanceResiduals { feed, wall }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_excludes_self() {
        let q = DenseMatrix::from_rows(vec![vec![0.6, 0.2, 0.4], vec![0.3, 0.7, 0.1], vec![0.1, 0.1, 0.5]]);
        let v = psi(&q).unwrap();
        assert!((v[0] - 0.3).abs() < 1e-15);
        assert!((v[1] - 0.2).abs() < 1e-15);
        assert!((v[2] - 0.1).abs() < 1e-15);
        assert!(matches!(psi(&DenseMatrix::zeros(1, 1)), Err(SolveError::TooFewUsers(1))));
    }

    #[test]
    fn rank_order_and_ties() {
        let r = rank(&[0.2, 0.5, 0.3]);
        assert_eq!(r.iter().map(|x| x.0 .0).collect::<Vec<_>>(), vec![1, 2, 0]);
        let r = rank(&[0.1; 4]);
        assert_eq!(r.iter().map(|x| x.0 .0).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }
}
