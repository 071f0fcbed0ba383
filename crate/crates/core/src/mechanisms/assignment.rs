//! Hungarian algorithm for rectangular min-cost assignment.

/// Minimum-cost assignment of every row to a distinct column.
///
/// `cost[i][j] = None` forbids the pair. Requires `rows <= cols`. Returns the
/// total cost and the column chosen for each row, or `None` if no complete
/// assignment avoids the forbidden pairs.
pub fn min_cost_assignment(cost: &[Vec<Option<i64>>]) -> Option<(i64, Vec<usize>)> {
    let n = cost.len();
    if n == 0 {
        return Some((0, Vec::new()));
    }
    let m = cost[0].len();
    if n > m || cost.iter().any(|r| r.len() != m) {
        return None;
    }
    let max_finite = cost
        .iter()
        .flatten()
        .flatten()
        .map(|c| c.abs())
        .max()
        .unwrap_or(0);
    // Forbidden pairs get a cost no feasible solution can reach.
    let big = (max_finite + 1) * (n as i64 + 1);
    let a = |i: usize, j: usize| cost[i - 1][j - 1].unwrap_or(big);
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = a(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    let mut total = 0;
    for (i, &j) in assign.iter().enumerate() {
        total += cost[i][j]?;
    }
    Some((total, assign))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(cost: &[Vec<Option<i64>>]) -> Option<i64> {
        let n = cost.len();
        let m = cost[0].len();
        let mut best = None;
        let mut cols: Vec<usize> = (0..m).collect();
        loop {
            let total: Option<i64> = (0..n).map(|i| cost[i][cols[i]]).sum();
            if let Some(t) = total {
                best = Some(best.map_or(t, |b: i64| b.min(t)));
            }
            if !crate::enumerate::next_permutation(&mut cols) {
                break;
            }
        }
        best
    }

    #[test]
    fn small_square() {
        let c = vec![
            vec![Some(4), Some(1), Some(3)],
            vec![Some(2), Some(0), Some(5)],
            vec![Some(3), Some(2), Some(2)],
        ];
        let (total, assign) = min_cost_assignment(&c).unwrap();
        assert_eq!(total, 5);
        assert_eq!(assign, vec![1, 0, 2]);
    }

    #[test]
    fn infeasible_when_all_forbidden() {
        let c = vec![vec![None, Some(1)], vec![None, Some(2)]];
        assert_eq!(min_cost_assignment(&c), None);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            n in 1usize..5,
            extra in 0usize..2,
            seed in proptest::collection::vec(proptest::option::weighted(0.85, 0i64..9), 25),
        ) {
            let m = n + extra;
            let cost: Vec<Vec<Option<i64>>> =
                (0..n).map(|i| (0..m).map(|j| seed[i * 5 + j]).collect()).collect();
            let got = min_cost_assignment(&cost);
            prop_assert_eq!(got.as_ref().map(|g| g.0), brute(&cost));
            if let Some((total, assign)) = got {
                let mut seen = assign.clone();
                seen.sort();
                seen.dedup();
                prop_assert_eq!(seen.len(), n);
                let sum: i64 = assign.iter().enumerate().map(|(i, &j)| cost[i][j].unwrap()).sum();
                prop_assert_eq!(sum, total);
            }
        }
    }
}
