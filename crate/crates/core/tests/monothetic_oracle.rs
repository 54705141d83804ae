mod common;

use binquest_core::monothetic::{monothetic_assign, monothetic_fit, MonotheticNode};
use common::{binary_rows, matrix};
use num_rational::Rational64;
use proptest::prelude::*;

/// Σ_j n·p_j(1 − p_j) for the rows in `members`, as an exact fraction.
fn within(rows: &[Vec<u8>], members: &[usize]) -> Rational64 {
    let n = members.len() as i64;
    if n == 0 {
        return Rational64::from_integer(0);
    }
    let m = rows[0].len();
    (0..m)
        .map(|j| {
            let t = members.iter().filter(|&&i| rows[i][j] == 1).count() as i64;
            Rational64::new(t * (n - t), n)
        })
        .sum()
}

#[derive(Debug, PartialEq)]
struct OracleNode {
    split: Option<usize>,
    members: Vec<usize>,
    objective: Rational64,
    children: Vec<OracleNode>,
}

/// Greedy tree: at every node try each column, keep the first one with the
/// smallest child sum, and split only on a strict improvement.
fn oracle(rows: &[Vec<u8>], members: Vec<usize>, depth: usize) -> OracleNode {
    let objective = within(rows, &members);
    let mut node = OracleNode {
        split: None,
        members,
        objective,
        children: Vec::new(),
    };
    if depth == 0 || node.members.len() < 2 {
        return node;
    }
    let m = rows[0].len();
    let mut best: Option<(usize, Rational64)> = None;
    for j in 0..m {
        let zero: Vec<usize> = node
            .members
            .iter()
            .copied()
            .filter(|&i| rows[i][j] == 0)
            .collect();
        let one: Vec<usize> = node
            .members
            .iter()
            .copied()
            .filter(|&i| rows[i][j] == 1)
            .collect();
        if zero.is_empty() || one.is_empty() {
            continue;
        }
        let total = within(rows, &zero) + within(rows, &one);
        if best.is_none_or(|(_, b)| total < b) {
            best = Some((j, total));
        }
    }
    if let Some((j, total)) = best {
        if total < objective {
            let zero = node
                .members
                .iter()
                .copied()
                .filter(|&i| rows[i][j] == 0)
                .collect();
            let one = node
                .members
                .iter()
                .copied()
                .filter(|&i| rows[i][j] == 1)
                .collect();
            node.split = Some(j);
            node.children = vec![oracle(rows, zero, depth - 1), oracle(rows, one, depth - 1)];
        }
    }
    node
}

fn same(tree: &MonotheticNode, want: &OracleNode) -> Result<(), String> {
    if tree.split_column != want.split || tree.members != want.members {
        return Err(format!(
            "split {:?}/{:?} members {:?}/{:?}",
            tree.split_column, want.split, tree.members, want.members
        ));
    }
    let expected = *want.objective.numer() as f64 / *want.objective.denom() as f64;
    if tree.objective != expected {
        return Err(format!("objective {} vs {}", tree.objective, expected));
    }
    if tree.children.len() != want.children.len() {
        return Err("child count".into());
    }
    for (a, b) in tree.children.iter().zip(&want.children) {
        same(a, b)?;
    }
    Ok(())
}

fn leaf_objective(node: &MonotheticNode) -> f64 {
    if node.children.is_empty() {
        node.objective
    } else {
        node.children.iter().map(leaf_objective).sum()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn depth_two_trees_match_greedy_oracle(rows in binary_rows(1..=12, 1..=6)) {
        let m = matrix(&rows, None);
        for depth in 1..=2 {
            let tree = monothetic_fit(&m, depth).unwrap();
            let want = oracle(&rows, (0..rows.len()).collect(), depth);
            if let Err(e) = same(&tree.root, &want) {
                return Err(TestCaseError::fail(format!("depth {depth}: {e}")));
            }
        }
    }

    #[test]
    fn objective_never_rises_with_depth(rows in binary_rows(1..=24, 1..=6)) {
        let m = matrix(&rows, None);
        let mut previous = f64::INFINITY;
        for depth in 1..=4 {
            let tree = monothetic_fit(&m, depth).unwrap();
            let total = leaf_objective(&tree.root);
            prop_assert!(total <= previous + 1e-12);
            prop_assert!((total - tree.objective()).abs() < 1e-12);
            previous = total;
        }
    }

    #[test]
    fn constant_columns_are_never_split(rows in binary_rows(2..=16, 1..=5), fill in 0u8..=1) {
        let widened: Vec<Vec<u8>> = rows.iter().map(|r| {
            let mut r = r.clone();
            r.insert(0, fill);
            r
        }).collect();
        let tree = monothetic_fit(&matrix(&widened, None), 3).unwrap();
        fn walk(n: &MonotheticNode) -> bool {
            n.split_column != Some(0) && n.children.iter().all(walk)
        }
        prop_assert!(walk(&tree.root));
    }

    #[test]
    fn every_row_reaches_the_leaf_holding_it(rows in binary_rows(1..=20, 1..=5)) {
        let tree = monothetic_fit(&matrix(&rows, None), 3).unwrap();
        for leaf in tree.leaves() {
            for &i in &leaf.members {
                prop_assert_eq!(monothetic_assign(&tree, &rows[i]).unwrap(), leaf.leaf_id.unwrap());
            }
        }
    }
}
