//! Divisive monothetic clustering of respondents.
//!
//! Each node is split on the single answer whose yes/no partition minimizes the
//! summed within-group variance of the two children, where a group's variance is
//! `Σ_j n·p_j(1 − p_j) = Σ_j T_j·F_j / n` over all answers. Splits are chosen
//! greedily per node by exhaustive search over the answers; comparisons are exact
//! in integer arithmetic so ties reliably go to the lowest column index.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::ResponseMatrix;
use crate::error::{Error, Result};

/// Exact within-group sum of squares `num / den`.
#[derive(Debug, Clone, Copy)]
struct Ratio {
    num: u128,
    den: u128,
}

impl Ratio {
    fn zero() -> Self {
        Ratio { num: 0, den: 1 }
    }

    fn add(self, other: Ratio) -> Ratio {
        Ratio {
            num: self.num * other.den + other.num * self.den,
            den: self.den * other.den,
        }
        .reduced()
    }

    fn reduced(self) -> Ratio {
        let g = gcd(self.num, self.den);
        Ratio {
            num: self.num / g,
            den: self.den / g,
        }
    }

    fn cmp(self, other: Ratio) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }

    fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

fn within_ss(matrix: &ResponseMatrix, members: &[usize]) -> Ratio {
    let n = members.len() as u128;
    if n == 0 {
        return Ratio::zero();
    }
    let mut sum_tf = 0u128;
    for j in 0..matrix.n_cols() {
        let t = members.iter().filter(|&&i| matrix.get(i, j) == 1).count() as u128;
        sum_tf += t * (n - t);
    }
    Ratio {
        num: sum_tf,
        den: n,
    }
    .reduced()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotheticNode {
    /// Answer used to split this node; `None` for leaves.
    pub split_code: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split_column: Option<usize>,
    /// Respondent row indices.
    pub members: Vec<usize>,
    /// Within-group sum of squares of the members.
    pub objective: f64,
    /// Position among the tree's leaves, in depth-first order with the 0-branch first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leaf_id: Option<usize>,
    /// The answer=0 child, then the answer=1 child.
    pub children: Vec<MonotheticNode>,
}

impl MonotheticNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotheticTree {
    pub root: MonotheticNode,
    pub depth: usize,
    pub leaf_count: usize,
    #[serde(skip)]
    n_cols: usize,
}

impl MonotheticTree {
    /// Summed within-group sum of squares over all leaves.
    pub fn objective(&self) -> f64 {
        self.leaves().iter().map(|l| l.objective).sum()
    }

    pub fn leaves(&self) -> Vec<&MonotheticNode> {
        fn walk<'a>(node: &'a MonotheticNode, out: &mut Vec<&'a MonotheticNode>) {
            if node.is_leaf() {
                out.push(node);
            }
            for c in &node.children {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Indented outline, one line per node, with the 0-branch before the 1-branch.
    pub fn render_text(&self) -> String {
        fn walk(node: &MonotheticNode, indent: usize, edge: &str, out: &mut String) {
            let pad = "    ".repeat(indent);
            match (&node.split_code, node.leaf_id) {
                (Some(code), _) => {
                    let _ = writeln!(
                        out,
                        "{pad}{edge}split on {code} (n={}, within-group SS={:.6})",
                        node.members.len(),
                        node.objective
                    );
                }
                (None, leaf) => {
                    let _ = writeln!(
                        out,
                        "{pad}{edge}group {} (n={}, within-group SS={:.6})",
                        leaf.unwrap_or(0),
                        node.members.len(),
                        node.objective
                    );
                }
            }
            if let Some(code) = &node.split_code {
                walk(&node.children[0], indent + 1, &format!("{code}=no: "), out);
                walk(&node.children[1], indent + 1, &format!("{code}=yes: "), out);
            }
        }
        let mut out = String::new();
        walk(&self.root, 0, "", &mut out);
        out
    }
}

/// Grows a greedy monothetic tree up to `depth` levels of splits.
pub fn monothetic_fit(matrix: &ResponseMatrix, depth: usize) -> Result<MonotheticTree> {
    if matrix.n_rows() == 0 || matrix.n_cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    if depth == 0 {
        return Err(Error::InvalidClusterConfig(
            "depth must be at least 1".into(),
        ));
    }
    let members: Vec<usize> = (0..matrix.n_rows()).collect();
    let mut root = grow(matrix, members, depth);
    let mut next_leaf = 0;
    number_leaves(&mut root, &mut next_leaf);
    Ok(MonotheticTree {
        root,
        depth,
        leaf_count: next_leaf,
        n_cols: matrix.n_cols(),
    })
}

fn grow(matrix: &ResponseMatrix, members: Vec<usize>, depth: usize) -> MonotheticNode {
    let own = within_ss(matrix, &members);
    let mut node = MonotheticNode {
        split_code: None,
        split_column: None,
        members,
        objective: own.to_f64(),
        leaf_id: None,
        children: Vec::new(),
    };
    if depth == 0 || node.members.len() < 2 {
        return node;
    }

    let mut best: Option<(usize, Ratio)> = None;
    for j in 0..matrix.n_cols() {
        let (zero, one): (Vec<usize>, Vec<usize>) =
            node.members.iter().partition(|&&i| matrix.get(i, j) == 0);
        if zero.is_empty() || one.is_empty() {
            continue;
        }
        let total = within_ss(matrix, &zero).add(within_ss(matrix, &one));
        if best.is_none_or(|(_, b)| total.cmp(b) == Ordering::Less) {
            best = Some((j, total));
        }
    }
    let Some((j, total)) = best else { return node };
    if total.cmp(own) != Ordering::Less {
        return node;
    }
    let (zero, one): (Vec<usize>, Vec<usize>) =
        node.members.iter().partition(|&&i| matrix.get(i, j) == 0);
    node.split_code = Some(matrix.questions()[j].code.clone());
    node.split_column = Some(j);
    node.children = vec![grow(matrix, zero, depth - 1), grow(matrix, one, depth - 1)];
    node
}

fn number_leaves(node: &mut MonotheticNode, next: &mut usize) {
    if node.is_leaf() {
        node.leaf_id = Some(*next);
        *next += 1;
    }
    for c in node.children.iter_mut() {
        number_leaves(c, next);
    }
}

/// Follows the split answers of `row` down to its leaf.
pub fn monothetic_assign(tree: &MonotheticTree, row: &[u8]) -> Result<usize> {
    if row.len() != tree.n_cols {
        return Err(Error::DimensionMismatch {
            expected: tree.n_cols,
            found: row.len(),
        });
    }
    let mut node = &tree.root;
    while let Some(j) = node.split_column {
        node = &node.children[usize::from(row[j] == 1)];
    }
    Ok(node.leaf_id.expect("leaves are numbered"))
}
