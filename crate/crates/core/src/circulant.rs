//! Circulant balanced bipartite graphs.
//!
//! Both sides have `order` nodes. Hyperplane `h_i` is adjacent to point
//! `a_((i + d) mod order)` for every offset `d` in the base offset set.
//! After expansion the graph remembers the original order and offsets so
//! that real edges can be told apart from dummy ones.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRAPH_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CirculantBipartiteGraph {
    order: usize,
    base_offsets: Vec<usize>,
    real_order: usize,
    real_offsets: Vec<usize>,
    dummy_offset: bool,
    labels: Option<Vec<String>>,
}

fn check_offsets(order: usize, offsets: &[usize]) -> Result<Vec<usize>> {
    if order == 0 {
        return Err(Error::domain("graph order must be at least 1"));
    }
    let set: BTreeSet<usize> = offsets.iter().copied().collect();
    if set.len() != offsets.len() {
        return Err(Error::domain(format!("duplicate offsets in {offsets:?}")));
    }
    if let Some(&bad) = set.iter().find(|&&d| d >= order) {
        return Err(Error::domain(format!("offset {bad} outside [0, {order})")));
    }
    if set.is_empty() {
        return Err(Error::domain("offset set is empty"));
    }
    Ok(set.into_iter().collect())
}

impl CirculantBipartiteGraph {
    /// Unexpanded graph of the given order; offsets are sorted on entry.
    pub fn new(order: usize, offsets: &[usize]) -> Result<Self> {
        let base_offsets = check_offsets(order, offsets)?;
        Ok(CirculantBipartiteGraph {
            order,
            real_order: order,
            real_offsets: base_offsets.clone(),
            base_offsets,
            dummy_offset: false,
            labels: None,
        })
    }

    /// Graph with explicit real-edge information, as read back from a file.
    pub fn with_real_part(
        order: usize,
        offsets: &[usize],
        real_order: usize,
        real_offsets: &[usize],
        dummy_offset: bool,
    ) -> Result<Self> {
        let base_offsets = check_offsets(order, offsets)?;
        if real_order > order {
            return Err(Error::domain(format!(
                "real order {real_order} exceeds order {order}"
            )));
        }
        let real_offsets = check_offsets(real_order, real_offsets)?;
        let g = CirculantBipartiteGraph {
            order,
            base_offsets,
            real_order,
            real_offsets,
            dummy_offset,
            labels: None,
        };
        // every real edge must be an edge of the (expanded) graph
        for &d in &g.real_offsets {
            for h in 0..real_order {
                let a = (h + d) % real_order;
                if !g.is_edge(h, a) {
                    return Err(Error::domain(format!(
                        "real edge (h{h}, a{a}) is not covered by offsets {:?}",
                        g.base_offsets
                    )));
                }
            }
        }
        Ok(g)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.order {
            return Err(Error::domain(format!(
                "{} labels for a graph of order {}",
                labels.len(),
                self.order
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn offsets(&self) -> &[usize] {
        &self.base_offsets
    }

    /// Node degree, not counting a padding sentinel.
    pub fn degree(&self) -> usize {
        self.base_offsets.len()
    }

    pub fn real_order(&self) -> usize {
        self.real_order
    }

    pub fn real_offsets(&self) -> &[usize] {
        &self.real_offsets
    }

    pub fn is_expanded(&self) -> bool {
        self.real_order != self.order || self.real_offsets != self.base_offsets
    }

    pub fn has_dummy_offset(&self) -> bool {
        self.dummy_offset
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub(crate) fn set_dummy_offset(&mut self, flag: bool) {
        self.dummy_offset = flag;
    }

    /// Edge list of node 0 in scheduling order; `None` is the padding sentinel.
    pub fn padded_offsets(&self) -> Vec<Option<usize>> {
        let mut v: Vec<Option<usize>> = self.base_offsets.iter().map(|&d| Some(d)).collect();
        if self.dummy_offset {
            v.push(None);
        }
        v
    }

    pub fn is_edge(&self, h: usize, a: usize) -> bool {
        h < self.order
            && a < self.order
            && self
                .base_offsets
                .binary_search(&((a + self.order - h) % self.order))
                .is_ok()
    }

    /// True for edges that existed before expansion.
    pub fn is_real_edge(&self, h: usize, a: usize) -> bool {
        h < self.real_order
            && a < self.real_order
            && self
                .real_offsets
                .binary_search(&((a + self.real_order - h) % self.real_order))
                .is_ok()
    }

    pub fn is_real_node(&self, i: usize) -> bool {
        i < self.real_order
    }

    /// Points of hyperplane `h` in edge order.
    pub fn points_of(&self, h: usize) -> Vec<usize> {
        self.base_offsets
            .iter()
            .map(|&d| (h + d) % self.order)
            .collect()
    }

    /// The same graph seen from the point side: point `a` is adjacent to
    /// hyperplane `a + d'` for `d'` in the negated offset set.
    pub fn transpose(&self) -> Self {
        let neg = |order: usize, ds: &[usize]| -> Vec<usize> {
            let mut v: Vec<usize> = ds.iter().map(|&d| (order - d) % order).collect();
            v.sort_unstable();
            v
        };
        CirculantBipartiteGraph {
            order: self.order,
            base_offsets: neg(self.order, &self.base_offsets),
            real_order: self.real_order,
            real_offsets: neg(self.real_order, &self.real_offsets),
            dummy_offset: self.dummy_offset,
            labels: self.labels.clone(),
        }
    }

    /// Per-hyperplane point lists, each row in edge order.
    pub fn incidence_lists(&self) -> Vec<Vec<usize>> {
        (0..self.order).map(|h| self.points_of(h)).collect()
    }

    /// Recovers `(J, D)` from rows where row `i + 1` is row `i` shifted by one.
    pub fn from_incidence_lists(lists: &[Vec<usize>]) -> Result<Self> {
        let order = lists.len();
        if order == 0 {
            return Err(Error::domain("no incidence rows"));
        }
        let g = Self::new(order, &lists[0]).map_err(|e| Error::NotCirculant {
            row: 0,
            detail: e.to_string(),
        })?;
        for (i, row) in lists.iter().enumerate() {
            let got: BTreeSet<usize> = row.iter().copied().collect();
            let want: BTreeSet<usize> = g.points_of(i).into_iter().collect();
            if got.len() != row.len() || got != want {
                return Err(Error::NotCirculant {
                    row: i,
                    detail: format!("has points {row:?}, expected row 0 shifted by {i}: {want:?}"),
                });
            }
        }
        Ok(g)
    }

    /// Bi-adjacency matrix, hyperplanes as rows.
    pub fn adjacency_matrix(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.order]; self.order];
        for (h, row) in m.iter_mut().enumerate() {
            for a in self.points_of(h) {
                row[a] = 1;
            }
        }
        m
    }

    /// Matrix with 1 for real edges, 0 elsewhere.
    pub fn real_adjacency_matrix(&self) -> Vec<Vec<u8>> {
        (0..self.order)
            .map(|h| {
                (0..self.order)
                    .map(|a| self.is_real_edge(h, a) as u8)
                    .collect()
            })
            .collect()
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            format_version: GRAPH_FORMAT_VERSION,
            order: self.order,
            gamma: self.degree(),
            base_offsets: self.base_offsets.clone(),
            real_order: Some(self.real_order),
            real_offsets: Some(self.real_offsets.clone()),
            dummy_offset: self.dummy_offset,
            labels: self.labels.clone(),
        }
    }

    pub fn from_file(file: &GraphFile) -> Result<Self> {
        if file.format_version != GRAPH_FORMAT_VERSION {
            return Err(Error::format(
                "graph JSON",
                format!("unsupported format_version {}", file.format_version),
            ));
        }
        if file.gamma != file.base_offsets.len() {
            return Err(Error::format(
                "graph JSON",
                format!(
                    "gamma {} does not match {} base offsets",
                    file.gamma,
                    file.base_offsets.len()
                ),
            ));
        }
        let real_order = file.real_order.unwrap_or(file.order);
        let real_offsets = file
            .real_offsets
            .clone()
            .unwrap_or_else(|| file.base_offsets.clone());
        let g = Self::with_real_part(
            file.order,
            &file.base_offsets,
            real_order,
            &real_offsets,
            file.dummy_offset,
        )?;
        match &file.labels {
            Some(l) => g.with_labels(l.clone()),
            None => Ok(g),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("graph serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| Error::format("graph JSON", e))?;
        Self::from_file(&file)
    }
}

/// On-disk graph description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub format_version: u32,
    #[serde(rename = "J")]
    pub order: usize,
    pub gamma: usize,
    pub base_offsets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real_offsets: Option<Vec<usize>>,
    #[serde(default)]
    pub dummy_offset: bool,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

/// All positive divisors of `n`, ascending.
pub fn divisors(n: usize) -> Vec<usize> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// Grows the order by `alpha` dummy nodes per side.
///
/// Offset `d` keeps its class for edges that do not wrap around; wrapping
/// edges land in class `d + alpha`. Offset 0 never wraps, so it does not
/// spawn a second class.
pub fn expand_circulant(graph: &CirculantBipartiteGraph, alpha: usize) -> CirculantBipartiteGraph {
    if alpha == 0 {
        return graph.clone();
    }
    let order = graph.order + alpha;
    let mut set: BTreeSet<usize> = graph.base_offsets.iter().copied().collect();
    for &d in &graph.base_offsets {
        if d != 0 {
            set.insert(d + alpha);
        }
    }
    CirculantBipartiteGraph {
        order,
        base_offsets: set.into_iter().collect(),
        real_order: graph.real_order,
        real_offsets: graph.real_offsets.clone(),
        dummy_offset: false,
        labels: None,
    }
}

/// Matrix view of expansion: embed the bi-adjacency matrix in a larger zero
/// matrix and complete every wrap-around diagonal that holds at least one 1.
pub fn expand_matrix_oracle(graph: &CirculantBipartiteGraph, alpha: usize) -> Vec<Vec<u8>> {
    let j0 = graph.order;
    let n = j0 + alpha;
    let original = graph.adjacency_matrix();
    let mut m = vec![vec![0u8; n]; n];
    for (r, row) in original.iter().enumerate() {
        m[r][..j0].copy_from_slice(row);
    }
    let mut touched = vec![false; n];
    for (r, row) in m.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            if v == 1 {
                touched[(c + n - r) % n] = true;
            }
        }
    }
    for (r, row) in m.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            if touched[(c + n - r) % n] {
                *v = 1;
            }
        }
    }
    m
}

/// Result of the expansion-size search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaChoice {
    pub alpha: usize,
    pub order: usize,
    pub degree: usize,
}

/// Picks the number of dummy nodes to add.
///
/// `accept` says whether an expanded order is usable (for example, has a
/// divisor in a target range). With `a0` the smallest acceptable value, all
/// acceptable values in `[1, 2*a0]` are compared and the one giving the
/// smallest expanded degree wins, ties going to the smaller value.
pub fn select_alpha(
    graph: &CirculantBipartiteGraph,
    max_alpha: usize,
    accept: impl Fn(usize) -> bool,
) -> Option<AlphaChoice> {
    let a0 = (1..=max_alpha).find(|&a| accept(graph.order + a))?;
    (a0..=(2 * a0).min(max_alpha.max(a0)))
        .filter(|&a| accept(graph.order + a))
        .map(|a| AlphaChoice {
            alpha: a,
            order: graph.order + a,
            degree: expand_circulant(graph, a).degree(),
        })
        .min_by_key(|c| (c.degree, c.alpha))
}
