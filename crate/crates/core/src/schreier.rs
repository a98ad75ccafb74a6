//! Rooted, edge-labelled graphs presented by a lazy right action of the
//! generators on canonical vertex states.
//!
//! A [`SchreierGraph`] only has to provide `root` and `step`. Everything else
//! here (balls, shadows, prefixes, tree-likeness, fingerprints) is generic and
//! consults the optional hints a concrete graph may expose about its own
//! structure, falling back to bounded searches.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::{self, Debug};
use std::hash::Hash;

use rand::Rng;

use crate::error::{Error, Result};
use crate::freegroup::{Generator, ReducedWord};
use crate::rng::stream_rng;

/// Default cap on vertices touched by generic searches.
pub const DEFAULT_SEARCH_BUDGET: usize = 2_000_000;

pub trait SchreierGraph: Send + Sync {
    type Vertex: Clone + Eq + Hash + Ord + Debug + Send + Sync;

    fn rank(&self) -> usize;
    fn root(&self) -> Self::Vertex;

    /// `v.s`. Total on every reachable vertex of a genuine Schreier graph.
    fn step(&self, v: &Self::Vertex, s: Generator) -> Self::Vertex;

    /// In-place `v := v.s`, for hot loops.
    fn step_mut(&self, v: &mut Self::Vertex, s: Generator) {
        *v = self.step(v, s);
    }

    /// Like `step`, but `None` on a dangling slot of a graph fragment.
    fn try_step(&self, v: &Self::Vertex, s: Generator) -> Option<Self::Vertex> {
        Some(self.step(v, s))
    }

    /// Exact distance to the root, when the graph knows it cheaply.
    fn depth_hint(&self, _v: &Self::Vertex) -> Option<usize> {
        None
    }

    /// A cheap lower bound on the distance to the root.
    fn distance_lower_bound(&self, v: &Self::Vertex) -> usize {
        self.depth_hint(v).unwrap_or(0)
    }

    /// The reduced word of the deepest tree-core vertex whose shadow holds `v`.
    ///
    /// Graphs that are tree-like near the root return, for a vertex `v` of the
    /// tree core, the word `w` with `root.w = v`, and for a vertex beyond the
    /// core the word of the leaf it hangs from. Then `pref_k(v)` is the vertex
    /// reached by the length-`k` prefix of this word.
    fn tree_address(&self, _v: &Self::Vertex) -> Option<ReducedWord> {
        None
    }

    /// Structural answer to "is `u` in the shadow of `v`", if known.
    fn shadow_hint(&self, _v: &Self::Vertex, _u: &Self::Vertex) -> Option<bool> {
        None
    }

    /// Structural answer to "does `v` have a shadow beyond itself", if known.
    fn leaf_has_shadow(&self, _v: &Self::Vertex) -> Option<bool> {
        None
    }

    /// A depth up to which the graph is known by construction to be tree-like.
    fn tree_like_certificate(&self) -> Option<usize> {
        None
    }
}

/// `v.w`, applied letter by letter.
pub fn act<G: SchreierGraph + ?Sized>(g: &G, v: &G::Vertex, w: &ReducedWord) -> G::Vertex {
    let mut x = v.clone();
    act_mut(g, &mut x, w);
    x
}

#[inline]
pub fn act_mut<G: SchreierGraph + ?Sized>(g: &G, v: &mut G::Vertex, w: &ReducedWord) {
    for &s in w.letters() {
        g.step_mut(v, s);
    }
}

/// Uniform random reduced word of exact length `len`.
pub fn random_reduced_word<R: Rng + ?Sized>(rank: usize, len: usize, rng: &mut R) -> ReducedWord {
    let mut letters: Vec<Generator> = Vec::with_capacity(len);
    for i in 0..len {
        let s = if i == 0 {
            Generator::all(rank)
                .nth(rng.random_range(0..2 * rank))
                .expect("in range")
        } else {
            let forbidden = letters[i - 1].inverse();
            let j = rng.random_range(0..2 * rank - 1);
            let s = Generator::all(rank).nth(j).expect("in range");
            if s.code() >= forbidden.code() {
                Generator::all(rank).nth(j + 1).expect("in range")
            } else {
                s
            }
        };
        letters.push(s);
    }
    ReducedWord::from_reduced(letters)
}

fn neighbours<G: SchreierGraph + ?Sized>(g: &G, v: &G::Vertex) -> Vec<G::Vertex> {
    Generator::all(g.rank())
        .filter_map(|s| g.try_step(v, s))
        .collect()
}

/// Vertices within distance `r` of `center`, in BFS order, with distances.
pub fn ball_with_distances<G: SchreierGraph + ?Sized>(
    g: &G,
    center: &G::Vertex,
    r: usize,
    budget: usize,
) -> Result<Vec<(G::Vertex, usize)>> {
    let mut seen: HashSet<G::Vertex> = HashSet::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert(center.clone());
    queue.push_back((center.clone(), 0usize));
    while let Some((v, d)) = queue.pop_front() {
        order.push((v.clone(), d));
        if d == r {
            continue;
        }
        for u in neighbours(g, &v) {
            if seen.insert(u.clone()) {
                if seen.len() > budget {
                    return Err(Error::budget(
                        "search",
                        format!("ball of radius {r} exceeds {budget} vertices"),
                    ));
                }
                queue.push_back((u, d + 1));
            }
        }
    }
    Ok(order)
}

pub fn ball<G: SchreierGraph + ?Sized>(
    g: &G,
    center: &G::Vertex,
    r: usize,
) -> Result<Vec<G::Vertex>> {
    Ok(ball_with_distances(g, center, r, DEFAULT_SEARCH_BUDGET)?
        .into_iter()
        .map(|(v, _)| v)
        .collect())
}

/// Graph distance `|v|` to the root over both orientations of every label.
pub fn distance_to_root<G: SchreierGraph + ?Sized>(
    g: &G,
    v: &G::Vertex,
    max_radius: usize,
) -> Result<usize> {
    if let Some(d) = g.depth_hint(v) {
        return Ok(d);
    }
    let root = g.root();
    for (u, d) in ball_with_distances(g, v, max_radius, DEFAULT_SEARCH_BUDGET)? {
        if u == root {
            return Ok(d);
        }
    }
    Err(Error::Indeterminate(format!(
        "root not within distance {max_radius} of {v:?}"
    )))
}

/// Number of reduced words of length exactly `k` in rank `rank`.
pub fn sphere_size(rank: usize, k: usize) -> u128 {
    if k == 0 {
        1
    } else {
        2 * rank as u128 * (2 * rank as u128 - 1).pow(k as u32 - 1)
    }
}

/// Number of reduced words of length at most `n`.
pub fn tree_ball_size(rank: usize, n: usize) -> u128 {
    (0..=n).map(|k| sphere_size(rank, k)).sum()
}

/// The default search radius for shadow checks at depth `n` with jump `r`.
pub fn default_shadow_radius(n: usize, max_step_length: usize) -> usize {
    n + 2 * max_step_length + 8
}

/// Whether every path from `u` to the root passes through `v`.
///
/// A structural hint is used when the graph has one. Otherwise the component
/// of `u` in the graph with `v` deleted is explored up to `radius` steps from
/// `u`: reaching the root answers `false`, exhausting the component answers
/// `true`, and anything else is [`Error::Indeterminate`].
pub fn shadow_contains<G: SchreierGraph + ?Sized>(
    g: &G,
    v: &G::Vertex,
    u: &G::Vertex,
    radius: usize,
) -> Result<bool> {
    let root = g.root();
    if *v == root || u == v {
        return Ok(true);
    }
    if let Some(b) = g.shadow_hint(v, u) {
        return Ok(b);
    }
    if *u == root {
        return Ok(false);
    }
    let mut seen: HashSet<G::Vertex> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(u.clone());
    queue.push_back((u.clone(), 0usize));
    let mut truncated = false;
    while let Some((x, d)) = queue.pop_front() {
        for y in neighbours(g, &x) {
            if y == *v || seen.contains(&y) {
                continue;
            }
            if y == root {
                return Ok(false);
            }
            if d + 1 > radius || seen.len() >= DEFAULT_SEARCH_BUDGET {
                truncated = true;
                continue;
            }
            seen.insert(y.clone());
            queue.push_back((y, d + 1));
        }
    }
    if truncated {
        Err(Error::Indeterminate(format!(
            "shadow search from {u:?} around {v:?} exceeded radius {radius}"
        )))
    } else {
        Ok(true)
    }
}

/// Whether the radius-`n` ball at the root is the depth-`n` regular tree and
/// every depth-`n` vertex has a nonempty shadow beyond itself.
///
/// The ball is compared through the words of length at most `n`: the graph
/// is tree-like iff `w -> root.w` is injective on them. Edges between two
/// depth-`n` vertices (and loops there) lie outside the radius-`n` ball in
/// this convention, which is the one under which glued graphs are tree-like.
pub fn is_tree_like<G: SchreierGraph + ?Sized>(g: &G, n: usize) -> Result<bool> {
    let rank = g.rank();
    let size = tree_ball_size(rank, n);
    if size > DEFAULT_SEARCH_BUDGET as u128 {
        return Err(Error::budget(
            "search",
            format!("tree ball of depth {n} has {size} vertices"),
        ));
    }
    let root = g.root();
    let mut seen: HashSet<G::Vertex> = HashSet::with_capacity(size as usize);
    seen.insert(root.clone());
    let mut frontier: Vec<(G::Vertex, Option<Generator>)> = vec![(root.clone(), None)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(frontier.len() * (2 * rank - 1));
        for (v, last) in &frontier {
            for s in Generator::all(rank) {
                if Some(s.inverse()) == *last {
                    continue;
                }
                let Some(u) = g.try_step(v, s) else {
                    return Ok(false);
                };
                if !seen.insert(u.clone()) {
                    return Ok(false);
                }
                next.push((u, Some(s)));
            }
        }
        frontier = next;
    }
    let radius = default_shadow_radius(n, 1);
    for (v, last) in &frontier {
        if !has_shadow_beyond(g, v, *last, radius)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn has_shadow_beyond<G: SchreierGraph + ?Sized>(
    g: &G,
    v: &G::Vertex,
    last: Option<Generator>,
    radius: usize,
) -> Result<bool> {
    if let Some(b) = g.leaf_has_shadow(v) {
        return Ok(b);
    }
    let mut pending: Option<Error> = None;
    for s in Generator::all(g.rank()) {
        if Some(s.inverse()) == last {
            continue;
        }
        let Some(u) = g.try_step(v, s) else { continue };
        if u == *v {
            continue;
        }
        match shadow_contains(g, v, &u, radius) {
            Ok(true) => return Ok(true),
            Ok(false) => {}
            Err(e @ Error::Indeterminate(_)) => pending = Some(e),
            Err(e) => return Err(e),
        }
    }
    match pending {
        Some(e) => Err(e),
        None => Ok(false),
    }
}

/// Tree-likeness to depth `n`, trusting a construction certificate when the
/// full enumeration would be too large.
pub fn ensure_tree_like<G: SchreierGraph + ?Sized>(g: &G, n: usize) -> Result<()> {
    if let Some(c) = g.tree_like_certificate() {
        if n <= c {
            return Ok(());
        }
        return Err(Error::Contract(format!(
            "graph is only certified tree-like to depth {c}, not {n}"
        )));
    }
    if is_tree_like(g, n)? {
        Ok(())
    } else {
        Err(Error::Contract(format!("graph is not {n}-tree-like")))
    }
}

/// The depth-`k` ancestor of `v` through which every root path passes, or
/// `v` itself when `|v| <= k`.
pub fn prefix_k<G: SchreierGraph + ?Sized>(g: &G, v: &G::Vertex, k: usize) -> Result<G::Vertex> {
    if let Some(w) = g.tree_address(v) {
        if w.len() <= k {
            return Ok(v.clone());
        }
        return Ok(act(g, &g.root(), &w.prefix(k)));
    }
    ensure_tree_like(g, k)?;
    let radius = 4 * k + 64;
    // a geodesic from v back to the root
    let root = g.root();
    let dist = distance_to_root(g, v, radius)?;
    if dist <= k {
        return Ok(v.clone());
    }
    let from_root: HashMap<G::Vertex, usize> =
        ball_with_distances(g, &root, dist, DEFAULT_SEARCH_BUDGET)?
            .into_iter()
            .collect();
    let mut cur = v.clone();
    for d in (k..dist).rev() {
        cur = neighbours(g, &cur)
            .into_iter()
            .filter(|u| from_root.get(u) == Some(&d))
            .min()
            .ok_or_else(|| Error::Indeterminate(format!("no geodesic step from {cur:?}")))?;
    }
    if shadow_contains(g, &cur, v, radius)? {
        Ok(cur)
    } else {
        Err(Error::Contract(format!(
            "{v:?} is in no depth-{k} shadow; graph not tree-like to depth {k}"
        )))
    }
}

/// Canonical serialization of a rooted, labelled ball.
///
/// Vertices are numbered in BFS order from the centre, trying letters in
/// the fixed order `a, A, b, B, ...`. Because every label acts as a partial
/// bijection, a label-preserving rooted isomorphism is unique when it exists,
/// so two balls are isomorphic iff their serializations agree.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BallFingerprint {
    pub radius: usize,
    pub canonical: String,
}

impl BallFingerprint {
    pub fn as_bytes(&self) -> &[u8] {
        self.canonical.as_bytes()
    }
}

impl fmt::Debug for BallFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BallFingerprint({})", self.canonical)
    }
}

pub fn ball_fingerprint<G: SchreierGraph + ?Sized>(
    g: &G,
    v: &G::Vertex,
    r: usize,
) -> Result<BallFingerprint> {
    let order = ball_with_distances(g, v, r, DEFAULT_SEARCH_BUDGET)?;
    let index: HashMap<&G::Vertex, usize> =
        order.iter().enumerate().map(|(i, (x, _))| (x, i)).collect();
    let mut out = format!("r={r};n={};", order.len());
    for (x, _) in &order {
        for s in Generator::all(g.rank()) {
            match g.try_step(x, s).and_then(|y| index.get(&y).copied()) {
                Some(j) => out.push_str(&j.to_string()),
                None => out.push('-'),
            }
            out.push(',');
        }
        out.push(';');
    }
    Ok(BallFingerprint {
        radius: r,
        canonical: out,
    })
}

/// Outcome of the step/unstep round-trip audit.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<String>,
}

/// Checks `step(step(v, s), s^{-1}) = v` at `samples` random vertices
/// `root.w` (`|w| <= max_len`) and random letters. Round trips for both `s`
/// and `s^{-1}` make every label a bijection.
pub fn audit_schreier<G: SchreierGraph + ?Sized>(
    g: &G,
    samples: usize,
    max_len: usize,
    seed: u64,
) -> AuditReport {
    let mut rng = stream_rng(seed, 0xA0D1);
    let mut report = AuditReport::default();
    let root = g.root();
    for _ in 0..samples {
        let len = rng.random_range(0..=max_len);
        let w = random_reduced_word(g.rank(), len, &mut rng);
        let v = act(g, &root, &w);
        let s = Generator::all(g.rank())
            .nth(rng.random_range(0..2 * g.rank()))
            .expect("in range");
        let back = g.step(&g.step(&v, s), s.inverse());
        report.checked += 1;
        if back != v {
            report.violations += 1;
            report
                .first_violation
                .get_or_insert_with(|| format!("{v:?} via {s:?} returns to {back:?}"));
        }
    }
    report
}

/// A finite Schreier graph with vertices `0..len`, stored as a table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGraph {
    rank: usize,
    root: usize,
    /// `table[v][code]` is `v.s` for the letter with that code.
    table: Vec<Vec<usize>>,
}

impl FiniteGraph {
    /// Builds from positive-label edges `(v, i, u)` meaning `v.s_i = u`.
    pub fn from_edges(
        rank: usize,
        len: usize,
        root: usize,
        edges: &[(usize, usize, usize)],
    ) -> Result<Self> {
        if root >= len {
            return Err(Error::Invalid(format!("root {root} out of range")));
        }
        let mut table = vec![vec![usize::MAX; 2 * rank]; len];
        for &(v, i, u) in edges {
            if v >= len || u >= len || i >= rank {
                return Err(Error::Invalid(format!("edge ({v}, {i}, {u}) out of range")));
            }
            let s = Generator::positive(i);
            let fwd = &mut table[v][s.code() as usize];
            if *fwd != usize::MAX {
                return Err(Error::Invalid(format!(
                    "vertex {v} has two outgoing {s} edges"
                )));
            }
            *fwd = u;
            let back = &mut table[u][s.inverse().code() as usize];
            if *back != usize::MAX {
                return Err(Error::Invalid(format!(
                    "vertex {u} has two incoming {s} edges"
                )));
            }
            *back = v;
        }
        if let Some(v) = table.iter().position(|row| row.contains(&usize::MAX)) {
            return Err(Error::Invalid(format!("vertex {v} is missing an edge")));
        }
        Ok(FiniteGraph { rank, root, table })
    }

    /// Enumerates the component of the root of `g`, if it has at most `limit` vertices.
    pub fn explore<G: SchreierGraph + ?Sized>(g: &G, limit: usize) -> Result<Self> {
        let order = ball_with_distances(g, &g.root(), usize::MAX, limit)?;
        let index: HashMap<&G::Vertex, usize> =
            order.iter().enumerate().map(|(i, (x, _))| (x, i)).collect();
        let mut edges = Vec::new();
        for (x, _) in &order {
            for i in 0..g.rank() {
                let y = g.step(x, Generator::positive(i));
                edges.push((index[x], i, index[&y]));
            }
        }
        Self::from_edges(g.rank(), order.len(), 0, &edges)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Text edge list: a `root v` line, then `v s u` lines for positive labels.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("root {}\n", self.root);
        for (v, row) in self.table.iter().enumerate() {
            for i in 0..self.rank {
                let s = Generator::positive(i);
                out.push_str(&format!("{v} {s} {}\n", row[s.code() as usize]));
            }
        }
        out
    }

    pub fn parse_edge_list(rank: usize, text: &str) -> Result<Self> {
        let mut root = None;
        let mut edges = Vec::new();
        let mut len = 0;
        for (lineno, line) in text.lines().enumerate() {
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse(format!("edge list line {}: {line:?}", lineno + 1));
            match f.as_slice() {
                [] => continue,
                ["root", v] => root = Some(v.parse::<usize>().map_err(|_| bad())?),
                [v, s, u] => {
                    let v: usize = v.parse().map_err(|_| bad())?;
                    let u: usize = u.parse().map_err(|_| bad())?;
                    let mut cs = s.chars();
                    let g = match (cs.next().and_then(Generator::from_char), cs.next()) {
                        (Some(g), None) => g,
                        _ => return Err(bad()),
                    };
                    len = len.max(v + 1).max(u + 1);
                    if g.is_inverted() {
                        edges.push((u, g.index(), v));
                    } else {
                        edges.push((v, g.index(), u));
                    }
                }
                _ => return Err(bad()),
            }
        }
        let root = root.ok_or_else(|| Error::Parse("edge list has no root line".into()))?;
        Self::from_edges(rank, len.max(root + 1), root, &edges)
    }
}

impl SchreierGraph for FiniteGraph {
    type Vertex = usize;

    fn rank(&self) -> usize {
        self.rank
    }

    fn root(&self) -> usize {
        self.root
    }

    fn step(&self, v: &usize, s: Generator) -> usize {
        self.table[*v][s.code() as usize]
    }
}

/// The orbit graph of a tuple of vertices under the diagonal action.
///
/// With the root of `graph` in the first slot this is the Schreier graph of
/// the intersection of the corresponding stabilizers, a cover of `graph`.
/// Structural hints are taken from the first coordinate.
pub struct TupleGraph<'a, G: SchreierGraph> {
    pub graph: &'a G,
    pub root: Vec<G::Vertex>,
}

impl<'a, G: SchreierGraph> TupleGraph<'a, G> {
    pub fn new(graph: &'a G, others: impl IntoIterator<Item = G::Vertex>) -> Self {
        let mut root = vec![graph.root()];
        root.extend(others);
        TupleGraph { graph, root }
    }
}

impl<G: SchreierGraph> SchreierGraph for TupleGraph<'_, G> {
    type Vertex = Vec<G::Vertex>;

    fn rank(&self) -> usize {
        self.graph.rank()
    }

    fn root(&self) -> Self::Vertex {
        self.root.clone()
    }

    fn step(&self, v: &Self::Vertex, s: Generator) -> Self::Vertex {
        v.iter().map(|x| self.graph.step(x, s)).collect()
    }

    fn leaf_has_shadow(&self, v: &Self::Vertex) -> Option<bool> {
        self.graph.leaf_has_shadow(&v[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Z_4 cycle with a-edges and b-loops.
    fn cycle4() -> FiniteGraph {
        let mut e = Vec::new();
        for v in 0..4 {
            e.push((v, 0, (v + 1) % 4));
            e.push((v, 1, v));
        }
        FiniteGraph::from_edges(2, 4, 0, &e).unwrap()
    }

    #[test]
    fn finite_graph_round_trips_through_text() {
        let g = cycle4();
        let text = g.to_edge_list();
        assert_eq!(FiniteGraph::parse_edge_list(2, &text).unwrap(), g);
        assert!(FiniteGraph::parse_edge_list(2, "0 a 1\n").is_err());
        assert!(FiniteGraph::parse_edge_list(2, "root 0\n0 a 0\n0 a 0\n").is_err());
    }

    #[test]
    fn finite_graph_rejects_missing_edges() {
        assert!(FiniteGraph::from_edges(2, 2, 0, &[(0, 0, 1), (1, 0, 0), (0, 1, 0)]).is_err());
    }

    #[test]
    fn cycle_is_not_tree_like() {
        let g = cycle4();
        assert!(!is_tree_like(&g, 1).unwrap());
        assert_eq!(audit_schreier(&g, 200, 6, 1).violations, 0);
        assert_eq!(ball(&g, &0, 2).unwrap().len(), 4);
        assert_eq!(distance_to_root(&g, &2, 10).unwrap(), 2);
    }

    #[test]
    fn shadow_in_finite_cycle() {
        let g = cycle4();
        // the cycle has two routes back to 0
        assert!(!shadow_contains(&g, &1, &2, 10).unwrap());
        assert!(shadow_contains(&g, &0, &2, 10).unwrap());
        assert!(shadow_contains(&g, &2, &2, 10).unwrap());
    }

    #[test]
    fn explore_matches_table() {
        let g = cycle4();
        let again = FiniteGraph::explore(&g, 100).unwrap();
        assert_eq!(again.len(), 4);
        assert_eq!(
            ball_fingerprint(&g, &0, 3).unwrap(),
            ball_fingerprint(&again, &0, 3).unwrap()
        );
    }

    #[test]
    fn random_reduced_words_are_reduced_and_sized() {
        let mut rng = stream_rng(5, 0);
        for len in 0..30 {
            let w = random_reduced_word(2, len, &mut rng);
            assert_eq!(w.len(), len);
        }
    }

    #[test]
    fn random_reduced_words_cover_the_sphere_uniformly() {
        let mut rng = stream_rng(6, 0);
        let mut counts: HashMap<ReducedWord, usize> = HashMap::new();
        let n = 120_000;
        for _ in 0..n {
            *counts
                .entry(random_reduced_word(2, 2, &mut rng))
                .or_default() += 1;
        }
        assert_eq!(counts.len(), 12);
        for c in counts.values() {
            let f = *c as f64 / n as f64;
            assert!((f - 1.0 / 12.0).abs() < 0.004, "{f}");
        }
    }

    #[test]
    fn tree_sizes() {
        assert_eq!(tree_ball_size(2, 2), 17);
        assert_eq!(sphere_size(2, 3), 36);
    }
}
