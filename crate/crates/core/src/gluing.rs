//! Gluing a marked quotient Cayley graph and half-lines onto the leaves of
//! the depth-`n` tree of the rank-2 free group.
//!
//! Let `w` be a leaf (`|w| = n`) with last letter `c`, so its one tree edge
//! is `w.c^{-1} = parent`. Let `m` be the mark label and `x.m = y` the marked
//! edge of the base. Then
//!
//! - `w.c` enters a half-line: `Tail(w, 0)`, with `i.c = i + 1`,
//!   `i.c^{-1} = i - 1` and `0.c^{-1} = w`; other labels loop;
//! - if `c` is not `m^{+-1}`, the base copy `Copy(w, .)` is attached by
//!   deleting `x.m = y` and adding `x.m = w`, `w.m = y`;
//! - if `c` is `m^{+-1}`, the leaf gets a loop for the other label pair.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::freegroup::{Generator, ReducedWord, StepDistribution};
use crate::group::Group;
use crate::models::{escape_probability_from, EscapeEstimate, QElem, QuotientCayleyGraph};
use crate::rng::{combine, stream_rng, StableKey};
use crate::schreier::{act, ball_fingerprint, random_reduced_word, SchreierGraph};

/// A base graph with a distinguished oriented edge `x.mark = y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedPair {
    pub base: QuotientCayleyGraph,
    pub mark: Generator,
    pub x: QElem,
    pub y: QElem,
}

impl MarkedPair {
    /// The edge from the identity labelled `mark`.
    pub fn new(base: QuotientCayleyGraph, mark: Generator) -> Result<Self> {
        Self::with_edge(base, mark, base.root())
    }

    /// The edge from `x` labelled `mark`.
    pub fn with_edge(base: QuotientCayleyGraph, mark: Generator, x: QElem) -> Result<Self> {
        if base.rank != 2 || mark.index() >= 2 {
            return Err(Error::Invalid(
                "gluing is implemented for rank 2 only".into(),
            ));
        }
        if x.len() != base.root().len() {
            return Err(Error::Invalid(format!(
                "{x:?} is not a vertex of {}",
                base.quotient
            )));
        }
        let y = base.step(&x, mark);
        if y == x {
            return Err(Error::Invalid(format!(
                "marked edge {x:?}.{mark} is a loop in {}; the copy could not be attached",
                base.quotient
            )));
        }
        Ok(MarkedPair { base, mark, x, y })
    }

    /// The same edge traversed backwards: `y.mark^{-1} = x`.
    pub fn flipped(&self) -> Self {
        MarkedPair {
            base: self.base,
            mark: self.mark.inverse(),
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }
}

/// Vertex states of a glued graph.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GluedVertex {
    /// `root.w` for a reduced word with `|w| <= n`.
    Tree(ReducedWord),
    /// A vertex of the base copy hanging from a leaf.
    Copy { leaf: ReducedWord, at: QElem },
    /// Position on the half-line hanging from a leaf.
    Tail { leaf: ReducedWord, pos: u64 },
}

impl fmt::Debug for GluedVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GluedVertex::Tree(w) => write!(f, "Tree({w:?})"),
            GluedVertex::Copy { leaf, at } => write!(f, "Copy({leaf:?}, {:?})", at.as_slice()),
            GluedVertex::Tail { leaf, pos } => write!(f, "Tail({leaf:?}, {pos})"),
        }
    }
}

impl StableKey for GluedVertex {
    fn stable_key(&self) -> u64 {
        match self {
            GluedVertex::Tree(w) => combine(1, w.stable_key()),
            GluedVertex::Copy { leaf, at } => {
                combine(combine(2, leaf.stable_key()), at.as_slice().stable_key())
            }
            GluedVertex::Tail { leaf, pos } => {
                combine(combine(3, leaf.stable_key()), pos.stable_key())
            }
        }
    }
}

/// Which part of the construction a vertex belongs to.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    TreeCore,
    Copy(ReducedWord),
    Tail(ReducedWord),
}

/// How the marked edge was oriented.
#[derive(Clone, Debug, PartialEq)]
pub struct Orientation {
    pub flipped: bool,
    /// Escape from `y` avoiding `x` for the edge as given.
    pub forward: EscapeEstimate,
    /// Escape from `x` avoiding `y`.
    pub backward: EscapeEstimate,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct GluedGraph {
    n: usize,
    marked: MarkedPair,
    orientation: Option<Orientation>,
}

/// Glues with the marked edge exactly as given.
pub fn glue(marked: MarkedPair, n: usize) -> Result<GluedGraph> {
    if n == 0 {
        return Err(Error::Invalid("glue depth must be at least 1".into()));
    }
    Ok(GluedGraph {
        n,
        marked,
        orientation: None,
    })
}

/// Glues after orienting the marked edge so that the walk started at `y`
/// escapes `x` with the larger estimated probability. Ties keep the edge.
pub fn glue_oriented(
    marked: MarkedPair,
    n: usize,
    mu: &StepDistribution,
    horizon: usize,
    walks: usize,
    seed: u64,
) -> Result<GluedGraph> {
    let base = marked.base;
    let forward = escape_probability_from(&base, mu, &marked.y, &marked.x, horizon, walks, seed)?;
    let backward = escape_probability_from(&base, mu, &marked.x, &marked.y, horizon, walks, seed)?;
    let flipped = backward.probability > forward.probability;
    let marked = if flipped { marked.flipped() } else { marked };
    let mut g = glue(marked, n)?;
    g.orientation = Some(Orientation {
        flipped,
        forward,
        backward,
        seed,
    });
    Ok(g)
}

/// Result of the self-normalization heuristic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizationAudit {
    pub radius: usize,
    pub samples: usize,
    /// Sampled vertices other than the root whose ball matched the root's.
    pub coincidences: usize,
}

impl GluedGraph {
    pub fn depth(&self) -> usize {
        self.n
    }

    pub fn marked(&self) -> &MarkedPair {
        &self.marked
    }

    pub fn orientation(&self) -> Option<&Orientation> {
        self.orientation.as_ref()
    }

    pub fn base(&self) -> &QuotientCayleyGraph {
        &self.marked.base
    }

    pub fn region_of(&self, v: &GluedVertex) -> Region {
        match v {
            GluedVertex::Tree(_) => Region::TreeCore,
            GluedVertex::Copy { leaf, .. } => Region::Copy(leaf.clone()),
            GluedVertex::Tail { leaf, .. } => Region::Tail(leaf.clone()),
        }
    }

    /// Whether a leaf carries a base copy (its last letter is not `mark^{+-1}`).
    pub fn leaf_has_copy(&self, leaf: &ReducedWord) -> bool {
        leaf.last()
            .is_some_and(|c| c.index() != self.marked.mark.index())
    }

    /// The leaves, in word order.
    pub fn leaves(&self) -> Vec<ReducedWord> {
        let mut out = vec![ReducedWord::identity()];
        for _ in 0..self.n {
            out = out
                .iter()
                .flat_map(|w| {
                    Generator::all(2)
                        .filter(move |s| w.last() != Some(s.inverse()))
                        .map(move |s| w.times_letter(s))
                })
                .collect();
        }
        out.sort();
        out
    }

    /// Vertices whose outgoing edges differ from the generic rule of their
    /// region: the tree core, the two marked endpoints in each copy and the
    /// start of each half-line.
    pub fn surgery_locus(&self) -> Vec<GluedVertex> {
        let mut out = Vec::new();
        let mut layer = vec![ReducedWord::identity()];
        out.push(GluedVertex::Tree(ReducedWord::identity()));
        for _ in 0..self.n {
            layer = layer
                .iter()
                .flat_map(|w| {
                    Generator::all(2)
                        .filter(move |s| w.last() != Some(s.inverse()))
                        .map(move |s| w.times_letter(s))
                })
                .collect();
            out.extend(layer.iter().cloned().map(GluedVertex::Tree));
        }
        for leaf in &layer {
            out.push(GluedVertex::Tail {
                leaf: leaf.clone(),
                pos: 0,
            });
            if self.leaf_has_copy(leaf) {
                out.push(GluedVertex::Copy {
                    leaf: leaf.clone(),
                    at: self.marked.x.clone(),
                });
                out.push(GluedVertex::Copy {
                    leaf: leaf.clone(),
                    at: self.marked.y.clone(),
                });
            }
        }
        out
    }

    /// Samples re-rootings `root.w` and compares radius-`max(3, n+1)` balls
    /// with the root's. A coincidence would hint that the root stabilizer is
    /// not self-normalizing.
    pub fn normalization_audit(&self, samples: usize, seed: u64) -> Result<NormalizationAudit> {
        let radius = 3.max(self.n + 1);
        let root = self.root();
        let reference = ball_fingerprint(self, &root, radius)?;
        let mut rng = stream_rng(seed, 0x5E1F);
        let mut coincidences = 0;
        for _ in 0..samples {
            let len = rng.random_range(1..=self.n + 6);
            let w = random_reduced_word(2, len, &mut rng);
            let v = act(self, &root, &w);
            if v != root && ball_fingerprint(self, &v, radius)? == reference {
                coincidences += 1;
            }
        }
        Ok(NormalizationAudit {
            radius,
            samples,
            coincidences,
        })
    }

    #[inline]
    fn leaf_step(&self, w: &ReducedWord, s: Generator) -> GluedVertex {
        let c = w.last().expect("leaves are nonempty");
        let m = self.marked.mark;
        if s == c.inverse() {
            let mut p = w.clone();
            p.push(s);
            GluedVertex::Tree(p)
        } else if s == c {
            GluedVertex::Tail {
                leaf: w.clone(),
                pos: 0,
            }
        } else if c.index() == m.index() {
            GluedVertex::Tree(w.clone())
        } else if s == m {
            GluedVertex::Copy {
                leaf: w.clone(),
                at: self.marked.y.clone(),
            }
        } else {
            GluedVertex::Copy {
                leaf: w.clone(),
                at: self.marked.x.clone(),
            }
        }
    }
}

impl SchreierGraph for GluedGraph {
    type Vertex = GluedVertex;

    fn rank(&self) -> usize {
        2
    }

    fn root(&self) -> GluedVertex {
        GluedVertex::Tree(ReducedWord::identity())
    }

    fn step(&self, v: &GluedVertex, s: Generator) -> GluedVertex {
        let mut u = v.clone();
        self.step_mut(&mut u, s);
        u
    }

    fn step_mut(&self, v: &mut GluedVertex, s: Generator) {
        let m = self.marked.mark;
        match v {
            GluedVertex::Tree(w) => {
                if w.len() < self.n {
                    w.push(s);
                } else {
                    *v = self.leaf_step(w, s);
                }
            }
            GluedVertex::Copy { leaf, at } => {
                if (s == m && *at == self.marked.x) || (s == m.inverse() && *at == self.marked.y) {
                    *v = GluedVertex::Tree(std::mem::take(leaf));
                } else {
                    self.marked.base.step_mut(at, s);
                }
            }
            GluedVertex::Tail { leaf, pos } => {
                let c = leaf.last().expect("leaves are nonempty");
                if s == c {
                    *pos += 1;
                } else if s == c.inverse() {
                    if *pos == 0 {
                        *v = GluedVertex::Tree(std::mem::take(leaf));
                    } else {
                        *pos -= 1;
                    }
                }
            }
        }
    }

    fn depth_hint(&self, v: &GluedVertex) -> Option<usize> {
        match v {
            GluedVertex::Tree(w) => Some(w.len()),
            GluedVertex::Tail { pos, .. } => Some(self.n + 1 + *pos as usize),
            GluedVertex::Copy { .. } => None,
        }
    }

    fn distance_lower_bound(&self, v: &GluedVertex) -> usize {
        match v {
            GluedVertex::Copy { at, .. } => {
                let b = &self.marked.base;
                let q = b.quotient;
                let dx = q.length_lower_bound(&q.mul(&q.inv(&self.marked.x), at));
                let dy = q.length_lower_bound(&q.mul(&q.inv(&self.marked.y), at));
                self.n + 1 + dx.min(dy)
            }
            _ => self.depth_hint(v).expect("exact outside copies"),
        }
    }

    fn tree_address(&self, v: &GluedVertex) -> Option<ReducedWord> {
        Some(match v {
            GluedVertex::Tree(w) => w.clone(),
            GluedVertex::Copy { leaf, .. } | GluedVertex::Tail { leaf, .. } => leaf.clone(),
        })
    }

    fn shadow_hint(&self, v: &GluedVertex, u: &GluedVertex) -> Option<bool> {
        let GluedVertex::Tree(w) = v else { return None };
        let a = self.tree_address(u)?;
        Some(a.len() >= w.len() && a.letters()[..w.len()] == *w.letters())
    }

    fn leaf_has_shadow(&self, v: &GluedVertex) -> Option<bool> {
        match v {
            GluedVertex::Tree(w) if w.len() == self.n => Some(true),
            _ => None,
        }
    }

    fn tree_like_certificate(&self) -> Option<usize> {
        Some(self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::NilpotentQuotient;
    use crate::schreier::{audit_schreier, ball, is_tree_like, prefix_k};

    fn w(s: &str) -> ReducedWord {
        ReducedWord::parse(s).unwrap()
    }

    fn heis(n: usize) -> GluedGraph {
        let base = QuotientCayleyGraph::new(NilpotentQuotient::Heisenberg, 2).unwrap();
        glue(MarkedPair::new(base, Generator::positive(1)).unwrap(), n).unwrap()
    }

    #[test]
    fn leaf_classification_depth_one() {
        let g = heis(1);
        let leaf_a = GluedVertex::Tree(w("a"));
        // a-leaf: a copy through the b-edges and a half-line through a
        assert!(matches!(
            g.step(&leaf_a, Generator::positive(1)),
            GluedVertex::Copy { .. }
        ));
        assert!(matches!(
            g.step(&leaf_a, Generator::new(1, true)),
            GluedVertex::Copy { .. }
        ));
        assert!(matches!(
            g.step(&leaf_a, Generator::positive(0)),
            GluedVertex::Tail { pos: 0, .. }
        ));
        // b-leaf: a half-line through b and an a-loop
        let leaf_b = GluedVertex::Tree(w("b"));
        assert_eq!(g.step(&leaf_b, Generator::positive(0)), leaf_b);
        assert_eq!(g.step(&leaf_b, Generator::new(0, true)), leaf_b);
        assert!(matches!(
            g.step(&leaf_b, Generator::positive(1)),
            GluedVertex::Tail { pos: 0, .. }
        ));
    }

    #[test]
    fn tree_like_exactly_to_depth_n() {
        for n in 1..=3 {
            let g = heis(n);
            assert!(is_tree_like(&g, n).unwrap(), "n={n}");
            assert!(!is_tree_like(&g, n + 1).unwrap(), "n={n}");
            assert_eq!(
                ball(&g, &g.root(), n).unwrap().len() as u128,
                crate::schreier::tree_ball_size(2, n)
            );
            assert_eq!(g.leaves().len(), 4 * 3usize.pow(n as u32 - 1));
        }
    }

    #[test]
    fn schreier_audit() {
        for n in 1..=3 {
            let r = audit_schreier(&heis(n), 10_000, n + 12, n as u64);
            assert_eq!(r.violations, 0, "{:?}", r.first_violation);
        }
    }

    #[test]
    fn regions() {
        let g = heis(2);
        let root = g.root();
        assert_eq!(g.region_of(&root), Region::TreeCore);
        // leaf "ab" is a b-leaf... "ba" is an a-leaf with a copy; continue into it
        let v = act(&g, &root, &w("babbb"));
        assert_eq!(g.region_of(&v), Region::Copy(w("ba")));
        let t = act(&g, &root, &w("bbbb"));
        assert_eq!(g.region_of(&t), Region::Tail(w("bb")));
        assert_eq!(
            t,
            GluedVertex::Tail {
                leaf: w("bb"),
                pos: 1
            }
        );
    }

    #[test]
    fn prefixes_match_words_inside_the_ball() {
        let g = heis(3);
        let root = g.root();
        for word in ["abA", "bb", "BaB", "a", ""] {
            let v = act(&g, &root, &w(word));
            for k in 0..=3 {
                let p = prefix_k(&g, &v, k).unwrap();
                assert_eq!(p, GluedVertex::Tree(w(word).prefix(k)));
            }
        }
    }

    #[test]
    fn marked_edge_validation() {
        let ab1 = QuotientCayleyGraph::new(NilpotentQuotient::Abelian { dim: 1 }, 2).unwrap();
        // b maps to 0 in abelian:1, so a b-marked edge is a loop
        assert!(MarkedPair::new(ab1, Generator::positive(1)).is_err());
        assert!(MarkedPair::new(ab1, Generator::positive(0)).is_ok());
        assert!(glue(MarkedPair::new(ab1, Generator::positive(0)).unwrap(), 0).is_err());
    }

    #[test]
    fn flipped_pair_is_the_same_edge() {
        let base = QuotientCayleyGraph::new(NilpotentQuotient::Heisenberg, 2).unwrap();
        let m = MarkedPair::new(base, Generator::positive(1)).unwrap();
        let f = m.flipped();
        assert_eq!(base.step(&f.x, f.mark), f.y);
        assert_eq!(f.flipped(), m);
        let g = glue(f, 2).unwrap();
        assert_eq!(audit_schreier(&g, 5000, 14, 2).violations, 0);
        assert!(is_tree_like(&g, 2).unwrap());
    }

    #[test]
    fn orientation_is_recorded() {
        let base = QuotientCayleyGraph::new(NilpotentQuotient::Heisenberg, 2).unwrap();
        let m = MarkedPair::new(base, Generator::positive(1)).unwrap();
        let mu = StepDistribution::simple_random_walk(2).unwrap();
        let g = glue_oriented(m, 2, &mu, 200, 400, 7).unwrap();
        let o = g.orientation().unwrap();
        let chosen = if o.flipped { &o.backward } else { &o.forward };
        assert!(chosen.probability >= o.forward.probability.min(o.backward.probability));
        assert!(chosen.probability > 0.0);
    }

    #[test]
    fn no_normalizing_coincidences() {
        let a = heis(2).normalization_audit(200, 3).unwrap();
        assert_eq!(a.radius, 3);
        assert_eq!(a.coincidences, 0);
    }

    #[test]
    fn surgery_locus_size() {
        let g = heis(2);
        // 17 tree vertices, 12 tails, 6 a-type leaves with two marked endpoints each
        assert_eq!(g.surgery_locus().len(), 17 + 12 + 12);
    }
}
