//! Norms, percolation samples of conjugate indices, and core-coset
//! partitions of a finite support.
//!
//! A [`ConjugacyFamily`] is a group `G` with a subgroup `K` whose conjugates
//! `K^theta` are indexed by a computable set with a right action. For an
//! index set `Theta`, `Core_Theta(K)` is the intersection of the `K^theta`,
//! and `g` lies in it iff `Theta` misses `mho_g`, the indices `theta` with
//! `g` outside `K^theta`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Debug};
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::freegroup::{Generator, ReducedWord};
use crate::gluing::{GluedGraph, GluedVertex};
use crate::group::Group;
use crate::models::char_eval;
use crate::rng::{keyed_unit, StableKey};
use crate::schreier::act;

/// Default cap on `|R| * |class|` cells in a partition plan.
pub const DEFAULT_PLAN_BUDGET: usize = 50_000_000;

/// `‖g‖`, possibly infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Norm {
    Finite(usize),
    Infinite,
}

impl Norm {
    pub fn is_finite(&self) -> bool {
        matches!(self, Norm::Finite(_))
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Finite(n) => write!(f, "{n}"),
            Norm::Infinite => f.write_str("infinite"),
        }
    }
}

/// `mho_g` as an explicit finite set, or a certificate that it is infinite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MhoResult<I> {
    Finite(BTreeSet<I>),
    /// Names the oracle that rejected `g`.
    Infinite(String),
}

impl<I> MhoResult<I> {
    pub fn norm(&self) -> Norm {
        match self {
            MhoResult::Finite(s) => Norm::Finite(s.len()),
            MhoResult::Infinite(_) => Norm::Infinite,
        }
    }
}

pub trait ConjugacyFamily: Group + Sync {
    /// Indexes the conjugates `K^theta`.
    type Index: Clone + Ord + Hash + Debug + Send + Sync + StableKey;
    /// Identifies a right coset `K^theta g`.
    type Coset: Clone + Ord + Hash + Debug + Send + Sync;
    /// Identifies the coset of `g` modulo the finite-norm subgroup.
    type ClassKey: Clone + Ord + Hash + Debug + Send + Sync;

    fn mho(&self, g: &Self::Element) -> Result<MhoResult<Self::Index>>;

    /// `theta.h`, the index of `(K^theta)^h`.
    fn act_index(&self, theta: &Self::Index, h: &Self::Element) -> Self::Index;

    /// Key of `K^theta g`; equal keys iff equal cosets.
    fn coset_of(&self, theta: &Self::Index, g: &Self::Element) -> Self::Coset;

    /// Equal keys iff `g' g^{-1}` has finite norm.
    fn finite_norm_key(&self, g: &Self::Element) -> Self::ClassKey;

    /// Whether `g` lies in `K^theta`, by the definition.
    fn in_conjugate(&self, theta: &Self::Index, g: &Self::Element) -> bool {
        self.coset_of(theta, g) == self.coset_of(theta, &self.identity())
    }
}

pub fn norm<F: ConjugacyFamily>(family: &F, g: &F::Element) -> Result<Norm> {
    Ok(family.mho(g)?.norm())
}

/// `(1 - p)^‖g‖`. Infinite norm gives `0` at every `p`, including the
/// `p -> 0` limit, which is the `N_∅` convention used at the endpoint.
pub fn membership_probability(p: f64, norm: Norm) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Invalid(format!("p = {p} not in [0, 1]")));
    }
    Ok(match norm {
        Norm::Finite(0) => 1.0,
        Norm::Finite(n) => (1.0 - p).powi(n as i32),
        Norm::Infinite => 0.0,
    })
}

/// A Bernoulli(`p`) subset of the indices, resolved lazily.
///
/// Index `theta` is included iff `U(theta shift^{-1}) <= p`, with `U` a
/// uniform keyed by `(seed, theta)`. Samples with the same seed are
/// therefore coupled across `p`, and relabelling by `g` is a change of the
/// shift.
#[derive(Clone, Debug)]
pub struct ThetaSample<F: ConjugacyFamily> {
    pub p: f64,
    pub seed: u64,
    shift_inv: F::Element,
    resolved: BTreeMap<F::Index, bool>,
}

impl<F: ConjugacyFamily> ThetaSample<F> {
    pub fn new(family: &F, p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Invalid(format!("p = {p} not in [0, 1]")));
        }
        Ok(ThetaSample {
            p,
            seed,
            shift_inv: family.identity(),
            resolved: BTreeMap::new(),
        })
    }

    /// The coupling uniform attached to `theta`.
    pub fn uniform(&self, family: &F, theta: &F::Index) -> f64 {
        let base = family.act_index(theta, &self.shift_inv);
        keyed_unit(self.seed, base.stable_key())
    }

    pub fn includes(&mut self, family: &F, theta: &F::Index) -> bool {
        if let Some(b) = self.resolved.get(theta) {
            return *b;
        }
        let b = self.uniform(family, theta) <= self.p;
        self.resolved.insert(theta.clone(), b);
        b
    }

    pub fn resolved(&self) -> &BTreeMap<F::Index, bool> {
        &self.resolved
    }

    /// The same sample at another level `p`.
    pub fn at_level(&self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Invalid(format!("p = {p} not in [0, 1]")));
        }
        Ok(ThetaSample {
            p,
            seed: self.seed,
            shift_inv: self.shift_inv.clone(),
            resolved: BTreeMap::new(),
        })
    }

    /// `Theta.g = {theta g}`, carrying resolved indices along.
    pub fn relabel(&self, family: &F, g: &F::Element) -> Self {
        ThetaSample {
            p: self.p,
            seed: self.seed,
            shift_inv: family.mul(&family.inv(g), &self.shift_inv),
            resolved: self
                .resolved
                .iter()
                .map(|(t, b)| (family.act_index(t, g), *b))
                .collect(),
        }
    }

    /// `g in Core_Theta(K)`.
    pub fn contains(&mut self, family: &F, g: &F::Element) -> Result<bool> {
        match family.mho(g)? {
            MhoResult::Infinite(_) => Ok(false),
            MhoResult::Finite(s) => Ok(s.iter().all(|t| !self.includes(family, t))),
        }
    }
}

/// A partition of a support, labelled canonically by first occurrence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    pub labels: Vec<usize>,
}

impl Partition {
    pub fn from_keys<K: Hash + Eq>(keys: impl IntoIterator<Item = K>) -> Self {
        let mut ids: HashMap<K, usize> = HashMap::new();
        let labels = keys
            .into_iter()
            .map(|k| {
                let next = ids.len();
                *ids.entry(k).or_insert(next)
            })
            .collect();
        Partition { labels }
    }

    pub fn classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// Whether every class of `self` lies inside a class of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        let mut image: HashMap<usize, usize> = HashMap::new();
        self.labels
            .iter()
            .zip(&coarser.labels)
            .all(|(a, b)| *image.entry(*a).or_insert(*b) == *b)
    }

    /// Entropy of the pushforward of `probs` to the classes, in nats.
    pub fn entropy(&self, probs: &[f64]) -> f64 {
        let mut mass = vec![0.0; self.classes()];
        for (l, p) in self.labels.iter().zip(probs) {
            mass[*l] += p;
        }
        crate::freegroup::shannon_entropy(mass)
    }
}

/// Everything about a support that the core partition needs, independent of `Theta`.
///
/// The support is split into finite-norm classes. In a class with first
/// member `g0`, only indices in `R`, the union of `mho_{g g0^{-1}}`, can
/// separate members; `cells[i * |R| + j]` numbers the coset `K^{R_j} g_i`.
#[derive(Clone, Debug)]
pub struct PartitionPlan<I> {
    pub support_len: usize,
    pub classes: Vec<ClassPlan<I>>,
}

#[derive(Clone, Debug)]
pub struct ClassPlan<I> {
    pub members: Vec<usize>,
    pub columns: Vec<I>,
    pub column_keys: Vec<u64>,
    pub cells: Vec<u32>,
}

impl<I> ClassPlan<I> {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn cell(&self, member: usize, column: usize) -> u32 {
        self.cells[member * self.columns.len() + column]
    }

    /// Local labels of the members when exactly the flagged columns are in `Theta`.
    pub fn sub_labels(&self, included: &[bool]) -> Vec<usize> {
        let cols: Vec<usize> = (0..self.width()).filter(|&j| included[j]).collect();
        if cols.is_empty() {
            return vec![0; self.members.len()];
        }
        Partition::from_keys(
            (0..self.members.len())
                .map(|i| cols.iter().map(|&j| self.cell(i, j)).collect::<Vec<_>>()),
        )
        .labels
    }
}

impl<I: Clone> PartitionPlan<I> {
    /// Assemble a global partition from per-class inclusion flags.
    pub fn partition(
        &self,
        mut included: impl FnMut(usize, &ClassPlan<I>) -> Vec<bool>,
    ) -> Partition {
        let mut keys = vec![(0usize, 0usize); self.support_len];
        for (c, class) in self.classes.iter().enumerate() {
            let flags = included(c, class);
            for (i, l) in class.sub_labels(&flags).into_iter().enumerate() {
                keys[class.members[i]] = (c, l);
            }
        }
        Partition::from_keys(keys)
    }

    /// The `p -> 0` endpoint: classes modulo the finite-norm subgroup.
    pub fn empty_theta(&self) -> Partition {
        self.partition(|_, c| vec![false; c.width()])
    }

    /// The `p = 1` endpoint: classes modulo the normal core.
    pub fn full_theta(&self) -> Partition {
        self.partition(|_, c| vec![true; c.width()])
    }

    /// The partition when `Theta = {theta : U(theta) <= p}` for the keyed uniforms of `seed`.
    pub fn percolated(&self, p: f64, seed: u64) -> Partition {
        self.partition(|_, c| {
            c.column_keys
                .iter()
                .map(|k| keyed_unit(seed, *k) <= p)
                .collect()
        })
    }

    pub fn max_width(&self) -> usize {
        self.classes.iter().map(ClassPlan::width).max().unwrap_or(0)
    }
}

pub fn plan_partition<F: ConjugacyFamily>(
    family: &F,
    support: &[F::Element],
    budget: usize,
) -> Result<PartitionPlan<F::Index>> {
    let mut by_class: BTreeMap<F::ClassKey, Vec<usize>> = BTreeMap::new();
    for (i, g) in support.iter().enumerate() {
        by_class
            .entry(family.finite_norm_key(g))
            .or_default()
            .push(i);
    }
    let mut classes = Vec::with_capacity(by_class.len());
    let mut cells_used = 0usize;
    for (_, members) in by_class {
        let g0 = &support[members[0]];
        let g0_inv = family.inv(g0);
        let mut columns: BTreeSet<F::Index> = BTreeSet::new();
        if members.len() > 1 {
            for &i in &members[1..] {
                let h = family.mul(&support[i], &g0_inv);
                match family.mho(&h)? {
                    MhoResult::Finite(s) => columns.extend(s),
                    MhoResult::Infinite(why) => {
                        return Err(Error::Contract(format!(
                            "elements with equal finite-norm keys differ by an element of infinite norm ({why})"
                        )))
                    }
                }
            }
        }
        let columns: Vec<F::Index> = columns.into_iter().collect();
        cells_used = cells_used.saturating_add(columns.len().saturating_mul(members.len()));
        if cells_used > budget {
            return Err(Error::budget(
                "partition",
                format!("core partition needs more than {budget} coset cells"),
            ));
        }
        let mut cells = vec![0u32; members.len() * columns.len()];
        for (j, theta) in columns.iter().enumerate() {
            let mut ids: HashMap<F::Coset, u32> = HashMap::new();
            for (r, &i) in members.iter().enumerate() {
                let next = ids.len() as u32;
                cells[r * columns.len() + j] = *ids
                    .entry(family.coset_of(theta, &support[i]))
                    .or_insert(next);
            }
        }
        classes.push(ClassPlan {
            column_keys: columns.iter().map(StableKey::stable_key).collect(),
            members,
            columns,
            cells,
        });
    }
    Ok(PartitionPlan {
        support_len: support.len(),
        classes,
    })
}

/// The partition of `support` into `Core_Theta(K)`-cosets.
///
/// Elements in different finite-norm classes never merge. `p = 0` gives the
/// finite-norm classes and `p = 1` the cosets of the normal core.
pub fn core_partition<F: ConjugacyFamily>(
    family: &F,
    support: &[F::Element],
    theta: &mut ThetaSample<F>,
) -> Result<Partition> {
    let plan = plan_partition(family, support, DEFAULT_PLAN_BUDGET)?;
    if theta.p == 0.0 {
        return Ok(plan.empty_theta());
    }
    if theta.p == 1.0 {
        return Ok(plan.full_theta());
    }
    Ok(plan.partition(|_, c| {
        c.columns
            .iter()
            .map(|t| theta.includes(family, t))
            .collect()
    }))
}

/// Glued graphs index conjugates of the root stabilizer by vertices.
impl Group for GluedGraph {
    type Element = ReducedWord;

    fn identity(&self) -> ReducedWord {
        ReducedWord::identity()
    }

    fn mul(&self, a: &ReducedWord, b: &ReducedWord) -> ReducedWord {
        a.mul(b)
    }

    fn inv(&self, a: &ReducedWord) -> ReducedWord {
        a.inv()
    }
}

impl ConjugacyFamily for GluedGraph {
    type Index = GluedVertex;
    type Coset = GluedVertex;
    type ClassKey = Vec<i64>;

    /// Generic vertices of a copy move under `g` iff the base image of `g`
    /// is nontrivial, and generic half-line vertices iff some `phi_s(g)` is
    /// nonzero, so either gives infinitely many moved vertices. Otherwise
    /// every moved vertex `v` has a path `v, v.g_1, ...` meeting the surgery
    /// locus, and `mho_g` is found among the `u.(g_1..g_i)^{-1}`.
    fn mho(&self, g: &ReducedWord) -> Result<MhoResult<GluedVertex>> {
        let q = self.base().quotient;
        let image = q.eval(g)?;
        if !q.is_identity(&image) {
            return Ok(MhoResult::Infinite(format!(
                "{q} image {:?} is not the identity",
                image.as_slice()
            )));
        }
        for i in 0..2 {
            let s = Generator::positive(i);
            let phi = char_eval(s, g);
            if phi != 0 {
                return Ok(MhoResult::Infinite(format!(
                    "phi_{s}(g) = {phi} is not zero"
                )));
            }
        }
        let mut moved = BTreeSet::new();
        let mut back = Vec::with_capacity(g.len());
        let mut prefix_inv = ReducedWord::identity();
        for &s in g.letters() {
            back.push(prefix_inv.clone());
            prefix_inv = ReducedWord::from_generator(s.inverse()).mul(&prefix_inv);
        }
        for u in self.surgery_locus() {
            for b in &back {
                let v = act(self, &u, b);
                if !moved.contains(&v) && act(self, &v, g) != v {
                    moved.insert(v);
                }
            }
        }
        Ok(MhoResult::Finite(moved))
    }

    fn act_index(&self, theta: &GluedVertex, h: &ReducedWord) -> GluedVertex {
        act(self, theta, h)
    }

    fn coset_of(&self, theta: &GluedVertex, g: &ReducedWord) -> GluedVertex {
        act(self, theta, g)
    }

    fn finite_norm_key(&self, g: &ReducedWord) -> Vec<i64> {
        let q = self.base().quotient;
        let mut key: Vec<i64> = q
            .eval(g)
            .expect("desk-scale words do not overflow")
            .to_vec();
        key.push(char_eval(Generator::positive(0), g));
        key.push(char_eval(Generator::positive(1), g));
        key
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gluing::{glue, MarkedPair};
    use crate::models::{NilpotentQuotient, QuotientCayleyGraph};
    use crate::rng::stream_rng;
    use crate::schreier::{random_reduced_word, SchreierGraph};
    use rand::Rng;

    fn w(s: &str) -> ReducedWord {
        ReducedWord::parse(s).unwrap()
    }

    fn heis(n: usize) -> GluedGraph {
        let base = QuotientCayleyGraph::new(NilpotentQuotient::Heisenberg, 2).unwrap();
        glue(MarkedPair::new(base, Generator::positive(1)).unwrap(), n).unwrap()
    }

    // Oracle: brute force over every vertex within distance R of the root.
    fn brute_mho(g: &GluedGraph, x: &ReducedWord, radius: usize) -> BTreeSet<GluedVertex> {
        crate::schreier::ball(g, &g.root(), radius)
            .unwrap()
            .into_iter()
            .filter(|v| act(g, v, x) != *v)
            .collect()
    }

    #[test]
    fn glued_mho_examples() {
        let g = heis(2);
        assert!(matches!(g.mho(&w("abAB")).unwrap(), MhoResult::Infinite(_)));
        assert!(matches!(g.mho(&w("a")).unwrap(), MhoResult::Infinite(_)));
        let cc = w("a").commutator(&w("b")).commutator(&w("a"));
        assert!(matches!(g.mho(&cc).unwrap(), MhoResult::Finite(_)));
        assert_eq!(norm(&g, &w("")).unwrap(), Norm::Finite(0));
    }

    #[test]
    fn glued_mho_matches_brute_force() {
        let g = heis(2);
        let mut rng = stream_rng(1, 0);
        let mut checked = 0;
        while checked < 40 {
            let a = random_reduced_word(2, rng.random_range(1..=4), &mut rng);
            let b = random_reduced_word(2, rng.random_range(1..=4), &mut rng);
            let x = a.commutator(&b).commutator(&a);
            if x.len() > 12 {
                continue;
            }
            let MhoResult::Finite(s) = g.mho(&x).unwrap() else {
                panic!("{x} should have finite norm")
            };
            // a moved vertex is within |x| of the locus, which sits within depth n + 1 + 2
            let brute = brute_mho(&g, &x, g.depth() + 3 + x.len());
            assert_eq!(s, brute, "{x}");
            checked += 1;
        }
    }

    #[test]
    fn membership_probability_examples() {
        assert_eq!(membership_probability(0.3, Norm::Finite(0)).unwrap(), 1.0);
        assert_eq!(membership_probability(0.5, Norm::Finite(2)).unwrap(), 0.25);
        assert_eq!(membership_probability(0.3, Norm::Infinite).unwrap(), 0.0);
        assert!(membership_probability(1.5, Norm::Finite(1)).is_err());
    }

    #[test]
    fn partitions_refine_and_measure() {
        let fine = Partition::from_keys([1, 2, 3, 1]);
        let coarse = Partition::from_keys([0, 0, 1, 0]);
        assert_eq!(fine.labels, vec![0, 1, 2, 0]);
        assert!(fine.refines(&coarse));
        assert!(!coarse.refines(&fine));
        let h = fine.entropy(&[0.25, 0.25, 0.25, 0.25]);
        assert!((h - crate::freegroup::shannon_entropy([0.5, 0.25, 0.25])).abs() < 1e-15);
    }

    #[test]
    fn theta_relabel_round_trip() {
        let g = heis(2);
        let mut t = ThetaSample::new(&g, 0.5, 11).unwrap();
        let probe: Vec<GluedVertex> = crate::schreier::ball(&g, &g.root(), 3).unwrap();
        let before: Vec<bool> = probe.iter().map(|v| t.includes(&g, v)).collect();
        let x = w("abB");
        let same = t.relabel(&g, &ReducedWord::identity());
        let back = t.relabel(&g, &x).relabel(&g, &x.inv());
        for (v, b) in probe.iter().zip(&before) {
            assert_eq!(same.uniform(&g, v) <= 0.5, *b);
            assert_eq!(back.uniform(&g, v) <= 0.5, *b);
            // theta in Theta iff theta.x in Theta.x
            let moved = t.relabel(&g, &x);
            assert_eq!(moved.uniform(&g, &act(&g, v, &x)), t.uniform(&g, v));
        }
    }
}
