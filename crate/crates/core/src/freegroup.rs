//! Free groups of finite rank: letters, reduced words, step measures.
//!
//! Words use a one-letter-per-generator wire format: `a..z` are generators
//! `0..25` and `A..Z` their inverses. The identity is the empty string.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::group::{self, Group};
use crate::rng::{combine, stream_rng, StableKey};

/// Tolerance for probability vectors summing to one.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Default depth of the advisory semigroup-generation check.
pub const GENERATION_CHECK_DEPTH: usize = 6;

/// A generator or its inverse, packed as `2 * index + inverted`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(transparent)]
pub struct Generator(u8);

impl Generator {
    pub const MAX_RANK: usize = 26;

    pub fn new(index: usize, inverted: bool) -> Self {
        assert!(
            index < Self::MAX_RANK,
            "generator index {index} out of range"
        );
        Generator((index as u8) << 1 | inverted as u8)
    }

    pub fn positive(index: usize) -> Self {
        Self::new(index, false)
    }

    #[inline]
    pub fn index(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_inverted(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn inverse(self) -> Self {
        Generator(self.0 ^ 1)
    }

    #[inline]
    pub fn code(self) -> u8 {
        self.0
    }

    /// All `2 * rank` letters in the order `a, A, b, B, ...`.
    pub fn all(rank: usize) -> impl Iterator<Item = Generator> {
        (0..2 * rank as u8).map(Generator)
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'a'..='z' => Some(Self::new(c as usize - 'a' as usize, false)),
            'A'..='Z' => Some(Self::new(c as usize - 'A' as usize, true)),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        let base = if self.is_inverted() { b'A' } else { b'a' };
        (base + self.index() as u8) as char
    }
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// A freely reduced word. Ordered by length, then lexicographically.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ReducedWord(Vec<Generator>);

/// Freely reduce a letter sequence.
pub fn reduce(letters: impl IntoIterator<Item = Generator>) -> ReducedWord {
    let mut w = ReducedWord::identity();
    for s in letters {
        w.push(s);
    }
    w
}

impl ReducedWord {
    pub fn identity() -> Self {
        ReducedWord(Vec::new())
    }

    pub fn from_generator(s: Generator) -> Self {
        ReducedWord(vec![s])
    }

    /// Wrap letters that are already reduced. Panics in debug builds otherwise.
    pub fn from_reduced(letters: Vec<Generator>) -> Self {
        debug_assert!(letters.windows(2).all(|p| p[0] != p[1].inverse()));
        ReducedWord(letters)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            letters.push(
                Generator::from_char(c)
                    .ok_or_else(|| Error::Parse(format!("invalid letter {c:?} in word {s:?}")))?,
            );
        }
        Ok(reduce(letters))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn letters(&self) -> &[Generator] {
        &self.0
    }

    pub fn last(&self) -> Option<Generator> {
        self.0.last().copied()
    }

    /// Right-multiply by one letter, cancelling if needed.
    #[inline]
    pub fn push(&mut self, s: Generator) {
        if self.0.last() == Some(&s.inverse()) {
            self.0.pop();
        } else {
            self.0.push(s);
        }
    }

    pub fn times_letter(&self, s: Generator) -> Self {
        let mut w = self.clone();
        w.push(s);
        w
    }

    pub fn mul(&self, other: &ReducedWord) -> ReducedWord {
        // cancel the longest suffix of self against the prefix of other
        let common = self
            .0
            .iter()
            .rev()
            .zip(other.0.iter())
            .take_while(|(x, y)| **x == y.inverse())
            .count();
        let mut out = Vec::with_capacity(self.len() + other.len() - 2 * common);
        out.extend_from_slice(&self.0[..self.len() - common]);
        out.extend_from_slice(&other.0[common..]);
        ReducedWord(out)
    }

    pub fn inv(&self) -> ReducedWord {
        ReducedWord(self.0.iter().rev().map(|s| s.inverse()).collect())
    }

    /// The length-`k` prefix (the whole word when `k >= len`).
    pub fn prefix(&self, k: usize) -> ReducedWord {
        ReducedWord(self.0[..k.min(self.len())].to_vec())
    }

    pub fn pow(&self, e: i64) -> ReducedWord {
        let base = if e < 0 { self.inv() } else { self.clone() };
        let mut out = ReducedWord::identity();
        for _ in 0..e.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    /// `[g, h] = g h g^{-1} h^{-1}`.
    pub fn commutator(&self, h: &ReducedWord) -> ReducedWord {
        self.mul(h).mul(&self.inv()).mul(&h.inv())
    }

    /// Largest generator index used, plus one.
    pub fn min_rank(&self) -> usize {
        self.0.iter().map(|s| s.index() + 1).max().unwrap_or(0)
    }
}

impl Ord for ReducedWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for ReducedWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            write!(f, "ε")
        } else {
            write!(f, "{self}")
        }
    }
}

impl FromStr for ReducedWord {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ReducedWord::parse(s)
    }
}

impl StableKey for ReducedWord {
    fn stable_key(&self) -> u64 {
        self.0
            .iter()
            .fold(combine(0xF2EE, self.len() as u64), |acc, s| {
                combine(acc, s.code() as u64)
            })
    }
}

/// The free group of a given rank, as a [`Group`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FreeGroup {
    pub rank: usize,
}

impl Group for FreeGroup {
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

/// A finitely supported probability distribution with canonical key order.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDistribution<K: Ord> {
    atoms: BTreeMap<K, f64>,
}

impl<K: Ord + Clone> FiniteDistribution<K> {
    /// Validates positivity and that the total is 1 within [`SUM_TOLERANCE`].
    pub fn new(atoms: BTreeMap<K, f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Invalid("empty distribution".into()));
        }
        if let Some(p) = atoms.values().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::Invalid(format!("non-positive probability {p}")));
        }
        let total: f64 = atoms.values().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Invalid(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(FiniteDistribution { atoms })
    }

    /// Normalise positive weights into a distribution. Zero weights are dropped.
    pub fn from_weights(weights: impl IntoIterator<Item = (K, f64)>) -> Result<Self> {
        let mut atoms = BTreeMap::new();
        for (k, w) in weights {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Invalid(format!("invalid weight {w}")));
            }
            if w > 0.0 {
                *atoms.entry(k).or_insert(0.0) += w;
            }
        }
        let total: f64 = atoms.values().sum();
        if total <= 0.0 {
            return Err(Error::Invalid("weights sum to zero".into()));
        }
        atoms.values_mut().for_each(|w| *w /= total);
        Ok(FiniteDistribution { atoms })
    }

    pub(crate) fn from_map_unchecked(atoms: BTreeMap<K, f64>) -> Self {
        FiniteDistribution { atoms }
    }

    pub fn point(k: K) -> Self {
        FiniteDistribution {
            atoms: [(k, 1.0)].into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, f64)> + '_ {
        self.atoms.iter().map(|(k, p)| (k, *p))
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> + '_ {
        self.atoms.keys()
    }

    pub fn prob(&self, k: &K) -> f64 {
        self.atoms.get(k).copied().unwrap_or(0.0)
    }

    pub fn as_map(&self) -> &BTreeMap<K, f64> {
        &self.atoms
    }

    pub fn total(&self) -> f64 {
        self.atoms.values().sum()
    }

    pub fn shannon_entropy(&self) -> f64 {
        shannon_entropy(self.atoms.values().copied())
    }

    pub fn pushforward<K2: Ord + Clone>(&self, f: impl Fn(&K) -> K2) -> FiniteDistribution<K2> {
        let mut out = BTreeMap::new();
        for (k, p) in &self.atoms {
            *out.entry(f(k)).or_insert(0.0) += p;
        }
        FiniteDistribution { atoms: out }
    }
}

/// `-sum p ln p` in nats, with `0 ln 0 = 0`.
pub fn shannon_entropy(probs: impl IntoIterator<Item = f64>) -> f64 {
    let h: f64 = probs
        .into_iter()
        .filter(|p| *p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    // -0.0 and rounding dust from a point mass
    h.max(0.0)
}

/// A finitely supported step measure on the free group of rank `rank`.
#[derive(Clone, Debug)]
pub struct StepDistribution {
    rank: usize,
    dist: FiniteDistribution<ReducedWord>,
    max_step_length: usize,
    entropy: f64,
    atoms: Vec<ReducedWord>,
    sampler: WeightedIndex<f64>,
}

/// Outcome of the bounded semigroup-generation check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenerationReport {
    pub depth: usize,
    /// Letters not reached as products of at most `depth` atoms.
    pub missing: Vec<Generator>,
}

impl GenerationReport {
    pub fn is_generating(&self) -> bool {
        self.missing.is_empty()
    }
}

impl StepDistribution {
    pub fn new(rank: usize, dist: FiniteDistribution<ReducedWord>) -> Result<Self> {
        if rank == 0 || rank > Generator::MAX_RANK {
            return Err(Error::Invalid(format!("rank {rank} out of range")));
        }
        if let Some(w) = dist.keys().find(|w| w.min_rank() > rank) {
            return Err(Error::Invalid(format!(
                "atom {w} uses a generator outside rank {rank}"
            )));
        }
        let atoms: Vec<ReducedWord> = dist.keys().cloned().collect();
        let sampler = WeightedIndex::new(dist.iter().map(|(_, p)| p))
            .map_err(|e| Error::Invalid(format!("cannot sample measure: {e}")))?;
        let max_step_length = atoms.iter().map(ReducedWord::len).max().unwrap_or(0);
        let entropy = dist.shannon_entropy();
        let mu = StepDistribution {
            rank,
            dist,
            max_step_length,
            entropy,
            atoms,
            sampler,
        };
        let report = mu.generation_report(GENERATION_CHECK_DEPTH);
        if !report.is_generating() {
            log::warn!(
                "support may not generate the free group of rank {rank}: letters {:?} not reached within {} steps",
                report.missing,
                report.depth
            );
        }
        Ok(mu)
    }

    pub fn from_weights(
        rank: usize,
        weights: impl IntoIterator<Item = (ReducedWord, f64)>,
    ) -> Result<Self> {
        Self::new(rank, FiniteDistribution::from_weights(weights)?)
    }

    /// Uniform on the `2 * rank` letters.
    pub fn simple_random_walk(rank: usize) -> Result<Self> {
        Self::from_weights(
            rank,
            Generator::all(rank).map(|s| (ReducedWord::from_generator(s), 1.0)),
        )
    }

    /// Parse lines `word weight`; a lone weight (or `""`) denotes the identity.
    /// Blank lines and `#` comments are skipped. Weights are normalised.
    pub fn parse_text(rank: usize, text: &str) -> Result<Self> {
        let mut weights = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let (word, weight) = match fields.as_slice() {
                [w] => ("", *w),
                [word, w] => (if *word == "\"\"" { "" } else { *word }, *w),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected `word weight`, got {raw:?}",
                        lineno + 1
                    )))
                }
            };
            let weight: f64 = weight
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad weight {weight:?}", lineno + 1)))?;
            weights.push((ReducedWord::parse(word)?, weight));
        }
        Self::from_weights(rank, weights)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (w, p) in self.dist.iter() {
            if w.is_identity() {
                s.push_str(&format!("\"\" {p}\n"));
            } else {
                s.push_str(&format!("{w} {p}\n"));
            }
        }
        s
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn max_step_length(&self) -> usize {
        self.max_step_length
    }

    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    pub fn distribution(&self) -> &FiniteDistribution<ReducedWord> {
        &self.dist
    }

    pub fn prob(&self, w: &ReducedWord) -> f64 {
        self.dist.prob(w)
    }

    pub fn atoms(&self) -> &[ReducedWord] {
        &self.atoms
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &ReducedWord {
        &self.atoms[self.sampler.sample(rng)]
    }

    /// Products of at most `depth` atoms, checked for every letter.
    pub fn generation_report(&self, depth: usize) -> GenerationReport {
        const CAP: usize = 200_000;
        let mut targets: BTreeSet<Generator> = Generator::all(self.rank).collect();
        let mut frontier: BTreeSet<ReducedWord> = [ReducedWord::identity()].into_iter().collect();
        let mut seen = frontier.clone();
        for _ in 0..depth {
            let mut next = BTreeSet::new();
            for w in &frontier {
                for x in &self.atoms {
                    let p = w.mul(x);
                    if p.len() == 1 {
                        targets.remove(&p.letters()[0]);
                    }
                    if seen.len() < CAP && seen.insert(p.clone()) {
                        next.insert(p);
                    }
                }
            }
            if targets.is_empty() || next.is_empty() {
                break;
            }
            frontier = next;
        }
        GenerationReport {
            depth,
            missing: targets.into_iter().collect(),
        }
    }
}

/// Exact law of `Z_t`.
pub fn convolution(
    mu: &StepDistribution,
    t: usize,
    budget: usize,
) -> Result<FiniteDistribution<ReducedWord>> {
    group::convolution_power(&FreeGroup { rank: mu.rank() }, mu.distribution(), t, budget)
}

/// `Z_0, ..., Z_t` with `Z_0 = ε` and increments drawn from `mu`.
pub fn sample_walk(mu: &StepDistribution, t: usize, seed: u64) -> Vec<ReducedWord> {
    let mut rng = stream_rng(seed, 0);
    let mut out = Vec::with_capacity(t + 1);
    let mut z = ReducedWord::identity();
    out.push(z.clone());
    for _ in 0..t {
        z = z.mul(mu.sample(&mut rng));
        out.push(z.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::DEFAULT_SUPPORT_BUDGET;
    use proptest::prelude::*;

    fn w(s: &str) -> ReducedWord {
        ReducedWord::parse(s).unwrap()
    }

    #[test]
    fn letters_round_trip() {
        for c in ('a'..='z').chain('A'..='Z') {
            let g = Generator::from_char(c).unwrap();
            assert_eq!(g.to_char(), c);
            assert_eq!(g.inverse().inverse(), g);
        }
        assert!(Generator::from_char('1').is_none());
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(w("aA"), ReducedWord::identity());
        assert_eq!(w("abBa").to_string(), "aa");
        assert_eq!(w("abAB").to_string(), "abAB");
    }

    #[test]
    fn mul_and_inv_examples() {
        assert!(w("ab").mul(&w("BA")).is_identity());
        assert_eq!(w("abA").inv().to_string(), "aBA");
        assert_eq!(w("a").mul(&w("a")).to_string(), "aa");
    }

    #[test]
    fn ordering_is_length_then_lex() {
        let mut v = [w("ba"), w("a"), w(""), w("aa"), w("B")];
        v.sort();
        let s: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        assert_eq!(s, ["", "a", "B", "aa", "ba"]);
    }

    #[test]
    fn srw_convolution_small_t() {
        let mu = StepDistribution::simple_random_walk(2).unwrap();
        let d0 = convolution(&mu, 0, DEFAULT_SUPPORT_BUDGET).unwrap();
        assert_eq!(d0.len(), 1);
        assert_eq!(d0.prob(&ReducedWord::identity()), 1.0);
        let d1 = convolution(&mu, 1, DEFAULT_SUPPORT_BUDGET).unwrap();
        assert_eq!(d1.len(), 4);
        assert!(d1.iter().all(|(_, p)| p == 0.25));
    }

    // Oracle: enumerate all 16 letter pairs and reduce.
    #[test]
    fn srw_second_power_matches_enumeration() {
        let mut counts: BTreeMap<ReducedWord, u32> = BTreeMap::new();
        for x in Generator::all(2) {
            for y in Generator::all(2) {
                *counts.entry(reduce([x, y])).or_default() += 1;
            }
        }
        let mu = StepDistribution::simple_random_walk(2).unwrap();
        let d2 = convolution(&mu, 2, DEFAULT_SUPPORT_BUDGET).unwrap();
        assert_eq!(d2.len(), counts.len());
        assert_eq!(d2.len(), 13);
        for (g, c) in counts {
            assert_eq!(d2.prob(&g), c as f64 / 16.0);
        }
        assert_eq!(d2.prob(&ReducedWord::identity()), 0.25);
    }

    #[test]
    fn convolution_support_in_ball() {
        let mu = StepDistribution::from_weights(2, [(w("ab"), 1.0), (w("B"), 1.0), (w("A"), 2.0)])
            .unwrap();
        assert_eq!(mu.max_step_length(), 2);
        for t in 0..5 {
            let d = convolution(&mu, t, DEFAULT_SUPPORT_BUDGET).unwrap();
            assert!(d.keys().all(|g| g.len() <= t * mu.max_step_length()));
            assert!((d.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_budget_is_reported() {
        let mu = StepDistribution::simple_random_walk(2).unwrap();
        match convolution(&mu, 6, 100) {
            Err(Error::Budget { budget, .. }) => assert_eq!(budget, "support"),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    // Dyadic weights keep every partial sum exact, so the semigroup law holds bit for bit.
    #[test]
    fn convolution_semigroup_law_exact() {
        let mu = StepDistribution::from_weights(
            2,
            [(w("a"), 2.0), (w("A"), 1.0), (w("b"), 0.5), (w("B"), 0.5)],
        )
        .unwrap();
        let g = FreeGroup { rank: 2 };
        for t in 0..=3 {
            for s in 0..=3 {
                let lhs = convolution(&mu, t + s, DEFAULT_SUPPORT_BUDGET).unwrap();
                let a = convolution(&mu, t, DEFAULT_SUPPORT_BUDGET).unwrap();
                let b = convolution(&mu, s, DEFAULT_SUPPORT_BUDGET).unwrap();
                let rhs = group::convolve(&g, &a, &b, DEFAULT_SUPPORT_BUDGET).unwrap();
                assert_eq!(lhs, rhs, "t={t} s={s}");
            }
        }
    }

    #[test]
    fn entropy_monotone_and_concave_in_time() {
        let mu = StepDistribution::from_weights(
            2,
            [(w("a"), 3.0), (w("A"), 1.0), (w("b"), 1.0), (w("B"), 2.0)],
        )
        .unwrap();
        let hs: Vec<f64> = (0..=6)
            .map(|t| {
                convolution(&mu, t, DEFAULT_SUPPORT_BUDGET)
                    .unwrap()
                    .shannon_entropy()
            })
            .collect();
        for t in 0..6 {
            assert!(hs[t + 1] >= hs[t] - 1e-12);
        }
        for t in 1..6 {
            assert!(hs[t + 1] - hs[t] <= hs[t] - hs[t - 1] + 1e-12, "t={t}");
        }
        for t in 1..6 {
            assert!(hs[t + 1] / (t + 1) as f64 <= hs[t] / t as f64 + 1e-12);
        }
    }

    #[test]
    fn shannon_entropy_examples() {
        assert!((shannon_entropy([0.25; 4]) - 4f64.ln()).abs() < 1e-15);
        assert!((4f64.ln() - 1.386294).abs() < 1e-6);
        assert_eq!(shannon_entropy([1.0]), 0.0);
        assert!((shannon_entropy([0.5, 0.25, 0.25]) - 1.5 * 2f64.ln()).abs() < 1e-15);
        assert!((1.5 * 2f64.ln() - 1.039721).abs() < 1e-6);
        assert_eq!(shannon_entropy([0.0, 1.0]), 0.0);
    }

    #[test]
    fn distribution_validation() {
        let bad: BTreeMap<u8, f64> = [(1, 0.5), (2, 0.4)].into_iter().collect();
        assert!(FiniteDistribution::new(bad).is_err());
        let neg: BTreeMap<u8, f64> = [(1, 1.5), (2, -0.5)].into_iter().collect();
        assert!(FiniteDistribution::new(neg).is_err());
        let ok: BTreeMap<u8, f64> = [(1, 0.5), (2, 0.5)].into_iter().collect();
        assert!(FiniteDistribution::new(ok).is_ok());
    }

    #[test]
    fn sample_walk_contract() {
        let mu = StepDistribution::simple_random_walk(2).unwrap();
        assert_eq!(sample_walk(&mu, 0, 1), vec![ReducedWord::identity()]);
        let a = sample_walk(&mu, 50, 42);
        let b = sample_walk(&mu, 50, 42);
        assert_eq!(a, b);
        assert_eq!(a.len(), 51);
        for pair in a.windows(2) {
            let step = pair[0].inv().mul(&pair[1]);
            assert!(mu.prob(&step) > 0.0);
        }
    }

    #[test]
    fn sampled_return_frequency_matches_convolution() {
        let mu = StepDistribution::simple_random_walk(2).unwrap();
        let n = 100_000u64;
        let hits = (0..n)
            .filter(|i| sample_walk(&mu, 2, *i)[2].is_identity())
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.25).abs() < 0.005, "{freq}");
    }

    #[test]
    fn measure_text_round_trip_and_normalisation() {
        let mu = StepDistribution::parse_text(2, "# srw\na 1\nA 1\nb 2\nB 2\n\"\" 2\n").unwrap();
        assert!((mu.prob(&w("b")) - 0.25).abs() < 1e-15);
        assert!((mu.prob(&ReducedWord::identity()) - 0.25).abs() < 1e-15);
        let again = StepDistribution::parse_text(2, &mu.to_text()).unwrap();
        assert_eq!(again.distribution(), mu.distribution());
        assert!(StepDistribution::parse_text(2, "a 1 2\n").is_err());
        assert!(StepDistribution::parse_text(2, "a x\n").is_err());
        assert!(StepDistribution::parse_text(2, "c 1\n").is_err());
    }

    #[test]
    fn generation_check_is_advisory() {
        let srw = StepDistribution::simple_random_walk(2).unwrap();
        assert!(srw.generation_report(6).is_generating());
        // {a, b, (ab)^{-1}}: a^{-1} = b (ab)^{-1}, so it generates
        let tri = StepDistribution::from_weights(2, [(w("a"), 1.0), (w("b"), 1.0), (w("BA"), 1.0)])
            .unwrap();
        assert!(tri.generation_report(6).is_generating());
        let pos = StepDistribution::from_weights(2, [(w("a"), 1.0), (w("b"), 1.0)]).unwrap();
        let r = pos.generation_report(6);
        assert_eq!(
            r.missing,
            vec![Generator::new(0, true), Generator::new(1, true)]
        );
    }

    fn arb_word(max: usize) -> impl Strategy<Value = ReducedWord> {
        proptest::collection::vec(0u8..4, 0..=max).prop_map(|v| {
            reduce(
                v.into_iter()
                    .map(|c| Generator::new((c >> 1) as usize, c & 1 == 1)),
            )
        })
    }

    proptest! {
        #[test]
        fn reduce_is_idempotent(letters in proptest::collection::vec(0u8..6, 0..40)) {
            let gens: Vec<Generator> = letters.iter().map(|c| Generator::new((c >> 1) as usize, c & 1 == 1)).collect();
            let once = reduce(gens.clone());
            let twice = reduce(once.letters().to_vec());
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.len() <= gens.len());
            prop_assert_eq!(once.len() % 2, gens.len() % 2);
        }

        #[test]
        fn group_axioms(g in arb_word(32), h in arb_word(32), k in arb_word(32)) {
            prop_assert!(g.mul(&g.inv()).is_identity());
            prop_assert!(g.inv().mul(&g).is_identity());
            prop_assert_eq!(g.mul(&h).mul(&k), g.mul(&h.mul(&k)));
            prop_assert!(g.mul(&h).len() <= g.len() + h.len());
            prop_assert_eq!(g.mul(&h), reduce(g.letters().iter().chain(h.letters()).copied()));
            prop_assert_eq!(ReducedWord::parse(&g.to_string()).unwrap(), g);
        }
    }
}
