//! Model graphs: the Cayley tree of the free group, the line `Z_s`, the
//! half-line fragment `N_s`, and Cayley graphs of nilpotent quotients
//! (the integer Heisenberg group and the free abelianization).

use std::fmt;

use rayon::prelude::*;
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};
use crate::freegroup::{FiniteDistribution, Generator, ReducedWord, StepDistribution};
use crate::group::Group;
use crate::rng::stream_rng;
use crate::schreier::{act_mut, SchreierGraph};

/// An element of a nilpotent quotient: `(a, b, c)` for Heisenberg, a
/// coordinate vector for an abelianization.
pub type QElem = SmallVec<[i64; 4]>;

/// The Cayley graph of the free group of rank `rank`: the `2 rank`-regular tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CayleyTree {
    pub rank: usize,
}

impl SchreierGraph for CayleyTree {
    type Vertex = ReducedWord;

    fn rank(&self) -> usize {
        self.rank
    }

    fn root(&self) -> ReducedWord {
        ReducedWord::identity()
    }

    fn step(&self, v: &ReducedWord, s: Generator) -> ReducedWord {
        v.times_letter(s)
    }

    fn step_mut(&self, v: &mut ReducedWord, s: Generator) {
        v.push(s);
    }

    fn depth_hint(&self, v: &ReducedWord) -> Option<usize> {
        Some(v.len())
    }

    fn tree_address(&self, v: &ReducedWord) -> Option<ReducedWord> {
        Some(v.clone())
    }

    fn shadow_hint(&self, v: &ReducedWord, u: &ReducedWord) -> Option<bool> {
        Some(u.len() >= v.len() && u.letters()[..v.len()] == *v.letters())
    }

    fn leaf_has_shadow(&self, _v: &ReducedWord) -> Option<bool> {
        Some(true)
    }

    fn tree_like_certificate(&self) -> Option<usize> {
        Some(usize::MAX)
    }
}

/// `Z_s`: vertices are the integers, edges `(x+1).s = x`, loops for every
/// other label. The Schreier graph of `ker phi_s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LineGraph {
    pub label: Generator,
    pub rank: usize,
}

impl SchreierGraph for LineGraph {
    type Vertex = i64;

    fn rank(&self) -> usize {
        self.rank
    }

    fn root(&self) -> i64 {
        0
    }

    fn step(&self, v: &i64, s: Generator) -> i64 {
        if s == self.label {
            v - 1
        } else if s == self.label.inverse() {
            v + 1
        } else {
            *v
        }
    }

    fn depth_hint(&self, v: &i64) -> Option<usize> {
        Some(v.unsigned_abs() as usize)
    }

    fn shadow_hint(&self, v: &i64, u: &i64) -> Option<bool> {
        Some(v.signum() == u.signum() && u.abs() >= v.abs())
    }

    fn leaf_has_shadow(&self, _v: &i64) -> Option<bool> {
        Some(true)
    }
}

/// `N_s`: the half-line with edges `(x+1).s = x` and loops for the other
/// labels. A fragment: the outgoing `s`-edge at `0` is missing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HalfLine {
    pub label: Generator,
    pub rank: usize,
}

impl SchreierGraph for HalfLine {
    type Vertex = u64;

    fn rank(&self) -> usize {
        self.rank
    }

    fn root(&self) -> u64 {
        0
    }

    fn step(&self, v: &u64, s: Generator) -> u64 {
        self.try_step(v, s)
            .unwrap_or_else(|| panic!("dangling {s} slot at 0 of a half-line fragment"))
    }

    fn try_step(&self, v: &u64, s: Generator) -> Option<u64> {
        if s == self.label {
            v.checked_sub(1)
        } else if s == self.label.inverse() {
            Some(v + 1)
        } else {
            Some(*v)
        }
    }

    fn depth_hint(&self, v: &u64) -> Option<usize> {
        Some(*v as usize)
    }
}

/// `phi_s`: `s -> -1`, `s^{-1} -> 1`, other letters `0`.
pub fn char_eval(s: Generator, g: &ReducedWord) -> i64 {
    g.letters()
        .iter()
        .map(|&x| {
            if x == s {
                -1
            } else if x == s.inverse() {
                1
            } else {
                0
            }
        })
        .sum()
}

/// `(a, b, c) (a', b', c') = (a + a', b + b', c + c' + a b')`.
pub fn heisenberg_mul(x: [i64; 3], y: [i64; 3]) -> Result<[i64; 3]> {
    let ov = || Error::Overflow("Heisenberg product");
    let ab = x[0].checked_mul(y[1]).ok_or_else(ov)?;
    Ok([
        x[0].checked_add(y[0]).ok_or_else(ov)?,
        x[1].checked_add(y[1]).ok_or_else(ov)?,
        x[2].checked_add(y[2])
            .and_then(|c| c.checked_add(ab))
            .ok_or_else(ov)?,
    ])
}

pub fn heisenberg_inv(x: [i64; 3]) -> Result<[i64; 3]> {
    let ov = || Error::Overflow("Heisenberg inverse");
    let ab = x[0].checked_mul(x[1]).ok_or_else(ov)?;
    Ok([-x[0], -x[1], ab.checked_sub(x[2]).ok_or_else(ov)?])
}

fn heisenberg_letter(s: Generator) -> [i64; 3] {
    let sign = if s.is_inverted() { -1 } else { 1 };
    match s.index() {
        0 => [sign, 0, 0],
        1 => [0, sign, 0],
        i => panic!("Heisenberg quotient has no generator {i}"),
    }
}

/// Image of a rank-2 word in the integer Heisenberg group, `a -> (1,0,0)`,
/// `b -> (0,1,0)`.
pub fn heisenberg_eval(g: &ReducedWord) -> Result<[i64; 3]> {
    if g.min_rank() > 2 {
        return Err(Error::Invalid(format!("{g} is not a rank-2 word")));
    }
    g.letters()
        .iter()
        .try_fold([0; 3], |acc, &s| heisenberg_mul(acc, heisenberg_letter(s)))
}

/// A nilpotent quotient of the free group, given by generator images.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NilpotentQuotient {
    /// The integer Heisenberg group; rank 2 only.
    Heisenberg,
    /// `Z^dim`, generator `i` mapped to `e_i` for `i < dim` and to `0` beyond.
    Abelian { dim: usize },
}

impl NilpotentQuotient {
    /// `heisenberg` or `abelian:<r>`.
    pub fn parse(name: &str) -> Result<Self> {
        let name = name.trim();
        if name == "heisenberg" {
            return Ok(NilpotentQuotient::Heisenberg);
        }
        if let Some(r) = name.strip_prefix("abelian:") {
            let dim = r
                .parse()
                .map_err(|_| Error::Parse(format!("bad abelian rank in {name:?}")))?;
            if dim > Generator::MAX_RANK {
                return Err(Error::Invalid(format!("abelian rank {dim} too large")));
            }
            return Ok(NilpotentQuotient::Abelian { dim });
        }
        Err(Error::Parse(format!(
            "unknown quotient {name:?}; expected `heisenberg` or `abelian:<r>`"
        )))
    }

    pub fn name(&self) -> String {
        match self {
            NilpotentQuotient::Heisenberg => "heisenberg".into(),
            NilpotentQuotient::Abelian { dim } => format!("abelian:{dim}"),
        }
    }

    fn width(&self) -> usize {
        match self {
            NilpotentQuotient::Heisenberg => 3,
            NilpotentQuotient::Abelian { dim } => *dim,
        }
    }

    pub fn check_rank(&self, rank: usize) -> Result<()> {
        if *self == NilpotentQuotient::Heisenberg && rank != 2 {
            return Err(Error::Invalid(format!(
                "the Heisenberg quotient needs rank 2, got {rank}"
            )));
        }
        Ok(())
    }

    pub fn letter(&self, s: Generator) -> QElem {
        match self {
            NilpotentQuotient::Heisenberg => SmallVec::from_slice(&heisenberg_letter(s)),
            NilpotentQuotient::Abelian { dim } => {
                let mut v: QElem = smallvec![0; *dim];
                if s.index() < *dim {
                    v[s.index()] = if s.is_inverted() { -1 } else { 1 };
                }
                v
            }
        }
    }

    pub fn try_mul(&self, x: &QElem, y: &QElem) -> Result<QElem> {
        match self {
            NilpotentQuotient::Heisenberg => {
                let p = heisenberg_mul([x[0], x[1], x[2]], [y[0], y[1], y[2]])?;
                Ok(SmallVec::from_slice(&p))
            }
            NilpotentQuotient::Abelian { .. } => x
                .iter()
                .zip(y)
                .map(|(a, b)| a.checked_add(*b).ok_or(Error::Overflow("abelian sum")))
                .collect(),
        }
    }

    /// Right multiplication by one generator image, in place.
    #[inline]
    pub fn push_letter(&self, x: &mut QElem, s: Generator) -> Result<()> {
        let sign = if s.is_inverted() { -1 } else { 1 };
        let ov = Error::Overflow("quotient step");
        match self {
            NilpotentQuotient::Heisenberg => match s.index() {
                0 => x[0] = x[0].checked_add(sign).ok_or(ov)?,
                1 => {
                    x[1] = x[1]
                        .checked_add(sign)
                        .ok_or(Error::Overflow("quotient step"))?;
                    x[2] = x[2].checked_add(sign * x[0]).ok_or(ov)?;
                }
                i => panic!("Heisenberg quotient has no generator {i}"),
            },
            NilpotentQuotient::Abelian { dim } => {
                if s.index() < *dim {
                    x[s.index()] = x[s.index()].checked_add(sign).ok_or(ov)?;
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, g: &ReducedWord) -> Result<QElem> {
        if let NilpotentQuotient::Heisenberg = self {
            return Ok(SmallVec::from_slice(&heisenberg_eval(g)?));
        }
        let mut x = self.identity();
        for &s in g.letters() {
            self.push_letter(&mut x, s)?;
        }
        Ok(x)
    }

    pub fn is_identity(&self, x: &QElem) -> bool {
        x.iter().all(|c| *c == 0)
    }

    /// Lower bound on the word length of `x` in the generator images.
    ///
    /// Heisenberg: a word with `A` letters `a^{+-1}` and `B` letters
    /// `b^{+-1}` has `|c| <= A B <= L^2 / 4`, so `L >= 2 sqrt|c|`, besides
    /// `L >= |a| + |b|`.
    pub fn length_lower_bound(&self, x: &QElem) -> usize {
        let l1: u64 = match self {
            NilpotentQuotient::Heisenberg => x[0].unsigned_abs() + x[1].unsigned_abs(),
            NilpotentQuotient::Abelian { .. } => x.iter().map(|c| c.unsigned_abs()).sum(),
        };
        let area = match self {
            NilpotentQuotient::Heisenberg => {
                let c4 = 4u128 * x[2].unsigned_abs() as u128;
                let mut l = (c4 as f64).sqrt() as u128;
                while l * l < c4 {
                    l += 1;
                }
                while l > 0 && (l - 1) * (l - 1) >= c4 {
                    l -= 1;
                }
                l as u64
            }
            NilpotentQuotient::Abelian { .. } => 0,
        };
        l1.max(area) as usize
    }

    /// Law of the image of one step.
    pub fn pushforward(&self, mu: &StepDistribution) -> Result<FiniteDistribution<QElem>> {
        self.check_rank(mu.rank())?;
        let mut images = Vec::with_capacity(mu.atoms().len());
        for (w, p) in mu.distribution().iter() {
            images.push((self.eval(w)?, p));
        }
        let mut map = std::collections::BTreeMap::new();
        for (x, p) in images {
            *map.entry(x).or_insert(0.0) += p;
        }
        Ok(FiniteDistribution::from_map_unchecked(map))
    }
}

impl fmt::Display for NilpotentQuotient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Elements of the quotient as a [`Group`]. Products panic on `i64`
/// overflow, which the desk-scale word lengths never reach; use
/// [`NilpotentQuotient::try_mul`] for a checked product.
impl Group for NilpotentQuotient {
    type Element = QElem;

    fn identity(&self) -> QElem {
        smallvec![0; self.width()]
    }

    fn mul(&self, a: &QElem, b: &QElem) -> QElem {
        self.try_mul(a, b).expect("quotient product overflow")
    }

    fn inv(&self, a: &QElem) -> QElem {
        match self {
            NilpotentQuotient::Heisenberg => SmallVec::from_slice(
                &heisenberg_inv([a[0], a[1], a[2]]).expect("quotient inverse overflow"),
            ),
            NilpotentQuotient::Abelian { .. } => a.iter().map(|c| -c).collect(),
        }
    }
}

/// The Cayley graph of a nilpotent quotient: `v.s = v * eval(s)`, root the identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuotientCayleyGraph {
    pub quotient: NilpotentQuotient,
    pub rank: usize,
}

impl QuotientCayleyGraph {
    pub fn new(quotient: NilpotentQuotient, rank: usize) -> Result<Self> {
        quotient.check_rank(rank)?;
        if rank == 0 || rank > Generator::MAX_RANK {
            return Err(Error::Invalid(format!("rank {rank} out of range")));
        }
        Ok(QuotientCayleyGraph { quotient, rank })
    }

    /// Lower bound on the graph distance between two vertices.
    pub fn distance_lower_bound_between(&self, x: &QElem, y: &QElem) -> usize {
        let q = self.quotient;
        q.length_lower_bound(&q.mul(&q.inv(x), y))
    }
}

impl SchreierGraph for QuotientCayleyGraph {
    type Vertex = QElem;

    fn rank(&self) -> usize {
        self.rank
    }

    fn root(&self) -> QElem {
        self.quotient.identity()
    }

    fn step(&self, v: &QElem, s: Generator) -> QElem {
        let mut x = v.clone();
        self.step_mut(&mut x, s);
        x
    }

    #[inline]
    fn step_mut(&self, v: &mut QElem, s: Generator) {
        self.quotient
            .push_letter(v, s)
            .expect("quotient coordinate overflow");
    }

    fn distance_lower_bound(&self, v: &QElem) -> usize {
        self.quotient.length_lower_bound(v)
    }
}

/// A Monte Carlo probability with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct EscapeEstimate {
    pub probability: f64,
    pub stderr: f64,
    pub escaped: usize,
    pub walks: usize,
    pub horizon: usize,
}

pub(crate) fn binomial_stderr(p: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

/// Fraction of `walks` walks from `start` whose positions `Z_1..Z_horizon`
/// all avoid `avoid`. Walk `i` uses its own stream, so the estimate is
/// nonincreasing in `horizon` for a fixed seed and independent of threads.
pub fn escape_probability_from<G: SchreierGraph>(
    g: &G,
    mu: &StepDistribution,
    start: &G::Vertex,
    avoid: &G::Vertex,
    horizon: usize,
    walks: usize,
    seed: u64,
) -> Result<EscapeEstimate> {
    if horizon == 0 || walks == 0 {
        return Err(Error::Invalid(
            "escape estimate needs horizon >= 1 and walks >= 1".into(),
        ));
    }
    if mu.rank() != g.rank() {
        return Err(Error::Invalid(format!(
            "measure rank {} != graph rank {}",
            mu.rank(),
            g.rank()
        )));
    }
    let escaped = (0..walks as u64)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = stream_rng(seed, i);
            let mut v = start.clone();
            for _ in 0..horizon {
                act_mut(g, &mut v, mu.sample(&mut rng));
                if v == *avoid {
                    return false;
                }
            }
            true
        })
        .count();
    let p = escaped as f64 / walks as f64;
    Ok(EscapeEstimate {
        probability: p,
        stderr: binomial_stderr(p, walks),
        escaped,
        walks,
        horizon,
    })
}

/// Probability that the walk from the root does not return to it by `horizon`.
pub fn escape_probability_estimate<G: SchreierGraph>(
    g: &G,
    mu: &StepDistribution,
    horizon: usize,
    walks: usize,
    seed: u64,
) -> Result<EscapeEstimate> {
    let root = g.root();
    escape_probability_from(g, mu, &root, &root, horizon, walks, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schreier::{
        act, audit_schreier, ball, ball_fingerprint, is_tree_like, prefix_k, shadow_contains,
    };
    use proptest::prelude::*;

    fn w(s: &str) -> ReducedWord {
        ReducedWord::parse(s).unwrap()
    }

    fn a() -> Generator {
        Generator::positive(0)
    }

    #[test]
    fn line_graph_action() {
        let z = LineGraph {
            label: a(),
            rank: 2,
        };
        assert_eq!(act(&z, &5, &w("a")), 4);
        assert_eq!(act(&z, &5, &w("")), 5);
        assert_eq!(act(&z, &act(&z, &5, &w("ab")), &w("BA")), 5);
        assert!(!is_tree_like(&z, 1).unwrap());
    }

    #[test]
    fn cayley_tree_balls_and_prefixes() {
        let t = CayleyTree { rank: 2 };
        assert_eq!(ball(&t, &t.root(), 0).unwrap().len(), 1);
        assert_eq!(ball(&t, &t.root(), 2).unwrap().len(), 17);
        for n in 0..=8 {
            assert!(is_tree_like(&t, n).unwrap(), "n={n}");
        }
        assert_eq!(prefix_k(&t, &w("abA"), 1).unwrap(), w("a"));
        assert_eq!(prefix_k(&t, &w("ab"), 3).unwrap(), w("ab"));
        assert!(shadow_contains(&t, &w("a"), &w("ab"), 10).unwrap());
        assert!(!shadow_contains(&t, &w("a"), &w("b"), 10).unwrap());
        assert!(shadow_contains(&t, &t.root(), &w("bAb"), 10).unwrap());
    }

    #[test]
    fn cayley_tree_sphere_sizes() {
        let t = CayleyTree { rank: 2 };
        let b: Vec<(ReducedWord, usize)> =
            crate::schreier::ball_with_distances(&t, &t.root(), 5, 1 << 20).unwrap();
        for k in 1..=5 {
            let n = b.iter().filter(|(_, d)| *d == k).count();
            assert_eq!(n, 4 * 3usize.pow(k as u32 - 1));
        }
    }

    #[test]
    fn fingerprints() {
        let z = LineGraph {
            label: a(),
            rank: 2,
        };
        let n = HalfLine {
            label: a(),
            rank: 2,
        };
        let t = CayleyTree { rank: 2 };
        assert_eq!(
            ball_fingerprint(&z, &3, 1).unwrap(),
            ball_fingerprint(&z, &-7, 1).unwrap()
        );
        assert_eq!(
            ball_fingerprint(&z, &0, 1).unwrap(),
            ball_fingerprint(&n, &5, 1).unwrap()
        );
        assert_ne!(
            ball_fingerprint(&t, &t.root(), 1).unwrap(),
            ball_fingerprint(&z, &0, 1).unwrap()
        );
        // the dangling slot at the end of N_a is visible
        assert_ne!(
            ball_fingerprint(&n, &0, 1).unwrap(),
            ball_fingerprint(&n, &5, 1).unwrap()
        );
    }

    #[test]
    fn heisenberg_examples() {
        assert_eq!(heisenberg_eval(&w("abAB")).unwrap(), [0, 0, 1]);
        assert_eq!(heisenberg_eval(&w("")).unwrap(), [0, 0, 0]);
        let c = w("a").commutator(&w("b"));
        let cc = c.commutator(&w("a"));
        assert!(!cc.is_identity());
        assert_eq!(heisenberg_eval(&cc).unwrap(), [0, 0, 0]);
        assert_eq!(heisenberg_eval(&w("abABAbaB")).unwrap(), [0, 0, 0]);
        assert!(heisenberg_eval(&w("c")).is_err());
    }

    #[test]
    fn heisenberg_overflow_is_reported() {
        let big = [i64::MAX, 1, 0];
        assert!(matches!(
            heisenberg_mul(big, [1, 0, 0]),
            Err(Error::Overflow(_))
        ));
        assert!(matches!(
            heisenberg_mul(big, [0, 2, 0]),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn char_examples() {
        assert_eq!(char_eval(a(), &w("a")), -1);
        assert_eq!(char_eval(a(), &w("abAB")), 0);
        assert_eq!(char_eval(Generator::positive(1), &w("bba")), -2);
    }

    #[test]
    fn quotient_graph_examples() {
        let h = QuotientCayleyGraph::new(NilpotentQuotient::Heisenberg, 2).unwrap();
        assert_ne!(act(&h, &h.root(), &w("abAB")), h.root());
        let cc = w("a").commutator(&w("b")).commutator(&w("a"));
        assert_eq!(act(&h, &h.root(), &cc), h.root());
        assert_eq!(audit_schreier(&h, 2000, 20, 3).violations, 0);
        let b4 = ball(&h, &h.root(), 4).unwrap().len();
        let b8 = ball(&h, &h.root(), 8).unwrap().len();
        assert!(b8 as f64 / b4 as f64 >= 8.0, "{b4} {b8}");
    }

    #[test]
    fn quotient_names() {
        assert_eq!(
            NilpotentQuotient::parse("heisenberg").unwrap(),
            NilpotentQuotient::Heisenberg
        );
        assert_eq!(
            NilpotentQuotient::parse("abelian:3").unwrap(),
            NilpotentQuotient::Abelian { dim: 3 }
        );
        assert!(NilpotentQuotient::parse("abelian:x").is_err());
        assert!(NilpotentQuotient::parse("free").is_err());
        assert!(QuotientCayleyGraph::new(NilpotentQuotient::Heisenberg, 3).is_err());
    }

    // Oracle: BFS distances in the Heisenberg Cayley graph.
    #[test]
    fn heisenberg_length_bound_is_a_lower_bound() {
        let h = QuotientCayleyGraph::new(NilpotentQuotient::Heisenberg, 2).unwrap();
        let b = crate::schreier::ball_with_distances(&h, &h.root(), 8, 1 << 22).unwrap();
        for (x, d) in b {
            assert!(h.distance_lower_bound(&x) <= d, "{x:?} at {d}");
        }
    }

    #[test]
    fn escape_on_loop_graph_is_zero() {
        let g = QuotientCayleyGraph::new(NilpotentQuotient::Abelian { dim: 0 }, 2).unwrap();
        let mu = StepDistribution::simple_random_walk(2).unwrap();
        let e = escape_probability_estimate(&g, &mu, 10, 100, 1).unwrap();
        assert_eq!(e.probability, 0.0);
    }

    #[test]
    fn escape_is_monotone_in_horizon() {
        let z = LineGraph {
            label: a(),
            rank: 2,
        };
        let mu = StepDistribution::simple_random_walk(2).unwrap();
        let mut prev = 1.0;
        for t in [1, 10, 100, 1000] {
            let e = escape_probability_estimate(&z, &mu, t, 2000, 9).unwrap();
            assert!(e.probability <= prev);
            prev = e.probability;
        }
        assert!(escape_probability_estimate(&z, &mu, 0, 10, 1).is_err());
    }

    fn arb_word(max: usize) -> impl Strategy<Value = ReducedWord> {
        proptest::collection::vec(0u8..4, 0..=max).prop_map(|v| {
            crate::freegroup::reduce(
                v.into_iter()
                    .map(|c| Generator::new((c >> 1) as usize, c & 1 == 1)),
            )
        })
    }

    proptest! {
        #[test]
        fn heisenberg_is_a_homomorphism(g in arb_word(16), h in arb_word(16)) {
            let lhs = heisenberg_eval(&g.mul(&h)).unwrap();
            let rhs = heisenberg_mul(heisenberg_eval(&g).unwrap(), heisenberg_eval(&h).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn char_is_additive(g in arb_word(16), h in arb_word(16)) {
            for s in [Generator::positive(0), Generator::positive(1)] {
                prop_assert_eq!(char_eval(s, &g.mul(&h)), char_eval(s, &g) + char_eval(s, &h));
            }
        }

        #[test]
        fn heisenberg_kernel_in_abelian_kernel(g in arb_word(8), h in arb_word(8)) {
            let c = g.commutator(&h);
            for x in [c.clone(), c.commutator(&g)] {
                if heisenberg_eval(&x).unwrap() == [0, 0, 0] {
                    prop_assert_eq!(char_eval(Generator::positive(0), &x), 0);
                    prop_assert_eq!(char_eval(Generator::positive(1), &x), 0);
                }
            }
            // the group is two-step nilpotent
            prop_assert_eq!(heisenberg_eval(&c.commutator(&g)).unwrap(), [0, 0, 0]);
        }

        #[test]
        fn act_is_a_right_action(g in arb_word(16), h in arb_word(16)) {
            let q = QuotientCayleyGraph::new(NilpotentQuotient::Heisenberg, 2).unwrap();
            let r = q.root();
            prop_assert_eq!(act(&q, &r, &g.mul(&h)), act(&q, &act(&q, &r, &g), &h));
            let z = LineGraph { label: Generator::positive(1), rank: 2 };
            prop_assert_eq!(act(&z, &3, &g.mul(&h)), act(&z, &act(&z, &3, &g), &h));
        }

        #[test]
        fn abelian_eval_matches_characters(g in arb_word(16)) {
            let q = NilpotentQuotient::Abelian { dim: 2 };
            let x = q.eval(&g).unwrap();
            prop_assert_eq!(x[0], -char_eval(Generator::positive(0), &g));
            prop_assert_eq!(x[1], -char_eval(Generator::positive(1), &g));
        }
    }
}
