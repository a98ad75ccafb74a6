//! Estimators: the bundle entropy `H_t(p)` of a percolated core, the
//! entropy curve, random-walk entropy, fixing probabilities, prefix
//! stabilization, the Fano-type bound and the glue-depth rule.
//!
//! `H_t(p)` is the expected entropy of the law of `Core_Theta(K) Z_t`, with
//! `Theta` a Bernoulli(`p`) set of conjugate indices. It is reported as
//! `(1/t) H_t`, an upper-bound sequence for its infimum over `t`.

use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::freegroup::{
    shannon_entropy, FiniteDistribution, Generator, ReducedWord, StepDistribution,
};
use crate::gluing::MarkedPair;
use crate::group::{convolution_powers, Group};
use crate::irs::{
    plan_partition, ClassPlan, ConjugacyFamily, Partition, PartitionPlan, DEFAULT_PLAN_BUDGET,
};
use crate::models::{
    binomial_stderr, escape_probability_from, CayleyTree, EscapeEstimate, NilpotentQuotient,
};
use crate::rng::{derive_seed, stream_rng};
use crate::schreier::{
    act, act_mut, ensure_tree_like, prefix_k, random_reduced_word, SchreierGraph,
};

/// Largest number of independent column groups per class enumerated exactly.
pub const DEFAULT_EXACT_WIDTH: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMode {
    /// Expectation over `Theta` computed by enumeration.
    Exact,
    /// `Theta` sampled; partition entropy exact on the support.
    MonteCarlo,
    /// `Theta` sampled and `Z_t` drawn; plug-in partition entropy.
    Sampled,
}

impl EntropyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EntropyMode::Exact => "exact",
            EntropyMode::MonteCarlo => "monte_carlo",
            EntropyMode::Sampled => "sampled",
        }
    }
}

impl fmt::Display for EntropyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How to choose the estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    /// Exact when every class fits [`EntropyOptions::exact_width`], else Monte Carlo.
    Auto,
    Exact,
    MonteCarlo,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EntropyOptions {
    pub mode: ModeChoice,
    pub theta_samples: usize,
    pub seed: u64,
    pub exact_width: usize,
    /// Draws of `Z_t` per sample in sampled mode.
    pub draws: usize,
    /// Add `(classes seen - 1) / (2 draws)` in sampled mode.
    pub miller_madow: bool,
    pub plan_budget: usize,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        EntropyOptions {
            mode: ModeChoice::Auto,
            theta_samples: 1000,
            seed: 0,
            exact_width: DEFAULT_EXACT_WIDTH,
            draws: 1000,
            miller_madow: false,
            plan_budget: DEFAULT_PLAN_BUDGET,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct EntropyEstimate {
    /// `H_t / t`, nats.
    pub value: f64,
    pub stderr: f64,
    pub t: usize,
    /// Samples drawn; 0 when the value is deterministic.
    pub theta_samples: usize,
    pub mode: EntropyMode,
    /// `H_t`, nats.
    pub total: f64,
    pub total_stderr: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EntropyCurve {
    pub grid: Vec<f64>,
    pub estimates: Vec<EntropyEstimate>,
    pub seed: u64,
}

/// A partition-entropy problem prepared once and evaluated at many `p`.
pub struct BundleProblem<I> {
    plan: PartitionPlan<I>,
    probs: Vec<f64>,
    t: usize,
    /// Per class: the distinct column partitions and their multiplicities.
    groups: Vec<Vec<(Vec<usize>, usize)>>,
}

impl<I: Clone> BundleProblem<I> {
    pub fn new<F>(
        family: &F,
        law: &FiniteDistribution<F::Element>,
        t: usize,
        budget: usize,
    ) -> Result<BundleProblem<F::Index>>
    where
        F: ConjugacyFamily<Index = I>,
    {
        let support: Vec<F::Element> = law.keys().cloned().collect();
        let probs: Vec<f64> = law.iter().map(|(_, p)| p).collect();
        let plan = plan_partition(family, &support, budget)?;
        let groups = plan.classes.iter().map(column_groups).collect();
        Ok(BundleProblem {
            plan,
            probs,
            t,
            groups,
        })
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    /// Largest number of distinct nontrivial column partitions in a class.
    pub fn exact_width(&self) -> usize {
        self.groups.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn empty_theta(&self) -> f64 {
        self.plan.empty_theta().entropy(&self.probs)
    }

    pub fn full_theta(&self) -> f64 {
        self.plan.full_theta().entropy(&self.probs)
    }

    /// `E_Theta H` by enumeration of the subsets of each class's column groups.
    ///
    /// Entropy splits as the entropy of the finite-norm classes plus the
    /// average within-class entropy, and each class only sees its own columns,
    /// so classes are enumerated independently.
    pub fn exact(&self, p: f64, max_width: usize) -> Result<f64> {
        let mut class_mass = Vec::with_capacity(self.plan.classes.len());
        let mut inner = 0.0;
        for (class, groups) in self.plan.classes.iter().zip(&self.groups) {
            let probs: Vec<f64> = class.members.iter().map(|&i| self.probs[i]).collect();
            let mass: f64 = probs.iter().sum();
            class_mass.push(mass);
            if groups.is_empty() {
                continue;
            }
            if groups.len() > max_width {
                return Err(Error::budget(
                    "exact_width",
                    format!(
                        "a class has {} independent columns, above the exact limit {max_width}",
                        groups.len()
                    ),
                ));
            }
            let q: Vec<f64> = groups
                .iter()
                .map(|(_, m)| 1.0 - (1.0 - p).powi(*m as i32))
                .collect();
            let mut expected = 0.0;
            for mask in 0u64..(1u64 << groups.len()) {
                let mut w = 1.0;
                for (j, qj) in q.iter().enumerate() {
                    w *= if mask >> j & 1 == 1 { *qj } else { 1.0 - qj };
                }
                if w == 0.0 {
                    continue;
                }
                let labels = Partition::from_keys((0..class.members.len()).map(|i| {
                    groups
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| mask >> j & 1 == 1)
                        .map(|(_, (l, _))| l[i])
                        .collect::<Vec<_>>()
                }));
                expected += w * labels.entropy(&probs);
            }
            inner += expected_conditional(expected, mass);
        }
        Ok(shannon_entropy(class_mass) + inner)
    }

    /// Partition entropy for one coupled sample.
    pub fn sample(&self, p: f64, seed: u64) -> f64 {
        self.plan.percolated(p, seed).entropy(&self.probs)
    }

    /// Plug-in estimate from `draws` draws of `Z_t`.
    pub fn sample_draws(&self, p: f64, seed: u64, draws: usize, miller_madow: bool) -> Result<f64> {
        let part = self.plan.percolated(p, seed);
        let index = WeightedIndex::new(&self.probs)
            .map_err(|e| Error::Invalid(format!("law of Z_t: {e}")))?;
        let mut rng = stream_rng(seed, 1);
        let mut counts = vec![0usize; part.classes()];
        for _ in 0..draws {
            counts[part.labels[index.sample(&mut rng)]] += 1;
        }
        let n = draws as f64;
        let h = shannon_entropy(counts.iter().map(|&c| c as f64 / n));
        let seen = counts.iter().filter(|&&c| c > 0).count();
        Ok(if miller_madow {
            h + (seen as f64 - 1.0) / (2.0 * n)
        } else {
            h
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }
}

/// `P(c) H(sub | c)` from the entropy of the unnormalised `P(c) pi_i` masses.
fn expected_conditional(unnormalised: f64, mass: f64) -> f64 {
    // H(m x) over classes of total m equals m H(x) - m ln m
    if mass <= 0.0 {
        0.0
    } else {
        unnormalised + mass * mass.ln()
    }
}

fn column_groups<I>(class: &ClassPlan<I>) -> Vec<(Vec<usize>, usize)> {
    let mut out: Vec<(Vec<usize>, usize)> = Vec::new();
    for j in 0..class.width() {
        let labels =
            Partition::from_keys((0..class.members.len()).map(|i| class.cell(i, j))).labels;
        if labels.iter().all(|&l| l == 0) {
            continue;
        }
        match out.iter_mut().find(|(l, _)| *l == labels) {
            Some((_, m)) => *m += 1,
            None => out.push((labels, 1)),
        }
    }
    out
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Invalid(format!("p = {p} not in [0, 1]")))
    }
}

fn resolve_mode<I: Clone>(
    problem: &BundleProblem<I>,
    opts: &EntropyOptions,
) -> Result<EntropyMode> {
    Ok(match opts.mode {
        ModeChoice::Exact => EntropyMode::Exact,
        ModeChoice::MonteCarlo => EntropyMode::MonteCarlo,
        ModeChoice::Sampled => EntropyMode::Sampled,
        ModeChoice::Auto if problem.exact_width() <= opts.exact_width => EntropyMode::Exact,
        ModeChoice::Auto => EntropyMode::MonteCarlo,
    })
}

/// Per-sample values of `H` at `p`, in sample order.
fn sample_values<I: Clone + Sync>(
    problem: &BundleProblem<I>,
    p: f64,
    mode: EntropyMode,
    opts: &EntropyOptions,
) -> Result<Vec<f64>> {
    (0..opts.theta_samples as u64)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(opts.seed, i);
            match mode {
                EntropyMode::Sampled => {
                    problem.sample_draws(p, seed, opts.draws, opts.miller_madow)
                }
                _ => Ok(problem.sample(p, seed)),
            }
        })
        .collect()
}

/// `H_t(p)` for a prepared problem. Endpoints are deterministic.
pub fn estimate<I: Clone + Sync>(
    problem: &BundleProblem<I>,
    p: f64,
    opts: &EntropyOptions,
) -> Result<EntropyEstimate> {
    check_p(p)?;
    let t = problem.t.max(1) as f64;
    let mode = resolve_mode(problem, opts)?;
    let deterministic = |total: f64| EntropyEstimate {
        value: total / t,
        stderr: 0.0,
        t: problem.t,
        theta_samples: 0,
        mode: EntropyMode::Exact,
        total,
        total_stderr: 0.0,
    };
    if p == 0.0 && mode != EntropyMode::Sampled {
        return Ok(deterministic(problem.empty_theta()));
    }
    if p == 1.0 && mode != EntropyMode::Sampled {
        return Ok(deterministic(problem.full_theta()));
    }
    if mode == EntropyMode::Exact {
        return Ok(deterministic(problem.exact(p, opts.exact_width)?));
    }
    if opts.theta_samples == 0 {
        return Err(Error::Invalid(
            "Monte Carlo estimation needs theta_samples >= 1".into(),
        ));
    }
    let (mean, se) = mean_stderr(&sample_values(problem, p, mode, opts)?);
    Ok(EntropyEstimate {
        value: mean / t,
        stderr: se / t,
        t: problem.t,
        theta_samples: opts.theta_samples,
        mode,
        total: mean,
        total_stderr: se,
    })
}

/// `H_t(p)` for the law `law` of `Z_t`.
pub fn bundle_entropy<F: ConjugacyFamily>(
    family: &F,
    law: &FiniteDistribution<F::Element>,
    p: f64,
    t: usize,
    opts: &EntropyOptions,
) -> Result<EntropyEstimate> {
    if t == 0 {
        return Err(Error::Invalid("bundle entropy needs t >= 1".into()));
    }
    let problem = BundleProblem::new(family, law, t, opts.plan_budget)?;
    estimate(&problem, p, opts)
}

/// Coupled estimates on a sorted grid; every grid point uses the same uniforms.
pub fn entropy_curve<F: ConjugacyFamily>(
    family: &F,
    law: &FiniteDistribution<F::Element>,
    grid: &[f64],
    t: usize,
    opts: &EntropyOptions,
) -> Result<EntropyCurve> {
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Invalid("p grid must be sorted".into()));
    }
    if t == 0 {
        return Err(Error::Invalid("entropy curve needs t >= 1".into()));
    }
    let problem = BundleProblem::new(family, law, t, opts.plan_budget)?;
    let estimates = grid
        .iter()
        .map(|&p| estimate(&problem, p, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(EntropyCurve {
        grid: grid.to_vec(),
        estimates,
        seed: opts.seed,
    })
}

/// `H_t(p) - H_{t-1}(p)` with paired samples.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Increment {
    pub p: f64,
    pub t: usize,
    pub value: f64,
    pub stderr: f64,
    pub mode: EntropyMode,
}

pub fn increment<I: Clone + Sync>(
    prev: &BundleProblem<I>,
    cur: &BundleProblem<I>,
    p: f64,
    opts: &EntropyOptions,
) -> Result<Increment> {
    let a = estimate(prev, p, opts)?;
    let b = estimate(cur, p, opts)?;
    let (value, stderr, mode) = if a.mode == EntropyMode::Exact && b.mode == EntropyMode::Exact {
        (b.total - a.total, 0.0, EntropyMode::Exact)
    } else {
        let mode = resolve_mode(cur, opts)?;
        let mode = if mode == EntropyMode::Exact {
            EntropyMode::MonteCarlo
        } else {
            mode
        };
        let xs = sample_values(prev, p, mode, opts)?;
        let ys = sample_values(cur, p, mode, opts)?;
        let d: Vec<f64> = ys.iter().zip(&xs).map(|(y, x)| y - x).collect();
        let (m, se) = mean_stderr(&d);
        (m, se, mode)
    };
    Ok(Increment {
        p,
        t: cur.t,
        value,
        stderr,
        mode,
    })
}

/// One row of a random-walk entropy table.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct RwEntropyRow {
    pub t: usize,
    pub h: f64,
    pub h_over_t: f64,
    /// `H_t - H_{t-1}`.
    pub h_diff: f64,
}

/// Exact `H(mu^t)` for `t = 1..=t_max` in any group.
pub fn rw_entropy_in<G: Group>(
    group: &G,
    step: &FiniteDistribution<G::Element>,
    t_max: usize,
    budget: usize,
) -> Result<Vec<RwEntropyRow>> {
    let powers = convolution_powers(group, step, t_max, budget)?;
    let hs: Vec<f64> = powers
        .iter()
        .map(FiniteDistribution::shannon_entropy)
        .collect();
    Ok((1..=t_max)
        .map(|t| RwEntropyRow {
            t,
            h: hs[t],
            h_over_t: hs[t] / t as f64,
            h_diff: hs[t] - hs[t - 1],
        })
        .collect())
}

/// Random-walk entropy of `mu` on the free group, or of its image in `quotient`.
pub fn rw_entropy(
    mu: &StepDistribution,
    quotient: Option<&NilpotentQuotient>,
    t_max: usize,
    budget: usize,
) -> Result<Vec<RwEntropyRow>> {
    match quotient {
        None => rw_entropy_in(
            &crate::freegroup::FreeGroup { rank: mu.rank() },
            mu.distribution(),
            t_max,
            budget,
        ),
        Some(q) => rw_entropy_in(q, &q.pushforward(mu)?, t_max, budget),
    }
}

/// `(k, n, alpha)`-fixing estimate.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct FixingReport {
    pub k: usize,
    pub n: usize,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub stderr_lower: f64,
    pub stderr_upper: f64,
    pub horizon: usize,
    pub walks: usize,
    pub seed: u64,
    /// Distance a walk must end beyond for the lower bound.
    pub escape_distance: usize,
}

impl FixingReport {
    pub fn stderr(&self) -> f64 {
        self.stderr_lower.max(self.stderr_upper)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum PrefixKey<V> {
    Word(ReducedWord),
    Vertex(V),
}

fn prefix_key<G: SchreierGraph + ?Sized>(
    g: &G,
    v: &G::Vertex,
    k: usize,
) -> Result<PrefixKey<G::Vertex>> {
    match g.tree_address(v) {
        Some(w) => Ok(PrefixKey::Word(w.prefix(k))),
        None => Ok(PrefixKey::Vertex(prefix_k(g, v, k)?)),
    }
}

/// `n + 2 r ceil(ln(horizon + 1))`.
pub fn escape_distance(n: usize, max_step_length: usize, horizon: usize) -> usize {
    n + 2 * max_step_length * ((horizon as f64 + 1.0).ln().ceil() as usize)
}

/// Fraction of walks whose `k`-prefix never changes.
///
/// Walk `i` starts at `root.w` for a uniform reduced word `w` of length `n`
/// and checks the prefix after each of `horizon` steps. The upper bound
/// counts walks with no change; the lower bound also requires the final
/// distance lower bound to exceed [`escape_distance`].
pub fn fixing_estimate<G: SchreierGraph>(
    g: &G,
    mu: &StepDistribution,
    k: usize,
    n: usize,
    horizon: usize,
    walks: usize,
    seed: u64,
) -> Result<FixingReport> {
    if k >= n {
        return Err(Error::Invalid(format!(
            "fixing needs k < n, got k = {k}, n = {n}"
        )));
    }
    if walks == 0 {
        return Err(Error::Invalid("fixing needs walks >= 1".into()));
    }
    if mu.rank() != g.rank() {
        return Err(Error::Invalid(format!(
            "measure rank {} != graph rank {}",
            mu.rank(),
            g.rank()
        )));
    }
    ensure_tree_like(g, n)?;
    let far = escape_distance(n, mu.max_step_length(), horizon);
    let root = g.root();
    let outcomes = (0..walks as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let w = random_reduced_word(g.rank(), n, &mut rng);
            let mut v = act(g, &root, &w);
            let start = prefix_key(g, &v, k)?;
            for _ in 0..horizon {
                act_mut(g, &mut v, mu.sample(&mut rng));
                if prefix_key(g, &v, k)? != start {
                    return Ok((false, false));
                }
            }
            Ok((true, g.distance_lower_bound(&v) > far))
        })
        .collect::<Result<Vec<(bool, bool)>>>()?;
    let upper = outcomes.iter().filter(|o| o.0).count() as f64 / walks as f64;
    let lower = outcomes.iter().filter(|o| o.1).count() as f64 / walks as f64;
    Ok(FixingReport {
        k,
        n,
        alpha_lower: lower,
        alpha_upper: upper,
        stderr_lower: binomial_stderr(lower, walks),
        stderr_upper: binomial_stderr(upper, walks),
        horizon,
        walks,
        seed,
        escape_distance: far,
    })
}

/// `pref_k(Z_horizon)` from the root, if it held over the trailing half of
/// the walk; the root otherwise.
pub fn prefix_at_infinity<G: SchreierGraph>(
    g: &G,
    mu: &StepDistribution,
    k: usize,
    horizon: usize,
    seed: u64,
) -> Result<G::Vertex> {
    prefix_at_infinity_from(g, mu, &g.root(), k, horizon, seed)
}

pub fn prefix_at_infinity_from<G: SchreierGraph>(
    g: &G,
    mu: &StepDistribution,
    start: &G::Vertex,
    k: usize,
    horizon: usize,
    seed: u64,
) -> Result<G::Vertex> {
    let root = g.root();
    if horizon == 0 {
        return Ok(root);
    }
    let mut rng = stream_rng(seed, 0);
    let mut v = start.clone();
    let mut current: Option<G::Vertex> = None;
    let from = horizon.div_ceil(2);
    for t in 1..=horizon {
        act_mut(g, &mut v, mu.sample(&mut rng));
        if t >= from {
            let p = prefix_k(g, &v, k)?;
            match &current {
                None => current = Some(p),
                Some(c) if *c != p => return Ok(root),
                Some(_) => {}
            }
        }
    }
    Ok(current.unwrap_or(root))
}

/// `2 H(alpha, 1 - alpha) + 2 ln(4) (1 - alpha) k`, nats.
pub fn fano_bound(alpha: f64, k: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Invalid(format!("alpha = {alpha} not in [0, 1]")));
    }
    Ok(2.0 * shannon_entropy([alpha, 1.0 - alpha]) + 2.0 * 4f64.ln() * (1.0 - alpha) * k as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct GlueDepth {
    pub ell: usize,
    pub n: usize,
    /// Per-attempt success probability `eta delta^(r+1) beta`.
    pub q: f64,
}

/// `ell = ceil(ln eps / ln(1 - q))` with `q = eta delta^(r+1) beta`, and
/// `n = k + (ell + 2) r + 1`.
pub fn choose_glue_depth(
    k: usize,
    epsilon: f64,
    r: usize,
    beta: f64,
    eta: f64,
    delta: f64,
) -> Result<GlueDepth> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Invalid(format!("epsilon = {epsilon} not in (0, 1)")));
    }
    for (name, v) in [("beta", beta), ("eta", eta), ("delta", delta)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::Invalid(format!(
                "{name} = {v} not in (0, 1]; the depth bound degenerates"
            )));
        }
    }
    if r == 0 {
        return Err(Error::Invalid("max step length must be at least 1".into()));
    }
    let q = eta * delta.powi(r as i32 + 1) * beta;
    if q <= 0.0 {
        return Err(Error::Invalid("success probability underflows to 0".into()));
    }
    let ell = if q >= 1.0 {
        1
    } else {
        ((epsilon.ln() / (1.0 - q).ln()).ceil() as usize).max(1)
    };
    Ok(GlueDepth {
        ell,
        n: k + (ell + 2) * r + 1,
        q,
    })
}

/// Measured inputs to [`choose_glue_depth`].
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct GlueInputs {
    /// Lower fixing estimate on the tree at `(k, k + 1)`.
    pub eta: f64,
    pub eta_stderr: f64,
    /// `min_s max_{t <= 4} mu^t(s)` over the letters.
    pub delta: f64,
    /// The `t` attaining `delta`'s inner maximum for the worst letter.
    pub t_s: usize,
    /// Escape from `y` avoiding `x` in the base graph.
    pub beta: EscapeEstimate,
    pub r: usize,
}

pub fn measure_glue_inputs(
    marked: &MarkedPair,
    mu: &StepDistribution,
    k: usize,
    horizon: usize,
    walks: usize,
    seed: u64,
) -> Result<GlueInputs> {
    let tree = CayleyTree { rank: mu.rank() };
    let fix = fixing_estimate(&tree, mu, k, k + 1, horizon, walks, derive_seed(seed, 0))?;
    let (delta, t_s) = letter_reach(mu, 4)?;
    let beta = escape_probability_from(
        &marked.base,
        mu,
        &marked.y,
        &marked.x,
        horizon,
        walks,
        derive_seed(seed, 1),
    )?;
    Ok(GlueInputs {
        eta: fix.alpha_lower,
        eta_stderr: fix.stderr_lower,
        delta,
        t_s,
        beta,
        r: mu.max_step_length(),
    })
}

fn letter_reach(mu: &StepDistribution, t_max: usize) -> Result<(f64, usize)> {
    let free = crate::freegroup::FreeGroup { rank: mu.rank() };
    let powers = convolution_powers(
        &free,
        mu.distribution(),
        t_max,
        crate::group::DEFAULT_SUPPORT_BUDGET,
    )?;
    let mut worst = (f64::INFINITY, 0);
    for s in Generator::all(mu.rank()) {
        let w = ReducedWord::from_generator(s);
        let best = (1..=t_max)
            .map(|t| (powers[t].prob(&w), t))
            .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a });
        if best.0 < worst.0 {
            worst = best;
        }
    }
    if worst.0 <= 0.0 {
        return Err(Error::Invalid(format!(
            "some letter is not reached within {t_max} steps"
        )));
    }
    Ok(worst)
}
