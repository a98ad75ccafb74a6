//! Batch experiment runner behind the `irs` binary.
//!
//! A run reads an optional config file (TOML, or JSON such as a previous
//! run's metadata), applies flag overrides, and writes `<cmd>.csv` plus
//! `<cmd>.meta.json` into the output directory, or the CSV to stdout when
//! no directory is given. Outputs depend only on the resolved config, never
//! on the thread count.

use std::collections::BTreeMap;
use std::fmt::{Debug, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::entropy::{
    choose_glue_depth, entropy_curve, fixing_estimate, increment, measure_glue_inputs, rw_entropy,
    rw_entropy_in, BundleProblem, EntropyOptions, ModeChoice, RwEntropyRow,
};
use crate::error::{Error, Result};
use crate::freegroup::{convolution, FiniteDistribution, ReducedWord, StepDistribution};
use crate::gluing::{glue, glue_oriented, GluedGraph, MarkedPair};
use crate::group::{convolution_powers, Group, DEFAULT_SUPPORT_BUDGET};
use crate::irs::{ConjugacyFamily, MhoResult, DEFAULT_PLAN_BUDGET};
use crate::models::{CayleyTree, NilpotentQuotient, QElem, QuotientCayleyGraph};
use crate::rng::{derive_seed, stream_rng};
use crate::schreier::{act, audit_schreier, is_tree_like, SchreierGraph};
use crate::wreath::{parse_measure, FinPerm, Lamplighter};

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CONTRACT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Contract(_) => EXIT_CONTRACT,
        Error::Budget { .. } | Error::Overflow(_) | Error::Indeterminate(_) => EXIT_BUDGET,
        Error::Parse(_) | Error::Invalid(_) | Error::Io(_) => EXIT_INPUT,
    }
}

#[derive(Parser, Debug)]
#[command(name = "irs", version, about = "Percolated-core entropy experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Bundle entropy (1/t) H_t(p) over a p grid.
    EntropyCurve,
    /// Exact random-walk entropy of the group or a quotient.
    RwEntropy,
    /// Prefix-fixing probability estimates.
    Fixing,
    /// Norms of the given elements.
    Norm,
    /// One sampled trajectory.
    Walk,
    /// Tree-likeness, Schreier bijectivity and self-normalization checks.
    GraphAudit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::EntropyCurve => "entropy-curve",
            Command::RwEntropy => "rw-entropy",
            Command::Fixing => "fixing",
            Command::Norm => "norm",
            Command::Walk => "walk",
            Command::GraphAudit => "graph-audit",
        }
    }

    pub const ALL: [Command; 6] = [
        Command::EntropyCurve,
        Command::RwEntropy,
        Command::Fixing,
        Command::Norm,
        Command::Walk,
        Command::GraphAudit,
    ];

    pub fn from_name(name: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(clap::Args, Debug, Default, Clone)]
pub struct Overrides {
    /// TOML or JSON config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for `<cmd>.csv` and `<cmd>.meta.json`; stdout when absent.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Construction, e.g. `glued { base = heisenberg, n = 3 }`.
    #[arg(long, global = true)]
    pub construction: Option<String>,
    /// Measure file (`atom weight` lines) or a preset name.
    #[arg(long, global = true)]
    pub measure: Option<String>,
    #[arg(long, global = true)]
    pub t: Option<usize>,
    #[arg(long, global = true)]
    pub t_max: Option<usize>,
    /// Comma-separated p values.
    #[arg(long, global = true)]
    pub p_grid: Option<String>,
    #[arg(long, global = true)]
    pub theta_samples: Option<usize>,
    /// auto, exact, monte_carlo or sampled.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    #[arg(long, global = true)]
    pub miller_madow: bool,
    #[arg(long, global = true)]
    pub draws: Option<usize>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Fixing depth on the tree.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    #[arg(long, global = true)]
    pub walks: Option<usize>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Element to take the norm of; repeatable.
    #[arg(long = "word", global = true)]
    pub words: Vec<String>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
}

/// Glue depth: a number or `"auto"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DepthSpec {
    Fixed(usize),
    Named(String),
}

fn default_heisenberg() -> String {
    "heisenberg".into()
}
fn default_mark() -> String {
    "a".into()
}
fn default_depth() -> DepthSpec {
    DepthSpec::Fixed(2)
}
fn default_z2() -> String {
    "z2".into()
}
fn default_z1() -> String {
    "z1".into()
}
fn default_rank() -> usize {
    2
}
fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Construction {
    Glued {
        #[serde(default = "default_heisenberg")]
        base: String,
        #[serde(default = "default_mark")]
        mark: String,
        #[serde(default = "default_depth")]
        n: DepthSpec,
        /// Orient the marked edge by measured escape probabilities.
        #[serde(default)]
        orient: bool,
        /// Tail of the marked edge; the identity when absent.
        #[serde(default)]
        edge: Option<Vec<i64>>,
    },
    Lamplighter {
        #[serde(default = "default_z2")]
        lamp: String,
        #[serde(default = "default_z1")]
        base: String,
    },
    Finperm {
        #[serde(default = "default_z1")]
        points: String,
        #[serde(default = "yes")]
        shift: bool,
    },
    Quotient {
        #[serde(default = "default_heisenberg")]
        name: String,
        #[serde(default = "default_rank")]
        rank: usize,
    },
    Free {
        #[serde(default = "default_rank")]
        rank: usize,
    },
}

impl Default for Construction {
    fn default() -> Self {
        Construction::Glued {
            base: default_heisenberg(),
            mark: default_mark(),
            n: default_depth(),
            orient: false,
            edge: None,
        }
    }
}

/// `name { key = value, ... }` with bare words allowed as strings.
pub fn parse_compact_construction(text: &str) -> Result<Construction> {
    let text = text.trim();
    let (name, body) = match text.find('{') {
        Some(i) => {
            let body = text[i + 1..]
                .trim_end()
                .strip_suffix('}')
                .ok_or_else(|| Error::Parse(format!("unbalanced braces in {text:?}")))?;
            (text[..i].trim(), body)
        }
        None => (text, ""),
    };
    let mut doc = format!("[{name}]\n");
    for item in split_top_level(body) {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected `key = value`, got {item:?}")))?;
        let v = v.trim();
        let literal = v.parse::<i64>().is_ok()
            || v.parse::<f64>().is_ok()
            || v == "true"
            || v == "false"
            || v.starts_with('[')
            || v.starts_with('"');
        if literal {
            writeln!(doc, "{} = {v}", k.trim()).expect("string write");
        } else {
            writeln!(doc, "{} = {:?}", k.trim(), v).expect("string write");
        }
    }
    toml::from_str(&doc).map_err(|e| Error::Parse(format!("construction {text:?}: {e}")))
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstructionField {
    Compact(String),
    Table(Construction),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    /// `srw` for free-group constructions, `standard` for wreath and permutation groups.
    #[serde(default)]
    pub preset: Option<String>,
    /// Inline `atom weight` lines.
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub file: Option<PathBuf>,
}

/// The on-disk config; everything optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub construction: Option<ConstructionField>,
    pub measure: Option<MeasureSpec>,
    pub t: Option<usize>,
    pub t_max: Option<usize>,
    pub p_grid: Option<Vec<f64>>,
    pub theta_samples: Option<usize>,
    pub mode: Option<ModeChoice>,
    pub miller_madow: Option<bool>,
    pub draws: Option<usize>,
    pub exact_width: Option<usize>,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub horizon: Option<usize>,
    pub walks: Option<usize>,
    pub epsilon: Option<f64>,
    pub words: Option<Vec<String>>,
    pub samples: Option<usize>,
    pub max_len: Option<usize>,
}

/// A config with every default filled in; recorded verbatim in the metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub seed: u64,
    pub construction: Construction,
    pub measure: MeasureSpec,
    pub t: usize,
    pub t_max: usize,
    pub p_grid: Vec<f64>,
    pub theta_samples: usize,
    pub mode: ModeChoice,
    pub miller_madow: bool,
    pub draws: usize,
    pub exact_width: usize,
    pub k: usize,
    pub n: Option<usize>,
    pub horizon: usize,
    pub walks: usize,
    pub epsilon: f64,
    pub words: Vec<String>,
    pub samples: usize,
    pub max_len: usize,
}

impl Resolved {
    fn entropy_options(&self) -> EntropyOptions {
        EntropyOptions {
            mode: self.mode,
            theta_samples: self.theta_samples,
            seed: self.seed,
            exact_width: self.exact_width,
            draws: self.draws,
            miller_madow: self.miller_madow,
            plan_budget: DEFAULT_PLAN_BUDGET,
        }
    }
}

fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let v: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        // a previous run's metadata carries the resolved config under `config`
        let v = v.get("config").cloned().unwrap_or(v);
        return serde_json::from_value(v)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())));
    }
    toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn parse_mode(s: &str) -> Result<ModeChoice> {
    match s {
        "auto" => Ok(ModeChoice::Auto),
        "exact" => Ok(ModeChoice::Exact),
        "monte_carlo" | "monte-carlo" | "mc" => Ok(ModeChoice::MonteCarlo),
        "sampled" => Ok(ModeChoice::Sampled),
        _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
    }
}

/// Apply flag overrides to a config and fill defaults.
pub fn resolve(mut c: Config, o: &Overrides) -> Result<Resolved> {
    if let Some(s) = &o.construction {
        c.construction = Some(ConstructionField::Compact(s.clone()));
    }
    if let Some(m) = &o.measure {
        let path = PathBuf::from(m);
        c.measure = Some(if path.exists() {
            MeasureSpec {
                file: Some(path),
                ..MeasureSpec::default()
            }
        } else {
            MeasureSpec {
                preset: Some(m.clone()),
                ..MeasureSpec::default()
            }
        });
    }
    macro_rules! take {
        ($($f:ident),*) => { $( if o.$f.is_some() { c.$f = o.$f; } )* };
    }
    take!(
        seed,
        threads,
        t,
        t_max,
        theta_samples,
        draws,
        k,
        n,
        horizon,
        walks,
        epsilon,
        samples
    );
    if let Some(g) = &o.p_grid {
        c.p_grid = Some(
            g.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad p value {x:?}")))
                })
                .collect::<Result<_>>()?,
        );
    }
    if let Some(m) = &o.mode {
        c.mode = Some(parse_mode(m)?);
    }
    if o.miller_madow {
        c.miller_madow = Some(true);
    }
    if !o.words.is_empty() {
        c.words = Some(o.words.clone());
    }
    let construction = match c.construction {
        None => Construction::default(),
        Some(ConstructionField::Table(t)) => t,
        Some(ConstructionField::Compact(s)) => parse_compact_construction(&s)?,
    };
    let mut p_grid = c.p_grid.unwrap_or_else(default_grid);
    if p_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Invalid("p grid values must lie in [0, 1]".into()));
    }
    p_grid.sort_by(f64::total_cmp);
    Ok(Resolved {
        seed: c.seed.unwrap_or(0),
        construction,
        measure: c.measure.unwrap_or_default(),
        t: c.t.unwrap_or(3),
        t_max: c.t_max.unwrap_or(6),
        p_grid,
        theta_samples: c.theta_samples.unwrap_or(1000),
        mode: c.mode.unwrap_or(ModeChoice::Auto),
        miller_madow: c.miller_madow.unwrap_or(false),
        draws: c.draws.unwrap_or(1000),
        exact_width: c.exact_width.unwrap_or(crate::entropy::DEFAULT_EXACT_WIDTH),
        k: c.k.unwrap_or(1),
        n: c.n,
        horizon: c.horizon.unwrap_or(1000),
        walks: c.walks.unwrap_or(10_000),
        epsilon: c.epsilon.unwrap_or(0.25),
        words: c.words.unwrap_or_default(),
        samples: c.samples.unwrap_or(10_000),
        max_len: c.max_len.unwrap_or(16),
    })
}

fn parse_z(s: &str, what: &str) -> Result<usize> {
    let d = match s.trim() {
        "z" => Some(1),
        x => x.strip_prefix('z').and_then(|r| r.parse().ok()),
    };
    d.ok_or_else(|| Error::Parse(format!("{what} {s:?}: expected z<number>")))
}

fn free_measure(spec: &MeasureSpec, rank: usize) -> Result<StepDistribution> {
    if let Some(text) = &spec.text {
        return StepDistribution::parse_text(rank, text);
    }
    if let Some(path) = &spec.file {
        return StepDistribution::parse_text(rank, &std::fs::read_to_string(path)?);
    }
    match spec.preset.as_deref() {
        None | Some("srw") | Some("standard") => StepDistribution::simple_random_walk(rank),
        Some(other) => Err(Error::Parse(format!(
            "unknown free-group measure preset {other:?}"
        ))),
    }
}

fn group_measure<E: Ord + Clone>(
    spec: &MeasureSpec,
    standard: impl FnOnce() -> FiniteDistribution<E>,
    parse_atom: impl Fn(&str) -> Result<E>,
) -> Result<FiniteDistribution<E>> {
    if let Some(text) = &spec.text {
        return parse_measure(text, parse_atom);
    }
    if let Some(path) = &spec.file {
        return parse_measure(&std::fs::read_to_string(path)?, parse_atom);
    }
    match spec.preset.as_deref() {
        None | Some("standard") => Ok(standard()),
        Some(other) => Err(Error::Parse(format!("unknown measure preset {other:?}"))),
    }
}

/// Output of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    /// File stem and CSV text, the primary file first.
    pub files: Vec<(String, String)>,
    /// Command-specific metadata.
    pub extra: serde_json::Value,
}

struct Csv(String);

impl Csv {
    fn new(header: &str) -> Self {
        Csv(format!("{header}\n"))
    }
    fn row(&mut self, fields: &[String]) {
        let line: Vec<String> = fields.iter().map(|f| csv_field(f)).collect();
        self.0.push_str(&line.join(","));
        self.0.push('\n');
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn f(x: f64) -> String {
    format!("{x}")
}

struct GluedBuild {
    graph: GluedGraph,
    mu: StepDistribution,
    info: serde_json::Value,
}

fn build_glued(r: &Resolved) -> Result<GluedBuild> {
    let Construction::Glued {
        base,
        mark,
        n,
        orient,
        edge,
    } = &r.construction
    else {
        unreachable!("called on a glued construction")
    };
    let quotient = NilpotentQuotient::parse(base)?;
    let qgraph = QuotientCayleyGraph::new(quotient, 2)?;
    let mark = ReducedWord::parse(mark)?;
    let [mark] = mark.letters() else {
        return Err(Error::Parse("mark must be a single letter".into()));
    };
    let marked = match edge {
        None => MarkedPair::new(qgraph, *mark)?,
        Some(x) => MarkedPair::with_edge(qgraph, *mark, QElem::from_slice(x))?,
    };
    let mu = free_measure(&r.measure, 2)?;
    let orient_seed = derive_seed(r.seed, 0x0E);
    let marked = if *orient {
        // orientation only needs the edge; depth 1 suffices to read it back
        let g = glue_oriented(marked, 1, &mu, r.horizon, r.walks.min(10_000), orient_seed)?;
        g.marked().clone()
    } else {
        marked
    };
    let mut info = json!({});
    let depth = match n {
        DepthSpec::Fixed(n) => *n,
        DepthSpec::Named(s) if s == "auto" => {
            let inputs = measure_glue_inputs(
                &marked,
                &mu,
                r.k,
                r.horizon,
                r.walks,
                derive_seed(r.seed, 0x61),
            )?;
            let d = choose_glue_depth(
                r.k,
                r.epsilon,
                inputs.r,
                inputs.beta.probability,
                inputs.eta,
                inputs.delta,
            )?;
            info = json!({ "glue_inputs": inputs, "glue_depth": d });
            d.n
        }
        DepthSpec::Named(s) => {
            return Err(Error::Parse(format!(
                "glue depth {s:?}: expected a number or \"auto\""
            )))
        }
    };
    let graph = glue(marked.clone(), depth)?;
    info["glue_n"] = json!(depth);
    info["marked_edge"] =
        json!({ "x": marked.x.to_vec(), "y": marked.y.to_vec(), "mark": marked.mark.to_string() });
    Ok(GluedBuild { graph, mu, info })
}

fn curve_output<F: ConjugacyFamily>(
    family: &F,
    laws: &[FiniteDistribution<F::Element>],
    r: &Resolved,
) -> Result<RunOutput> {
    let t = r.t;
    let opts = r.entropy_options();
    let cur = BundleProblem::new(family, &laws[t], t, opts.plan_budget)?;
    let curve = entropy_curve(family, &laws[t], &r.p_grid, t, &opts)?;
    let mut csv = Csv::new("p,t,estimate_nats,stderr,mode,theta_samples,seed");
    for (p, e) in curve.grid.iter().zip(&curve.estimates) {
        csv.row(&[
            f(*p),
            t.to_string(),
            f(e.value),
            f(e.stderr),
            e.mode.to_string(),
            e.theta_samples.to_string(),
            r.seed.to_string(),
        ]);
    }
    let mut files = vec![("entropy-curve".to_string(), csv.0)];
    if t >= 2 {
        let prev = BundleProblem::new(family, &laws[t - 1], t - 1, opts.plan_budget)?;
        let mut diff = Csv::new("p,t,diff_nats,stderr,mode,theta_samples,seed");
        for p in &r.p_grid {
            let d = increment(&prev, &cur, *p, &opts)?;
            let samples = if d.stderr == 0.0 && d.mode.as_str() == "exact" {
                0
            } else {
                r.theta_samples
            };
            diff.row(&[
                f(*p),
                t.to_string(),
                f(d.value),
                f(d.stderr),
                d.mode.to_string(),
                samples.to_string(),
                r.seed.to_string(),
            ]);
        }
        files.push(("entropy-curve-diff".to_string(), diff.0));
    }
    Ok(RunOutput {
        files,
        extra: json!({
            "support_size": cur.support_len(),
            "exact_width": cur.exact_width(),
            "estimator": if r.mode == ModeChoice::Sampled { "plug-in" } else { "partition entropy on the exact law" },
            "miller_madow": r.miller_madow,
            "reported": "(1/t) H_t; the diff file holds H_t - H_(t-1)",
        }),
    })
}

fn rw_output(rows: &[RwEntropyRow], extra: serde_json::Value) -> RunOutput {
    let mut csv = Csv::new("t,H,H_over_t,H_diff");
    for row in rows {
        csv.row(&[row.t.to_string(), f(row.h), f(row.h_over_t), f(row.h_diff)]);
    }
    RunOutput {
        files: vec![("rw-entropy".into(), csv.0)],
        extra,
    }
}

fn fixing_output<G: SchreierGraph>(
    g: &G,
    mu: &StepDistribution,
    n: usize,
    r: &Resolved,
    extra: serde_json::Value,
) -> Result<RunOutput> {
    let rep = fixing_estimate(g, mu, r.k, n, r.horizon, r.walks, r.seed)?;
    let mut csv = Csv::new("k,n,alpha_lower,alpha_upper,stderr,horizon,walks,seed");
    csv.row(&[
        rep.k.to_string(),
        rep.n.to_string(),
        f(rep.alpha_lower),
        f(rep.alpha_upper),
        f(rep.stderr()),
        rep.horizon.to_string(),
        rep.walks.to_string(),
        rep.seed.to_string(),
    ]);
    let mut extra = extra;
    extra["report"] = json!(rep);
    Ok(RunOutput {
        files: vec![("fixing".into(), csv.0)],
        extra,
    })
}

fn norm_output<F: ConjugacyFamily>(
    family: &F,
    r: &Resolved,
    parse: impl Fn(&str) -> Result<F::Element>,
) -> Result<RunOutput> {
    if r.words.is_empty() {
        return Err(Error::Invalid("norm needs at least one --word".into()));
    }
    let mut csv = Csv::new("word,norm,detail");
    for w in &r.words {
        let g = parse(w)?;
        match family.mho(&g)? {
            MhoResult::Finite(s) => csv.row(&[w.clone(), s.len().to_string(), "finite".into()]),
            MhoResult::Infinite(why) => csv.row(&[w.clone(), "infinite".into(), why]),
        }
    }
    Ok(RunOutput {
        files: vec![("norm".into(), csv.0)],
        extra: json!({}),
    })
}

fn graph_walk<G: SchreierGraph>(g: &G, mu: &StepDistribution, r: &Resolved) -> RunOutput {
    let mut rng = stream_rng(r.seed, 0);
    let mut v = g.root();
    let mut csv = Csv::new("t,vertex,distance_lower_bound");
    csv.row(&[
        "0".into(),
        format!("{v:?}"),
        g.distance_lower_bound(&v).to_string(),
    ]);
    for t in 1..=r.t {
        v = act(g, &v, mu.sample(&mut rng));
        csv.row(&[
            t.to_string(),
            format!("{v:?}"),
            g.distance_lower_bound(&v).to_string(),
        ]);
    }
    RunOutput {
        files: vec![("walk".into(), csv.0)],
        extra: json!({}),
    }
}

fn group_walk<G: Group>(
    group: &G,
    mu: &FiniteDistribution<G::Element>,
    r: &Resolved,
) -> Result<RunOutput> {
    let atoms: Vec<&G::Element> = mu.keys().collect();
    let index = WeightedIndex::new(mu.iter().map(|(_, p)| p))
        .map_err(|e| Error::Invalid(format!("measure: {e}")))?;
    let mut rng = stream_rng(r.seed, 0);
    let mut x = group.identity();
    let mut csv = Csv::new("t,element");
    csv.row(&["0".into(), format!("{x:?}")]);
    for t in 1..=r.t {
        x = group.mul(&x, atoms[index.sample(&mut rng)]);
        csv.row(&[t.to_string(), format!("{x:?}")]);
    }
    Ok(RunOutput {
        files: vec![("walk".into(), csv.0)],
        extra: json!({}),
    })
}

fn audit_output(g: &GluedGraph, r: &Resolved) -> Result<RunOutput> {
    let n = g.depth();
    let mut csv = Csv::new("check,parameter,result,detail");
    for d in [n, n + 1] {
        let ok = is_tree_like(g, d)?;
        csv.row(&[
            "tree_like".into(),
            d.to_string(),
            if ok { "pass" } else { "fail" }.into(),
            String::new(),
        ]);
    }
    let audit = audit_schreier(g, r.samples, r.max_len, r.seed);
    csv.row(&[
        "schreier_bijectivity".into(),
        audit.checked.to_string(),
        if audit.violations == 0 {
            "pass"
        } else {
            "fail"
        }
        .into(),
        audit.first_violation.unwrap_or_default(),
    ]);
    let norm = g.normalization_audit(r.samples.min(2000), r.seed)?;
    csv.row(&[
        "self_normalization".into(),
        norm.samples.to_string(),
        if norm.coincidences == 0 {
            "pass"
        } else {
            "fail"
        }
        .into(),
        format!(
            "{} coincidences at radius {}",
            norm.coincidences, norm.radius
        ),
    ]);
    Ok(RunOutput {
        files: vec![("graph-audit".into(), csv.0)],
        extra: json!({ "violations": audit.violations }),
    })
}

fn tree_audit(rank: usize, r: &Resolved) -> Result<RunOutput> {
    let tree = CayleyTree { rank };
    let n = r.n.unwrap_or(r.k + 1);
    let mut csv = Csv::new("check,parameter,result,detail");
    csv.row(&[
        "tree_like".into(),
        n.to_string(),
        if is_tree_like(&tree, n)? {
            "pass"
        } else {
            "fail"
        }
        .into(),
        String::new(),
    ]);
    let audit = audit_schreier(&tree, r.samples, r.max_len, r.seed);
    csv.row(&[
        "schreier_bijectivity".into(),
        audit.checked.to_string(),
        if audit.violations == 0 {
            "pass"
        } else {
            "fail"
        }
        .into(),
        audit.first_violation.unwrap_or_default(),
    ]);
    Ok(RunOutput {
        files: vec![("graph-audit".into(), csv.0)],
        extra: json!({}),
    })
}

fn unsupported(cmd: Command, what: &str) -> Error {
    Error::Invalid(format!(
        "{} is not available for {what} constructions",
        cmd.name()
    ))
}

/// Run one command on a resolved config.
pub fn run(cmd: Command, r: &Resolved) -> Result<RunOutput> {
    match &r.construction {
        Construction::Glued { .. } => {
            let GluedBuild { graph, mu, info } = build_glued(r)?;
            let mut out = match cmd {
                Command::EntropyCurve => {
                    let laws = (0..=r.t)
                        .map(|t| convolution(&mu, t, DEFAULT_SUPPORT_BUDGET))
                        .collect::<Result<Vec<_>>>()?;
                    curve_output(&graph, &laws, r)?
                }
                Command::RwEntropy => rw_output(
                    &rw_entropy(&mu, None, r.t_max, DEFAULT_SUPPORT_BUDGET)?,
                    json!({ "group": "free" }),
                ),
                Command::Fixing => fixing_output(&graph, &mu, graph.depth(), r, json!({}))?,
                Command::Norm => norm_output(&graph, r, ReducedWord::parse)?,
                Command::Walk => graph_walk(&graph, &mu, r),
                Command::GraphAudit => audit_output(&graph, r)?,
            };
            merge(&mut out.extra, info);
            Ok(out)
        }
        Construction::Lamplighter { lamp, base } => {
            let m = parse_z(lamp, "lamp group")?;
            let m = u8::try_from(m)
                .map_err(|_| Error::Invalid(format!("lamp group z{m} too large")))?;
            let g = Lamplighter::new(m, parse_z(base, "base group")?)?;
            let mu = group_measure(&r.measure, || g.standard_measure(), |a| g.parse_atom(a))?;
            family_run(cmd, &g, &mu, r, |a| g.parse_atom(a), "lamplighter")
        }
        Construction::Finperm { points, shift } => {
            let g = FinPerm::new(parse_z(points, "point set")?, *shift)?;
            let mu = group_measure(&r.measure, || g.standard_measure(), |a| g.parse_atom(a))?;
            family_run(cmd, &g, &mu, r, |a| g.parse_atom(a), "permutation")
        }
        Construction::Quotient { name, rank } => {
            let q = NilpotentQuotient::parse(name)?;
            q.check_rank(*rank)?;
            let mu = free_measure(&r.measure, *rank)?;
            match cmd {
                Command::RwEntropy => Ok(rw_output(
                    &rw_entropy(&mu, Some(&q), r.t_max, DEFAULT_SUPPORT_BUDGET)?,
                    json!({ "group": q.name() }),
                )),
                Command::Walk => Ok(graph_walk(&QuotientCayleyGraph::new(q, *rank)?, &mu, r)),
                Command::Fixing => {
                    let g = QuotientCayleyGraph::new(q, *rank)?;
                    fixing_output(&g, &mu, r.n.unwrap_or(r.k + 1), r, json!({}))
                }
                _ => Err(unsupported(cmd, "quotient")),
            }
        }
        Construction::Free { rank } => {
            let mu = free_measure(&r.measure, *rank)?;
            let tree = CayleyTree { rank: *rank };
            match cmd {
                Command::RwEntropy => Ok(rw_output(
                    &rw_entropy(&mu, None, r.t_max, DEFAULT_SUPPORT_BUDGET)?,
                    json!({ "group": "free" }),
                )),
                Command::Walk => Ok(graph_walk(&tree, &mu, r)),
                Command::Fixing => fixing_output(&tree, &mu, r.n.unwrap_or(r.k + 1), r, json!({})),
                Command::GraphAudit => tree_audit(*rank, r),
                _ => Err(unsupported(cmd, "free")),
            }
        }
    }
}

fn family_run<F: ConjugacyFamily>(
    cmd: Command,
    family: &F,
    mu: &FiniteDistribution<F::Element>,
    r: &Resolved,
    parse: impl Fn(&str) -> Result<F::Element>,
    what: &str,
) -> Result<RunOutput> {
    match cmd {
        Command::EntropyCurve => {
            let laws = convolution_powers(family, mu, r.t, DEFAULT_SUPPORT_BUDGET)?;
            curve_output(family, &laws, r)
        }
        Command::RwEntropy => Ok(rw_output(
            &rw_entropy_in(family, mu, r.t_max, DEFAULT_SUPPORT_BUDGET)?,
            json!({ "group": what }),
        )),
        Command::Norm => norm_output(family, r, parse),
        Command::Walk => group_walk(family, mu, r),
        Command::Fixing | Command::GraphAudit => Err(unsupported(cmd, what)),
    }
}

fn merge(into: &mut serde_json::Value, from: serde_json::Value) {
    if let (Some(a), serde_json::Value::Object(b)) = (into.as_object_mut(), from) {
        a.extend(b);
    }
}

/// Parse, resolve, run on a pool of the requested size and write outputs.
pub fn execute(cmd: Command, overrides: &Overrides) -> Result<Vec<PathBuf>> {
    let config = match &overrides.config {
        Some(p) => load_config(p)?,
        None => Config::default(),
    };
    let threads = overrides.threads.or(config.threads).unwrap_or(0);
    let resolved = resolve(config, overrides)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let started = Instant::now();
    log::info!("running {} with seed {}", cmd.name(), resolved.seed);
    let out = pool.install(|| run(cmd, &resolved))?;
    let elapsed = started.elapsed().as_secs_f64();
    let Some(dir) = &overrides.out_dir else {
        for (_, csv) in &out.files {
            print!("{csv}");
        }
        return Ok(vec![]);
    };
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (stem, csv) in &out.files {
        let path = dir.join(format!("{stem}.csv"));
        std::fs::write(&path, csv)?;
        written.push(path);
    }
    let files: BTreeMap<&str, String> = out
        .files
        .iter()
        .map(|(s, _)| (s.as_str(), format!("{s}.csv")))
        .collect();
    let meta = json!({
        "command": cmd.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": resolved,
        "threads": pool.current_num_threads(),
        "wall_clock_seconds": elapsed,
        "files": files,
        "details": out.extra,
    });
    let path = dir.join(format!("{}.meta.json", cmd.name()));
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n",
    )?;
    written.push(path);
    Ok(written)
}

/// Entry point for the binary: returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command, &cli.overrides) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_constructions_parse() {
        assert_eq!(
            parse_compact_construction("lamplighter { lamp = z2, base = z3 }").unwrap(),
            Construction::Lamplighter {
                lamp: "z2".into(),
                base: "z3".into()
            }
        );
        assert_eq!(
            parse_compact_construction("finperm { points = z3, shift = true }").unwrap(),
            Construction::Finperm {
                points: "z3".into(),
                shift: true
            }
        );
        let Construction::Glued { n, edge, .. } =
            parse_compact_construction("glued { n = auto, edge = [1, 0, 0] }").unwrap()
        else {
            panic!("glued expected")
        };
        assert_eq!(n, DepthSpec::Named("auto".into()));
        assert_eq!(edge, Some(vec![1, 0, 0]));
        assert_eq!(
            parse_compact_construction("free").unwrap(),
            Construction::Free { rank: 2 }
        );
        assert!(parse_compact_construction("glued { bogus = 1 }").is_err());
    }

    #[test]
    fn flags_override_config() {
        let c: Config =
            toml::from_str("seed = 4\nt = 2\nconstruction = \"quotient { name = heisenberg }\"\n")
                .unwrap();
        let o = Overrides {
            t: Some(5),
            p_grid: Some("1, 0, 0.5".into()),
            ..Overrides::default()
        };
        let r = resolve(c, &o).unwrap();
        assert_eq!((r.seed, r.t), (4, 5));
        assert_eq!(r.p_grid, vec![0.0, 0.5, 1.0]);
        assert!(matches!(r.construction, Construction::Quotient { .. }));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Contract("x".into())), EXIT_CONTRACT);
        assert_eq!(exit_code(&Error::budget("support", "x")), EXIT_BUDGET);
        assert_eq!(exit_code(&Error::Parse("x".into())), EXIT_INPUT);
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
