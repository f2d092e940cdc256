//! The experiment harness: runs pure, hierarchical, and case-based solving
//! over shared training/test splits with identical budgets, and reports
//! per-trial records, a maximally conservative sign test against the pure
//! baseline, and solution-quality statistics.

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use caseplan::abstraction::{pabs, PabsBudgets};
use caseplan::domain::{execute_plan, Domain, PlanningCase, Problem};
use caseplan::lathe;
use caseplan::planner::{
    solve_hierarchical, solve_pure, solve_with_cases, CaseBase, SearchBudget, Solution, SolveError,
    TheoryContext,
};
use caseplan::toy;

/// One solving mode of the experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Pure,
    Hierarchical,
    Cases,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Pure => "pure",
            Mode::Hierarchical => "hier",
            Mode::Cases => "cases",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "pure" => Some(Mode::Pure),
            "hier" | "hierarchical" => Some(Mode::Hierarchical),
            "cases" => Some(Mode::Cases),
            _ => None,
        }
    }
}

/// A full experiment description. Training and test sets are generated
/// from disjoint seeds, so they are independent.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub name: String,
    /// One of `lathe`, `cube`, `counting`.
    pub domain: String,
    pub modes: Vec<Mode>,
    pub test_count: usize,
    pub test_seed: u64,
    /// Training-set sizes; each size is generated once per training seed.
    pub training_sizes: Vec<usize>,
    pub training_seeds: Vec<u64>,
    pub max_expansions: u64,
    pub deep_max: u32,
    /// Use the ablated abstract lathe domain for learning and reuse.
    pub ablated: bool,
    /// Report base path (extension added per format); empty = no files.
    pub output: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            name: "experiment".into(),
            domain: "lathe".into(),
            modes: vec![Mode::Pure, Mode::Cases],
            test_count: 20,
            test_seed: 100,
            training_sizes: vec![5],
            training_seeds: vec![1, 2, 3],
            max_expansions: 2_000_000,
            deep_max: 20,
            ablated: false,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn check(&self) -> Result<()> {
        if self.modes.is_empty() {
            bail!("no modes selected");
        }
        if self.training_seeds.contains(&self.test_seed) {
            bail!(
                "training seed {} collides with the test seed",
                self.test_seed
            );
        }
        if self.training_sizes.is_empty() || self.training_seeds.is_empty() {
            bail!("training sizes and seeds must be nonempty");
        }
        Ok(())
    }

    /// Parses the `bench` block format: a `bench <name>` header followed by
    /// `key: value` lines (`#` comments allowed).
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::default();
        let mut saw_header = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if !saw_header {
                let mut parts = line.split_whitespace();
                if parts.next() != Some("bench") {
                    bail!("line {}: expected `bench <name>` header", lineno + 1);
                }
                config.name = parts
                    .next()
                    .context("missing experiment name in header")?
                    .to_owned();
                saw_header = true;
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .with_context(|| format!("line {}: expected `key: value`", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            let list = |v: &str| -> Vec<String> {
                v.split(',')
                    .map(|s| s.trim().to_owned())
                    .filter(|s| !s.is_empty())
                    .collect()
            };
            match key {
                "domain" => config.domain = value.to_owned(),
                "modes" => {
                    config.modes = list(value)
                        .iter()
                        .map(|m| Mode::parse(m).with_context(|| format!("unknown mode {}", m)))
                        .collect::<Result<_>>()?;
                }
                "test_count" => config.test_count = value.parse()?,
                "test_seed" => config.test_seed = value.parse()?,
                "training_sizes" => {
                    config.training_sizes = list(value)
                        .iter()
                        .map(|s| s.parse())
                        .collect::<Result<_, _>>()?;
                }
                "training_seeds" => {
                    config.training_seeds = list(value)
                        .iter()
                        .map(|s| s.parse())
                        .collect::<Result<_, _>>()?;
                }
                "max_expansions" => config.max_expansions = value.parse()?,
                "deep_max" => config.deep_max = value.parse()?,
                "ablated" => config.ablated = value.parse()?,
                "output" => config.output = Some(value.to_owned()),
                other => bail!("line {}: unknown key {}", lineno + 1, other),
            }
        }
        if !saw_header {
            bail!("missing `bench <name>` header");
        }
        config.check()?;
        Ok(config)
    }
}

/// The outcome of solving one test problem in one arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub problem: String,
    /// Arm label, e.g. `pure` or `cases[seed=1,n=5]`.
    pub mode: String,
    pub solved: bool,
    pub expansions: u64,
    /// Wall-clock milliseconds; informational only and excluded from the
    /// deterministic TSV report.
    pub wall_ms: u64,
    pub plan_len: Option<usize>,
    pub case_used: Option<String>,
    /// Length of the reference solution from generation, when one exists.
    pub reference_len: Option<usize>,
}

/// Aggregated comparison of one arm against the pure baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub mode: String,
    pub solved: usize,
    pub total: usize,
    /// Median expansions over this arm's solved trials.
    pub median_expansions: Option<u64>,
    /// Sign test of this arm vs the pure baseline (absent for pure itself
    /// or when pure was not run).
    pub sign_vs_pure: Option<SignTestResult>,
    /// Quality against the reference solutions, over solved trials with a
    /// reference.
    pub quality: Option<QualityStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub trials: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRecord>,
}

/// One comparison pair for the sign test: expansion counts of arms A and
/// B, `None` when the trial was censored (not solved within budget).
pub type SignPair = (Option<u64>, Option<u64>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignTestResult {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    pub censored: usize,
    pub p_value: f64,
}

/// Maximally conservative paired sign test for "A is faster than B":
/// a win requires A strictly better (fewer expansions, or A solved while B
/// censored); ties and doubly-censored pairs count against the hypothesis.
/// The p-value is the binomial upper tail P(X >= wins) over all pairs at
/// chance 1/2.
pub fn sign_test(pairs: &[SignPair]) -> SignTestResult {
    let mut wins = 0;
    let mut losses = 0;
    let mut ties = 0;
    let mut censored = 0;
    for (a, b) in pairs {
        match (a, b) {
            (Some(a), Some(b)) if a < b => wins += 1,
            (Some(a), Some(b)) if a == b => ties += 1,
            (Some(_), Some(_)) => losses += 1,
            (Some(_), None) => wins += 1,
            (None, Some(_)) => losses += 1,
            (None, None) => censored += 1,
        }
    }
    let n = wins + losses + ties + censored;
    SignTestResult {
        wins,
        losses,
        ties,
        censored,
        p_value: binomial_upper_tail(wins, n),
    }
}

/// P(X >= k) for X ~ Binomial(n, 1/2).
fn binomial_upper_tail(k: usize, n: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    // Iterate the binomial pmf multiplicatively to avoid overflow.
    let mut pmf = 0.5f64.powi(n as i32); // P(X = 0)
    let mut tail = 0.0;
    for x in 0..=n {
        if x >= k {
            tail += pmf;
        }
        pmf *= (n - x) as f64 / (x + 1) as f64;
    }
    tail.min(1.0)
}

/// Percentages of found solutions shorter than, equal to, and longer than
/// the reference solutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityStats {
    pub shorter: f64,
    pub equal: f64,
    pub longer: f64,
}

pub fn quality_stats(pairs: &[(usize, usize)]) -> Result<QualityStats> {
    if pairs.is_empty() {
        bail!("no (found, reference) pairs");
    }
    let n = pairs.len() as f64;
    let shorter = pairs.iter().filter(|(f, r)| f < r).count() as f64;
    let longer = pairs.iter().filter(|(f, r)| f > r).count() as f64;
    Ok(QualityStats {
        shorter: 100.0 * shorter / n,
        equal: 100.0 * (n - shorter - longer) / n,
        longer: 100.0 * longer / n,
    })
}

/// The materials of one experiment: domains, test problems (with optional
/// reference plans), and named training cases per (seed, size).
struct Materials {
    concrete: Domain,
    abstract_dom: Domain,
    theory: caseplan::abstraction::AbstractionTheory,
    proof: caseplan::logic::ProofBudget,
    tests: Vec<(String, Problem, Option<usize>)>,
    /// (arm suffix, training cases)
    training: Vec<(String, Vec<PlanningCase>)>,
}

fn lathe_materials(config: &ExperimentConfig) -> Result<Materials> {
    let (concrete, abstract_dom, theory) = lathe::build_domains();
    let (abstract_dom, theory) = if config.ablated {
        lathe::build_ablated_abstract_domain()
    } else {
        (abstract_dom, theory)
    };
    let gen = |count: usize, seed: u64| {
        lathe::generate_problems(&lathe::GenerationParams {
            count,
            seed,
            ..Default::default()
        })
    };
    let tests = gen(config.test_count, config.test_seed)?
        .into_iter()
        .enumerate()
        .map(|(i, c)| (format!("p{:02}", i), c.problem, Some(c.plan.len())))
        .collect();
    let mut training = Vec::new();
    for &seed in &config.training_seeds {
        for &size in &config.training_sizes {
            training.push((format!("[seed={},n={}]", seed, size), gen(size, seed)?));
        }
    }
    Ok(Materials {
        concrete,
        abstract_dom,
        theory,
        proof: lathe::proof_budget(),
        tests,
        training,
    })
}

fn fixture_materials(bundle: toy::FixtureBundle) -> Materials {
    let tests = bundle
        .problems
        .iter()
        .map(|(name, p)| (name.clone(), p.clone(), None))
        .collect();
    let training = vec![(String::new(), bundle.cases.values().cloned().collect())];
    Materials {
        concrete: bundle.concrete,
        abstract_dom: bundle.abstract_dom,
        theory: bundle.theory,
        proof: caseplan::logic::ProofBudget::default(),
        tests,
        training,
    }
}

fn learn_casebase(materials: &Materials, cases: &[PlanningCase]) -> Result<CaseBase> {
    let mut cb = CaseBase::new();
    for (i, case) in cases.iter().enumerate() {
        let learned = pabs(
            case,
            &materials.concrete,
            &materials.abstract_dom,
            &materials.theory,
            PabsBudgets {
                proof: materials.proof,
                path_cap: 10_000,
            },
        )?;
        for (j, abs) in learned.into_iter().enumerate() {
            cb.insert(format!("c{}_{}", i, j), abs);
        }
    }
    Ok(cb)
}

/// Turns a solver outcome into a trial record; solved outcomes are audited
/// against execute_plan first, so no invalid plan can be reported solved.
#[allow(clippy::too_many_arguments)]
fn record(
    problem: &str,
    problem_def: &Problem,
    concrete: &Domain,
    proof: caseplan::logic::ProofBudget,
    mode: String,
    reference_len: Option<usize>,
    result: Result<Solution, SolveError>,
    wall_ms: u64,
) -> Result<TrialRecord> {
    match result {
        Ok(solution) => {
            let case = PlanningCase {
                problem: problem_def.clone(),
                plan: solution.plan.clone(),
            };
            execute_plan(&case, concrete, proof).map_err(|e| {
                anyhow::anyhow!("audit: {} plan for {} invalid: {}", mode, problem, e)
            })?;
            Ok(TrialRecord {
                problem: problem.to_owned(),
                mode,
                solved: true,
                expansions: solution.stats.expansions,
                wall_ms,
                plan_len: Some(solution.plan.len()),
                case_used: solution.stats.case_used,
                reference_len,
            })
        }
        Err(SolveError::Unsolved { expansions })
        | Err(SolveError::BudgetExceeded { expansions }) => Ok(TrialRecord {
            problem: problem.to_owned(),
            mode,
            solved: false,
            expansions,
            wall_ms,
            plan_len: None,
            case_used: None,
            reference_len,
        }),
        Err(e) => Err(e.into()),
    }
}

/// Runs the whole experiment: every mode (cases once per training set)
/// over every test problem with one shared budget, followed by an audit
/// that re-validates every solved plan.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.check()?;
    let materials = match config.domain.as_str() {
        "lathe" => lathe_materials(config)?,
        "cube" => fixture_materials(toy::cube_fixture()),
        "counting" => fixture_materials(toy::counting_fixture()),
        other => bail!("unknown benchmark domain {}", other),
    };
    let budget = SearchBudget {
        max_expansions: config.max_expansions,
        deep_max: config.deep_max,
        wall_limit: None,
        proof: materials.proof,
    };
    let ctx = TheoryContext {
        concrete: &materials.concrete,
        abstract_dom: &materials.abstract_dom,
        theory: &materials.theory,
    };
    let casebases: Vec<(String, CaseBase)> = if config.modes.contains(&Mode::Cases) {
        materials
            .training
            .iter()
            .map(|(suffix, cases)| Ok((suffix.clone(), learn_casebase(&materials, cases)?)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let mut trials = Vec::new();
    for (name, problem, reference_len) in &materials.tests {
        for &mode in &config.modes {
            match mode {
                Mode::Pure => {
                    let t0 = Instant::now();
                    let result = solve_pure(problem, &materials.concrete, budget);
                    trials.push(record(
                        name,
                        problem,
                        &materials.concrete,
                        materials.proof,
                        "pure".into(),
                        *reference_len,
                        result,
                        t0.elapsed().as_millis() as u64,
                    )?);
                }
                Mode::Hierarchical => {
                    let t0 = Instant::now();
                    let result = solve_hierarchical(problem, &ctx, budget);
                    trials.push(record(
                        name,
                        problem,
                        &materials.concrete,
                        materials.proof,
                        "hier".into(),
                        *reference_len,
                        result,
                        t0.elapsed().as_millis() as u64,
                    )?);
                }
                Mode::Cases => {
                    for (suffix, cb) in &casebases {
                        let t0 = Instant::now();
                        let result = solve_with_cases(problem, cb, &ctx, budget);
                        trials.push(record(
                            name,
                            problem,
                            &materials.concrete,
                            materials.proof,
                            format!("cases{}", suffix),
                            *reference_len,
                            result,
                            t0.elapsed().as_millis() as u64,
                        )?);
                    }
                }
            }
        }
    }
    trials.sort_by(|a, b| (&a.problem, &a.mode).cmp(&(&b.problem, &b.mode)));
    let aggregates = aggregate(&trials);
    Ok(ExperimentReport {
        name: config.name.clone(),
        trials,
        aggregates,
    })
}

fn median(mut values: Vec<u64>) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    Some(values[values.len() / 2])
}

fn aggregate(trials: &[TrialRecord]) -> Vec<AggregateRecord> {
    let mut by_mode: BTreeMap<&str, Vec<&TrialRecord>> = BTreeMap::new();
    for t in trials {
        by_mode.entry(&t.mode).or_default().push(t);
    }
    let pure: Option<BTreeMap<&str, &TrialRecord>> = by_mode
        .get("pure")
        .map(|v| v.iter().map(|t| (t.problem.as_str(), *t)).collect());
    let mut out = Vec::new();
    for (mode, records) in &by_mode {
        let solved = records.iter().filter(|t| t.solved).count();
        let median_expansions = median(
            records
                .iter()
                .filter(|t| t.solved)
                .map(|t| t.expansions)
                .collect(),
        );
        let sign_vs_pure = match (&pure, *mode) {
            (Some(pure), m) if m != "pure" => {
                let pairs: Vec<SignPair> = records
                    .iter()
                    .filter_map(|t| {
                        pure.get(t.problem.as_str()).map(|p| {
                            (
                                t.solved.then_some(t.expansions),
                                p.solved.then_some(p.expansions),
                            )
                        })
                    })
                    .collect();
                (!pairs.is_empty()).then(|| sign_test(&pairs))
            }
            _ => None,
        };
        let quality_pairs: Vec<(usize, usize)> = records
            .iter()
            .filter(|t| t.solved)
            .filter_map(|t| Some((t.plan_len?, t.reference_len?)))
            .collect();
        let quality = quality_stats(&quality_pairs).ok();
        out.push(AggregateRecord {
            mode: (*mode).to_owned(),
            solved,
            total: records.len(),
            median_expansions,
            sign_vs_pure,
            quality,
        });
    }
    out
}

fn tsv_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref()
        .map(|x| x.to_string())
        .unwrap_or_else(|| "-".into())
}

/// The deterministic TSV report: one row per trial, then aggregate rows.
/// Wall-clock times are deliberately excluded so identical configurations
/// produce byte-identical files.
pub fn emit_tsv(report: &ExperimentReport) -> String {
    let mut out = format!("# bench {}\n", report.name);
    out.push_str("problem\tmode\tsolved\texpansions\tplan_len\tcase_used\treference_len\n");
    for t in &report.trials {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            t.problem,
            t.mode,
            t.solved as u8,
            t.expansions,
            tsv_opt(&t.plan_len),
            tsv_opt(&t.case_used),
            tsv_opt(&t.reference_len),
        ));
    }
    out.push_str("\n# aggregate\n");
    out.push_str(
        "mode\tsolved\ttotal\tmedian_expansions\twins\tlosses\tties\tcensored\tp_value\tshorter\tequal\tlonger\n",
    );
    for a in &report.aggregates {
        let sign = a.sign_vs_pure.as_ref();
        let q = a.quality.as_ref();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            a.mode,
            a.solved,
            a.total,
            tsv_opt(&a.median_expansions),
            tsv_opt(&sign.map(|s| s.wins)),
            tsv_opt(&sign.map(|s| s.losses)),
            tsv_opt(&sign.map(|s| s.ties)),
            tsv_opt(&sign.map(|s| s.censored)),
            tsv_opt(&sign.map(|s| format!("{:.6}", s.p_value))),
            tsv_opt(&q.map(|q| format!("{:.1}", q.shorter))),
            tsv_opt(&q.map(|q| format!("{:.1}", q.equal))),
            tsv_opt(&q.map(|q| format!("{:.1}", q.longer))),
        ));
    }
    out
}

pub fn emit_json(report: &ExperimentReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}
