//! The `caseplan` command line tool: validate domain/problem/case files,
//! learn abstract case bases, solve problems in three modes, generate
//! random lathe cases, and run benchmark experiments.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use caseplan::abstraction::AbstractionTheory;
use caseplan::domain::{Domain, PlanningCase, Problem};
use caseplan::dsl::{self, SourceKind};
use caseplan::lathe;
use caseplan::planner::{
    solve_hierarchical, solve_pure, solve_with_cases, SearchBudget, SolveError, TheoryContext,
};
use caseplan_cli::bench::{self, ExperimentConfig};
use caseplan_cli::io::{diag_err, load_casebase, save_casebase};

const EXIT_UNSOLVED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "caseplan", about = "Case-based abstraction planner", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate domain, theory, problem, and case files.
    ///
    /// Files are processed in order: the first .pdom is the concrete
    /// domain, the second the abstract domain; .pabs files are checked
    /// against both; .pprob and .pcase files against the concrete domain.
    Validate { files: Vec<PathBuf> },
    /// Learn abstract cases from concrete case files and write a case base.
    Learn {
        /// Concrete .pcase files.
        cases: Vec<PathBuf>,
        #[arg(long)]
        domain: PathBuf,
        #[arg(long = "abstract")]
        abstract_domain: PathBuf,
        #[arg(long)]
        theory: PathBuf,
        /// Output case-base directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a problem and write the solution as a .pcase file.
    Solve {
        problem: PathBuf,
        #[arg(long)]
        domain: PathBuf,
        #[arg(long = "abstract")]
        abstract_domain: Option<PathBuf>,
        #[arg(long)]
        theory: Option<PathBuf>,
        #[arg(long, default_value = "pure")]
        mode: String,
        /// Case-base directory (mode=cases).
        #[arg(long)]
        casebase: Option<PathBuf>,
        #[arg(long)]
        max_expansions: Option<u64>,
        #[arg(long)]
        deep_max: Option<u32>,
        /// Solution output file (defaults to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate random solvable cases for a bundled domain.
    Gen {
        #[arg(long, default_value = "lathe")]
        domain: String,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory for the generated .pcase files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark experiment described by a config file.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_domain(path: &Path) -> Result<Domain> {
    dsl::parse_domain(&read(path)?).map_err(|d| diag_err(&path.display().to_string(), d))
}

fn load_theory(path: &Path, concrete: &Domain, abstract_dom: &Domain) -> Result<AbstractionTheory> {
    dsl::parse_theory(&read(path)?, concrete, abstract_dom)
        .map_err(|d| diag_err(&path.display().to_string(), d))
}

fn cmd_validate(files: &[PathBuf]) -> Result<()> {
    if files.is_empty() {
        bail!("no files given");
    }
    let mut concrete: Option<Domain> = None;
    let mut abstract_dom: Option<Domain> = None;
    for path in files {
        let text = read(path)?;
        let name = path.display().to_string();
        let kind = dsl::detect_kind(&name, &text)
            .with_context(|| format!("{}: cannot determine file kind", name))?;
        match kind {
            SourceKind::Domain => {
                let d = load_domain(path)?;
                let slot = if concrete.is_none() {
                    &mut concrete
                } else {
                    &mut abstract_dom
                };
                *slot = Some(d);
            }
            SourceKind::Theory => {
                let (c, a) = match (&concrete, &abstract_dom) {
                    (Some(c), Some(a)) => (c, a),
                    _ => bail!("{}: validate a concrete and an abstract domain first", name),
                };
                load_theory(path, c, a)?;
            }
            SourceKind::Problem => {
                let c = concrete
                    .as_ref()
                    .with_context(|| format!("{}: validate a domain first", name))?;
                dsl::parse_problem(&text, c).map_err(|d| diag_err(&name, d))?;
            }
            SourceKind::Case => {
                let c = concrete
                    .as_ref()
                    .with_context(|| format!("{}: validate a domain first", name))?;
                dsl::parse_case(&text, c).map_err(|d| diag_err(&name, d))?;
            }
            SourceKind::CasebaseIndex => {
                dsl::parse_casebase_index(&text).map_err(|d| diag_err(&name, d))?;
            }
        }
        println!("ok: {}", name);
    }
    Ok(())
}

fn cmd_learn(
    cases: &[PathBuf],
    domain: &Path,
    abstract_domain: &Path,
    theory: &Path,
    out: &Path,
) -> Result<()> {
    if cases.is_empty() {
        bail!("no case files given");
    }
    let concrete = load_domain(domain)?;
    let abstract_dom = load_domain(abstract_domain)?;
    let theory = load_theory(theory, &concrete, &abstract_dom)?;
    let mut learned = Vec::new();
    for path in cases {
        let name = path.display().to_string();
        let (case_name, case, _) =
            dsl::parse_case(&read(path)?, &concrete).map_err(|d| diag_err(&name, d))?;
        let abs = caseplan::abstraction::pabs(
            &case,
            &concrete,
            &abstract_dom,
            &theory,
            caseplan::abstraction::PabsBudgets {
                proof: lathe::proof_budget(),
                path_cap: 10_000,
            },
        )?;
        println!("{}: {} abstract cases", case_name, abs.len());
        for (i, a) in abs.into_iter().enumerate() {
            learned.push((format!("{}_{}", case_name, i), a));
        }
    }
    save_casebase(out, &learned)?;
    println!("wrote {} cases to {}", learned.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    problem: &Path,
    domain: &Path,
    abstract_domain: &Option<PathBuf>,
    theory: &Option<PathBuf>,
    mode: &str,
    casebase: &Option<PathBuf>,
    max_expansions: Option<u64>,
    deep_max: Option<u32>,
    out: &Option<PathBuf>,
) -> Result<Option<u8>> {
    let concrete = load_domain(domain)?;
    let (name, problem): (String, Problem) = dsl::parse_problem(&read(problem)?, &concrete)
        .map_err(|d| diag_err(&problem.display().to_string(), d))?;
    let mut budget = SearchBudget {
        proof: lathe::proof_budget(),
        ..SearchBudget::default()
    };
    if let Some(m) = max_expansions {
        budget.max_expansions = m;
    }
    if let Some(d) = deep_max {
        budget.deep_max = d;
    }
    let abstraction = match (abstract_domain, theory) {
        (Some(a), Some(t)) => {
            let abstract_dom = load_domain(a)?;
            let theory = load_theory(t, &concrete, &abstract_dom)?;
            Some((abstract_dom, theory))
        }
        (None, None) => None,
        _ => bail!("--abstract and --theory must be given together"),
    };
    let result = match mode {
        "pure" => solve_pure(&problem, &concrete, budget),
        "hier" | "cases" => {
            let (abstract_dom, theory) = abstraction
                .as_ref()
                .context("--abstract and --theory are required for this mode")?;
            let ctx = TheoryContext {
                concrete: &concrete,
                abstract_dom,
                theory,
            };
            if mode == "hier" {
                solve_hierarchical(&problem, &ctx, budget)
            } else {
                let dir = casebase
                    .as_ref()
                    .context("--casebase is required for mode=cases")?;
                let cb = load_casebase(dir, abstract_dom)?;
                solve_with_cases(&problem, &cb, &ctx, budget)
            }
        }
        other => bail!("unknown mode {}", other),
    };
    match result {
        Ok(solution) => {
            let case = PlanningCase {
                problem,
                plan: solution.plan,
            };
            let text = dsl::format_case(
                &format!("{}_solution", name),
                &case,
                &dsl::CaseMeta::default(),
            );
            match out {
                Some(path) => fs::write(path, text)?,
                None => print!("{}", text),
            }
            eprintln!(
                "solved: {} steps, {} expansions{}",
                case.plan.len(),
                solution.stats.expansions,
                solution
                    .stats
                    .case_used
                    .map(|c| format!(", case {}", c))
                    .unwrap_or_default()
            );
            Ok(None)
        }
        Err(SolveError::Unsolved { expansions }) => {
            eprintln!("unsolved within depth limit ({} expansions)", expansions);
            Ok(Some(EXIT_UNSOLVED))
        }
        Err(SolveError::BudgetExceeded { expansions }) => {
            eprintln!("budget exhausted ({} expansions)", expansions);
            Ok(Some(EXIT_BUDGET))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_gen(domain: &str, count: usize, seed: u64, out: &Path) -> Result<()> {
    if domain != "lathe" {
        bail!("generation is only available for the lathe domain");
    }
    let cases = lathe::generate_problems(&lathe::GenerationParams {
        count,
        seed,
        ..Default::default()
    })?;
    fs::create_dir_all(out)?;
    for (i, case) in cases.iter().enumerate() {
        let name = format!("lathe_s{}_{:02}", seed, i);
        let text = dsl::format_case(&name, case, &dsl::CaseMeta::default());
        fs::write(out.join(format!("{}.pcase", name)), text)?;
    }
    println!("wrote {} cases to {}", cases.len(), out.display());
    Ok(())
}

fn cmd_bench(config_path: &Path) -> Result<()> {
    let config = ExperimentConfig::parse(&read(config_path)?)?;
    let report = bench::run_experiment(&config)?;
    if let Some(output) = &config.output {
        // Report paths are relative to the config file.
        let base = config_path.parent().unwrap_or(Path::new(".")).join(output);
        fs::write(base.with_extension("tsv"), bench::emit_tsv(&report))?;
        fs::write(base.with_extension("json"), bench::emit_json(&report)?)?;
        println!(
            "wrote {} and {}",
            base.with_extension("tsv").display(),
            base.with_extension("json").display()
        );
    }
    for a in &report.aggregates {
        let sign = a
            .sign_vs_pure
            .as_ref()
            .map(|s| {
                format!(
                    ", vs pure: {}W/{}L/{}T/{}C p={:.4}",
                    s.wins, s.losses, s.ties, s.censored, s.p_value
                )
            })
            .unwrap_or_default();
        println!(
            "{}: {}/{} solved, median expansions {}{}",
            a.mode,
            a.solved,
            a.total,
            a.median_expansions
                .map(|m| m.to_string())
                .unwrap_or_else(|| "-".into()),
            sign
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Validate { files } => cmd_validate(files).map(|()| None),
        Command::Learn {
            cases,
            domain,
            abstract_domain,
            theory,
            out,
        } => cmd_learn(cases, domain, abstract_domain, theory, out).map(|()| None),
        Command::Solve {
            problem,
            domain,
            abstract_domain,
            theory,
            mode,
            casebase,
            max_expansions,
            deep_max,
            out,
        } => cmd_solve(
            problem,
            domain,
            abstract_domain,
            theory,
            mode,
            casebase,
            *max_expansions,
            *deep_max,
            out,
        ),
        Command::Gen {
            domain,
            count,
            seed,
            out,
        } => cmd_gen(domain, *count, *seed, out).map(|()| None),
        Command::Bench { config } => cmd_bench(config).map(|()| None),
    };
    match outcome {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(code)) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(EXIT_INPUT)
        }
    }
}
