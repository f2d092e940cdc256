//! Loading and saving of case bases and solutions as `.pcase` files with a
//! `casebase.idx` index.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use caseplan::abstraction::AbstractCase;
use caseplan::domain::{Domain, PlanningCase};
use caseplan::dsl::{self, CaseMeta, Diagnostic};
use caseplan::planner::CaseBase;

/// Renders parser diagnostics into one error.
pub fn diag_err(file: &str, diags: Vec<Diagnostic>) -> anyhow::Error {
    let lines: Vec<String> = diags.iter().map(|d| format!("{}: {}", file, d)).collect();
    anyhow!("{}", lines.join("\n"))
}

/// Writes a case base as `casebase.idx` plus one `.pcase` file per case.
pub fn save_casebase(dir: &Path, cases: &[(String, AbstractCase)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    // The index format requires descending plan-length order (the
    // retrieval order); keep insertion order among equal lengths.
    let mut cases: Vec<&(String, AbstractCase)> = cases.iter().collect();
    cases.sort_by_key(|(_, c)| std::cmp::Reverse(c.plan.len()));
    let mut index = Vec::new();
    for (name, case) in cases {
        let meta = CaseMeta {
            alpha: case.alpha.iter().cloned().collect(),
            beta: case.beta.clone(),
            source: case.source.clone(),
        };
        let concrete_case = PlanningCase {
            problem: case.problem.clone(),
            plan: case.plan.clone(),
        };
        let text = dsl::format_case(name, &concrete_case, &meta);
        fs::write(dir.join(format!("{}.pcase", name)), text)?;
        index.push((name.clone(), case.plan.len()));
    }
    fs::write(dir.join("casebase.idx"), dsl::format_casebase(&index))?;
    Ok(())
}

/// Loads a case base written by [`save_casebase`], validating every case
/// against the abstract domain.
pub fn load_casebase(dir: &Path, abstract_dom: &Domain) -> Result<CaseBase> {
    let index_path = dir.join("casebase.idx");
    let text = fs::read_to_string(&index_path)
        .with_context(|| format!("reading {}", index_path.display()))?;
    let entries = dsl::parse_casebase_index(&text)
        .map_err(|d| diag_err(&index_path.display().to_string(), d))?;
    let mut cb = CaseBase::new();
    for (name, expected_len) in entries {
        let path = dir.join(format!("{}.pcase", name));
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let (parsed_name, case, meta) = dsl::parse_case(&text, abstract_dom)
            .map_err(|d| diag_err(&path.display().to_string(), d))?;
        if parsed_name != name {
            bail!(
                "{}: case name {} does not match the index",
                path.display(),
                parsed_name
            );
        }
        if case.plan.len() != expected_len {
            bail!(
                "{}: plan length {} does not match the index",
                path.display(),
                case.plan.len()
            );
        }
        cb.insert(
            name,
            AbstractCase {
                problem: case.problem,
                plan: case.plan,
                alpha: meta.alpha.into_iter().collect(),
                beta: meta.beta,
                source: meta.source,
            },
        );
    }
    Ok(cb)
}
