//! The bundled lathe process-planning domain: a rotary-symmetric workpiece
//! is cut out of a cylindrical mold on a grid of rectangular areas. The
//! domain source files under `domains/lathe/` are the single source of
//! truth; this module parses them and adds the example fixture, a seeded
//! random problem generator, and the ablated abstract-domain variant.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::abstraction::AbstractionTheory;
use crate::domain::{
    applicable_instantiations, execute_plan, instantiate, Domain, InstantiatedOperator,
    PlanningCase, Problem, State,
};
use crate::dsl;
use crate::logic::{Atom, ProofBudget, Sym, Term};
use crate::planner::{solve_pure, SearchBudget, SolveError};

/// Proof budget sized for lathe states (a few hundred atoms with join-heavy
/// accessibility and plainness rules).
pub fn proof_budget() -> ProofBudget {
    ProofBudget {
        max_steps: 8_000_000,
        max_depth: 200,
    }
}

/// Search budget sized for lathe problems.
pub fn search_budget() -> SearchBudget {
    SearchBudget {
        max_expansions: 2_000_000,
        deep_max: 20,
        wall_limit: None,
        proof: proof_budget(),
    }
}

/// Parses and validates the bundled lathe domain files.
pub fn build_domains() -> (Domain, Domain, AbstractionTheory) {
    let concrete = dsl::parse_domain(include_str!("../domains/lathe/lathe.pdom"))
        .expect("bundled lathe concrete domain invalid");
    let abstract_dom = dsl::parse_domain(include_str!("../domains/lathe/lathe_abs.pdom"))
        .expect("bundled lathe abstract domain invalid");
    let theory = dsl::parse_theory(
        include_str!("../domains/lathe/lathe.pabs"),
        &concrete,
        &abstract_dom,
    )
    .expect("bundled lathe abstraction theory invalid");
    (concrete, abstract_dom, theory)
}

/// The ablated abstract level: the `set_fixation` operator is removed and
/// the chucking-related conditions are stripped from the remaining
/// operators (with their now-undetermined parameters). The theory is
/// unchanged.
pub fn build_ablated_abstract_domain() -> (Domain, AbstractionTheory) {
    let (_, abstract_dom, theory) = build_domains();
    let mut ablated = abstract_dom;
    ablated.name = Sym::new("lathe_abs_ablated");
    ablated
        .operators
        .retain(|o| o.name.as_str() != "set_fixation");
    let chuck_preds = ["abs_chuck_pos", "abs_chuckable_wp", "abs_diff_side"];
    for op in &mut ablated.operators {
        op.pre.retain(|a| !chuck_preds.contains(&a.pred.as_str()));
        let used: BTreeSet<Sym> = op
            .pre
            .iter()
            .chain(op.add.iter())
            .chain(op.del.iter())
            .flat_map(|a| a.vars())
            .map(|(name, _)| name)
            .collect();
        op.params.retain(|p| used.contains(p));
    }
    (ablated, theory)
}

/// The status of one grid cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellStatus {
    Raw,
    Workpiece,
    Empty,
}

impl CellStatus {
    fn as_str(self) -> &'static str {
        match self {
            CellStatus::Raw => "raw",
            CellStatus::Workpiece => "workpiece",
            CellStatus::Empty => "none",
        }
    }
}

/// A workpiece description: grid geometry (in integer tenths of a
/// millimetre) plus the status of every cell.
#[derive(Clone, Debug)]
pub struct WorkpieceSpec {
    /// Per-column (start, size), column coordinates 1-based in order.
    pub xpos: Vec<(i64, i64)>,
    /// Per-row (start, size), row coordinates 1-based in order.
    pub ypos: Vec<(i64, i64)>,
    /// Status per cell, indexed `[x - 1][y - 1]`.
    pub status: Vec<Vec<CellStatus>>,
}

fn contiguous(axis: &[(i64, i64)]) -> bool {
    let mut expected = 0;
    for (start, size) in axis {
        if *start != expected || *size <= 0 {
            return false;
        }
        expected = start + size;
    }
    true
}

impl WorkpieceSpec {
    /// Consistency violations: non-contiguous geometry or a malformed
    /// status grid. Empty means well-formed.
    pub fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !contiguous(&self.xpos) {
            out.push("x geometry is not contiguous from 0".into());
        }
        if !contiguous(&self.ypos) {
            out.push("y geometry is not contiguous from 0".into());
        }
        if self.status.len() != self.xpos.len()
            || self.status.iter().any(|col| col.len() != self.ypos.len())
        {
            out.push("status grid does not match the geometry".into());
        }
        out
    }

    /// The static geometry atoms shared by every state of a problem.
    fn static_atoms(&self) -> Vec<Atom> {
        let mut atoms = vec![
            Atom::new("xpos_max", vec![Term::Int(self.xpos.len() as i64)]),
            Atom::new("ypos_max", vec![Term::Int(self.ypos.len() as i64)]),
        ];
        for (k, (start, size)) in self.xpos.iter().enumerate() {
            atoms.push(Atom::new(
                "grid_xpos",
                vec![Term::Int(k as i64 + 1), Term::Int(*start), Term::Int(*size)],
            ));
        }
        for (k, (start, size)) in self.ypos.iter().enumerate() {
            atoms.push(Atom::new(
                "grid_ypos",
                vec![Term::Int(k as i64 + 1), Term::Int(*start), Term::Int(*size)],
            ));
        }
        atoms
    }

    fn mat_atoms(&self, goal: bool) -> Vec<Atom> {
        let mut atoms = Vec::new();
        for (xi, col) in self.status.iter().enumerate() {
            for (yi, status) in col.iter().enumerate() {
                let status = if goal && *status == CellStatus::Raw {
                    CellStatus::Empty
                } else {
                    *status
                };
                atoms.push(Atom::new(
                    "mat",
                    vec![
                        Term::Int(xi as i64 + 1),
                        Term::Int(yi as i64 + 1),
                        Term::constant(status.as_str()),
                    ],
                ));
            }
        }
        atoms
    }

    /// The planning problem for this workpiece: the initial state is the
    /// unchucked mold with no tool selected; the goal asks for every raw
    /// cell to be removed and the finished part to be released from the
    /// chuck (so every plan ends unchucked, which keeps the abstracted
    /// goals of different problems comparable). Tooling is unconstrained.
    pub fn problem(&self) -> Problem {
        let mut initial = self.static_atoms();
        initial.extend(self.mat_atoms(false));
        initial.push(Atom::new("chuck_pos", vec![Term::constant("none")]));
        initial.push(Atom::new("cut_tool", vec![Term::constant("none")]));
        initial.push(Atom::new("cut_direction", vec![Term::constant("none")]));
        let mut goal = self.static_atoms();
        goal.extend(self.mat_atoms(true));
        goal.push(Atom::new("chuck_pos", vec![Term::constant("none")]));
        Problem {
            initial: State::new(initial),
            goal: State::new(goal),
        }
    }

    /// Number of atoms in the initial state description.
    pub fn atom_count(&self) -> usize {
        self.xpos.len() * self.ypos.len() + self.xpos.len() + self.ypos.len() + 5
    }
}

/// One cutting tool: approach direction and the cell sizes it can remove.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToolSpec {
    pub name: Sym,
    pub direction: Sym,
    pub x_size: (i64, i64),
    pub y_size: (i64, i64),
}

/// The tool catalog, as encoded in the concrete domain's rules. The single
/// chucking tool is implicit in the chuck operator.
#[derive(Clone, Debug, Default)]
pub struct ToolCatalog {
    pub cutting_tools: Vec<ToolSpec>,
}

impl ToolCatalog {
    /// Extracts the catalog from the `tool_dir` / `tool_xcap` / `tool_ycap`
    /// facts of a concrete domain.
    pub fn from_domain(domain: &Domain) -> ToolCatalog {
        let fact = |pred: &str| -> Vec<Atom> {
            domain
                .rules
                .iter()
                .filter(|r| r.body.is_empty() && r.head.pred.as_str() == pred)
                .map(|r| r.head.clone())
                .collect()
        };
        let sym = |t: &Term| match t {
            Term::Const(s) => *s,
            _ => Sym::new("?"),
        };
        let int = |t: &Term| match t {
            Term::Int(i) => *i,
            _ => 0,
        };
        let mut tools = Vec::new();
        for dir in fact("tool_dir") {
            let name = sym(&dir.args[0]);
            let xcap = fact("tool_xcap")
                .iter()
                .find(|a| sym(&a.args[0]) == name)
                .map(|a| (int(&a.args[1]), int(&a.args[2])))
                .unwrap_or((0, 0));
            let ycap = fact("tool_ycap")
                .iter()
                .find(|a| sym(&a.args[0]) == name)
                .map(|a| (int(&a.args[1]), int(&a.args[2])))
                .unwrap_or((0, 0));
            tools.push(ToolSpec {
                name,
                direction: sym(&dir.args[1]),
                x_size: xcap,
                y_size: ycap,
            });
        }
        ToolCatalog {
            cutting_tools: tools,
        }
    }

    /// Catalog invariant violations: a tool for each horizontal direction
    /// and exactly one groove-capable (small max x-size) tool.
    pub fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        for dir in ["left", "right"] {
            if !self
                .cutting_tools
                .iter()
                .any(|t| t.direction.as_str() == dir)
            {
                out.push(format!("no cutting tool for direction {}", dir));
            }
        }
        let grooves = self
            .cutting_tools
            .iter()
            .filter(|t| t.x_size.1 <= 30)
            .count();
        if grooves != 1 {
            out.push(format!(
                "{} groove-capable tools, expected exactly 1",
                grooves
            ));
        }
        out
    }
}

/// The example workpiece: a 4x5 grid with a tall left collar, a narrow
/// groove beside it, a long shaft, and a thin right stub. Lengths are the
/// printed millimetre measures scaled by ten.
pub fn figure9_workpiece() -> WorkpieceSpec {
    let xpos = vec![(0, 180), (180, 20), (200, 1650), (1850, 400)];
    let ypos = vec![(0, 80), (80, 60), (140, 60), (200, 60), (260, 80)];
    // Goal material height per column; the mold fills all five rows.
    let goal_height = [4usize, 2, 4, 1];
    let status = goal_height
        .iter()
        .map(|&h| {
            (1..=ypos.len())
                .map(|y| {
                    if y <= h {
                        CellStatus::Workpiece
                    } else {
                        CellStatus::Raw
                    }
                })
                .collect()
        })
        .collect();
    WorkpieceSpec { xpos, ypos, status }
}

fn plan_of(domain: &Domain, steps: &[(&str, Vec<Term>)]) -> Vec<InstantiatedOperator> {
    steps
        .iter()
        .map(|(name, args)| {
            let schema = domain
                .operator(Sym::new(name))
                .unwrap_or_else(|| panic!("no operator {}", name));
            instantiate(schema, args).expect("fixture plan instantiation failed")
        })
        .collect()
}

/// The example case: the figure-9 workpiece with its 16-step plan. The
/// right stub is cut first while the workpiece is chucked at the left;
/// the finished right side then serves as the chucking surface while the
/// upper left and finally the groove are processed, and the part is
/// released at the end.
pub fn figure9_fixture() -> PlanningCase {
    let (concrete, _, _) = build_domains();
    let problem = figure9_workpiece().problem();
    let c = Term::constant;
    let i = Term::Int;
    let plan = plan_of(
        &concrete,
        &[
            ("chuck", vec![c("left"), i(1), i(2)]),
            (
                "use_tool",
                vec![c("right"), c("t_rough_r"), c("none"), c("none"), c("left")],
            ),
            (
                "cut",
                vec![i(4), i(5), c("left"), c("t_rough_r"), c("right")],
            ),
            (
                "cut",
                vec![i(4), i(4), c("left"), c("t_rough_r"), c("right")],
            ),
            (
                "cut",
                vec![i(4), i(3), c("left"), c("t_rough_r"), c("right")],
            ),
            (
                "cut",
                vec![i(4), i(2), c("left"), c("t_rough_r"), c("right")],
            ),
            (
                "cut",
                vec![i(3), i(5), c("left"), c("t_rough_r"), c("right")],
            ),
            ("unchuck", vec![c("left"), i(1), i(2)]),
            ("chuck", vec![c("right"), i(4), i(4)]),
            (
                "use_tool",
                vec![
                    c("left"),
                    c("t_rough_l"),
                    c("right"),
                    c("t_rough_r"),
                    c("right"),
                ],
            ),
            (
                "cut",
                vec![i(1), i(5), c("right"), c("t_rough_l"), c("left")],
            ),
            (
                "use_tool",
                vec![
                    c("center"),
                    c("t_groove"),
                    c("left"),
                    c("t_rough_l"),
                    c("right"),
                ],
            ),
            (
                "cut",
                vec![i(2), i(5), c("right"), c("t_groove"), c("center")],
            ),
            (
                "cut",
                vec![i(2), i(4), c("right"), c("t_groove"), c("center")],
            ),
            (
                "cut",
                vec![i(2), i(3), c("right"), c("t_groove"), c("center")],
            ),
            ("unchuck", vec![c("right"), i(4), i(4)]),
        ],
    );
    PlanningCase { problem, plan }
}

/// Parameters of the random case generator. Lengths are inclusive ranges.
#[derive(Clone, Debug)]
pub struct GenerationParams {
    /// Number of cases to emit.
    pub count: usize,
    pub seed: u64,
    /// Grid dimension ranges (columns, rows).
    pub xpos: (usize, usize),
    pub ypos: (usize, usize),
    /// Grooves per workpiece.
    pub grooves: (usize, usize),
    /// Accepted solution plan lengths.
    pub plan_len: (usize, usize),
    /// Accepted initial-state atom counts.
    pub atoms: (usize, usize),
    /// Candidate problems tried per emitted case before giving up.
    pub max_attempts: usize,
    /// Budget for solving one candidate.
    pub budget: SearchBudget,
}

impl Default for GenerationParams {
    fn default() -> GenerationParams {
        GenerationParams {
            count: 10,
            seed: 1,
            xpos: (11, 14),
            ypos: (8, 10),
            grooves: (0, 3),
            plan_len: (6, 18),
            atoms: (100, 300),
            max_attempts: 60,
            budget: search_budget(),
        }
    }
}

#[derive(Error, Debug)]
pub enum GenerateError {
    #[error("generation exhausted after {attempts} attempts ({emitted} of {wanted} cases)")]
    Exhausted {
        attempts: usize,
        emitted: usize,
        wanted: usize,
    },
    #[error(transparent)]
    Solve(SolveError),
}

fn range(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    rng.gen_range(lo..=hi)
}

/// One random candidate workpiece: a full cylindrical mold over a random
/// grid, carved down to a unimodal goal contour with lowered shoulders at
/// the ends and a few grooves. All right-area columns share one goal
/// height so the finished right side stays chuckable mid-plan.
fn random_workpiece(rng: &mut ChaCha8Rng, params: &GenerationParams) -> Option<WorkpieceSpec> {
    let xmax = range(rng, params.xpos);
    let ymax = range(rng, params.ypos);
    let spec_atoms = xmax * ymax + xmax + ymax + 5;
    if spec_atoms < params.atoms.0 || spec_atoms > params.atoms.1 {
        return None;
    }
    // Column widths: grooves are narrow (small), everything else large.
    let groove_count = range(rng, params.grooves).min(xmax.saturating_sub(4));
    let mut groove_cols: BTreeSet<usize> = BTreeSet::new();
    let mut guard = 0;
    while groove_cols.len() < groove_count && guard < 100 {
        guard += 1;
        let cand = rng.gen_range(2..=xmax - 2);
        if !groove_cols.contains(&(cand - 1)) && !groove_cols.contains(&(cand + 1)) {
            groove_cols.insert(cand);
        }
    }
    let widths: Vec<i64> = (1..=xmax)
        .map(|x| {
            if groove_cols.contains(&x) {
                rng.gen_range(10..=30)
            } else {
                rng.gen_range(40..=300)
            }
        })
        .collect();
    let total: i64 = widths.iter().sum();
    if total <= 500 {
        return None;
    }
    let mut xpos = Vec::new();
    let mut start = 0;
    for w in &widths {
        xpos.push((start, *w));
        start += w;
    }
    let ypos: Vec<(i64, i64)> = {
        let mut out = Vec::new();
        let mut start = 0;
        for _ in 0..ymax {
            let h = rng.gen_range(20..=80);
            out.push((start, h));
            start += h;
        }
        out
    };
    // Area membership mirrors the domain rules (chuck depth 200).
    let in_left = |x: usize| xpos[x - 1].0 < 200;
    let in_right = |x: usize| !in_left(x) && xpos[x - 1].0 + xpos[x - 1].1 > total - 200;
    if groove_cols.iter().any(|&x| in_right(x)) {
        return None;
    }
    // Goal heights: start at the full mold height, lower the outer
    // shoulders and carve the grooves until the cut count lands in range.
    let mut heights = vec![ymax as i64; xmax];
    let left_drop = rng.gen_range(0..=2i64);
    heights[0] = (ymax as i64 - left_drop).max(1);
    if xmax > 1 && left_drop > 1 {
        heights[1] = (ymax as i64 - (left_drop - 1)).max(1);
    }
    let right_drop = rng.gen_range(0..=2i64);
    for x in 1..=xmax {
        if in_right(x) {
            heights[x - 1] = (ymax as i64 - right_drop).max(1);
        }
    }
    for &x in &groove_cols {
        let neighbors = heights[x - 2].min(heights[x]);
        let depth = rng.gen_range(1..=2i64);
        heights[x - 1] = (neighbors - depth).max(1);
    }
    let cuts: i64 = heights.iter().map(|h| ymax as i64 - h).sum();
    if !(3..=6).contains(&cuts) {
        return None;
    }
    let status = heights
        .iter()
        .map(|&h| {
            (1..=ymax as i64)
                .map(|y| {
                    if y <= h {
                        CellStatus::Workpiece
                    } else {
                        CellStatus::Raw
                    }
                })
                .collect()
        })
        .collect();
    Some(WorkpieceSpec { xpos, ypos, status })
}

/// Drops every operator whose removal leaves a valid plan, greedily from
/// the left.
pub fn prune_redundant_steps(
    case: &PlanningCase,
    domain: &Domain,
    budget: ProofBudget,
) -> PlanningCase {
    let mut plan = case.plan.clone();
    let mut i = 0;
    while i < plan.len() {
        let mut shorter = plan.clone();
        shorter.remove(i);
        let candidate = PlanningCase {
            problem: case.problem.clone(),
            plan: shorter,
        };
        if execute_plan(&candidate, domain, budget).is_ok() {
            plan = candidate.plan;
        } else {
            i += 1;
        }
    }
    PlanningCase {
        problem: case.problem.clone(),
        plan,
    }
}

/// Mean number of applicable operator instances over a case's state
/// sequence: the empirical branching factor along the solution.
pub fn branching_factor(
    case: &PlanningCase,
    domain: &Domain,
    budget: ProofBudget,
) -> Result<f64, SolveError> {
    let states = execute_plan(case, domain, budget).map_err(SolveError::Domain)?;
    let mut total = 0usize;
    for state in &states {
        for schema in &domain.operators {
            total += applicable_instantiations(state, schema, &domain.rules, budget)
                .map_err(SolveError::Domain)?
                .len();
        }
    }
    Ok(total as f64 / states.len() as f64)
}

/// Seeded random case generation: random mold and carved goal, solved by
/// pure search, redundant steps pruned, candidates outside the plan-length
/// or atom-count ranges (or unsolved within budget) discarded.
pub fn generate_problems(params: &GenerationParams) -> Result<Vec<PlanningCase>, GenerateError> {
    let (concrete, _, _) = build_domains();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < params.count {
        if attempts >= params.max_attempts * params.count.max(1) {
            return Err(GenerateError::Exhausted {
                attempts,
                emitted: out.len(),
                wanted: params.count,
            });
        }
        attempts += 1;
        let Some(spec) = random_workpiece(&mut rng, params) else {
            continue;
        };
        debug_assert!(spec.check().is_empty());
        let problem = spec.problem();
        match solve_pure(&problem, &concrete, params.budget) {
            Ok(solution) => {
                let case = prune_redundant_steps(
                    &PlanningCase {
                        problem,
                        plan: solution.plan,
                    },
                    &concrete,
                    params.budget.proof,
                );
                if case.plan.len() >= params.plan_len.0 && case.plan.len() <= params.plan_len.1 {
                    out.push(case);
                }
            }
            Err(SolveError::Unsolved { .. }) | Err(SolveError::BudgetExceeded { .. }) => {}
            Err(e) => return Err(GenerateError::Solve(e)),
        }
    }
    Ok(out)
}
