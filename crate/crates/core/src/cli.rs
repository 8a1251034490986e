//! Command-line front end. Exit codes: 0 success, 1 numerical error,
//! 2 validation failure.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    check_main_theorem, gpi_distance, transfer_growth_scan, GpiMeasureSet, ScanConfig,
    TheoremConfig, Verdict,
};
use crate::builtin::{
    free_reducing_sparse_tree, two_generation_tree, ThreeEdgeParams, TWO_GENERATION_CUTOFF,
    TWO_GENERATION_WINDOW,
};
use crate::coupling::{a_to_b, a_to_unitary, b_to_a, jump_matrix, GpiCouplingA, GpiCouplingB};
use crate::error::{Error, Result};
use crate::linalg::{Num, C64};
use crate::reduction::{decompose, HalflineCoupling, HalflineProblem, RootCondition, Truncation};
use crate::spectral::{
    match_multisets, mfunction_plus, tree_truncated_eigenvalues, truncated_eigenvalues,
    weighted_union, MValue, SpectralParameter, DEFAULT_ETA,
};
use crate::tree::{
    check_self_adjoint, eigenphases, validate_tree, vertex_matrices, RadialTreeSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qgs",
    version,
    about = "Spectral tools for radial quantum trees with generalized point interactions"
)]
pub struct Cli {
    /// Write the result here instead of stdout.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a point-interaction coupling between parametrizations.
    Convert(ConvertArgs),
    /// Check a tree spec and the self-adjointness of its vertex couplings.
    Validate(TreeArg),
    /// Decompose a tree into halfline problems (JSON).
    Reduce(ReduceArgs),
    /// m-function of a halfline problem on a κ or energy grid (CSV).
    Mfun(MfunArgs),
    /// Eigenvalues of the decomposed problems cut off at a finite distance (CSV).
    Eig(EigArgs),
    /// Transfer-matrix growth and reflectionless defect on an energy grid (CSV).
    Scan(ScanArgs),
    /// Distance between two sequences of point interactions.
    Distance(DistanceArgs),
    /// Evaluate the hypotheses of the empty-ac-spectrum criterion (JSON).
    CheckTheorem(TheoremArgs),
    /// Run the built-in examples and their consistency checks.
    ReproduceExample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConvertTarget {
    A,
    B,
    Unitary,
    Jump,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Complex value as `re` or `re,im`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub gamma: Option<C64>,
    /// B-form input for `--to a`.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<f64>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub c: Option<C64>,
    #[arg(long, value_enum)]
    pub to: ConvertTarget,
}

#[derive(Debug, Args)]
pub struct TreeArg {
    #[arg(long)]
    pub tree: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(long)]
    pub tree: PathBuf,
    /// Defaults to all generations of the spec.
    #[arg(long)]
    pub max_generation: Option<usize>,
    #[arg(long, value_enum, default_value = "free")]
    pub truncation: TruncationArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TruncationArg {
    Free,
    Dirichlet,
}

/// A halfline problem given directly, or picked from a tree decomposition.
#[derive(Debug, Args)]
pub struct ProblemInput {
    /// Halfline problem JSON (as emitted by `reduce`, single object).
    #[arg(long, conflicts_with = "tree")]
    pub halfline: Option<PathBuf>,
    #[arg(long)]
    pub tree: Option<PathBuf>,
    #[arg(long)]
    pub max_generation: Option<usize>,
    /// Position of the problem in the decomposition; all problems if omitted.
    #[arg(long)]
    pub problem: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MfunArgs {
    #[command(flatten)]
    pub input: ProblemInput,
    /// `start:end:count` for z = −κ².
    #[arg(long, value_parser = parse_range, conflicts_with = "energy_range")]
    pub kappa_range: Option<Range>,
    /// `start:end:count` for z = E + iη.
    #[arg(long, value_parser = parse_range)]
    pub energy_range: Option<Range>,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    pub eta: f64,
}

#[derive(Debug, Args)]
pub struct EigArgs {
    #[command(flatten)]
    pub input: ProblemInput,
    #[arg(long)]
    pub cutoff: f64,
    /// `dirichlet`, `neumann` or a Robin angle θ.
    #[arg(long, default_value = "dirichlet", value_parser = parse_bc)]
    pub cutoff_bc: RootCondition,
    /// `lo:hi`.
    #[arg(long, value_parser = parse_window)]
    pub window: (f64, f64),
    #[arg(long, default_value_t = 20000)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub input: ProblemInput,
    /// `start:end:count`, energies must be positive.
    #[arg(long, value_parser = parse_range)]
    pub energy_range: Range,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    pub eta: f64,
    #[arg(long, default_value_t = 10.0)]
    pub growth_bound: f64,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[arg(long)]
    pub h1: PathBuf,
    #[arg(long)]
    pub h2: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub terms: usize,
}

#[derive(Debug, Args)]
pub struct TheoremArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long = "K", default_value_t = 100.0)]
    pub k: f64,
    #[arg(long = "N", default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub delta: f64,
    #[arg(long, default_value_t = 10.0)]
    pub gap_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Range {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let h = (self.end - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start + h * i as f64).collect()
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"))
}

pub fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    match s.split_once(',') {
        Some((re, im)) => Ok(C64::new(parse_f64(re)?, parse_f64(im)?)),
        None => Ok(C64::new(parse_f64(s)?, 0.0)),
    }
}

pub fn parse_range(s: &str) -> std::result::Result<Range, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected start:end:count".into());
    }
    let count: usize = parts[2].trim().parse().map_err(|e| format!("count: {e}"))?;
    if count == 0 {
        return Err("count must be positive".into());
    }
    Ok(Range {
        start: parse_f64(parts[0])?,
        end: parse_f64(parts[1])?,
        count,
    })
}

pub fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let (a, b) = (parse_f64(a)?, parse_f64(b)?);
    if !(a < b) {
        return Err("window needs lo < hi".into());
    }
    Ok((a, b))
}

pub fn parse_bc(s: &str) -> std::result::Result<RootCondition, String> {
    match s {
        "dirichlet" => Ok(RootCondition::dirichlet()),
        "neumann" => Ok(RootCondition::neumann()),
        other => parse_f64(other).map(RootCondition::robin),
    }
}

/// Complex number as `re` when real, else `re+imi` / `re-imi`.
pub fn fmt_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", Num(z.re))
    } else if z.im < 0.0 {
        format!("{}-{}i", Num(z.re), Num(-z.im))
    } else {
        format!("{}+{}i", Num(z.re), Num(z.im))
    }
}

/// Point interaction at a position, the element of `distance` input files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingPoint {
    pub t: f64,
    #[serde(flatten)]
    pub coupling: GpiCouplingA,
}

/// Outcome of a command: text to emit and the exit code.
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self {
            text,
            code: EXIT_OK,
        }
    }
}

fn read_tree(path: &PathBuf) -> Result<RadialTreeSpec> {
    RadialTreeSpec::from_json(&std::fs::read_to_string(path)?)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn problems(input: &ProblemInput) -> Result<Vec<HalflineProblem>> {
    if let Some(path) = &input.halfline {
        let p: HalflineProblem = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        p.check()?;
        return Ok(vec![p]);
    }
    let path = input
        .tree
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("one of --halfline or --tree is required".into()))?;
    let spec = read_tree(path)?;
    let report = validate_tree(&spec);
    if !report.is_valid() {
        return Err(Error::InvalidInput(format!("invalid tree spec:\n{report}")));
    }
    let n = input.max_generation.unwrap_or(spec.generations.len());
    let all = decompose(&spec, n, Truncation::Free)?;
    match input.problem {
        Some(i) => all
            .get(i)
            .cloned()
            .map(|p| vec![p])
            .ok_or(Error::OutOfRange {
                index: i,
                max: all.len().saturating_sub(1),
            }),
        None => Ok(all),
    }
}

fn convert(a: &ConvertArgs) -> Result<String> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::InvalidInput(format!("--{name} is required")))
    };
    if a.to == ConvertTarget::A {
        let b = GpiCouplingB::new(
            need(a.a, "a")?,
            need(a.d, "d")?,
            a.c.ok_or_else(|| Error::InvalidInput("--c is required".into()))?,
        );
        let g = b_to_a(&b)?;
        return Ok(format!(
            "alpha={} beta={} gamma={}\n",
            Num(g.alpha),
            Num(g.beta),
            fmt_complex(g.gamma)
        ));
    }
    let g = GpiCouplingA::new(
        need(a.alpha, "alpha")?,
        need(a.beta, "beta")?,
        a.gamma.unwrap_or_default(),
    );
    Ok(match a.to {
        ConvertTarget::B => {
            let b = a_to_b(&g)?;
            format!("a={} d={} c={}\n", Num(b.a), Num(b.d), fmt_complex(b.c))
        }
        ConvertTarget::Unitary => {
            let u = a_to_unitary(&g);
            let mut s = format!(
                "xi={} u1={} u2={} residual={:e}\n",
                Num(u.unitary.xi),
                fmt_complex(u.unitary.u1),
                fmt_complex(u.unitary.u2),
                u.residual
            );
            for w in &u.warnings {
                let _ = writeln!(s, "warning: {w}");
            }
            s
        }
        ConvertTarget::Jump => {
            let j = jump_matrix(&g)?;
            format!(
                "phase={}\n{} {}\n{} {}\n",
                fmt_complex(j.phase),
                Num(j.real[0][0]),
                Num(j.real[0][1]),
                Num(j.real[1][0]),
                Num(j.real[1][1])
            )
        }
        ConvertTarget::A => unreachable!(),
    })
}

fn validate(path: &PathBuf) -> Result<Outcome> {
    let spec = read_tree(path)?;
    let report = validate_tree(&spec);
    let mut text = report.to_string();
    let mut ok = report.is_valid();
    if ok {
        for (i, g) in spec.generations.iter().enumerate() {
            let cert = check_self_adjoint(&vertex_matrices(&g.coupling, g.b)?);
            let _ = writeln!(
                text,
                "generation {}: hermiticity_residual={} sigma_min={} {}",
                i + 1,
                Num(cert.hermiticity_residual),
                Num(cert.sigma_min),
                if cert.passed { "ok" } else { "FAILED" }
            );
            ok &= cert.passed;
        }
    }
    Ok(Outcome {
        text,
        code: if ok { EXIT_OK } else { EXIT_VALIDATION },
    })
}

fn mfun(a: &MfunArgs) -> Result<String> {
    let probs = problems(&a.input)?;
    let (header, params): (&str, Vec<(f64, SpectralParameter)>) =
        match (&a.kappa_range, &a.energy_range) {
            (Some(r), _) => (
                "kappa",
                r.points()
                    .into_iter()
                    .map(|k| (k, SpectralParameter::from_kappa(k)))
                    .collect(),
            ),
            (None, Some(r)) => (
                "E",
                r.points()
                    .into_iter()
                    .map(|e| (e, SpectralParameter::from_energy(e, a.eta)))
                    .collect(),
            ),
            (None, None) => {
                return Err(Error::InvalidInput(
                    "one of --kappa-range or --energy-range is required".into(),
                ))
            }
        };
    let mut s = format!("problem,{header},re_m,im_m\n");
    for (i, p) in probs.iter().enumerate() {
        for (x, sp) in &params {
            let (re, im) = match mfunction_plus(p, sp, p.start)? {
                MValue::Finite(m) => (Num(m.re).to_string(), Num(m.im).to_string()),
                MValue::PointAtInfinity => ("inf".into(), "inf".into()),
            };
            let _ = writeln!(s, "{i},{},{re},{im}", Num(*x));
        }
    }
    Ok(s)
}

fn eig(a: &EigArgs) -> Result<String> {
    let probs = problems(&a.input)?;
    let mut s = String::from("generation,index,multiplicity,E\n");
    for p in &probs {
        let r = truncated_eigenvalues(p, a.cutoff, a.cutoff_bc, a.window, a.grid)?;
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
        for e in r.eigenvalues {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                p.generation,
                p.index,
                p.multiplicity,
                Num(e)
            );
        }
    }
    Ok(s)
}

fn scan(a: &ScanArgs) -> Result<String> {
    let probs = problems(&a.input)?;
    let cfg = ScanConfig {
        eta: a.eta,
        growth_bound: a.growth_bound,
    };
    let grid = a.energy_range.points();
    let mut s = String::new();
    for (i, p) in probs.iter().enumerate() {
        let csv = transfer_growth_scan(p, &grid, cfg)?.to_csv();
        if probs.len() == 1 {
            s.push_str(&csv);
        } else {
            let mut lines = csv.lines();
            if i == 0 {
                let _ = writeln!(s, "problem,{}", lines.next().unwrap_or_default());
            } else {
                lines.next();
            }
            for l in lines {
                let _ = writeln!(s, "{i},{l}");
            }
        }
    }
    Ok(s)
}

fn distance(a: &DistanceArgs) -> Result<String> {
    let load = |p: &PathBuf| -> Result<GpiMeasureSet> {
        let pts: Vec<CouplingPoint> = serde_json::from_str(&std::fs::read_to_string(p)?)?;
        let pairs: Vec<(f64, GpiCouplingA)> = pts.iter().map(|q| (q.t, q.coupling)).collect();
        GpiMeasureSet::from_couplings(&pairs)
    };
    let d = gpi_distance(&load(&a.h1)?, &load(&a.h2)?, a.terms)?;
    Ok(format!("{}\n", Num(d)))
}

fn theorem(a: &TheoremArgs) -> Result<String> {
    let spec = read_tree(&a.tree)?;
    let cfg = TheoremConfig {
        k: a.k,
        n: a.n,
        delta: a.delta,
        gap_ratio: a.gap_ratio,
    };
    to_json(&check_main_theorem(&spec, cfg)?)
}

/// Results of the built-in example checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproReport {
    pub root_phases: Vec<f64>,
    pub expected_phases: Vec<f64>,
    pub phase_error: f64,
    pub phase_error_r0: f64,
    pub check_a: bool,
    pub max_reduced_parameter: f64,
    pub max_growth_deviation: f64,
    pub all_free: bool,
    pub theorem_flags_example: bool,
    pub check_b: bool,
    pub halfline_count: usize,
    pub tree_count: usize,
    pub max_mismatch: f64,
    pub check_c: bool,
}

impl ReproReport {
    pub fn passed(&self) -> bool {
        self.check_a && self.check_b && self.check_c
    }

    pub fn render(&self) -> String {
        let verdict = |b: bool| if b { "PASS" } else { "FAIL" };
        let mut s = String::new();
        let _ = writeln!(
            s,
            "three-edge vertex, (theta1, theta2, phi, r) = (pi/3, pi/5, 0.2, 0.6)"
        );
        let _ = writeln!(s, "  root phases of L_11, L_12: {:?}", self.root_phases);
        let _ = writeln!(s, "  eigenphases of U:          {:?}", self.expected_phases);
        let _ = writeln!(
            s,
            "  max phase error {:e} (r = 0: {:e})",
            self.phase_error, self.phase_error_r0
        );
        let _ = writeln!(
            s,
            "check (a) decomposition phases: {}",
            verdict(self.check_a)
        );
        let _ = writeln!(
            s,
            "sparse tree t_n = 2^n, b = 4, gamma_t = 2/3, 10 generations"
        );
        let _ = writeln!(
            s,
            "  max |alpha_h|, |beta_h|, |gamma_h|: {:e}",
            self.max_reduced_parameter
        );
        let _ = writeln!(s, "  all reduced couplings free: {}", self.all_free);
        let _ = writeln!(
            s,
            "  growth scan on E in [0.5, 10]: max |norm - 1| = {:e}",
            self.max_growth_deviation
        );
        let _ = writeln!(
            s,
            "  empty-ac hypotheses: {}",
            if self.theorem_flags_example {
                "satisfied (unexpected)"
            } else {
                "not satisfied"
            }
        );
        let _ = writeln!(
            s,
            "  verdict: {}",
            if self.check_b {
                "AC candidate on [0,inf)"
            } else {
                "growth detected"
            }
        );
        let _ = writeln!(s, "check (b) free reduction: {}", verdict(self.check_b));
        let _ = writeln!(
            s,
            "two-generation tree (b = 3, 2; t = 1, 2.3; Dirichlet at 4), E in (0, 100)"
        );
        let _ = writeln!(
            s,
            "  eigenvalues: tree {}, halflines {} (with multiplicity), max mismatch {:e}",
            self.tree_count, self.halfline_count, self.max_mismatch
        );
        let _ = writeln!(
            s,
            "check (c) unitary equivalence: {}",
            verdict(self.check_c)
        );
        s
    }
}

fn phase_check(params: ThreeEdgeParams) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let spec = two_generation_tree(params);
    let probs = decompose(&spec, 1, Truncation::Free)?;
    let got: Vec<f64> = probs
        .iter()
        .filter(|p| p.generation == 1)
        .map(|p| p.root.theta)
        .collect();
    let mut expected = vec![params.theta1, params.theta2];
    expected.sort_by(f64::total_cmp);
    let direct = eigenphases(&params.unitary())?.thetas;
    let err = got
        .iter()
        .zip(&expected)
        .chain(got.iter().zip(&direct))
        .map(|(a, b)| (a - b).abs())
        .fold(if got.len() == 2 { 0.0 } else { f64::INFINITY }, f64::max);
    Ok((got, expected, err))
}

pub fn reproduce_example() -> Result<ReproReport> {
    let params = ThreeEdgeParams::default();
    let (root_phases, expected_phases, phase_error) = phase_check(params)?;
    let (_, _, phase_error_r0) = phase_check(ThreeEdgeParams { r: 0.0, ..params })?;
    let check_a = phase_error < 1e-10 && phase_error_r0 < 1e-10;

    let sparse = free_reducing_sparse_tree(4, 10);
    let probs = decompose(&sparse, 10, Truncation::Free)?;
    let mut max_reduced_parameter: f64 = 0.0;
    let mut all_gpi = true;
    for p in &probs {
        for pt in &p.points {
            match pt.coupling {
                HalflineCoupling::Gpi(g) => {
                    max_reduced_parameter = max_reduced_parameter
                        .max(g.alpha.abs())
                        .max(g.beta.abs())
                        .max(g.gamma.norm())
                }
                _ => all_gpi = false,
            }
        }
    }
    let all_free = all_gpi && max_reduced_parameter < 1e-12;
    let grid: Vec<f64> = (1..=20).map(|i| 0.5 * i as f64).collect();
    let mut max_growth_deviation: f64 = 0.0;
    for p in &probs {
        for row in transfer_growth_scan(p, &grid, ScanConfig::default())?.rows {
            for g in row.growth {
                max_growth_deviation = max_growth_deviation.max((g - 1.0).abs());
            }
        }
    }
    let theorem_flags_example = matches!(
        check_main_theorem(&sparse, TheoremConfig::default())?.verdict,
        Verdict::EmptyAcPredicted
    );
    let check_b = all_free && max_growth_deviation < 1e-12 && !theorem_flags_example;

    let tree = two_generation_tree(params);
    let dir = RootCondition::dirichlet();
    let mut pairs = Vec::new();
    for p in decompose(&tree, 2, Truncation::Free)? {
        let r =
            truncated_eigenvalues(&p, TWO_GENERATION_CUTOFF, dir, TWO_GENERATION_WINDOW, 20000)?;
        pairs.push((p, r));
    }
    let halfline = weighted_union(&pairs);
    let direct: Vec<f64> = tree_truncated_eigenvalues(
        &tree,
        2,
        TWO_GENERATION_CUTOFF,
        dir,
        TWO_GENERATION_WINDOW,
        20000,
    )?
    .into_iter()
    .flat_map(|e| std::iter::repeat_n(e.e, e.multiplicity))
    .collect();
    let (max_mismatch, unmatched) = match_multisets(&halfline, &direct, 1e-8);
    let check_c = unmatched == 0 && halfline.len() == direct.len() && max_mismatch < 1e-8;

    Ok(ReproReport {
        root_phases,
        expected_phases,
        phase_error,
        phase_error_r0,
        check_a,
        max_reduced_parameter,
        max_growth_deviation,
        all_free,
        theorem_flags_example,
        check_b,
        halfline_count: halfline.len(),
        tree_count: direct.len(),
        max_mismatch,
        check_c,
    })
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    Ok(match &cli.command {
        Command::Convert(a) => Outcome::ok(convert(a)?),
        Command::Validate(a) => validate(&a.tree)?,
        Command::Reduce(a) => {
            let spec = read_tree(&a.tree)?;
            let report = validate_tree(&spec);
            if !report.is_valid() {
                return Ok(Outcome {
                    text: report.to_string(),
                    code: EXIT_VALIDATION,
                });
            }
            let n = a.max_generation.unwrap_or(spec.generations.len());
            let t = match a.truncation {
                TruncationArg::Free => Truncation::Free,
                TruncationArg::Dirichlet => Truncation::Dirichlet,
            };
            Outcome::ok(to_json(&decompose(&spec, n, t)?)?)
        }
        Command::Mfun(a) => Outcome::ok(mfun(a)?),
        Command::Eig(a) => Outcome::ok(eig(a)?),
        Command::Scan(a) => Outcome::ok(scan(a)?),
        Command::Distance(a) => Outcome::ok(distance(a)?),
        Command::CheckTheorem(a) => Outcome::ok(theorem(a)?),
        Command::ReproduceExample => {
            let r = reproduce_example()?;
            Outcome {
                text: r.render(),
                code: if r.passed() { EXIT_OK } else { EXIT_NUMERIC },
            }
        }
    })
}

fn configure_threads() {
    if let Some(n) = std::env::var("QGS_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // only fails if a pool already exists, which is harmless here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

/// Runs a parsed command line, writes its output and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    configure_threads();
    let outcome = match dispatch(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Json(_)
                | Error::InvalidInput(_)
                | Error::InsufficientGenerations { .. }
                | Error::OutOfRange { .. } => EXIT_VALIDATION,
                _ => EXIT_NUMERIC,
            };
            return code;
        }
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &outcome.text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(outcome.text.as_bytes())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_NUMERIC;
    }
    outcome.code
}
