//! Reproducible variance-ordering and selection-uniformity experiments.

use std::fmt::Write as _;
use std::path::PathBuf;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::mis::{
    analytic_variance, domain_integral, run_trials, select_indices, Domain, MisError, MisScheme, Proposal,
    ProposalSet, SchemeTag, SelectionStrategy, Target, Univariate,
};
use crate::rng::Stream;
use crate::stats::CompensatedSum;

/// Tolerance for analytic equalities and inequalities.
pub const ANALYTIC_TOL: f64 = 1e-8;
/// Combined standard errors allowed between empirical variances.
pub const ORDERING_SIGMAS: f64 = 3.0;
/// Standard errors allowed between empirical and analytic variances, and
/// between trial means and the true integral.
pub const AGREEMENT_SIGMAS: f64 = 4.0;
pub const MIN_TRIALS: usize = 1000;

pub const CSV_HEADER: &str = "scheme,analytic_var,empirical_var,empirical_mean,stderr,trials,seed";

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error(transparent)]
    Mis(#[from] MisError),
}

fn config_err(line: usize, msg: impl Into<String>) -> LabError {
    LabError::Config {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabConfig {
    pub target: Target,
    pub proposals: Vec<Proposal>,
    pub domain: Option<Domain>,
    pub schemes: Vec<SchemeTag>,
    pub trials: usize,
    pub samples: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl LabConfig {
    /// Three unit-variance normal proposals at 0, 2, 4 and a Normal(1, 0.5)
    /// target.
    pub fn canonical() -> Self {
        Self {
            target: Target::single(Proposal::Line(Univariate::Normal {
                mean: 1.0,
                std: 0.5,
            })),
            proposals: [0.0, 2.0, 4.0]
                .iter()
                .map(|&mean| Proposal::Line(Univariate::Normal { mean, std: 1.0 }))
                .collect(),
            domain: None,
            schemes: SchemeTag::ALL.to_vec(),
            trials: 100_000,
            samples: 3,
            seed: 1,
            output: None,
        }
    }

    pub fn proposal_set(&self) -> Result<ProposalSet, MisError> {
        match self.domain {
            Some(d) => ProposalSet::new(self.proposals.clone(), d),
            None => ProposalSet::covering(self.proposals.clone()),
        }
    }

    /// Parses the line-oriented config grammar:
    ///
    /// ```text
    /// # comment
    /// target WEIGHT FAMILY A B [FAMILY A B]
    /// proposal FAMILY A B [FAMILY A B]
    /// domain LO HI [LO HI]
    /// schemes R1 R2 R3 N1 N2 N3
    /// trials T
    /// samples M
    /// seed S
    /// output PATH
    /// ```
    ///
    /// `FAMILY` is `normal MEAN STD` or `uniform LO HI`; two families make an
    /// axis-aligned product on the plane.
    pub fn parse(text: &str) -> Result<Self, LabError> {
        let mut target = Vec::new();
        let mut proposals = Vec::new();
        let mut domain = None;
        let mut schemes = None;
        let mut trials = None;
        let mut samples = None;
        let mut seed = 0u64;
        let mut output = None;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let toks: Vec<&str> = content.split_whitespace().collect();
            let args = &toks[1..];
            match toks[0] {
                "target" => {
                    let (&w, rest) = args
                        .split_first()
                        .ok_or_else(|| config_err(line, "target needs a weight"))?;
                    let w = num(w, line)?;
                    target.push((w, parse_proposal(rest, line)?));
                }
                "proposal" => proposals.push(parse_proposal(args, line)?),
                "domain" => {
                    let v = nums(args, line)?;
                    domain = Some(match v.as_slice() {
                        [lo, hi] => Domain::Interval { lo: *lo, hi: *hi },
                        [x0, x1, y0, y1] => Domain::Rect {
                            x: (*x0, *x1),
                            y: (*y0, *y1),
                        },
                        _ => return Err(config_err(line, "domain takes 2 or 4 numbers")),
                    });
                }
                "schemes" => {
                    let tags = args
                        .iter()
                        .map(|s| s.parse::<SchemeTag>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| config_err(line, e.to_string()))?;
                    schemes = Some(tags);
                }
                "trials" => trials = Some(count(args, line)?),
                "samples" => samples = Some(count(args, line)?),
                "seed" => seed = count(args, line)? as u64,
                "output" => {
                    let [p] = args else {
                        return Err(config_err(line, "output takes one path"));
                    };
                    output = Some(PathBuf::from(p));
                }
                other => return Err(config_err(line, format!("unknown directive '{other}'"))),
            }
        }

        if target.is_empty() {
            return Err(config_err(0, "missing 'target'"));
        }
        if proposals.is_empty() {
            return Err(config_err(0, "missing 'proposal'"));
        }
        let n = proposals.len();
        let trials = trials.unwrap_or(100_000);
        let samples = samples.unwrap_or(n);
        if trials < MIN_TRIALS {
            return Err(config_err(0, format!("trials must be >= {MIN_TRIALS}")));
        }
        if samples == 0 || samples % n != 0 {
            return Err(config_err(
                0,
                format!("samples ({samples}) must be a positive multiple of N = {n}"),
            ));
        }
        Ok(Self {
            target: Target::new(target),
            proposals,
            domain,
            schemes: schemes.unwrap_or_else(|| SchemeTag::ALL.to_vec()),
            trials,
            samples,
            seed,
            output,
        })
    }

    /// Inverse of [`LabConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (w, p) in self.target.components() {
            let _ = writeln!(s, "target {w} {}", proposal_text(p));
        }
        for p in &self.proposals {
            let _ = writeln!(s, "proposal {}", proposal_text(p));
        }
        match self.domain {
            Some(Domain::Interval { lo, hi }) => {
                let _ = writeln!(s, "domain {lo} {hi}");
            }
            Some(Domain::Rect { x, y }) => {
                let _ = writeln!(s, "domain {} {} {} {}", x.0, x.1, y.0, y.1);
            }
            None => {}
        }
        let tags: Vec<&str> = self.schemes.iter().map(|t| t.as_str()).collect();
        let _ = writeln!(s, "schemes {}", tags.join(" "));
        let _ = writeln!(s, "trials {}", self.trials);
        let _ = writeln!(s, "samples {}", self.samples);
        let _ = writeln!(s, "seed {}", self.seed);
        if let Some(p) = &self.output {
            let _ = writeln!(s, "output {}", p.display());
        }
        s
    }
}

fn num(s: &str, line: usize) -> Result<f64, LabError> {
    s.parse::<f64>()
        .map_err(|_| config_err(line, format!("expected a number, got '{s}'")))
}

fn nums(args: &[&str], line: usize) -> Result<Vec<f64>, LabError> {
    args.iter().map(|s| num(s, line)).collect()
}

fn count(args: &[&str], line: usize) -> Result<usize, LabError> {
    match args {
        [s] => s
            .parse::<usize>()
            .map_err(|_| config_err(line, format!("expected a count, got '{s}'"))),
        _ => Err(config_err(line, "expected exactly one value")),
    }
}

fn parse_univariate(args: &[&str], line: usize) -> Result<Univariate, LabError> {
    let [family, a, b] = args else {
        return Err(config_err(line, "family needs NAME A B"));
    };
    let (a, b) = (num(a, line)?, num(b, line)?);
    match *family {
        "normal" => Univariate::normal(a, b),
        "uniform" => Univariate::uniform(a, b),
        other => return Err(config_err(line, format!("unknown family '{other}'"))),
    }
    .map_err(|e| config_err(line, e.to_string()))
}

fn parse_proposal(args: &[&str], line: usize) -> Result<Proposal, LabError> {
    match args.len() {
        3 => Ok(Proposal::Line(parse_univariate(args, line)?)),
        6 => Ok(Proposal::Plane(
            parse_univariate(&args[..3], line)?,
            parse_univariate(&args[3..], line)?,
        )),
        _ => Err(config_err(line, "expected FAMILY A B [FAMILY A B]")),
    }
}

fn univariate_text(u: &Univariate) -> String {
    match *u {
        Univariate::Normal { mean, std } => format!("normal {mean} {std}"),
        Univariate::Uniform { lo, hi } => format!("uniform {lo} {hi}"),
    }
}

fn proposal_text(p: &Proposal) -> String {
    match p {
        Proposal::Line(u) => univariate_text(u),
        Proposal::Plane(u, v) => format!("{} {}", univariate_text(u), univariate_text(v)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabRow {
    pub scheme: SchemeTag,
    /// Exact variance of one `M`-sample estimate.
    pub analytic_var: f64,
    pub empirical_var: f64,
    pub empirical_mean: f64,
    /// Standard error of `empirical_mean`.
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
    /// Standard error of `empirical_var`, from the fourth central moment
    /// of the trial estimates.
    pub variance_stderr: f64,
}

impl LabRow {
    pub fn variance_stderr(&self) -> f64 {
        self.variance_stderr
    }

    /// `|empirical - analytic|` in units of [`LabRow::variance_stderr`].
    pub fn variance_gap_sigmas(&self) -> f64 {
        let se = self.variance_stderr();
        let gap = (self.empirical_var - self.analytic_var).abs();
        if se == 0.0 {
            if gap <= ANALYTIC_TOL * self.analytic_var.abs().max(1.0) {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            gap / se
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Equal,
    AtLeast,
}

/// One checked relation `left (= | >=) right`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationCheck {
    pub left: SchemeTag,
    pub right: SchemeTag,
    pub relation: Relation,
    /// `left - right` for the analytic variances.
    pub analytic_margin: f64,
    pub analytic_pass: bool,
    /// `(left - right)` for empirical variances in combined standard errors.
    pub empirical_margin_sigmas: f64,
    pub empirical_pass: bool,
}

impl RelationCheck {
    pub fn pass(&self) -> bool {
        self.analytic_pass && self.empirical_pass
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: &'static str,
    pub checks: Vec<RelationCheck>,
}

impl Verdict {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(RelationCheck::pass)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabReport {
    pub rows: Vec<LabRow>,
    /// `integral f` over the domain (quadrature).
    pub integral: f64,
    /// Var(R1) = Var(N1) >= Var(R3) >= Var(N3).
    pub ordering_a: Verdict,
    /// Var(R1) = Var(N1) >= Var(R2) = Var(N2) >= Var(N3).
    pub ordering_b: Verdict,
}

impl LabReport {
    pub fn row(&self, tag: SchemeTag) -> Option<&LabRow> {
        self.rows.iter().find(|r| r.scheme == tag)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e},{},{}",
                r.scheme,
                r.analytic_var,
                r.empirical_var,
                r.empirical_mean,
                r.stderr,
                r.trials,
                r.seed
            );
        }
        s
    }

    /// Rows whose trial mean is within [`AGREEMENT_SIGMAS`] of the integral.
    pub fn unbiased(&self, row: &LabRow) -> bool {
        (row.empirical_mean - self.integral).abs() <= AGREEMENT_SIGMAS * row.stderr
            || (row.stderr == 0.0
                && (row.empirical_mean - self.integral).abs()
                    <= ANALYTIC_TOL * self.integral.abs().max(1.0))
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{}: analytic {:.6e} empirical {:.6e} (gap {:.2} se) mean {:.6} +- {:.2e} {}",
                r.scheme,
                r.analytic_var,
                r.empirical_var,
                r.variance_gap_sigmas(),
                r.empirical_mean,
                r.stderr,
                if self.unbiased(r) { "" } else { "BIASED" }
            );
        }
        for v in [&self.ordering_a, &self.ordering_b] {
            let _ = writeln!(s, "{}: {}", v.name, if v.pass() { "PASS" } else { "FAIL" });
            for c in &v.checks {
                let op = match c.relation {
                    Relation::Equal => "=",
                    Relation::AtLeast => ">=",
                };
                let _ = writeln!(
                    s,
                    "  Var({}) {op} Var({}): analytic margin {:+.3e} [{}], empirical {:+.2} se [{}]",
                    c.left,
                    c.right,
                    c.analytic_margin,
                    pass_str(c.analytic_pass),
                    c.empirical_margin_sigmas,
                    pass_str(c.empirical_pass)
                );
            }
        }
        s
    }
}

fn pass_str(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}

fn check(rows: &[LabRow], left: SchemeTag, right: SchemeTag, rel: Relation) -> Option<RelationCheck> {
    let a = rows.iter().find(|r| r.scheme == left)?;
    let b = rows.iter().find(|r| r.scheme == right)?;
    let scale = a.analytic_var.abs().max(b.analytic_var.abs()).max(1.0);
    let tol = ANALYTIC_TOL * scale;
    let analytic_margin = a.analytic_var - b.analytic_var;
    let se = (a.variance_stderr().powi(2) + b.variance_stderr().powi(2)).sqrt();
    let emp = a.empirical_var - b.empirical_var;
    let sigmas = if se > 0.0 {
        emp / se
    } else if emp.abs() <= tol {
        0.0
    } else {
        emp.signum() * f64::INFINITY
    };
    let (analytic_pass, empirical_pass) = match rel {
        Relation::Equal => (analytic_margin.abs() <= tol, sigmas.abs() <= ORDERING_SIGMAS),
        Relation::AtLeast => (analytic_margin >= -tol, sigmas >= -ORDERING_SIGMAS),
    };
    Some(RelationCheck {
        left,
        right,
        relation: rel,
        analytic_margin,
        analytic_pass,
        empirical_margin_sigmas: sigmas,
        empirical_pass,
    })
}

/// `sqrt((m4 - s^4 (T - 3) / (T - 1)) / T)`, the large-sample standard
/// error of the unbiased sample variance `s^2`.
pub fn variance_stderr(xs: &[f64], s2: f64) -> f64 {
    let t = xs.len() as f64;
    if t < 4.0 {
        return f64::INFINITY;
    }
    let mean = xs.iter().copied().collect::<CompensatedSum>().value() / t;
    let m4 = xs
        .iter()
        .map(|x| (x - mean).powi(4))
        .collect::<CompensatedSum>()
        .value()
        / t;
    ((m4 - s2 * s2 * (t - 3.0) / (t - 1.0)) / t).max(0.0).sqrt()
}

/// Evaluates both ordering chains over whatever schemes `rows` contains.
pub fn ordering_verdicts(rows: &[LabRow]) -> (Verdict, Verdict) {
    use Relation::*;
    use SchemeTag::*;
    let a = [(R1, N1, Equal), (N1, R3, AtLeast), (R3, N3, AtLeast)];
    let b = [
        (R1, N1, Equal),
        (N1, R2, AtLeast),
        (R2, N2, Equal),
        (N2, N3, AtLeast),
    ];
    let build = |name, chain: &[(SchemeTag, SchemeTag, Relation)]| Verdict {
        name,
        checks: chain
            .iter()
            .filter_map(|&(l, r, rel)| check(rows, l, r, rel))
            .collect(),
    };
    (
        build("R1 = N1 >= R3 >= N3", &a),
        build("R1 = N1 >= R2 = N2 >= N3", &b),
    )
}

/// Runs `T` independent `M`-sample estimates per scheme and compares their
/// spread with the analytic variances.
pub fn run_ordering_experiment(config: &LabConfig) -> Result<LabReport, LabError> {
    let proposals = config.proposal_set()?;
    let n = proposals.len();
    if config.samples == 0 || config.samples % n != 0 {
        return Err(config_err(
            0,
            format!("samples ({}) must be a multiple of N = {n}", config.samples),
        ));
    }
    if config.trials < MIN_TRIALS {
        return Err(config_err(0, format!("trials must be >= {MIN_TRIALS}")));
    }
    let cycles = (config.samples / n) as f64;
    let integral = domain_integral(&config.target, &proposals)?;
    let root = Stream::new(config.seed);
    let mut rows = Vec::with_capacity(config.schemes.len());
    for &tag in &config.schemes {
        let analytic = analytic_variance(tag, &config.target, &proposals)? / cycles;
        let stream = root.split(tag as u64);
        let (rep, estimates) = run_trials(
            &MisScheme::canonical(tag),
            &config.target,
            &proposals,
            config.samples,
            config.trials,
            &stream,
        )?;
        rows.push(LabRow {
            scheme: tag,
            analytic_var: analytic,
            empirical_var: rep.sample_variance,
            empirical_mean: rep.sample_mean,
            stderr: rep.standard_error,
            trials: rep.trials,
            seed: config.seed,
            variance_stderr: variance_stderr(&estimates, rep.sample_variance),
        });
    }
    let (ordering_a, ordering_b) = ordering_verdicts(&rows);
    Ok(LabReport {
        rows,
        integral,
        ordering_a,
        ordering_b,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformityTable {
    pub strategy: SelectionStrategy,
    pub n: usize,
    pub cycles: usize,
    /// Overall selection frequency of each index.
    pub frequencies: Vec<f64>,
    /// `slot_frequencies[slot][index]`.
    pub slot_frequencies: Vec<Vec<f64>>,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

impl UniformityTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,frequency");
        for slot in 0..self.n {
            let _ = write!(s, ",slot{slot}");
        }
        s.push('\n');
        for k in 0..self.n {
            let _ = write!(s, "{k},{:.8}", self.frequencies[k]);
            for slot in 0..self.n {
                let _ = write!(s, ",{:.8}", self.slot_frequencies[slot][k]);
            }
            s.push('\n');
        }
        s
    }
}

/// Counts index selections over `cycles` cycles of `n` draws.
///
/// The chi-square statistic tests the overall index counts for S1
/// (`n - 1` degrees of freedom) and the slot-by-index table for S2
/// (`(n - 1)^2`, both margins fixed). S3 is deterministic and reports
/// zero.
pub fn run_uniformity_test(
    strategy: SelectionStrategy,
    n: usize,
    cycles: usize,
    seed: u64,
) -> Result<UniformityTable, LabError> {
    if cycles < MIN_TRIALS {
        return Err(config_err(0, format!("cycles must be >= {MIN_TRIALS}")));
    }
    if n == 0 {
        return Err(config_err(0, "N must be >= 1"));
    }
    let mut rng = Stream::new(seed);
    let mut slot_counts = vec![vec![0u64; n]; n];
    let mut counts = vec![0u64; n];
    for _ in 0..cycles {
        let idx = select_indices(strategy, n, n, &mut rng)?;
        for (slot, &k) in idx.iter().enumerate() {
            slot_counts[slot][k] += 1;
            counts[k] += 1;
        }
    }
    let total = (cycles * n) as f64;
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let slot_frequencies: Vec<Vec<f64>> = slot_counts
        .iter()
        .map(|row| row.iter().map(|&c| c as f64 / cycles as f64).collect())
        .collect();

    let pearson = |obs: &mut dyn Iterator<Item = u64>, expected: f64| -> f64 {
        obs.map(|o| (o as f64 - expected).powi(2) / expected).sum()
    };
    let (chi_square, dof) = match strategy {
        SelectionStrategy::S1 => (
            pearson(&mut counts.iter().copied(), total / n as f64),
            n.saturating_sub(1),
        ),
        SelectionStrategy::S2 => (
            pearson(
                &mut slot_counts.iter().flatten().copied(),
                cycles as f64 / n as f64,
            ),
            (n.saturating_sub(1)).pow(2),
        ),
        SelectionStrategy::S3 => (0.0, 0),
    };
    let p_value = if dof == 0 {
        if chi_square == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(chi_square)
    };
    Ok(UniformityTable {
        strategy,
        n,
        cycles,
        frequencies,
        slot_frequencies,
        chi_square,
        degrees_of_freedom: dof,
        p_value,
    })
}
