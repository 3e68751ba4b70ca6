//! Batch experiment front-end.
//!
//! Experiments are data: a single JSON config names the instance (generator
//! or file), the policies to build, the evaluation mode and any guarantee
//! assertions. Flags only choose paths, an optional seed override, the
//! output format and verbosity. Exit code 0 means every assertion held and
//! no audit finding fired; 1 means some did; errors exit with 2.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::dependence::dependence_dimension;
use crate::evaluation::{
    audit_dsic, audit_expost_ir, audit_monotone_allocation, audit_price_bound,
    best_three_price_pair, best_two_stage_pair, exact_expected_revenue, expected_osw,
    monte_carlo_revenue, AuditFinding, RatioReport, RevenueReport,
};
use crate::generators::{
    gen_correlated_pair, gen_expert_noise, gen_harmonic, gen_modular, gen_random, RandomParams,
};
use crate::io::{
    findings_to_csv, findings_to_json, instance_from_json, instance_to_json, policy_from_json,
    report_to_csv, report_to_json,
};
use crate::lp::{build_revenue_lp, revenue_upper_bound, solve_simplex};
use crate::mechanisms::{
    build_blind_k, build_blind_unlimited, build_bucketed_spp_klimited, build_bucketed_spp_unit,
    build_bucketed_spp_unlimited, build_enhanced, build_modular_full_surplus, default_q,
    make_dsic, monopoly_price, policy_to_table, Policy,
};
use crate::rational::{format_rational, parse_rational, to_decimal_sig, to_f64, Rational};
use crate::valuation::{support_stats, Instance, JointDistribution, RatioStats};
use crate::{Error, Result};

const KNOWN_GENERATORS: &[&str] =
    &["correlated_pair", "expert_noise", "harmonic", "modular", "random"];
const KNOWN_POLICIES: &[&str] = &[
    "blind_k",
    "blind_k_dsic",
    "blind_unlimited",
    "enhanced",
    "file",
    "k_limited",
    "modular_table",
    "per_buyer",
    "single_price",
];
const KNOWN_BASES: &[&str] = &["blind_k", "blind_k_dsic", "blind_unlimited"];
const KNOWN_MODES: &[&str] = &["exact", "mc"];
const KNOWN_BASES_OF: &[&str] = &["lp_bound", "one", "osw"];
const KNOWN_SWEEPS: &[&str] = &["harmonic", "pair_two", "pair_unit"];

const SIG: u32 = 12;

#[derive(Debug, Parser)]
#[command(
    name = "seqprice",
    about = "Posted-price and blind-offer mechanism laboratory",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration file (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for output files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the Monte Carlo seed and the random-generator seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Format of report and findings files.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    pub format: OutFormat,
    /// Print per-step progress.
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the configured instance to a canonical file and print its stats.
    Generate,
    /// Build the configured policies and report revenue against OSW and the
    /// allocation-rule bound; checks any declared assertions.
    Evaluate,
    /// Convert the configured policy to outcome-table form and run the four
    /// truthfulness audits.
    Audit,
    /// Sweep a benchmark family and tabulate (revenue, welfare, ratio) rows.
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Csv,
}

// ------------------------------------------------------------------- config

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseDto {
    buyer: usize,
    values: Vec<(String, String)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDtoSpec {
    generator: Option<String>,
    file: Option<String>,
    m: Option<u32>,
    n: Option<usize>,
    k: Option<usize>,
    eps: Option<String>,
    expert: Option<usize>,
    values: Option<Vec<(String, String)>>,
    noise: Option<Vec<NoiseDto>>,
    support_size: Option<usize>,
    value_grid: Option<Vec<String>>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDtoSpec {
    name: String,
    label: Option<String>,
    file: Option<String>,
    window: Option<(String, String)>,
    well_separated: Option<bool>,
    base: Option<String>,
    q: Option<String>,
    d_max: Option<usize>,
    n: Option<usize>,
    m: Option<u32>,
    eps: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalDtoSpec {
    mode: String,
    trials: Option<u64>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AssertionDtoSpec {
    policy: String,
    at_least: String,
    of: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportDtoSpec {
    sweep: String,
    m: Vec<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDto {
    instance: Option<InstanceDtoSpec>,
    policies: Option<Vec<PolicyDtoSpec>>,
    evaluation: Option<EvalDtoSpec>,
    assertions: Option<Vec<AssertionDtoSpec>>,
    dependence_d_max: Option<usize>,
    report: Option<ReportDtoSpec>,
    output: Option<String>,
}

#[derive(Debug, Clone)]
pub enum InstanceSpec {
    Harmonic { m: u32 },
    CorrelatedPair { m: u32, k: usize },
    Modular { n: usize, m: u32, eps: Rational },
    ExpertNoise {
        n: usize,
        expert: usize,
        values: Vec<(Rational, Rational)>,
        noise: Vec<(usize, Vec<(Rational, Rational)>)>,
    },
    Random { n: usize, support_size: usize, value_grid: Vec<Rational>, k: usize, seed: u64 },
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub enum PolicySpec {
    SinglePrice { window: Option<(Rational, Rational)> },
    PerBuyer,
    KLimited { well_separated: bool },
    BlindUnlimited,
    BlindK,
    BlindKDsic,
    Enhanced { base: String, q: Option<Rational>, d_max: Option<usize> },
    ModularTable { n: usize, m: u32, eps: Rational },
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub enum EvalMode {
    Exact,
    Mc { trials: u64, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct AssertionSpec {
    pub policy: String,
    pub at_least: Rational,
    pub of: Basis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    LpBound,
    Osw,
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Harmonic,
    PairUnit,
    PairTwo,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub instance: Option<InstanceSpec>,
    pub policies: Vec<(String, PolicySpec)>,
    pub evaluation: EvalMode,
    pub assertions: Vec<AssertionSpec>,
    pub dependence_d_max: Option<usize>,
    pub report: Option<(Sweep, Vec<u32>)>,
    pub output: String,
}

fn unknown(kind: &str, name: &str, known: &[&str]) -> Error {
    Error::Format(format!("unknown {kind} '{name}'; known {kind}s: {}", known.join(", ")))
}

fn require<T>(field: Option<T>, what: &str, ctx: &str) -> Result<T> {
    field.ok_or_else(|| Error::Format(format!("{ctx} requires '{what}'")))
}

fn parse_pairs(pairs: &[(String, String)]) -> Result<Vec<(Rational, Rational)>> {
    pairs
        .iter()
        .map(|(v, m)| Ok((parse_rational(v)?, parse_rational(m)?)))
        .collect()
}

fn parse_instance_spec(dto: &InstanceDtoSpec) -> Result<InstanceSpec> {
    if let Some(path) = &dto.file {
        if dto.generator.is_some() {
            return Err(Error::Format(
                "instance takes either 'generator' or 'file', not both".into(),
            ));
        }
        return Ok(InstanceSpec::File(PathBuf::from(path)));
    }
    let name = require(dto.generator.as_deref(), "generator", "instance")?;
    Ok(match name {
        "harmonic" => InstanceSpec::Harmonic { m: require(dto.m, "m", "harmonic")? },
        "correlated_pair" => InstanceSpec::CorrelatedPair {
            m: require(dto.m, "m", "correlated_pair")?,
            k: require(dto.k, "k", "correlated_pair")?,
        },
        "modular" => InstanceSpec::Modular {
            n: require(dto.n, "n", "modular")?,
            m: require(dto.m, "m", "modular")?,
            eps: parse_rational(&require(dto.eps.clone(), "eps", "modular")?)?,
        },
        "expert_noise" => InstanceSpec::ExpertNoise {
            n: require(dto.n, "n", "expert_noise")?,
            expert: require(dto.expert, "expert", "expert_noise")?,
            values: parse_pairs(&require(dto.values.clone(), "values", "expert_noise")?)?,
            noise: dto
                .noise
                .as_deref()
                .unwrap_or(&[])
                .iter()
                .map(|nd| Ok((nd.buyer, parse_pairs(&nd.values)?)))
                .collect::<Result<_>>()?,
        },
        "random" => InstanceSpec::Random {
            n: require(dto.n, "n", "random")?,
            support_size: require(dto.support_size, "support_size", "random")?,
            value_grid: require(dto.value_grid.clone(), "value_grid", "random")?
                .iter()
                .map(|s| parse_rational(s))
                .collect::<Result<_>>()?,
            k: require(dto.k, "k", "random")?,
            seed: require(dto.seed, "seed", "random")?,
        },
        other => return Err(unknown("generator", other, KNOWN_GENERATORS)),
    })
}

fn parse_policy_spec(dto: &PolicyDtoSpec) -> Result<(String, PolicySpec)> {
    let spec = match dto.name.as_str() {
        "single_price" => PolicySpec::SinglePrice {
            window: match &dto.window {
                None => None,
                Some((lo, hi)) => Some((parse_rational(lo)?, parse_rational(hi)?)),
            },
        },
        "per_buyer" => PolicySpec::PerBuyer,
        "k_limited" => PolicySpec::KLimited {
            well_separated: dto.well_separated.unwrap_or(false),
        },
        "blind_unlimited" => PolicySpec::BlindUnlimited,
        "blind_k" => PolicySpec::BlindK,
        "blind_k_dsic" => PolicySpec::BlindKDsic,
        "enhanced" => {
            let base = dto.base.clone().unwrap_or_else(|| "blind_k_dsic".into());
            if !KNOWN_BASES.contains(&base.as_str()) {
                return Err(unknown("base", &base, KNOWN_BASES));
            }
            PolicySpec::Enhanced {
                base,
                q: dto.q.as_deref().map(parse_rational).transpose()?,
                d_max: dto.d_max,
            }
        }
        "modular_table" => PolicySpec::ModularTable {
            n: require(dto.n, "n", "modular_table")?,
            m: require(dto.m, "m", "modular_table")?,
            eps: parse_rational(&require(dto.eps.clone(), "eps", "modular_table")?)?,
        },
        "file" => PolicySpec::File(PathBuf::from(require(
            dto.file.clone(),
            "file",
            "policy 'file'",
        )?)),
        other => return Err(unknown("policy", other, KNOWN_POLICIES)),
    };
    Ok((dto.label.clone().unwrap_or_else(|| dto.name.clone()), spec))
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let dto: ConfigDto =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let instance = dto.instance.as_ref().map(parse_instance_spec).transpose()?;
    let policies: Vec<(String, PolicySpec)> = dto
        .policies
        .as_deref()
        .unwrap_or(&[])
        .iter()
        .map(parse_policy_spec)
        .collect::<Result<_>>()?;
    for (i, (label, _)) in policies.iter().enumerate() {
        if policies[..i].iter().any(|(l, _)| l == label) {
            return Err(Error::Format(format!(
                "duplicate policy label '{label}'; set a distinct 'label'"
            )));
        }
    }
    let evaluation = match &dto.evaluation {
        None => EvalMode::Exact,
        Some(e) => match e.mode.as_str() {
            "exact" => EvalMode::Exact,
            "mc" => EvalMode::Mc {
                trials: require(e.trials, "trials", "mc evaluation")?,
                seed: e.seed.unwrap_or(0),
            },
            other => return Err(unknown("evaluation mode", other, KNOWN_MODES)),
        },
    };
    let assertions = dto
        .assertions
        .as_deref()
        .unwrap_or(&[])
        .iter()
        .map(|a| {
            if !policies.iter().any(|(l, _)| l == &a.policy) {
                return Err(Error::Format(format!(
                    "assertion references unknown policy '{}'",
                    a.policy
                )));
            }
            let of = match a.of.as_str() {
                "lp_bound" => Basis::LpBound,
                "osw" => Basis::Osw,
                "one" => Basis::One,
                other => return Err(unknown("assertion basis", other, KNOWN_BASES_OF)),
            };
            Ok(AssertionSpec {
                policy: a.policy.clone(),
                at_least: parse_rational(&a.at_least)?,
                of,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = match &dto.report {
        None => None,
        Some(r) => {
            let sweep = match r.sweep.as_str() {
                "harmonic" => Sweep::Harmonic,
                "pair_unit" => Sweep::PairUnit,
                "pair_two" => Sweep::PairTwo,
                other => return Err(unknown("sweep", other, KNOWN_SWEEPS)),
            };
            if r.m.is_empty() {
                return Err(Error::Format("report sweep needs at least one m".into()));
            }
            Some((sweep, r.m.clone()))
        }
    };
    Ok(ExperimentConfig {
        instance,
        policies,
        evaluation,
        assertions,
        dependence_d_max: dto.dependence_d_max,
        report,
        output: dto.output.unwrap_or_else(|| "out".into()),
    })
}

// ------------------------------------------------------------ construction

fn one_dim(pairs: &[(Rational, Rational)]) -> Result<JointDistribution> {
    JointDistribution::from_outcomes(1, pairs.iter().map(|(v, m)| (vec![v.clone()], m.clone())))
}

pub fn load_instance(spec: &InstanceSpec, seed_override: Option<u64>) -> Result<Instance> {
    match spec {
        InstanceSpec::Harmonic { m } => gen_harmonic(*m),
        InstanceSpec::CorrelatedPair { m, k } => gen_correlated_pair(*m, *k),
        InstanceSpec::Modular { n, m, eps } => gen_modular(*n, *m, eps),
        InstanceSpec::ExpertNoise { n, expert, values, noise } => {
            let value_dist = one_dim(values)?;
            let noise_dists: Vec<(usize, JointDistribution)> = noise
                .iter()
                .map(|(b, pairs)| Ok((*b, one_dim(pairs)?)))
                .collect::<Result<_>>()?;
            gen_expert_noise(*n, *expert, &value_dist, &noise_dists)
        }
        InstanceSpec::Random { n, support_size, value_grid, k, seed } => {
            gen_random(&RandomParams {
                n: *n,
                support_size: *support_size,
                value_grid: value_grid.clone(),
                k: *k,
                seed: seed_override.unwrap_or(*seed),
            })
        }
        InstanceSpec::File(path) => instance_from_json(&fs::read_to_string(path)?),
    }
}

fn build_blind_k_policy(inst: &Instance) -> Result<crate::mechanisms::BlindOfferPolicy> {
    let sol = solve_simplex(&build_revenue_lp(inst));
    build_blind_k(inst, &sol.y)
}

pub fn build_policy(spec: &PolicySpec, inst: &Instance) -> Result<Policy> {
    Ok(match spec {
        PolicySpec::SinglePrice { window } => {
            Policy::SinglePrice(build_bucketed_spp_unit(&inst.dist, window.clone())?)
        }
        PolicySpec::PerBuyer => Policy::PerBuyer(build_bucketed_spp_unlimited(&inst.dist)?),
        PolicySpec::KLimited { well_separated } => {
            build_bucketed_spp_klimited(&inst.dist, inst.k, *well_separated)?
        }
        PolicySpec::BlindUnlimited => Policy::Blind(build_blind_unlimited(inst)?),
        PolicySpec::BlindK => Policy::Blind(build_blind_k_policy(inst)?),
        PolicySpec::BlindKDsic => {
            Policy::Blind(make_dsic(&build_blind_k_policy(inst)?, &inst.dist)?)
        }
        PolicySpec::Enhanced { base, q, d_max } => {
            let base_policy = match base.as_str() {
                "blind_unlimited" => build_blind_unlimited(inst)?,
                "blind_k" => build_blind_k_policy(inst)?,
                _ => make_dsic(&build_blind_k_policy(inst)?, &inst.dist)?,
            };
            let cert = dependence_dimension(&inst.dist, *d_max)?.ok_or_else(|| {
                Error::UnsupportedInstance(format!(
                    "no dependence certificate of dimension <= {} found",
                    d_max.unwrap_or(inst.n().saturating_sub(1))
                ))
            })?;
            let q = q.clone().unwrap_or_else(|| default_q(cert.d));
            Policy::Enhanced(build_enhanced(&base_policy, q, &cert, &inst.dist)?)
        }
        PolicySpec::ModularTable { n, m, eps } => {
            Policy::Direct(build_modular_full_surplus(*n, *m, eps)?)
        }
        PolicySpec::File(path) => policy_from_json(&fs::read_to_string(path)?)?,
    })
}

// -------------------------------------------------------------------- output

struct OutputCtx {
    dir: PathBuf,
    stem: String,
    format: OutFormat,
}

impl OutputCtx {
    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}.{suffix}", self.stem))
    }

    fn write(&self, suffix: &str, contents: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path(suffix);
        fs::write(&path, contents)?;
        Ok(path)
    }

    fn tabular_suffix(&self, kind: &str) -> String {
        match self.format {
            OutFormat::Json => format!("{kind}.json"),
            OutFormat::Csv => format!("{kind}.csv"),
        }
    }
}

#[derive(Serialize)]
struct AssertionOutcome {
    policy: String,
    at_least: String,
    of: String,
    lhs: String,
    rhs: String,
    holds: bool,
}

#[derive(Serialize)]
struct Summary {
    command: String,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    support_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dependence_d: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    osw: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lp_bound: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    assertions: Vec<AssertionOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    finding_count: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    files: Vec<String>,
}

impl Summary {
    fn new(command: &str) -> Summary {
        Summary {
            command: command.into(),
            status: "ok".into(),
            support_size: None,
            dependence_d: None,
            osw: None,
            lp_bound: None,
            assertions: Vec::new(),
            finding_count: None,
            files: Vec::new(),
        }
    }

    fn write(&mut self, ctx: &OutputCtx) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        ctx.write("summary.json", &(text + "\n"))
    }
}

fn basis_name(b: Basis) -> &'static str {
    match b {
        Basis::LpBound => "lp_bound",
        Basis::Osw => "osw",
        Basis::One => "one",
    }
}

fn fmt_ratio_stats(st: &RatioStats) -> String {
    format!(
        "v_max = {}, v_min = {}, r = {}",
        format_rational(&st.v_max),
        format_rational(&st.v_min),
        st.r.as_ref().map(format_rational).unwrap_or_else(|| "inf".into())
    )
}

// ------------------------------------------------------------------ commands

fn cmd_generate(cfg: &ExperimentConfig, ctx: &OutputCtx, cli: &Cli) -> Result<i32> {
    let spec = cfg.instance.as_ref().ok_or_else(|| {
        Error::Format("generate needs an 'instance' entry in the config".into())
    })?;
    let inst = load_instance(spec, cli.seed)?;
    let path = ctx.write("instance.json", &(instance_to_json(&inst)? + "\n"))?;
    let mut summary = Summary::new("generate");
    summary.support_size = Some(inst.dist.len());
    summary.files.push(path.display().to_string());

    println!("instance: n = {}, k = {}", inst.n(), inst.k);
    println!("support size: {}", inst.dist.len());
    if let Some(d_max) = cfg.dependence_d_max {
        let d = match dependence_dimension(&inst.dist, Some(d_max))? {
            Some(cert) => cert.d.to_string(),
            None => format!("> {d_max}"),
        };
        println!("dependence d: {d}");
        summary.dependence_d = Some(d);
    }
    let stats = support_stats(&inst.dist, Some(inst.k))?;
    println!("global: {}", fmt_ratio_stats(&stats.global));
    for (i, st) in stats.per_buyer.iter().enumerate() {
        println!("buyer {i}: {}", fmt_ratio_stats(st));
    }
    if let Some(kth) = &stats.kth_order {
        println!("order statistic {}: {}", inst.k, fmt_ratio_stats(kth));
    }
    if cli.verbose {
        println!("wrote {}", path.display());
    }
    let spath = summary.write(ctx)?;
    if cli.verbose {
        println!("wrote {}", spath.display());
    }
    Ok(0)
}

fn cmd_evaluate(cfg: &ExperimentConfig, ctx: &OutputCtx, cli: &Cli) -> Result<i32> {
    let spec = cfg.instance.as_ref().ok_or_else(|| {
        Error::Format("evaluate needs an 'instance' entry in the config".into())
    })?;
    if cfg.policies.is_empty() {
        return Err(Error::Format("evaluate needs a non-empty 'policies' list".into()));
    }
    let inst = load_instance(spec, cli.seed)?;
    let osw = expected_osw(&inst.dist, inst.k)?;
    let lp_bound = revenue_upper_bound(&inst)?;

    let mut rows = Vec::with_capacity(cfg.policies.len());
    for (label, spec) in &cfg.policies {
        if cli.verbose {
            println!("building {label}");
        }
        let policy = build_policy(spec, &inst)?;
        let row = match &cfg.evaluation {
            EvalMode::Exact => {
                let exact = exact_expected_revenue(&policy, &inst.dist).map_err(|e| match e {
                    Error::Capacity(msg) => Error::Capacity(format!(
                        "{msg}; switch the config's evaluation mode to mc"
                    )),
                    other => other,
                })?;
                RevenueReport {
                    mechanism: label.clone(),
                    ratio_osw: (!osw.is_zero()).then(|| &exact / &osw),
                    ratio_lp: (!lp_bound.is_zero()).then(|| &exact / &lp_bound),
                    exact: Some(exact),
                    mc: None,
                }
            }
            EvalMode::Mc { trials, seed } => RevenueReport {
                mechanism: label.clone(),
                exact: None,
                mc: Some(monte_carlo_revenue(
                    &policy,
                    &inst.dist,
                    *trials,
                    cli.seed.unwrap_or(*seed),
                )?),
                ratio_osw: None,
                ratio_lp: None,
            },
        };
        match (&row.exact, &row.mc) {
            (Some(x), _) => println!("{label}: revenue = {} ({})", format_rational(x), to_decimal_sig(x, SIG)),
            (None, Some(m)) => {
                println!("{label}: revenue ~ {} +/- {} ({} trials)", m.mean, m.half_width_95, m.trials)
            }
            _ => {}
        }
        rows.push(row);
    }
    let report = RatioReport { osw: osw.clone(), lp_bound: lp_bound.clone(), rows };

    let mut summary = Summary::new("evaluate");
    summary.osw = Some(format_rational(&osw));
    summary.lp_bound = Some(format_rational(&lp_bound));
    let mut all_hold = true;
    for a in &cfg.assertions {
        let row = report
            .rows
            .iter()
            .find(|r| r.mechanism == a.policy)
            .expect("assertion labels validated at parse time");
        let basis = match a.of {
            Basis::LpBound => lp_bound.clone(),
            Basis::Osw => osw.clone(),
            Basis::One => Rational::one(),
        };
        let rhs = &a.at_least * &basis;
        let (lhs_text, holds) = match (&row.exact, &row.mc) {
            (Some(x), _) => (format_rational(x), x >= &rhs),
            (None, Some(m)) => (format!("{}", m.mean), m.mean >= to_f64(&rhs)),
            _ => ("-".into(), false),
        };
        println!(
            "assert {}: revenue >= {} x {}: {}",
            a.policy,
            format_rational(&a.at_least),
            basis_name(a.of),
            if holds { "PASS" } else { "FAIL" }
        );
        all_hold &= holds;
        summary.assertions.push(AssertionOutcome {
            policy: a.policy.clone(),
            at_least: format_rational(&a.at_least),
            of: basis_name(a.of).into(),
            lhs: lhs_text,
            rhs: format_rational(&rhs),
            holds,
        });
    }

    let suffix = ctx.tabular_suffix("report");
    let body = match ctx.format {
        OutFormat::Json => report_to_json(&report)? + "\n",
        OutFormat::Csv => report_to_csv(&report),
    };
    let rpath = ctx.write(&suffix, &body)?;
    summary.files.push(rpath.display().to_string());
    if !all_hold {
        summary.status = "failed".into();
    }
    summary.write(ctx)?;
    if cli.verbose {
        println!("wrote {}", rpath.display());
    }
    Ok(if all_hold { 0 } else { 1 })
}

fn cmd_audit(cfg: &ExperimentConfig, ctx: &OutputCtx, cli: &Cli) -> Result<i32> {
    let spec = cfg.instance.as_ref().ok_or_else(|| {
        Error::Format("audit needs an 'instance' entry in the config".into())
    })?;
    if cfg.policies.len() != 1 {
        return Err(Error::Format(format!(
            "audit expects exactly one policy in the config, got {}",
            cfg.policies.len()
        )));
    }
    let inst = load_instance(spec, cli.seed)?;
    let (label, pspec) = &cfg.policies[0];
    let policy = build_policy(pspec, &inst)?;
    let table = policy_to_table(&policy, &inst.dist)?;

    let mut findings: Vec<AuditFinding> = Vec::new();
    findings.extend(audit_dsic(&table, &inst.dist)?);
    findings.extend(audit_expost_ir(&table, &inst.dist)?);
    findings.extend(audit_monotone_allocation(&table, &inst.dist)?);
    findings.extend(audit_price_bound(&table, &inst.dist)?);

    println!("audited {label}: {} finding(s)", findings.len());
    if cli.verbose {
        for f in &findings {
            println!("  {f}");
        }
    }

    let suffix = ctx.tabular_suffix("findings");
    let body = match ctx.format {
        OutFormat::Json => findings_to_json(&findings)? + "\n",
        OutFormat::Csv => findings_to_csv(&findings),
    };
    let fpath = ctx.write(&suffix, &body)?;
    let mut summary = Summary::new("audit");
    summary.finding_count = Some(findings.len());
    summary.files.push(fpath.display().to_string());
    if !findings.is_empty() {
        summary.status = "failed".into();
    }
    summary.write(ctx)?;
    if cli.verbose {
        println!("wrote {}", fpath.display());
    }
    Ok(if findings.is_empty() { 0 } else { 1 })
}

/// One sweep point: best mechanism revenue of the family's stated form,
/// the welfare benchmark, and their ratio.
struct SweepRow {
    m: u32,
    revenue: Rational,
    osw: Rational,
}

fn sweep_row(sweep: Sweep, m: u32) -> Result<SweepRow> {
    match sweep {
        Sweep::Harmonic => {
            let inst = gen_harmonic(m)?;
            let pi = &inst.dist;
            let cond: Vec<(Rational, Rational)> = pi
                .support()
                .iter()
                .zip(pi.mass())
                .map(|(v, mass)| (v[0].clone(), mass.clone()))
                .collect();
            let (_, revenue) = monopoly_price(&cond)?;
            Ok(SweepRow { m, revenue, osw: expected_osw(pi, inst.k)? })
        }
        Sweep::PairUnit => {
            let inst = gen_correlated_pair(m, 1)?;
            Ok(SweepRow {
                m,
                revenue: best_two_stage_pair(m)?.revenue,
                osw: expected_osw(&inst.dist, 1)?,
            })
        }
        Sweep::PairTwo => {
            let inst = gen_correlated_pair(m, 2)?;
            Ok(SweepRow {
                m,
                revenue: best_three_price_pair(m)?.revenue,
                osw: expected_osw(&inst.dist, 2)?,
            })
        }
    }
}

#[derive(Serialize)]
struct SweepRowDto {
    m: u32,
    revenue: String,
    osw: String,
    ratio: String,
}

fn cmd_report(cfg: &ExperimentConfig, ctx: &OutputCtx, cli: &Cli) -> Result<i32> {
    let (sweep, ms) = cfg
        .report
        .as_ref()
        .ok_or_else(|| Error::Format("report needs a 'report' sweep entry in the config".into()))?;
    let mut rows = Vec::with_capacity(ms.len());
    for &m in ms {
        if cli.verbose {
            println!("sweep point m = {m}");
        }
        rows.push(sweep_row(*sweep, m)?);
    }

    let dec = |x: &Rational| to_decimal_sig(x, SIG);
    let mut csv = String::from("m,revenue,osw,ratio,revenue_exact,osw_exact,ratio_exact\n");
    let mut plot = String::from("# m revenue osw ratio\n");
    let mut dtos = Vec::with_capacity(rows.len());
    for row in &rows {
        let ratio = &row.revenue / &row.osw;
        println!(
            "m = {}: revenue = {}, osw = {}, ratio = {}",
            row.m,
            dec(&row.revenue),
            dec(&row.osw),
            dec(&ratio)
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.m,
            dec(&row.revenue),
            dec(&row.osw),
            dec(&ratio),
            format_rational(&row.revenue),
            format_rational(&row.osw),
            format_rational(&ratio),
        ));
        plot.push_str(&format!(
            "{} {} {} {}\n",
            row.m,
            dec(&row.revenue),
            dec(&row.osw),
            dec(&ratio)
        ));
        dtos.push(SweepRowDto {
            m: row.m,
            revenue: format_rational(&row.revenue),
            osw: format_rational(&row.osw),
            ratio: format_rational(&ratio),
        });
    }
    let suffix = ctx.tabular_suffix("report");
    let body = match ctx.format {
        OutFormat::Json => {
            serde_json::to_string_pretty(&dtos).map_err(|e| Error::Format(e.to_string()))? + "\n"
        }
        OutFormat::Csv => csv,
    };
    let rpath = ctx.write(&suffix, &body)?;
    let ppath = ctx.write("plot.txt", &plot)?;
    let mut summary = Summary::new("report");
    summary.files.push(rpath.display().to_string());
    summary.files.push(ppath.display().to_string());
    summary.write(ctx)?;
    if cli.verbose {
        println!("wrote {}", rpath.display());
        println!("wrote {}", ppath.display());
    }
    Ok(0)
}

/// Runs one subcommand; the returned code is the process exit code
/// (0 clean, 1 when an assertion or audit finding fired).
pub fn run(cli: &Cli) -> Result<i32> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--config is required".into()))?;
    let cfg = parse_config(&fs::read_to_string(config_path)?)?;
    let ctx = OutputCtx {
        dir: cli.out.clone(),
        stem: cfg.output.clone(),
        format: cli.format,
    };
    match cli.command {
        Command::Generate => cmd_generate(&cfg, &ctx, cli),
        Command::Evaluate => cmd_evaluate(&cfg, &ctx, cli),
        Command::Audit => cmd_audit(&cfg, &ctx, cli),
        Command::Report => cmd_report(&cfg, &ctx, cli),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_generator_lists_known_names() {
        let err = parse_config(r#"{"instance": {"generator": "zipf", "m": 4}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown generator 'zipf'"), "{msg}");
        for name in KNOWN_GENERATORS {
            assert!(msg.contains(name), "missing {name} in {msg}");
        }
    }

    #[test]
    fn unknown_policy_lists_known_names() {
        let err = parse_config(
            r#"{"policies": [{"name": "vcg"}]}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown policy 'vcg'"), "{msg}");
        for name in KNOWN_POLICIES {
            assert!(msg.contains(name), "missing {name} in {msg}");
        }
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        let err = parse_config(
            r#"{"policies": [{"name": "blind_k"}, {"name": "blind_k"}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate policy label"));
    }

    #[test]
    fn assertions_must_reference_declared_policies() {
        let err = parse_config(
            r#"{
                "policies": [{"name": "blind_k"}],
                "assertions": [{"policy": "ghost", "at_least": "1/2", "of": "osw"}]
            }"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("unknown policy 'ghost'"));
    }

    #[test]
    fn unknown_mode_basis_and_sweep_are_rejected() {
        for (text, needle) in [
            (r#"{"evaluation": {"mode": "slow"}}"#, "unknown evaluation mode 'slow'"),
            (
                r#"{"policies": [{"name": "blind_k"}],
                    "assertions": [{"policy": "blind_k", "at_least": "1", "of": "gdp"}]}"#,
                "unknown assertion basis 'gdp'",
            ),
            (r#"{"report": {"sweep": "cubic", "m": [4]}}"#, "unknown sweep 'cubic'"),
        ] {
            let msg = parse_config(text).unwrap_err().to_string();
            assert!(msg.contains(needle), "{msg}");
        }
    }

    #[test]
    fn missing_generator_params_name_the_field() {
        let err = parse_config(r#"{"instance": {"generator": "modular", "n": 3}}"#).unwrap_err();
        assert!(err.to_string().contains("requires 'm'"));
    }

    #[test]
    fn config_defaults_are_filled() {
        let cfg = parse_config(r#"{"instance": {"generator": "harmonic", "m": 4}}"#).unwrap();
        assert!(matches!(cfg.evaluation, EvalMode::Exact));
        assert_eq!(cfg.output, "out");
        assert!(cfg.policies.is_empty());
        assert!(matches!(cfg.instance, Some(InstanceSpec::Harmonic { m: 4 })));
    }

    #[test]
    fn mc_mode_requires_trials() {
        let err = parse_config(r#"{"evaluation": {"mode": "mc"}}"#).unwrap_err();
        assert!(err.to_string().contains("requires 'trials'"));
    }
}
