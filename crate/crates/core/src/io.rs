//! JSON and CSV serialization.
//!
//! Rationals travel as exact "p/q" strings so files round-trip without
//! loss; CSV reports additionally carry 12-significant-digit decimals for
//! spreadsheet use. Policy files are tagged by kind and re-validated on
//! load, including the structural blindness check that every menu is
//! keyed by the other buyers' reports only.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::evaluation::{AuditFinding, AuditKind, RatioReport};
use crate::mechanisms::{
    BlindOfferPolicy, DirectMechanismTable, EnhancedPolicy, Menu, PerBuyerPolicy, Policy,
    SinglePricePolicy, TableRow, WellSeparatedPolicy,
};
use crate::rational::{format_rational, parse_rational, to_decimal_sig, Rational};
use crate::valuation::{Instance, JointDistribution};
use crate::{Error, Result};

fn fmt(x: &Rational) -> String {
    format_rational(x)
}

fn fmt_all(xs: &[Rational]) -> Vec<String> {
    xs.iter().map(fmt).collect()
}

fn parse_all(xs: &[String]) -> Result<Vec<Rational>> {
    xs.iter().map(|s| parse_rational(s)).collect()
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Format(e.to_string())
}

// ---------------------------------------------------------------- instances

#[derive(Serialize, Deserialize)]
struct InstanceDto {
    n: usize,
    k: usize,
    support: Vec<Vec<String>>,
    mass: Vec<String>,
}

pub fn instance_to_json(inst: &Instance) -> Result<String> {
    let dto = InstanceDto {
        n: inst.n(),
        k: inst.k,
        support: inst.dist.support().iter().map(|v| fmt_all(v)).collect(),
        mass: fmt_all(inst.dist.mass()),
    };
    serde_json::to_string_pretty(&dto).map_err(json_err)
}

pub fn instance_from_json(text: &str) -> Result<Instance> {
    let dto: InstanceDto = serde_json::from_str(text).map_err(json_err)?;
    if dto.support.len() != dto.mass.len() {
        return Err(Error::Format(format!(
            "{} support vectors but {} masses",
            dto.support.len(),
            dto.mass.len()
        )));
    }
    let outcomes: Vec<(Vec<Rational>, Rational)> = dto
        .support
        .iter()
        .zip(&dto.mass)
        .map(|(v, m)| Ok((parse_all(v)?, parse_rational(m)?)))
        .collect::<Result<_>>()?;
    let dist = JointDistribution::from_outcomes(dto.n, outcomes)?;
    Instance::new(dist, dto.k)
}

// ------------------------------------------------------------------ policies

#[derive(Serialize, Deserialize)]
struct MenuDto {
    buyer: usize,
    context: Vec<String>,
    /// (price, probability) pairs; the skip probability is the remainder.
    offers: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct TargetDto {
    buyer: usize,
    context: Vec<String>,
    target: String,
}

#[derive(Serialize, Deserialize)]
struct BlindDto {
    n: usize,
    k: usize,
    order: Vec<usize>,
    menus: Vec<MenuDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reach_target: Option<Vec<TargetDto>>,
    support: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct TableRowDto {
    profile: Vec<String>,
    x: Vec<String>,
    p: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PolicyDto {
    SinglePrice { n: usize, k: usize, prices: Vec<String> },
    PerBuyer { price_sets: Vec<Vec<String>> },
    WellSeparated {
        n: usize,
        k: usize,
        eps: String,
        base_prices: Vec<String>,
        buyer_min: Vec<String>,
        buyer_max: Vec<String>,
    },
    Blind(BlindDto),
    Enhanced { base: BlindDto, q: String, sets: Vec<Vec<usize>> },
    Direct { n: usize, k: usize, rows: Vec<TableRowDto> },
}

fn blind_to_dto(bp: &BlindOfferPolicy) -> BlindDto {
    BlindDto {
        n: bp.n,
        k: bp.k,
        order: bp.order.clone(),
        menus: bp
            .menus
            .iter()
            .map(|((buyer, ctx), menu)| MenuDto {
                buyer: *buyer,
                context: fmt_all(ctx),
                offers: menu
                    .offers
                    .iter()
                    .map(|(p, m)| (fmt(p), fmt(m)))
                    .collect(),
            })
            .collect(),
        reach_target: bp.reach_target.as_ref().map(|targets| {
            targets
                .iter()
                .map(|((buyer, ctx), t)| TargetDto {
                    buyer: *buyer,
                    context: fmt_all(ctx),
                    target: fmt(t),
                })
                .collect()
        }),
        support: bp.support.iter().map(|v| fmt_all(v)).collect(),
    }
}

fn blind_from_dto(dto: &BlindDto) -> Result<BlindOfferPolicy> {
    if dto.order.len() != dto.n || {
        let mut seen = dto.order.clone();
        seen.sort_unstable();
        seen != (0..dto.n).collect::<Vec<_>>()
    } {
        return Err(Error::Format(format!(
            "serving order {:?} is not a permutation of 0..{}",
            dto.order, dto.n
        )));
    }
    if dto.k > dto.n {
        return Err(Error::Format(format!("k = {} exceeds n = {}", dto.k, dto.n)));
    }
    let mut menus = BTreeMap::new();
    for m in &dto.menus {
        if m.buyer >= dto.n {
            return Err(Error::Format(format!("menu buyer {} out of range", m.buyer)));
        }
        if m.context.len() + 1 != dto.n {
            return Err(Error::Format(format!(
                "menu for buyer {} keys on {} reports; a blind menu must key on \
                 exactly the {} other buyers",
                m.buyer,
                m.context.len(),
                dto.n - 1
            )));
        }
        let offers: Vec<(Rational, Rational)> = m
            .offers
            .iter()
            .map(|(p, w)| Ok((parse_rational(p)?, parse_rational(w)?)))
            .collect::<Result<_>>()?;
        let key = (m.buyer, parse_all(&m.context)?);
        if menus.insert(key, Menu::new(offers)?).is_some() {
            return Err(Error::Format(format!(
                "duplicate menu for buyer {} at context {:?}",
                m.buyer, m.context
            )));
        }
    }
    let reach_target = match &dto.reach_target {
        None => None,
        Some(list) => {
            let mut map = BTreeMap::new();
            for t in list {
                map.insert((t.buyer, parse_all(&t.context)?), parse_rational(&t.target)?);
            }
            Some(map)
        }
    };
    let mut support: Vec<Vec<Rational>> = dto
        .support
        .iter()
        .map(|v| parse_all(v))
        .collect::<Result<_>>()?;
    support.sort();
    Ok(BlindOfferPolicy {
        n: dto.n,
        k: dto.k,
        order: dto.order.clone(),
        menus,
        reach_target,
        support,
    })
}

fn policy_to_dto(policy: &Policy) -> PolicyDto {
    match policy {
        Policy::SinglePrice(p) => PolicyDto::SinglePrice {
            n: p.n,
            k: p.k,
            prices: fmt_all(&p.prices),
        },
        Policy::PerBuyer(p) => PolicyDto::PerBuyer {
            price_sets: p.price_sets.iter().map(|s| fmt_all(s)).collect(),
        },
        Policy::WellSeparated(p) => PolicyDto::WellSeparated {
            n: p.n,
            k: p.k,
            eps: fmt(&p.eps),
            base_prices: fmt_all(&p.base_prices),
            buyer_min: fmt_all(&p.buyer_min),
            buyer_max: fmt_all(&p.buyer_max),
        },
        Policy::Blind(p) => PolicyDto::Blind(blind_to_dto(p)),
        Policy::Enhanced(p) => PolicyDto::Enhanced {
            base: blind_to_dto(&p.base),
            q: fmt(&p.q),
            sets: p.sets.clone(),
        },
        Policy::Direct(t) => PolicyDto::Direct {
            n: t.n,
            k: t.k,
            rows: t
                .rows
                .iter()
                .map(|(profile, row)| TableRowDto {
                    profile: fmt_all(profile),
                    x: fmt_all(&row.x),
                    p: fmt_all(&row.p),
                })
                .collect(),
        },
    }
}

fn policy_from_dto(dto: &PolicyDto) -> Result<Policy> {
    Ok(match dto {
        PolicyDto::SinglePrice { n, k, prices } => Policy::SinglePrice(SinglePricePolicy {
            n: *n,
            k: *k,
            prices: parse_all(prices)?,
        }),
        PolicyDto::PerBuyer { price_sets } => Policy::PerBuyer(PerBuyerPolicy {
            price_sets: price_sets.iter().map(|s| parse_all(s)).collect::<Result<_>>()?,
        }),
        PolicyDto::WellSeparated { n, k, eps, base_prices, buyer_min, buyer_max } => {
            Policy::WellSeparated(WellSeparatedPolicy {
                n: *n,
                k: *k,
                eps: parse_rational(eps)?,
                base_prices: parse_all(base_prices)?,
                buyer_min: parse_all(buyer_min)?,
                buyer_max: parse_all(buyer_max)?,
            })
        }
        PolicyDto::Blind(b) => Policy::Blind(blind_from_dto(b)?),
        PolicyDto::Enhanced { base, q, sets } => {
            let base = blind_from_dto(base)?;
            if sets.len() != base.n {
                return Err(Error::Format(format!(
                    "{} dependence sets for {} buyers",
                    sets.len(),
                    base.n
                )));
            }
            Policy::Enhanced(EnhancedPolicy {
                base,
                q: parse_rational(q)?,
                sets: sets.clone(),
            })
        }
        PolicyDto::Direct { n, k, rows } => {
            let mut map = BTreeMap::new();
            for row in rows {
                map.insert(
                    parse_all(&row.profile)?,
                    TableRow { x: parse_all(&row.x)?, p: parse_all(&row.p)? },
                );
            }
            let table = DirectMechanismTable { n: *n, k: *k, rows: map };
            table.validate()?;
            Policy::Direct(table)
        }
    })
}

pub fn policy_to_json(policy: &Policy) -> Result<String> {
    serde_json::to_string_pretty(&policy_to_dto(policy)).map_err(json_err)
}

pub fn policy_from_json(text: &str) -> Result<Policy> {
    let dto: PolicyDto = serde_json::from_str(text).map_err(json_err)?;
    policy_from_dto(&dto)
}

// ------------------------------------------------------------------ findings

#[derive(Serialize)]
struct FindingDto<'a> {
    kind: &'a str,
    buyer: usize,
    truthful: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deviation: Option<Vec<String>>,
    lhs: String,
    rhs: String,
}

fn kind_name(kind: AuditKind) -> &'static str {
    match kind {
        AuditKind::DsicViolation => "dsic",
        AuditKind::IrViolation => "ir",
        AuditKind::MonotonicityViolation => "monotonicity",
        AuditKind::PriceBoundViolation => "price_bound",
    }
}

pub fn findings_to_json(findings: &[AuditFinding]) -> Result<String> {
    let dtos: Vec<FindingDto> = findings
        .iter()
        .map(|f| FindingDto {
            kind: kind_name(f.kind),
            buyer: f.buyer,
            truthful: fmt_all(&f.truthful),
            deviation: f.deviation.as_ref().map(|d| fmt_all(d)),
            lhs: fmt(&f.lhs),
            rhs: fmt(&f.rhs),
        })
        .collect();
    serde_json::to_string_pretty(&dtos).map_err(json_err)
}

/// RFC 4180 quoting: wrap when the field holds a comma, quote or newline.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_line(fields: &[String]) -> String {
    fields.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(",")
}

pub fn findings_to_csv(findings: &[AuditFinding]) -> String {
    let mut out = String::from("kind,buyer,truthful,deviation,lhs,rhs\n");
    for f in findings {
        let row = [
            kind_name(f.kind).to_string(),
            f.buyer.to_string(),
            fmt_all(&f.truthful).join(" "),
            f.deviation.as_ref().map(|d| fmt_all(d).join(" ")).unwrap_or_default(),
            fmt(&f.lhs),
            fmt(&f.rhs),
        ];
        out.push_str(&csv_line(&row));
        out.push('\n');
    }
    out
}

// -------------------------------------------------------------------- reports

const REPORT_SIG_DIGITS: u32 = 12;

#[derive(Serialize)]
struct McDto {
    mean: f64,
    half_width_95: f64,
    trials: u64,
    seed: u64,
}

#[derive(Serialize)]
struct ReportRowDto {
    mechanism: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc: Option<McDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio_osw: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio_lp: Option<String>,
}

#[derive(Serialize)]
struct ReportDto {
    osw: String,
    lp_bound: String,
    rows: Vec<ReportRowDto>,
}

pub fn report_to_json(report: &RatioReport) -> Result<String> {
    let dto = ReportDto {
        osw: fmt(&report.osw),
        lp_bound: fmt(&report.lp_bound),
        rows: report
            .rows
            .iter()
            .map(|r| ReportRowDto {
                mechanism: r.mechanism.clone(),
                exact: r.exact.as_ref().map(fmt),
                mc: r.mc.as_ref().map(|m| McDto {
                    mean: m.mean,
                    half_width_95: m.half_width_95,
                    trials: m.trials,
                    seed: m.seed,
                }),
                ratio_osw: r.ratio_osw.as_ref().map(fmt),
                ratio_lp: r.ratio_lp.as_ref().map(fmt),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&dto).map_err(json_err)
}

/// Decimal columns use 12 significant digits; the *_exact columns carry
/// the untruncated p/q values where the quantity is exact.
pub fn report_to_csv(report: &RatioReport) -> String {
    let mut out = String::from(
        "mechanism,revenue,half_width_95,ratio_osw,ratio_lp,revenue_exact,osw_exact,lp_bound_exact\n",
    );
    let dec = |x: &Rational| to_decimal_sig(x, REPORT_SIG_DIGITS);
    for r in &report.rows {
        let (revenue, half_width, exact) = match (&r.exact, &r.mc) {
            (Some(x), _) => (dec(x), String::new(), fmt(x)),
            (None, Some(m)) => {
                (format!("{}", m.mean), format!("{}", m.half_width_95), String::new())
            }
            (None, None) => (String::new(), String::new(), String::new()),
        };
        let row = [
            r.mechanism.clone(),
            revenue,
            half_width,
            r.ratio_osw.as_ref().map(&dec).unwrap_or_default(),
            r.ratio_lp.as_ref().map(&dec).unwrap_or_default(),
            exact,
            fmt(&report.osw),
            fmt(&report.lp_bound),
        ];
        out.push_str(&csv_line(&row));
        out.push('\n');
    }
    out
}
