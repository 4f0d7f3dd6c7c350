//! Experiment suites: scenario construction, the six-column metric report
//! and cross-scenario property checks.

use std::borrow::Borrow;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, MetricConfig};
use crate::synth::{self, ErrorMode, RatioList, ScenarioBundle, ScenarioSpec};
use crate::verify::{GroupId, ScoreDataset};

/// Margin required by every strict ordering assertion.
pub const ORDER_MARGIN: f64 = 1e-12;

const BUILTIN: [(&str, &str); 5] = [
    ("table4", include_str!("../suites/table4.toml")),
    ("table5", include_str!("../suites/table5.toml")),
    ("table6", include_str!("../suites/table6.toml")),
    ("table7", include_str!("../suites/table7.toml")),
    ("table8", include_str!("../suites/table8.toml")),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteDef {
    pub id: String,
    pub mode: ErrorMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub scenarios: Vec<RatioList>,
}

impl SuiteDef {
    pub fn from_toml(text: &str) -> Result<Self> {
        let def: SuiteDef = toml::from_str(text).map_err(|e| Error::Format(format!("suite definition: {e}")))?;
        if def.scenarios.is_empty() {
            return Err(Error::InvalidScenario(format!("suite {} has no scenarios", def.id)));
        }
        Ok(def)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_toml(text).expect("built-in suites parse"))
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(n, _)| *n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub ratio_label: String,
    pub ir: f64,
    pub garbe: f64,
    pub fdr: f64,
    pub std_eer_g: f64,
    pub sed_std: f64,
    pub sed_mean: f64,
    #[serde(default)]
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub metric: MetricConfig,
    /// Scenario parameters shared by every row; absent for plain evaluations.
    pub base: Option<ScenarioSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite_id: String,
    pub seed: u64,
    pub mode: Option<ErrorMode>,
    pub config: ConfigSnapshot,
    pub rows: Vec<ReportRow>,
    pub properties: Vec<PropertyOutcome>,
}

impl SuiteResult {
    pub fn all_properties_pass(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }
}

/// All six metric columns for one set of group datasets.
pub fn evaluate<D: Borrow<ScoreDataset> + Sync>(
    label: &str,
    per_group: &BTreeMap<GroupId, D>,
    global: &ScoreDataset,
    cfg: &MetricConfig,
) -> Result<ReportRow> {
    let pooled = ScoreDataset::pooled(per_group.values().map(|d| d.borrow()));
    let t = metrics::resolve_policy(&pooled, cfg.policy)?;
    let tbl = metrics::group_rates(per_group, t)?;
    let ir = metrics::inequity_rate(&tbl, cfg)?;
    let sed = metrics::sed_g(global, per_group, cfg)?;
    let mut flags = Vec::new();
    if ir.zero_guarded {
        flags.push("zero-guarded: IR".to_string());
    }
    if sed.zero_guarded {
        flags.push("zero-guarded: SED".to_string());
    }
    Ok(ReportRow {
        ratio_label: label.to_string(),
        ir: ir.value,
        garbe: metrics::garbe(&tbl, cfg)?,
        fdr: metrics::fdr(&tbl, cfg)?,
        std_eer_g: metrics::std_eer_g(per_group)?,
        sed_std: sed.sed_std,
        sed_mean: sed.sed_mean,
        flags,
    })
}

fn evaluate_bundle(b: &ScenarioBundle, cfg: &MetricConfig) -> Result<ReportRow> {
    let label = b.spec.ratios.to_string();
    let mut row = evaluate(&label, &b.per_group, &b.global, cfg).map_err(|e| e.in_row(&label))?;
    row.flags.splice(0..0, b.flags.iter().cloned());
    Ok(row)
}

/// Scenario specs of a suite: `base` with each ratio list and the suite's mode.
pub fn suite_specs(suite: &SuiteDef, base: &ScenarioSpec) -> Vec<ScenarioSpec> {
    suite
        .scenarios
        .iter()
        .map(|r| ScenarioSpec {
            error_mode: suite.mode,
            ..base.with_ratios(r.clone())
        })
        .collect()
}

pub fn run_suite(suite: &SuiteDef, base: &ScenarioSpec, cfg: &MetricConfig) -> Result<SuiteResult> {
    cfg.validate()?;
    if suite.scenarios.is_empty() {
        return Err(Error::InvalidScenario(format!("suite {} has no scenarios", suite.id)));
    }
    let specs = suite_specs(suite, base);
    let bundles = synth::compose_suite(&specs)?;
    let rows = bundles
        .par_iter()
        .map(|b| evaluate_bundle(b, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut result = SuiteResult {
        suite_id: suite.id.clone(),
        seed: base.seed,
        mode: Some(suite.mode),
        config: ConfigSnapshot {
            metric: *cfg,
            base: Some(ScenarioSpec {
                error_mode: suite.mode,
                ..base.with_ratios(RatioList(Vec::new()))
            }),
        },
        rows,
        properties: Vec::new(),
    };
    if base.reuse {
        result.properties = check_properties(&result)?;
    }
    Ok(result)
}

fn outcome(name: String, passed: bool, detail: String) -> PropertyOutcome {
    PropertyOutcome { name, passed, detail }
}

fn parsed_rows(result: &SuiteResult) -> Vec<(RatioList, &ReportRow)> {
    result
        .rows
        .iter()
        .filter(|r| r.flags.is_empty())
        .filter_map(|r| r.ratio_label.parse::<RatioList>().ok().map(|l| (l, r)))
        .collect()
}

fn sorted(r: &RatioList) -> Vec<u32> {
    let mut v = r.0.clone();
    v.sort_unstable();
    v
}

fn is_uniform(r: &RatioList) -> bool {
    r.0.windows(2).all(|w| w[0] == w[1])
}

/// `b` carries at least the disadvantage of `a` in every rank, and more in one.
fn dominates(b: &RatioList, a: &RatioList) -> bool {
    let (sa, sb) = (sorted(a), sorted(b));
    sa.len() == sb.len() && sa != sb && sa.iter().zip(&sb).all(|(x, y)| y >= x)
}

fn zero_dispersion(rows: &[(RatioList, &ReportRow)]) -> Vec<PropertyOutcome> {
    rows.iter()
        .filter(|(l, _)| is_uniform(l))
        .map(|(l, r)| {
            let passed = r.ir == 1.0 && r.garbe == 0.0 && r.fdr == 1.0 && r.std_eer_g == 0.0 && r.sed_std == 0.0;
            outcome(
                format!("zero_dispersion[{l}]"),
                passed,
                format!(
                    "IR={} GARBE={} FDR={} std_EER={} std_SED={}",
                    r.ir, r.garbe, r.fdr, r.std_eer_g, r.sed_std
                ),
            )
        })
        .collect()
}

/// Rows sharing group count, minimum and maximum factor.
fn disparity_classes<'a>(rows: &'a [(RatioList, &'a ReportRow)]) -> BTreeMap<(usize, u32, u32), Vec<&'a (RatioList, &'a ReportRow)>> {
    let mut classes: BTreeMap<_, Vec<_>> = BTreeMap::new();
    for row in rows {
        let s = sorted(&row.0);
        classes
            .entry((s.len(), s[0], s[s.len() - 1]))
            .or_default()
            .push(row);
    }
    classes
}

fn max_disparity_blindness(rows: &[(RatioList, &ReportRow)]) -> Vec<PropertyOutcome> {
    disparity_classes(rows)
        .into_values()
        .filter(|members| members.len() > 1)
        .map(|members| {
            let r0 = members[0].1;
            let passed = members.iter().all(|(_, r)| r.ir == r0.ir && r.fdr == r0.fdr);
            let labels: Vec<String> = members.iter().map(|(l, _)| l.to_string()).collect();
            let detail = members
                .iter()
                .map(|(l, r)| format!("{l}: IR={} FDR={}", r.ir, r.fdr))
                .collect::<Vec<_>>()
                .join("; ");
            outcome(format!("max_disparity_blindness[{}]", labels.join(",")), passed, detail)
        })
        .collect()
}

fn mean_sed_dominance(rows: &[(RatioList, &ReportRow)]) -> Vec<PropertyOutcome> {
    let mut out = Vec::new();
    let mut check = |a: &(RatioList, &ReportRow), b: &(RatioList, &ReportRow)| {
        let passed = b.1.sed_mean > a.1.sed_mean + ORDER_MARGIN;
        out.push(outcome(
            format!("mean_sed_dominance[{} < {}]", a.0, b.0),
            passed,
            format!("sed_mean {} vs {}", a.1.sed_mean, b.1.sed_mean),
        ));
    };
    let uniform: Vec<_> = rows.iter().filter(|(l, _)| is_uniform(l)).collect();
    for a in &uniform {
        for b in &uniform {
            if a.0.len() == b.0.len() && a.0 .0[0] < b.0 .0[0] {
                check(a, b);
            }
        }
    }
    for members in disparity_classes(rows).into_values() {
        for a in &members {
            for b in &members {
                if !is_uniform(&a.0) && dominates(&b.0, &a.0) {
                    check(a, b);
                }
            }
        }
    }
    out
}

fn std_confusion(rows: &[(RatioList, &ReportRow)]) -> Vec<PropertyOutcome> {
    let find = |s: &str| {
        let want: RatioList = s.parse().expect("literal ratio");
        rows.iter().find(|(l, _)| *l == want).map(|(_, r)| *r)
    };
    let (Some(lo), Some(hi)) = (find("1:1:2:5"), find("1:1:3:5")) else {
        return Vec::new();
    };
    vec![
        outcome(
            "std_confusion[std_eer_g: 1:1:3:5 < 1:1:2:5]".into(),
            hi.std_eer_g < lo.std_eer_g - ORDER_MARGIN,
            format!("{} vs {}", hi.std_eer_g, lo.std_eer_g),
        ),
        outcome(
            "std_confusion[sed_std: 1:1:3:5 < 1:1:2:5]".into(),
            hi.sed_std < lo.sed_std - ORDER_MARGIN,
            format!("{} vs {}", hi.sed_std, lo.sed_std),
        ),
    ]
}

/// Rows of the form 1:...:1:x ordered by x.
fn single_disadvantage_rows<'a>(rows: &'a [(RatioList, &'a ReportRow)]) -> Vec<(u32, &'a ReportRow)> {
    let mut out: Vec<(u32, &ReportRow)> = rows
        .iter()
        .filter(|(l, _)| l.len() >= 2 && l.0[..l.len() - 1].iter().all(|&x| x == 1))
        .map(|(l, r)| (l.0[l.len() - 1], *r))
        .collect();
    out.sort_by_key(|(x, _)| *x);
    out
}

fn single_disadvantage_monotonicity(rows: &[(RatioList, &ReportRow)]) -> Vec<PropertyOutcome> {
    let seq = single_disadvantage_rows(rows);
    if seq.len() < 2 {
        return Vec::new();
    }
    // (name, value oriented so that more bias means larger, strict from x = 2)
    type Column = (&'static str, fn(&ReportRow) -> f64, bool);
    let columns: [Column; 6] = [
        ("ir", |r| r.ir, true),
        ("garbe", |r| r.garbe, true),
        ("fdr", |r| -r.fdr, false),
        ("std_eer_g", |r| r.std_eer_g, false),
        ("sed_std", |r| r.sed_std, false),
        ("sed_mean", |r| r.sed_mean, true),
    ];
    columns
        .iter()
        .map(|&(name, get, strict)| {
            let mut failures = Vec::new();
            for w in seq.windows(2) {
                let ((x0, r0), (x1, r1)) = (w[0], w[1]);
                let (v0, v1) = (get(r0), get(r1));
                let ok = if strict && x0 >= 2 {
                    v1 > v0 + ORDER_MARGIN
                } else {
                    v1 >= v0
                };
                if !ok {
                    failures.push(format!("x={x0}->{x1}: {} -> {}", v0.abs(), v1.abs()));
                }
            }
            let values: Vec<String> = seq.iter().map(|(x, r)| format!("{x}:{}", get(r).abs())).collect();
            let detail = if failures.is_empty() {
                values.join(" ")
            } else {
                format!("violations {}; values {}", failures.join(", "), values.join(" "))
            };
            outcome(format!("single_disadvantage_monotone[{name}]"), failures.is_empty(), detail)
        })
        .collect()
}

/// Cross-scenario assertions over a suite built with dataset reuse. Rows
/// carrying any flag are left out.
pub fn check_properties(result: &SuiteResult) -> Result<Vec<PropertyOutcome>> {
    match &result.config.base {
        Some(base) if base.reuse => {}
        _ => return Err(Error::ReuseRequired),
    }
    let rows = parsed_rows(result);
    let mut out = Vec::new();
    out.extend(zero_dispersion(&rows));
    out.extend(max_disparity_blindness(&rows));
    out.extend(mean_sed_dominance(&rows));
    out.extend(std_confusion(&rows));
    out.extend(single_disadvantage_monotonicity(&rows));
    if out.is_empty() {
        out.push(outcome("vacuous".into(), true, "no applicable scenario relations".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(label: &str, ir: f64, fdr: f64, sed_mean: f64) -> ReportRow {
        ReportRow {
            ratio_label: label.into(),
            ir,
            garbe: 0.0,
            fdr,
            std_eer_g: 0.0,
            sed_std: 0.0,
            sed_mean,
            flags: Vec::new(),
        }
    }

    fn result(rows: Vec<ReportRow>, reuse: bool) -> SuiteResult {
        let mut base = ScenarioSpec::standard(ErrorMode::FmrBiased, RatioList(Vec::new()), 1);
        base.reuse = reuse;
        SuiteResult {
            suite_id: "t".into(),
            seed: 1,
            mode: Some(ErrorMode::FmrBiased),
            config: ConfigSnapshot {
                metric: MetricConfig::default(),
                base: Some(base),
            },
            rows,
            properties: Vec::new(),
        }
    }

    #[test]
    fn builtin_suites_load() {
        let names: Vec<_> = SuiteDef::builtin_names().collect();
        assert_eq!(names, ["table4", "table5", "table6", "table7", "table8"]);
        let t4 = SuiteDef::builtin("table4").unwrap();
        assert_eq!(t4.scenarios.len(), 7);
        assert_eq!(t4.scenarios[6].to_string(), "1:1:1:50");
        assert_eq!(SuiteDef::builtin("table6").unwrap().scenarios[3].to_string(), "1:3:3:2");
        assert_eq!(SuiteDef::builtin("table8").unwrap().mode, ErrorMode::FnmrBiased);
        assert!(SuiteDef::builtin("table9").is_none());
    }

    #[test]
    fn reuse_is_required() {
        assert!(matches!(check_properties(&result(vec![], false)), Err(Error::ReuseRequired)));
    }

    #[test]
    fn single_row_is_vacuous() {
        let p = check_properties(&result(vec![row("1:2:3", 2.0, 0.9, 0.5)], true)).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p[0].passed);
    }

    #[test]
    fn blindness_and_dominance() {
        let rows = vec![row("1:1:2:3", 3.0, 0.99, 0.8), row("1:1:3:3", 3.0, 0.99, 1.0)];
        let p = check_properties(&result(rows, true)).unwrap();
        assert!(p.iter().all(|o| o.passed), "{p:?}");
        assert!(p.iter().any(|o| o.name.starts_with("max_disparity_blindness")));
        assert!(p.iter().any(|o| o.name == "mean_sed_dominance[1:1:2:3 < 1:1:3:3]"));

        let rows = vec![row("1:1:2:3", 3.0, 0.99, 0.8), row("1:1:3:3", 3.1, 0.99, 0.7)];
        let p = check_properties(&result(rows, true)).unwrap();
        assert_eq!(p.iter().filter(|o| !o.passed).count(), 2);
    }

    #[test]
    fn flagged_rows_are_excluded() {
        let mut bad = row("1:1:3:3", 9.0, 0.5, 0.1);
        bad.flags.push("unconverged: g3".into());
        let p = check_properties(&result(vec![row("1:1:2:3", 3.0, 0.99, 0.8), bad], true)).unwrap();
        assert_eq!(p[0].name, "vacuous");
    }

    #[test]
    fn fdr_is_checked_in_bias_direction() {
        let rows = vec![
            row("1:1:1:1", 1.0, 1.0, 0.2),
            row("1:1:1:2", 1.2, 0.99, 0.3),
            row("1:1:1:3", 1.5, 0.98, 0.4),
        ];
        let mut rows = rows;
        for (i, r) in rows.iter_mut().enumerate() {
            r.garbe = i as f64 * 0.01;
        }
        let p = check_properties(&result(rows, true)).unwrap();
        let fdr = p.iter().find(|o| o.name == "single_disadvantage_monotone[fdr]").unwrap();
        assert!(fdr.passed, "{fdr:?}");
        assert!(p.iter().all(|o| o.passed), "{p:?}");
    }
}
