//! Demographic fairness metrics: IR, FDR, GARBE, STD of group EERs and the
//! global-referenced SED measure.

use std::borrow::Borrow;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verify::{self, GroupId, OperatingKind, RatesAtThreshold, ScoreDataset};

/// Operating point at which the disparity metrics (IR, FDR, GARBE) read
/// per-group rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rate", rename_all = "snake_case")]
pub enum PolicyPoint {
    /// Largest threshold whose FMR stays at or below the rate.
    Fmr(f64),
    /// Smallest threshold whose TMR reaches the rate.
    Tmr(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub alpha: f64,
    pub policy: PolicyPoint,
    /// Substituted for zero denominators when set; results are flagged.
    pub zero_guard: Option<f64>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            alpha: 0.5,
            policy: PolicyPoint::Tmr(0.95),
            zero_guard: None,
        }
    }
}

impl MetricConfig {
    /// Policy matching a synthesis constraint: the TMR target itself for
    /// FMR-at-TMR scenarios, the FMR implied by the TNMR target otherwise.
    pub fn for_constraint(kind: OperatingKind, target_constraint: f64) -> Self {
        let policy = match kind {
            OperatingKind::FmrAtTmr => PolicyPoint::Tmr(target_constraint),
            OperatingKind::FnmrAtTnmr => PolicyPoint::Fmr(1.0 - target_constraint),
        };
        MetricConfig {
            policy,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::OutOfRange {
                name: "alpha",
                range: "[0, 1]",
                value: self.alpha,
            });
        }
        let (name, rate) = match self.policy {
            PolicyPoint::Fmr(r) => ("policy FMR", r),
            PolicyPoint::Tmr(r) => ("policy TMR", r),
        };
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::OutOfRange {
                name,
                range: "(0, 1)",
                value: rate,
            });
        }
        if let Some(g) = self.zero_guard {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::OutOfRange {
                    name: "zero guard",
                    range: "(0, inf)",
                    value: g,
                });
            }
        }
        Ok(())
    }
}

/// A metric value plus whether a zero guard was substituted to produce it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flagged {
    pub value: f64,
    pub zero_guarded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub group: GroupId,
    pub fmr: f64,
    pub fnmr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRatesTable {
    pub threshold: f64,
    pub entries: Vec<GroupRates>,
}

impl GroupRatesTable {
    fn require_groups(&self, needed: usize) -> Result<()> {
        if self.entries.len() < needed {
            return Err(Error::TooFewGroups {
                needed,
                got: self.entries.len(),
            });
        }
        Ok(())
    }

    pub fn fmrs(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.fmr).collect()
    }

    pub fn fnmrs(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.fnmr).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SedEntry {
    pub group: GroupId,
    pub delta_fmr: f64,
    pub delta_fnmr: f64,
    pub sed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SedBreakdown {
    pub mean_eer_threshold: f64,
    pub global_fmr: f64,
    pub global_fnmr: f64,
    pub groups: Vec<SedEntry>,
    pub sed_mean: f64,
    pub sed_std: f64,
    pub zero_guarded: bool,
}

/// Largest candidate threshold on `ds` whose FMR does not exceed `policy_fmr`.
pub fn policy_threshold(ds: &ScoreDataset, policy_fmr: f64) -> Result<f64> {
    if !(policy_fmr > 0.0 && policy_fmr < 1.0) {
        return Err(Error::OutOfRange {
            name: "policy FMR",
            range: "(0, 1)",
            value: policy_fmr,
        });
    }
    let curve = ds.curve();
    let cands = curve.candidates();
    let fmr = |t: f64| curve.rates_at(t).map(|r| r.fmr);
    // surfaces the empty-class error before searching
    let min_fmr = fmr(cands.first().copied().unwrap_or(0.0))?;
    let n_ok = cands.partition_point(|&c| curve.impostor_matches(c) as f64 / ds.n_impostor() as f64 <= policy_fmr);
    if n_ok == 0 {
        return Err(Error::InfeasiblePolicy {
            policy: policy_fmr,
            min_fmr,
        });
    }
    Ok(cands[n_ok - 1])
}

pub fn resolve_policy(ds: &ScoreDataset, policy: PolicyPoint) -> Result<f64> {
    match policy {
        PolicyPoint::Fmr(p) => policy_threshold(ds, p),
        PolicyPoint::Tmr(p) => Ok(verify::threshold_at_tmr(ds, p)?.threshold),
    }
}

pub fn group_rates<D: Borrow<ScoreDataset>>(
    per_group: &BTreeMap<GroupId, D>,
    t: f64,
) -> Result<GroupRatesTable> {
    let entries = per_group
        .iter()
        .map(|(g, ds)| {
            let r = verify::rates_at_threshold(ds.borrow(), t)?;
            Ok(GroupRates {
                group: g.clone(),
                fmr: r.fmr,
                fnmr: r.fnmr,
            })
        })
        .collect::<Result<_>>()?;
    Ok(GroupRatesTable { threshold: t, entries })
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn guarded_ratio(values: &[f64], what: &'static str, guard: Option<f64>) -> Result<(f64, bool)> {
    let (lo, hi) = min_max(values);
    if lo == hi {
        return Ok((1.0, false));
    }
    if lo > 0.0 {
        return Ok((hi / lo, false));
    }
    match guard {
        Some(g) => Ok((hi.max(g) / lo.max(g), true)),
        None => Err(Error::ZeroDenominator(what)),
    }
}

/// IR = (max FMR / min FMR)^alpha * (max FNMR / min FNMR)^(1 - alpha).
pub fn inequity_rate(tbl: &GroupRatesTable, cfg: &MetricConfig) -> Result<Flagged> {
    tbl.require_groups(2)?;
    let (a, ga) = guarded_ratio(&tbl.fmrs(), "minimum group FMR", cfg.zero_guard)?;
    let (b, gb) = guarded_ratio(&tbl.fnmrs(), "minimum group FNMR", cfg.zero_guard)?;
    Ok(Flagged {
        value: a.powf(cfg.alpha) * b.powf(1.0 - cfg.alpha),
        zero_guarded: ga || gb,
    })
}

pub fn fdr(tbl: &GroupRatesTable, cfg: &MetricConfig) -> Result<f64> {
    tbl.require_groups(2)?;
    let (fmr_lo, fmr_hi) = min_max(&tbl.fmrs());
    let (fnmr_lo, fnmr_hi) = min_max(&tbl.fnmrs());
    Ok(1.0 - (cfg.alpha * (fmr_hi - fmr_lo) + (1.0 - cfg.alpha) * (fnmr_hi - fnmr_lo)))
}

/// Gini coefficient with the n/(n-1) small-sample correction. Zero when
/// the mean is zero.
pub fn gini(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewGroups { needed: 2, got: n });
    }
    for &v in values {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::OutOfRange {
                name: "gini input",
                range: "[0, inf)",
                value: v,
            });
        }
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if mean == 0.0 {
        return Ok(0.0);
    }
    let mut abs_diff = 0.0;
    for &a in values {
        for &b in values {
            abs_diff += (a - b).abs();
        }
    }
    let nf = n as f64;
    Ok(nf / (nf - 1.0) * abs_diff / (2.0 * nf * nf * mean))
}

pub fn garbe(tbl: &GroupRatesTable, cfg: &MetricConfig) -> Result<f64> {
    tbl.require_groups(2)?;
    Ok(cfg.alpha * gini(&tbl.fmrs())? + (1.0 - cfg.alpha) * gini(&tbl.fnmrs())?)
}

/// Arithmetic mean; returns the common value exactly when all inputs agree.
fn mean(values: &[f64]) -> f64 {
    if values.windows(2).all(|w| w[0] == w[1]) {
        return values[0];
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation; exactly zero for identical inputs.
pub(crate) fn population_std(values: &[f64]) -> f64 {
    if values.windows(2).all(|w| w[0] == w[1]) {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

fn per_group_eers<D: Borrow<ScoreDataset>>(
    per_group: &BTreeMap<GroupId, D>,
) -> Result<Vec<verify::EerResult>> {
    per_group.values().map(|ds| verify::eer(ds.borrow())).collect()
}

pub fn std_eer_g<D: Borrow<ScoreDataset>>(per_group: &BTreeMap<GroupId, D>) -> Result<f64> {
    if per_group.len() < 2 {
        return Err(Error::TooFewGroups {
            needed: 2,
            got: per_group.len(),
        });
    }
    let eers: Vec<f64> = per_group_eers(per_group)?.iter().map(|e| e.eer).collect();
    Ok(population_std(&eers))
}

pub fn mean_eer_threshold<D: Borrow<ScoreDataset>>(per_group: &BTreeMap<GroupId, D>) -> Result<f64> {
    if per_group.is_empty() {
        return Err(Error::TooFewGroups { needed: 1, got: 0 });
    }
    let ts: Vec<f64> = per_group_eers(per_group)?.iter().map(|e| e.threshold).collect();
    Ok(mean(&ts))
}

fn relative_gap(group: f64, global: f64, guard: Option<f64>, what: &'static str) -> Result<(f64, bool)> {
    if global > 0.0 {
        return Ok(((1.0 - group / global).abs(), false));
    }
    match guard {
        Some(g) => Ok(((1.0 - group / g).abs(), true)),
        None => Err(Error::ZeroDenominator(what)),
    }
}

/// SED breakdown from already-measured rates: `global` is evaluated on the
/// global dataset and `tbl` on the per-group sets, both at `tbl.threshold`.
pub fn sed_from_rates(global: &RatesAtThreshold, tbl: &GroupRatesTable, guard: Option<f64>) -> Result<SedBreakdown> {
    tbl.require_groups(1)?;
    let mut zero_guarded = false;
    let mut groups = Vec::with_capacity(tbl.entries.len());
    for e in &tbl.entries {
        let (delta_fmr, gf) = relative_gap(e.fmr, global.fmr, guard, "global FMR at mean EER threshold")?;
        let (delta_fnmr, gn) = relative_gap(e.fnmr, global.fnmr, guard, "global FNMR at mean EER threshold")?;
        zero_guarded |= gf || gn;
        groups.push(SedEntry {
            group: e.group.clone(),
            delta_fmr,
            delta_fnmr,
            sed: delta_fmr + delta_fnmr,
        });
    }
    let seds: Vec<f64> = groups.iter().map(|g| g.sed).collect();
    Ok(SedBreakdown {
        mean_eer_threshold: tbl.threshold,
        global_fmr: global.fmr,
        global_fnmr: global.fnmr,
        sed_mean: mean(&seds),
        sed_std: population_std(&seds),
        groups,
        zero_guarded,
    })
}

pub fn sed_g<D: Borrow<ScoreDataset>>(
    global: &ScoreDataset,
    per_group: &BTreeMap<GroupId, D>,
    cfg: &MetricConfig,
) -> Result<SedBreakdown> {
    let t = mean_eer_threshold(per_group)?;
    let global_rates = verify::rates_at_threshold(global, t)?;
    let tbl = group_rates(per_group, t)?;
    sed_from_rates(&global_rates, &tbl, cfg.zero_guard)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::fixtures::ds;
    use crate::verify::PairRecord;

    const EPS: f64 = 1e-12;

    fn table(fmrs: &[f64], fnmrs: &[f64]) -> GroupRatesTable {
        GroupRatesTable {
            threshold: 0.5,
            entries: fmrs
                .iter()
                .zip(fnmrs)
                .enumerate()
                .map(|(i, (&fmr, &fnmr))| GroupRates {
                    group: GroupId::new(&format!("g{}", i + 1)),
                    fmr,
                    fnmr,
                })
                .collect(),
        }
    }

    fn alpha(a: f64) -> MetricConfig {
        MetricConfig {
            alpha: a,
            ..Default::default()
        }
    }

    #[test]
    fn policy_threshold_examples() {
        let d = ds(&[0.1], &[0.2, 0.6, 0.8]);
        assert_eq!(policy_threshold(&d, 0.4).unwrap(), 0.2);

        // all impostors below the top genuine: 1 - eps still rejects FMR = 1
        let d = ds(&[0.1, 0.9], &[0.2, 0.3, 0.4]);
        assert_eq!(policy_threshold(&d, 0.999).unwrap(), 0.3);

        let d = ds(&[0.5], &[0.2, 0.6]);
        assert!(matches!(
            policy_threshold(&d, 0.4),
            Err(Error::InfeasiblePolicy { min_fmr, .. }) if min_fmr == 0.5
        ));
        assert!(policy_threshold(&ds(&[0.1], &[]), 0.1).is_err());
    }

    #[test]
    fn resolve_tmr_policy() {
        let d = ds(&[0.1, 0.2, 0.3, 0.4], &[0.35, 0.6, 0.7, 0.8]);
        assert_eq!(resolve_policy(&d, PolicyPoint::Tmr(0.75)).unwrap(), 0.3);
    }

    #[test]
    fn ir_examples() {
        let cfg = alpha(0.5);
        let ir = inequity_rate(&table(&[0.01, 0.02, 0.01, 0.01], &[0.1; 4]), &cfg).unwrap();
        assert!((ir.value - std::f64::consts::SQRT_2).abs() <= EPS);
        assert!(!ir.zero_guarded);

        let same = inequity_rate(&table(&[0.02; 3], &[0.3; 3]), &cfg).unwrap();
        assert_eq!(same.value, 1.0);

        let ir = inequity_rate(&table(&[0.01, 0.03], &[0.1, 0.5]), &alpha(1.0)).unwrap();
        assert!((ir.value - 3.0).abs() <= EPS);
    }

    #[test]
    fn ir_zero_denominator() {
        let tbl = table(&[0.0, 0.02], &[0.1, 0.1]);
        assert!(matches!(inequity_rate(&tbl, &alpha(0.5)), Err(Error::ZeroDenominator(_))));
        let cfg = MetricConfig {
            zero_guard: Some(1e-3),
            ..alpha(0.5)
        };
        let ir = inequity_rate(&tbl, &cfg).unwrap();
        assert!(ir.zero_guarded);
        assert!((ir.value - 20f64.sqrt()).abs() <= EPS);
        assert!(matches!(
            inequity_rate(&table(&[0.1], &[0.1]), &cfg),
            Err(Error::TooFewGroups { .. })
        ));
    }

    #[test]
    fn fdr_examples() {
        let cfg = alpha(0.5);
        assert!((fdr(&table(&[0.01, 0.03], &[0.05, 0.09]), &cfg).unwrap() - 0.97).abs() <= EPS);
        assert_eq!(fdr(&table(&[0.2; 3], &[0.1; 3]), &cfg).unwrap(), 1.0);
        assert!((fdr(&table(&[0.1, 0.3], &[0.4, 0.4]), &cfg).unwrap() - 0.9).abs() <= EPS);
    }

    #[test]
    fn gini_examples() {
        assert!((gini(&[0.1, 0.3]).unwrap() - 0.5).abs() <= EPS);
        assert_eq!(gini(&[0.4; 5]).unwrap(), 0.0);
        assert!((gini(&[0.0, 1.0]).unwrap() - 1.0).abs() <= EPS);
        assert_eq!(gini(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(gini(&[0.1]).is_err());
        assert!(gini(&[0.1, -0.2]).is_err());
    }

    #[test]
    fn garbe_examples() {
        let g = garbe(&table(&[0.1, 0.3], &[0.1, 0.3]), &alpha(0.5)).unwrap();
        assert!((g - 0.5).abs() <= EPS);
        assert_eq!(garbe(&table(&[0.01; 4], &[0.05; 4]), &alpha(0.5)).unwrap(), 0.0);
        let g = garbe(&table(&[0.0, 1.0], &[0.3, 0.7]), &alpha(1.0)).unwrap();
        assert!((g - 1.0).abs() <= EPS);
    }

    #[test]
    fn std_of_eers() {
        assert!((population_std(&[0.1, 0.2]) - 0.05).abs() <= EPS);
        assert_eq!(population_std(&[0.3; 7]), 0.0);

        // EER 0 and EER 1/2 groups -> population std 1/4
        let mut m = BTreeMap::new();
        m.insert(GroupId::new("a"), ds(&[0.1], &[0.9]));
        m.insert(GroupId::new("b"), ds(&[0.1, 0.6], &[0.4, 0.9]));
        assert!((std_eer_g(&m).unwrap() - 0.25).abs() <= EPS);

        let single: BTreeMap<_, _> = [(GroupId::new("a"), ds(&[0.1], &[0.9]))].into();
        assert!(std_eer_g(&single).is_err());
    }

    #[test]
    fn mean_threshold_examples() {
        let mut m = BTreeMap::new();
        m.insert(GroupId::new("a"), ds(&[0.3], &[0.9]));
        m.insert(GroupId::new("b"), ds(&[0.5], &[0.9]));
        assert!((mean_eer_threshold(&m).unwrap() - 0.4).abs() <= EPS);

        let d = ds(&[0.1, 0.2, 0.3], &[0.25, 0.4, 0.5]);
        let one: BTreeMap<_, _> = [(GroupId::new("a"), d.clone())].into();
        assert_eq!(mean_eer_threshold(&one).unwrap(), 0.25);

        let copies: BTreeMap<_, _> = (0..3).map(|i| (GroupId::new(&i.to_string()), d.clone())).collect();
        assert_eq!(mean_eer_threshold(&copies).unwrap(), 0.25);
    }

    #[test]
    fn sed_hand_example() {
        let global = RatesAtThreshold::from_counts(2, 10, 100, 100, 0.5);
        let tbl = table(&[0.03], &[0.05]);
        let s = sed_from_rates(&global, &tbl, None).unwrap();
        assert!((s.groups[0].delta_fmr - 0.5).abs() <= EPS);
        assert!((s.groups[0].delta_fnmr - 0.5).abs() <= EPS);
        assert!((s.groups[0].sed - 1.0).abs() <= EPS);
        assert_eq!(s.sed_std, 0.0);
    }

    #[test]
    fn sed_self_reference_is_zero() {
        let d = ds(&[0.1, 0.2, 0.3], &[0.25, 0.4, 0.5]);
        let m: BTreeMap<_, _> = [(GroupId::new("A"), d.clone())].into();
        let s = sed_g(&d, &m, &MetricConfig::default()).unwrap();
        assert_eq!((s.sed_mean, s.sed_std), (0.0, 0.0));
    }

    #[test]
    fn sed_zero_global_rate() {
        let global = RatesAtThreshold::from_counts(0, 10, 100, 100, 0.5);
        let tbl = table(&[0.03, 0.0], &[0.05, 0.1]);
        assert!(matches!(sed_from_rates(&global, &tbl, None), Err(Error::ZeroDenominator(_))));
        let s = sed_from_rates(&global, &tbl, Some(0.01)).unwrap();
        assert!(s.zero_guarded);
        assert!((s.groups[0].delta_fmr - 2.0).abs() <= EPS);
    }

    #[test]
    fn sed_uses_unpartitioned_global() {
        // global includes a cross-group impostor below the mean EER threshold
        let a = GroupId::new("A");
        let b = GroupId::new("B");
        let rec = |d, gen, x: &GroupId, y: &GroupId| PairRecord::new(d, gen, x.clone(), y.clone()).unwrap();
        let global = ScoreDataset::new(vec![
            rec(0.1, true, &a, &a),
            rec(0.2, true, &b, &b),
            rec(0.05, false, &a, &b),
            rec(0.9, false, &a, &a),
        ])
        .unwrap();
        let groups = global.groups();
        let parts = verify::partition_by_group(&global, &groups).unwrap();
        let parts: BTreeMap<_, _> = parts.into_iter().filter(|(_, d)| d.n_impostor() > 0).collect();
        let s = sed_g(&global, &parts, &MetricConfig::default()).unwrap();
        assert_eq!(s.mean_eer_threshold, 0.1);
        assert_eq!(s.global_fmr, 0.5);
        assert_eq!(s.groups[0].sed, 2.0);
    }

    #[test]
    fn config_validation() {
        assert!(MetricConfig::default().validate().is_ok());
        assert!(alpha(1.5).validate().is_err());
        let bad = MetricConfig {
            policy: PolicyPoint::Fmr(0.0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = MetricConfig {
            zero_guard: Some(0.0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let c = MetricConfig::for_constraint(OperatingKind::FnmrAtTnmr, 0.95);
        assert!(matches!(c.policy, PolicyPoint::Fmr(p) if (p - 0.05).abs() < 1e-15));
    }
}
