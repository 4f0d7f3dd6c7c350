//! Score-pair data types and threshold / error-rate machinery.
//!
//! A pair matches at threshold `t` iff its distance is `<= t`. Every
//! threshold search runs over the sorted distinct observed distances, since
//! all rates are step functions that only change at those values.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Demographic group label.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupId(Arc<str>);

impl GroupId {
    pub fn new(name: &str) -> Self {
        GroupId(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for GroupId {
    fn from(s: &str) -> Self {
        GroupId::new(s)
    }
}

/// One comparison between two biometric samples.
#[derive(Clone, Debug, PartialEq)]
pub struct PairRecord {
    pub distance: f64,
    pub is_genuine: bool,
    pub group_a: GroupId,
    pub group_b: GroupId,
}

impl PairRecord {
    pub fn new(distance: f64, is_genuine: bool, group_a: GroupId, group_b: GroupId) -> Result<Self> {
        let rec = PairRecord {
            distance,
            is_genuine,
            group_a,
            group_b,
        };
        rec.validate()?;
        Ok(rec)
    }

    fn validate(&self) -> Result<()> {
        if !self.distance.is_finite() || self.distance < 0.0 {
            return Err(Error::InvalidDistance(self.distance));
        }
        if self.is_genuine && self.group_a != self.group_b {
            return Err(Error::GenuineCrossGroup {
                group_a: self.group_a.to_string(),
                group_b: self.group_b.to_string(),
            });
        }
        Ok(())
    }

    /// Within-demographic pair (both samples from the same group).
    pub fn is_wdi(&self) -> bool {
        self.group_a == self.group_b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatesAtThreshold {
    pub fmr: f64,
    pub fnmr: f64,
    pub tmr: f64,
    pub tnmr: f64,
    pub threshold: f64,
}

impl RatesAtThreshold {
    /// Builds the four rates from raw counts. TMR and TNMR are derived
    /// through their complement identities so `tmr + fnmr == 1` holds exactly.
    pub fn from_counts(
        false_matches: usize,
        false_non_matches: usize,
        n_impostor: usize,
        n_genuine: usize,
        threshold: f64,
    ) -> Self {
        let fmr = false_matches as f64 / n_impostor as f64;
        let fnmr = false_non_matches as f64 / n_genuine as f64;
        RatesAtThreshold {
            fmr,
            fnmr,
            tmr: 1.0 - fnmr,
            tnmr: 1.0 - fmr,
            threshold,
        }
    }
}

/// Which error rate is measured at which constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatingKind {
    /// FMR measured at the threshold reaching a target TMR.
    FmrAtTmr,
    /// FNMR measured at the threshold reaching a target TNMR.
    FnmrAtTnmr,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub kind: OperatingKind,
    /// Requested TMR (or TNMR).
    pub target_rate: f64,
    /// TMR (or TNMR) actually reached at `threshold`.
    pub constraint_rate: f64,
    /// FMR (or FNMR) at `threshold`.
    pub achieved_rate: f64,
    pub threshold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EerResult {
    pub eer: f64,
    pub threshold: f64,
    pub fmr_at_t: f64,
    pub fnmr_at_t: f64,
}

/// Sorted genuine and impostor distances; every rate query goes through here.
#[derive(Clone, Debug, Default)]
pub struct RateCurve {
    genuine: Vec<f64>,
    impostor: Vec<f64>,
}

impl RateCurve {
    pub fn new(mut genuine: Vec<f64>, mut impostor: Vec<f64>) -> Self {
        genuine.sort_unstable_by(f64::total_cmp);
        impostor.sort_unstable_by(f64::total_cmp);
        RateCurve { genuine, impostor }
    }

    pub fn genuine(&self) -> &[f64] {
        &self.genuine
    }

    pub fn impostor(&self) -> &[f64] {
        &self.impostor
    }

    fn require_both(&self) -> Result<()> {
        if self.genuine.is_empty() || self.impostor.is_empty() {
            return Err(Error::EmptyClass {
                genuine: self.genuine.len(),
                impostor: self.impostor.len(),
            });
        }
        Ok(())
    }

    pub fn genuine_matches(&self, t: f64) -> usize {
        self.genuine.partition_point(|&d| d <= t)
    }

    pub fn impostor_matches(&self, t: f64) -> usize {
        self.impostor.partition_point(|&d| d <= t)
    }

    fn rates_unchecked(&self, t: f64) -> RatesAtThreshold {
        let ng = self.genuine.len();
        let fnm = ng - self.genuine_matches(t);
        RatesAtThreshold::from_counts(self.impostor_matches(t), fnm, self.impostor.len(), ng, t)
    }

    pub fn rates_at(&self, t: f64) -> Result<RatesAtThreshold> {
        self.require_both()?;
        if t.is_nan() {
            return Err(Error::NonFinite(t));
        }
        Ok(self.rates_unchecked(t))
    }

    /// Sorted distinct observed distances.
    pub fn candidates(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.genuine.len() + self.impostor.len());
        let (mut i, mut j) = (0, 0);
        while i < self.genuine.len() || j < self.impostor.len() {
            let next = match (self.genuine.get(i), self.impostor.get(j)) {
                (Some(&g), Some(&m)) if g <= m => {
                    i += 1;
                    g
                }
                (Some(_), Some(&m)) => {
                    j += 1;
                    m
                }
                (Some(&g), None) => {
                    i += 1;
                    g
                }
                (None, Some(&m)) => {
                    j += 1;
                    m
                }
                (None, None) => unreachable!(),
            };
            if out.last() != Some(&next) {
                out.push(next);
            }
        }
        out
    }

    /// Smallest candidate threshold whose TMR reaches `target_tmr`.
    pub fn threshold_at_tmr(&self, target_tmr: f64) -> Result<OperatingPoint> {
        self.require_both()?;
        check_unit("target TMR", target_tmr)?;
        let cands = self.candidates();
        let idx = cands.partition_point(|&c| self.rates_unchecked(c).tmr < target_tmr);
        let threshold = *cands.get(idx).ok_or(Error::Unreachable {
            what: "TMR",
            target: target_tmr,
        })?;
        let r = self.rates_unchecked(threshold);
        Ok(OperatingPoint {
            kind: OperatingKind::FmrAtTmr,
            target_rate: target_tmr,
            constraint_rate: r.tmr,
            achieved_rate: r.fmr,
            threshold,
        })
    }

    /// Largest candidate threshold whose TNMR still reaches `target_tnmr`.
    pub fn fnmr_at_tnmr(&self, target_tnmr: f64) -> Result<OperatingPoint> {
        self.require_both()?;
        check_unit("target TNMR", target_tnmr)?;
        let cands = self.candidates();
        let n_ok = cands.partition_point(|&c| self.rates_unchecked(c).tnmr >= target_tnmr);
        if n_ok == 0 {
            return Err(Error::Unreachable {
                what: "TNMR",
                target: target_tnmr,
            });
        }
        let threshold = cands[n_ok - 1];
        let r = self.rates_unchecked(threshold);
        Ok(OperatingPoint {
            kind: OperatingKind::FnmrAtTnmr,
            target_rate: target_tnmr,
            constraint_rate: r.tnmr,
            achieved_rate: r.fnmr,
            threshold,
        })
    }

    /// Candidate threshold minimising |FMR - FNMR|, smallest threshold on ties.
    pub fn eer(&self) -> Result<EerResult> {
        self.require_both()?;
        let ng = self.genuine.len();
        let ni = self.impostor.len();
        let mut best: Option<(u128, f64, usize, usize)> = None;
        let (mut gi, mut ii) = (0usize, 0usize);
        for c in self.candidates() {
            while gi < ng && self.genuine[gi] <= c {
                gi += 1;
            }
            while ii < ni && self.impostor[ii] <= c {
                ii += 1;
            }
            let fnm = ng - gi;
            // |fm/ni - fnm/ng| compared exactly via cross-multiplication
            let gap = (ii as u128 * ng as u128).abs_diff(fnm as u128 * ni as u128);
            if best.is_none_or(|(b, ..)| gap < b) {
                best = Some((gap, c, ii, fnm));
            }
        }
        let (_, threshold, fm, fnm) = best.expect("non-empty candidate set");
        let r = RatesAtThreshold::from_counts(fm, fnm, ni, ng, threshold);
        Ok(EerResult {
            eer: (r.fmr + r.fnmr) / 2.0,
            threshold,
            fmr_at_t: r.fmr,
            fnmr_at_t: r.fnmr,
        })
    }
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange {
            name,
            range: "[0, 1]",
            value: v,
        });
    }
    Ok(())
}

/// Immutable collection of comparisons.
#[derive(Clone, Debug, Default)]
pub struct ScoreDataset {
    pairs: Vec<PairRecord>,
    curve: RateCurve,
}

impl ScoreDataset {
    pub fn new(pairs: Vec<PairRecord>) -> Result<Self> {
        for p in &pairs {
            p.validate()?;
        }
        Ok(Self::from_valid(pairs))
    }

    fn from_valid(pairs: Vec<PairRecord>) -> Self {
        let mut genuine = Vec::new();
        let mut impostor = Vec::new();
        for p in &pairs {
            if p.is_genuine {
                genuine.push(p.distance);
            } else {
                impostor.push(p.distance);
            }
        }
        ScoreDataset {
            pairs,
            curve: RateCurve::new(genuine, impostor),
        }
    }

    /// Union of several datasets, in iteration order.
    pub fn pooled<'a>(parts: impl IntoIterator<Item = &'a ScoreDataset>) -> Self {
        let pairs = parts
            .into_iter()
            .flat_map(|d| d.pairs.iter().cloned())
            .collect();
        Self::from_valid(pairs)
    }

    pub fn pairs(&self) -> &[PairRecord] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn n_genuine(&self) -> usize {
        self.curve.genuine.len()
    }

    pub fn n_impostor(&self) -> usize {
        self.curve.impostor.len()
    }

    pub fn curve(&self) -> &RateCurve {
        &self.curve
    }

    pub fn groups(&self) -> BTreeSet<GroupId> {
        self.pairs
            .iter()
            .flat_map(|p| [p.group_a.clone(), p.group_b.clone()])
            .collect()
    }
}

impl PartialEq for ScoreDataset {
    fn eq(&self, other: &Self) -> bool {
        self.pairs == other.pairs
    }
}

pub fn euclidean_distance(e1: &[f64], e2: &[f64]) -> Result<f64> {
    if e1.len() != e2.len() {
        return Err(Error::Dimension {
            left: e1.len(),
            right: e2.len(),
        });
    }
    if e1.is_empty() {
        return Err(Error::EmptyVector);
    }
    let mut sum = 0.0;
    for (&a, &b) in e1.iter().zip(e2) {
        if !a.is_finite() {
            return Err(Error::NonFinite(a));
        }
        if !b.is_finite() {
            return Err(Error::NonFinite(b));
        }
        sum += (a - b) * (a - b);
    }
    Ok(sum.sqrt())
}

pub fn rates_at_threshold(ds: &ScoreDataset, t: f64) -> Result<RatesAtThreshold> {
    ds.curve.rates_at(t)
}

pub fn threshold_at_tmr(ds: &ScoreDataset, target_tmr: f64) -> Result<OperatingPoint> {
    ds.curve.threshold_at_tmr(target_tmr)
}

pub fn fnmr_at_tnmr(ds: &ScoreDataset, target_tnmr: f64) -> Result<OperatingPoint> {
    ds.curve.fnmr_at_tnmr(target_tnmr)
}

pub fn eer(ds: &ScoreDataset) -> Result<EerResult> {
    ds.curve.eer()
}

/// Splits `ds` into per-group within-demographic subsets. Cross-group
/// impostor pairs land in no subset. Every declared group gets an entry.
pub fn partition_by_group(
    ds: &ScoreDataset,
    groups: &BTreeSet<GroupId>,
) -> Result<BTreeMap<GroupId, ScoreDataset>> {
    let mut buckets: BTreeMap<GroupId, Vec<PairRecord>> =
        groups.iter().map(|g| (g.clone(), Vec::new())).collect();
    for p in ds.pairs() {
        for g in [&p.group_a, &p.group_b] {
            if !groups.contains(g) {
                return Err(Error::UnknownGroup(g.to_string()));
            }
        }
        if p.is_wdi() {
            buckets
                .get_mut(&p.group_a)
                .expect("declared group")
                .push(p.clone());
        }
    }
    Ok(buckets
        .into_iter()
        .map(|(g, pairs)| (g, ScoreDataset::from_valid(pairs)))
        .collect())
}
