//! Hill-climbing synthesis of score datasets with prescribed operating
//! points, and composition of biased multi-group scenarios.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verify::{GroupId, OperatingKind, OperatingPoint, PairRecord, RateCurve, ScoreDataset};

pub const DEFAULT_MAX_ITERS: usize = 1000;
pub const DEFAULT_STEP_SCALE: f64 = 0.1;
pub const DEFAULT_MOVES: usize = 10;

const TAG_INIT: u64 = 0x1;
const TAG_CLIMB: u64 = 0x2;
const TAG_GLOBAL_INIT: u64 = 0x3;
const TAG_GLOBAL_CLIMB: u64 = 0x4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a tag path into an independent stream seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(seed), |h, &t| splitmix64(h ^ t))
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Which error rate carries the disadvantage in a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    FmrBiased,
    FnmrBiased,
}

impl ErrorMode {
    pub fn kind(self) -> OperatingKind {
        match self {
            ErrorMode::FmrBiased => OperatingKind::FmrAtTmr,
            ErrorMode::FnmrBiased => OperatingKind::FnmrAtTnmr,
        }
    }

    fn tag(self) -> u64 {
        match self {
            ErrorMode::FmrBiased => 0,
            ErrorMode::FnmrBiased => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthTarget {
    pub kind: OperatingKind,
    /// TMR (or TNMR) to hold.
    pub target_constraint: f64,
    /// FMR (or FNMR) to reach at that constraint.
    pub target_error: f64,
    pub n_genuine: usize,
    pub n_impostor: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Standard deviation of the Gaussian move applied to each picked distance.
    pub step_scale: f64,
    /// Distances perturbed per proposal.
    pub moves: usize,
}

impl SynthTarget {
    pub fn new(
        kind: OperatingKind,
        target_constraint: f64,
        target_error: f64,
        n_genuine: usize,
        n_impostor: usize,
        seed: u64,
    ) -> Self {
        SynthTarget {
            kind,
            target_constraint,
            target_error,
            n_genuine,
            n_impostor,
            seed,
            max_iters: DEFAULT_MAX_ITERS,
            step_scale: DEFAULT_STEP_SCALE,
            moves: DEFAULT_MOVES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("target constraint", self.target_constraint),
            ("target error", self.target_error),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::OutOfRange {
                    name,
                    range: "(0, 1)",
                    value: v,
                });
            }
        }
        if self.n_genuine == 0 || self.n_impostor == 0 {
            return Err(Error::EmptyClass {
                genuine: self.n_genuine,
                impostor: self.n_impostor,
            });
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(Error::OutOfRange {
                name: "step scale",
                range: "(0, inf)",
                value: self.step_scale,
            });
        }
        if self.moves == 0 {
            return Err(Error::OutOfRange {
                name: "moves",
                range: "[1, inf)",
                value: 0.0,
            });
        }
        Ok(())
    }

    /// Count resolution of the error and constraint rates.
    fn resolutions(&self) -> (f64, f64) {
        let ng = 1.0 / self.n_genuine as f64;
        let ni = 1.0 / self.n_impostor as f64;
        match self.kind {
            OperatingKind::FmrAtTmr => (ni, ng),
            OperatingKind::FnmrAtTnmr => (ng, ni),
        }
    }

    fn score(&self, achieved_error: f64, achieved_constraint: f64) -> f64 {
        (achieved_error - self.target_error).abs() + (achieved_constraint - self.target_constraint).abs()
    }
}

/// Genuine and impostor distances in generation order.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

impl Candidate {
    pub fn curve(&self) -> RateCurve {
        RateCurve::new(self.genuine.clone(), self.impostor.clone())
    }

    /// Every pair labeled as a within-group pair of `group`.
    pub fn to_dataset(&self, group: &GroupId) -> ScoreDataset {
        let pairs = self
            .genuine
            .iter()
            .map(|&d| (d, true))
            .chain(self.impostor.iter().map(|&d| (d, false)))
            .map(|(distance, is_genuine)| PairRecord {
                distance,
                is_genuine,
                group_a: group.clone(),
                group_b: group.clone(),
            })
            .collect();
        ScoreDataset::new(pairs).expect("synthesized distances lie in [0, 1]")
    }

    /// Global labeling: genuine pairs spread round-robin over groups,
    /// impostor pairs round-robin over distinct ordered group pairs.
    pub fn to_global_dataset(&self, groups: &[GroupId]) -> Result<ScoreDataset> {
        if groups.is_empty() {
            return Err(Error::TooFewGroups { needed: 1, got: 0 });
        }
        let mut cross = Vec::new();
        for a in groups {
            for b in groups {
                if a != b {
                    cross.push((a, b));
                }
            }
        }
        if cross.is_empty() {
            cross.push((&groups[0], &groups[0]));
        }
        let mut pairs = Vec::with_capacity(self.genuine.len() + self.impostor.len());
        for (j, &d) in self.genuine.iter().enumerate() {
            let g = &groups[j % groups.len()];
            pairs.push(PairRecord {
                distance: d,
                is_genuine: true,
                group_a: g.clone(),
                group_b: g.clone(),
            });
        }
        for (j, &d) in self.impostor.iter().enumerate() {
            let (a, b) = cross[j % cross.len()];
            pairs.push(PairRecord {
                distance: d,
                is_genuine: false,
                group_a: a.clone(),
                group_b: b.clone(),
            });
        }
        ScoreDataset::new(pairs)
    }
}

/// Genuine distances uniform in [0, 0.5], impostor distances in [0.5, 1].
pub fn init_candidate<R: Rng + ?Sized>(t: &SynthTarget, rng: &mut R) -> Candidate {
    let genuine = (0..t.n_genuine).map(|_| rng.random_range(0.0..=0.5)).collect();
    let impostor = (0..t.n_impostor).map(|_| rng.random_range(0.5..=1.0)).collect();
    Candidate { genuine, impostor }
}

/// Operating point of `c` in the target's mode, through the rate machinery.
pub fn operating_point(c: &Candidate, t: &SynthTarget) -> Result<OperatingPoint> {
    let curve = c.curve();
    match t.kind {
        OperatingKind::FmrAtTmr => curve.threshold_at_tmr(t.target_constraint),
        OperatingKind::FnmrAtTnmr => curve.fnmr_at_tnmr(t.target_constraint),
    }
}

pub fn fitness(c: &Candidate, t: &SynthTarget) -> Result<f64> {
    let op = operating_point(c, t)?;
    Ok(t.score(op.achieved_rate, op.constraint_rate))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub initial_fitness: f64,
    pub final_fitness: f64,
    pub iterations: usize,
    pub accepted: usize,
    /// Error and constraint rates each within one count of their targets.
    pub converged: bool,
    pub achieved: OperatingPoint,
    /// Retained fitness after each iteration.
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ClimbResult {
    pub candidate: Candidate,
    pub report: ConvergenceReport,
}

pub fn hill_climb(t: &SynthTarget) -> Result<ClimbResult> {
    t.validate()?;
    let init = init_candidate(t, &mut seeded_rng(derive_seed(t.seed, &[TAG_INIT])));
    hill_climb_from(t, init, derive_seed(t.seed, &[TAG_CLIMB]))
}

/// Climbs from a given start candidate using the stream seeded by `climb_seed`.
///
/// Only the error-side class moves (impostors when chasing FMR, genuines
/// when chasing FNMR). The constraint-side class stays fixed, so the
/// constraint rate and the counting cut-off are invariant and each proposal
/// is scored by updating one integer count.
pub fn hill_climb_from(t: &SynthTarget, init: Candidate, climb_seed: u64) -> Result<ClimbResult> {
    t.validate()?;
    if init.genuine.len() != t.n_genuine || init.impostor.len() != t.n_impostor {
        return Err(Error::InvalidScenario(format!(
            "start candidate has {}:{} pairs, target wants {}:{}",
            init.genuine.len(),
            init.impostor.len(),
            t.n_genuine,
            t.n_impostor
        )));
    }
    let start = operating_point(&init, t)?;
    let initial_fitness = t.score(start.achieved_rate, start.constraint_rate);
    let mut cand = init;

    let (movable, n_err, counted): (&mut Vec<f64>, usize, Box<dyn Fn(f64) -> bool>) = match t.kind {
        OperatingKind::FmrAtTmr => {
            let cut = start.threshold;
            (&mut cand.impostor, t.n_impostor, Box::new(move |d| d <= cut))
        }
        OperatingKind::FnmrAtTnmr => {
            let mut imp = cand.impostor.clone();
            imp.sort_unstable_by(f64::total_cmp);
            let matched = imp.partition_point(|&d| d <= start.threshold);
            // first impostor above the threshold; genuines at or beyond it are rejected
            let cut = imp[matched];
            (&mut cand.genuine, t.n_genuine, Box::new(move |d| d >= cut))
        }
    };

    let mut count = movable.iter().filter(|&&d| counted(d)).count();
    let mut best = initial_fitness;
    let noise = Normal::new(0.0, t.step_scale).expect("validated step scale");
    let mut rng = seeded_rng(climb_seed);
    let k = t.moves.min(movable.len());
    let mut proposal: Vec<(usize, f64)> = Vec::with_capacity(k);
    let mut trace = Vec::with_capacity(t.max_iters);
    let mut accepted = 0;

    for _ in 0..t.max_iters {
        if best == 0.0 {
            break;
        }
        proposal.clear();
        let mut next = count as i64;
        for i in index::sample(&mut rng, movable.len(), k) {
            let old = movable[i];
            let new = (old + noise.sample(&mut rng)).clamp(0.0, 1.0);
            next += counted(new) as i64 - counted(old) as i64;
            proposal.push((i, new));
        }
        let f = t.score(next as f64 / n_err as f64, start.constraint_rate);
        if f < best {
            for &(i, v) in &proposal {
                movable[i] = v;
            }
            count = next as usize;
            best = f;
            accepted += 1;
        }
        trace.push(best);
    }

    let achieved = operating_point(&cand, t)?;
    let final_fitness = t.score(achieved.achieved_rate, achieved.constraint_rate);
    debug_assert_eq!(final_fitness, best);
    let (err_res, cons_res) = t.resolutions();
    let slack = 1.0 + 1e-9;
    let converged = (achieved.achieved_rate - t.target_error).abs() <= err_res * slack
        && (achieved.constraint_rate - t.target_constraint).abs() <= cons_res * slack;
    Ok(ClimbResult {
        candidate: cand,
        report: ConvergenceReport {
            initial_fitness,
            final_fitness,
            iterations: trace.len(),
            accepted,
            converged,
            achieved,
            trace,
        },
    })
}

/// Ordered disadvantage factors, one per group, written `1:1:1:2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatioList(pub Vec<u32>);

impl RatioList {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for RatioList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(":")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl FromStr for RatioList {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Ok(RatioList(Vec::new()));
        }
        let xs = s
            .split(':')
            .map(|p| match p.trim().parse::<u32>() {
                Ok(x) if x >= 1 => Ok(x),
                _ => Err(Error::InvalidScenario(format!("bad ratio {p:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RatioList(xs))
    }
}

impl Serialize for RatioList {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RatioList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Target for the global WDI + CDI dataset; shares the scenario's constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalSpec {
    pub n_genuine: usize,
    pub n_impostor: usize,
    pub target_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub ratios: RatioList,
    pub error_mode: ErrorMode,
    /// Error rate of an x = 1 group.
    pub base_error: f64,
    pub target_constraint: f64,
    pub n_genuine: usize,
    pub n_impostor: usize,
    pub global: GlobalSpec,
    pub seed: u64,
    /// Share one synthesized dataset per (x, counts, mode) across scenarios.
    pub reuse: bool,
    pub max_iters: usize,
    pub step_scale: f64,
    pub moves: usize,
}

impl ScenarioSpec {
    /// 3000:3000 per group at 0.95 constraint with base error 0.001, and a
    /// 12000:600000 global set at error 1e-4.
    pub fn standard(error_mode: ErrorMode, ratios: RatioList, seed: u64) -> Self {
        ScenarioSpec {
            ratios,
            error_mode,
            base_error: 0.001,
            target_constraint: 0.95,
            n_genuine: 3000,
            n_impostor: 3000,
            global: GlobalSpec {
                n_genuine: 12000,
                n_impostor: 600_000,
                target_error: 1e-4,
            },
            seed,
            reuse: true,
            max_iters: DEFAULT_MAX_ITERS,
            step_scale: DEFAULT_STEP_SCALE,
            moves: DEFAULT_MOVES,
        }
    }

    pub fn with_ratios(&self, ratios: RatioList) -> Self {
        ScenarioSpec {
            ratios,
            ..self.clone()
        }
    }

    pub fn group_ids(&self) -> Vec<GroupId> {
        (1..=self.ratios.len()).map(|i| GroupId::new(&format!("g{i}"))).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.ratios.is_empty() {
            return Err(Error::InvalidScenario("ratio list is empty".into()));
        }
        if self.ratios.0.contains(&0) {
            return Err(Error::InvalidScenario(format!("ratio below 1 in {}", self.ratios)));
        }
        for &x in &self.ratios.0 {
            self.group_target(x, 0).validate()?;
        }
        self.global_target(0).validate()
    }

    pub fn group_target(&self, x: u32, seed: u64) -> SynthTarget {
        SynthTarget {
            max_iters: self.max_iters,
            step_scale: self.step_scale,
            moves: self.moves,
            ..SynthTarget::new(
                self.error_mode.kind(),
                self.target_constraint,
                x as f64 * self.base_error,
                self.n_genuine,
                self.n_impostor,
                seed,
            )
        }
    }

    pub fn global_target(&self, seed: u64) -> SynthTarget {
        SynthTarget {
            max_iters: self.max_iters,
            step_scale: self.step_scale,
            moves: self.moves,
            ..SynthTarget::new(
                self.error_mode.kind(),
                self.target_constraint,
                self.global.target_error,
                self.global.n_genuine,
                self.global.n_impostor,
                seed,
            )
        }
    }

    fn same_base(&self, other: &ScenarioSpec) -> bool {
        self.with_ratios(RatioList(Vec::new())) == other.with_ratios(RatioList(Vec::new()))
    }
}

/// Identity of one synthesized dataset within a plan.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKey {
    Group {
        mode: ErrorMode,
        x: u32,
        n_genuine: usize,
        n_impostor: usize,
    },
    Global {
        mode: ErrorMode,
        n_genuine: usize,
        n_impostor: usize,
    },
    /// Private dataset of one scenario slot when reuse is off; the global
    /// set takes the slot after the last group.
    Replica { scenario: usize, slot: usize },
}

#[derive(Clone, Debug)]
pub struct SynthJob {
    pub key: DatasetKey,
    pub target: SynthTarget,
    pub init_seed: u64,
}

#[derive(Clone, Debug)]
pub struct ScenarioSlots {
    /// Job index per group, in ratio order.
    pub groups: Vec<usize>,
    pub global: usize,
}

/// Assignment of scenario groups to synthesis jobs.
#[derive(Clone, Debug)]
pub struct ReusePlan {
    pub jobs: Vec<SynthJob>,
    pub scenarios: Vec<ScenarioSlots>,
}

/// Builds the dataset assignment for a suite. With reuse, groups asking
/// for the same (x, counts, mode) share one job, and every group job of a
/// suite starts from the same initial candidate so datasets for different
/// x differ only through their climbs.
pub fn reuse_plan(specs: &[ScenarioSpec]) -> Result<ReusePlan> {
    let Some(first) = specs.first() else {
        return Ok(ReusePlan {
            jobs: Vec::new(),
            scenarios: Vec::new(),
        });
    };
    for (i, s) in specs.iter().enumerate() {
        s.validate().map_err(|e| e.in_row(&s.ratios.to_string()))?;
        if !s.same_base(first) {
            return Err(Error::Plan(format!(
                "scenario {i} ({}) differs from scenario 0 in base parameters",
                s.ratios
            )));
        }
    }
    let seed = first.seed;
    let mode = first.error_mode;
    let mut jobs: Vec<SynthJob> = Vec::new();
    let mut index_of: HashMap<DatasetKey, usize> = HashMap::new();
    let mut intern = |key: DatasetKey, make: &dyn Fn() -> (SynthTarget, u64)| -> usize {
        *index_of.entry(key.clone()).or_insert_with(|| {
            let (target, init_seed) = make();
            jobs.push(SynthJob { key, target, init_seed });
            jobs.len() - 1
        })
    };

    let mut scenarios = Vec::with_capacity(specs.len());
    for (si, spec) in specs.iter().enumerate() {
        let (ng, ni) = (spec.n_genuine as u64, spec.n_impostor as u64);
        let (gg, gi) = (spec.global.n_genuine as u64, spec.global.n_impostor as u64);
        let mut groups = Vec::with_capacity(spec.ratios.len());
        for (slot, &x) in spec.ratios.0.iter().enumerate() {
            let job = if spec.reuse {
                let key = DatasetKey::Group {
                    mode,
                    x,
                    n_genuine: spec.n_genuine,
                    n_impostor: spec.n_impostor,
                };
                intern(key, &|| {
                    let climb = derive_seed(seed, &[TAG_CLIMB, mode.tag(), x as u64, ng, ni]);
                    let init = derive_seed(seed, &[TAG_INIT, mode.tag(), ng, ni]);
                    (spec.group_target(x, climb), init)
                })
            } else {
                let key = DatasetKey::Replica { scenario: si, slot };
                intern(key, &|| {
                    let tags = [si as u64, slot as u64];
                    let climb = derive_seed(seed, &[TAG_CLIMB, tags[0], tags[1]]);
                    let init = derive_seed(seed, &[TAG_INIT, tags[0], tags[1]]);
                    (spec.group_target(x, climb), init)
                })
            };
            groups.push(job);
        }
        let global = if spec.reuse {
            let key = DatasetKey::Global {
                mode,
                n_genuine: spec.global.n_genuine,
                n_impostor: spec.global.n_impostor,
            };
            intern(key, &|| {
                let climb = derive_seed(seed, &[TAG_GLOBAL_CLIMB, mode.tag(), gg, gi]);
                let init = derive_seed(seed, &[TAG_GLOBAL_INIT, mode.tag(), gg, gi]);
                (spec.global_target(climb), init)
            })
        } else {
            let slot = spec.ratios.len();
            intern(DatasetKey::Replica { scenario: si, slot }, &|| {
                let climb = derive_seed(seed, &[TAG_GLOBAL_CLIMB, si as u64]);
                let init = derive_seed(seed, &[TAG_GLOBAL_INIT, si as u64]);
                (spec.global_target(climb), init)
            })
        };
        scenarios.push(ScenarioSlots { groups, global });
    }
    Ok(ReusePlan { jobs, scenarios })
}

/// Runs every job of a plan, in parallel, returning results in job order.
pub fn synthesize(plan: &ReusePlan) -> Result<Vec<Arc<ClimbResult>>> {
    plan.jobs
        .par_iter()
        .map(|job| {
            let init = init_candidate(&job.target, &mut seeded_rng(job.init_seed));
            hill_climb_from(&job.target, init, job.target.seed).map(Arc::new)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ScenarioBundle {
    pub spec: ScenarioSpec,
    /// Within-group data only.
    pub per_group: BTreeMap<GroupId, Arc<ScoreDataset>>,
    /// WDI + CDI mixture.
    pub global: Arc<ScoreDataset>,
    pub achieved: BTreeMap<GroupId, OperatingPoint>,
    pub global_achieved: OperatingPoint,
    /// One entry per unconverged climb.
    pub flags: Vec<String>,
}

fn unconverged_flag(name: &str, r: &ConvergenceReport, t: &SynthTarget) -> Option<String> {
    (!r.converged).then(|| {
        format!(
            "unconverged: {name} reached error {} at constraint {} (target {} at {})",
            r.achieved.achieved_rate, r.achieved.constraint_rate, t.target_error, t.target_constraint
        )
    })
}

pub fn compose_suite(specs: &[ScenarioSpec]) -> Result<Vec<ScenarioBundle>> {
    let plan = reuse_plan(specs)?;
    let results = synthesize(&plan)?;
    let mut globals: HashMap<(usize, usize), Arc<ScoreDataset>> = HashMap::new();
    let mut bundles = Vec::with_capacity(specs.len());
    for (spec, slots) in specs.iter().zip(&plan.scenarios) {
        let ids = spec.group_ids();
        let mut per_group = BTreeMap::new();
        let mut achieved = BTreeMap::new();
        let mut flags = Vec::new();
        for (id, &job) in ids.iter().zip(&slots.groups) {
            let res = &results[job];
            per_group.insert(id.clone(), Arc::new(res.candidate.to_dataset(id)));
            achieved.insert(id.clone(), res.report.achieved);
            flags.extend(unconverged_flag(id.as_str(), &res.report, &plan.jobs[job].target));
        }
        let gres = &results[slots.global];
        let global = match globals.get(&(slots.global, ids.len())) {
            Some(g) => g.clone(),
            None => {
                let g = Arc::new(gres.candidate.to_global_dataset(&ids)?);
                globals.insert((slots.global, ids.len()), g.clone());
                g
            }
        };
        flags.extend(unconverged_flag("global", &gres.report, &plan.jobs[slots.global].target));
        bundles.push(ScenarioBundle {
            spec: spec.clone(),
            per_group,
            global,
            achieved,
            global_achieved: gres.report.achieved,
            flags,
        });
    }
    Ok(bundles)
}

pub fn compose_scenario(spec: &ScenarioSpec) -> Result<ScenarioBundle> {
    Ok(compose_suite(std::slice::from_ref(spec))?.remove(0))
}
