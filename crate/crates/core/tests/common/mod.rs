#![allow(dead_code)]

use bvfair::verify::{GroupId, PairRecord, ScoreDataset};
use rand::Rng;

pub fn ds(genuine: &[f64], impostor: &[f64]) -> ScoreDataset {
    let g = GroupId::new("A");
    let pairs = genuine
        .iter()
        .map(|&d| (d, true))
        .chain(impostor.iter().map(|&d| (d, false)))
        .map(|(d, gen)| PairRecord::new(d, gen, g.clone(), g.clone()).unwrap())
        .collect();
    ScoreDataset::new(pairs).unwrap()
}

/// Random genuine / impostor distance lists, both non-empty, at most `max_pairs`
/// in total. Half the time distances come from a coarse grid to force ties.
pub fn random_lists<R: Rng>(rng: &mut R, max_pairs: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rng.random_range(2..=max_pairs);
    let ng = rng.random_range(1..n);
    let coarse = rng.random_bool(0.5);
    let draw = |r: &mut R| {
        if coarse {
            r.random_range(0..=20) as f64 / 20.0
        } else {
            r.random_range(0.0..=1.0)
        }
    };
    let g = (0..ng).map(|_| draw(rng)).collect();
    let i = (0..n - ng).map(|_| draw(rng)).collect();
    (g, i)
}

/// Brute-force counts (false matches, false non-matches) at threshold `t`.
pub fn counts(g: &[f64], i: &[f64], t: f64) -> (usize, usize) {
    let fm = i.iter().filter(|&&d| d <= t).count();
    let fnm = g.iter().filter(|&&d| d > t).count();
    (fm, fnm)
}

/// FMR, FNMR, TMR, TNMR by enumeration.
pub fn rates(g: &[f64], i: &[f64], t: f64) -> (f64, f64, f64, f64) {
    let (fm, fnm) = counts(g, i, t);
    let fmr = fm as f64 / i.len() as f64;
    let fnmr = fnm as f64 / g.len() as f64;
    (fmr, fnmr, 1.0 - fnmr, 1.0 - fmr)
}

pub fn all_distances(g: &[f64], i: &[f64]) -> Vec<f64> {
    g.iter().chain(i).copied().collect()
}

pub fn tmr_threshold(g: &[f64], i: &[f64], target: f64) -> Option<f64> {
    all_distances(g, i)
        .into_iter()
        .filter(|&c| rates(g, i, c).2 >= target)
        .min_by(f64::total_cmp)
}

pub fn tnmr_threshold(g: &[f64], i: &[f64], target: f64) -> Option<f64> {
    all_distances(g, i)
        .into_iter()
        .filter(|&c| rates(g, i, c).3 >= target)
        .max_by(f64::total_cmp)
}

/// EER threshold: minimum exact |FMR - FNMR| over every observed distance,
/// smallest distance on ties.
pub fn eer_threshold(g: &[f64], i: &[f64]) -> f64 {
    let gap = |c: f64| {
        let (fm, fnm) = counts(g, i, c);
        (fm as u128 * g.len() as u128).abs_diff(fnm as u128 * i.len() as u128)
    };
    let mut best: Option<(u128, f64)> = None;
    for c in all_distances(g, i) {
        let k = gap(c);
        match best {
            Some((b, t)) if k > b || (k == b && c >= t) => {}
            _ => best = Some((k, c)),
        }
    }
    best.unwrap().1
}

/// Compares every rate operation with enumeration on `n` random datasets.
/// Returns the first mismatch.
pub fn rate_oracle(n: usize, seed: u64) -> Result<(), String> {
    use bvfair::verify::{eer, fnmr_at_tnmr, rates_at_threshold, threshold_at_tmr};
    use bvfair::Error;

    let mut rng = bvfair::synth::seeded_rng(seed);
    for case in 0..n {
        let (g, i) = random_lists(&mut rng, 100);
        let d = ds(&g, &i);
        let ctx = |what: &str| format!("case {case} ({} genuine, {} impostor): {what}", g.len(), i.len());

        let mut probes = all_distances(&g, &i);
        probes.extend([-0.5, 0.0, 0.025, 0.5, 0.999, 1.0, 1.5]);
        probes.push(rng.random_range(0.0..1.0));
        for &t in &probes {
            let r = rates_at_threshold(&d, t).map_err(|e| ctx(&e.to_string()))?;
            if (r.fmr, r.fnmr, r.tmr, r.tnmr) != rates(&g, &i, t) {
                return Err(ctx(&format!("rates at {t}")));
            }
        }

        let mut targets = vec![0.0, 1.0, rng.random_range(0.0..=1.0)];
        targets.extend((0..=g.len()).map(|k| k as f64 / g.len() as f64));
        targets.extend((0..=i.len()).map(|k| k as f64 / i.len() as f64));
        for &target in &targets {
            let op = threshold_at_tmr(&d, target).map_err(|e| ctx(&e.to_string()))?;
            let want = tmr_threshold(&g, &i, target).ok_or_else(|| ctx("tmr oracle empty"))?;
            let (fmr, _, tmr, _) = rates(&g, &i, want);
            if (op.threshold, op.achieved_rate, op.constraint_rate) != (want, fmr, tmr) {
                return Err(ctx(&format!("threshold_at_tmr({target})")));
            }

            match (fnmr_at_tnmr(&d, target), tnmr_threshold(&g, &i, target)) {
                (Ok(op), Some(want)) => {
                    let (_, fnmr, _, tnmr) = rates(&g, &i, want);
                    if (op.threshold, op.achieved_rate, op.constraint_rate) != (want, fnmr, tnmr) {
                        return Err(ctx(&format!("fnmr_at_tnmr({target})")));
                    }
                }
                (Err(Error::Unreachable { .. }), None) => {}
                (got, want) => return Err(ctx(&format!("fnmr_at_tnmr({target}): {got:?} vs {want:?}"))),
            }
        }

        let e = eer(&d).map_err(|e| ctx(&e.to_string()))?;
        let t = eer_threshold(&g, &i);
        let (fmr, fnmr, ..) = rates(&g, &i, t);
        if (e.threshold, e.fmr_at_t, e.fnmr_at_t, e.eer) != (t, fmr, fnmr, (fmr + fnmr) / 2.0) {
            return Err(ctx("eer"));
        }
    }
    Ok(())
}
