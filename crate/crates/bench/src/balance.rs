//! Per-configuration balancing of raw benchmark rows.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::BenchError;
use crate::records::{ResultRow, LMDP, POLMDP};

struct Pair<'a> {
    sample_id: usize,
    time: f64,
    polmdp: &'a ResultRow,
    lmdp: &'a ResultRow,
}

/// Keeps `quota` samples per configuration where both frameworks succeeded,
/// preferring the fastest pairs (pair time is the slower of the two). Pairs
/// tied at the cutoff time are chosen by a seeded shuffle.
pub fn balance_results(rows: &[ResultRow], quota: usize, seed: u64) -> Result<Vec<ResultRow>, BenchError> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, BTreeMap<usize, (Option<&ResultRow>, Option<&ResultRow>)>> = BTreeMap::new();
    for row in rows {
        let key = row.config_key();
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        let slot = groups.entry(key).or_default().entry(row.sample_id).or_default();
        match row.framework.as_str() {
            POLMDP => slot.0 = Some(row),
            LMDP => slot.1 = Some(row),
            other => return Err(BenchError::Config(format!("unknown framework '{other}'"))),
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(order.len() * quota * 2);
    for key in order {
        let mut pairs: Vec<Pair<'_>> = groups[&key]
            .iter()
            .filter_map(|(&sample_id, slot)| match *slot {
                (Some(p), Some(l)) if p.success && l.success => Some(Pair {
                    sample_id,
                    time: p.seconds.max(l.seconds),
                    polmdp: p,
                    lmdp: l,
                }),
                _ => None,
            })
            .collect();
        if pairs.len() < quota {
            return Err(BenchError::InsufficientSamples {
                config: key,
                available: pairs.len(),
                quota,
            });
        }
        pairs.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.sample_id.cmp(&b.sample_id)));
        let kept = if quota == 0 {
            Vec::new()
        } else {
            let cutoff = pairs[quota - 1].time;
            let below = pairs.iter().take_while(|p| p.time < cutoff).count();
            let mut tied: Vec<&Pair<'_>> = pairs.iter().filter(|p| p.time == cutoff).collect();
            tied.shuffle(&mut rng);
            let mut kept: Vec<&Pair<'_>> = pairs[..below].iter().collect();
            kept.extend(tied.into_iter().take(quota - below));
            kept.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.sample_id.cmp(&b.sample_id)));
            kept
        };
        for pair in kept {
            out.push(pair.polmdp.clone());
            out.push(pair.lmdp.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::STATE_SCALING;

    fn row(framework: &str, maze: &str, sample_id: usize, seconds: f64, success: bool) -> ResultRow {
        ResultRow {
            experiment: STATE_SCALING.into(),
            framework: framework.into(),
            maze: maze.into(),
            goals: 6,
            states: 100,
            sample_id,
            start: "0:0".into(),
            goal: "A".into(),
            success,
            seconds,
            leg_polmdp: None,
            leg_miura_kl: None,
            leg_miura_euclid: None,
            seed: 0,
            beta: 1.0,
            gamma: 0.9,
            eta: 1.0,
            notes: String::new(),
        }
    }

    fn paired(maze: &str, times: &[(f64, f64, bool)]) -> Vec<ResultRow> {
        times
            .iter()
            .enumerate()
            .flat_map(|(i, &(p, l, ok))| [row(POLMDP, maze, i, p, true), row(LMDP, maze, i, l, ok)])
            .collect()
    }

    #[test]
    fn full_quota_is_a_permutation() {
        let rows = paired("m", &[(0.3, 1.0, true), (0.1, 2.0, true), (0.2, 0.5, true)]);
        let mut out = balance_results(&rows, 3, 0).unwrap();
        let mut input = rows.clone();
        let key = |r: &ResultRow| (r.sample_id, r.framework.clone());
        out.sort_by_key(key);
        input.sort_by_key(key);
        assert_eq!(out, input);
    }

    #[test]
    fn quota_one_keeps_the_fastest_pair() {
        let rows = paired("m", &[(0.3, 1.0, true), (0.1, 2.0, true), (0.2, 0.5, true), (0.0, 0.1, false)]);
        let out = balance_results(&rows, 1, 0).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|r| r.sample_id == 2));
    }

    #[test]
    fn failures_are_excluded_and_shortfall_reported() {
        let rows = paired("m", &[(0.1, 0.1, false), (0.2, 0.2, true)]);
        match balance_results(&rows, 2, 0) {
            Err(BenchError::InsufficientSamples { available, quota, .. }) => assert_eq!((available, quota), (1, 2)),
            other => panic!("expected shortfall, got {other:?}"),
        }
    }

    #[test]
    fn ties_at_the_cutoff_are_seeded() {
        let rows = paired("m", &[(1.0, 1.0, true); 6]);
        let a = balance_results(&rows, 3, 9).unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(a, balance_results(&rows, 3, 9).unwrap());
    }

    #[test]
    fn each_configuration_gets_its_own_quota() {
        let mut rows = paired("a", &[(0.1, 0.1, true), (0.2, 0.2, true), (0.3, 0.3, true)]);
        rows.extend(paired("b", &[(0.5, 0.1, true), (0.2, 0.2, true)]));
        let out = balance_results(&rows, 2, 0).unwrap();
        assert_eq!(out.len(), 8);
        assert_eq!(out.iter().filter(|r| r.maze == "a").count(), 4);
    }
}
