//! Exhaustive best-response search for desk-scale instances.
//!
//! Enumerates every composition of the attack budget into
//! granularity-sized units over the nodes and returns the allocation
//! that drives the most reports negative. Intended as an independent
//! check of the round dynamics on small instances, not for production
//! sizes.

use super::{BudgetVector, GameError};

const MAX_NODES: usize = 8;
const MAX_UNITS: usize = 20;

/// Finds the attack allocation maximizing the number of reports driven
/// below zero utility, breaking ties toward the largest total damage
/// (most negative sum of clamped utilities), then toward the first
/// allocation in enumeration order.
pub fn brute_force_best_response(
    defense: &BudgetVector,
    attack_total: f64,
    granularity: f64,
) -> Result<BudgetVector, GameError> {
    let n = defense.len();
    if !(granularity > 0.0) {
        return Err(GameError::InvalidGranularity {
            total: attack_total,
            granularity,
        });
    }
    let units_f = attack_total / granularity;
    let units = units_f.round();
    if (units_f - units).abs() > 1e-9 {
        return Err(GameError::InvalidGranularity {
            total: attack_total,
            granularity,
        });
    }
    let units = units as usize;
    if n > MAX_NODES || units > MAX_UNITS {
        return Err(GameError::OracleTooLarge { nodes: n, units });
    }

    let mut best: Option<(usize, f64, Vec<usize>)> = None;
    let mut current = vec![0usize; n];
    enumerate(defense.amounts(), granularity, units, 0, &mut current, &mut best);

    let (_, _, allocation) = best.expect("at least the empty allocation is enumerated");
    let amounts: Vec<f64> = allocation.iter().map(|&u| u as f64 * granularity).collect();
    BudgetVector::new(amounts, attack_total)
}

fn enumerate(
    defense: &[f64],
    granularity: f64,
    remaining: usize,
    node: usize,
    current: &mut Vec<usize>,
    best: &mut Option<(usize, f64, Vec<usize>)>,
) {
    if node == defense.len() - 1 {
        current[node] = remaining;
        score(defense, granularity, current, best);
        current[node] = 0;
        return;
    }
    // Descending puts budget on lower indices first, so utility ties
    // resolve toward the lower node index.
    for units in (0..=remaining).rev() {
        current[node] = units;
        enumerate(defense, granularity, remaining - units, node + 1, current, best);
    }
    current[node] = 0;
}

fn score(
    defense: &[f64],
    granularity: f64,
    allocation: &[usize],
    best: &mut Option<(usize, f64, Vec<usize>)>,
) {
    let mut kills = 0usize;
    let mut damage = 0.0;
    for (i, &units) in allocation.iter().enumerate() {
        let u = defense[i] - units as f64 * granularity;
        if u < 0.0 {
            kills += 1;
            damage += u;
        }
    }
    let better = match best {
        None => true,
        Some((best_kills, best_damage, _)) => {
            kills > *best_kills || (kills == *best_kills && damage < *best_damage - 1e-15)
        }
    };
    if better {
        *best = Some((kills, damage, allocation.to_vec()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kills_exactly_one_with_tight_budget() {
        let defense = BudgetVector::new(vec![1.0, 1.0], 2.0).unwrap();
        let attack = brute_force_best_response(&defense, 1.2, 0.2).unwrap();
        let kills = attack
            .amounts()
            .iter()
            .zip(defense.amounts())
            .filter(|(y, x)| *x - *y < 0.0)
            .count();
        assert_eq!(kills, 1);
        // All budget lands on a single node; enumeration order prefers node 0.
        assert!((attack.amount(0) - 1.2).abs() < 1e-12);
        assert_eq!(attack.amount(1), 0.0);
    }

    #[test]
    fn zero_budget_kills_nothing() {
        let defense = BudgetVector::new(vec![0.5, 0.5], 1.0).unwrap();
        let attack = brute_force_best_response(&defense, 0.0, 0.25).unwrap();
        assert_eq!(attack.amounts(), &[0.0, 0.0]);
    }

    #[test]
    fn concentrates_on_the_weak_report() {
        let defense = BudgetVector::new(vec![0.5, 2.0], 2.5).unwrap();
        let attack = brute_force_best_response(&defense, 0.6, 0.2).unwrap();
        assert!(attack.amount(0) > 0.5, "attack = {:?}", attack.amounts());
        assert!(defense.amount(0) - attack.amount(0) < 0.0);
        assert!(defense.amount(1) - attack.amount(1) > 0.0);
    }

    #[test]
    fn rejects_oversized_instances() {
        let defense = BudgetVector::new(vec![1.0; 9], 9.0).unwrap();
        assert!(matches!(
            brute_force_best_response(&defense, 1.0, 0.25),
            Err(GameError::OracleTooLarge { .. })
        ));
        let defense = BudgetVector::new(vec![1.0; 4], 4.0).unwrap();
        assert!(matches!(
            brute_force_best_response(&defense, 10.0, 0.25),
            Err(GameError::OracleTooLarge { .. })
        ));
        assert!(matches!(
            brute_force_best_response(&defense, 1.1, 0.25),
            Err(GameError::InvalidGranularity { .. })
        ));
    }
}
