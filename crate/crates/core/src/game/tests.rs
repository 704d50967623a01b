use std::collections::HashSet;

use super::*;

fn statuses(n: usize) -> Vec<NodeStatus> {
    vec![NodeStatus::default(); n]
}

fn vector(amounts: &[f64]) -> BudgetVector {
    let total = amounts.iter().sum::<f64>();
    BudgetVector::new(amounts.to_vec(), total).unwrap()
}

// ---------------------------------------------------------------------------
// Budget vectors
// ---------------------------------------------------------------------------

#[test]
fn budget_vector_invariants() {
    assert!(BudgetVector::new(vec![0.5, -0.1], 1.0).is_err());
    assert!(BudgetVector::new(vec![0.7, 0.7], 1.0).is_err());
    let v = BudgetVector::equal_split(20.0, 50);
    assert!((v.allocated() - 20.0).abs() < 1e-9);
    assert_eq!(v.amount(7), 0.4);
}

#[test]
fn transfer_conserves_and_truncates() {
    let mut v = vector(&[1.0, 0.2, 0.0]);
    let before = v.allocated();
    let moved = v.transfer(1, 2, 0.5).unwrap();
    assert_eq!(moved, 0.2);
    assert_eq!(v.amount(1), 0.0);
    assert!((v.allocated() - before).abs() < 1e-12);
    assert!(v.transfer(0, 5, 0.1).is_err());
}

// ---------------------------------------------------------------------------
// Utilities and classification
// ---------------------------------------------------------------------------

#[test]
fn utilities_are_budget_differences() {
    let u = compute_utilities(&vector(&[0.5]), &vector(&[0.3])).unwrap();
    assert_eq!(u, vec![0.2]);
    let x = vector(&[0.4, 0.4]);
    assert_eq!(compute_utilities(&x, &x).unwrap(), vec![0.0, 0.0]);
    let u = compute_utilities(&vector(&[0.4, 0.4]), &vector(&[0.1, 0.6])).unwrap();
    assert!((u[0] - 0.3).abs() < 1e-15 && (u[1] + 0.2).abs() < 1e-15);
    assert!(matches!(
        compute_utilities(&vector(&[1.0]), &vector(&[0.5, 0.5])),
        Err(GameError::DimensionMismatch { .. })
    ));
}

#[test]
fn first_negative_is_suspected_second_is_malicious() {
    let mut s = statuses(1);
    classify_nodes(&mut s, &[-0.1], &[]);
    assert_eq!(s[0].state, NodeState::SuspectedHwFailure);
    assert_eq!(s[0].negative_streak, 1);
    classify_nodes(&mut s, &[-0.1], &[]);
    assert_eq!(s[0].state, NodeState::Malicious);
    assert!(s[0].negative_streak >= 2);
}

#[test]
fn recovery_resets_the_streak() {
    let mut s = statuses(1);
    classify_nodes(&mut s, &[-0.1], &[]);
    classify_nodes(&mut s, &[0.2], &[]);
    assert_eq!(s[0].state, NodeState::Benevolent);
    assert_eq!(s[0].negative_streak, 0);
    assert!(s[0].ever_negative);
    // A later, non-consecutive negative round is a suspected fault again.
    classify_nodes(&mut s, &[-0.1], &[]);
    assert_eq!(s[0].state, NodeState::SuspectedHwFailure);
}

#[test]
fn positive_nodes_stay_benevolent_and_malicious_is_absorbing() {
    let mut s = statuses(2);
    for _ in 0..5 {
        classify_nodes(&mut s, &[0.2, -0.3], &[]);
    }
    assert_eq!(s[0].state, NodeState::Benevolent);
    assert_eq!(s[1].state, NodeState::Malicious);
    classify_nodes(&mut s, &[0.2, 10.0], &[]);
    assert_eq!(s[1].state, NodeState::Malicious);
}

#[test]
fn forced_negative_round_marks_suspected() {
    let mut s = statuses(1);
    classify_nodes(&mut s, &[0.5], &[0]);
    assert_eq!(s[0].state, NodeState::SuspectedHwFailure);
    classify_nodes(&mut s, &[0.5], &[]);
    assert_eq!(s[0].state, NodeState::Benevolent);
}

// ---------------------------------------------------------------------------
// List partitioning
// ---------------------------------------------------------------------------

#[test]
fn partition_splits_at_the_boundary() {
    let s = statuses(3);
    let (sl, wl) = partition_lists(&[0.5, 0.05, 0.2], &s, 0.1).unwrap();
    assert_eq!(sl, vec![0, 2]);
    assert_eq!(wl, vec![1]);
}

#[test]
fn partition_with_everything_strong_leaves_weak_empty() {
    let s = statuses(2);
    let (sl, wl) = partition_lists(&[0.5, 0.4], &s, 0.1).unwrap();
    assert_eq!(wl, Vec::<usize>::new());
    assert_eq!(sl, vec![0, 1]);
}

#[test]
fn partition_breaks_ties_toward_lower_index() {
    let s = statuses(2);
    let (sl, _) = partition_lists(&[0.3, 0.3], &s, 0.1).unwrap();
    assert_eq!(sl[0], 0);
}

#[test]
fn partition_boundary_utility_is_weak() {
    let s = statuses(2);
    let (sl, wl) = partition_lists(&[0.1, 0.3], &s, 0.1).unwrap();
    assert_eq!(wl, vec![0]);
    assert_eq!(sl, vec![1]);
}

#[test]
fn partition_signals_total_compromise() {
    let mut s = statuses(1);
    s[0].state = NodeState::Malicious;
    assert!(matches!(
        partition_lists(&[0.1], &s, 0.1),
        Err(GameError::TotalCompromise)
    ));
}

// ---------------------------------------------------------------------------
// Redistribution
// ---------------------------------------------------------------------------

#[test]
fn defender_tops_up_one_weak_report() {
    let mut defense = vector(&[1.0, 0.05]);
    let s = statuses(2);
    let u = [1.0, 0.05];
    let (transfers, partial) =
        defender_redistribute(&mut defense, &u, &s, &[1], 0.1, 1);
    assert!(!partial);
    assert_eq!(transfers.len(), 1);
    assert!((defense.amount(0) - 0.9).abs() < 1e-12);
    assert!((defense.amount(1) - 0.15).abs() < 1e-12);
}

#[test]
fn defender_with_empty_weak_list_is_a_no_op() {
    let mut defense = vector(&[1.0, 0.9]);
    let before = defense.clone();
    let (transfers, partial) =
        defender_redistribute(&mut defense, &[1.0, 0.9], &statuses(2), &[], 0.1, 1);
    assert!(transfers.is_empty() && !partial);
    assert_eq!(defense, before);
}

#[test]
fn defender_rotates_donors_as_the_top_drops() {
    // Donors at 1.0 and 0.95; after one transfer the former top holds 0.9,
    // so the second transfer comes from the 0.95 report.
    let mut defense = vector(&[1.0, 0.95, 0.05, 0.05, 0.05]);
    let u = [1.0, 0.95, 0.05, 0.05, 0.05];
    let s = statuses(5);
    let (transfers, partial) =
        defender_redistribute(&mut defense, &u, &s, &[2, 3, 4], 0.1, 1);
    assert!(!partial);
    assert_eq!(transfers.len(), 3);
    assert_eq!(transfers[0].from, 0);
    assert_eq!(transfers[1].from, 1);
    assert_eq!(transfers[2].from, 0);
    let total: f64 = defense.amounts().iter().sum();
    assert!((total - 2.1).abs() < 1e-12);
}

#[test]
fn defender_flags_partial_when_donors_run_dry() {
    // No report above the boundary: nothing can fund the weak list.
    let mut defense = vector(&[0.05, 0.05]);
    let (transfers, partial) =
        defender_redistribute(&mut defense, &[0.05, 0.05], &statuses(2), &[0, 1], 0.1, 1);
    assert!(partial);
    assert!(transfers.is_empty());
}

#[test]
fn defender_recovers_negative_reports_within_depth() {
    let mut defense = vector(&[1.0, 0.3]);
    let mut s = statuses(2);
    s[1].state = NodeState::SuspectedHwFailure;
    let u = [1.0, -0.04]; // attack holds node 1 just below zero
    let (transfers, _) = defender_redistribute(&mut defense, &u, &s, &[1], 0.1, 1);
    assert_eq!(transfers.len(), 1);
    assert!(u[1] + transfers[0].amount > 0.0);
}

#[test]
fn attacker_moves_exactly_the_kill_amount() {
    let mut attack = vector(&[0.0, 2.0]);
    let u = [0.1, 1.9];
    let (transfers, partial) =
        attacker_redistribute(&mut attack, &u, &statuses(2), &[0], 0.2, 0.05);
    assert!(!partial);
    assert_eq!(transfers.len(), 1);
    assert!((attack.amount(1) - 1.85).abs() < 1e-12);
    assert!((attack.amount(0) - 0.15).abs() < 1e-12);
}

#[test]
fn attacker_zero_increment_is_a_no_op() {
    let mut attack = vector(&[0.0, 1.0]);
    let before = attack.clone();
    let u = [0.0, 1.0];
    let (transfers, _) = attacker_redistribute(&mut attack, &u, &statuses(2), &[0], 0.2, 0.0);
    assert!(transfers.is_empty());
    assert_eq!(attack, before);
}

#[test]
fn attacker_truncates_when_the_pool_runs_out() {
    // Weak reports at 0.1 and 0.2, alpha 0.05, one strong donor holding
    // 0.2: the first kill (0.15) completes, the second gets the leftover.
    let mut attack = vector(&[0.0, 0.0, 0.2]);
    let u = [0.1, 0.2, 0.8];
    let (transfers, partial) =
        attacker_redistribute(&mut attack, &u, &statuses(3), &[0, 1], 0.3, 0.05);
    assert!(partial);
    assert!((attack.amount(0) - 0.15).abs() < 1e-12);
    assert!((attack.amount(1) - 0.05).abs() < 1e-12);
    assert!(attack.amount(2).abs() < 1e-12);
    let moved: f64 = transfers.iter().map(|t| t.amount).sum();
    assert!((moved - 0.2).abs() < 1e-12);
}

#[test]
fn attacker_budget_on_weak_reports_is_not_movable() {
    // The only attack mass sits on a weak report; no strong-list donor
    // exists, so the kill cannot be funded.
    let mut attack = vector(&[0.0, 0.5, 0.0]);
    let before = attack.clone();
    let u = [0.1, 0.15, 1.0];
    let (transfers, partial) =
        attacker_redistribute(&mut attack, &u, &statuses(3), &[0, 1], 0.2, 0.05);
    assert!(partial);
    assert!(transfers.is_empty());
    assert_eq!(attack, before);
}

#[test]
fn attacker_never_funds_from_or_targets_malicious_reports() {
    let mut attack = vector(&[0.0, 5.0, 1.0]);
    let mut s = statuses(3);
    s[1].state = NodeState::Malicious;
    let u = [0.1, -4.0, 1.0];
    let (transfers, _) = attacker_redistribute(&mut attack, &u, &s, &[0], 0.2, 0.05);
    for t in &transfers {
        assert_ne!(t.from, 1);
        assert_ne!(t.to, 1);
    }
    // The kill was funded from the live donor instead.
    assert!((attack.amount(2) - 0.85).abs() < 1e-12);
}

#[test]
fn attacker_skips_reports_already_observed_negative() {
    let mut attack = vector(&[0.5, 1.0]);
    let before = attack.clone();
    let mut s = statuses(2);
    s[0].state = NodeState::SuspectedHwFailure;
    let (transfers, _) =
        attacker_redistribute(&mut attack, &[-0.1, 1.0], &s, &[0], 0.2, 0.05);
    assert!(transfers.is_empty());
    assert_eq!(attack, before);
}

// ---------------------------------------------------------------------------
// Equilibrium detection
// ---------------------------------------------------------------------------

fn make_state(defense: &[f64], attack: &[f64], xi: f64, alpha: f64) -> GameState {
    let d = vector(defense);
    let a = BudgetVector::new(attack.to_vec(), attack.iter().sum()).unwrap();
    let utilities = compute_utilities(&d, &a).unwrap();
    GameState {
        round: 1,
        defense: d,
        attack: a,
        utilities,
        statuses: statuses(defense.len()),
        strong_list: Vec::new(),
        weak_list: Vec::new(),
        xi,
        alpha,
    }
}

#[test]
fn zero_attack_is_an_equilibrium_for_any_defense() {
    let state = make_state(&[0.0, 5.0, 0.2], &[0.0, 0.0, 0.0], 0.1, 0.025);
    assert!(is_nash_equilibrium(&state, 1));
}

#[test]
fn fundable_kill_of_a_weak_report_breaks_equilibrium() {
    let state = make_state(&[1.0, 0.05], &[0.0, 0.0], 0.1, 0.025);
    // Wait: the attacker holds nothing anywhere, so nothing is fundable.
    assert!(is_nash_equilibrium(&state, 1));
    let state = make_state(&[1.0, 0.05], &[0.5, 0.0], 0.1, 0.025);
    // 0.5 parked on the strong report funds the 0.075 kill of node 1.
    assert!(!is_nash_equilibrium(&state, 1));
}

#[test]
fn negative_report_in_play_is_never_at_rest() {
    // Node 1 sits at -0.04: recoverable by one top-up, so not settled.
    let mut state = make_state(&[1.0, 0.3], &[0.0, 0.34], 0.1, 0.025);
    state.statuses[1].state = NodeState::SuspectedHwFailure;
    assert!(!is_nash_equilibrium(&state, 1));
    // Deeply negative: exclusion is still pending, so not settled either.
    let mut state = make_state(&[1.0, 0.3], &[0.0, 0.8], 0.1, 0.025);
    state.statuses[1].state = NodeState::SuspectedHwFailure;
    assert!(!is_nash_equilibrium(&state, 1));
    // Once excluded, the stranded budget no longer blocks equilibrium.
    state.statuses[1].state = NodeState::Malicious;
    assert!(is_nash_equilibrium(&state, 1));
}

// ---------------------------------------------------------------------------
// Round driver
// ---------------------------------------------------------------------------

fn quiet_config(n: usize, x: f64, y: f64) -> GameConfig {
    let mut config = GameConfig::new(n, x, y);
    config.hw_failure_rate = 0.0;
    config
}

#[test]
fn no_attacker_means_immediate_equilibrium() {
    let outcome = run_to_equilibrium(quiet_config(10, 20.0, 0.0)).unwrap();
    assert!(outcome.converged);
    assert_eq!(outcome.rounds_to_equilibrium, Some(1));
    assert_eq!(outcome.final_state.protected_fraction(), 1.0);
}

#[test]
fn step_round_is_a_fixed_point_at_equilibrium() {
    let mut game = Game::new(quiet_config(10, 20.0, 0.0)).unwrap();
    let record = game.step_round().unwrap();
    assert!(record.equilibrium);
    let utilities = game.state.utilities.clone();
    let defense = game.state.defense.clone();
    let record = game.step_round().unwrap();
    assert!(record.equilibrium);
    assert!(record.transfers.is_empty());
    for (a, b) in utilities.iter().zip(&game.state.utilities) {
        assert!((a - b).abs() < 1e-9);
    }
    assert_eq!(defense, game.state.defense);
}

#[test]
fn concentrated_attack_excludes_the_target_and_spares_the_rest() {
    let mut config = quiet_config(2, 2.0, 3.0);
    config.initial_attack = Some(vec![3.0, 0.0]);
    config.max_rounds = 10;
    let outcome = run_to_equilibrium(config).unwrap();
    let statuses = &outcome.final_state.statuses;
    assert_eq!(statuses[0].state, NodeState::Malicious);
    assert_eq!(statuses[1].state, NodeState::Benevolent);
    assert!(outcome.converged);
}

#[test]
fn budget_totals_are_conserved_across_a_run() {
    let mut config = quiet_config(50, 20.0, 13.0);
    config.seed = 3;
    config.hw_failure_rate = 0.05;
    let mut game = Game::new(config).unwrap();
    let x0 = game.state.defense.allocated();
    let y0 = game.state.attack.allocated();
    for _ in 0..20 {
        game.step_round().unwrap();
    }
    assert!((game.state.defense.allocated() - x0).abs() < 1e-9);
    assert!((game.state.attack.allocated() - y0).abs() < 1e-9);
}

#[test]
fn malicious_set_grows_monotonically() {
    let mut config = quiet_config(50, 20.0, 17.0);
    config.seed = 11;
    let mut game = Game::new(config).unwrap();
    let mut previous: HashSet<usize> = HashSet::new();
    for _ in 0..20 {
        game.step_round().unwrap();
        let current: HashSet<usize> = (0..50)
            .filter(|&i| game.state.statuses[i].state == NodeState::Malicious)
            .collect();
        assert!(previous.is_subset(&current));
        previous = current;
    }
}

#[test]
fn attacker_transfers_never_target_malicious_reports() {
    let mut config = quiet_config(50, 20.0, 17.0);
    config.seed = 5;
    config.hw_failure_rate = 0.05;
    let mut game = Game::new(config).unwrap();
    for _ in 0..20 {
        let malicious_before: HashSet<usize> = (0..50)
            .filter(|&i| game.state.statuses[i].state == NodeState::Malicious)
            .collect();
        let record = game.step_round().unwrap();
        for t in record.transfers.iter().filter(|t| t.actor == Actor::Attacker) {
            assert!(!malicious_before.contains(&t.to));
        }
    }
}

#[test]
fn total_compromise_terminates_the_run() {
    // Two nodes, both overwhelmed from the start.
    let mut config = quiet_config(2, 0.2, 10.0);
    config.initial_attack = Some(vec![5.0, 5.0]);
    config.max_rounds = 10;
    let outcome = run_to_equilibrium(config).unwrap();
    assert!(outcome.converged);
    assert!(outcome.rounds.last().unwrap().total_compromise);
    assert_eq!(outcome.final_state.protected_fraction(), 0.0);
}

#[test]
fn trajectories_are_deterministic_per_seed() {
    let mut config = quiet_config(50, 20.0, 10.0);
    config.hw_failure_rate = 0.05;
    config.seed = 42;
    let a = run_to_equilibrium(config.clone()).unwrap();
    let b = run_to_equilibrium(config).unwrap();
    assert_eq!(a.rounds.len(), b.rounds.len());
    for (ra, rb) in a.rounds.iter().zip(&b.rounds) {
        assert_eq!(ra.utilities, rb.utilities);
        assert_eq!(ra.statuses, rb.statuses);
    }
}

#[test]
fn proposed_dominates_baselines_on_protection() {
    for &y in &[8.0, 10.0, 13.0, 17.0] {
        let mut mean = [0.0f64; 3];
        for seed in 0..100u64 {
            for (k, strategy) in [Strategy::Proposed, Strategy::Random, Strategy::EqualWeight]
                .iter()
                .enumerate()
            {
                let mut config = GameConfig::new(50, 20.0, y);
                config.seed = seed;
                config.strategy = *strategy;
                let outcome = run_to_equilibrium(config).unwrap();
                mean[k] += outcome.final_state.protected_fraction();
            }
        }
        assert!(
            mean[0] >= mean[1] && mean[0] >= mean[2],
            "Y = {y}: proposed {} random {} equal {}",
            mean[0] / 100.0,
            mean[1] / 100.0,
            mean[2] / 100.0,
        );
    }
}

#[test]
fn round_records_serialize_as_json_lines() {
    let mut config = quiet_config(3, 3.0, 1.0);
    config.max_rounds = 2;
    let outcome = run_to_equilibrium(config).unwrap();
    let line = serde_json::to_string(&outcome.rounds[0]).unwrap();
    for field in ["round", "utilities", "statuses", "transfers", "protected_fraction"] {
        assert!(line.contains(field), "missing {field} in {line}");
    }
}
