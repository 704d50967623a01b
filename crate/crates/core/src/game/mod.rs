//! Leader/follower budget game between the fusion center and the
//! report-falsification attacker.
//!
//! Each round both players observe the utilities that closed the previous
//! round and redistribute their power budgets: the defender tops up
//! weakly protected reports with `xi`-sized transfers drawn from its
//! strongest allocations, while the attacker gathers just enough budget
//! onto weak reports to drive their utility negative. Reports that stay
//! negative two rounds in a row are excluded as malicious; a single
//! negative round is treated as suspected hardware failure and may
//! recover. The loop runs until neither player has an improving move or
//! the round limit is hit.

mod oracle;

pub use oracle::brute_force_best_response;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("budget vectors cover different node counts ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("budget amounts must be nonnegative, got {amount} at node {node}")]
    NegativeAmount { node: usize, amount: f64 },
    #[error("allocated budget {allocated} exceeds the total {total}")]
    OverAllocated { allocated: f64, total: f64 },
    #[error("node index {0} out of range")]
    NodeOutOfRange(usize),
    #[error("every report is excluded: total compromise")]
    TotalCompromise,
    #[error("oracle instance too large: {nodes} nodes, {units} units (limits: 8 nodes, 20 units)")]
    OracleTooLarge { nodes: usize, units: usize },
    #[error("attack total {total} is not a multiple of granularity {granularity}")]
    InvalidGranularity { total: f64, granularity: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

// ---------------------------------------------------------------------------
// Budgets
// ---------------------------------------------------------------------------

/// Per-node power budget with a conserved total.
///
/// The sum of all amounts never exceeds the total, every amount stays
/// nonnegative, and [`BudgetVector::transfer`] moves budget between nodes
/// without changing the allocated sum (truncating at the donor's floor).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetVector {
    amounts: Vec<f64>,
    total: f64,
}

impl BudgetVector {
    pub fn new(amounts: Vec<f64>, total: f64) -> Result<Self, GameError> {
        for (node, &amount) in amounts.iter().enumerate() {
            if amount < 0.0 {
                return Err(GameError::NegativeAmount { node, amount });
            }
        }
        let allocated: f64 = amounts.iter().sum();
        if allocated > total + 1e-9 {
            return Err(GameError::OverAllocated { allocated, total });
        }
        Ok(Self { amounts, total })
    }

    /// Splits the total evenly across `n` nodes.
    pub fn equal_split(total: f64, n: usize) -> Self {
        Self {
            amounts: vec![total / n as f64; n],
            total,
        }
    }

    pub fn len(&self) -> usize {
        self.amounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amounts.is_empty()
    }

    pub fn amount(&self, node: usize) -> f64 {
        self.amounts[node]
    }

    pub fn amounts(&self) -> &[f64] {
        &self.amounts
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn allocated(&self) -> f64 {
        self.amounts.iter().sum()
    }

    /// Moves up to `amount` from one node to another, truncating at the
    /// donor's floor of zero. Returns what actually moved.
    pub fn transfer(&mut self, from: usize, to: usize, amount: f64) -> Result<f64, GameError> {
        if from >= self.amounts.len() || to >= self.amounts.len() {
            return Err(GameError::NodeOutOfRange(from.max(to)));
        }
        let moved = amount.min(self.amounts[from]).max(0.0);
        self.amounts[from] -= moved;
        self.amounts[to] += moved;
        Ok(moved)
    }
}

// ---------------------------------------------------------------------------
// Node status
// ---------------------------------------------------------------------------

/// Trust state of one report as seen by the fusion center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeState {
    Benevolent,
    SuspectedHwFailure,
    Malicious,
}

/// Classification bookkeeping for one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeStatus {
    pub state: NodeState,
    /// Consecutive rounds with negative utility, ending at the current round.
    pub negative_streak: u32,
    /// Whether the node has ever gone negative.
    pub ever_negative: bool,
}

impl Default for NodeStatus {
    fn default() -> Self {
        Self {
            state: NodeState::Benevolent,
            negative_streak: 0,
            ever_negative: false,
        }
    }
}

// ---------------------------------------------------------------------------
// Game state and records
// ---------------------------------------------------------------------------

/// Full state of the budget game at one round boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameState {
    pub round: u32,
    pub defense: BudgetVector,
    pub attack: BudgetVector,
    pub utilities: Vec<f64>,
    pub statuses: Vec<NodeStatus>,
    /// Strongly protected reports, strongest first.
    pub strong_list: Vec<usize>,
    /// Weakly protected reports, weakest first.
    pub weak_list: Vec<usize>,
    /// Strong/weak boundary in budget units.
    pub xi: f64,
    /// Attacker overshoot per kill in budget units.
    pub alpha: f64,
}

impl GameState {
    pub fn n_nodes(&self) -> usize {
        self.statuses.len()
    }

    pub fn is_alive(&self, node: usize) -> bool {
        self.statuses[node].state != NodeState::Malicious
    }

    /// Fraction of all reports still classified benevolent.
    pub fn protected_fraction(&self) -> f64 {
        let benevolent = self
            .statuses
            .iter()
            .filter(|s| s.state == NodeState::Benevolent)
            .count();
        benevolent as f64 / self.statuses.len() as f64
    }
}

/// Which player moved budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    Defender,
    Attacker,
}

/// One budget movement inside a round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transfer {
    pub actor: Actor,
    pub from: usize,
    pub to: usize,
    pub amount: f64,
}

/// Everything that happened in one round, serializable as a JSON line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub utilities: Vec<f64>,
    pub statuses: Vec<NodeState>,
    pub transfers: Vec<Transfer>,
    pub protected_fraction: f64,
    /// True when neither player had an improving move this round.
    pub equilibrium: bool,
    /// Defender ran out of strong donors before covering the weak list.
    pub partial_defense: bool,
    /// Attacker ran out of movable budget before covering its targets.
    pub partial_attack: bool,
    /// Every report is excluded.
    pub total_compromise: bool,
}

/// Defense allocation policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Adaptive redistribution toward weak reports.
    Proposed,
    /// Budget redrawn uniformly on the simplex every round.
    Random,
    /// Equal split held fixed for the whole run.
    EqualWeight,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(Strategy::Proposed),
            "random" | "rand" => Ok(Strategy::Random),
            "equal" | "equalweight" | "equal_weight" | "eq" => Ok(Strategy::EqualWeight),
            other => Err(format!("unknown strategy '{other}'")),
        }
    }
}

/// How the attacker deploys its budget in round one.
///
/// A fraction is committed to outright kills priced at the observed
/// defense plus a depth margin. The reserve splits in two: a pressure
/// tranche parked on the cheapest remaining reports, pressing them into
/// the weak zone where they stay cheap to finish off, and a war chest
/// parked on the strongest reports where it remains movable for the
/// per-round transfer chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackOpening {
    /// Fraction of the attack total withheld from opening kills.
    pub reserve_fraction: f64,
    /// Kill overshoot below zero, in multiples of xi.
    pub depth_xi: f64,
    /// Share of the reserve spent pressing cheap reports down.
    pub pressure_share: f64,
    /// Residual utility left on pressed reports, in multiples of xi.
    pub pipeline_margin_xi: f64,
}

/// Utility headroom kept on war-chest hosts so they stay strong donors,
/// in multiples of xi.
const CHEST_MARGIN_XI: f64 = 2.0;

impl Default for AttackOpening {
    fn default() -> Self {
        Self {
            reserve_fraction: 0.47,
            depth_xi: 2.0,
            pressure_share: 0.5,
            pipeline_margin_xi: 0.5,
        }
    }
}

/// Configuration of one game run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameConfig {
    pub n_nodes: usize,
    pub defense_total: f64,
    pub attack_total: f64,
    /// Strong/weak boundary; defaults to 0.05 * X / N.
    pub xi: f64,
    /// Attacker overshoot; defaults to 0.25 * xi.
    pub alpha: f64,
    pub max_rounds: u32,
    /// How many xi-sized top-ups one weak report may receive per round.
    pub rescue_depth: u32,
    pub opening: AttackOpening,
    /// Fraction of nodes given one spontaneous negative round.
    pub hw_failure_rate: f64,
    pub seed: u64,
    pub strategy: Strategy,
    /// Explicit starting defense; equal split when absent.
    pub initial_defense: Option<Vec<f64>>,
    /// Explicit starting attack; the opening policy when absent.
    pub initial_attack: Option<Vec<f64>>,
}

impl GameConfig {
    pub fn new(n_nodes: usize, defense_total: f64, attack_total: f64) -> Self {
        let xi = 0.05 * defense_total / n_nodes as f64;
        Self {
            n_nodes,
            defense_total,
            attack_total,
            xi,
            alpha: 0.25 * xi,
            max_rounds: 20,
            rescue_depth: 1,
            opening: AttackOpening::default(),
            hw_failure_rate: 0.05,
            seed: 0,
            strategy: Strategy::Proposed,
            initial_defense: None,
            initial_attack: None,
        }
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if self.n_nodes == 0 {
            return Err(GameError::InvalidConfig("n_nodes must be >= 1".into()));
        }
        if !(self.defense_total > 0.0) {
            return Err(GameError::InvalidConfig(format!(
                "defense total must be > 0, got {}",
                self.defense_total
            )));
        }
        if self.attack_total < 0.0 {
            return Err(GameError::InvalidConfig(format!(
                "attack total must be >= 0, got {}",
                self.attack_total
            )));
        }
        if self.max_rounds == 0 {
            return Err(GameError::InvalidConfig("max_rounds must be >= 1".into()));
        }
        if !(self.xi > 0.0) {
            return Err(GameError::InvalidConfig(format!("xi must be > 0, got {}", self.xi)));
        }
        if self.alpha < 0.0 {
            return Err(GameError::InvalidConfig(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.opening.reserve_fraction) {
            return Err(GameError::InvalidConfig(
                "reserve_fraction must lie in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.hw_failure_rate) {
            return Err(GameError::InvalidConfig(
                "hw_failure_rate must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Trajectory of a finished run.
#[derive(Debug, Clone)]
pub struct GameOutcome {
    pub final_state: GameState,
    pub rounds: Vec<RoundRecord>,
    pub converged: bool,
    pub rounds_to_equilibrium: Option<u32>,
}

// ---------------------------------------------------------------------------
// Per-round operations
// ---------------------------------------------------------------------------

/// Per-report utility: defense minus attack.
pub fn compute_utilities(
    defense: &BudgetVector,
    attack: &BudgetVector,
) -> Result<Vec<f64>, GameError> {
    if defense.len() != attack.len() {
        return Err(GameError::DimensionMismatch {
            left: defense.len(),
            right: attack.len(),
        });
    }
    Ok(defense
        .amounts()
        .iter()
        .zip(attack.amounts())
        .map(|(x, y)| x - y)
        .collect())
}

/// Updates trust states from the current utilities.
///
/// A first negative round marks a node as suspected hardware failure; a
/// second consecutive negative round excludes it as malicious. Exclusion
/// is absorbing. `forced_negative` lists nodes whose report reads
/// negative this round regardless of budgets (injected hardware faults).
pub fn classify_nodes(statuses: &mut [NodeStatus], utilities: &[f64], forced_negative: &[usize]) {
    for (i, status) in statuses.iter_mut().enumerate() {
        if status.state == NodeState::Malicious {
            continue;
        }
        let negative = utilities[i] < 0.0 || forced_negative.contains(&i);
        if negative {
            status.negative_streak += 1;
            status.ever_negative = true;
            status.state = if status.negative_streak >= 2 {
                NodeState::Malicious
            } else {
                NodeState::SuspectedHwFailure
            };
        } else {
            status.negative_streak = 0;
            if status.state == NodeState::SuspectedHwFailure {
                status.state = NodeState::Benevolent;
            }
        }
    }
}

/// Splits the non-excluded reports into the strong and weak lists.
///
/// Strong: utility above `xi`, ordered strongest first so index 0 is the
/// strongest report. Weak: utility at or below `xi` (the boundary counts
/// as weak), ordered weakest first. Ties break toward the lower node
/// index. Returns an error when no report is left in play.
pub fn partition_lists(
    utilities: &[f64],
    statuses: &[NodeStatus],
    xi: f64,
) -> Result<(Vec<usize>, Vec<usize>), GameError> {
    let alive: Vec<usize> = (0..utilities.len())
        .filter(|&i| statuses[i].state != NodeState::Malicious)
        .collect();
    if alive.is_empty() {
        return Err(GameError::TotalCompromise);
    }
    let mut strong: Vec<usize> = alive.iter().copied().filter(|&i| utilities[i] > xi).collect();
    let mut weak: Vec<usize> = alive.iter().copied().filter(|&i| utilities[i] <= xi).collect();
    strong.sort_by(|&a, &b| {
        utilities[b]
            .total_cmp(&utilities[a])
            .then_with(|| a.cmp(&b))
    });
    weak.sort_by(|&a, &b| {
        utilities[a]
            .total_cmp(&utilities[b])
            .then_with(|| a.cmp(&b))
    });
    Ok((strong, weak))
}

/// Number of xi-sized top-ups needed to bring a utility back to zero.
fn pumps_to_recover(utility: f64, xi: f64) -> u32 {
    if utility >= 0.0 {
        return 0;
    }
    ((-utility) / xi - EPS).ceil().max(1.0) as u32
}

/// Defender round: tops up every weak report with xi-sized transfers
/// drawn from the currently strongest report, re-sorting donors after
/// every transfer.
///
/// Reports recoverable within `rescue_depth` top-ups are served first,
/// weakest first; the rest of the weak list follows with a single top-up
/// each. Returns the transfers plus a flag set when the donors ran dry.
pub fn defender_redistribute(
    defense: &mut BudgetVector,
    snapshot_utilities: &[f64],
    statuses: &[NodeStatus],
    weak_list: &[usize],
    xi: f64,
    rescue_depth: u32,
) -> (Vec<Transfer>, bool) {
    let n = defense.len();
    let mut current_u = snapshot_utilities.to_vec();
    let mut transfers = Vec::new();
    let mut partial = false;

    // Recoverable reports first, then the rest of the weak list.
    let recoverable: Vec<usize> = weak_list
        .iter()
        .copied()
        .filter(|&r| {
            let p = pumps_to_recover(snapshot_utilities[r], xi);
            p >= 1 && p <= rescue_depth
        })
        .collect();
    let others: Vec<usize> = weak_list
        .iter()
        .copied()
        .filter(|r| !recoverable.contains(r))
        .collect();

    'outer: for &r in recoverable.iter().chain(others.iter()) {
        let pumps = pumps_to_recover(snapshot_utilities[r], xi).clamp(1, rescue_depth.max(1));
        for _ in 0..pumps {
            // Donor: the strongest report still above the boundary.
            let donor = (0..n)
                .filter(|&a| {
                    statuses[a].state != NodeState::Malicious && a != r && current_u[a] > xi
                })
                .max_by(|&a, &b| current_u[a].total_cmp(&current_u[b]).then_with(|| b.cmp(&a)));
            let Some(donor) = donor else {
                partial = true;
                break 'outer;
            };
            let moved = defense.transfer(donor, r, xi).expect("indices in range");
            current_u[donor] -= moved;
            current_u[r] += moved;
            transfers.push(Transfer {
                actor: Actor::Defender,
                from: donor,
                to: r,
                amount: moved,
            });
        }
    }
    (transfers, partial)
}

/// Attacker round: gathers just enough budget onto each weak report to
/// push its observed utility below zero, cheapest target first.
///
/// Funding drains the attacker's allocations on the strong list only,
/// strongest report first, chaining to the next-strongest as each donor
/// empties. Budget already sunk into weak or excluded reports stays
/// where it landed. When the movable budget runs out mid-target the
/// partial amount still lands (flagged).
pub fn attacker_redistribute(
    attack: &mut BudgetVector,
    snapshot_utilities: &[f64],
    statuses: &[NodeStatus],
    weak_list: &[usize],
    xi: f64,
    alpha: f64,
) -> (Vec<Transfer>, bool) {
    let n = attack.len();
    let mut transfers = Vec::new();
    let mut partial = false;

    // Donor chain: strong-list allocations, strongest first.
    let mut donors: Vec<usize> = (0..n)
        .filter(|&a| statuses[a].state != NodeState::Malicious && snapshot_utilities[a] > xi)
        .collect();
    donors.sort_by(|&a, &b| {
        snapshot_utilities[b]
            .total_cmp(&snapshot_utilities[a])
            .then_with(|| a.cmp(&b))
    });

    for &r in weak_list {
        if snapshot_utilities[r] < 0.0 {
            continue; // already observed down; no budget wasted on it
        }
        let amount = snapshot_utilities[r] + alpha;
        if amount <= 0.0 {
            continue;
        }
        let mut need = amount;
        for &a in &donors {
            let available = attack.amount(a);
            if available <= 0.0 {
                continue;
            }
            let take = available.min(need);
            let moved = attack.transfer(a, r, take).expect("indices in range");
            if moved > 0.0 {
                transfers.push(Transfer {
                    actor: Actor::Attacker,
                    from: a,
                    to: r,
                    amount: moved,
                });
                need -= moved;
            }
            if need <= EPS {
                break;
            }
        }
        if need > EPS {
            partial = true;
        }
    }
    (transfers, partial)
}

/// Pure-strategy equilibrium test over the discrete transfer moves.
///
/// Not an equilibrium while any report in play sits at negative utility:
/// either the defender can still recover it or the exclusion process has
/// yet to run its course, so the state is not at rest. Beyond that, the
/// attacker improves if it can gather `U_r + alpha` onto some weak
/// report (utility in [0, xi]) from its strong-list allocations,
/// flipping the target negative. Equilibrium means neither applies.
pub fn is_nash_equilibrium(state: &GameState, _rescue_depth: u32) -> bool {
    let n = state.n_nodes();
    let u = &state.utilities;
    let alive = |i: usize| state.statuses[i].state != NodeState::Malicious;

    // Infected reports still in play: the game has not settled.
    if (0..n).any(|i| alive(i) && u[i] < 0.0) {
        return false;
    }

    // Attacker deviation: fund a kill of a weak report.
    if state.alpha > 0.0 {
        let mobilizable: f64 = (0..n)
            .filter(|&a| alive(a) && u[a] > state.xi)
            .map(|a| state.attack.amount(a))
            .sum();
        for r in 0..n {
            if !alive(r) || u[r] < 0.0 || u[r] > state.xi {
                continue;
            }
            if mobilizable >= u[r] + state.alpha - EPS {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Game driver
// ---------------------------------------------------------------------------

/// Builds the attacker's opening allocation against an observed defense.
fn opening_attack(defense: &[f64], config: &GameConfig) -> Vec<f64> {
    let n = defense.len();
    let mut attack = vec![0.0; n];
    let total = config.attack_total;
    if total <= 0.0 {
        return attack;
    }
    let opening = &config.opening;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| defense[a].total_cmp(&defense[b]).then_with(|| a.cmp(&b)));

    // Committed kills, cheapest reports first.
    let mut remaining = (1.0 - opening.reserve_fraction) * total;
    let reserve = total - remaining;
    let mut attacked = vec![false; n];
    for &i in &order {
        let price = defense[i] + config.alpha + opening.depth_xi * config.xi;
        if price <= remaining {
            attack[i] = price;
            remaining -= price;
            attacked[i] = true;
        } else {
            break;
        }
    }

    // Pressure tranche: press the next-cheapest reports into the weak
    // zone, leaving them a sliver of utility.
    let mut pressure = opening.pressure_share * reserve;
    let mut chest = reserve - pressure + remaining;
    for &i in &order {
        if attacked[i] || pressure <= 0.0 {
            continue;
        }
        let cap = (defense[i] - opening.pipeline_margin_xi * config.xi).max(0.0);
        if cap > pressure {
            // A partial press would not reach the weak zone; bank it.
            chest += pressure;
            pressure = 0.0;
            break;
        }
        attack[i] += cap;
        pressure -= cap;
        attacked[i] = true;
    }
    chest += pressure;

    // War chest on the strongest reports, keeping each host's utility
    // comfortably above the boundary so the allocation stays movable.
    for &i in order.iter().rev() {
        if attacked[i] || chest <= 0.0 {
            continue;
        }
        let cap = (defense[i] - attack[i] - CHEST_MARGIN_XI * config.xi).max(0.0);
        let park = cap.min(chest);
        attack[i] += park;
        chest -= park;
    }
    // Whatever cannot be parked stays unallocated.
    attack
}

/// One running game: state plus the round loop.
#[derive(Debug, Clone)]
pub struct Game {
    pub config: GameConfig,
    pub state: GameState,
    /// Scheduled spontaneous-failure round per node, if any.
    hw_round: Vec<Option<u32>>,
    rng: ChaCha8Rng,
}

impl Game {
    pub fn new(config: GameConfig) -> Result<Self, GameError> {
        config.validate()?;
        let n = config.n_nodes;
        let defense = match &config.initial_defense {
            Some(v) => BudgetVector::new(v.clone(), config.defense_total)?,
            None => BudgetVector::equal_split(config.defense_total, n),
        };
        let attack = match &config.initial_attack {
            Some(v) => BudgetVector::new(v.clone(), config.attack_total)?,
            None => BudgetVector::new(
                opening_attack(defense.amounts(), &config),
                config.attack_total,
            )?,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

        // Spontaneous hardware faults: a fixed fraction of nodes read one
        // negative round at a random time.
        let mut hw_round = vec![None; n];
        let faulty = ((config.hw_failure_rate * n as f64).round() as usize).min(n);
        if faulty > 0 {
            let picks = rand::seq::index::sample(&mut rng, n, faulty);
            for node in picks.iter() {
                hw_round[node] = Some(rng.random_range(1..=config.max_rounds));
            }
        }

        let utilities = compute_utilities(&defense, &attack)?;
        let state = GameState {
            round: 0,
            defense,
            attack,
            utilities,
            statuses: vec![NodeStatus::default(); n],
            strong_list: Vec::new(),
            weak_list: Vec::new(),
            xi: config.xi,
            alpha: config.alpha,
        };
        Ok(Self {
            config,
            state,
            hw_round,
            rng,
        })
    }

    /// Runs one round: classify, partition, and (unless already at
    /// equilibrium) let both players redistribute.
    pub fn step_round(&mut self) -> Result<RoundRecord, GameError> {
        let state = &mut self.state;
        state.round += 1;
        let round = state.round;
        let n = state.n_nodes();

        if self.config.strategy == Strategy::Random {
            // Fresh uniform draw on the budget simplex.
            let draws: Vec<f64> = (0..n)
                .map(|_| -(self.rng.random::<f64>().max(1e-300)).ln())
                .collect();
            let sum: f64 = draws.iter().sum();
            let amounts: Vec<f64> = draws
                .iter()
                .map(|d| d / sum * self.config.defense_total)
                .collect();
            state.defense = BudgetVector::new(amounts, self.config.defense_total)?;
        }

        state.utilities = compute_utilities(&state.defense, &state.attack)?;
        let forced: Vec<usize> = (0..n)
            .filter(|&i| self.hw_round[i] == Some(round))
            .collect();
        classify_nodes(&mut state.statuses, &state.utilities, &forced);

        let (strong, weak, total_compromise) =
            match partition_lists(&state.utilities, &state.statuses, state.xi) {
                Ok((s, w)) => (s, w, false),
                Err(GameError::TotalCompromise) => (Vec::new(), Vec::new(), true),
                Err(e) => return Err(e),
            };
        state.strong_list = strong;
        state.weak_list = weak;

        let equilibrium =
            total_compromise || is_nash_equilibrium(state, self.config.rescue_depth);

        let mut transfers = Vec::new();
        let mut partial_defense = false;
        let mut partial_attack = false;
        if !equilibrium {
            let snapshot = state.utilities.clone();
            if self.config.strategy == Strategy::Proposed {
                let (t, partial) = defender_redistribute(
                    &mut state.defense,
                    &snapshot,
                    &state.statuses,
                    &state.weak_list,
                    state.xi,
                    self.config.rescue_depth,
                );
                transfers.extend(t);
                partial_defense = partial;
            }
            let (t, partial) = attacker_redistribute(
                &mut state.attack,
                &snapshot,
                &state.statuses,
                &state.weak_list,
                state.xi,
                state.alpha,
            );
            transfers.extend(t);
            partial_attack = partial;
            state.utilities = compute_utilities(&state.defense, &state.attack)?;
        }

        Ok(RoundRecord {
            round,
            utilities: state.utilities.clone(),
            statuses: state.statuses.iter().map(|s| s.state).collect(),
            transfers,
            protected_fraction: state.protected_fraction(),
            equilibrium,
            partial_defense,
            partial_attack,
            total_compromise,
        })
    }

    /// Iterates rounds until equilibrium or the round limit.
    pub fn run_to_equilibrium(&mut self) -> Result<GameOutcome, GameError> {
        let mut rounds = Vec::new();
        let mut converged = false;
        let mut rounds_to_equilibrium = None;
        for _ in 0..self.config.max_rounds {
            let record = self.step_round()?;
            let stop = record.equilibrium || record.total_compromise;
            let round = record.round;
            rounds.push(record);
            if stop {
                converged = true;
                rounds_to_equilibrium = Some(round);
                break;
            }
        }
        Ok(GameOutcome {
            final_state: self.state.clone(),
            rounds,
            converged,
            rounds_to_equilibrium,
        })
    }
}

/// Convenience wrapper: build a game from the config and run it.
pub fn run_to_equilibrium(config: GameConfig) -> Result<GameOutcome, GameError> {
    Game::new(config)?.run_to_equilibrium()
}

#[cfg(test)]
mod tests;
