//! Analytical channel planner: EPR budgets, setup latency and delivered
//! fidelity for one source-destination channel under a purification
//! placement scheme.
//!
//! Pair counts are expected values per purified pair delivered at the
//! endpoints (one physical data qubit); multiply by
//! [`LogicalTransferSpec::physical_per_logical`] for a logical transfer.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fidelity::{
    generation_fidelity, link_fidelity, teleport_fidelity, teleport_latency, DistanceCells, Fidelity,
};
use crate::params::{ErrorRates, ParameterSet, ThresholdPolicy};
use crate::purification::{
    expected_pairs, expected_pairs_for_rounds, max_achievable_fidelity, purify_round_latency,
    rounds_to_threshold, trajectory, Protocol, Reach,
};

/// Default distance covered by one teleport hop.
pub const DEFAULT_HOP_SPACING: DistanceCells = DistanceCells(600);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementScheme {
    EndpointsOnly,
    VirtualWirePlusEndpoints,
    BetweenTeleports,
    BetweenTeleportsPlusVirtualWire,
}

impl PlacementScheme {
    pub const ALL: [PlacementScheme; 4] = [
        PlacementScheme::EndpointsOnly,
        PlacementScheme::VirtualWirePlusEndpoints,
        PlacementScheme::BetweenTeleports,
        PlacementScheme::BetweenTeleportsPlusVirtualWire,
    ];

    pub fn purifies_wire(self) -> bool {
        matches!(
            self,
            PlacementScheme::VirtualWirePlusEndpoints | PlacementScheme::BetweenTeleportsPlusVirtualWire
        )
    }

    pub fn purifies_between(self) -> bool {
        matches!(
            self,
            PlacementScheme::BetweenTeleports | PlacementScheme::BetweenTeleportsPlusVirtualWire
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            PlacementScheme::EndpointsOnly => "endpoints-only",
            PlacementScheme::VirtualWirePlusEndpoints => "virtual-wire",
            PlacementScheme::BetweenTeleports => "between-teleports",
            PlacementScheme::BetweenTeleportsPlusVirtualWire => "between-teleports-virtual-wire",
        }
    }
}

impl fmt::Display for PlacementScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlacementScheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlacementScheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = PlacementScheme::ALL.iter().map(|s| s.name()).collect();
                format!("unknown scheme `{s}` (one of {})", names.join(", "))
            })
    }
}

/// Where a plan first fails to reach the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Wire,
    BetweenTeleports,
    Endpoint,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Wire => "wire",
            Stage::BetweenTeleports => "between-teleports",
            Stage::Endpoint => "endpoint",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub hop_spacing: DistanceCells,
    pub protocol: Protocol,
    /// Wire purification is added only when endpoint purification would
    /// otherwise need more rounds than this.
    pub endpoint_depth_cap: usize,
    pub max_wire_rounds: usize,
    /// Rounds applied to the traveling pair at each intermediate router.
    pub between_rounds: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            hop_spacing: DEFAULT_HOP_SPACING,
            protocol: Protocol::Dejmps,
            endpoint_depth_cap: 5,
            max_wire_rounds: 8,
            between_rounds: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPlan {
    pub distance: DistanceCells,
    pub scheme: PlacementScheme,
    pub hops: u32,
    pub rounds_endpoint: usize,
    pub rounds_wire: usize,
    pub rounds_between: usize,
    /// Expected raw pairs consumed anywhere per delivered pair.
    pub total_pairs: f64,
    /// Expected pairs teleported through the path per delivered pair.
    pub nonlocal_pairs: f64,
    pub setup_latency: f64,
    pub delivered_fidelity: Fidelity,
    /// Fidelity of a raw virtual-wire pair.
    pub link_fidelity: Fidelity,
    /// Fidelity of the assisting pairs after wire purification.
    pub wire_fidelity: Fidelity,
    /// Raw link pairs consumed per assisting pair.
    pub wire_pairs: f64,
    /// Traveling pair on arrival, before endpoint purification.
    pub distributed_fidelity: Fidelity,
    /// Success probability of each endpoint round.
    pub endpoint_success: Vec<f64>,
    pub infeasible: Option<Stage>,
}

impl ChannelPlan {
    pub fn is_feasible(&self) -> bool {
        self.infeasible.is_none()
    }

    /// Expected raw pairs arriving at the endpoint per purified pair.
    pub fn endpoint_pairs(&self) -> f64 {
        expected_pairs(&self.endpoint_success)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogicalTransferSpec {
    pub physical_per_logical: u32,
    pub threshold: ThresholdPolicy,
}

impl Default for LogicalTransferSpec {
    fn default() -> Self {
        Self {
            physical_per_logical: 49,
            threshold: ThresholdPolicy::default(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("hop spacing must be at least one cell")]
    ZeroHopSpacing,
    #[error("plan is infeasible at the {0} stage")]
    Infeasible(Stage),
    #[error("a logical qubit needs at least one physical qubit")]
    EmptyLogical,
    #[error(transparent)]
    Purify(#[from] crate::purification::PurifyError),
}

pub fn hops_for(distance: DistanceCells, hop_spacing: DistanceCells) -> u32 {
    distance.cells().div_ceil(hop_spacing.cells()) as u32
}

/// Plans a channel with the default planner settings at `hop_spacing`.
pub fn plan_channel(
    distance: DistanceCells,
    scheme: PlacementScheme,
    params: &ParameterSet,
    hop_spacing: DistanceCells,
) -> Result<ChannelPlan, ChannelError> {
    let config = PlannerConfig {
        hop_spacing,
        ..PlannerConfig::default()
    };
    plan_channel_with(distance, scheme, params, &config)
}

/// Path portion of a plan for one candidate wire depth.
struct PathOutcome {
    distributed: Fidelity,
    /// Raw pairs per surviving pair at each intermediate router.
    between_cost: Vec<f64>,
    reach: Option<Reach>,
    failed: Option<Stage>,
}

fn walk_path(
    hops: u32,
    start: Fidelity,
    assist: Fidelity,
    between: bool,
    config: &PlannerConfig,
    params: &ParameterSet,
) -> PathOutcome {
    let p = &params.errors;
    let mut f = start;
    let mut between_cost = Vec::new();
    for hop in 1..=hops {
        f = teleport_fidelity(f, assist, p);
        if between && hop < hops && config.between_rounds > 0 {
            match trajectory(f, config.protocol, p, config.between_rounds) {
                Ok(t) if t.final_fidelity() > f => {
                    between_cost.push(expected_pairs(&t.success()));
                    f = t.final_fidelity();
                }
                _ => {
                    return PathOutcome {
                        distributed: f,
                        between_cost,
                        reach: None,
                        failed: Some(Stage::BetweenTeleports),
                    }
                }
            }
        }
    }
    let reach = rounds_to_threshold(
        f,
        config.protocol,
        p,
        Fidelity::new(params.threshold.f_min),
    );
    let failed = match reach {
        Reach::Reached(_) => None,
        Reach::Unreachable { .. } => Some(Stage::Endpoint),
    };
    PathOutcome {
        distributed: f,
        between_cost,
        reach: Some(reach),
        failed,
    }
}

pub fn plan_channel_with(
    distance: DistanceCells,
    scheme: PlacementScheme,
    params: &ParameterSet,
    config: &PlannerConfig,
) -> Result<ChannelPlan, ChannelError> {
    if config.hop_spacing.cells() == 0 {
        return Err(ChannelError::ZeroHopSpacing);
    }
    let p = &params.errors;
    let hops = hops_for(distance, config.hop_spacing);
    let link = link_fidelity(params, config.hop_spacing);

    // Co-located endpoints: a locally generated pair, purified in place.
    if hops == 0 {
        let local = generation_fidelity(p, Fidelity::new(params.f_zero));
        let outcome = walk_path(0, local, link, false, config, params);
        return Ok(assemble(
            distance, scheme, 0, 0, link, link, 1.0, outcome, config, params,
        ));
    }

    // Candidate wire depths; schemes without wire purification use none.
    let mut wire_options: Vec<(usize, Fidelity, f64)> = vec![(0, link, 1.0)];
    let mut wire_failed = false;
    if scheme.purifies_wire() {
        match trajectory(link, config.protocol, p, config.max_wire_rounds) {
            Ok(t) => {
                let mut prev = link;
                for (i, (f, _)) in t.rounds.iter().enumerate() {
                    if *f <= prev {
                        break;
                    }
                    prev = *f;
                    wire_options.push((i + 1, *f, expected_pairs(&t.success()[..=i])));
                }
            }
            Err(_) => wire_failed = true,
        }
    }

    let evaluated: Vec<_> = wire_options
        .iter()
        .map(|&(r, f, cost)| (r, f, cost, walk_path(hops, link, f, scheme.purifies_between(), config, params)))
        .collect();

    let endpoint_rounds = |o: &PathOutcome| o.reach.as_ref().and_then(Reach::rounds);
    let chosen = evaluated
        .iter()
        .position(|(_, _, _, o)| endpoint_rounds(o).is_some_and(|r| r <= config.endpoint_depth_cap))
        .or_else(|| {
            evaluated
                .iter()
                .enumerate()
                .filter_map(|(i, (_, _, _, o))| endpoint_rounds(o).map(|r| (r, i)))
                .min()
                .map(|(_, i)| i)
        });

    let plan = match chosen {
        Some(i) => {
            let (r, f, cost, outcome) = evaluated.into_iter().nth(i).expect("index in range");
            assemble(distance, scheme, hops, r, link, f, cost, outcome, config, params)
        }
        None => {
            let (r, f, cost, outcome) = evaluated.into_iter().next().expect("unpurified option");
            let mut plan = assemble(distance, scheme, hops, r, link, f, cost, outcome, config, params);
            if wire_failed {
                plan.infeasible = Some(Stage::Wire);
            }
            plan
        }
    };
    Ok(plan)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    distance: DistanceCells,
    scheme: PlacementScheme,
    hops: u32,
    rounds_wire: usize,
    link: Fidelity,
    wire: Fidelity,
    wire_cost: f64,
    outcome: PathOutcome,
    config: &PlannerConfig,
    params: &ParameterSet,
) -> ChannelPlan {
    let times = &params.times;
    let rounds_between = if outcome.between_cost.is_empty() { 0 } else { config.between_rounds };
    let hop_latency = teleport_latency(config.hop_spacing, times);
    let between_latency = outcome.between_cost.len() as f64
        * config.between_rounds as f64
        * purify_round_latency(config.hop_spacing, times);

    let schedule = outcome.reach.as_ref().and_then(Reach::schedule);
    let (rounds_endpoint, endpoint_success, delivered) = match schedule {
        Some(s) => (s.rounds, s.success.clone(), s.fidelity),
        None => (0, Vec::new(), outcome.distributed),
    };

    let (total_pairs, nonlocal_pairs) = if outcome.failed.is_some() {
        (f64::INFINITY, f64::INFINITY)
    } else {
        // Pairs that must cross hop k, walking back from the endpoint.
        let at_endpoint = expected_pairs(&endpoint_success);
        let mut crossing = at_endpoint;
        let mut link_pairs = 0.0;
        for k in (1..=hops as usize).rev() {
            link_pairs += crossing * wire_cost;
            if k > 1 {
                if let Some(cost) = outcome.between_cost.get(k - 2) {
                    crossing *= cost;
                }
            }
        }
        let injected = crossing;
        let nonlocal = if hops == 0 { 0.0 } else { injected };
        (injected + link_pairs, nonlocal)
    };

    ChannelPlan {
        distance,
        scheme,
        hops,
        rounds_endpoint,
        rounds_wire,
        rounds_between,
        total_pairs,
        nonlocal_pairs,
        setup_latency: hops as f64 * hop_latency
            + between_latency
            + rounds_endpoint as f64 * purify_round_latency(distance, times),
        delivered_fidelity: delivered,
        link_fidelity: link,
        wire_fidelity: wire,
        wire_pairs: wire_cost,
        distributed_fidelity: outcome.distributed,
        endpoint_success,
        infeasible: outcome.failed,
    }
}

/// Expected raw pairs teleported to the endpoints for one logical transfer.
pub fn pairs_per_logical_transfer(
    plan: &ChannelPlan,
    spec: &LogicalTransferSpec,
) -> Result<f64, ChannelError> {
    if let Some(stage) = plan.infeasible {
        return Err(ChannelError::Infeasible(stage));
    }
    if spec.physical_per_logical == 0 {
        return Err(ChannelError::EmptyLogical);
    }
    let per_qubit = expected_pairs_for_rounds(plan.rounds_endpoint, &plan.endpoint_success)?;
    Ok(per_qubit * spec.physical_per_logical as f64)
}

/// One plan per distance; infeasible rows are kept and marked.
pub fn distance_sweep(
    scheme: PlacementScheme,
    params: &ParameterSet,
    distances: &[DistanceCells],
    config: &PlannerConfig,
) -> Result<Vec<ChannelPlan>, ChannelError> {
    distances
        .iter()
        .map(|&d| plan_channel_with(d, scheme, params, config))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub rate: f64,
    /// Fixpoint of the purification protocol at this error rate.
    pub ceiling: Fidelity,
    pub plan: ChannelPlan,
}

impl SensitivityRow {
    pub fn breakdown(&self) -> bool {
        !self.plan.is_feasible()
    }
}

/// Sets every error rate to each grid value and plans a channel of
/// `reference` length.
pub fn error_rate_sensitivity(
    params: &ParameterSet,
    rate_grid: &[f64],
    scheme: PlacementScheme,
    reference: DistanceCells,
    config: &PlannerConfig,
) -> Result<Vec<SensitivityRow>, ChannelError> {
    rate_grid
        .iter()
        .map(|&rate| {
            let mut local = *params;
            local.errors = ErrorRates::uniform(rate);
            let plan = plan_channel_with(reference, scheme, &local, config)?;
            let ceiling = max_achievable_fidelity(config.protocol, &local.errors)?;
            Ok(SensitivityRow { rate, ceiling, plan })
        })
        .collect()
}

pub const PLAN_CSV_HEADER: &str = "distance,hops,scheme,feasible,failing_stage,rounds_wire,rounds_between,rounds_endpoint,total_pairs,nonlocal_pairs,setup_latency_us,distributed_error,delivered_error";

/// Writes one CSV row per plan; pair counts are scaled to logical transfers.
pub fn write_plan_rows<W: Write>(out: &mut W, plans: &[ChannelPlan], physical_per_logical: u32) -> io::Result<()> {
    let scale = physical_per_logical as f64;
    for plan in plans {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{:e},{:e}",
            plan.distance.cells(),
            plan.hops,
            plan.scheme,
            plan.is_feasible(),
            plan.infeasible.map(|s| s.to_string()).unwrap_or_default(),
            plan.rounds_wire,
            plan.rounds_between,
            plan.rounds_endpoint,
            plan.total_pairs * scale,
            plan.nonlocal_pairs * scale,
            plan.setup_latency,
            plan.distributed_fidelity.error(),
            plan.delivered_fidelity.error(),
        )?;
    }
    Ok(())
}
