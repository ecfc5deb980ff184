//! Scenario configuration, list-length calibration, Monte Carlo campaigns,
//! reports and trace replay.
//!
//! Run `i` of a campaign with master seed `s` draws everything from
//! `ChaCha20Rng::seed_from_u64(s)` switched to stream `i`, first for the
//! distribution and then for the protocol. Any run can therefore be replayed
//! from `(s, i)` and the scenario alone.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::distribution::{Binomial, DiscreteCDF};
use thiserror::Error;

use crate::agreement::ProtocolParams;
use crate::lists::forgery::{closed_form_pass_bound, ForgeryOracle};
use crate::lists::{Alphabet, Symbol};
use crate::qsd::channel::{ChannelAdversary, Identity, InterceptBasis, InterceptResend};
use crate::qsd::{distribute_with_rng, AbortReason, ChannelAttack, DistributionConfig, DistributionOutcome};
use crate::simnet::{
    run_protocol, DeliveryOutcome, ProtocolSetup, RunTrace, SimError, StrategySpec, TraceEvent,
    TRACE_SCHEMA_VERSION,
};
use crate::{PartyId, SimRng, COMMANDER};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("calibration failed: {0}")]
    CalibrationFailure(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A size given explicitly or left to calibration. Serialized as a number
/// or the string `"auto"`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Sizing {
    #[default]
    Auto,
    Fixed(usize),
}

impl Serialize for Sizing {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Sizing::Auto => s.serialize_str("auto"),
            Sizing::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Sizing {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(usize),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(n) => Ok(Sizing::Fixed(n)),
            Raw::Str(s) if s == "auto" => Ok(Sizing::Auto),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"auto\", got {s:?}"))),
        }
    }
}

/// Accepts a bare strategy name or a full `{"name": ..., params}` object.
fn strategy_spec<'de, D: Deserializer<'de>>(d: D) -> Result<StrategySpec, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Name(String),
        Spec(StrategySpec),
    }
    match Raw::deserialize(d)? {
        Raw::Spec(s) => Ok(s),
        Raw::Name(n) => {
            StrategySpec::from_name(&n).ok_or_else(|| serde::de::Error::custom(format!("unknown strategy {n:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelAdversaryKind {
    #[default]
    None,
    InterceptResendComputational,
    InterceptResendRandomBasis,
}

impl ChannelAdversaryKind {
    fn build(self) -> Box<dyn ChannelAdversary> {
        match self {
            ChannelAdversaryKind::None => Box::new(Identity),
            ChannelAdversaryKind::InterceptResendComputational => {
                Box::new(InterceptResend::new(InterceptBasis::Computational))
            }
            ChannelAdversaryKind::InterceptResendRandomBasis => Box::new(InterceptResend::new(InterceptBasis::Random)),
        }
    }
}

fn default_cp() -> f64 {
    0.5
}

fn default_epsilon() -> f64 {
    1e-6
}

fn default_runs() -> u64 {
    1
}

fn honest() -> StrategySpec {
    StrategySpec::Honest
}

/// One scenario as a flat JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub m: usize,
    pub w: Symbol,
    #[serde(default)]
    pub list_length: Sizing,
    #[serde(default = "default_cp")]
    pub correlation_prob: f64,
    /// Decoys per channel; defaults to the list length.
    #[serde(default)]
    pub decoy_count: Option<usize>,
    #[serde(default)]
    pub decoys_correlated_only: bool,
    #[serde(default)]
    pub min_support: Sizing,
    /// Target forgery probability for calibration.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub commander_order: Symbol,
    #[serde(default)]
    pub default_decision: Symbol,
    #[serde(default)]
    pub corrupt: Vec<PartyId>,
    /// Strategy of corrupt lieutenants.
    #[serde(default = "honest", deserialize_with = "strategy_spec")]
    pub strategy: StrategySpec,
    /// Strategy of a corrupt commander.
    #[serde(default = "honest", deserialize_with = "strategy_spec")]
    pub commander_strategy: StrategySpec,
    #[serde(default)]
    pub channel_adversary: ChannelAdversaryKind,
    /// Channels the channel adversary sits on; all of them when absent.
    #[serde(default)]
    pub tapped_channels: Option<Vec<PartyId>>,
    /// Relay rounds to execute; fewer than `m + 1` is a negative control.
    #[serde(default)]
    pub relay_rounds: Option<usize>,
    #[serde(default = "default_runs")]
    pub runs: u64,
    pub seed: u64,
}

impl ScenarioConfig {
    /// A scenario with every optional field at its default.
    pub fn new(n: usize, m: usize, w: Symbol, commander_order: Symbol, seed: u64) -> Self {
        Self {
            n,
            m,
            w,
            list_length: Sizing::Auto,
            correlation_prob: default_cp(),
            decoy_count: None,
            decoys_correlated_only: false,
            min_support: Sizing::Auto,
            epsilon: default_epsilon(),
            commander_order,
            default_decision: 0,
            corrupt: Vec::new(),
            strategy: StrategySpec::Honest,
            commander_strategy: StrategySpec::Honest,
            channel_adversary: ChannelAdversaryKind::None,
            tapped_channels: None,
            relay_rounds: None,
            runs: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.n < 2 {
            return bad(format!("need at least 2 parties, got {}", self.n));
        }
        if (self.w as usize) < self.n {
            return bad(format!("w = {} must be at least n = {}", self.w, self.n));
        }
        if self.m < 1 || self.m >= self.n {
            return bad(format!("m = {} must satisfy 1 <= m <= n - 1", self.m));
        }
        if self.commander_order > self.w {
            return bad(format!("commander order {} outside 0..={}", self.commander_order, self.w));
        }
        if self.default_decision > self.w {
            return bad(format!("default decision {} outside 0..={}", self.default_decision, self.w));
        }
        if let Some(p) = self.corrupt.iter().find(|&&p| p >= self.n) {
            return bad(format!("corrupt party {p} does not exist"));
        }
        if let Some(p) = self.tapped_channels.iter().flatten().find(|&&p| p >= self.n) {
            return bad(format!("tapped channel {p} does not exist"));
        }
        if self.runs < 1 {
            return bad("runs must be at least 1".into());
        }
        if !(self.correlation_prob > 0.0 && self.correlation_prob < 1.0) {
            return bad(format!("correlation probability {} outside (0, 1)", self.correlation_prob));
        }
        if matches!(self.list_length, Sizing::Fixed(0)) || matches!(self.min_support, Sizing::Fixed(0)) {
            return bad("list_length and min_support must be positive".into());
        }
        Ok(())
    }

    fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.w).expect("w >= n >= 2")
    }

    /// More corrupt parties than `m`, or truncated relay rounds.
    pub fn is_negative_control(&self) -> bool {
        self.corrupt.len() > self.m || self.relay_rounds.is_some_and(|r| r < self.m + 1)
    }

    fn commander_honest(&self) -> bool {
        !self.corrupt.contains(&COMMANDER)
    }
}

/// Calibrated sizes for a target forgery probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub list_length: usize,
    pub min_support: usize,
    pub epsilon: f64,
    /// Largest single-position pass probability of an optimal forger.
    pub per_position_bound: f64,
}

/// Probability of meeting the support floor for one value in `len` positions.
fn support_tail(len: usize, rate: f64, min_support: usize) -> f64 {
    let b = Binomial::new(rate, len as u64).expect("valid binomial");
    b.cdf(min_support as u64 - 1)
}

/// Chooses `min_support = ceil(ln eps / ln p)` with `p` the forger's
/// per-position bound, and the shortest list for which one value has at
/// least `min_support` correlated positions with probability >= 0.999.
pub fn calibrate_length(n: usize, w: Symbol, correlation_prob: f64, epsilon: f64) -> Result<Calibration, HarnessError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(HarnessError::CalibrationFailure(format!("epsilon {epsilon} outside (0, 1)")));
    }
    if !(correlation_prob > 0.0 && correlation_prob < 1.0) {
        return Err(HarnessError::CalibrationFailure(format!(
            "correlation probability {correlation_prob} outside (0, 1)"
        )));
    }
    let alphabet = Alphabet::new(w).map_err(|e| HarnessError::CalibrationFailure(e.to_string()))?;
    if (w as usize) < n || n < 2 {
        return Err(HarnessError::CalibrationFailure(format!("need 2 <= n <= w, got n = {n}, w = {w}")));
    }
    let oracle = ForgeryOracle {
        correlation_prob,
        ..ForgeryOracle::default()
    };
    let p = oracle
        .per_position_bound(n, alphabet)
        .unwrap_or_else(|_| closed_form_pass_bound(n, alphabet, correlation_prob));
    if !(p > 0.0 && p < 1.0) {
        return Err(HarnessError::CalibrationFailure(format!("per-position bound {p} is degenerate")));
    }
    let min_support = ((epsilon.ln() / p.ln()).ceil() as usize).max(1);

    let rate = correlation_prob / alphabet.size() as f64;
    let shortfall = 0.001;
    let mut hi = min_support.max(1);
    while support_tail(hi, rate, min_support) > shortfall {
        hi *= 2;
    }
    let mut lo = hi / 2;
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if support_tail(mid, rate, min_support) > shortfall {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Calibration {
        list_length: hi,
        min_support,
        epsilon,
        per_position_bound: p,
    })
}

/// A scenario with its sizes fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario {
    pub config: ScenarioConfig,
    pub calibration: Option<Calibration>,
    pub distribution: DistributionConfig,
    pub setup: ProtocolSetup,
}

pub fn resolve(config: &ScenarioConfig) -> Result<ResolvedScenario, HarnessError> {
    config.validate()?;
    let calibration = match (config.list_length, config.min_support) {
        (Sizing::Fixed(_), Sizing::Fixed(_)) => None,
        _ => Some(calibrate_length(config.n, config.w, config.correlation_prob, config.epsilon)?),
    };
    let pick = |s: Sizing, f: fn(&Calibration) -> usize| match s {
        Sizing::Fixed(v) => v,
        Sizing::Auto => f(calibration.as_ref().expect("calibrated when auto")),
    };
    let list_length = pick(config.list_length, |c| c.list_length);
    let min_support = pick(config.min_support, |c| c.min_support);
    let distribution = DistributionConfig {
        n: config.n,
        alphabet: config.alphabet(),
        list_length,
        correlation_prob: config.correlation_prob,
        decoy_count: config.decoy_count.unwrap_or(list_length),
        decoys_correlated_only: config.decoys_correlated_only,
        seed: config.seed,
    };
    let setup = ProtocolSetup {
        params: ProtocolParams {
            n: config.n,
            m: config.m,
            alphabet: config.alphabet(),
            min_support,
            default_decision: config.default_decision,
        },
        corrupt: config.corrupt.iter().copied().collect::<BTreeSet<_>>(),
        commander_order: config.commander_order,
        relay_rounds: config.relay_rounds,
    };
    setup.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(ResolvedScenario {
        config: config.clone(),
        calibration,
        distribution,
        setup,
    })
}

/// Generator for run `run_index` of a campaign seeded with `seed`.
pub fn run_rng(seed: u64, run_index: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(run_index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Decoy mismatch during distribution.
    Aborted,
    /// A party that had to send a value lacked correlated support for it;
    /// treated as a failed distribution.
    SupportShortfall,
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: u64,
    pub status: RunStatus,
    /// `(party, decision)` for every honest party, commander included.
    pub decisions: Vec<(PartyId, Symbol)>,
    /// `true` when honest lieutenants ended with identical accepted sets
    /// and decisions.
    pub agreement: bool,
    /// Honest commander only: every honest lieutenant decided its order.
    pub validity: Option<bool>,
    /// Honest-lieutenant acceptances of a value other than an honest
    /// commander's order.
    pub forged_acceptances: u64,
    /// Acceptances whose chain length is not `round + 1`.
    pub round_count_violations: u64,
    /// Final-round acceptances whose chain holds no honest lieutenant's
    /// real sublist.
    pub unattributed_final_acceptances: u64,
    pub decoys_total: u64,
    pub decoys_mismatched: u64,
    #[serde(skip)]
    pub trace: Option<RunTrace>,
}

fn distribute_from(scenario: &ResolvedScenario, rng: &mut SimRng) -> Result<DistributionOutcome, HarnessError> {
    let config = &scenario.config;
    let mut adversary = config.channel_adversary.build();
    let attack = (config.channel_adversary != ChannelAdversaryKind::None).then(|| ChannelAttack {
        adversary: adversary.as_mut(),
        channels: config.tapped_channels.clone().unwrap_or_else(|| (0..config.n).collect()),
    });
    distribute_with_rng(&scenario.distribution, attack, rng).map_err(|e| HarnessError::Internal(e.to_string()))
}

/// The distribution phase of run `run_index`, exactly as a campaign draws it.
pub fn distribute_run(scenario: &ResolvedScenario, run_index: u64) -> Result<DistributionOutcome, HarnessError> {
    distribute_from(scenario, &mut run_rng(scenario.config.seed, run_index))
}

/// Runs one member of a campaign.
pub fn run_single(scenario: &ResolvedScenario, run_index: u64, keep_trace: bool) -> Result<RunRecord, HarnessError> {
    let config = &scenario.config;
    let mut rng = run_rng(config.seed, run_index);
    let mut events = Vec::new();
    if keep_trace {
        events.push(TraceEvent::Header {
            schema_version: TRACE_SCHEMA_VERSION,
            seed: config.seed,
            run_index,
            config: serde_json::to_value(config)?,
        });
    }

    let outcome = distribute_from(scenario, &mut rng)?;
    if keep_trace {
        events.push(TraceEvent::Distribution {
            outcome: outcome.clone(),
        });
    }

    let mut record = RunRecord {
        run_index,
        status: RunStatus::Completed,
        decisions: Vec::new(),
        agreement: true,
        validity: None,
        forged_acceptances: 0,
        round_count_violations: 0,
        unattributed_final_acceptances: 0,
        decoys_total: outcome.decoys.total as u64,
        decoys_mismatched: outcome.decoys.mismatched as u64,
        trace: None,
    };

    if let Some(AbortReason::TamperingDetected { .. }) = outcome.abort {
        record.status = RunStatus::Aborted;
    } else {
        let mut commander = config
            .commander_strategy
            .build(config.commander_order, config.correlation_prob);
        let mut lieutenant = config.strategy.build(config.commander_order, config.correlation_prob);
        let start = events.len();
        match run_protocol(
            &outcome,
            &scenario.setup,
            commander.as_mut(),
            lieutenant.as_mut(),
            &mut rng,
            &mut events,
        ) {
            Ok(result) => {
                record.agreement = result.agreement();
                if config.commander_honest() {
                    record.validity = Some(result.all_decided(config.commander_order));
                }
                record.decisions = result
                    .commander
                    .map(|d| (COMMANDER, d))
                    .into_iter()
                    .chain(result.lieutenants.iter().map(|p| (p.party, p.decision)))
                    .collect();
                audit(scenario, &outcome, &events[start..], &mut record);
            }
            Err(e) if e.is_support_shortfall() => {
                record.status = RunStatus::SupportShortfall;
                events.truncate(start);
            }
            Err(SimError::Config(m)) => return Err(HarnessError::Config(m)),
            Err(e) => return Err(HarnessError::Internal(e.to_string())),
        }
    }
    if keep_trace {
        record.trace = Some(RunTrace { events });
    }
    Ok(record)
}

/// Counts forged acceptances, chain-length violations and final-round
/// acceptances not traceable to an honest sublist.
fn audit(scenario: &ResolvedScenario, outcome: &DistributionOutcome, events: &[TraceEvent], record: &mut RunRecord) {
    let setup = &scenario.setup;
    let final_round = setup.params.final_round();
    let honest_lieutenants: Vec<PartyId> = (1..setup.params.n).filter(|p| !setup.corrupt.contains(p)).collect();
    for e in events {
        let TraceEvent::Deliver {
            round,
            receiver,
            message,
            outcome: DeliveryOutcome::Accepted,
            checked_chain,
            ..
        } = e
        else {
            continue;
        };
        let chain = checked_chain.as_deref().unwrap_or_default();
        if chain.len() != round + 1 {
            record.round_count_violations += 1;
        }
        if scenario.config.commander_honest() && message.value != setup.commander_order {
            record.forged_acceptances += 1;
        }
        if *round == final_round {
            let positions = &message.support_positions;
            let attributed = honest_lieutenants.iter().filter(|&p| p != receiver).any(|&p| {
                let real: Vec<Symbol> = positions
                    .iter()
                    .map(|&k| outcome.lists[p].as_slice()[k - 1])
                    .collect();
                chain[..chain.len() - 1].iter().any(|entry| entry.as_slice() == real.as_slice())
            });
            if !attributed {
                record.unattributed_final_acceptances += 1;
            }
        }
    }
}

/// Aggregate results of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scenario: ScenarioConfig,
    pub calibration: Option<Calibration>,
    pub list_length: usize,
    pub min_support: usize,
    pub negative_control: bool,
    pub runs: u64,
    pub completed: u64,
    pub aborted: u64,
    pub support_shortfall: u64,
    /// Over completed runs.
    pub agreement_rate: Option<f64>,
    /// Over completed runs with an honest commander.
    pub validity_rate: Option<f64>,
    /// Decoy aborts over all runs.
    pub abort_rate: f64,
    pub forgery_acceptance_count: u64,
    pub round_count_violations: u64,
    pub unattributed_final_acceptances: u64,
    /// Mismatched decoys over checked decoys.
    pub decoy_detection_rate: Option<f64>,
    pub records: Vec<RunRecord>,
    /// Excluded from the machine-readable form so that it stays identical
    /// across repeated campaigns.
    #[serde(skip)]
    pub wall_clock: Duration,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Runs every member of a campaign. When `traces` is given, each run's trace
/// is written to it as JSON Lines.
pub fn run_scenario(config: &ScenarioConfig, mut traces: Option<&mut dyn Write>) -> Result<RunReport, HarnessError> {
    let start = Instant::now();
    let scenario = resolve(config)?;
    let mut records = Vec::with_capacity(config.runs as usize);
    for i in 0..config.runs {
        let mut record = run_single(&scenario, i, traces.is_some())?;
        if let (Some(out), Some(trace)) = (traces.as_deref_mut(), record.trace.take()) {
            out.write_all(trace.to_jsonl().as_bytes())?;
        }
        records.push(record);
    }
    Ok(summarize(&scenario, records, start.elapsed()))
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn summarize(scenario: &ResolvedScenario, records: Vec<RunRecord>, wall_clock: Duration) -> RunReport {
    let count = |f: &dyn Fn(&RunRecord) -> bool| records.iter().filter(|r| f(r)).count() as u64;
    let completed = count(&|r| r.status == RunStatus::Completed);
    let with_validity = count(&|r| r.status == RunStatus::Completed && r.validity.is_some());
    let sum = |f: &dyn Fn(&RunRecord) -> u64| records.iter().map(f).sum::<u64>();
    RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: scenario.config.clone(),
        calibration: scenario.calibration,
        list_length: scenario.distribution.list_length,
        min_support: scenario.setup.params.min_support,
        negative_control: scenario.config.is_negative_control(),
        runs: records.len() as u64,
        completed,
        aborted: count(&|r| r.status == RunStatus::Aborted),
        support_shortfall: count(&|r| r.status == RunStatus::SupportShortfall),
        agreement_rate: ratio(count(&|r| r.status == RunStatus::Completed && r.agreement), completed),
        validity_rate: ratio(
            count(&|r| r.status == RunStatus::Completed && r.validity == Some(true)),
            with_validity,
        ),
        abort_rate: count(&|r| r.status == RunStatus::Aborted) as f64 / records.len().max(1) as f64,
        forgery_acceptance_count: sum(&|r| r.forged_acceptances),
        round_count_violations: sum(&|r| r.round_count_violations),
        unattributed_final_acceptances: sum(&|r| r.unattributed_final_acceptances),
        decoy_detection_rate: ratio(sum(&|r| r.decoys_mismatched), sum(&|r| r.decoys_total)),
        records,
        wall_clock,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Text,
    Json,
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v}"))
}

/// Renders a report. The JSON form omits wall-clock time; the text form
/// includes it but not the per-run records.
pub fn emit_report(report: &RunReport, format: ReportFormat) -> Result<String, HarnessError> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        ReportFormat::Text => {
            let s = &report.scenario;
            let mut out = String::new();
            let mut line = |k: &str, v: String| writeln!(out, "{k:<32}{v}").expect("writing to a String");
            line("parties (n)", s.n.to_string());
            line("tolerated faults (m)", s.m.to_string());
            line("alphabet (w)", s.w.to_string());
            line("commander order", s.commander_order.to_string());
            line("corrupt", format!("{:?}", s.corrupt));
            line("commander strategy", s.commander_strategy.name().to_string());
            line("lieutenant strategy", s.strategy.name().to_string());
            line("channel adversary", format!("{:?}", s.channel_adversary));
            line("seed", s.seed.to_string());
            line("list length", report.list_length.to_string());
            line("min support", report.min_support.to_string());
            if let Some(c) = &report.calibration {
                line("calibration epsilon", format!("{}", c.epsilon));
                line("per-position bound", format!("{}", c.per_position_bound));
            }
            line("negative control", report.negative_control.to_string());
            line("runs", report.runs.to_string());
            line("completed", report.completed.to_string());
            line("aborted", report.aborted.to_string());
            line("support shortfall", report.support_shortfall.to_string());
            line("agreement rate", opt(report.agreement_rate));
            line("validity rate", opt(report.validity_rate));
            line("abort rate", format!("{}", report.abort_rate));
            line("forgery acceptances", report.forgery_acceptance_count.to_string());
            line("round-count violations", report.round_count_violations.to_string());
            line("unattributed final acceptances", report.unattributed_final_acceptances.to_string());
            line("decoy detection rate", opt(report.decoy_detection_rate));
            line("wall clock", format!("{:.3}s", report.wall_clock.as_secs_f64()));
            Ok(out)
        }
    }
}

/// Regenerates a trace from its header.
pub fn replay(trace: &RunTrace) -> Result<RunTrace, HarnessError> {
    let (seed, run_index, config) = trace
        .header()
        .ok_or_else(|| HarnessError::Config("trace has no header".into()))?;
    let mut config: ScenarioConfig = serde_json::from_value(config.clone())?;
    if config.seed != seed {
        return Err(HarnessError::Config(format!(
            "header seed {seed} disagrees with config seed {}",
            config.seed
        )));
    }
    config.runs = config.runs.max(run_index + 1);
    let scenario = resolve(&config)?;
    run_single(&scenario, run_index, true)?
        .trace
        .ok_or_else(|| HarnessError::Internal("trace not kept".into()))
}

/// Splits a multi-run JSON Lines file into one trace per header.
pub fn split_traces(text: &str) -> Result<Vec<RunTrace>, HarnessError> {
    let all = RunTrace::from_jsonl(text)?;
    let mut traces: Vec<RunTrace> = Vec::new();
    for e in all.events {
        if matches!(e, TraceEvent::Header { .. }) || traces.is_empty() {
            traces.push(RunTrace::default());
        }
        traces.last_mut().expect("pushed above").events.push(e);
    }
    Ok(traces)
}
