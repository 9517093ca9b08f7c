use num_traits::One;
use serde_json::{json, Value};

use super::HarnessError;
use crate::bitextract::{extract_stream, DEFAULT_EXTRACTION_BUDGET};
use crate::coinlab::{CoinSpec, Seed};
use crate::estimator::{estimate_once, estimate_sequence, AccuracySpec, DEFAULT_TOSS_BUDGET};
use crate::machines::{parse_machine, run_ground_truth, run_with_coin, OMachine, RunOutput, DEFAULT_STEP_BUDGET};
use crate::numeric::{pow2_recip, rational_to_bitstream, Rational};
use crate::oracle::{CoinOracle, EncodingMode, MembershipOracle, OracleSet};

pub const MEMBER_MACHINE: &str = include_str!("../../fixtures/machines/member.om");

const THIRD_EXACT: &str = "exact:1/3";
const THIRD_CONVERGING: &str = "converging:1/3";
const THIRD_MIXTURE: &str = "mixture:1/4@1/2,5/12@1/2";

#[derive(Debug, Clone)]
pub enum ScenarioKind {
    /// One estimate at accuracy `2^-k`; fails iff `|p_hat - p| >= 2^-k`.
    Estimate { coin: String, j: u32, k: u32 },
    /// Estimates `p_1 .. p_kmax`; fails iff any of them is inaccurate.
    Sequence { coin: String, j: u32, kmax: u32 },
    /// Streams the first `bits` bits; fails iff one is wrong or never arrives.
    Extract { coin: String, j: u32, bits: u64 },
    /// Coin-backed run of a machine; fails iff its output differs from the
    /// ground-truth run or the oracle gives out.
    Machine { machine: &'static str, set: String, mode: EncodingMode, j: u32, input: u64 },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub default_trials: u64,
    pub default_alpha: f64,
    /// Failure probability the algorithm promises not to exceed.
    pub bound: Rational,
    /// Expected headroom between the real failure rate and `bound`.
    pub slack_note: &'static str,
}

pub(super) struct TrialOutcome {
    pub failed: bool,
    pub tosses: u64,
}

fn coin_spec(text: &str) -> Result<CoinSpec, HarnessError> {
    text.parse().map_err(|e| HarnessError::Misconfigured(format!("coin {text:?}: {e}")))
}

fn target(spec: &CoinSpec) -> Result<Rational, HarnessError> {
    spec.effective_bias().ok_or_else(|| HarnessError::Misconfigured(format!("{spec} has no known rational target")))
}

impl Scenario {
    pub fn config(&self) -> Value {
        let body = match &self.kind {
            ScenarioKind::Estimate { coin, j, k } => json!({"type": "estimate", "coin": coin, "j": j, "k": k}),
            ScenarioKind::Sequence { coin, j, kmax } => {
                json!({"type": "sequence", "coin": coin, "j": j, "kmax": kmax})
            }
            ScenarioKind::Extract { coin, j, bits } => json!({"type": "extract", "coin": coin, "j": j, "bits": bits}),
            ScenarioKind::Machine { set, mode, j, input, .. } => json!({
                "type": "machine", "machine": "member.om", "set": set, "mode": mode, "j": j, "input": input
            }),
        };
        json!({"scenario": self.name, "bound": self.bound.to_string(), "detail": body})
    }

    pub(super) fn prepare(&self) -> Result<Prepared, HarnessError> {
        Ok(match &self.kind {
            ScenarioKind::Estimate { coin, j, k } => {
                let spec = coin_spec(coin)?;
                let p = target(&spec)?;
                Prepared::Estimate { spec, p, accuracy: AccuracySpec::new(*j, *k)? }
            }
            ScenarioKind::Sequence { coin, j, kmax } => {
                let spec = coin_spec(coin)?;
                let p = target(&spec)?;
                Prepared::Sequence { spec, p, j: *j, kmax: *kmax }
            }
            ScenarioKind::Extract { coin, j, bits } => {
                let spec = coin_spec(coin)?;
                let p = target(&spec)?;
                let truth =
                    rational_to_bitstream(&p).map_err(|e| HarnessError::Misconfigured(e.to_string()))?.prefix(*bits);
                Prepared::Extract { spec, truth, j: *j }
            }
            ScenarioKind::Machine { machine, set, mode, j, input } => {
                let machine = parse_machine(machine).map_err(|e| HarnessError::Misconfigured(e.to_string()))?;
                let set = OracleSet::parse(set).map_err(|e| HarnessError::Misconfigured(e.to_string()))?;
                let truth = run_ground_truth(&machine, &set, *input, DEFAULT_STEP_BUDGET)?;
                Prepared::Machine { machine, set, mode: *mode, j: *j, input: *input, expected: truth.output }
            }
        })
    }
}

pub(super) enum Prepared {
    Estimate { spec: CoinSpec, p: Rational, accuracy: AccuracySpec },
    Sequence { spec: CoinSpec, p: Rational, j: u32, kmax: u32 },
    Extract { spec: CoinSpec, truth: Vec<u8>, j: u32 },
    Machine { machine: OMachine, set: OracleSet, mode: EncodingMode, j: u32, input: u64, expected: RunOutput },
}

impl Prepared {
    pub fn trial(&self, seed: Seed) -> Result<TrialOutcome, HarnessError> {
        let build = |spec: &CoinSpec| spec.build(seed).map_err(|e| HarnessError::Misconfigured(e.to_string()));
        match self {
            Prepared::Estimate { spec, p, accuracy } => {
                let mut coin = build(spec)?;
                let estimate = estimate_once(&mut coin, *accuracy, DEFAULT_TOSS_BUDGET)?;
                Ok(TrialOutcome { failed: !estimate.is_accurate_for(p), tosses: estimate.tosses_used })
            }
            Prepared::Sequence { spec, p, j, kmax } => {
                let mut coin = build(spec)?;
                let mut sequence = estimate_sequence(&mut coin, *j, DEFAULT_TOSS_BUDGET);
                let mut failed = false;
                for _ in 0..*kmax {
                    let estimate = sequence.next().expect("the sequence is unbounded")?;
                    failed |= !estimate.is_accurate_for(p);
                }
                Ok(TrialOutcome { failed, tosses: sequence.tosses_spent() })
            }
            Prepared::Extract { spec, truth, j } => {
                let mut stream = extract_stream(build(spec)?, *j, DEFAULT_EXTRACTION_BUDGET);
                let got = stream.ensure(truth.len() as u64);
                let correct =
                    got.is_some() && stream.emitted()[..truth.len()].iter().map(|b| b.bit).eq(truth.iter().copied());
                Ok(TrialOutcome { failed: !correct, tosses: stream.tosses_total() })
            }
            Prepared::Machine { machine, set, mode, j, input, expected } => {
                let oracle = CoinOracle::for_set(set, *mode, *j, seed, DEFAULT_EXTRACTION_BUDGET)?;
                let failed = match run_with_coin(machine, &oracle, *input, DEFAULT_STEP_BUDGET) {
                    Ok(run) => run.output != *expected,
                    Err(_) => true,
                };
                Ok(TrialOutcome { failed, tosses: oracle.tosses_total() })
            }
        }
    }
}

fn scenario(name: &str, kind: ScenarioKind, trials: u64, alpha: f64, bound_exp: u64, slack: &'static str) -> Scenario {
    Scenario {
        name: name.to_string(),
        kind,
        default_trials: trials,
        default_alpha: alpha,
        bound: pow2_recip(bound_exp),
        slack_note: slack,
    }
}

/// Every scenario the acceptance suite runs, in a fixed order.
pub fn registry() -> Vec<Scenario> {
    const CHEBYSHEV: &str = "Chebyshev is loose: real failure rates are orders of magnitude under the bound";
    let mut out = Vec::new();
    for (suffix, coin) in [("", THIRD_EXACT), ("-converging", THIRD_CONVERGING), ("-mixture", THIRD_MIXTURE)] {
        out.push(scenario(
            &format!("estimate-third{suffix}"),
            ScenarioKind::Estimate { coin: coin.to_string(), j: 3, k: 4 },
            2000,
            1e-3,
            3,
            CHEBYSHEV,
        ));
    }
    out.push(scenario(
        "sequence-third",
        ScenarioKind::Sequence { coin: THIRD_EXACT.to_string(), j: 4, kmax: 5 },
        200,
        1e-3,
        4,
        CHEBYSHEV,
    ));
    for (suffix, coin) in [("", THIRD_EXACT), ("-converging", THIRD_CONVERGING), ("-mixture", THIRD_MIXTURE)] {
        out.push(scenario(
            &format!("extract-third{suffix}"),
            ScenarioKind::Extract { coin: coin.to_string(), j: 5, bits: 4 },
            200,
            1e-3,
            5,
            "1/3 has no long runs, so each bit settles two rounds after it is reached with very accurate estimates",
        ));
    }
    for input in 1..=6 {
        out.push(scenario(
            &format!("member-evens-{input}"),
            ScenarioKind::Machine {
                machine: MEMBER_MACHINE,
                set: "evens".to_string(),
                mode: EncodingMode::Direct,
                j: 4,
                input,
            },
            50,
            1e-2,
            4,
            "the oracle bit is extracted at confidence j = 4; real error rates sit far below 1/16",
        ));
    }
    out
}

pub fn find_scenario(name: &str) -> Result<Scenario, HarnessError> {
    registry().into_iter().find(|s| s.name == name).ok_or_else(|| HarnessError::UnknownScenario(name.to_string()))
}

impl Scenario {
    pub fn bound_is_probability(&self) -> bool {
        self.bound <= Rational::one()
    }
}
