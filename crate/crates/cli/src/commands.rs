use std::fmt;
use std::path::Path;

use serde_json::{json, Value};

use coinoracle::bitextract::{extract_bit, extract_stream, BitQuery, ExtractionOutcome, StreamEnd, StreamItem};
use coinoracle::coinlab::{CoinConfig, CoinSpec, Seed};
use coinoracle::estimator::{estimate_once, estimate_sequence, AccuracySpec, EstimateError};
use coinoracle::harness::{find_scenario, registry, run_meta_trials, HarnessError, Scenario};
use coinoracle::machines::{
    parse_machine, run_ground_truth, run_with_coin, universal_run, MachineCatalog, MachineError,
};
use coinoracle::oracle::{encode_set, CoinOracle, OracleError, OracleSet};

use crate::{Cli, CoinArgs, Command};

const OUTPUT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Budget(String),
    Statistical(String),
    Other(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Statistical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Budget(m) | CliError::Statistical(m) | CliError::Other(m) => f.write_str(m),
        }
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        match e {
            EstimateError::BudgetRefused { .. } => CliError::Budget(e.to_string()),
            EstimateError::InvalidSpec { .. } => CliError::Usage(e.to_string()),
            EstimateError::Flip(_) => CliError::Other(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Unavailable { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<MachineError> for CliError {
    fn from(e: MachineError) -> Self {
        match e {
            MachineError::Oracle(o) => o.into(),
            MachineError::IndexOutOfRange { .. } | MachineError::Catalog(_) => CliError::Usage(e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Estimate(e) => e.into(),
            HarnessError::Machine(e) => e.into(),
            HarnessError::Oracle(e) => e.into(),
            HarnessError::UnknownScenario(_) | HarnessError::Misconfigured(_) => CliError::Usage(e.to_string()),
        }
    }
}

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// The coin and, when the file names one, its seed.
fn load_coin(args: &CoinArgs) -> Result<(CoinSpec, Option<u64>), CliError> {
    if let Some(text) = &args.coin {
        return Ok((text.parse().map_err(usage)?, None));
    }
    let path = args.coin_file.as_ref().expect("clap requires one of --coin / --coin-file");
    let text = read_file(path)?;
    let config: CoinConfig = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        _ => serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?,
    };
    Ok((config.to_spec().map_err(usage)?, config.seed))
}

fn coin_config(spec: &CoinSpec, seed: u64) -> Value {
    serde_json::to_value(CoinConfig::from_spec(spec, Some(seed))).expect("config serializes")
}

fn resolve_seed(flag: Option<u64>, from_file: Option<u64>) -> u64 {
    flag.or(from_file).unwrap_or_else(rand::random)
}

fn emit(out: Option<&Path>, command: &str, seed: Option<u64>, config: Value, result: Value) -> Result<(), CliError> {
    let doc = json!({
        "schema_version": OUTPUT_SCHEMA_VERSION,
        "command": command,
        "seed": seed,
        "config": config,
        "result": result,
    });
    let text = serde_json::to_string_pretty(&doc).expect("output serializes") + "\n";
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Other(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_set(name: &str) -> Result<OracleSet, CliError> {
    OracleSet::parse(name).map_err(usage)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Estimate { coin, j, k, sequence, budget } => {
            let (spec, file_seed) = load_coin(&coin)?;
            let seed = resolve_seed(cli.seed, file_seed);
            let accuracy = AccuracySpec::new(j, k)?;
            let mut source = spec.build(Seed(seed)).map_err(usage)?;
            let config =
                json!({"coin": coin_config(&spec, seed), "j": j, "k": k, "sequence": sequence, "budget": budget});
            let result = if sequence {
                let mut estimates = Vec::new();
                let mut stream = estimate_sequence(&mut source, j, budget);
                for _ in 0..k {
                    estimates.push(stream.next().expect("unbounded sequence")?);
                }
                eprintln!("{} estimates, {} tosses", estimates.len(), stream.tosses_spent());
                json!({"estimates": estimates, "tosses_total": stream.tosses_spent()})
            } else {
                let estimate = estimate_once(&mut source, accuracy, budget)?;
                eprintln!("p_hat = {} from {} tosses", estimate.value, estimate.tosses_used);
                serde_json::to_value(estimate).expect("estimate serializes")
            };
            emit(out, "estimate", Some(seed), config, result)
        }
        Command::Extract { coin, j, l, bits, budget } => {
            if j == 0 {
                return Err(usage("j starts at 1"));
            }
            let (spec, file_seed) = load_coin(&coin)?;
            let seed = resolve_seed(cli.seed, file_seed);
            let source = spec.build(Seed(seed)).map_err(usage)?;
            let config = json!({"coin": coin_config(&spec, seed), "j": j, "l": l, "bits": bits, "budget": budget});
            if let Some(l) = l {
                if l == 0 {
                    return Err(usage("bit positions start at 1"));
                }
                let mut source = source;
                let trace = extract_bit(&mut source, &BitQuery { l, j, toss_budget: Some(budget) })
                    .map_err(|e| CliError::Other(e.to_string()))?;
                let exhausted = trace.outcome == ExtractionOutcome::BudgetExhausted;
                emit(out, "extract", Some(seed), config, serde_json::to_value(&trace).expect("trace serializes"))?;
                if exhausted {
                    return Err(CliError::Budget(format!("bit {l} not settled within {budget} tosses")));
                }
                return Ok(());
            }
            let mut stream = extract_stream(source, j, budget);
            let mut emitted = Vec::new();
            let mut end: Option<StreamEnd> = None;
            for item in stream.by_ref() {
                match item {
                    StreamItem::Bit(b) => {
                        emitted.push(b);
                        if emitted.len() as u64 == bits {
                            break;
                        }
                    }
                    StreamItem::End(e) => end = Some(e),
                }
            }
            let digits: String = emitted.iter().map(|b| char::from(b'0' + b.bit)).collect();
            eprintln!("0.{digits}… after {} tosses", stream.tosses_total());
            let result = json!({
                "bits": digits,
                "emitted": emitted,
                "tosses_total": stream.tosses_total(),
                "end": end,
            });
            emit(out, "extract", Some(seed), config, result)?;
            match end {
                Some(StreamEnd::BudgetExhausted { .. }) => {
                    Err(CliError::Budget(format!("stream stopped after {} of {bits} bits", emitted.len())))
                }
                Some(StreamEnd::CoinFailure(e)) => Err(CliError::Other(e)),
                None => Ok(()),
            }
        }
        Command::Encode { set, mode, bits } => {
            let oracle_set = parse_set(&set)?;
            let stream = encode_set(&oracle_set, mode);
            let digits: String = stream.prefix(bits).iter().map(|b| char::from(b'0' + b)).collect();
            let members: Vec<u64> = (1..=bits).filter(|&n| oracle_set.contains(n)).collect();
            eprintln!("p = 0.{digits}…");
            let config = json!({"set": set, "mode": mode, "bits": bits});
            let result = json!({
                "bits": digits,
                "dyadic_direct": oracle_set.finite_max().is_some(),
                "members_up_to_bits": members,
            });
            emit(out, "encode", None, config, result)
        }
        Command::RunMachine { file, set, input, coin_backed, j, mode, budget, steps } => {
            let machine = parse_machine(&read_file(&file)?).map_err(|e| usage(format!("{}: {e}", file.display())))?;
            let oracle_set = parse_set(&set)?;
            let mut config = json!({
                "file": file.display().to_string(), "set": set, "input": input, "steps": steps,
                "coin_backed": coin_backed,
            });
            if coin_backed {
                let j = j.expect("clap requires --j");
                let seed = resolve_seed(cli.seed, None);
                config["j"] = json!(j);
                config["mode"] = json!(mode);
                config["budget"] = json!(budget);
                let oracle = CoinOracle::for_set(&oracle_set, mode, j, Seed(seed), budget)?;
                let run = run_with_coin(&machine, &oracle, input, steps)?;
                eprintln!("output {:?} after {} steps, {} tosses", run.output, run.steps, run.tosses_used);
                emit(out, "run-machine", Some(seed), config, serde_json::to_value(run).expect("run serializes"))
            } else {
                let run = run_ground_truth(&machine, &oracle_set, input, steps)?;
                eprintln!("output {:?} after {} steps", run.output, run.steps);
                emit(out, "run-machine", None, config, serde_json::to_value(run).expect("run serializes"))
            }
        }
        Command::Universal { catalog, n, m, j, set, mode, budget, steps } => {
            let machines = MachineCatalog::load_dir(&catalog)?;
            let oracle_set = parse_set(&set)?;
            let seed = resolve_seed(cli.seed, None);
            let oracle = CoinOracle::for_set(&oracle_set, mode, j, Seed(seed), budget)?;
            let run = universal_run(&machines, n, m, &oracle, steps)?;
            eprintln!("machine {n} on {m}: {:?}", run.output);
            let config = json!({
                "catalog": machines.names(), "n": n, "m": m, "j": j, "set": set, "mode": mode,
                "budget": budget, "steps": steps,
            });
            emit(out, "universal", Some(seed), config, serde_json::to_value(run).expect("run serializes"))
        }
        Command::Verify { scenario, all, list, trials, alpha } => {
            if list {
                let names: Vec<Value> = registry()
                    .iter()
                    .map(|s| json!({"name": s.name, "trials": s.default_trials, "alpha": s.default_alpha, "bound": s.bound.to_string()}))
                    .collect();
                return emit(out, "verify", None, json!({"list": true}), Value::Array(names));
            }
            let scenarios: Vec<Scenario> =
                if all { registry() } else { vec![find_scenario(&scenario.expect("clap"))?] };
            let seed = resolve_seed(cli.seed, None);
            let mut reports = Vec::new();
            for s in &scenarios {
                let report =
                    run_meta_trials(s, trials.unwrap_or(s.default_trials), alpha.unwrap_or(s.default_alpha), seed)?;
                eprintln!(
                    "{}: {} ({}/{} failures, bound {}, p = {:.3e})",
                    report.experiment_id,
                    if report.pass { "PASS" } else { "FAIL" },
                    report.failures,
                    report.trials,
                    report.bound,
                    report.p_value
                );
                reports.push(report);
            }
            let failed: Vec<String> = reports.iter().filter(|r| !r.pass).map(|r| r.experiment_id.clone()).collect();
            let config = json!({"scenarios": scenarios.iter().map(|s| &s.name).collect::<Vec<_>>(), "trials": trials, "alpha": alpha});
            let result = if all {
                serde_json::to_value(&reports).expect("reports serialize")
            } else {
                serde_json::to_value(&reports[0]).expect("report serializes")
            };
            emit(out, "verify", Some(seed), config, result)?;
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Statistical(format!("failed: {}", failed.join(", "))))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_mapping() {
        assert_eq!(CliError::Other(String::new()).code(), 1);
        assert_eq!(CliError::Usage(String::new()).code(), 2);
        assert_eq!(CliError::Budget(String::new()).code(), 3);
        assert_eq!(CliError::Statistical(String::new()).code(), 4);
        let refused = EstimateError::BudgetRefused { demanded: 10u32.into(), budget: 1 };
        assert_eq!(CliError::from(refused).code(), 3);
        let unavailable = OracleError::Unavailable { n: 1, position: 1, reason: String::new() };
        assert_eq!(CliError::from(MachineError::Oracle(unavailable)).code(), 3);
        assert_eq!(CliError::from(HarnessError::UnknownScenario("x".into())).code(), 2);
    }
}
