//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_traits::One;

use coinoracle::bitextract::{extract_bit, extract_stream, BitQuery, ExtractionOutcome, StreamItem};
use coinoracle::coinlab::{CoinSource, ExactCoin, Seed, SourceKind};
use coinoracle::estimator::{chebyshev_bound, sample_count, sequence_sample_count, AccuracySpec};
use coinoracle::harness::{registry, run_meta_trials, MetaTrialReport};
use coinoracle::machines::{run_with_coin, universal_run, MachineCatalog, DEFAULT_STEP_BUDGET};
use coinoracle::numeric::{bits_to_rational, ratio, rational_to_bitstream, Rational};
use coinoracle::oracle::{decode_bits, encode_set, CoinOracle, EncodingMode, OracleSet};

const ROOT_SEED: u64 = 20_240_601;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn two_pow(e: u32) -> BigUint {
    BigUint::one() << e
}

fn criterion_1() -> Check {
    let started = Instant::now();
    for j in 1..=8u32 {
        for k in 1..=8u32 {
            let spec = AccuracySpec::new(j, k).map_err(|e| e.to_string())?;
            let cases = [
                (sample_count(spec, SourceKind::Exact), j + 2 * k - 2),
                (sample_count(spec, SourceKind::Mixture), j + 2 * k - 2),
                (sequence_sample_count(spec, SourceKind::Exact), j + 3 * k - 2),
                (sample_count(spec, SourceKind::Converging), j + 2 * k),
                (sequence_sample_count(spec, SourceKind::Converging), j + 3 * k),
            ];
            for (got, e) in cases {
                ensure(got == two_pow(e), || format!("j={j} k={k}: {got} != 2^{e}"))?;
            }
            // 2^(2k) / (4n) at n = 2^(j+2k-2), checked against a hand-built 1/2^j
            let n = 1u64 << (j + 2 * k - 2);
            let expected = Rational::new(BigInt::one(), BigInt::from(two_pow(j)));
            ensure(chebyshev_bound(k, n) == expected, || format!("chebyshev identity fails at j={j} k={k}"))?;
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    ensure(elapsed < 1.0, || format!("took {elapsed:.3}s"))?;
    Ok(format!("320 counts and 64 identities exact in {elapsed:.3}s"))
}

fn scenario_check(reports: &[MetaTrialReport], name: &str, per_trial_tosses: Option<u64>) -> Check {
    let report = reports.iter().find(|r| r.experiment_id == name).ok_or_else(|| format!("{name} missing"))?;
    if let Some(n) = per_trial_tosses {
        ensure(report.toss_totals.min_per_trial == n && report.toss_totals.max_per_trial == n, || {
            format!("{name}: tosses per trial {:?}, expected {n}", report.toss_totals)
        })?;
    }
    let line = format!(
        "{name}: {}/{} failures, bound {}, p = {:.3e}, alpha = {}",
        report.failures, report.trials, report.bound, report.p_value, report.alpha
    );
    if report.pass {
        Ok(line)
    } else {
        Err(line)
    }
}

fn criterion_2(reports: &[MetaTrialReport]) -> Check {
    scenario_check(reports, "estimate-third", Some(512))
}

fn criterion_3(reports: &[MetaTrialReport]) -> Check {
    let per_trial: u64 = (1..=5u32).map(|k| 1u64 << (4 + 3 * k - 2)).sum();
    scenario_check(reports, "sequence-third", Some(per_trial))
}

fn criterion_4(reports: &[MetaTrialReport]) -> Check {
    let line = scenario_check(reports, "extract-third", None)?;
    for seed in 0..20 {
        let half = || ExactCoin::new(rational_to_bitstream(&ratio(1, 2)).unwrap(), Seed(seed));
        for l in 1..=3 {
            let trace = extract_bit(&mut half(), &BitQuery { l, j: 5, toss_budget: Some(1 << 20) })
                .map_err(|e| e.to_string())?;
            ensure(trace.outcome == ExtractionOutcome::BudgetExhausted, || {
                format!("p = 1/2, seed {seed}, bit {l}: {:?}", trace.outcome)
            })?;
        }
        let items: Vec<StreamItem> = extract_stream(half(), 5, 1 << 20).collect();
        ensure(items.len() == 1 && matches!(items[0], StreamItem::End(_)), || {
            format!("p = 1/2 stream, seed {seed}: {items:?}")
        })?;
    }
    Ok(format!("{line}; p = 1/2 exhausted 2^20 in all 20 seeds"))
}

/// Exact value of a bit sequence that repeats `period` forever after `pre`.
fn eventually_periodic(pre: &[u8], period: &[u8]) -> Rational {
    let head = bits_to_rational(pre);
    let cycle = BigInt::from(period.iter().fold(BigUint::from(0u32), |acc, &b| (acc << 1u32) + b));
    let cycle_value = Rational::new(cycle, BigInt::from(two_pow(period.len() as u32)) - 1);
    head + cycle_value / Rational::from_integer(BigInt::from(two_pow(pre.len() as u32)))
}

fn membership_bits(set: &OracleSet, mode: EncodingMode, positions: std::ops::RangeInclusive<u64>) -> Vec<u8> {
    positions
        .map(|p| match mode {
            EncodingMode::Direct => u8::from(set.contains(p)),
            EncodingMode::Guarded => match p % 4 {
                1 => 0,
                3 => 1,
                _ => u8::from(set.contains(p / 2)),
            },
        })
        .collect()
}

fn criterion_5() -> Check {
    let fixtures = [
        ("evens", Some(2u64)),
        ("odds", Some(2)),
        ("primes", None),
        ("multiples:3", Some(3)),
        ("finite:1,4,9,16", Some(1)),
        ("finite:", Some(1)),
        ("finite:2,3,5,64", Some(1)),
    ];
    let mut checked = 0;
    for (name, period) in fixtures {
        let set = OracleSet::parse(name).map_err(|e| e.to_string())?;
        for mode in [EncodingMode::Direct, EncodingMode::Guarded] {
            let stream = encode_set(&set, mode);
            let span = 2 * 64 + 4;
            // route 1: the stream itself; route 2: its prefix as a rational and back
            let prefix = stream.prefix(span);
            let via_prefix = rational_to_bitstream(&bits_to_rational(&prefix)).map_err(|e| e.to_string())?;
            let mut routes = vec![("stream", stream.clone()), ("prefix", via_prefix)];
            // route 3 for eventually periodic encodings: the exact rational built from the predicate
            if let Some(p) = period {
                let p = if mode == EncodingMode::Guarded { 4 * p } else { p };
                let tail_start = match set.finite_max() {
                    Some(m) => 2 * m + 4,
                    None => 0,
                };
                let pre = membership_bits(&set, mode, 1..=tail_start);
                let cycle = membership_bits(&set, mode, tail_start + 1..=tail_start + p);
                let exact = eventually_periodic(&pre, &cycle);
                routes.push(("exact", rational_to_bitstream(&exact).map_err(|e| e.to_string())?));
            }
            for (route, s) in &routes {
                for n in 1..=64 {
                    ensure(decode_bits(s, n, mode) == set.contains(n), || {
                        format!("{name} {mode} via {route}: n = {n}")
                    })?;
                    checked += 1;
                }
            }
            if mode == EncodingMode::Guarded {
                let bits = stream.prefix(4096);
                for (i, w) in bits.windows(4).enumerate() {
                    ensure(w.contains(&0) && w.contains(&1), || format!("{name}: window at {} is {w:?}", i + 1))?;
                }
            }
        }
    }
    Ok(format!("{checked} decodes exact across 7 fixtures x 2 modes; every guarded 4-window has both bits"))
}

fn criterion_6(reports: &[MetaTrialReport]) -> Check {
    for input in 1..=6 {
        scenario_check(reports, &format!("member-evens-{input}"), None)?;
    }
    let catalog = MachineCatalog::load_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/machines"))
        .map_err(|e| e.to_string())?;
    ensure(catalog.len() == 2, || format!("catalog has {} machines", catalog.len()))?;
    let evens = OracleSet::evens();
    let mut grid = 0;
    for n in 0..catalog.len() {
        for m in 1..=6u64 {
            let seed = Seed(ROOT_SEED).split_named("universal").split(n as u64 * 100 + m);
            let oracle = || CoinOracle::for_set(&evens, EncodingMode::Direct, 4, seed, 1 << 30).unwrap();
            let universal = universal_run(&catalog, n, m, &oracle(), DEFAULT_STEP_BUDGET).map_err(|e| e.to_string())?;
            let direct =
                run_with_coin(catalog.get(n).unwrap(), &oracle(), m, DEFAULT_STEP_BUDGET).map_err(|e| e.to_string())?;
            ensure(universal == direct, || format!("n={n} m={m}: {universal:?} vs {direct:?}"))?;
            if n == 0 {
                ensure(universal.tosses_used == 0, || format!("halt-only machine tossed at m={m}"))?;
            }
            grid += 1;
        }
    }
    let worst =
        reports.iter().filter(|r| r.experiment_id.starts_with("member-evens-")).map(|r| r.failures).max().unwrap_or(0);
    Ok(format!(
        "inputs 1..6 pass (worst {worst}/50 failures); universal_run matches direct dispatch on {grid} (n, m) pairs"
    ))
}

fn criterion_7(reports: &[MetaTrialReport]) -> Check {
    let lines = [
        scenario_check(reports, "estimate-third-converging", Some(1 << (3 + 8)))?,
        scenario_check(reports, "estimate-third-mixture", Some(512))?,
        scenario_check(reports, "extract-third-converging", None)?,
        scenario_check(reports, "extract-third-mixture", None)?,
    ];
    Ok(lines.join("; "))
}

fn criterion_8() -> Check {
    let third = rational_to_bitstream(&ratio(1, 3)).unwrap();
    let mut coin = ExactCoin::new(third.clone(), Seed(ROOT_SEED).split_named("bit-cost"));
    let flips = 1_000_000u64;
    for _ in 0..flips {
        coin.flip().map_err(|e| e.to_string())?;
    }
    let per_flip = coin.random_bits_consumed() as f64 / flips as f64;
    ensure((1.9..=2.1).contains(&per_flip), || format!("mean random bits per flip {per_flip}"))?;

    let tolerance = 1.0 / 128.0;
    let base = Seed(ROOT_SEED).split_named("frequency");
    let mut within = 0;
    for rep in 0..100 {
        let mut coin = ExactCoin::new(third.clone(), base.split(rep));
        let heads = coin.count_heads(flips).map_err(|e| e.to_string())?;
        if (heads as f64 / flips as f64 - 1.0 / 3.0).abs() < tolerance {
            within += 1;
        }
    }
    ensure(within >= 99, || format!("only {within}/100 repetitions within 2^-7"))?;
    Ok(format!("{per_flip:.4} random bits per flip; {within}/100 repetitions within 2^-7 of 1/3"))
}

fn criterion_9(first: &[MetaTrialReport]) -> Check {
    let second = run_all()?;
    for (a, b) in first.iter().zip(&second) {
        ensure(a.reproducible_json() == b.reproducible_json(), || format!("{} differs on re-run", a.experiment_id))?;
    }
    ensure(first.len() == second.len(), || "scenario count changed".to_string())?;
    Ok(format!("{} scenario reports byte-identical on re-run", first.len()))
}

fn run_all() -> Result<Vec<MetaTrialReport>, String> {
    registry()
        .iter()
        .map(|s| {
            run_meta_trials(s, s.default_trials, s.default_alpha, ROOT_SEED).map_err(|e| format!("{}: {e}", s.name))
        })
        .collect()
}

fn main() -> ExitCode {
    let started = Instant::now();
    let reports = run_all();
    let with_reports = |f: fn(&[MetaTrialReport]) -> Check| match &reports {
        Ok(r) => f(r),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(u32, &str, Check)> = vec![
        (1, "toss-count exactness", criterion_1()),
        (2, "estimation coverage", with_reports(criterion_2)),
        (3, "sequence coverage", with_reports(criterion_3)),
        (4, "bit extraction", with_reports(criterion_4)),
        (5, "oracle round trip", criterion_5()),
        (6, "end-to-end oracle machine", with_reports(criterion_6)),
        (7, "weakened coin models", with_reports(criterion_7)),
        (8, "sampling exactness", criterion_8()),
        (9, "reproducibility", with_reports(criterion_9)),
    ];
    let mut failed = 0;
    for (n, title, result) in &results {
        match result {
            Ok(detail) => println!("criterion {n} ({title}): PASS - {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} ({title}): FAIL - {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
