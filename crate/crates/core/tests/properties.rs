use num_bigint::BigUint;
use num_traits::{One, Zero};
use proptest::prelude::*;

use coinoracle::bitextract::{extract_stream, StreamItem, DEFAULT_EXTRACTION_BUDGET};
use coinoracle::coinlab::{
    converging_from_target, CoinSource, ExactCoin, MixtureCoin, MixtureDistribution, Seed, SourceKind,
};
use coinoracle::estimator::{
    confidence_schedule, sample_count, schedule_failure_sum, sequence_sample_count, AccuracySpec,
};
use coinoracle::machines::{execute, parse_machine, run_ground_truth, run_with_coin, RunMode, DEFAULT_STEP_BUDGET};
use coinoracle::numeric::{pow2_recip, ratio, rational_to_bitstream, Rational};
use coinoracle::oracle::{decode_bits, encode_set, CoinOracle, EncodingMode, OracleSet};

const MEMBER: &str = include_str!("../fixtures/machines/member.om");
const HALT: &str = include_str!("../fixtures/machines/halt.om");

fn is_power_of_two(n: &BigUint) -> bool {
    !n.is_zero() && (n & (n - BigUint::one())).is_zero()
}

fn fixture_sets() -> Vec<OracleSet> {
    ["evens", "odds", "primes", "multiples:3", "multiples:5", "finite:2,3,7"]
        .iter()
        .map(|n| OracleSet::parse(n).unwrap())
        .collect()
}

proptest! {
    #[test]
    fn counts_are_monotone_powers_of_two(j in 1u32..12, k in 1u32..12) {
        let spec = AccuracySpec::new(j, k).unwrap();
        for kind in [SourceKind::Exact, SourceKind::Converging, SourceKind::Mixture] {
            let n = sample_count(spec, kind);
            let m = sequence_sample_count(spec, kind);
            prop_assert!(is_power_of_two(&n) && is_power_of_two(&m));
            prop_assert!(m >= n);
            prop_assert!(sample_count(AccuracySpec::new(j + 1, k).unwrap(), kind) > n);
            prop_assert!(sample_count(AccuracySpec::new(j, k + 1).unwrap(), kind) > n);
        }
    }

    #[test]
    fn schedule_sum_is_geometric(j in 1u32..20, upto in 0u32..30) {
        // closed form of sum_{i=1}^{upto} 2^-(j+i)
        let closed = pow2_recip(u64::from(j)) * (Rational::one() - pow2_recip(u64::from(upto)));
        prop_assert_eq!(schedule_failure_sum(j, upto), closed);
        prop_assert!(upto == 0 || confidence_schedule(j, upto) == j + upto);
    }

    #[test]
    fn finite_sets_round_trip(members in proptest::collection::btree_set(1u64..60, 0..12)) {
        let set = OracleSet::finite(members.iter().copied());
        for mode in [EncodingMode::Direct, EncodingMode::Guarded] {
            let stream = encode_set(&set, mode);
            for n in 1..=64 {
                prop_assert_eq!(decode_bits(&stream, n, mode), members.contains(&n));
            }
        }
        let guarded = encode_set(&set, EncodingMode::Guarded).prefix(256);
        prop_assert!(guarded.windows(4).all(|w| w.contains(&0) && w.contains(&1)));
    }

    #[test]
    fn perfect_oracle_matches_ground_truth(input in 1u64..40, which in 0usize..6) {
        let set = &fixture_sets()[which];
        for text in [MEMBER, HALT] {
            let m = parse_machine(text).unwrap();
            let truth = run_ground_truth(&m, set, input, DEFAULT_STEP_BUDGET).unwrap();
            let swapped = execute(&m, set, input, DEFAULT_STEP_BUDGET, RunMode::CoinBacked).unwrap();
            prop_assert!(truth.same_execution(&swapped));
            prop_assert_eq!(swapped.mode, RunMode::CoinBacked);
        }
    }

    #[test]
    fn member_queries_its_input(input in 1u64..200) {
        let m = parse_machine(MEMBER).unwrap();
        let run = run_ground_truth(&m, &OracleSet::primes(), input, DEFAULT_STEP_BUDGET).unwrap();
        prop_assert_eq!(run.queries.len(), 1);
        prop_assert_eq!(run.queries[0].n, input);
        prop_assert_eq!(run.halted_output(), Some(u64::from(OracleSet::primes().contains(input))));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn coin_backed_runs_repeat_under_a_seed(seed in any::<u64>(), input in 1u64..4) {
        let m = parse_machine(MEMBER).unwrap();
        let run = || {
            let oracle = CoinOracle::for_set(&OracleSet::evens(), EncodingMode::Direct, 3, Seed(seed), DEFAULT_EXTRACTION_BUDGET).unwrap();
            run_with_coin(&m, &oracle, input, DEFAULT_STEP_BUDGET).unwrap()
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn stream_emits_in_order(seed in any::<u64>()) {
        let coin = converging_from_target(rational_to_bitstream(&ratio(2, 7)).unwrap(), Seed(seed));
        let mut stream = extract_stream(coin, 3, 1 << 26);
        let mut next = 1;
        for item in stream.by_ref().take(8) {
            match item {
                StreamItem::Bit(b) => {
                    prop_assert_eq!(b.index, next);
                    next += 1;
                }
                StreamItem::End(_) => break,
            }
        }
        let ks: Vec<u32> = stream.emitted().iter().map(|b| b.k).collect();
        prop_assert!(ks.windows(2).all(|w| w[0] <= w[1]));
    }
}

fn frequency(coin: &mut dyn CoinSource, n: u64) -> f64 {
    coin.count_heads(n).unwrap() as f64 / n as f64
}

#[test]
fn every_source_hits_its_bias_in_almost_all_repetitions() {
    let third = || rational_to_bitstream(&ratio(1, 3)).unwrap();
    let mixture = MixtureDistribution::Discrete(vec![(ratio(1, 4), ratio(1, 2)), (ratio(5, 12), ratio(1, 2))]);
    let n = 1_000_000;
    let base = Seed(77);
    for kind in ["exact", "converging", "mixture"] {
        let mut within = 0;
        for rep in 0..100 {
            let seed = base.split_named(kind).split(rep);
            let mut coin: Box<dyn CoinSource> = match kind {
                "exact" => Box::new(ExactCoin::new(third(), seed)),
                "converging" => Box::new(converging_from_target(third(), seed)),
                _ => Box::new(MixtureCoin::new(mixture.clone(), seed).unwrap()),
            };
            if (frequency(coin.as_mut(), n) - 1.0 / 3.0).abs() < 1.0 / 128.0 {
                within += 1;
            }
        }
        assert!(within >= 99, "{kind}: {within}/100");
    }
}

#[test]
fn mixture_agrees_with_a_plain_coin_at_its_mean() {
    let n = 1_000_000u64;
    let tolerance = 3.0 * (1.0 / (4.0 * n as f64)).sqrt() * 2.0;
    let cases = [
        MixtureDistribution::Discrete(vec![(ratio(1, 4), ratio(1, 2)), (ratio(5, 12), ratio(1, 2))]),
        MixtureDistribution::Discrete(vec![(ratio(0, 1), ratio(1, 3)), (ratio(1, 2), ratio(2, 3))]),
        MixtureDistribution::Uniform { low: ratio(1, 5), high: ratio(7, 15) },
    ];
    for (i, dist) in cases.into_iter().enumerate() {
        let mut mixture = MixtureCoin::new(dist, Seed(300 + i as u64)).unwrap();
        let mean = mixture.mean();
        let mut plain = ExactCoin::new(rational_to_bitstream(&mean).unwrap(), Seed(400 + i as u64));
        let a = frequency(&mut mixture, n);
        let b = frequency(&mut plain, n);
        assert!((a - b).abs() < tolerance, "case {i}: mixture {a} vs exact {b} at mean {mean}");
    }
}
