mod common;

use std::collections::{BTreeMap, BTreeSet};

use binquest_core::rules::{conversion_rate, mine_rules, MiningConfig};
use binquest_core::stats::{conditional_stats, proportion_ztest};
use common::{binary_rows, codes, matrix};
use proptest::prelude::*;
use statrs::function::erf::erfc;

#[derive(Debug)]
struct Expected {
    cr: f64,
    support: usize,
    z: f64,
}

/// Enumerates ordered pairs and applies each filter on its own, straight from
/// the rows.
fn oracle(
    rows: &[Vec<u8>],
    groups: &[u32],
    cfg: &MiningConfig,
) -> BTreeMap<(String, String), Expected> {
    let n = rows.len();
    let m = rows[0].len();
    let names = codes(m);
    let mut out = BTreeMap::new();
    for b in 0..m {
        for a in 0..m {
            if a == b {
                continue;
            }
            let n_b = rows.iter().filter(|r| r[b] == 1).count();
            let n_a = rows.iter().filter(|r| r[a] == 1).count();
            let n_ab = rows.iter().filter(|r| r[a] == 1 && r[b] == 1).count();
            let p_a = n_a as f64 / n as f64;
            let p_ab = if n_b == 0 {
                0.0
            } else {
                n_ab as f64 / n_b as f64
            };
            let cr = if p_ab > p_a {
                (p_ab - p_a) / (1.0 - p_a)
            } else if p_ab < p_a {
                (p_ab - p_a) / p_a
            } else {
                0.0
            };
            let keep = n_b > 0
                && n_b < n
                && n_a > 0
                && n_a < n
                && (!cfg.cross_group_only || groups[a] != groups[b])
                && !cfg
                    .exclusion_pairs
                    .contains(&(names[a].clone(), names[b].clone()))
                && !cfg
                    .exclusion_pairs
                    .contains(&(names[b].clone(), names[a].clone()))
                && cr.abs() >= cfg.min_abs_conversion
                && n_b >= cfg.min_support;
            if !keep {
                continue;
            }
            let z = (p_ab - p_a) / (p_a * (1.0 - p_a) / n_b as f64).sqrt();
            let p_value = erfc(z.abs() / std::f64::consts::SQRT_2);
            if p_value < cfg.alpha {
                out.insert(
                    (names[b].clone(), names[a].clone()),
                    Expected {
                        cr,
                        support: n_b,
                        z,
                    },
                );
            }
        }
    }
    out
}

fn config_strategy(m: usize) -> impl Strategy<Value = MiningConfig> {
    (
        prop_oneof![Just(0.05), Just(0.1), Just(0.2)],
        0.0..0.6f64,
        1usize..6,
        any::<bool>(),
        prop::collection::vec((0..m, 0..m), 0..3),
    )
        .prop_map(
            move |(alpha, min_cr, min_support, cross, pairs)| MiningConfig {
                alpha,
                min_abs_conversion: min_cr,
                min_support,
                cross_group_only: cross,
                exclusion_pairs: pairs
                    .into_iter()
                    .map(|(a, b)| (format!("Q{a}"), format!("Q{b}")))
                    .collect(),
            },
        )
}

fn instance() -> impl Strategy<Value = (Vec<Vec<u8>>, Vec<u32>, MiningConfig)> {
    binary_rows(2..=16, 2..=8).prop_flat_map(|rows| {
        let m = rows[0].len();
        (
            Just(rows),
            prop::collection::vec(1u32..=3, m),
            config_strategy(m),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn mined_rules_match_pair_enumeration((rows, groups, cfg) in instance()) {
        let m = matrix(&rows, Some(&groups));
        let got = mine_rules(&m, &cfg).unwrap();
        let want = oracle(&rows, &groups, &cfg);
        let got_keys: BTreeSet<_> = got.rules.iter().map(|r| (r.b_code.clone(), r.a_code.clone())).collect();
        let want_keys: BTreeSet<_> = want.keys().cloned().collect();
        prop_assert_eq!(&got_keys, &want_keys);
        for r in &got.rules {
            let e = &want[&(r.b_code.clone(), r.a_code.clone())];
            prop_assert!((r.conversion_rate - e.cr).abs() < 1e-12);
            prop_assert!((r.test.z - e.z).abs() < 1e-9);
            prop_assert_eq!(r.support, e.support);
        }
        for w in got.rules.windows(2) {
            prop_assert!(w[0].conversion_rate.abs() >= w[1].conversion_rate.abs());
        }
        let s = &got.summary;
        prop_assert_eq!(s.pairs_evaluated, rows[0].len() * (rows[0].len() - 1));
        prop_assert_eq!(
            s.empty_stratum + s.constant_consequent + s.same_group + s.excluded
                + s.low_conversion + s.low_support + s.not_significant + s.retained,
            s.pairs_evaluated
        );
    }

    #[test]
    fn tighter_thresholds_only_remove_rules(
        (rows, groups, cfg) in instance(),
        extra_support in 0usize..4,
        extra_cr in 0.0..0.3f64,
    ) {
        let m = matrix(&rows, Some(&groups));
        let loose = mine_rules(&m, &cfg).unwrap();
        let mut tight_cfg = cfg.clone();
        tight_cfg.min_support += extra_support;
        tight_cfg.min_abs_conversion = (cfg.min_abs_conversion + extra_cr).min(1.0);
        let tight = mine_rules(&m, &tight_cfg).unwrap();
        let loose_keys: BTreeSet<_> = loose.rules.iter().map(|r| (&r.b_code, &r.a_code)).collect();
        for r in &tight.rules {
            prop_assert!(loose_keys.contains(&(&r.b_code, &r.a_code)));
        }
    }

    #[test]
    fn duplicating_rows_keeps_rates_and_doubles_support(rows in binary_rows(2..=12, 2..=6)) {
        let doubled: Vec<Vec<u8>> = rows.iter().chain(rows.iter()).cloned().collect();
        let cfg = MiningConfig {
            alpha: 0.999,
            min_abs_conversion: 0.0,
            min_support: 1,
            cross_group_only: false,
            exclusion_pairs: BTreeSet::new(),
        };
        let once = mine_rules(&matrix(&rows, None), &cfg).unwrap();
        let twice = mine_rules(&matrix(&doubled, None), &cfg).unwrap();
        let twice_by_key: BTreeMap<_, _> = twice.rules.iter().map(|r| ((r.b_code.clone(), r.a_code.clone()), r)).collect();
        for r in &once.rules {
            let d = twice_by_key[&(r.b_code.clone(), r.a_code.clone())];
            prop_assert_eq!(d.support, 2 * r.support);
            prop_assert_eq!(d.conversion_rate, r.conversion_rate);
            prop_assert_eq!(d.cond.p_a, r.cond.p_a);
            prop_assert_eq!(d.cond.p_a_given_b, r.cond.p_a_given_b);
        }
    }

    #[test]
    fn conversion_rate_is_bounded_and_zero_only_at_equality(
        p_a in 0.0..=1.0f64,
        p_ab in 0.0..=1.0f64,
    ) {
        match conversion_rate(p_a, p_ab) {
            Ok(cr) => {
                prop_assert!((-1.0..=1.0).contains(&cr));
                prop_assert_eq!(cr == 0.0, p_a == p_ab);
                prop_assert_eq!(cr > 0.0, p_ab > p_a);
            }
            Err(_) => prop_assert!((p_a == 1.0 && p_ab > p_a) || (p_a == 0.0 && p_ab < p_a)),
        }
    }

    #[test]
    fn conversion_rate_sign_follows_difference(rows in binary_rows(2..=20, 2..=5)) {
        let m = matrix(&rows, None);
        if let Ok(c) = conditional_stats(&m, "Q0", "Q1") {
            if c.n_a > 0 && c.n_a < c.n {
                let cr = conversion_rate(c.p_a, c.p_a_given_b).unwrap();
                prop_assert_eq!(cr.signum() * (c.p_a_given_b - c.p_a).signum() >= 0.0, true);
            }
        }
    }
}

#[test]
fn contingency_example_with_four_hundred_rows() {
    // 100 rows answer B; 90 of them also answer A. 110 of the other 300 answer A.
    let mut rows = Vec::new();
    rows.extend(std::iter::repeat_n(vec![1u8, 1], 90));
    rows.extend(std::iter::repeat_n(vec![0u8, 1], 10));
    rows.extend(std::iter::repeat_n(vec![1u8, 0], 110));
    rows.extend(std::iter::repeat_n(vec![0u8, 0], 190));
    let m = matrix(&rows, None);
    let c = conditional_stats(&m, "Q0", "Q1").unwrap();
    assert_eq!((c.n, c.n_b, c.n_a, c.n_ab), (400, 100, 200, 90));
    let cr = conversion_rate(c.p_a, c.p_a_given_b).unwrap();
    assert!((cr - 0.8).abs() < 1e-9);
    let t = proportion_ztest(c.p_a, c.p_a_given_b, c.n_b, 0.05).unwrap();
    assert!((t.z - 8.0).abs() < 1e-9);
    assert!(t.significant);
}
