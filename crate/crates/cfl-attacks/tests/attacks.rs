// SPDX-License-Identifier: Apache-2.0

use cfl_attacks::params::choose_k;
use cfl_attacks::{
    build_x, eval_counts, main_attack, nugget_finder, verify_structure, AttackConfig, BuildMode, BuildXConfig,
    GameValueTable, MartAttack, MartConfig, NuggetConfig, NuggetResult, SingAttack,
};
use cfl_core::SeedStream;
use cfl_protocol::protocols::ScriptedProtocol;
use cfl_protocol::{build_protocol, Protocol, ProtocolSpec, TupleSet};
use proptest::prelude::*;

/// `ln C(n, k)` as a sum of logs of the falling factorial.
fn ln_choose(n: usize, k: usize) -> f64 {
    (0..k).map(|j| ((n - j) as f64 / (j + 1) as f64).ln()).sum()
}

fn size_condition(n: usize, k: usize, r: usize) -> bool {
    let lg = (r as f64).log2();
    ln_choose(n, k) >= (r as f64).ln() + 2.0 * k as f64 * lg.ln() - 1e-9
}

fn xor_majority() -> ScriptedProtocol {
    ScriptedProtocol::from_fn(3, 3, 1, |c| (0..3).filter(|&t| (0..3).fold(false, |a, p| a ^ c.party(p)[t])).count() >= 2)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn choose_k_is_the_smallest_admissible_size(n in 3usize..300, r in 3usize..40) {
        match choose_k(n, r) {
            Ok(k) => {
                prop_assert!(size_condition(n, k, r));
                for smaller in 1..k {
                    prop_assert!(!size_condition(n, smaller, r));
                }
            }
            Err(_) => prop_assert!((1..=n).all(|k| !size_condition(n, k, r))),
        }
    }

    #[test]
    fn neutral_table_stays_at_one_half(counts in prop::collection::vec(0u32..=3, 6)) {
        let table = GameValueTable::neutral(5, TupleSet::choose_all(&[0, 1, 2], 1));
        let tr = eval_counts(&table, &counts).unwrap();
        prop_assert!(tr.x.iter().all(|&x| x == 0.5));
        prop_assert!(tr.sos.iter().all(|&s| s == 0.0));
        prop_assert!(tr.unseen[1..].iter().all(|&u| u));
    }
}

#[test]
fn exact_table_cells_partition_the_coin_space() {
    let proto = xor_majority();
    let set = TupleSet::choose_all(&[0, 1], 1);
    let cfg = BuildXConfig { mode: BuildMode::Exact, ..BuildXConfig::default() };
    let table = build_x(&proto, &set, &cfg, &SeedStream::new(1)).unwrap();
    assert!(table.is_exact());
    let space = 1u64 << proto.coin_bits();
    for i in 1..=proto.rounds() {
        let cells = table.contexts(i);
        assert_eq!(cells.iter().map(|(_, c)| c.q).sum::<u64>(), space);
        for (_, c) in cells {
            assert!(c.p <= c.q);
            assert_eq!(u64::from(c.mu), c.p * u64::from(table.resolution()) / c.q);
        }
    }
    let back = GameValueTable::from_json(&table.to_json().unwrap()).unwrap();
    assert_eq!(back, table);
}

#[test]
fn attacks_reject_parties_outside_their_preconditions() {
    let proto = xor_majority();
    let set = TupleSet::choose_all(&[0, 1], 1);
    let table = GameValueTable::neutral(proto.rounds(), set.clone());
    let stream = SeedStream::new(2);
    assert!(MartAttack::new(&table, &set, true, 0, &MartConfig::default(), stream.rng()).is_err());
    let empty_for_2 = TupleSet::new(1, vec![vec![1]]).unwrap();
    assert!(MartAttack::new(&table, &empty_for_2, true, 2, &MartConfig::default(), stream.rng()).is_err());

    let s1 = TupleSet::choose_all(&[0, 1], 1);
    let s0 = TupleSet::new(2, vec![vec![2, 0], vec![2, 1]]).unwrap();
    assert!(SingAttack::new(&s1, &s0, false, 2, 0.1, &mut stream.rng()).is_err());
    assert!(SingAttack::new(&s1, &s0, true, 0, 0.1, &mut stream.rng()).is_ok());
}

#[test]
fn disabled_triggers_reproduce_honest_outputs() {
    let proto = build_protocol(&ProtocolSpec::named("majority", 24, 3)).unwrap();
    let mut cfg = AttackConfig { disable_triggers: true, pilot_trials: 50, trials: 300, max_parties: 2, ..AttackConfig::default() };
    cfg.nugget.budget = 300;
    cfg.build_x.budget = 1000;
    let res = main_attack(proto.as_ref(), &cfg, &SeedStream::new(3)).unwrap();
    assert_eq!(res.records.len(), 300);
    for t in &res.records {
        assert_eq!(t.out, t.honest_out, "trial {}", t.trial);
        assert_eq!(t.abort_round, None);
    }
    assert_eq!(res.abort_rounds[0], 300);
}

#[test]
fn nuggets_on_small_protocols_satisfy_the_structure() {
    let cfg = NuggetConfig { budget: 300, ..NuggetConfig::default() };
    for (name, n, r, seed) in [("majority", 24, 3, 4), ("parity", 27, 4, 5), ("majority", 60, 5, 6), ("parity", 90, 2, 7)] {
        let proto = build_protocol(&ProtocolSpec::named(name, n, r)).unwrap();
        let res = nugget_finder(proto.as_ref(), &cfg, &SeedStream::new(seed)).unwrap();
        let rep = verify_structure(&res);
        assert!(rep.all_hold(), "{name}({n},{r}): {:?}", rep.checks);
        assert_eq!(NuggetResult::from_json(&res.to_json().unwrap()).unwrap(), res);
    }
}
