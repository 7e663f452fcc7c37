// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use cfl_core::SeedStream;
use cfl_protocol::protocols::{
    enumerate_coins, exact_output_probability, sample_output_probability, MajorityCoin, ParityProtocol,
    ScriptedProtocol,
};
use cfl_protocol::{
    avg_backup, backup_value, group_parties, replay_check, run_honest, run_with_adversary, AbortKind, Adversary,
    AdversaryView, Coins, Decision, NullAdversary, Party, Protocol, TupleSet,
};

fn small_protocols() -> Vec<Box<dyn Protocol>> {
    vec![
        Box::new(MajorityCoin::new(3, 3).unwrap()),
        Box::new(MajorityCoin::new(4, 1).unwrap()),
        Box::new(ParityProtocol::new(3, 2).unwrap()),
        Box::new(ScriptedProtocol::from_fn(2, 3, 1, |c| (c.party(0)[0] & c.party(1)[2]) ^ c.party(1)[1]).unwrap()),
    ]
}

#[test]
fn backup_boundary_equals_output() {
    for proto in small_protocols() {
        let all: Vec<Party> = (0..proto.n()).collect();
        for coins in enumerate_coins(proto.as_ref()).unwrap() {
            let out = run_honest(proto.as_ref(), &coins).unwrap().1;
            assert_eq!(backup_value(proto.as_ref(), &coins, &all, proto.rounds()).unwrap(), out);
        }
    }
}

#[test]
fn null_adversary_reproduces_honest_run() {
    for proto in small_protocols() {
        for coins in enumerate_coins(proto.as_ref()).unwrap() {
            let (t, out) = run_honest(proto.as_ref(), &coins).unwrap();
            let ex = run_with_adversary(proto.as_ref(), &mut NullAdversary, &[0], &coins).unwrap();
            assert_eq!((ex.transcript, ex.honest_out, ex.abort), (t, out, None));
        }
    }
}

#[test]
fn replay_is_deterministic() {
    let proto = MajorityCoin::new(9, 7).unwrap();
    let stream = SeedStream::new(5);
    for t in 0..50 {
        let coins = Coins::sample(9, 7, &mut stream.child(t).rng());
        replay_check(&proto, &coins).unwrap();
    }
}

/// Aborts everyone except `keep` at a fixed round and placement.
struct FixedAbort {
    round: usize,
    after_send: bool,
    keep: Vec<Party>,
}

impl Adversary for FixedAbort {
    fn decide(&mut self, view: &AdversaryView<'_>) -> Decision {
        if view.round() != self.round {
            Decision::Continue
        } else if self.after_send {
            Decision::AbortAfterSend { keep: self.keep.clone() }
        } else {
            Decision::AbortBeforeSend { keep: self.keep.clone() }
        }
    }
}

#[test]
fn abort_before_first_round_outputs_round_zero_backup() {
    let proto = MajorityCoin::new(3, 3).unwrap();
    for coins in enumerate_coins(&proto).unwrap() {
        let mut adv = FixedAbort { round: 1, after_send: false, keep: vec![] };
        let ex = run_with_adversary(&proto, &mut adv, &[1], &coins).unwrap();
        assert_eq!(ex.honest_out, backup_value(&proto, &coins, &[1], 0).unwrap());
        let ev = ex.abort.unwrap();
        assert_eq!((ev.round, ev.kind, ev.backup_round()), (1, AbortKind::BeforeSend, 0));
        let first = &ex.transcript.rounds()[0];
        assert!(first.message(0).is_none() && first.message(1).is_some());
        assert_eq!(first.aborts().len(), 2);
    }
}

#[test]
fn abort_placements_match_backups() {
    let proto = ScriptedProtocol::from_fn(3, 2, 1, |c| {
        (c.party(0)[0] ^ c.party(1)[1]) | (c.party(2)[0] & c.party(2)[1])
    })
    .unwrap();
    for coins in enumerate_coins(&proto).unwrap() {
        for round in 1..=2 {
            for after_send in [false, true] {
                let mut adv = FixedAbort { round, after_send, keep: vec![2] };
                let ex = run_with_adversary(&proto, &mut adv, &[0], &coins).unwrap();
                let i = if after_send { round } else { round - 1 };
                assert_eq!(ex.honest_out, backup_value(&proto, &coins, &[0, 2], i).unwrap());
                assert_eq!(ex.abort.unwrap().survivors, vec![0, 2]);
            }
        }
    }
}

/// Aborts in the first round where honest party 0 sends a 1.
struct Rushing {
    saw: Vec<usize>,
}

impl Adversary for Rushing {
    fn decide(&mut self, view: &AdversaryView<'_>) -> Decision {
        assert_eq!(view.prefix().len(), view.round() - 1);
        assert!(view.current_round().is_complete());
        if view.honest_message(0) == Some(&[1][..]) {
            self.saw.push(view.round());
            Decision::AbortBeforeSend { keep: vec![] }
        } else {
            Decision::Continue
        }
    }
}

#[test]
fn rushing_adversary_reacts_to_current_round() {
    let proto = ParityProtocol::new(2, 3).unwrap();
    for coins in enumerate_coins(&proto).unwrap() {
        let mut adv = Rushing { saw: vec![] };
        let ex = run_with_adversary(&proto, &mut adv, &[0], &coins).unwrap();
        let first_one = coins.party(0).iter().position(|&b| b).map(|i| i + 1);
        assert_eq!(ex.abort.map(|e| e.round), first_one);
        assert_eq!(adv.saw, first_one.into_iter().collect::<Vec<_>>());
    }
}

#[test]
fn illegal_keep_is_rejected() {
    let proto = ParityProtocol::new(3, 1).unwrap();
    let mut adv = FixedAbort { round: 1, after_send: false, keep: vec![0] };
    assert!(run_with_adversary(&proto, &mut adv, &[0], &Coins::zeros(3, 1)).is_err());
}

#[test]
fn view_backups_only_cover_corrupted_parties() {
    struct Probe;
    impl Adversary for Probe {
        fn decide(&mut self, view: &AdversaryView<'_>) -> Decision {
            assert!(view.backups(&[vec![0]], view.round()).is_err());
            assert!(view.backups(&[vec![1, 2]], view.round()).is_ok());
            assert!(view.backups(&[vec![1]], view.round() + 1).is_err());
            Decision::Continue
        }
    }
    let proto = MajorityCoin::new(3, 3).unwrap();
    run_with_adversary(&proto, &mut Probe, &[0], &Coins::zeros(3, 3)).unwrap();
}

#[test]
fn avg_backup_examples() {
    let proto = MajorityCoin::new(4, 3).unwrap();
    let coins = Coins::from_index(4, 3, 0b1011_0110_0101);
    let single = TupleSet::new(1, vec![vec![2]]).unwrap();
    assert_eq!(avg_backup(&proto, &coins, &single, 1).unwrap(), f64::from(u8::from(backup_value(&proto, &coins, &[2], 1).unwrap())));
    assert!(avg_backup(&proto, &coins, &TupleSet::empty(1), 1).is_err());
    let all = TupleSet::choose_all(&[0, 1, 2, 3], 4);
    let out = run_honest(&proto, &coins).unwrap().1;
    assert_eq!(avg_backup(&proto, &coins, &all, 3).unwrap(), f64::from(u8::from(out)));
}

#[test]
fn majority_is_unbiased() {
    let proto = MajorityCoin::new(16, 9).unwrap();
    let p = sample_output_probability(&proto, 100_000, &SeedStream::new(21)).unwrap();
    assert!((p.estimate().unwrap() - 0.5).abs() <= 3.0 * p.se().unwrap());
    assert_eq!(exact_output_probability(&MajorityCoin::new(3, 3).unwrap()).unwrap(), 0.5);
}

#[test]
fn grouping_keeps_outputs_trial_by_trial() {
    let base: Arc<dyn Protocol> = Arc::new(MajorityCoin::new(6, 3).unwrap());
    let g = group_parties(base.clone(), 2).unwrap();
    for coins in enumerate_coins(base.as_ref()).unwrap() {
        let out = run_honest(base.as_ref(), &coins).unwrap().1;
        assert_eq!(run_honest(&g, &g.group_coins(&coins)).unwrap().1, out);
    }
    let id = group_parties(base.clone(), 1).unwrap();
    let coins = Coins::from_index(6, 3, 12345);
    assert_eq!(run_honest(&id, &id.group_coins(&coins)).unwrap().1, run_honest(base.as_ref(), &coins).unwrap().1);
}

#[test]
fn grouped_abort_expands_to_blocks() {
    let base: Arc<dyn Protocol> = Arc::new(MajorityCoin::new(5, 3).unwrap());
    let g = group_parties(base.clone(), 2).unwrap();
    for idx in (0..1u64 << 15).step_by(97) {
        let coins = Coins::from_index(5, 3, idx);
        let vc = g.group_coins(&coins);
        let mut adv = FixedAbort { round: 2, after_send: true, keep: vec![] };
        let ex = run_with_adversary(&g, &mut adv, &[1], &vc).unwrap();
        let expected = backup_value(base.as_ref(), &coins, &g.expand_parties(&[1]), 2).unwrap();
        assert_eq!(ex.honest_out, expected);
    }
}
