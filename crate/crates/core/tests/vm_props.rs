use std::collections::BTreeSet;

use proptest::prelude::*;
use vulnfuzz_core::vm::{
    assemble, disassemble, execute, extract_acfg, gen_target, BugPlan, CrashKind, Instruction, Outcome, PlannedBug, Program,
};

fn arb_plan() -> impl Strategy<Value = BugPlan> {
    (2usize..6, 1usize..4, 2usize..5).prop_flat_map(|(functions, lo, span)| {
        let bug = (0..functions, prop::sample::select(CrashKind::ALL.to_vec()), 1usize..3)
            .prop_map(|(function, kind, guard_depth)| PlannedBug { function, kind, guard_depth });
        prop::collection::vec(bug, 0..3).prop_map(move |bugs| {
            let mut vulnerable: Vec<usize> = bugs.iter().map(|b| b.function).collect();
            vulnerable.sort_unstable();
            vulnerable.dedup();
            BugPlan { functions, vulnerable, bugs, input_len: 48, blocks: (lo, lo + span) }
        })
    })
}

fn edges_of(p: &Program, f: usize) -> BTreeSet<(u32, u32)> {
    p.functions()[f].blocks.iter().flat_map(|b| b.term.successors().map(move |s| (b.id, s))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn disassembly_reassembles(plan in arb_plan(), seed in any::<u64>()) {
        let (p, _) = gen_target(&plan, seed).unwrap();
        let text = disassemble(&p);
        prop_assert_eq!(assemble(&text).unwrap(), p);
    }

    #[test]
    fn trigger_inputs_fire_their_bug(plan in arb_plan(), seed in any::<u64>()) {
        let (p, truth) = gen_target(&plan, seed).unwrap();
        prop_assert_eq!(truth.len(), plan.bugs.len());
        for bug in &truth {
            match execute(&p, &bug.trigger_input, 100_000).outcome {
                Outcome::Crash { bug_id, kind, .. } => {
                    prop_assert_eq!(bug_id, Some(bug.id));
                    prop_assert_eq!(kind, bug.kind);
                }
                other => prop_assert!(false, "bug {} did not fire: {:?}", bug.id, other),
            }
            prop_assert!(!execute(&p, &bug.near_miss(), 100_000).is_crash());
        }
    }

    #[test]
    fn acfg_edges_match_program(plan in arb_plan(), seed in any::<u64>()) {
        let (p, _) = gen_target(&plan, seed).unwrap();
        let acfg = extract_acfg(&p);
        prop_assert_eq!(acfg.functions.len(), p.functions().len());
        for (i, f) in acfg.functions.iter().enumerate() {
            prop_assert_eq!(f.edges.iter().copied().collect::<BTreeSet<_>>(), edges_of(&p, i));
            prop_assert_eq!(f.edges.len(), edges_of(&p, i).len());
        }
    }

    #[test]
    fn paths_are_sound_and_deterministic(
        plan in arb_plan(),
        seed in any::<u64>(),
        input in prop::collection::vec(any::<u8>(), 0..64),
    ) {
        let (p, _) = gen_target(&plan, seed).unwrap();
        let r = execute(&p, &input, 10_000);
        prop_assert_eq!(&r, &execute(&p, &input, 10_000));
        prop_assert!(!r.path.is_empty());
        for b in &r.path {
            let f = &p.functions()[b.func as usize];
            prop_assert!(f.block_index(b.block).is_some());
        }
        for w in r.path.windows(2) {
            if w[0].func == w[1].func {
                prop_assert!(edges_of(&p, w[0].func as usize).contains(&(w[0].block, w[1].block)));
            } else {
                // entering a callee at its entry, or returning to the calling block
                let f = &p.functions()[w[1].func as usize];
                let calls = f.blocks[f.block_index(w[1].block).unwrap()]
                    .insns
                    .iter()
                    .any(|i| matches!(i, Instruction::Call(_)));
                prop_assert!(w[1].block == f.entry().id || calls);
            }
        }
        if let Outcome::Crash { bug_id: None, kind, .. } = r.outcome {
            prop_assert!(kind != CrashKind::Assert);
        }
    }
}
