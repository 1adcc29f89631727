use proptest::prelude::*;
use vulnfuzz_core::{Acfg, BasicBlockNode};

fn arb_acfg(dim: usize) -> impl Strategy<Value = Acfg> {
    (1usize..10).prop_flat_map(move |n| {
        let ids = Just((0..n as u32).map(|i| i * 3 + 1).collect::<Vec<_>>()).prop_shuffle();
        let attrs = prop::collection::vec(prop::collection::vec(0.0f64..50.0, dim), n);
        let edges = prop::collection::btree_set((0..n, 0..n), 0..n * 2);
        (ids, attrs, edges, 0..n).prop_map(|(ids, attrs, edges, entry)| Acfg {
            function_name: "f".into(),
            entry: ids[entry],
            blocks: ids.iter().zip(attrs).map(|(&id, a)| BasicBlockNode::new(id, a)).collect(),
            edges: edges.into_iter().map(|(u, v)| (ids[u], ids[v])).collect(),
        })
    })
}

/// Arbitrary well-typed graphs, valid or not.
fn arb_raw_acfg() -> impl Strategy<Value = Acfg> {
    (
        0u32..8,
        prop::collection::vec((0u32..8, prop::collection::vec(prop::num::f64::ANY, 0..5)), 0..8),
        prop::collection::vec((0u32..10, 0u32..10), 0..12),
    )
        .prop_map(|(entry, blocks, edges)| Acfg {
            function_name: String::new(),
            entry,
            blocks: blocks.into_iter().map(|(id, a)| BasicBlockNode::new(id, a)).collect(),
            edges,
        })
}

proptest! {
    #[test]
    fn predecessors_match_edges(g in arb_acfg(3)) {
        for b in &g.blocks {
            let preds = g.predecessors(b.id).unwrap();
            for u in g.blocks.iter().map(|b| b.id) {
                prop_assert_eq!(preds.contains(&u), g.edges.contains(&(u, b.id)));
            }
        }
    }

    #[test]
    fn generated_graphs_validate(g in arb_acfg(4)) {
        prop_assert!(g.validate(4).is_ok());
        prop_assert!(!g.validate(5).is_ok());
    }

    #[test]
    fn validate_is_total(g in arb_raw_acfg(), dim in 0usize..5) {
        let v = g.validate(dim);
        if v.is_ok() {
            prop_assert!(g.blocks.iter().any(|b| b.id == g.entry));
        }
    }
}
