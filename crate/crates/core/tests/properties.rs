use std::collections::BTreeSet;

use num_bigint::BigUint;
use proptest::prelude::*;
use setmffu::campaign::{fault_space_total, sfi_sample_size};
use setmffu::cones::{enumerate_fault_sites, extract_all_cones, static_ff_set, ReachTable, SiteMode};
use setmffu::ffsets::{FfSet, RawSet, SetCollection, SetOrigin};
use setmffu::generate::{random_circuit, GeneratorParams};
use setmffu::netlist::{parse_bench, write_bench, Circuit, FfId, NetId};

fn circuit() -> impl Strategy<Value = Circuit> {
    (1usize..6, 1usize..4, 1usize..8, 0usize..60, 2usize..4, 3usize..16, any::<u64>()).prop_map(
        |(inputs, outputs, ffs, gates, max_fanin, window, seed)| {
            random_circuit(&GeneratorParams { inputs, outputs, ffs, gates, max_fanin, window }, seed)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cone_membership_matches_reachability(c in circuit()) {
        let reach = ReachTable::new(&c);
        let cones = extract_all_cones(&c);
        for n in 0..c.nets().len() as u32 {
            let n = NetId(n);
            for cone in &cones {
                prop_assert_eq!(cone.closure().contains(&n), reach.reaches(n, cone.ff));
            }
        }
    }

    #[test]
    fn collapsed_sites_partition_the_candidate_nets(c in circuit()) {
        let all: BTreeSet<NetId> = enumerate_fault_sites(&c, SiteMode::AllNets).iter().map(|s| s.net).collect();
        let mut covered = BTreeSet::new();
        for site in enumerate_fault_sites(&c, SiteMode::Collapsed) {
            prop_assert!(site.represented.contains(&site.net));
            for &n in &site.represented {
                prop_assert!(covered.insert(n), "net {:?} represented twice", n);
                // A represented net reaches only flip-flops its site reaches.
                let own: BTreeSet<FfId> = static_ff_set(&c, n).unwrap().into_iter().collect();
                let site_set: BTreeSet<FfId> = site.static_ffs.iter().copied().collect();
                prop_assert!(own.is_subset(&site_set));
            }
        }
        prop_assert_eq!(covered, all);
    }

    #[test]
    fn bench_round_trip(c in circuit()) {
        let text = write_bench(&c);
        let back = parse_bench(&text, &[]).unwrap();
        prop_assert_eq!(write_bench(&back), text);
        prop_assert_eq!(back.stats(), c.stats());
    }

    #[test]
    fn dedup_is_order_independent(
        sets in prop::collection::vec(prop::collection::btree_set(0u32..6, 1..5), 0..12),
        seed in any::<u64>(),
    ) {
        let raw: Vec<RawSet> = sets
            .iter()
            .enumerate()
            .map(|(i, s)| RawSet {
                origin: SetOrigin::Site(NetId(i as u32)),
                set: FfSet::new(s.iter().map(|&f| FfId(f))).unwrap(),
            })
            .collect();
        let mut shuffled = raw.clone();
        let k = shuffled.len().max(1);
        shuffled.rotate_left(seed as usize % k);
        shuffled.reverse();
        let names: Vec<String> = (0..6).map(|i| format!("f{i}")).collect();
        let a = SetCollection::from_raw(names.clone(), raw);
        let b = SetCollection::from_raw(names, shuffled);
        prop_assert_eq!(a.unique(), b.unique());
        prop_assert_eq!(fault_space_total(&a), fault_space_total(&b));
        let distinct: BTreeSet<_> = sets.iter().collect();
        prop_assert_eq!(a.num_unique(), distinct.len());
    }

    #[test]
    fn sample_size_is_monotone(n in 1u64..10_000_000_000, extra in 0u64..1_000_000, i in 0usize..3) {
        let margins = [0.05, 0.01, 0.001];
        let e = margins[i];
        let small = sfi_sample_size(&BigUint::from(n), e, 1.96, 0.5).unwrap();
        let large = sfi_sample_size(&BigUint::from(n + extra), e, 1.96, 0.5).unwrap();
        prop_assert!(small <= large);
        prop_assert!(small <= BigUint::from(n) && small >= BigUint::from(1u32));
        if i > 0 {
            let looser = sfi_sample_size(&BigUint::from(n), margins[i - 1], 1.96, 0.5).unwrap();
            prop_assert!(looser <= small);
        }
    }
}
