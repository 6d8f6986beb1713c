//! Property tests over arbitrary byte streams: the symbol mapping, the shard
//! format and the full encode / reconstruct path.

use std::sync::Arc;

use msr_core::codec::{bytes_to_symbols, encode, reconstruct, symbols_to_bytes, Shard};
use msr_core::codes::{build_c1, build_c2, build_c3, build_c4, CodeSpec};
use msr_core::gf::FieldSpec;
use proptest::prelude::*;

fn gf(q: u32) -> Arc<FieldSpec> {
    FieldSpec::of_order(q).unwrap()
}

fn codes() -> Vec<CodeSpec> {
    vec![
        build_c1(2, &gf(5)).unwrap(),
        build_c2(2, &gf(4)).unwrap(),
        build_c3(2, &gf(5)).unwrap(),
        build_c4(2, &gf(4)).unwrap(),
        build_c2(3, &gf(4)).unwrap(),
    ]
}

proptest! {
    #[test]
    fn symbol_mapping_round_trips(data in proptest::collection::vec(any::<u8>(), 0..200)) {
        for q in [2u32, 3, 4, 5, 7, 8, 9, 16] {
            let field = gf(q);
            let symbols = bytes_to_symbols(&field, &data);
            prop_assert!(symbols.iter().all(|&s| s < field.order()));
            let back = symbols_to_bytes(&field, &symbols, data.len() as u64).unwrap();
            prop_assert_eq!(&back, &data);
        }
    }

    #[test]
    fn any_k_subset_reconstructs(
        data in proptest::collection::vec(any::<u8>(), 0..150),
        subset_seed in any::<u64>(),
    ) {
        for code in codes() {
            let shards = encode(&data, &code);
            // drop two nodes chosen by the seed
            let n = code.n();
            let drop_a = (subset_seed % n as u64) as usize + 1;
            let drop_b = ((subset_seed / 7) % (n as u64 - 1)) as usize + 1;
            let drop_b = if drop_b == drop_a { n } else { drop_b };
            let chosen: Vec<Shard> = shards
                .iter()
                .filter(|s| s.node_index != drop_a && s.node_index != drop_b)
                .cloned()
                .collect();
            let back = reconstruct(&chosen, &code).unwrap();
            prop_assert_eq!(&back, &data);
        }
    }

    #[test]
    fn shard_format_round_trips(
        data in proptest::collection::vec(any::<u8>(), 0..100),
        node in 0usize..6,
    ) {
        let code = build_c1(2, &gf(5)).unwrap();
        let shards = encode(&data, &code);
        let shard = &shards[node];
        let parsed = Shard::from_bytes(&shard.to_bytes()).unwrap();
        prop_assert_eq!(&parsed, shard);
    }
}
