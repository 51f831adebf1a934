use bytes::Bytes;
use proptest::prelude::*;
use vdtp_core::packet::{AbortReason, FirpStatus, Packet, MAX_DATAGRAM, MAX_NAME_LEN};
use vdtp_core::MAX_CHUNK_SIZE;

pub fn arb_packet() -> impl Strategy<Value = Packet> {
    let name = proptest::string::string_regex(".{0,64}")
        .unwrap()
        .prop_filter("name fits", |s| s.len() <= MAX_NAME_LEN);
    prop_oneof![
        (any::<u32>(), any::<u32>(), name).prop_map(
            |(transfer_id, requested_chunk_size, file_name)| {
                Packet::Firq {
                    transfer_id,
                    requested_chunk_size,
                    file_name,
                }
            }
        ),
        (any::<u32>(), any::<bool>(), any::<u64>(), any::<u32>()).prop_map(
            |(transfer_id, ok, file_size, file_crc32)| Packet::Firp {
                transfer_id,
                status: if ok {
                    FirpStatus::Ok
                } else {
                    FirpStatus::NotFound
                },
                file_size,
                file_crc32,
            }
        ),
        (any::<u32>(), 1..=u32::MAX).prop_map(|(transfer_id, chunk_index)| Packet::Drq {
            transfer_id,
            chunk_index
        }),
        (
            any::<u32>(),
            1..=u32::MAX,
            prop_oneof![
                proptest::collection::vec(any::<u8>(), 0..256),
                Just(vec![0xA5; MAX_CHUNK_SIZE as usize]),
            ]
        )
            .prop_map(|(transfer_id, chunk_index, data)| Packet::Drp {
                transfer_id,
                chunk_index,
                data: Bytes::from(data),
            }),
        (any::<u32>(), any::<bool>()).prop_map(|(transfer_id, refused)| Packet::Abort {
            transfer_id,
            reason: if refused {
                AbortReason::Refused
            } else {
                AbortReason::UserCancel
            },
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn round_trip(p in arb_packet()) {
        let wire = p.encode().unwrap();
        prop_assert_eq!(wire.len(), p.encoded_len());
        prop_assert!(wire.len() <= MAX_DATAGRAM);
        prop_assert_eq!(Packet::decode(&wire).unwrap(), p);
    }

    #[test]
    fn decode_is_canonical_on_arbitrary_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
        if let Ok(p) = Packet::decode(&bytes) {
            prop_assert_eq!(p.encode().unwrap(), bytes);
        }
    }

    #[test]
    fn decode_is_canonical_near_valid_packets(p in arb_packet(), pos in any::<prop::sample::Index>(), byte in any::<u8>(), cut in any::<bool>()) {
        let mut wire = p.encode().unwrap();
        let i = pos.index(wire.len());
        if cut {
            wire.truncate(i);
        } else {
            wire[i] = byte;
        }
        if let Ok(q) = Packet::decode(&wire) {
            prop_assert_eq!(q.encode().unwrap(), wire);
        }
    }
}
