use potentiostat_core::host::protocol::{checksum, OP_CALIBRATE};
use potentiostat_core::host::{decode_command, encode_command, Command, FRAME_LEN};
use potentiostat_core::Error;
use proptest::prelude::*;

fn command() -> impl Strategy<Value = Command> {
    prop_oneof![
        (
            1..=1_000_000i32,
            0..=1_000_000i32,
            1..=i32::MAX,
            0..=5000i32,
            1..=64i32
        )
            .prop_map(|(f_start, span, f_step, amplitude_mv, n_average)| {
                Command::EisScan {
                    f_start,
                    f_end: f_start.saturating_add(span),
                    f_step,
                    amplitude_mv,
                    n_average,
                }
            }),
        (1..=i32::MAX, any::<i32>(), any::<i32>(), 1..=100i32)
            .prop_filter("start != end", |(_, a, b, _)| a != b)
            .prop_map(
                |(rate_mv_s, v_start_mv, v_end_mv, cycles)| Command::CvScan {
                    rate_mv_s,
                    v_start_mv,
                    v_end_mv,
                    cycles,
                }
            ),
        (0..10i32).prop_map(|channel| Command::SelectWe { channel }),
        Just(Command::Calibrate),
        (0..=i32::MAX, any::<i32>()).prop_map(|(key, value)| Command::SetConfig { key, value }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn roundtrip(c in command()) {
        let f = encode_command(&c).unwrap();
        prop_assert_eq!(checksum(&f), 0);
        prop_assert_eq!(decode_command(&f).unwrap(), c);
    }

    #[test]
    fn any_single_bit_flip_is_a_checksum_error(c in command(), bit in 0..FRAME_LEN * 8) {
        let mut f = encode_command(&c).unwrap();
        f[bit / 8] ^= 1 << (bit % 8);
        let is_checksum_err = matches!(decode_command(&f), Err(Error::Checksum { .. }));
        prop_assert!(is_checksum_err);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..40)) {
        if let Ok(c) = decode_command(&bytes) {
            let f = encode_command(&c).unwrap();
            prop_assert_eq!(f.as_slice(), bytes.as_slice());
        }
    }
}

#[test]
fn calibrate_frame_bytes() {
    let f = encode_command(&Command::Calibrate).unwrap();
    let mut expected = [0u8; FRAME_LEN];
    expected[0] = OP_CALIBRATE;
    expected[21] = OP_CALIBRATE;
    assert_eq!(f, expected);
}
