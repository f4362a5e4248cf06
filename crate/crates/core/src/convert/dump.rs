//! Little-endian binary dump of a [`SampleBlock`].
//!
//! ```text
//! offset  size  field
//! 0       1     channel tag (0 = voltage, 1 = current)
//! 1       8     sample rate, f64
//! 9       8     t0 in seconds, f64
//! 17      4     sample count n, u32
//! 21      2n    counts, u16 each
//! ```

use super::adc::{Channel, SampleBlock};
use crate::error::{Error, Result};

pub const HEADER_LEN: usize = 21;

pub fn encode_block(block: &SampleBlock) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 2 * block.counts.len());
    out.push(match block.channel {
        Channel::Voltage => 0,
        Channel::Current => 1,
    });
    out.extend_from_slice(&block.sample_rate.to_le_bytes());
    out.extend_from_slice(&block.t0.to_le_bytes());
    out.extend_from_slice(&(block.counts.len() as u32).to_le_bytes());
    for c in &block.counts {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

pub fn decode_block(bytes: &[u8]) -> Result<SampleBlock> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::invalid(format!(
            "sample dump too short: {} bytes",
            bytes.len()
        )));
    }
    let channel = match bytes[0] {
        0 => Channel::Voltage,
        1 => Channel::Current,
        t => return Err(Error::invalid(format!("unknown channel tag {t}"))),
    };
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let rate = f64_at(1);
    let t0 = f64_at(9);
    let n = u32::from_le_bytes(bytes[17..21].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 2 * n {
        return Err(Error::invalid(format!(
            "sample dump declares {n} counts but carries {} bytes",
            body.len()
        )));
    }
    let counts = body
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    SampleBlock::new(channel, rate, t0, counts)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn known_layout() {
        let b = SampleBlock::new(Channel::Current, 2.0, 0.5, vec![1, 0x0ABC]).unwrap();
        let bytes = encode_block(&b);
        assert_eq!(bytes.len(), HEADER_LEN + 4);
        assert_eq!(bytes[0], 1);
        assert_eq!(&bytes[1..9], &2.0f64.to_le_bytes());
        assert_eq!(&bytes[17..21], &[2, 0, 0, 0]);
        assert_eq!(&bytes[21..], &[1, 0, 0xBC, 0x0A]);
    }

    #[test]
    fn rejects_corrupt() {
        let b = SampleBlock::new(Channel::Voltage, 1e3, 0.0, vec![5, 6, 7]).unwrap();
        let bytes = encode_block(&b);
        assert!(decode_block(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = 9;
        assert!(decode_block(&bad).is_err());
        let mut big = bytes;
        big[21] = 0xFF;
        big[22] = 0xFF;
        assert!(decode_block(&big).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip(counts in proptest::collection::vec(0u16..=4095, 0..300),
                     rate in 1.0f64..5e6, t0 in -1.0f64..1.0, current in any::<bool>()) {
            let ch = if current { Channel::Current } else { Channel::Voltage };
            let b = SampleBlock::new(ch, rate, t0, counts).unwrap();
            prop_assert_eq!(decode_block(&encode_block(&b)).unwrap(), b);
        }
    }
}
