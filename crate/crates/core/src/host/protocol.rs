//! 22-byte host → instrument command frames.
//!
//! ```text
//! byte  0      opcode
//! bytes 1..21  five i32 parameters, little-endian
//! byte  21     XOR of bytes 0..=20
//! ```
//!
//! | opcode | command    | p0          | p1        | p2        | p3           | p4        |
//! |--------|------------|-------------|-----------|-----------|--------------|-----------|
//! | 0x01   | EIS scan   | f_start Hz  | f_end Hz  | f_step Hz | amplitude mV | n_average |
//! | 0x02   | CV scan    | rate mV/s   | start mV  | end mV    | cycles       | 0         |
//! | 0x03   | select WE  | channel     | 0         | 0         | 0            | 0         |
//! | 0x04   | calibrate  | 0           | 0         | 0         | 0            | 0         |
//! | 0x05   | set config | key         | value     | 0         | 0            | 0         |

use crate::error::{Error, Result};

pub const FRAME_LEN: usize = 22;

pub const OP_EIS_SCAN: u8 = 0x01;
pub const OP_CV_SCAN: u8 = 0x02;
pub const OP_SELECT_WE: u8 = 0x03;
pub const OP_CALIBRATE: u8 = 0x04;
pub const OP_SET_CONFIG: u8 = 0x05;

/// Working electrodes addressable by `SelectWe`.
pub const MAX_CHANNELS: i32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    EisScan {
        f_start: i32,
        f_end: i32,
        f_step: i32,
        amplitude_mv: i32,
        n_average: i32,
    },
    CvScan {
        rate_mv_s: i32,
        v_start_mv: i32,
        v_end_mv: i32,
        cycles: i32,
    },
    SelectWe {
        channel: i32,
    },
    Calibrate,
    SetConfig {
        key: i32,
        value: i32,
    },
}

impl Command {
    pub fn opcode(&self) -> u8 {
        match self {
            Command::EisScan { .. } => OP_EIS_SCAN,
            Command::CvScan { .. } => OP_CV_SCAN,
            Command::SelectWe { .. } => OP_SELECT_WE,
            Command::Calibrate => OP_CALIBRATE,
            Command::SetConfig { .. } => OP_SET_CONFIG,
        }
    }

    fn params(&self) -> [i32; 5] {
        match *self {
            Command::EisScan {
                f_start,
                f_end,
                f_step,
                amplitude_mv,
                n_average,
            } => [f_start, f_end, f_step, amplitude_mv, n_average],
            Command::CvScan {
                rate_mv_s,
                v_start_mv,
                v_end_mv,
                cycles,
            } => [rate_mv_s, v_start_mv, v_end_mv, cycles, 0],
            Command::SelectWe { channel } => [channel, 0, 0, 0, 0],
            Command::Calibrate => [0; 5],
            Command::SetConfig { key, value } => [key, value, 0, 0, 0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::MalformedFrame(m.to_string()));
        match *self {
            Command::EisScan {
                f_start,
                f_end,
                f_step,
                amplitude_mv,
                n_average,
            } => {
                if f_start <= 0 || f_end < f_start {
                    return bad("EIS needs 0 < f_start <= f_end");
                }
                if f_step <= 0 {
                    return bad("EIS f_step must be > 0");
                }
                if amplitude_mv < 0 {
                    return bad("EIS amplitude must be >= 0");
                }
                if n_average < 1 {
                    return bad("EIS n_average must be >= 1");
                }
            }
            Command::CvScan {
                rate_mv_s,
                v_start_mv,
                v_end_mv,
                cycles,
            } => {
                if rate_mv_s <= 0 {
                    return bad("CV rate must be > 0");
                }
                if v_start_mv == v_end_mv {
                    return bad("CV start and end voltages must differ");
                }
                if cycles < 1 {
                    return bad("CV cycles must be >= 1");
                }
            }
            Command::SelectWe { channel } => {
                if !(0..MAX_CHANNELS).contains(&channel) {
                    return bad("channel out of range");
                }
            }
            Command::Calibrate => {}
            Command::SetConfig { key, .. } => {
                if key < 0 {
                    return bad("config key must be >= 0");
                }
            }
        }
        Ok(())
    }
}

pub fn checksum(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0, |acc, b| acc ^ b)
}

pub fn encode_command(cmd: &Command) -> Result<[u8; FRAME_LEN]> {
    cmd.validate()?;
    let mut frame = [0u8; FRAME_LEN];
    frame[0] = cmd.opcode();
    for (i, p) in cmd.params().iter().enumerate() {
        frame[1 + 4 * i..5 + 4 * i].copy_from_slice(&p.to_le_bytes());
    }
    frame[FRAME_LEN - 1] = checksum(&frame[..FRAME_LEN - 1]);
    Ok(frame)
}

/// Checks length, checksum, opcode and reserved fields, in that order.
pub fn decode_command(bytes: &[u8]) -> Result<Command> {
    if bytes.len() != FRAME_LEN {
        return Err(Error::FrameLength(bytes.len()));
    }
    let computed = checksum(&bytes[..FRAME_LEN - 1]);
    let found = bytes[FRAME_LEN - 1];
    if computed != found {
        return Err(Error::Checksum { computed, found });
    }
    let p: [i32; 5] = std::array::from_fn(|i| {
        i32::from_le_bytes(bytes[1 + 4 * i..5 + 4 * i].try_into().unwrap())
    });
    let reserved_zero = |from: usize| {
        if p[from..].iter().all(|&v| v == 0) {
            Ok(())
        } else {
            Err(Error::MalformedFrame(format!(
                "reserved parameters {from}..5 must be zero"
            )))
        }
    };
    let cmd = match bytes[0] {
        OP_EIS_SCAN => Command::EisScan {
            f_start: p[0],
            f_end: p[1],
            f_step: p[2],
            amplitude_mv: p[3],
            n_average: p[4],
        },
        OP_CV_SCAN => {
            reserved_zero(4)?;
            Command::CvScan {
                rate_mv_s: p[0],
                v_start_mv: p[1],
                v_end_mv: p[2],
                cycles: p[3],
            }
        }
        OP_SELECT_WE => {
            reserved_zero(1)?;
            Command::SelectWe { channel: p[0] }
        }
        OP_CALIBRATE => {
            reserved_zero(0)?;
            Command::Calibrate
        }
        OP_SET_CONFIG => {
            reserved_zero(2)?;
            Command::SetConfig {
                key: p[0],
                value: p[1],
            }
        }
        op => return Err(Error::UnknownOpcode(op)),
    };
    cmd.validate()?;
    Ok(cmd)
}
