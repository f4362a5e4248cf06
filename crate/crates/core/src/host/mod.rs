//! Host-side tooling: command frames, scan files, comparison metrics, config.

mod align;
pub mod config;
mod dataset;
mod metrics;
pub mod protocol;

pub use align::{align_datasets, AlignedPair, AlignmentReport};
pub use config::{parse_config, set_config_value, ConfigFile, CONFIG_KEYS};
pub use dataset::{
    format_sig, read_dataset, round_sig, write_dataset, EisRow, ScanData, ScanDataset, ScanKind,
    CV_HEADER, EIS_HEADER,
};
pub use metrics::{percent_error, phase_error};
pub use protocol::{decode_command, encode_command, Command, FRAME_LEN};
