use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("invalid channel {channel}: mux has {count} channel(s)")]
    InvalidChannel { channel: usize, count: usize },

    #[error("excitation out of range: {0}")]
    ExcitationOutOfRange(String),

    #[error("sample rate {requested} Hz exceeds ceiling {ceiling} Hz")]
    SampleRate { requested: f64, ceiling: f64 },

    #[error("frequency {frequency} Hz too high: only {samples_per_cycle} samples per cycle fit")]
    FrequencyTooHigh {
        frequency: f64,
        samples_per_cycle: usize,
    },

    #[error("no signal at {frequency} Hz (open circuit or zero excitation)")]
    OpenCircuit { frequency: f64 },

    #[error("measurement at {frequency} Hz failed: {source}")]
    PointFailed {
        frequency: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("calibration failed: {0}")]
    CalibrationFailed(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("frame must be 22 bytes, got {0}")]
    FrameLength(usize),

    #[error("checksum mismatch: computed {computed:#04x}, frame carries {found:#04x}")]
    Checksum { computed: u8, found: u8 },

    #[error("unknown opcode {0:#04x}")]
    UnknownOpcode(u8),

    #[error("malformed frame: {0}")]
    MalformedFrame(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
