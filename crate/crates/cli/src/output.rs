use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use cartan_core::CartanError;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::ser::Formatter;

pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_NON_CONVERGENCE: i32 = 5;

/// A command failure carrying its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn parse(message: impl Into<String>) -> Self {
        Self { code: EXIT_PARSE, message: message.into() }
    }

    pub fn precondition(message: impl Into<String>) -> Self {
        Self { code: EXIT_PRECONDITION, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, message: message.into() }
    }
}

impl From<CartanError> for Failure {
    fn from(e: CartanError) -> Self {
        let code = match e {
            CartanError::Parse(_) => EXIT_PARSE,
            CartanError::Precondition(_) | CartanError::DimensionMismatch { .. } | CartanError::Unsupported(_) => {
                EXIT_PRECONDITION
            }
            CartanError::NumericalFailure { .. } | CartanError::InternalConsistency(_) => EXIT_NUMERICAL,
            CartanError::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
        };
        Self { code, message: e.to_string() }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

/// Prints every float as `d.dddddddddddddddde±x` (17 significant digits).
struct FixedDigits;

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits);
    value.serialize(&mut ser).map_err(|e| Failure::io(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Failure::io(e.to_string()))
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write `text` to `path`, or stdout for `-`.
pub fn write_text(path: &str, text: &str) -> CliResult<()> {
    if path == "-" {
        let mut out = io::stdout().lock();
        out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::io(format!("stdout: {e}")))
    } else {
        fs::write(path, text).map_err(|e| Failure::io(format!("cannot write {path}: {e}")))
    }
}

pub fn write_json<T: Serialize>(path: &str, value: &T) -> CliResult<()> {
    write_text(path, &to_json(value)?)
}

/// Read `path` (stdin for `-`) and decode it as JSON.
pub fn read_json<T: DeserializeOwned>(path: &str) -> CliResult<T> {
    let text = if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| Failure::io(format!("stdin: {e}")))?;
        s
    } else {
        if !Path::new(path).is_file() {
            return Err(Failure::precondition(format!("input file {path} does not exist")));
        }
        fs::read_to_string(path).map_err(|e| Failure::io(format!("cannot read {path}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::parse(format!("{path}: {e}")))
}
