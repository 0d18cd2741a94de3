//! Numeric serialization with a fixed 17-significant-digit format.
//!
//! 17 significant digits round-trip any f64, so replaying an experiment with
//! the same seed reproduces every data file byte-for-byte. All CSV and JSON
//! data emitters route floats through here.

use std::io;

/// `x` with 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// serde_json formatter that writes every float via [`fmt_f64`].
/// (serde_json turns non-finite floats into `null` before reaching this.)
#[derive(Clone, Copy, Debug, Default)]
pub struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize to one JSON line using the fixed float format.
pub fn to_json_line<T: serde::Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitFormatter);
    value
        .serialize(&mut ser)
        .expect("in-memory JSON serialization cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
