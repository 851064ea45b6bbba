//! Byte-stable serialization.
//!
//! Every `f64` is written with 17 significant digits in scientific notation
//! (`{:.16e}`), e.g. `9.5048443395120963e-1`. Seventeen digits round-trip any
//! double exactly, and the fixed width makes output independent of the
//! shortest-representation algorithm a JSON library happens to use.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::error::{Error, Result};

/// A double as 17 significant digits.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Wraps a serde_json formatter, replacing only how doubles are written.
struct FixedDigits<F>(F);

macro_rules! forward {
    ($($name:ident),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
                self.0.$name(writer)
            }
        )*
    };
}

impl<F: Formatter> Formatter for FixedDigits<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    forward!(begin_array, end_array, begin_object, end_object, end_object_value);

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn end_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_key(writer)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }
}

fn serialize_with<T: Serialize + ?Sized, F: Formatter>(value: &T, formatter: F) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits(formatter));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Io(format!("serialization failed: {e}")))?;
    String::from_utf8(out).map_err(|e| Error::Io(e.to_string()))
}

/// Single-line JSON.
pub fn to_json_line<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    serialize_with(value, CompactFormatter)
}

/// Indented JSON.
pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    serialize_with(value, PrettyFormatter::new())
}
