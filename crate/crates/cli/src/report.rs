//! Output files: JSON with 17 significant digits, CSV traces.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use codesign_core::{PbhReport, Placement};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use crate::exit::{CliError, CliResult};

/// Pretty-printing formatter that writes every double as `d.dddddddddddddddde±x`.
struct Sig17<'a>(PrettyFormatter<'a>);

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    forward! {
        begin_array(), end_array(), begin_array_value(first: bool), end_array_value(),
        begin_object(), end_object(), begin_object_key(first: bool), begin_object_value(),
        end_object_value(),
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("JSON values serialize");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serializer emits UTF-8")
}

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("cannot write {}: {e}", path.display()))
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> CliResult<()> {
    let path = dir.join(name);
    fs::write(&path, to_json_string(value)).map_err(|e| io_err(&path, e))
}

pub fn write_csv(dir: &Path, name: &str, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    w.write_record(header).map_err(|e| io_err(&path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| io_err(&path, e))
}

pub fn vector(v: &DVector<f64>) -> Value {
    json!(v.iter().copied().collect::<Vec<_>>())
}

pub fn matrix(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

pub fn placement(p: &Placement<f64>) -> Value {
    json!({ "b": vector(p.b()), "c": vector(p.c()) })
}

pub fn pbh(r: &PbhReport) -> Value {
    json!({
        "mode": r.mode,
        "pass": r.pass,
        "min_margin": r.min_margin(),
        "checks": r.checks.iter().map(|c| json!({
            "re": c.re, "im": c.im, "margin": c.margin, "pass": c.pass,
        })).collect::<Vec<_>>(),
    })
}

pub fn error(e: &CliError) -> Value {
    json!({ "code": e.code(), "kind": e.kind(), "message": e.to_string() })
}
