//! Bit-stable report rendering: JSON with sorted keys and CSV, all floats as `{:.16e}`.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use super::CollapseReport;

pub const CSV_COLUMNS: [&str; 9] = [
    "n",
    "d_gp1",
    "lambda_min",
    "fiber_diam_upper",
    "bound_eq42",
    "max_slack",
    "delta_theory",
    "gh_upper",
    "limit_discrepancy",
];

/// 17 significant digits in scientific notation; non-finite values become `null`.
fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

struct Fixed17(PrettyFormatter<'static>);

impl Formatter for Fixed17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with sorted keys (via `Value`) and fixed float rendering.
pub fn to_canonical_json<T: Serialize>(v: &T) -> String {
    let value = serde_json::to_value(v).expect("report types serialize");
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        Fixed17(PrettyFormatter::with_indent(b"  ")),
    );
    value
        .serialize(&mut ser)
        .expect("writing to a Vec cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

pub fn report_value(r: &CollapseReport) -> Value {
    json!({
        "spec": r.experiment.to_json(),
        "rows": r.rows,
        "fits": r.fits,
    })
}

pub fn report_json(r: &CollapseReport) -> String {
    to_canonical_json(&report_value(r))
}

/// One line per row in [`CSV_COLUMNS`] order; a missing limit discrepancy is left empty.
pub fn report_csv(r: &CollapseReport) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for row in &r.rows {
        let d = &row.distortion;
        let cells = [
            d.n.to_string(),
            fmt_f64(d.d_gp1),
            fmt_f64(d.lambda_min),
            fmt_f64(row.fiber_diam_upper),
            fmt_f64(row.bound_eq42),
            fmt_f64(d.max_slack),
            fmt_f64(d.delta_theory),
            fmt_f64(d.gh_upper_measured),
            row.limit_discrepancy.map(fmt_f64).unwrap_or_default(),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
