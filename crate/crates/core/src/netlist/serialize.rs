use std::fmt::Write;

use super::Netlist;

pub const HEADER: &str = "# sagnet netlist v1";

/// `-0` becomes `0`; every other value is kept bit for bit.
pub fn canonical_number(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

/// Shortest decimal text that reads back as exactly the canonical value.
pub fn format_number(x: f64) -> String {
    let v = canonical_number(x);
    let plain = format!("{v}");
    let sci = format!("{v:e}");
    if plain.len() <= sci.len() {
        plain
    } else {
        sci
    }
}

/// Canonical text form. `parse(serialize(n)) == n` for every valid netlist.
pub fn serialize(netlist: &Netlist) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for d in netlist.decls() {
        write!(out, "{} {}", d.kind, d.name).unwrap();
        for (k, v) in &d.params {
            write!(out, " {k}={}", format_number(*v)).unwrap();
        }
        out.push('\n');
    }
    if !netlist.connections().is_empty() {
        out.push('\n');
        for c in netlist.connections() {
            writeln!(out, "connect {} -> {}", c.from, c.to).unwrap();
        }
    }
    out
}
