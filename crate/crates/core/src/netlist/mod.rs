//! Line-oriented netlist format (`.sagnet`) for polarization-optics circuits.
//!
//! ```text
//! # comment
//! bs main ratio=0.5
//! hwp prep angle=0.7853981633974483
//! connect prep.p2 -> main.p1
//! ```
//!
//! Parameter units are fixed per key: angles in radians, `loss_db` in dB,
//! `length_m` in meters, everything else dimensionless. `pm.axis` is `0` for
//! H and `1` for V.
//!
//! A [`Netlist`] is always kept in canonical form: declarations sorted by
//! name, connections sorted lexicographically, `-0` stored as `0`. Numbers
//! are written in their shortest round-trip form, so `parse(serialize(n)) == n`
//! holds exactly.

mod diagnostic;
mod parse;
mod preset;
mod serialize;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

pub use diagnostic::{render_diagnostics, Diagnostic, Severity, Span};
pub use parse::parse;
pub use preset::{sagnac_preset, PresetNames};
pub use serialize::{canonical_number, format_number, serialize, HEADER};
pub(crate) use validate::element_params as validate_element;
pub use validate::validate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Bs,
    Pbs,
    Hwp,
    Pm,
    Pc,
    Att,
    Fiber,
    Circulator,
    Source,
    Detector,
}

impl Kind {
    pub const ALL: [Kind; 10] = [
        Kind::Bs,
        Kind::Pbs,
        Kind::Hwp,
        Kind::Pm,
        Kind::Pc,
        Kind::Att,
        Kind::Fiber,
        Kind::Circulator,
        Kind::Source,
        Kind::Detector,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Kind::Bs => "bs",
            Kind::Pbs => "pbs",
            Kind::Hwp => "hwp",
            Kind::Pm => "pm",
            Kind::Pc => "pc",
            Kind::Att => "att",
            Kind::Fiber => "fiber",
            Kind::Circulator => "circulator",
            Kind::Source => "source",
            Kind::Detector => "detector",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.keyword() == s)
    }

    pub fn ports(self) -> &'static [&'static str] {
        match self {
            Kind::Bs | Kind::Pbs => &["p1", "p2", "p3", "p4"],
            Kind::Hwp | Kind::Pm | Kind::Pc | Kind::Att | Kind::Fiber => &["p1", "p2"],
            Kind::Circulator => &["p1", "p2", "p3"],
            Kind::Source => &["idler", "out"],
            Kind::Detector => &["in"],
        }
    }

    pub fn required_params(self) -> &'static [&'static str] {
        match self {
            Kind::Bs => &["ratio"],
            Kind::Hwp => &["angle"],
            Kind::Pm => &["axis"],
            Kind::Pc => &["a", "b", "c"],
            Kind::Att => &["loss_db"],
            Kind::Fiber => &["length_m"],
            Kind::Pbs | Kind::Circulator | Kind::Source | Kind::Detector => &[],
        }
    }

    pub fn optional_params(self) -> &'static [&'static str] {
        match self {
            Kind::Fiber => &["group_index", "twist_a", "twist_b", "twist_c"],
            Kind::Detector => &["efficiency"],
            _ => &[],
        }
    }

    pub fn is_two_port(self) -> bool {
        self.ports().len() == 2 && self.ports()[0] == "p1"
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone)]
pub struct ComponentDecl {
    pub name: String,
    pub kind: Kind,
    pub params: BTreeMap<String, f64>,
    pub span: Option<Span>,
}

impl ComponentDecl {
    pub fn new(name: impl Into<String>, kind: Kind) -> Self {
        Self {
            name: name.into(),
            kind,
            params: BTreeMap::new(),
            span: None,
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), canonical_number(value));
        self
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

/// Equality ignores source locations.
impl PartialEq for ComponentDecl {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.kind == other.kind && self.params == other.params
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Endpoint {
    pub component: String,
    pub port: String,
}

impl Endpoint {
    pub fn new(component: impl Into<String>, port: impl Into<String>) -> Self {
        Self {
            component: component.into(),
            port: port.into(),
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.component, self.port)
    }
}

#[derive(Debug, Clone)]
pub struct Connection {
    pub from: Endpoint,
    pub to: Endpoint,
    pub span: Option<Span>,
}

impl Connection {
    pub fn new(from: Endpoint, to: Endpoint) -> Self {
        Self {
            from,
            to,
            span: None,
        }
    }

    pub fn other_end(&self, end: &Endpoint) -> Option<&Endpoint> {
        if &self.from == end {
            Some(&self.to)
        } else if &self.to == end {
            Some(&self.from)
        } else {
            None
        }
    }

    fn sort_key(&self) -> (String, String) {
        (self.from.to_string(), self.to.to_string())
    }
}

impl PartialEq for Connection {
    fn eq(&self, other: &Self) -> bool {
        self.from == other.from && self.to == other.to
    }
}

/// A validated, canonically ordered circuit description.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Netlist {
    decls: Vec<ComponentDecl>,
    connections: Vec<Connection>,
}

impl Netlist {
    /// Canonicalizes and validates.
    pub fn new(
        decls: Vec<ComponentDecl>,
        connections: Vec<Connection>,
    ) -> Result<Self, Vec<Diagnostic>> {
        let n = Self::canonical(decls, connections);
        let diags = validate(&n);
        if diags.iter().any(|d| d.severity == Severity::Error) {
            Err(diags)
        } else {
            Ok(n)
        }
    }

    pub(crate) fn canonical(
        mut decls: Vec<ComponentDecl>,
        mut connections: Vec<Connection>,
    ) -> Self {
        for d in &mut decls {
            for v in d.params.values_mut() {
                *v = canonical_number(*v);
            }
        }
        decls.sort_by(|a, b| a.name.cmp(&b.name));
        connections.sort_by_key(Connection::sort_key);
        Self { decls, connections }
    }

    pub fn decls(&self) -> &[ComponentDecl] {
        &self.decls
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn decl(&self, name: &str) -> Option<&ComponentDecl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn decls_of(&self, kind: Kind) -> impl Iterator<Item = &ComponentDecl> {
        self.decls.iter().filter(move |d| d.kind == kind)
    }

    /// The connection touching an endpoint, if any.
    pub fn connection_at(&self, end: &Endpoint) -> Option<&Connection> {
        self.connections.iter().find(|c| c.other_end(end).is_some())
    }

    /// Endpoint wired to `end`.
    pub fn peer(&self, end: &Endpoint) -> Option<&Endpoint> {
        self.connections.iter().find_map(|c| c.other_end(end))
    }

    /// Copy with one parameter replaced; the result is re-validated.
    pub fn with_param(&self, name: &str, key: &str, value: f64) -> Result<Self, Vec<Diagnostic>> {
        let mut decls = self.decls.clone();
        match decls.iter_mut().find(|d| d.name == name) {
            Some(d) => {
                d.params.insert(key.to_string(), value);
            }
            None => {
                return Err(vec![Diagnostic::error(
                    None,
                    format!("no component named `{name}`"),
                )])
            }
        }
        Self::new(decls, self.connections.clone())
    }

    /// Copy with an extra two-port element spliced into the connection at `at`.
    pub fn with_inserted(
        &self,
        at: &Endpoint,
        decl: ComponentDecl,
    ) -> Result<Self, Vec<Diagnostic>> {
        let peer = self.peer(at).cloned().ok_or_else(|| {
            vec![Diagnostic::error(
                None,
                format!("endpoint {at} is not connected"),
            )]
        })?;
        if !decl.kind.is_two_port() {
            return Err(vec![Diagnostic::error(
                None,
                format!("`{}` is not a two-port element", decl.kind),
            )]);
        }
        let name = decl.name.clone();
        let mut decls = self.decls.clone();
        decls.push(decl);
        let mut connections: Vec<Connection> = self
            .connections
            .iter()
            .filter(|c| c.other_end(at).is_none())
            .cloned()
            .collect();
        connections.push(Connection::new(at.clone(), Endpoint::new(&name, "p1")));
        connections.push(Connection::new(Endpoint::new(&name, "p2"), peer));
        Self::new(decls, connections)
    }
}
