use std::collections::{BTreeMap, HashMap};

use super::{ComponentDecl, Diagnostic, Endpoint, Kind, Netlist};
use crate::components::ElementParams;

/// Structural checks: unique names, per-kind parameters, port arity and
/// single use of every port. Topology (whether the circuit is a Sagnac
/// switch) is checked by the engine.
pub fn validate(netlist: &Netlist) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut by_name: HashMap<&str, &ComponentDecl> = HashMap::new();

    // Duplicates are reported at the later declaration.
    let mut ordered: Vec<&ComponentDecl> = netlist.decls().iter().collect();
    ordered.sort_by_key(|d| d.span);
    for d in ordered {
        if let Some(first) = by_name.get(d.name.as_str()) {
            let prev = first
                .span
                .map(|s| format!(" (first declared at line {})", s.line))
                .unwrap_or_default();
            diags.push(Diagnostic::error(
                d.span,
                format!("duplicate component name `{}`{prev}", d.name),
            ));
            continue;
        }
        by_name.insert(&d.name, d);
        check_params(d, &mut diags);
    }

    let mut used: BTreeMap<Endpoint, Option<usize>> = BTreeMap::new();
    let mut conns: Vec<_> = netlist.connections().iter().collect();
    conns.sort_by_key(|c| c.span);
    for c in conns {
        for end in [&c.from, &c.to] {
            let Some(decl) = by_name.get(end.component.as_str()) else {
                diags.push(Diagnostic::error(
                    c.span,
                    format!(
                        "connection references unknown component `{}`",
                        end.component
                    ),
                ));
                continue;
            };
            if !decl.kind.ports().contains(&end.port.as_str()) {
                diags.push(Diagnostic::error(
                    c.span,
                    format!(
                        "no port `{}` on {} `{}` (ports: {})",
                        end.port,
                        decl.kind,
                        decl.name,
                        decl.kind.ports().join(", ")
                    ),
                ));
                continue;
            }
            if let Some(prev) = used.get(end) {
                let at = prev.map(|l| format!(" at line {l}")).unwrap_or_default();
                diags.push(Diagnostic::error(
                    c.span,
                    format!("port {end} already connected{at}"),
                ));
                continue;
            }
            used.insert(end.clone(), c.span.map(|s| s.line));
        }
    }
    diags
}

fn check_params(d: &ComponentDecl, diags: &mut Vec<Diagnostic>) {
    for key in d.kind.required_params() {
        if !d.params.contains_key(*key) {
            diags.push(Diagnostic::error(
                d.span,
                format!(
                    "{} `{}` is missing required parameter `{key}`",
                    d.kind, d.name
                ),
            ));
        }
    }
    let mut unknown = false;
    for key in d.params.keys() {
        let k = key.as_str();
        if !d.kind.required_params().contains(&k) && !d.kind.optional_params().contains(&k) {
            diags.push(Diagnostic::error(
                d.span,
                format!("{} `{}` has no parameter `{key}`", d.kind, d.name),
            ));
            unknown = true;
        }
    }
    if unknown
        || d.kind
            .required_params()
            .iter()
            .any(|k| !d.params.contains_key(*k))
    {
        return;
    }
    if let Err(msg) = element_params(d) {
        diags.push(Diagnostic::error(
            d.span,
            format!("{} `{}`: {msg}", d.kind, d.name),
        ));
    }
    if d.kind == Kind::Detector {
        if let Some(e) = d.param("efficiency") {
            if !(0.0..=1.0).contains(&e) {
                diags.push(Diagnostic::error(
                    d.span,
                    format!("detector `{}`: efficiency {e} outside [0, 1]", d.name),
                ));
            }
        }
    }
}

/// Element parameters of a declaration with all required keys present.
/// `Ok(None)` for kinds with no optical action.
pub(crate) fn element_params(d: &ComponentDecl) -> Result<Option<ElementParams<f64>>, String> {
    let p = |k: &str| d.param(k).unwrap_or(0.0);
    let params = match d.kind {
        Kind::Bs => ElementParams::Beamsplitter { ratio: p("ratio") },
        Kind::Pbs => ElementParams::Pbs,
        Kind::Hwp => ElementParams::Hwp { angle: p("angle") },
        Kind::Pm => {
            let axis = match d.param("axis") {
                Some(0.0) => crate::optics::Polarization::H,
                Some(1.0) => crate::optics::Polarization::V,
                other => {
                    return Err(format!(
                        "axis must be 0 (H) or 1 (V), got {}",
                        other.unwrap_or(f64::NAN)
                    ))
                }
            };
            ElementParams::PhaseModulator { phase: 0.0, axis }
        }
        Kind::Pc => ElementParams::PolarizationController {
            a: p("a"),
            b: p("b"),
            c: p("c"),
        },
        Kind::Att => ElementParams::Attenuator {
            loss_db: p("loss_db"),
        },
        Kind::Fiber => ElementParams::Fiber {
            length_m: p("length_m"),
            group_index: d
                .param("group_index")
                .unwrap_or(crate::components::DEFAULT_GROUP_INDEX),
            twist: [p("twist_a"), p("twist_b"), p("twist_c")],
        },
        Kind::Circulator | Kind::Source | Kind::Detector => return Ok(None),
    };
    params.validate().map_err(|e| e.to_string())?;
    Ok(Some(params))
}
