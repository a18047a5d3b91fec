use std::collections::BTreeMap;

use super::{ComponentDecl, Connection, Diagnostic, Endpoint, Kind, Netlist, Severity, Span};

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Whitespace-separated tokens with their 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter()
        .map(|(byte, tok)| (line[..byte].chars().count() + 1, tok))
        .collect()
}

fn parse_endpoint(tok: &str, span: Span, diags: &mut Vec<Diagnostic>) -> Option<Endpoint> {
    match tok.split_once('.') {
        Some((comp, port)) if is_ident(comp) && is_ident(port) => Some(Endpoint::new(comp, port)),
        _ => {
            diags.push(Diagnostic::error(
                Some(span),
                format!("expected `component.port`, found `{tok}`"),
            ));
            None
        }
    }
}

fn parse_connection(
    toks: &[(usize, &str)],
    line: usize,
    diags: &mut Vec<Diagnostic>,
) -> Option<Connection> {
    let at = |i: usize| Span::new(line, toks[i].0);
    if toks.len() != 4 || toks[2].1 != "->" {
        let col = toks.get(2).map_or(toks[0].0, |t| t.0);
        diags.push(Diagnostic::error(
            Some(Span::new(line, col)),
            "expected `connect <component>.<port> -> <component>.<port>`",
        ));
        return None;
    }
    let from = parse_endpoint(toks[1].1, at(1), diags);
    let to = parse_endpoint(toks[3].1, at(3), diags);
    Some(Connection {
        from: from?,
        to: to?,
        span: Some(at(0)),
    })
}

fn parse_decl(
    toks: &[(usize, &str)],
    line: usize,
    diags: &mut Vec<Diagnostic>,
) -> Option<ComponentDecl> {
    let at = |i: usize| Span::new(line, toks[i].0);
    let Some(kind) = Kind::from_keyword(toks[0].1) else {
        diags.push(Diagnostic::error(
            Some(at(0)),
            format!("unknown component kind `{}`", toks[0].1),
        ));
        return None;
    };
    let Some(&(_, name)) = toks.get(1) else {
        diags.push(Diagnostic::error(
            Some(at(0)),
            format!("`{kind}` declaration is missing a name"),
        ));
        return None;
    };
    if !is_ident(name) {
        diags.push(Diagnostic::error(
            Some(at(1)),
            format!("invalid component name `{name}`"),
        ));
        return None;
    }
    let mut params = BTreeMap::new();
    let mut ok = true;
    for (i, &(_, tok)) in toks.iter().enumerate().skip(2) {
        let Some((key, value)) = tok.split_once('=') else {
            diags.push(Diagnostic::error(
                Some(at(i)),
                format!("expected `key=value`, found `{tok}`"),
            ));
            ok = false;
            continue;
        };
        if !is_ident(key) {
            diags.push(Diagnostic::error(
                Some(at(i)),
                format!("invalid parameter key `{key}`"),
            ));
            ok = false;
            continue;
        }
        let number = match value.parse::<f64>() {
            Ok(x) if x.is_finite() => x,
            _ => {
                diags.push(Diagnostic::error(
                    Some(Span::new(line, at(i).col + key.chars().count() + 1)),
                    format!("invalid number `{value}` for `{key}`"),
                ));
                ok = false;
                continue;
            }
        };
        if params.insert(key.to_string(), number).is_some() {
            diags.push(Diagnostic::error(
                Some(at(i)),
                format!("parameter `{key}` given twice"),
            ));
            ok = false;
        }
    }
    ok.then(|| ComponentDecl {
        name: name.to_string(),
        kind,
        params,
        span: Some(at(0)),
    })
}

/// Parses and validates netlist text. All problems found are reported,
/// sorted by location.
pub fn parse(text: &str) -> Result<Netlist, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut decls = Vec::new();
    let mut connections = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks = tokens(raw);
        match toks.first() {
            None => continue,
            Some((_, t)) if t.starts_with('#') => continue,
            Some((_, "connect")) => {
                if let Some(c) = parse_connection(&toks, line, &mut diags) {
                    connections.push(c);
                }
            }
            Some(_) => {
                if let Some(d) = parse_decl(&toks, line, &mut diags) {
                    decls.push(d);
                }
            }
        }
    }
    let netlist = Netlist::canonical(decls, connections);
    diags.extend(super::validate(&netlist));
    diags.sort_by_key(|d| d.span);
    if diags.iter().any(|d| d.severity == Severity::Error) {
        Err(diags)
    } else {
        Ok(netlist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_program() {
        let n = parse(
            "# one splitter\nbs main ratio=0.5\nsource s\ndetector d\n\
             connect s.out -> main.p1\nconnect main.p3 -> d.in\n",
        )
        .unwrap();
        assert_eq!(n.decls_of(Kind::Bs).count(), 1);
        assert_eq!(n.decl("main").unwrap().param("ratio"), Some(0.5));
        assert_eq!(n.connections().len(), 2);
    }

    #[test]
    fn missing_axis_names_key_and_line() {
        let err = parse("bs b ratio=0.5\npm mod1\n").unwrap_err();
        assert_eq!(err.len(), 1);
        assert!(err[0].message.contains("axis"), "{}", err[0].message);
        assert_eq!(err[0].span, Some(Span::new(2, 1)));
    }

    #[test]
    fn syntax_errors_are_located() {
        let err = parse("hwp h angle=abc\n").unwrap_err();
        assert_eq!(err[0].span, Some(Span::new(1, 13)));
        let err = parse("\n  connect a.p1 => b.p2\n").unwrap_err();
        assert_eq!(err[0].span.unwrap().line, 2);
        let err = parse("laser l\n").unwrap_err();
        assert!(err[0].message.contains("unknown component kind"));
        let err = parse("hwp h angle=1 angle=2\n").unwrap_err();
        assert!(err[0].message.contains("twice"));
        let err = parse("hwp h angle=inf\n").unwrap_err();
        assert!(err[0].message.contains("invalid number"));
    }

    #[test]
    fn duplicate_and_port_errors() {
        let err = parse("hwp h angle=0\nhwp h angle=1\n").unwrap_err();
        assert!(err
            .iter()
            .any(|d| d.message.contains("duplicate") && d.span.unwrap().line == 2));
        let err = parse("hwp h angle=0\nhwp g angle=0\nconnect h.p3 -> g.p1\n").unwrap_err();
        assert!(err[0].message.contains("p3"));
        assert_eq!(err[0].span.unwrap().line, 3);
        let err = parse(
            "hwp h angle=0\nhwp g angle=0\nhwp k angle=0\nconnect h.p2 -> g.p1\nconnect k.p1 -> g.p1\n",
        )
        .unwrap_err();
        assert!(err[0].message.contains("already connected"));
        assert_eq!(err[0].span.unwrap().line, 5);
        let err = parse("hwp h angle=0\nconnect h.p2 -> nowhere.p1\n").unwrap_err();
        assert!(err[0].message.contains("nowhere"));
    }

    #[test]
    fn tokens_report_char_columns() {
        let t = tokens("  ab\tcd  e");
        assert_eq!(t, vec![(3, "ab"), (6, "cd"), (10, "e")]);
    }

    #[test]
    fn scientific_notation_accepted() {
        let n = parse("fiber f length_m=1.5e2\n").unwrap();
        assert_eq!(n.decl("f").unwrap().param("length_m"), Some(150.0));
    }
}
