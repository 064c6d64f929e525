use std::fmt::Write;

use super::ast::*;

fn label(l: &LabelRef) -> String {
    match l {
        LabelRef::Flat(q) => q.to_string(),
        LabelRef::Nested(p) => p.to_string(),
    }
}

fn mix(parts: &[(crate::scalar::Rational, LabelRef)]) -> String {
    parts.iter().map(|(w, l)| format!("{w} {}", label(l))).collect::<Vec<_>>().join(" + ")
}

fn names(ids: &[Ident], sep: &str) -> String {
    ids.iter().map(|i| i.name.as_str()).collect::<Vec<_>>().join(sep)
}

/// Canonical text of one declaration.
pub fn print_decl(d: &DeclKind) -> String {
    match d {
        DeclKind::Comment(c) if c.is_empty() => "#".into(),
        DeclKind::Comment(c) => format!("# {c}"),
        DeclKind::System { name, expr: SystemExpr::Elem(n) } => format!("system {} = elem {n}", name.name),
        DeclKind::System { name, expr: SystemExpr::Product(parts) } => {
            format!("system {} = {}", name.name, names(parts, " * "))
        }
        DeclKind::State { name, system, body } => {
            let body = match body {
                StateBody::Pure(l) => format!("pure {}", label(l)),
                StateBody::Mix(parts) => format!("mix {}", mix(parts)),
                StateBody::Uniform => "uniform".into(),
            };
            format!("state {} : {} = {body}", name.name, system.name)
        }
        DeclKind::Effect { name, system, body } => {
            let body = match body {
                EffectBody::Pure(l) => format!("pure {}", label(l)),
                EffectBody::Mix(parts) => format!("mix {}", mix(parts)),
                EffectBody::Discard => "discard".into(),
            };
            format!("effect {} : {} = {body}", name.name, system.name)
        }
        DeclKind::Gate { name, input, output, body } => {
            let body = match body {
                GateBody::Atomic(terms) => {
                    let terms: Vec<String> = terms
                        .iter()
                        .map(|t| format!("{} -> {} tau {} w {}", t.input, t.output, t.tau, t.weight))
                        .collect();
                    format!("atomic {}", terms.join(" + "))
                }
                GateBody::Id => "id".into(),
                GateBody::Swap(a, b) => format!("swap {} {}", a.name, b.name),
                GateBody::Nu(a, b) => format!("nu {} {}", a.name, b.name),
                GateBody::NuInv(a, b) => format!("nu_inv {} {}", a.name, b.name),
                GateBody::Rev(perm, bits) => {
                    let list = |v: Vec<String>| format!("[{}]", v.join(", "));
                    format!(
                        "rev {} {}",
                        list(perm.iter().map(ToString::to_string).collect()),
                        list(bits.iter().map(ToString::to_string).collect())
                    )
                }
            };
            format!("gate {} : {} -> {} = {body}", name.name, input.name, output.name)
        }
        DeclKind::Circuit { name, stages } => {
            let stages: Vec<String> = stages.iter().map(|row| names(row, " | ")).collect();
            format!("circuit {} = {}", name.name, stages.join(" ; "))
        }
        DeclKind::Eval { name } => format!("eval {}", name.name),
    }
}

/// One declaration per line, in source order.
pub fn pretty(ast: &CircuitAst) -> String {
    let mut out = String::new();
    for d in &ast.decls {
        let _ = writeln!(out, "{}", print_decl(&d.kind));
    }
    out
}
