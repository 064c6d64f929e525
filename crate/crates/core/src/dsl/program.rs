//! Name resolution, shape checking and the two evaluators.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde_json::{json, Value};

use super::ast::*;
use super::parser::parse;
use super::{Diagnostic, Diagnostics, Span};
use crate::bct::process::Process;
use crate::bct::state::{deterministic_effect, uniform_state, BctEffect, BctState};
use crate::bct::tensor::{identity, nu, nu_inv, reversible_on, swap, AtomicTerm, ReversibleSpec, TransformationTensor};
use crate::classical::ClassicalMap;
use crate::error::{Error, Result};
use crate::ontic::{xi_effect, xi_process, xi_state, xi_transformation};
use crate::scalar::{Rational, Scalar};
use crate::systems::{flatten_label, SystemShape};

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    System(SystemShape),
    State(BctState),
    Effect(BctEffect),
    Gate(TransformationTensor),
    Circuit { stages: Vec<Vec<String>>, input: SystemShape, output: SystemShape },
}

impl Item {
    pub fn kind(&self) -> &'static str {
        match self {
            Item::System(_) => "system",
            Item::State(_) => "state",
            Item::Effect(_) => "effect",
            Item::Gate(_) => "gate",
            Item::Circuit { .. } => "circuit",
        }
    }

    /// Input and output shape when used as a box.
    pub fn signature(&self) -> (SystemShape, SystemShape) {
        match self {
            Item::System(s) => (s.clone(), s.clone()),
            Item::State(r) => (SystemShape::trivial(), r.shape().clone()),
            Item::Effect(e) => (e.shape().clone(), SystemShape::trivial()),
            Item::Gate(t) => (t.in_shape().clone(), t.out_shape().clone()),
            Item::Circuit { input, output, .. } => (input.clone(), output.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub ast: CircuitAst,
    items: BTreeMap<String, Item>,
    evals: Vec<String>,
}

/// Parses and checks a source text.
pub fn compile(text: &str) -> Result<Program, Diagnostics> {
    check(parse(text)?)
}

pub fn check(ast: CircuitAst) -> Result<Program, Diagnostics> {
    let mut items: BTreeMap<String, Item> = BTreeMap::new();
    let mut evals = Vec::new();
    let mut diags = Vec::new();
    for decl in &ast.decls {
        if let Some(name) = decl.kind.name() {
            if items.contains_key(&name.name) {
                diags.push(Diagnostic::new(name.span, format!("`{}` is already declared", name.name)));
                continue;
            }
        }
        let result = match &decl.kind {
            DeclKind::Comment(_) => continue,
            DeclKind::Eval { name } => match items.get(&name.name) {
                Some(_) => {
                    evals.push(name.name.clone());
                    continue;
                }
                None => Err(unknown(name)),
            },
            kind => elaborate(kind, decl.span, &items),
        };
        match result {
            Ok(item) => {
                let name = decl.kind.name().expect("named declaration");
                items.insert(name.name.clone(), item);
            }
            Err(d) => diags.push(d),
        }
    }
    if diags.is_empty() {
        Ok(Program { ast, items, evals })
    } else {
        Err(Diagnostics(diags))
    }
}

fn unknown(id: &Ident) -> Diagnostic {
    Diagnostic::new(id.span, format!("unknown name `{}`", id.name))
}

fn system(id: &Ident, items: &BTreeMap<String, Item>) -> Result<SystemShape, Diagnostic> {
    match items.get(&id.name) {
        Some(Item::System(s)) => Ok(s.clone()),
        Some(other) => Err(Diagnostic::new(id.span, format!("`{}` is a {}, not a system", id.name, other.kind()))),
        None => Err(unknown(id)),
    }
}

fn at(span: Span) -> impl Fn(Error) -> Diagnostic {
    move |e| Diagnostic::new(span, e.to_string())
}

fn resolve(shape: &SystemShape, label: &LabelRef, span: Span) -> Result<usize, Diagnostic> {
    match label {
        LabelRef::Flat(q) if *q >= 1 && *q <= shape.bct_dim() => Ok(*q),
        LabelRef::Flat(q) => Err(Diagnostic::new(span, format!("label {q} out of range 1..={}", shape.bct_dim()))),
        LabelRef::Nested(p) => flatten_label(shape, p).map_err(at(span)),
    }
}

fn weights(shape: &SystemShape, parts: &[(Rational, LabelRef)], span: Span) -> Result<Vec<Rational>, Diagnostic> {
    let mut w = vec![Rational::zero(); shape.bct_dim()];
    for (p, l) in parts {
        w[resolve(shape, l, span)? - 1] += p;
    }
    Ok(w)
}

fn expect_shape(what: &str, found: &SystemShape, wanted: &SystemShape, span: Span) -> Result<(), Diagnostic> {
    if found == wanted {
        Ok(())
    } else {
        Err(Diagnostic::new(span, format!("{what}: declared {found} but the body needs {wanted}")))
    }
}

fn elaborate(kind: &DeclKind, span: Span, items: &BTreeMap<String, Item>) -> Result<Item, Diagnostic> {
    Ok(match kind {
        DeclKind::System { expr: SystemExpr::Elem(n), .. } => {
            Item::System(SystemShape::elementary(*n).map_err(at(span))?)
        }
        DeclKind::System { expr: SystemExpr::Product(parts), .. } => {
            let mut whole = SystemShape::trivial();
            for p in parts {
                whole = whole.compose(&system(p, items)?);
            }
            Item::System(whole)
        }
        DeclKind::State { system: sys, body, .. } => {
            let shape = system(sys, items)?;
            let state = match body {
                StateBody::Uniform => uniform_state(&shape),
                StateBody::Pure(l) => weights(&shape, &[(Rational::from(1), l.clone())], span)
                    .and_then(|w| BctState::new(shape.clone(), w).map_err(at(span)))?,
                StateBody::Mix(parts) => {
                    weights(&shape, parts, span).and_then(|w| BctState::new(shape.clone(), w).map_err(at(span)))?
                }
            };
            Item::State(state)
        }
        DeclKind::Effect { system: sys, body, .. } => {
            let shape = system(sys, items)?;
            let effect = match body {
                EffectBody::Discard => deterministic_effect(&shape),
                EffectBody::Pure(l) => weights(&shape, &[(Rational::from(1), l.clone())], span)
                    .and_then(|w| BctEffect::new(shape.clone(), w).map_err(at(span)))?,
                EffectBody::Mix(parts) => {
                    weights(&shape, parts, span).and_then(|w| BctEffect::new(shape.clone(), w).map_err(at(span)))?
                }
            };
            Item::Effect(effect)
        }
        DeclKind::Gate { input, output, body, .. } => {
            let (a, b) = (system(input, items)?, system(output, items)?);
            let t: TransformationTensor = match body {
                GateBody::Atomic(terms) => TransformationTensor::new(
                    a.clone(),
                    b.clone(),
                    terms.iter().map(|t| AtomicTerm::new(t.input, t.output, t.tau, t.weight)),
                )
                .map_err(at(span))?,
                GateBody::Id => identity(&a).map_err(at(span))?,
                GateBody::Swap(x, y) => swap(&system(x, items)?, &system(y, items)?).map_err(at(span))?,
                GateBody::Nu(x, y) => nu(&system(x, items)?, &system(y, items)?).map_err(at(span))?,
                GateBody::NuInv(x, y) => nu_inv(&system(x, items)?, &system(y, items)?).map_err(at(span))?,
                GateBody::Rev(perm, bits) => {
                    let spec = ReversibleSpec::new(perm.clone(), bits.clone()).map_err(at(span))?;
                    reversible_on(&a, &spec).map_err(at(span))?
                }
            };
            expect_shape("input", &a, t.in_shape(), input.span)?;
            expect_shape("output", &b, t.out_shape(), output.span)?;
            Item::Gate(t)
        }
        DeclKind::Circuit { stages, .. } => {
            let mut input = None;
            let mut current: Option<SystemShape> = None;
            for (k, row) in stages.iter().enumerate() {
                let (mut row_in, mut row_out) = (SystemShape::trivial(), SystemShape::trivial());
                for id in row {
                    let item = items.get(&id.name).ok_or_else(|| unknown(id))?;
                    let (i, o) = item.signature();
                    row_in = row_in.compose(&i);
                    row_out = row_out.compose(&o);
                }
                if let Some(prev) = &current {
                    if *prev != row_in {
                        return Err(Diagnostic::new(
                            row[0].span,
                            format!("shape error at stage {}: previous stage yields {prev}, this one takes {row_in}", k + 1),
                        ));
                    }
                } else {
                    input = Some(row_in);
                }
                current = Some(row_out);
            }
            Item::Circuit {
                stages: stages.iter().map(|r| r.iter().map(|i| i.name.clone()).collect()).collect(),
                input: input.unwrap_or_else(SystemShape::trivial),
                output: current.unwrap_or_else(SystemShape::trivial),
            }
        }
        DeclKind::Comment(_) | DeclKind::Eval { .. } => unreachable!("handled by the caller"),
    })
}

/// Both evaluations of one name and how far apart they are.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub name: String,
    pub bct: Process,
    pub ontic: ClassicalMap,
    pub max_abs_dev: f64,
}

impl Evaluation {
    pub fn agree(&self) -> bool {
        self.max_abs_dev == 0.0
    }

    /// `{"name","value","ontic","diff"}`; `value` is a bare scalar for closed
    /// circuits.
    pub fn to_json(&self) -> Value {
        let value = match &self.bct {
            Process::Scalar(p) => p.to_json(),
            other => other.to_json(),
        };
        let ontic = match self.ontic.as_scalar() {
            Some(p) => p.to_json(),
            None => self.ontic.to_json(),
        };
        json!({ "name": self.name, "value": value, "ontic": ontic, "diff": self.max_abs_dev })
    }
}

impl Program {
    pub fn item(&self, name: &str) -> Option<&Item> {
        self.items.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.items.keys().map(String::as_str)
    }

    /// Names listed in `eval` directives, in order.
    pub fn evals(&self) -> &[String] {
        &self.evals
    }

    fn lookup(&self, name: &str) -> Result<&Item> {
        self.items.get(name).ok_or_else(|| Error::InvalidSystem(format!("unknown name `{name}`")))
    }

    pub fn eval_bct(&self, name: &str) -> Result<Process> {
        Ok(match self.lookup(name)? {
            Item::System(s) => Process::Map(identity(s)?),
            Item::State(r) => Process::State(r.clone()).normalize(),
            Item::Effect(e) => Process::Effect(e.clone()).normalize(),
            Item::Gate(t) => Process::Map(t.clone()),
            Item::Circuit { stages, .. } => {
                let mut acc: Option<Process> = None;
                for row in stages {
                    let mut stage = Process::Scalar(Rational::from(1));
                    for b in row {
                        stage = stage.beside(&self.eval_bct(b)?)?;
                    }
                    acc = Some(match acc {
                        None => stage,
                        Some(prev) => prev.then(&stage)?,
                    });
                }
                acc.unwrap_or(Process::Scalar(Rational::from(1)))
            }
        })
    }

    /// The same fold carried out on the classical images of the boxes.
    pub fn eval_ontic(&self, name: &str) -> Result<ClassicalMap> {
        Ok(match self.lookup(name)? {
            Item::System(s) => ClassicalMap::identity(s.ontic_dim()),
            Item::State(r) => xi_state(r)?.map,
            Item::Effect(e) => xi_effect(e)?.map,
            Item::Gate(t) => xi_transformation(t)?.map,
            Item::Circuit { stages, .. } => {
                let mut acc: Option<ClassicalMap> = None;
                for row in stages {
                    let mut stage = ClassicalMap::scalar(Rational::from(1));
                    for b in row {
                        stage = stage.kron(&self.eval_ontic(b)?);
                    }
                    acc = Some(match acc {
                        None => stage,
                        Some(prev) => prev.then(&stage)?,
                    });
                }
                acc.unwrap_or_else(|| ClassicalMap::scalar(Rational::from(1)))
            }
        })
    }

    pub fn evaluate(&self, name: &str) -> Result<Evaluation> {
        let bct = self.eval_bct(name)?;
        let ontic = self.eval_ontic(name)?;
        let image = xi_process(&bct)?;
        let max_abs_dev = image.max_abs_dev(&ontic).unwrap_or(f64::INFINITY);
        Ok(Evaluation { name: name.to_string(), bct, ontic, max_abs_dev })
    }

    /// The classical image of a declared box, with ontic wire labels.
    pub fn embed(&self, name: &str) -> Result<Value> {
        Ok(match self.lookup(name)? {
            Item::State(r) => xi_state(r)?.to_json(),
            Item::Effect(e) => xi_effect(e)?.to_json(),
            Item::Gate(t) => xi_transformation(t)?.to_json(),
            Item::System(s) => xi_transformation(&identity::<Rational>(s)?)?.to_json(),
            Item::Circuit { .. } => match self.eval_bct(name)? {
                Process::Scalar(p) => json!({ "role": "scalar", "value": p.to_json() }),
                Process::State(r) => xi_state(&r)?.to_json(),
                Process::Effect(e) => xi_effect(&e)?.to_json(),
                Process::Map(t) => xi_transformation(&t)?.to_json(),
            },
        })
    }
}
