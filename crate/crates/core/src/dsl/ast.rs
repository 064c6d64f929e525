use crate::scalar::Rational;
use crate::systems::PureLabel;

use super::Span;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SystemExpr {
    Elem(usize),
    Product(Vec<Ident>),
}

/// A pure label written either as a flat index or in nested form.
#[derive(Clone, Debug, PartialEq)]
pub enum LabelRef {
    Flat(usize),
    Nested(PureLabel),
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateBody {
    Pure(LabelRef),
    Mix(Vec<(Rational, LabelRef)>),
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EffectBody {
    Pure(LabelRef),
    Mix(Vec<(Rational, LabelRef)>),
    Discard,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TermAst {
    pub input: usize,
    pub output: usize,
    pub tau: u8,
    pub weight: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GateBody {
    Atomic(Vec<TermAst>),
    Id,
    Swap(Ident, Ident),
    Nu(Ident, Ident),
    NuInv(Ident, Ident),
    Rev(Vec<usize>, Vec<u8>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum DeclKind {
    Comment(String),
    System { name: Ident, expr: SystemExpr },
    State { name: Ident, system: Ident, body: StateBody },
    Effect { name: Ident, system: Ident, body: EffectBody },
    Gate { name: Ident, input: Ident, output: Ident, body: GateBody },
    /// Sequential stages, each a parallel row of boxes.
    Circuit { name: Ident, stages: Vec<Vec<Ident>> },
    Eval { name: Ident },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decl {
    pub kind: DeclKind,
    pub span: Span,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CircuitAst {
    pub decls: Vec<Decl>,
}

impl DeclKind {
    pub fn name(&self) -> Option<&Ident> {
        match self {
            DeclKind::Comment(_) | DeclKind::Eval { .. } => None,
            DeclKind::System { name, .. }
            | DeclKind::State { name, .. }
            | DeclKind::Effect { name, .. }
            | DeclKind::Gate { name, .. }
            | DeclKind::Circuit { name, .. } => Some(name),
        }
    }
}
