use crate::ir::StreamType;
use crate::term::{BinOp, FunctionTerm};

/// Source position (1-based line and column, in characters).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeExpr {
    /// `Events[T]`
    Events(Box<TypeExpr>),
    /// A base type name or a type parameter.
    Name(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Literal {
    Unit,
    Bool(bool),
    /// Numeric literal as written.
    Num(String),
    Str(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpRef {
    Bin(BinOp),
    Not,
}

/// Core operators that survive macro expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    Nil,
    Unit,
    Time,
    Last,
    Delay,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Nil => "nil",
            Builtin::Unit => "unit",
            Builtin::Time => "time",
            Builtin::Last => "last",
            Builtin::Delay => "delay",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Nil | Builtin::Unit => 0,
            Builtin::Time => 1,
            Builtin::Last | Builtin::Delay => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Ident(String),
    Literal(Literal),
    Call(Box<Expr>, Vec<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Lambda(Vec<String>, Box<Expr>),
    /// An operator used as a function value, e.g. `lift(∧)`.
    Op(OpRef),
    Block(Vec<Def>, Box<Expr>),
    /// Core nodes produced by macro expansion.
    Builtin(Builtin, Vec<Expr>),
    Lift(FunctionTerm, Vec<Expr>),
    Ascribe(Box<Expr>, TypeExpr),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Ident(_) | ExprKind::Literal(_) | ExprKind::Op(_) => Vec::new(),
            ExprKind::Call(f, args) => std::iter::once(&**f).chain(args).collect(),
            ExprKind::Binary(_, a, b) => vec![a, b],
            ExprKind::Unary(_, a) | ExprKind::Ascribe(a, _) | ExprKind::Lambda(_, a) => vec![a],
            ExprKind::If(c, a, b) => vec![c, a, b],
            ExprKind::Block(defs, body) => defs.iter().map(|d| &d.body).chain(std::iter::once(&**body)).collect(),
            ExprKind::Builtin(_, args) | ExprKind::Lift(_, args) => args.iter().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: Option<TypeExpr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Def {
    pub name: String,
    pub type_params: Vec<String>,
    /// `None` for plain stream definitions; `Some` for macros.
    pub params: Option<Vec<Param>>,
    pub ty: Option<TypeExpr>,
    pub body: Expr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    In { name: String, ty: TypeExpr, span: Span },
    Def(Def),
    Out { name: String, span: Span },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub items: Vec<Item>,
}

impl Program {
    pub fn inputs(&self) -> impl Iterator<Item = (&str, &TypeExpr, Span)> {
        self.items.iter().filter_map(|i| match i {
            Item::In { name, ty, span } => Some((name.as_str(), ty, *span)),
            _ => None,
        })
    }

    pub fn defs(&self) -> impl Iterator<Item = &Def> {
        self.items.iter().filter_map(|i| match i {
            Item::Def(d) => Some(d),
            _ => None,
        })
    }

    pub fn outputs(&self) -> impl Iterator<Item = (&str, Span)> {
        self.items.iter().filter_map(|i| match i {
            Item::Out { name, span } => Some((name.as_str(), *span)),
            _ => None,
        })
    }
}

/// Resolves a concrete type name.
pub fn base_type(name: &str) -> Option<StreamType> {
    StreamType::from_name(name)
}
