// Copyright 2026 The Laby Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::fmt;

use crate::value::{Value, ValueType};

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, PartialOrd, Ord)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Span {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign {
        name: String,
        value: Expr,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    DoWhile {
        body: Vec<Stmt>,
        cond: Expr,
    },
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Option<Vec<Stmt>>,
    },
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    /// Filled in by the type checker.
    pub ty: Option<ValueType>,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr {
            kind,
            span,
            ty: None,
        }
    }

    pub fn typed(kind: ExprKind, span: Span, ty: ValueType) -> Expr {
        Expr {
            kind,
            span,
            ty: Some(ty),
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Var(name) => Some(name),
            _ => None,
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self.kind, ExprKind::Var(_) | ExprKind::Lit(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Lit(Value),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Tuple(Vec<Expr>),
    Field(Box<Expr>, usize),
    Method {
        recv: Box<Expr>,
        method: Method,
        args: Vec<Expr>,
    },
    Builtin {
        func: Builtin,
        type_arg: Option<ValueType>,
        args: Vec<Expr>,
    },
    Lambda {
        param: String,
        body: Box<Expr>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
    Abs,
    ToFloat,
    ToInt,
}

impl UnOp {
    /// Function-call spelling for the ops written as calls.
    pub fn call_name(self) -> Option<&'static str> {
        match self {
            UnOp::Abs => Some("abs"),
            UnOp::ToFloat => Some("float"),
            UnOp::ToInt => Some("int"),
            _ => None,
        }
    }

    pub fn from_call_name(name: &str) -> Option<UnOp> {
        match name {
            "abs" => Some(UnOp::Abs),
            "float" => Some(UnOp::ToFloat),
            "int" => Some(UnOp::ToInt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }
}

/// Bag operators written in method-call style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Map,
    Filter,
    Join,
    Cross,
    ReduceByKey,
    Reduce,
    Count,
    WriteFile,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Map => "map",
            Method::Filter => "filter",
            Method::Join => "join",
            Method::Cross => "cross",
            Method::ReduceByKey => "reduceByKey",
            Method::Reduce => "reduce",
            Method::Count => "count",
            Method::WriteFile => "writeFile",
        }
    }

    pub fn from_name(name: &str) -> Option<Method> {
        Some(match name {
            "map" => Method::Map,
            "filter" => Method::Filter,
            "join" => Method::Join,
            "cross" => Method::Cross,
            "reduceByKey" => Method::ReduceByKey,
            "reduce" => Method::Reduce,
            "count" => Method::Count,
            "writeFile" => Method::WriteFile,
            _ => return None,
        })
    }
}

/// Bag constructors written as free function calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    ReadFile,
    SingletonBag,
    EmptyBag,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::ReadFile => "readFile",
            Builtin::SingletonBag => "singletonBag",
            Builtin::EmptyBag => "emptyBag",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "readFile" => Builtin::ReadFile,
            "singletonBag" => Builtin::SingletonBag,
            "emptyBag" => Builtin::EmptyBag,
            _ => return None,
        })
    }
}

/// Number of statements, counting nested ones and the compound statements themselves.
pub fn count_statements(stmts: &[Stmt]) -> usize {
    stmts
        .iter()
        .map(|s| {
            1 + match &s.kind {
                StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } => {
                    count_statements(body)
                }
                StmtKind::If {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    count_statements(then_branch)
                        + else_branch.as_deref().map_or(0, count_statements)
                }
                _ => 0,
            }
        })
        .sum()
}

/// Copy of the program with all spans and type annotations cleared, for structural
/// comparison.
pub fn strip_positions(p: &Program) -> Program {
    fn stmts(ss: &[Stmt]) -> Vec<Stmt> {
        ss.iter().map(stmt).collect()
    }
    fn stmt(s: &Stmt) -> Stmt {
        let kind = match &s.kind {
            StmtKind::Assign { name, value } => StmtKind::Assign {
                name: name.clone(),
                value: expr(value),
            },
            StmtKind::While { cond, body } => StmtKind::While {
                cond: expr(cond),
                body: stmts(body),
            },
            StmtKind::DoWhile { body, cond } => StmtKind::DoWhile {
                body: stmts(body),
                cond: expr(cond),
            },
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => StmtKind::If {
                cond: expr(cond),
                then_branch: stmts(then_branch),
                else_branch: else_branch.as_deref().map(stmts),
            },
            StmtKind::Expr(e) => StmtKind::Expr(expr(e)),
        };
        Stmt {
            kind,
            span: Span::default(),
        }
    }
    fn expr(e: &Expr) -> Expr {
        let kind = match &e.kind {
            ExprKind::Lit(v) => ExprKind::Lit(v.clone()),
            ExprKind::Var(n) => ExprKind::Var(n.clone()),
            ExprKind::Unary(op, a) => ExprKind::Unary(*op, Box::new(expr(a))),
            ExprKind::Binary(op, a, b) => {
                ExprKind::Binary(*op, Box::new(expr(a)), Box::new(expr(b)))
            }
            ExprKind::Tuple(items) => ExprKind::Tuple(items.iter().map(expr).collect()),
            ExprKind::Field(a, i) => ExprKind::Field(Box::new(expr(a)), *i),
            ExprKind::Method { recv, method, args } => ExprKind::Method {
                recv: Box::new(expr(recv)),
                method: *method,
                args: args.iter().map(expr).collect(),
            },
            ExprKind::Builtin {
                func,
                type_arg,
                args,
            } => ExprKind::Builtin {
                func: *func,
                type_arg: type_arg.clone(),
                args: args.iter().map(expr).collect(),
            },
            ExprKind::Lambda { param, body } => ExprKind::Lambda {
                param: param.clone(),
                body: Box::new(expr(body)),
            },
        };
        Expr::new(kind, Span::default())
    }
    Program {
        stmts: stmts(&p.stmts),
    }
}
