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

//! Three-address normalization.
//!
//! Nested operator applications are flattened into temporaries `$1`, `$2`, ... in
//! evaluation order, branch conditions become variables, expression statements are
//! assigned to temporaries and `while (c) S` becomes `if (c) { do { S } while (c) }`.

use crate::frontend::ast::*;
use crate::value::ValueType;

pub fn normalize(p: &Program) -> Program {
    let mut n = Normalizer { next_temp: 1 };
    Program {
        stmts: n.block(&p.stmts),
    }
}

struct Normalizer {
    next_temp: usize,
}

fn stmt(kind: StmtKind, span: Span) -> Stmt {
    Stmt { kind, span }
}

impl Normalizer {
    fn temp(&mut self) -> String {
        let t = format!("${}", self.next_temp);
        self.next_temp += 1;
        t
    }

    fn block(&mut self, stmts: &[Stmt]) -> Vec<Stmt> {
        let mut out = Vec::new();
        for s in stmts {
            self.stmt(s, &mut out);
        }
        out
    }

    fn stmt(&mut self, s: &Stmt, out: &mut Vec<Stmt>) {
        match &s.kind {
            StmtKind::Assign { name, value } => {
                let value = self.simple(value, out);
                out.push(stmt(
                    StmtKind::Assign {
                        name: name.clone(),
                        value,
                    },
                    s.span,
                ));
            }
            StmtKind::Expr(e) => {
                let value = self.simple(e, out);
                let name = self.temp();
                out.push(stmt(StmtKind::Assign { name, value }, s.span));
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let cond = self.cond_var(cond, out);
                let then_branch = self.block(then_branch);
                let else_branch = else_branch.as_ref().map(|b| self.block(b));
                out.push(stmt(
                    StmtKind::If {
                        cond,
                        then_branch,
                        else_branch,
                    },
                    s.span,
                ));
            }
            StmtKind::DoWhile { body, cond } => {
                let mut body = self.block(body);
                let cond = self.cond_var(cond, &mut body);
                out.push(stmt(StmtKind::DoWhile { body, cond }, s.span));
            }
            StmtKind::While { cond, body } => {
                let first = self.cond_var(cond, out);
                let mut body = self.block(body);
                let again = self.cond_var(cond, &mut body);
                let inner = stmt(StmtKind::DoWhile { body, cond: again }, s.span);
                out.push(stmt(
                    StmtKind::If {
                        cond: first,
                        then_branch: vec![inner],
                        else_branch: None,
                    },
                    s.span,
                ));
            }
        }
    }

    fn cond_var(&mut self, cond: &Expr, out: &mut Vec<Stmt>) -> Expr {
        if cond.as_var().is_some() {
            return cond.clone();
        }
        self.bind_temp(cond, out)
    }

    fn bind_temp(&mut self, e: &Expr, out: &mut Vec<Stmt>) -> Expr {
        let value = self.simple(e, out);
        let ty = e.ty.clone().unwrap_or(ValueType::Bool);
        let name = self.temp();
        out.push(stmt(
            StmtKind::Assign {
                name: name.clone(),
                value,
            },
            e.span,
        ));
        Expr::typed(ExprKind::Var(name), e.span, ty)
    }

    fn atom(&mut self, e: &Expr, out: &mut Vec<Stmt>) -> Expr {
        match e.kind {
            ExprKind::Var(_) | ExprKind::Lit(_) | ExprKind::Lambda { .. } => e.clone(),
            _ => self.bind_temp(e, out),
        }
    }

    /// Rewrites `e` so that all of its operands are variables or literals.
    fn simple(&mut self, e: &Expr, out: &mut Vec<Stmt>) -> Expr {
        let kind = match &e.kind {
            ExprKind::Unary(op, a) => ExprKind::Unary(*op, Box::new(self.atom(a, out))),
            ExprKind::Binary(op, a, b) => {
                let a = self.atom(a, out);
                let b = self.atom(b, out);
                ExprKind::Binary(*op, Box::new(a), Box::new(b))
            }
            ExprKind::Method { recv, method, args } => {
                let recv = self.atom(recv, out);
                let args = args.iter().map(|a| self.atom(a, out)).collect();
                ExprKind::Method {
                    recv: Box::new(recv),
                    method: *method,
                    args,
                }
            }
            ExprKind::Builtin {
                func,
                type_arg,
                args,
            } => ExprKind::Builtin {
                func: *func,
                type_arg: type_arg.clone(),
                args: args.iter().map(|a| self.atom(a, out)).collect(),
            },
            _ => return e.clone(),
        };
        Expr {
            kind,
            span: e.span,
            ty: e.ty.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, print_program, typecheck};

    fn norm(src: &str) -> String {
        print_program(&normalize(&typecheck(&parse(src).unwrap()).unwrap()))
    }

    #[test]
    fn nested_calls_flatten_in_order() {
        let out = norm("b = readFile(\"b\"); c = readFile(\"c\"); a = b.map(x => x + 1).join(c.filter(y => y > 0))");
        assert_eq!(
            out,
            "b = readFile<Int>(\"b\");\n\
             c = readFile<Int>(\"c\");\n\
             $1 = b.map(x => (x + 1));\n\
             $2 = c.filter(y => (y > 0));\n\
             a = $1.join($2);\n"
        );
    }

    #[test]
    fn flat_assignment_is_unchanged() {
        assert_eq!(norm("b = 1; a = b"), "b = 1;\na = b;\n");
    }

    #[test]
    fn while_condition_is_hoisted() {
        let out = norm("day = 1; while (day <= 365) { day = day + 1 }");
        assert_eq!(
            out,
            "day = 1;\n\
             $1 = (day <= 365);\n\
             if ($1) {\n    do {\n        day = (day + 1);\n        $2 = (day <= 365);\n    } while ($2);\n}\n"
        );
    }
}
