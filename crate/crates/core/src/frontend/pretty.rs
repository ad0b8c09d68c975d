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

//! Source printer. Output re-parses to the same AST; binary operators are fully
//! parenthesized.

use std::fmt::Write;

use crate::frontend::ast::*;
use crate::value::Value;

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    print_block(&mut out, &p.stmts, 0);
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn print_block(out: &mut String, stmts: &[Stmt], level: usize) {
    for s in stmts {
        print_stmt(out, s, level);
    }
}

fn print_stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match &s.kind {
        StmtKind::Assign { name, value } => {
            let _ = writeln!(out, "{name} = {};", print_expr(value));
        }
        StmtKind::Expr(e) => {
            let _ = writeln!(out, "{};", print_expr(e));
        }
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "while ({}) {{", print_expr(cond));
            print_block(out, body, level + 1);
            indent(out, level);
            out.push_str("}\n");
        }
        StmtKind::DoWhile { body, cond } => {
            out.push_str("do {\n");
            print_block(out, body, level + 1);
            indent(out, level);
            let _ = writeln!(out, "}} while ({});", print_expr(cond));
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = writeln!(out, "if ({}) {{", print_expr(cond));
            print_block(out, then_branch, level + 1);
            indent(out, level);
            match else_branch {
                Some(els) => {
                    out.push_str("} else {\n");
                    print_block(out, els, level + 1);
                    indent(out, level);
                    out.push_str("}\n");
                }
                None => out.push_str("}\n"),
            }
        }
    }
}

pub fn print_literal(v: &Value) -> String {
    match v {
        Value::Float(x) => format!("{x:?}"),
        Value::Str(s) => {
            let mut q = String::with_capacity(s.len() + 2);
            q.push('"');
            for c in s.chars() {
                match c {
                    '"' => q.push_str("\\\""),
                    '\\' => q.push_str("\\\\"),
                    '\n' => q.push_str("\\n"),
                    '\t' => q.push_str("\\t"),
                    c => q.push(c),
                }
            }
            q.push('"');
            q
        }
        other => other.to_string(),
    }
}

fn postfix_operand(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Var(_)
        | ExprKind::Field(..)
        | ExprKind::Method { .. }
        | ExprKind::Builtin { .. }
        | ExprKind::Tuple(_) => print_expr(e),
        _ => format!("({})", print_expr(e)),
    }
}

pub fn print_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Lit(v) => print_literal(v),
        ExprKind::Var(n) => n.clone(),
        ExprKind::Unary(op, a) => match op.call_name() {
            Some(name) => format!("{name}({})", print_expr(a)),
            None => {
                let sym = if *op == UnOp::Neg { "-" } else { "!" };
                format!("{sym}({})", print_expr(a))
            }
        },
        ExprKind::Binary(op, a, b) => {
            format!("({} {} {})", print_expr(a), op.symbol(), print_expr(b))
        }
        ExprKind::Tuple(items) => {
            let parts: Vec<String> = items.iter().map(print_expr).collect();
            format!("({})", parts.join(", "))
        }
        ExprKind::Field(a, i) => format!("{}.{i}", postfix_operand(a)),
        ExprKind::Method { recv, method, args } => {
            let parts: Vec<String> = args.iter().map(print_expr).collect();
            format!(
                "{}.{}({})",
                postfix_operand(recv),
                method.name(),
                parts.join(", ")
            )
        }
        ExprKind::Builtin {
            func,
            type_arg,
            args,
        } => {
            let parts: Vec<String> = args.iter().map(print_expr).collect();
            match type_arg {
                Some(t) => format!("{}<{t}>({})", func.name(), parts.join(", ")),
                None => format!("{}({})", func.name(), parts.join(", ")),
            }
        }
        ExprKind::Lambda { param, body } => format!("{param} => {}", print_expr(body)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::parse;

    #[test]
    fn round_trip_sample() {
        let src = r#"
            a = readFile<(Int, String)>("a");
            n = -3; f = 1.5e-3
            do {
                b = a.map(p => (p.0 % 7, p.1 + "x")).filter(q => !(q.0 == 2) && true);
                if (n < 0) { n = n + 1 } else { n = abs(n) }
                c = n <= 0
            } while (c)
            b.writeFile("out" + n)
        "#;
        let p = parse(src).unwrap();
        let text = print_program(&p);
        let q = parse(&text).unwrap();
        assert_eq!(strip_positions(&p), strip_positions(&q), "{text}");
    }
}
