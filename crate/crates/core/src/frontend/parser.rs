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

//! Recursive-descent parser.
//!
//! Precedence, loosest first: `||`, `&&`, comparisons, `+ -`, `* / %`, unary `- !`,
//! postfix `.method(..)` / `.N`.

use crate::error::{Error, Result};
use crate::frontend::ast::*;
use crate::frontend::lexer::{tokenize, Tok, Token};
use crate::value::{Value, ValueType};

pub fn parse(src: &str) -> Result<Program> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0 };
    let mut stmts = Vec::new();
    while !p.at(&Tok::Eof) {
        stmts.push(p.stmt()?);
    }
    Ok(Program { stmts })
}

/// Parses a single expression (used by tests and tooling).
pub fn parse_expr(src: &str) -> Result<Expr> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    p.expect(&Tok::Eof)?;
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

const KEYWORDS: &[&str] = &["while", "do", "if", "else", "true", "false"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, wanted: &str) -> Error {
        Error::syntax(
            self.span(),
            format!("expected {wanted}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, t: &Tok) -> Result<()> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.unexpected(&Tok::describe(t)))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.at_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn stmt(&mut self) -> Result<Stmt> {
        let span = self.span();
        let kind = if self.at_kw("while") {
            self.bump();
            let cond = self.paren_expr()?;
            let body = self.block()?;
            StmtKind::While { cond, body }
        } else if self.at_kw("do") {
            self.bump();
            let body = self.block()?;
            self.expect_kw("while")?;
            let cond = self.paren_expr()?;
            StmtKind::DoWhile { body, cond }
        } else if self.at_kw("if") {
            self.bump();
            let cond = self.paren_expr()?;
            let then_branch = self.block()?;
            let else_branch = if self.at_kw("else") {
                self.bump();
                if self.at_kw("if") {
                    Some(vec![self.stmt()?])
                } else {
                    Some(self.block()?)
                }
            } else {
                None
            };
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            }
        } else if matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()))
            && self.peek_at(1) == &Tok::Assign
        {
            let name = self.ident()?;
            self.bump();
            let value = self.expr()?;
            StmtKind::Assign { name, value }
        } else {
            StmtKind::Expr(self.expr()?)
        };
        while self.eat(&Tok::Semi) {}
        Ok(Stmt { kind, span })
    }

    fn block(&mut self) -> Result<Vec<Stmt>> {
        self.expect(&Tok::LBrace)?;
        let mut out = Vec::new();
        while !self.at(&Tok::RBrace) {
            if self.at(&Tok::Eof) {
                return Err(self.unexpected("`}`"));
            }
            out.push(self.stmt()?);
        }
        self.bump();
        Ok(out)
    }

    fn paren_expr(&mut self) -> Result<Expr> {
        self.expect(&Tok::LParen)?;
        let e = self.expr()?;
        self.expect(&Tok::RParen)?;
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr> {
        if let (Tok::Ident(name), Tok::Arrow) = (self.peek().clone(), self.peek_at(1)) {
            if !KEYWORDS.contains(&name.as_str()) {
                let span = self.span();
                self.bump();
                self.bump();
                let body = self.expr()?;
                return Ok(Expr::new(
                    ExprKind::Lambda {
                        param: name,
                        body: Box::new(body),
                    },
                    span,
                ));
            }
        }
        self.or_expr()
    }

    fn binary_level(
        &mut self,
        next: fn(&mut Parser) -> Result<Expr>,
        ops: &[(Tok, BinOp)],
        chain: bool,
    ) -> Result<Expr> {
        let mut lhs = next(self)?;
        loop {
            let Some(op) = ops.iter().find(|(t, _)| self.at(t)).map(|(_, op)| *op) else {
                return Ok(lhs);
            };
            let span = self.span();
            self.bump();
            let rhs = next(self)?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
            if !chain {
                if ops.iter().any(|(t, _)| self.at(t)) {
                    return Err(Error::syntax(
                        self.span(),
                        "comparison operators do not chain; add parentheses",
                    ));
                }
                return Ok(lhs);
            }
        }
    }

    fn or_expr(&mut self) -> Result<Expr> {
        self.binary_level(Parser::and_expr, &[(Tok::OrOr, BinOp::Or)], true)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        self.binary_level(Parser::cmp_expr, &[(Tok::AndAnd, BinOp::And)], true)
    }

    fn cmp_expr(&mut self) -> Result<Expr> {
        self.binary_level(
            Parser::add_expr,
            &[
                (Tok::EqEq, BinOp::Eq),
                (Tok::Ne, BinOp::Ne),
                (Tok::Le, BinOp::Le),
                (Tok::Ge, BinOp::Ge),
                (Tok::Lt, BinOp::Lt),
                (Tok::Gt, BinOp::Gt),
            ],
            false,
        )
    }

    fn add_expr(&mut self) -> Result<Expr> {
        self.binary_level(
            Parser::mul_expr,
            &[(Tok::Plus, BinOp::Add), (Tok::Minus, BinOp::Sub)],
            true,
        )
    }

    fn mul_expr(&mut self) -> Result<Expr> {
        self.binary_level(
            Parser::unary_expr,
            &[
                (Tok::Star, BinOp::Mul),
                (Tok::Slash, BinOp::Div),
                (Tok::Percent, BinOp::Mod),
            ],
            true,
        )
    }

    fn unary_expr(&mut self) -> Result<Expr> {
        let span = self.span();
        if self.eat(&Tok::Minus) {
            // Negative numeric literals are folded so that printing and re-parsing agree.
            match self.peek().clone() {
                Tok::Int(i) => {
                    self.bump();
                    return self.postfix(Expr::new(ExprKind::Lit(Value::Int(-i)), span));
                }
                Tok::Float(x) => {
                    self.bump();
                    return self.postfix(Expr::new(ExprKind::Lit(Value::Float(-x)), span));
                }
                _ => {}
            }
            let e = self.unary_expr()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(e)), span));
        }
        if self.eat(&Tok::Bang) {
            let e = self.unary_expr()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(e)), span));
        }
        let e = self.primary()?;
        self.postfix(e)
    }

    fn postfix(&mut self, mut e: Expr) -> Result<Expr> {
        while self.at(&Tok::Dot) {
            let span = self.span();
            self.bump();
            match self.peek().clone() {
                Tok::Int(i) if i >= 0 => {
                    self.bump();
                    e = Expr::new(ExprKind::Field(Box::new(e), i as usize), span);
                }
                Tok::Ident(name) => {
                    let Some(method) = Method::from_name(&name) else {
                        return Err(Error::syntax(span, format!("unknown method `{name}`")));
                    };
                    self.bump();
                    let args = self.args()?;
                    e = Expr::new(
                        ExprKind::Method {
                            recv: Box::new(e),
                            method,
                            args,
                        },
                        span,
                    );
                }
                _ => return Err(self.unexpected("method name or field index")),
            }
        }
        Ok(e)
    }

    fn args(&mut self) -> Result<Vec<Expr>> {
        self.expect(&Tok::LParen)?;
        let mut args = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen)?;
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::new(ExprKind::Lit(Value::Int(i)), span))
            }
            Tok::Float(x) => {
                self.bump();
                Ok(Expr::new(ExprKind::Lit(Value::Float(x)), span))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::new(ExprKind::Lit(Value::str(&s)), span))
            }
            Tok::LParen => {
                self.bump();
                let first = self.expr()?;
                if self.eat(&Tok::RParen) {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat(&Tok::Comma) {
                    items.push(self.expr()?);
                }
                self.expect(&Tok::RParen)?;
                Ok(Expr::new(ExprKind::Tuple(items), span))
            }
            Tok::Ident(name) => match name.as_str() {
                "true" | "false" => {
                    self.bump();
                    Ok(Expr::new(ExprKind::Lit(Value::Bool(name == "true")), span))
                }
                _ if KEYWORDS.contains(&name.as_str()) => Err(self.unexpected("expression")),
                _ => {
                    self.bump();
                    if let Some(func) = Builtin::from_name(&name) {
                        let type_arg = if self.eat(&Tok::Lt) {
                            let t = self.type_expr()?;
                            self.expect(&Tok::Gt)?;
                            Some(t)
                        } else {
                            None
                        };
                        let args = self.args()?;
                        return Ok(Expr::new(
                            ExprKind::Builtin {
                                func,
                                type_arg,
                                args,
                            },
                            span,
                        ));
                    }
                    if let Some(op) = UnOp::from_call_name(&name) {
                        if self.at(&Tok::LParen) {
                            let mut args = self.args()?;
                            if args.len() != 1 {
                                return Err(Error::syntax(
                                    span,
                                    format!("`{name}` takes exactly one argument"),
                                ));
                            }
                            return Ok(Expr::new(
                                ExprKind::Unary(op, Box::new(args.pop().unwrap())),
                                span,
                            ));
                        }
                    }
                    if self.at(&Tok::LParen) {
                        return Err(Error::syntax(span, format!("unknown function `{name}`")));
                    }
                    Ok(Expr::new(ExprKind::Var(name), span))
                }
            },
            _ => Err(self.unexpected("expression")),
        }
    }

    fn type_expr(&mut self) -> Result<ValueType> {
        let span = self.span();
        if self.eat(&Tok::LParen) {
            let mut cols = vec![self.type_expr()?];
            while self.eat(&Tok::Comma) {
                cols.push(self.type_expr()?);
            }
            self.expect(&Tok::RParen)?;
            if cols.iter().any(|c| !c.is_scalar()) {
                return Err(Error::syntax(span, "tuple fields must be scalar types"));
            }
            return Ok(ValueType::from_columns(cols));
        }
        let name = self.ident()?;
        match name.as_str() {
            "Int" => Ok(ValueType::Int),
            "Float" => Ok(ValueType::Float),
            "Bool" => Ok(ValueType::Bool),
            "String" => Ok(ValueType::Str),
            other => Err(Error::syntax(span, format!("unknown type `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_assignment() {
        let p = parse("x = 1").unwrap();
        assert_eq!(p.stmts.len(), 1);
        match &p.stmts[0].kind {
            StmtKind::Assign { name, value } => {
                assert_eq!(name, "x");
                assert_eq!(value.kind, ExprKind::Lit(Value::Int(1)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_rhs_reports_end_of_input() {
        let err = parse("x = ").unwrap_err();
        assert_eq!(err.span(), Some(Span::new(1, 5)));
        assert!(err.to_string().contains("end of input"), "{err}");
    }

    #[test]
    fn method_chains_and_lambdas() {
        let e = parse_expr("b.map(x => (x.0, x.1 + 1)).filter(p => p.1 > 2)").unwrap();
        let ExprKind::Method { method, recv, .. } = &e.kind else {
            panic!()
        };
        assert_eq!(*method, Method::Filter);
        assert!(matches!(
            recv.kind,
            ExprKind::Method {
                method: Method::Map,
                ..
            }
        ));
    }

    #[test]
    fn builtin_type_arguments() {
        let e = parse_expr("readFile<(Int, String)>(\"f\")").unwrap();
        let ExprKind::Builtin { type_arg, .. } = e.kind else {
            panic!()
        };
        assert_eq!(
            type_arg,
            Some(ValueType::Tuple(vec![ValueType::Int, ValueType::Str]))
        );
    }

    #[test]
    fn comparisons_do_not_chain() {
        assert!(parse_expr("a < b < c").is_err());
    }

    #[test]
    fn precedence() {
        let e = parse_expr("1 + 2 * 3 == 7 && true").unwrap();
        let ExprKind::Binary(BinOp::And, lhs, _) = e.kind else {
            panic!()
        };
        assert!(matches!(lhs.kind, ExprKind::Binary(BinOp::Eq, _, _)));
    }
}
