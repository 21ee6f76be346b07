use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use crate::term::BinOp;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at {line}:{col}: found {found}, expected {}", .expected.join(" or "))]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub found: String,
    pub expected: Vec<String>,
}

pub fn parse(src: &str) -> Result<Program, SyntaxError> {
    let tokens = tokenize(src).map_err(|e| SyntaxError {
        line: e.line,
        col: e.col,
        found: e.message,
        expected: vec!["a valid token".into()],
    })?;
    let mut p = Parser { tokens, pos: 0 };
    let mut items = Vec::new();
    while p.peek() != &Tok::Eof {
        items.push(p.item()?);
    }
    Ok(Program { items })
}

/// Parses a single expression (used by tests and tooling).
pub fn parse_expr(src: &str) -> Result<Expr, SyntaxError> {
    let tokens = tokenize(src).map_err(|e| SyntaxError {
        line: e.line,
        col: e.col,
        found: e.message,
        expected: vec!["a valid token".into()],
    })?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

fn binop_of(t: &Tok) -> Option<BinOp> {
    Some(match t {
        Tok::Plus => BinOp::Add,
        Tok::Minus => BinOp::Sub,
        Tok::Star => BinOp::Mul,
        Tok::Slash => BinOp::Div,
        Tok::Lt => BinOp::Lt,
        Tok::Le => BinOp::Le,
        Tok::Gt => BinOp::Gt,
        Tok::Ge => BinOp::Ge,
        Tok::EqEq => BinOp::Eq,
        Tok::Ne => BinOp::Ne,
        Tok::And => BinOp::And,
        Tok::Or => BinOp::Or,
        _ => return None,
    })
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, SyntaxError> {
        let t = &self.tokens[self.pos];
        Err(SyntaxError {
            line: t.span.line,
            col: t.span.col,
            found: t.tok.describe(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, SyntaxError> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            self.error(&[&tok.describe()])
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn item(&mut self) -> Result<Item, SyntaxError> {
        let span = self.span();
        match self.peek() {
            Tok::In => {
                self.bump();
                let name = self.ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.type_expr()?;
                Ok(Item::In { name, ty, span })
            }
            Tok::Out => {
                self.bump();
                let name = self.ident()?;
                Ok(Item::Out { name, span })
            }
            Tok::Def => Ok(Item::Def(self.def()?)),
            _ => self.error(&["`in`", "`def`", "`out`"]),
        }
    }

    fn def(&mut self) -> Result<Def, SyntaxError> {
        let span = self.span();
        self.expect(Tok::Def)?;
        let name = self.ident()?;
        let mut type_params = Vec::new();
        if self.eat(&Tok::LBracket) {
            loop {
                type_params.push(self.ident()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBracket)?;
        }
        let params = if self.eat(&Tok::LParen) {
            let mut ps = Vec::new();
            if !self.eat(&Tok::RParen) {
                loop {
                    let name = self.ident()?;
                    let ty = if self.eat(&Tok::Colon) { Some(self.type_expr()?) } else { None };
                    ps.push(Param { name, ty });
                    if self.eat(&Tok::RParen) {
                        break;
                    }
                    if !self.eat(&Tok::Comma) {
                        return self.error(&["`,`", "`)`"]);
                    }
                }
            }
            Some(ps)
        } else {
            None
        };
        let ty = if self.eat(&Tok::Colon) { Some(self.type_expr()?) } else { None };
        if !self.eat(&Tok::Assign) {
            let mut expected = vec!["`:=`"];
            if ty.is_none() {
                expected.insert(0, "`:`");
                if params.is_none() {
                    expected.insert(0, "`(`");
                }
            }
            return self.error(&expected);
        }
        let body = self.expr()?;
        Ok(Def { name, type_params, params, ty, body, span })
    }

    fn type_expr(&mut self) -> Result<TypeExpr, SyntaxError> {
        let name = self.ident()?;
        if name == "Events" {
            self.expect(Tok::LBracket)?;
            let inner = self.type_expr()?;
            self.expect(Tok::RBracket)?;
            Ok(TypeExpr::Events(Box::new(inner)))
        } else {
            Ok(TypeExpr::Name(name))
        }
    }

    pub fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let span = self.span();
        match self.peek() {
            Tok::If => {
                self.bump();
                let c = self.expr()?;
                self.expect(Tok::Then)?;
                let a = self.expr()?;
                self.expect(Tok::Else)?;
                let b = self.expr()?;
                Ok(Expr::new(ExprKind::If(Box::new(c), Box::new(a), Box::new(b)), span))
            }
            Tok::Fn => {
                self.bump();
                self.expect(Tok::LParen)?;
                let mut params = Vec::new();
                if !self.eat(&Tok::RParen) {
                    loop {
                        params.push(self.ident()?);
                        if self.eat(&Tok::RParen) {
                            break;
                        }
                        if !self.eat(&Tok::Comma) {
                            return self.error(&["`,`", "`)`"]);
                        }
                    }
                }
                self.expect(Tok::Arrow)?;
                let body = self.expr()?;
                Ok(Expr::new(ExprKind::Lambda(params, Box::new(body)), span))
            }
            _ => self.binary(0),
        }
    }

    fn binary(&mut self, level: usize) -> Result<Expr, SyntaxError> {
        const LEVELS: [&[BinOp]; 5] = [
            &[BinOp::Or],
            &[BinOp::And],
            &[BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne],
            &[BinOp::Add, BinOp::Sub],
            &[BinOp::Mul, BinOp::Div],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let Some(op) = binop_of(self.peek()).filter(|op| LEVELS[level].contains(op)) else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.binary(level + 1)?;
            let span = lhs.span;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
            // Comparisons do not chain.
            if level == 2 {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Not => UnOp::Not,
            Tok::Minus => UnOp::Neg,
            _ => return self.postfix(),
        };
        self.bump();
        let e = self.unary()?;
        Ok(Expr::new(ExprKind::Unary(op, Box::new(e)), span))
    }

    fn postfix(&mut self) -> Result<Expr, SyntaxError> {
        let mut e = self.primary()?;
        // A call's argument list starts on the line where the callee ends,
        // so a parenthesized block result on the next line is not a call.
        while *self.peek() == Tok::LParen && self.span().line == self.tokens[self.pos - 1].span.line {
            self.bump();
            let mut args = Vec::new();
            if !self.eat(&Tok::RParen) {
                loop {
                    args.push(self.argument()?);
                    if self.eat(&Tok::RParen) {
                        break;
                    }
                    if !self.eat(&Tok::Comma) {
                        return self.error(&["`,`", "`)`"]);
                    }
                }
            }
            let span = e.span;
            e = Expr::new(ExprKind::Call(Box::new(e), args), span);
        }
        Ok(e)
    }

    /// An operator directly followed by `)` or `,` denotes the operator
    /// itself.
    fn op_ref(&mut self) -> Option<Expr> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Not => OpRef::Not,
            t => OpRef::Bin(binop_of(t)?),
        };
        if matches!(self.peek_at(1), Tok::RParen | Tok::Comma) {
            self.bump();
            Some(Expr::new(ExprKind::Op(op), span))
        } else {
            None
        }
    }

    fn argument(&mut self) -> Result<Expr, SyntaxError> {
        match self.op_ref() {
            Some(e) => Ok(e),
            None => self.expr(),
        }
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                ExprKind::Ident(s)
            }
            Tok::Number(n) => {
                self.bump();
                ExprKind::Literal(Literal::Num(n))
            }
            Tok::Str(s) => {
                self.bump();
                ExprKind::Literal(Literal::Str(s))
            }
            Tok::True => {
                self.bump();
                ExprKind::Literal(Literal::Bool(true))
            }
            Tok::False => {
                self.bump();
                ExprKind::Literal(Literal::Bool(false))
            }
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    ExprKind::Literal(Literal::Unit)
                } else if let Some(op) = self.op_ref() {
                    self.expect(Tok::RParen)?;
                    return Ok(op);
                } else {
                    let e = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(e);
                }
            }
            Tok::LBrace => {
                self.bump();
                let mut defs = Vec::new();
                while *self.peek() == Tok::Def {
                    defs.push(self.def()?);
                }
                let body = self.expr()?;
                self.expect(Tok::RBrace)?;
                ExprKind::Block(defs, Box::new(body))
            }
            _ => return self.error(&["expression"]),
        };
        Ok(Expr::new(kind, span))
    }
}
