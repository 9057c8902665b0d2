use thiserror::Error;

use super::{BinaryOp, Expression, UnaryOp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected one of {}", expected.join(", "))]
    Syntax { offset: usize, expected: Vec<String> },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownFunction { offset, .. } => {
                *offset
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Invalid,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Vec<(Token, usize)> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next();
            let done = matches!(tok, Token::End | Token::Invalid);
            out.push((tok, at));
            if done {
                if out.last().map(|t| &t.0) == Some(&Token::Invalid) {
                    out.push((Token::End, src.len()));
                }
                return out;
            }
        }
    }

    fn peek_byte(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn next(&mut self) -> (Token, usize) {
        while matches!(self.peek_byte(), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(b) = self.peek_byte() else {
            return (Token::End, start);
        };
        match b {
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                (Token::Op(b as char), start)
            }
            b'(' => {
                self.pos += 1;
                (Token::LParen, start)
            }
            b')' => {
                self.pos += 1;
                (Token::RParen, start)
            }
            b'0'..=b'9' | b'.' => self.number(start),
            b if b.is_ascii_alphabetic() || b == b'_' => {
                while matches!(self.peek_byte(), Some(c) if c.is_ascii_alphanumeric() || c == b'_')
                {
                    self.pos += 1;
                }
                (Token::Ident(self.src[start..self.pos].to_string()), start)
            }
            _ => (Token::Invalid, start),
        }
    }

    fn digits(&mut self) -> usize {
        let from = self.pos;
        while matches!(self.peek_byte(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.pos - from
    }

    fn number(&mut self, start: usize) -> (Token, usize) {
        let mut count = self.digits();
        if self.peek_byte() == Some(b'.') {
            self.pos += 1;
            count += self.digits();
        }
        if count == 0 {
            return (Token::Invalid, start);
        }
        if matches!(self.peek_byte(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek_byte(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                self.pos = save;
            }
        }
        match self.src[start..self.pos].parse::<f64>() {
            Ok(v) => (Token::Number(v), start),
            Err(_) => (Token::Invalid, start),
        }
    }
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    at: usize,
}

const OPERAND: [&str; 4] = ["number", "identifier", "(", "-"];

fn expected(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.at].1
    }

    fn bump(&mut self) -> (Token, usize) {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, items: &[&str]) -> ParseError {
        ParseError::Syntax { offset: self.offset(), expected: expected(items) }
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Token::Op('+') => BinaryOp::Add,
                Token::Op('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expression::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Token::Op('*') => BinaryOp::Mul,
                Token::Op('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expression::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expression, ParseError> {
        if self.peek() == &Token::Op('-') {
            self.bump();
            let child = self.unary()?;
            return Ok(Expression::unary(UnaryOp::Neg, child));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression, ParseError> {
        let base = self.primary()?;
        if self.peek() == &Token::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expression::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expression, ParseError> {
        match self.peek().clone() {
            Token::Number(v) => {
                self.bump();
                Ok(Expression::Constant(v))
            }
            Token::Ident(name) => {
                let (_, offset) = self.bump();
                if self.peek() != &Token::LParen {
                    return Ok(Expression::Variable(name));
                }
                let op = UnaryOp::function(&name)
                    .ok_or(ParseError::UnknownFunction { name, offset })?;
                self.bump();
                let arg = self.expr()?;
                self.close()?;
                Ok(Expression::unary(op, arg))
            }
            Token::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.close()?;
                Ok(inner)
            }
            _ => Err(self.error(&OPERAND)),
        }
    }

    fn close(&mut self) -> Result<(), ParseError> {
        if self.peek() == &Token::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&["+", "-", "*", "/", "^", ")"]))
        }
    }
}

/// Parses `text` under the grammar documented on the [`super`] module.
pub fn parse(text: &str) -> Result<Expression, ParseError> {
    let mut p = Parser { tokens: Lexer::tokens(text), at: 0 };
    let e = p.expr()?;
    if p.peek() != &Token::End {
        return Err(p.error(&["+", "-", "*", "/", "^", "end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Expression {
        Expression::Constant(v)
    }
    fn v(n: &str) -> Expression {
        Expression::var(n)
    }

    #[test]
    fn precedence_of_power_over_product() {
        let e = parse("x1 + 2*y1^2").unwrap();
        assert_eq!(e, v("x1") + c(2.0) * v("y1").pow(c(2.0)));
    }

    #[test]
    fn unary_minus_binds_tighter_than_division() {
        let e = parse("-(q1 - q2)/m").unwrap();
        assert_eq!(e, (-(v("q1") - v("q2"))) / v("m"));
    }

    #[test]
    fn power_binds_tighter_than_unary_minus() {
        assert_eq!(parse("-x^2").unwrap(), -(v("x").pow(c(2.0))));
        assert_eq!(parse("2^-1").unwrap(), c(2.0).pow(-c(1.0)));
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(parse("a^b^c").unwrap(), v("a").pow(v("b").pow(v("c"))));
    }

    #[test]
    fn left_associative_sums_and_products() {
        assert_eq!(parse("a-b-c").unwrap(), (v("a") - v("b")) - v("c"));
        assert_eq!(parse("a/b*c").unwrap(), (v("a") / v("b")) * v("c"));
    }

    #[test]
    fn whitespace_is_insignificant() {
        assert_eq!(parse(" sin ( x )*\t2 ").unwrap(), parse("sin(x)*2").unwrap());
    }

    #[test]
    fn number_forms() {
        assert_eq!(parse("1.5e-3").unwrap(), c(1.5e-3));
        assert_eq!(parse(".25").unwrap(), c(0.25));
        assert_eq!(parse("3.").unwrap(), c(3.0));
        assert_eq!(parse("2E2").unwrap(), c(200.0));
    }

    #[test]
    fn unbalanced_paren_reports_end_offset() {
        match parse("sin(") {
            Err(ParseError::Syntax { offset, expected }) => {
                assert_eq!(offset, 4);
                assert!(expected.contains(&"number".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_close_paren() {
        let err = parse("(a+b").unwrap_err();
        assert_eq!(err.offset(), 4);
        match err {
            ParseError::Syntax { expected, .. } => assert!(expected.contains(&")".to_string())),
            _ => panic!(),
        }
    }

    #[test]
    fn unknown_function() {
        assert_eq!(
            parse("1 + foo(x)").unwrap_err(),
            ParseError::UnknownFunction { name: "foo".into(), offset: 4 }
        );
    }

    #[test]
    fn trailing_garbage() {
        assert_eq!(parse("a b").unwrap_err().offset(), 2);
        assert_eq!(parse("a $ b").unwrap_err().offset(), 2);
        assert_eq!(parse("").unwrap_err().offset(), 0);
        assert_eq!(parse("a +").unwrap_err().offset(), 3);
    }

    #[test]
    fn function_names_as_variables_without_parens() {
        assert_eq!(parse("exp + 1").unwrap(), v("exp") + c(1.0));
    }
}
