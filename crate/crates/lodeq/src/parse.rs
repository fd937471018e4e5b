//! Text grammar for expressions and the line-oriented document formats for
//! equations, transformations, vector fields and fundamental systems.
//!
//! The expression grammar is conventional infix: binary `+ - * / ^` with the
//! usual precedence (`^` binds tightest and associates right), unary minus,
//! function application `f(arg)` for `exp`, `ln`, `sin`, `cos`, `tan`,
//! `atan`, `abs`, `sqrt`, rational literals (`3`, `3/4`, `0.25`,
//! `1.5e-3`; decimal literals convert exactly to rationals), and the sole
//! variable `t`. Documents are `key = value` lines with `#` comments; any
//! key that is not reserved defines a named rational constant usable in the
//! expression fields of the same document.

use crate::error::{Error, ErrorCode, Result, SourceSpan};
use crate::expr::Expression;
use crate::interval::Interval;
use crate::ode::LinearOde;
use crate::reparam::FundamentalSystem;
use crate::symmetry::VectorField;
use crate::transform::PointTransformation;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Pow;
use std::collections::BTreeMap;

// ---- lexer ----

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn span_from(&self, begin: usize, col: usize) -> SourceSpan {
        SourceSpan::new(begin, self.pos, self.line, col)
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn tokenize(mut self) -> Result<Vec<Token>> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            let begin = self.pos;
            let col = self.col;
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.bump();
                }
                b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' => {
                    self.bump();
                    let tok = match c {
                        b'+' => Tok::Plus,
                        b'-' => Tok::Minus,
                        b'*' => Tok::Star,
                        b'/' => Tok::Slash,
                        b'^' => Tok::Caret,
                        b'(' => Tok::LParen,
                        _ => Tok::RParen,
                    };
                    out.push(Token {
                        tok,
                        span: self.span_from(begin, col),
                    });
                }
                b'0'..=b'9' => {
                    let num = self.lex_number()?;
                    out.push(Token {
                        tok: Tok::Number(num),
                        span: self.span_from(begin, col),
                    });
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    let mut name = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_ascii_alphanumeric() || c == b'_' {
                            name.push(self.bump() as char);
                        } else {
                            break;
                        }
                    }
                    out.push(Token {
                        tok: Tok::Ident(name),
                        span: self.span_from(begin, col),
                    });
                }
                other => {
                    self.bump();
                    return Err(Error::with_span(
                        ErrorCode::Syntax,
                        format!("unexpected character '{}'", other as char),
                        self.span_from(begin, col),
                    ));
                }
            }
        }
        out.push(Token {
            tok: Tok::Eof,
            span: self.span_from(self.pos, self.col),
        });
        Ok(out)
    }

    /// Digits, optional exact decimal fraction, optional exponent:
    /// `0.25 -> 1/4`, `1.5e-3 -> 3/2000`.
    fn lex_number(&mut self) -> Result<BigRational> {
        let begin = self.pos;
        let col = self.col;
        let mut int_part = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                int_part.push(self.bump() as char);
            } else {
                break;
            }
        }
        let mut frac_part = String::new();
        if self.peek() == Some(b'.')
            && self
                .src
                .get(self.pos + 1)
                .is_some_and(|c| c.is_ascii_digit())
        {
            self.bump();
            while let Some(c) = self.peek() {
                if c.is_ascii_digit() {
                    frac_part.push(self.bump() as char);
                } else {
                    break;
                }
            }
        }
        let mut exp: i64 = 0;
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            // exponent must be [+-]?digits, otherwise the letter belongs to
            // the next token
            let save = (self.pos, self.line, self.col);
            self.bump();
            let mut sign = 1i64;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                if self.peek() == Some(b'-') {
                    sign = -1;
                }
                self.bump();
            }
            let mut digits = String::new();
            while let Some(c) = self.peek() {
                if c.is_ascii_digit() {
                    digits.push(self.bump() as char);
                } else {
                    break;
                }
            }
            if digits.is_empty() {
                (self.pos, self.line, self.col) = save;
            } else {
                exp = sign
                    * digits.parse::<i64>().map_err(|_| {
                        Error::with_span(
                            ErrorCode::Syntax,
                            "exponent overflows",
                            self.span_from(begin, col),
                        )
                    })?;
            }
        }
        let digits = format!("{int_part}{frac_part}");
        let mantissa: BigInt = digits.parse().map_err(|_| {
            Error::with_span(
                ErrorCode::Syntax,
                "malformed number",
                self.span_from(begin, col),
            )
        })?;
        let mut value = BigRational::from_integer(mantissa);
        let shift = exp - frac_part.len() as i64;
        let ten = BigInt::from(10);
        if shift >= 0 {
            value *= BigRational::from_integer(ten.pow(shift as u64));
        } else {
            value /= BigRational::from_integer(ten.pow((-shift) as u64));
        }
        Ok(value)
    }
}

// ---- Pratt parser ----

struct Parser<'a> {
    tokens: Vec<Token>,
    cursor: usize,
    consts: &'a BTreeMap<String, BigRational>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.tokens[self.cursor]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.cursor].clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token> {
        let t = self.advance();
        if t.tok == tok {
            Ok(t)
        } else {
            Err(Error::with_span(
                ErrorCode::Syntax,
                format!("expected {what}"),
                t.span,
            ))
        }
    }

    fn parse_expr(&mut self, min_bp: u8) -> Result<Expression> {
        let t = self.advance();
        let mut lhs = match t.tok {
            Tok::Number(n) => Expression::constant(n),
            Tok::Minus => {
                // unary minus binds tighter than * but looser than ^
                let inner = self.parse_expr(5)?;
                -inner
            }
            Tok::LParen => {
                let e = self.parse_expr(0)?;
                self.expect(Tok::RParen, "closing parenthesis")?;
                e
            }
            Tok::Ident(name) => self.parse_ident(name, t.span)?,
            _ => {
                return Err(Error::with_span(
                    ErrorCode::Syntax,
                    "expected a term",
                    t.span,
                ))
            }
        };
        loop {
            let (l_bp, r_bp) = match self.peek().tok {
                Tok::Plus | Tok::Minus => (1, 2),
                Tok::Star | Tok::Slash => (3, 4),
                Tok::Caret => (8, 7), // right associative
                _ => break,
            };
            if l_bp < min_bp {
                break;
            }
            let op = self.advance();
            let rhs = self.parse_expr(r_bp)?;
            lhs = match op.tok {
                Tok::Plus => lhs + rhs,
                Tok::Minus => lhs - rhs,
                Tok::Star => lhs * rhs,
                Tok::Slash => lhs / rhs,
                Tok::Caret => {
                    let exponent = rhs.as_rational().cloned().ok_or_else(|| {
                        Error::with_span(
                            ErrorCode::NonRationalExponent,
                            "exponent must be a rational constant",
                            op.span,
                        )
                    })?;
                    Expression::pow(lhs, exponent)
                }
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn parse_ident(&mut self, name: String, span: SourceSpan) -> Result<Expression> {
        if name == "t" {
            return Ok(Expression::var());
        }
        let funcs = ["exp", "ln", "sin", "cos", "tan", "atan", "abs", "sqrt"];
        if funcs.contains(&name.as_str()) {
            if self.peek().tok != Tok::LParen {
                return Err(Error::with_span(
                    ErrorCode::ArityMismatch,
                    format!("function '{name}' requires one parenthesized argument"),
                    span,
                ));
            }
            self.advance();
            let arg = self.parse_expr(0)?;
            self.expect(Tok::RParen, "closing parenthesis of function argument")?;
            return Ok(match name.as_str() {
                "exp" => Expression::exp(arg),
                "ln" => Expression::ln(arg),
                "sin" => Expression::sin(arg),
                "cos" => Expression::cos(arg),
                "tan" => Expression::tan(arg),
                "atan" => Expression::atan(arg),
                "abs" => Expression::abs(arg),
                _ => Expression::sqrt(arg),
            });
        }
        if let Some(v) = self.consts.get(&name) {
            return Ok(Expression::constant(v.clone()));
        }
        Err(Error::with_span(
            ErrorCode::UnknownIdentifier,
            format!("unknown identifier '{name}'"),
            span,
        ))
    }
}

/// Parse an expression with named rational constants pre-bound.
pub fn parse_expression_with(
    text: &str,
    consts: &BTreeMap<String, BigRational>,
) -> Result<Expression> {
    let tokens = Lexer::new(text).tokenize()?;
    let mut p = Parser {
        tokens,
        cursor: 0,
        consts,
    };
    let e = p.parse_expr(0)?;
    let t = p.advance();
    if t.tok != Tok::Eof {
        return Err(Error::with_span(
            ErrorCode::Syntax,
            "trailing input after expression",
            t.span,
        ));
    }
    Ok(e)
}

pub fn parse_expression(text: &str) -> Result<Expression> {
    parse_expression_with(text, &BTreeMap::new())
}

// ---- documents ----

/// Parsed `key = value` document with `#` comments.
struct Document {
    fields: BTreeMap<String, (String, SourceSpan)>,
    consts: BTreeMap<String, BigRational>,
}

fn is_reserved(key: &str) -> bool {
    if matches!(
        key,
        "order" | "rhs" | "interval" | "T" | "X1" | "X0" | "tau" | "xi1" | "xi0"
    ) {
        return true;
    }
    // coefficient keys a0, a1, ... and solution keys chi1, chi2, ...
    for prefix in ["a", "chi"] {
        if let Some(rest) = key.strip_prefix(prefix) {
            if !rest.is_empty() && rest.bytes().all(|c| c.is_ascii_digit()) {
                return true;
            }
        }
    }
    false
}

fn parse_document(text: &str) -> Result<Document> {
    let mut fields = BTreeMap::new();
    let mut const_lines = Vec::new();
    let mut offset = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let start = offset;
        offset += raw.len() + 1;
        if line.trim().is_empty() {
            continue;
        }
        let eq = line.find('=').ok_or_else(|| {
            Error::with_span(
                ErrorCode::Syntax,
                "expected 'key = value' line",
                SourceSpan::new(start, start + line.len(), lineno + 1, 1),
            )
        })?;
        let key = line[..eq].trim().to_string();
        let value = line[eq + 1..].trim().to_string();
        let span = SourceSpan::new(start + eq + 1, start + line.len(), lineno + 1, eq + 2);
        if key.is_empty() {
            return Err(Error::with_span(ErrorCode::Syntax, "empty key", span));
        }
        if fields.insert(key.clone(), (value.clone(), span)).is_some() {
            return Err(Error::with_span(
                ErrorCode::DuplicateField,
                format!("duplicate key '{key}'"),
                span,
            ));
        }
        if !is_reserved(&key) {
            const_lines.push((key, value, span));
        }
    }
    // non-reserved keys define named rational constants
    let mut consts = BTreeMap::new();
    for (key, value, span) in const_lines {
        let c = parse_expression(&value)
            .ok()
            .and_then(|e| e.as_rational().cloned())
            .ok_or_else(|| {
                Error::with_span(
                    ErrorCode::Syntax,
                    format!("constant '{key}' must be a rational literal"),
                    span,
                )
            })?;
        consts.insert(key, c);
    }
    Ok(Document { fields, consts })
}

impl Document {
    fn take(&self, key: &str) -> Result<(&str, SourceSpan)> {
        self.fields
            .get(key)
            .map(|(v, s)| (v.as_str(), *s))
            .ok_or_else(|| Error::new(ErrorCode::MissingField, format!("missing field '{key}'")))
    }

    fn expression(&self, key: &str) -> Result<Expression> {
        let (v, span) = self.take(key)?;
        parse_expression_with(v, &self.consts).map_err(|mut e| {
            e.span = e.span.or(Some(span));
            e
        })
    }

    fn expression_or(&self, key: &str, default: Expression) -> Result<Expression> {
        if self.fields.contains_key(key) {
            self.expression(key)
        } else {
            Ok(default)
        }
    }

    /// `interval = [lo, hi]`; endpoints are constant expressions, so exact
    /// forms like `exp(1)` are allowed.
    fn interval(&self) -> Result<Interval> {
        let (v, span) = self.take("interval")?;
        let inner = v
            .trim()
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| Error::with_span(ErrorCode::BadInterval, "expected '[lo, hi]'", span))?;
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::with_span(
                ErrorCode::BadInterval,
                "expected two comma-separated endpoints",
                span,
            ));
        }
        let mut ends = [0.0; 2];
        for (i, p) in parts.iter().enumerate() {
            let e = parse_expression_with(p, &self.consts)?;
            if e.substitute_var(&Expression::zero())? != e {
                return Err(Error::with_span(
                    ErrorCode::BadInterval,
                    "interval endpoints must be constant",
                    span,
                ));
            }
            ends[i] = e.evaluate(0.0)?;
        }
        Interval::new(ends[0], ends[1]).map_err(|e| Error::with_span(e.code, e.message, span))
    }

    fn order(&self) -> Result<usize> {
        let (v, span) = self.take("order")?;
        let n: usize = v.trim().parse().map_err(|_| {
            Error::with_span(ErrorCode::Syntax, "order must be a positive integer", span)
        })?;
        if n < 2 {
            return Err(Error::with_span(
                ErrorCode::OrderTooLow,
                format!("order must be at least 2, got {n}"),
                span,
            ));
        }
        Ok(n)
    }
}

/// Parse an ODE document: `order`, coefficients `a0..a(r-1)`, optional `rhs`
/// (default `0`), `interval`.
pub fn parse_ode(text: &str) -> Result<LinearOde> {
    let doc = parse_document(text)?;
    let order = doc.order()?;
    let interval = doc.interval()?;
    let mut coeffs = Vec::with_capacity(order);
    for m in 0..order {
        coeffs.push(doc.expression(&format!("a{m}"))?);
    }
    // an a-key at or above the order means a non-monic or overlong input
    for key in doc.fields.keys() {
        if let Some(rest) = key.strip_prefix('a') {
            if let Ok(m) = rest.parse::<usize>() {
                if m >= order {
                    return Err(Error::new(
                        ErrorCode::CoefficientCount,
                        format!(
                            "coefficient '{key}' exceeds order {order}; equations are monic with coefficients a0..a{}",
                            order - 1
                        ),
                    ));
                }
            }
        }
    }
    let rhs = doc.expression_or("rhs", Expression::zero())?;
    LinearOde::new(order, coeffs, rhs, interval)
}

/// Parse a transformation document: `T`, `X1`, optional `X0` (default `0`),
/// `interval`. Nonvanishing of `T_t` and `X1` is checked on samples.
pub fn parse_transformation(text: &str) -> Result<PointTransformation> {
    let doc = parse_document(text)?;
    let interval = doc.interval()?;
    let t_map = doc.expression("T")?;
    let x1 = doc.expression("X1")?;
    let x0 = doc.expression_or("X0", Expression::zero())?;
    PointTransformation::new(t_map, x1, x0, interval)
}

/// Parse a vector field document: `tau`, `xi1`, `xi0` (each defaulting to
/// `0`).
pub fn parse_vector_field(text: &str) -> Result<VectorField> {
    let doc = parse_document(text)?;
    let tau = doc.expression_or("tau", Expression::zero())?;
    let xi1 = doc.expression_or("xi1", Expression::zero())?;
    let xi0 = doc.expression_or("xi0", Expression::zero())?;
    Ok(VectorField::new(tau, xi1, xi0))
}

/// Parse a fundamental-system document: `order`, `chi1..chi<r>`, `interval`.
pub fn parse_fundamental_system(text: &str) -> Result<FundamentalSystem> {
    let doc = parse_document(text)?;
    let order = doc.order()?;
    let interval = doc.interval()?;
    let mut sols = Vec::with_capacity(order);
    for i in 1..=order {
        sols.push(doc.expression(&format!("chi{i}"))?);
    }
    FundamentalSystem::new(order, sols, interval)
}

/// Serialize an ODE in the document format `parse_ode` reads.
pub fn serialize_ode(ode: &LinearOde) -> String {
    let mut out = String::new();
    out.push_str(&format!("order = {}\n", ode.order()));
    for (m, c) in ode.coeffs().iter().enumerate() {
        out.push_str(&format!("a{m} = {c}\n"));
    }
    out.push_str(&format!("rhs = {}\n", ode.rhs()));
    out.push_str(&format!(
        "interval = [{:.16e}, {:.16e}]\n",
        ode.interval().lo(),
        ode.interval().hi()
    ));
    out
}

/// Serialize a transformation in the document format
/// `parse_transformation` reads.
pub fn serialize_transformation(tau: &PointTransformation) -> String {
    format!(
        "T = {}\nX1 = {}\nX0 = {}\ninterval = [{:.16e}, {:.16e}]\n",
        tau.t_map(),
        tau.x1(),
        tau.x0(),
        tau.source().lo(),
        tau.source().hi()
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infix_grammar_and_roundtrip() {
        let e = parse_expression("t^2 + 1").unwrap();
        let expected = Expression::powi(Expression::var(), 2) + Expression::one();
        assert_eq!(e, expected);

        // round trip: parse(serialize(e)) equals normalize(e)
        let cases = [
            "t^2 - 3*t + 1/2",
            "exp(t)*sin(t) - ln(1 + t^2)",
            "(1 + t^2)^(-3)",
            "sqrt(1 + t^2)/t",
            "-t^2",
            "2^(1/2) * atan(t)",
            "abs(t)^(3/2)",
        ];
        for src in cases {
            let e = parse_expression(src).unwrap();
            let back = parse_expression(&e.to_string()).unwrap();
            assert_eq!(back, e, "round trip of {src} via {e}");
        }
    }

    #[test]
    fn precedence_and_unary_minus() {
        let e = parse_expression("-t^2").unwrap();
        assert_eq!(e.evaluate(2.0).unwrap(), -4.0);
        let f = parse_expression("2 - 3 - 4").unwrap();
        assert_eq!(f.evaluate(0.0).unwrap(), -5.0);
        let g = parse_expression("2^3^2").unwrap(); // right associative: 2^9
        assert_eq!(g.evaluate(0.0).unwrap(), 512.0);
        let h = parse_expression("6/2/3").unwrap();
        assert_eq!(h.evaluate(0.0).unwrap(), 1.0);
    }

    #[test]
    fn exact_decimals() {
        let e = parse_expression("0.25").unwrap();
        assert_eq!(e, Expression::ratio(1, 4));
        let f = parse_expression("1.5e-3").unwrap();
        assert_eq!(f, Expression::ratio(3, 2000));
        let g = parse_expression("2.5e2").unwrap();
        assert_eq!(g, Expression::integer(250));
    }

    #[test]
    fn unknown_identifier_has_span() {
        let err = parse_expression("12/(r(r^2-1))").unwrap_err();
        assert_eq!(err.code, ErrorCode::UnknownIdentifier);
        let span = err.span.unwrap();
        assert_eq!(span.line, 1);
        assert!(span.begin >= 3);
    }

    #[test]
    fn substitution_table() {
        let mut consts = BTreeMap::new();
        consts.insert("c0".to_string(), crate::expr::rat_i64(5, 1));
        let e = parse_expression_with("c0/(1+t^2)^3", &consts).unwrap();
        let expected = Expression::integer(5)
            * Expression::powi(
                Expression::one() + Expression::powi(Expression::var(), 2),
                -3,
            );
        assert_eq!(e, expected);
    }

    #[test]
    fn ode_document() {
        let src = "\
# Euler-family member
order = 3
a0 = 1/t^3
a1 = 0
a2 = 0
interval = [1, 2]
";
        let ode = parse_ode(src).unwrap();
        assert_eq!(ode.order(), 3);
        assert!(ode.rhs().is_zero());
        assert_eq!(ode.coeff(0).evaluate(2.0).unwrap(), 0.125);

        let missing = "order = 3\na0 = 0\na1 = 0\ninterval = [-1, 1]\n";
        assert_eq!(
            parse_ode(missing).unwrap_err().code,
            ErrorCode::MissingField
        );

        let too_low = "order = 1\na0 = 0\ninterval = [-1, 1]\n";
        assert_eq!(parse_ode(too_low).unwrap_err().code, ErrorCode::OrderTooLow);

        let nonmonic = "order = 2\na0 = 0\na1 = 0\na2 = 1\ninterval = [-1, 1]\n";
        assert_eq!(
            parse_ode(nonmonic).unwrap_err().code,
            ErrorCode::CoefficientCount
        );

        // coefficient singular at the midpoint
        let singular = "order = 2\na0 = 1/t\na1 = 0\ninterval = [-1, 1]\n";
        assert_eq!(
            parse_ode(singular).unwrap_err().code,
            ErrorCode::Unevaluable
        );
    }

    #[test]
    fn ode_document_with_constants() {
        let src = "order = 3\nc0 = 5\na0 = c0/t^3\na1 = 0\na2 = 0\ninterval = [1, 2]\n";
        let ode = parse_ode(src).unwrap();
        assert_eq!(ode.coeff(0).evaluate(1.0).unwrap(), 5.0);
    }

    #[test]
    fn transformation_document() {
        let id = parse_transformation("T = t\nX1 = 1\nX0 = 0\ninterval = [0, 1]\n").unwrap();
        assert!(id.t_map().is_var());

        // interval endpoint as exact expression
        let log = parse_transformation("T = ln(t)\nX1 = 1/t\ninterval = [1, exp(1)]\n").unwrap();
        assert!((log.target().lo() - 0.0).abs() < 1e-12);
        assert!((log.target().hi() - 1.0).abs() < 1e-12);

        // T_t vanishes inside the interval
        let bad = parse_transformation("T = t^2\nX1 = 1\ninterval = [-1, 1]\n");
        assert_eq!(bad.unwrap_err().code, ErrorCode::VanishingTt);
    }

    #[test]
    fn serialized_ode_reparses() {
        let src = "order = 2\na0 = 1 - t^2\na1 = exp(t)\nrhs = sin(t)\ninterval = [0, 0.5]\n";
        let ode = parse_ode(src).unwrap();
        let text = serialize_ode(&ode);
        let back = parse_ode(&text).unwrap();
        assert_eq!(back.order(), 2);
        assert_eq!(back.coeff(0), ode.coeff(0));
        assert_eq!(back.coeff(1), ode.coeff(1));
        assert_eq!(back.rhs(), ode.rhs());
    }
}
