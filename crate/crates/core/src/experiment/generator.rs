//! Named matrix generators such as `sg(pi/2, 0)` or `qft(3)`.

use std::f64::consts::PI;

use crate::linalg::{c, identity, CMatrix, ONE, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorError {
    Syntax(String),
    Unknown(String),
    Arguments(String),
    Dimension {
        generator: String,
        expected: usize,
        found: usize,
    },
}

/// Parsed generator call with evaluated numeric arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct Call {
    pub name: String,
    pub args: Vec<f64>,
}

pub const GENERATORS: &[&str] = &["identity", "qft", "sg", "rotation", "phase", "shift"];

pub fn parse_call(text: &str) -> Result<Call, GeneratorError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let name = p
        .ident()
        .ok_or_else(|| GeneratorError::Syntax(format!("expected a generator name in `{text}`")))?;
    p.skip_ws();
    let mut args = Vec::new();
    if p.eat(b'(') {
        p.skip_ws();
        if !p.eat(b')') {
            loop {
                args.push(p.expr()?);
                p.skip_ws();
                if p.eat(b')') {
                    break;
                }
                if !p.eat(b',') {
                    return Err(p.error("expected `,` or `)`"));
                }
            }
        }
    }
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(Call { name, args })
}

/// Evaluates `text` to a `dim x dim` matrix.
pub fn generate(text: &str, dim: usize) -> Result<CMatrix, GeneratorError> {
    let call = parse_call(text)?;
    let Call { name, args } = &call;
    let arity = |n: usize| -> Result<(), GeneratorError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(GeneratorError::Arguments(format!(
                "`{name}` takes {n} argument(s), got {}",
                args.len()
            )))
        }
    };
    let size = |n: usize| -> Result<(), GeneratorError> {
        if n == dim {
            Ok(())
        } else {
            Err(GeneratorError::Dimension {
                generator: text.to_string(),
                expected: dim,
                found: n,
            })
        }
    };
    let count = |x: f64| -> Result<usize, GeneratorError> {
        if x >= 1.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(GeneratorError::Arguments(format!(
                "`{name}` needs a positive integer, got {x}"
            )))
        }
    };
    match name.as_str() {
        "identity" => {
            if let Some(&n) = args.first() {
                arity(1)?;
                size(count(n)?)?;
            }
            Ok(identity(dim))
        }
        "qft" => {
            arity(1)?;
            let n = count(args[0])?;
            size(n)?;
            let w = 2.0 * PI / n as f64;
            let norm = 1.0 / (n as f64).sqrt();
            Ok(CMatrix::from_fn(n, n, |j, k| {
                let a = w * ((j * k) % n) as f64;
                c(norm * a.cos(), norm * a.sin())
            }))
        }
        "sg" => {
            arity(2)?;
            size(2)?;
            let (theta, phi) = (args[0], args[1]);
            let (hc, hs) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            let e = c(phi.cos(), phi.sin());
            Ok(CMatrix::from_row_slice(
                2,
                2,
                &[c(hc, 0.0), c(hs, 0.0), e * hs, -e * hc],
            ))
        }
        "rotation" => {
            arity(1)?;
            size(2)?;
            let (hc, hs) = ((args[0] / 2.0).cos(), (args[0] / 2.0).sin());
            Ok(CMatrix::from_row_slice(
                2,
                2,
                &[c(hc, 0.0), c(-hs, 0.0), c(hs, 0.0), c(hc, 0.0)],
            ))
        }
        "phase" => {
            size(args.len())?;
            let mut m = CMatrix::from_element(dim, dim, ZERO);
            for (k, a) in args.iter().enumerate() {
                m[(k, k)] = c(a.cos(), a.sin());
            }
            Ok(m)
        }
        "shift" => {
            arity(1)?;
            if args[0].fract() != 0.0 {
                return Err(GeneratorError::Arguments(format!(
                    "`shift` needs an integer, got {}",
                    args[0]
                )));
            }
            let k = (args[0] as i64).rem_euclid(dim as i64) as usize;
            let mut m = CMatrix::from_element(dim, dim, ZERO);
            for j in 0..dim {
                m[((j + k) % dim, j)] = ONE;
            }
            Ok(m)
        }
        _ => Err(GeneratorError::Unknown(name.clone())),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> GeneratorError {
        GeneratorError::Syntax(format!("{what} at offset {}", self.pos))
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> Option<String> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_') {
            if self.pos == start && self.peek().is_some_and(|b| b.is_ascii_digit()) {
                return None;
            }
            self.pos += 1;
        }
        (self.pos > start).then(|| String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn expr(&mut self) -> Result<f64, GeneratorError> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            if self.eat(b'+') {
                acc += self.term()?;
            } else if self.eat(b'-') {
                acc -= self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<f64, GeneratorError> {
        let mut acc = self.unary()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                acc *= self.unary()?;
            } else if self.eat(b'/') {
                acc /= self.unary()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<f64, GeneratorError> {
        self.skip_ws();
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'(') {
            let v = self.expr()?;
            self.skip_ws();
            if !self.eat(b')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(v);
        }
        if self.peek().is_some_and(|b| b.is_ascii_alphabetic()) {
            return match self.ident().as_deref() {
                Some("pi") => Ok(PI),
                Some(other) => Err(GeneratorError::Syntax(format!("unknown constant `{other}`"))),
                None => Err(self.error("expected a number")),
            };
        }
        self.number()
    }

    fn number(&mut self) -> Result<f64, GeneratorError> {
        let start = self.pos;
        while let Some(b) = self.peek() {
            let exponent_sign =
                (b == b'-' || b == b'+') && self.pos > start && matches!(self.src[self.pos - 1], b'e' | b'E');
            if b.is_ascii_digit() || b == b'.' || b == b'e' || b == b'E' || exponent_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        s.parse::<f64>().map_err(|_| self.error("expected a number"))
    }
}
