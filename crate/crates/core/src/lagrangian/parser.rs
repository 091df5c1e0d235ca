use super::{Expr, Func, ParseError, ParseErrorKind, Var};

/// Parses an expression in `t`, `u`, `v`.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.unexpected());
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, pos: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { pos, kind }
    }

    fn unexpected(&mut self) -> ParseError {
        let what = match self.peek() {
            Some(c) => format!("`{}`", c as char),
            None => "end of input".to_string(),
        };
        self.error(self.pos, ParseErrorKind::Unexpected(what))
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let negate = self.eat(b'-');
        let mut e = self.atom()?;
        if self.eat(b'^') {
            e = Expr::Pow(Box::new(e), self.exponent()?);
        }
        Ok(if negate { Expr::Neg(Box::new(e)) } else { e })
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let neg = self.eat(b'-');
        self.skip_ws();
        match self.src.get(self.pos) {
            Some(c) if c.is_ascii_digit() || *c == b'.' => {}
            _ => return Err(self.unexpected()),
        }
        let (text, is_int) = self.number_text();
        let shown = if neg {
            format!("-{text}")
        } else {
            text.clone()
        };
        if !is_int {
            return Err(self.error(start, ParseErrorKind::NonIntegerExponent(shown)));
        }
        let n: i32 = text
            .parse()
            .map_err(|_| self.error(start, ParseErrorKind::BadNumber(shown)))?;
        Ok(if neg { -n } else { n })
    }

    /// Consumes `digits ('.' digits)? ([eE] [+-]? digits)?` and reports whether
    /// the literal is a plain integer.
    fn number_text(&mut self) -> (String, bool) {
        let start = self.pos;
        let mut is_int = true;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            is_int = false;
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                is_int = false;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        (text, is_int)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let start = match self.peek() {
            Some(_) => self.pos,
            None => return Err(self.unexpected()),
        };
        let c = self.src[start];
        if c.is_ascii_digit() || c == b'.' {
            let (text, _) = self.number_text();
            return text
                .parse::<f64>()
                .map(Expr::Const)
                .map_err(|_| self.error(start, ParseErrorKind::BadNumber(text)));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
            return match name {
                "t" => Ok(Expr::Var(Var::T)),
                "u" => Ok(Expr::Var(Var::U)),
                "v" => Ok(Expr::Var(Var::V)),
                _ => match Func::from_name(name) {
                    Some(func) => {
                        self.expect(b'(')?;
                        let arg = self.expr()?;
                        self.expect(b')')?;
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                    None => {
                        Err(self.error(start, ParseErrorKind::UnknownIdentifier(name.to_string())))
                    }
                },
            };
        }
        if self.eat(b'(') {
            let e = self.expr()?;
            self.expect(b')')?;
            return Ok(e);
        }
        Err(self.unexpected())
    }
}
