//! Text syntax for algebra elements.
//!
//! ```text
//! element := ['+'|'-'] term (('+'|'-') term)*
//! term    := factor+                       (juxtaposition multiplies)
//! factor  := 'v' INT STAR? | 'v' list STAR? | '(' element ')' STAR?
//!          | complex | real ['i'] | 'i'
//! list    := '[' INT (',' INT)* ']'
//! complex := '(' real-or-imag (('+'|'-') real-or-imag)? ')'
//! STAR    := '*'                           (adjoint)
//! ```
//!
//! `1` is the unit, `v[1,2,3]` is `v_1 v_2 v_3`, and `(1+2i) v1 v2*` is a
//! scaled monomial. The result is always fully reduced.

use num_complex::Complex64 as C64;

use super::{AlgebraElement, AlgebraError, Word};

pub fn parse_expression(text: &str, n: usize) -> Result<AlgebraElement, AlgebraError> {
    if n == 0 {
        return Err(AlgebraError::EmptyAlphabet);
    }
    let mut p = Parser { src: text.as_bytes(), pos: 0, n };
    let out = p.element()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> AlgebraError {
        AlgebraError::Syntax { position: self.pos, message: message.to_string() }
    }

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

    fn expect(&mut self, c: u8) -> Result<(), AlgebraError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn element(&mut self) -> Result<AlgebraElement, AlgebraError> {
        let mut negate = false;
        if self.eat(b'-') {
            negate = true;
        } else {
            self.eat(b'+');
        }
        let mut acc = self.term()?;
        if negate {
            acc = -&acc;
        }
        loop {
            if self.eat(b'+') {
                let t = self.term()?;
                acc = &acc + &t;
            } else if self.eat(b'-') {
                let t = self.term()?;
                acc = &acc - &t;
            } else {
                return Ok(acc);
            }
        }
    }

    fn starts_factor(&mut self) -> bool {
        matches!(self.peek(), Some(b'v' | b'(' | b'i' | b'.' | b'0'..=b'9'))
    }

    fn term(&mut self) -> Result<AlgebraElement, AlgebraError> {
        if !self.starts_factor() {
            return Err(self.error("expected a term"));
        }
        let mut acc = self.factor()?;
        while self.starts_factor() {
            let f = self.factor()?;
            acc = &acc * &f;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<AlgebraElement, AlgebraError> {
        let base = match self.peek() {
            Some(b'v') => {
                self.pos += 1;
                let word = self.word()?;
                AlgebraElement::basic(word, Word::empty(self.n))?
            }
            Some(b'(') => {
                let save = self.pos;
                match self.complex_literal() {
                    Some(c) => AlgebraElement::one(self.n).scale(c),
                    None => {
                        self.pos = save;
                        self.expect(b'(')?;
                        let inner = self.element()?;
                        self.expect(b')')?;
                        inner
                    }
                }
            }
            Some(b'i' | b'.' | b'0'..=b'9') => {
                let c = self.real_or_imag().ok_or_else(|| self.error("malformed number"))?;
                AlgebraElement::one(self.n).scale(c)
            }
            _ => return Err(self.error("expected a factor")),
        };
        if self.eat(b'*') {
            Ok(base.adjoint())
        } else {
            Ok(base)
        }
    }

    fn word(&mut self) -> Result<Word, AlgebraError> {
        // no whitespace between 'v' and its index
        let letters = if self.src.get(self.pos) == Some(&b'[') {
            self.pos += 1;
            let mut letters = vec![self.integer()?];
            while self.eat(b',') {
                letters.push(self.integer()?);
            }
            self.expect(b']')?;
            letters
        } else {
            vec![self.integer_here()?]
        };
        Word::new(self.n, letters)
    }

    fn integer(&mut self) -> Result<usize, AlgebraError> {
        self.skip_ws();
        self.integer_here()
    }

    fn integer_here(&mut self) -> Result<usize, AlgebraError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a letter index"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| AlgebraError::Syntax { position: start, message: "letter index too large".into() })
    }

    /// Unsigned real literal, optionally followed by `i`; or a bare `i`.
    fn real_or_imag(&mut self) -> Option<C64> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&b'i') {
            self.pos += 1;
            return Some(C64::i());
        }
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos > s
        };
        let int_part = digits(self);
        let mut frac_part = false;
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac_part = digits(self);
        }
        if !int_part && !frac_part {
            self.pos = start;
            return None;
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if !digits(self) {
                self.pos = save;
            }
        }
        let value: f64 = std::str::from_utf8(&self.src[start..self.pos]).ok()?.parse().ok()?;
        if self.src.get(self.pos) == Some(&b'i') {
            self.pos += 1;
            Some(C64::new(0.0, value))
        } else {
            Some(C64::new(value, 0.0))
        }
    }

    fn complex_literal(&mut self) -> Option<C64> {
        if !self.eat(b'(') {
            return None;
        }
        let mut sign = 1.0;
        if self.eat(b'-') {
            sign = -1.0;
        } else {
            self.eat(b'+');
        }
        let mut value = self.real_or_imag()? * sign;
        loop {
            if self.eat(b')') {
                return Some(value);
            }
            let sign = if self.eat(b'+') {
                1.0
            } else if self.eat(b'-') {
                -1.0
            } else {
                return None;
            };
            value += self.real_or_imag()? * sign;
        }
    }
}
