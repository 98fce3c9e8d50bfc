//! Hand-rolled lexer. Tracks line/column and whether a token is the first
//! on its line, which drives the parser's offside rule.

use std::fmt;

use super::ast::Pos;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    NatLit(u64),
    FloatLit(f64),
    Kw(Kw),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    DoubleColon,
    Eq,
    Arrow,     // ->
    FatArrow,  // =>
    Backslash,
    Dot,
    Star,
    Plus,
    Pipe,
    Underscore,
    ClockJoin, // \/
    FAdd,      // +.
    FSub,      // -.
    FMul,      // *.
    FDiv,      // /.
    FEq,       // ==.
    FLt,       // <.
    FLe,       // <=.
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kw {
    Let,
    In,
    Case,
    Of,
    Delay,
    Adv,
    Select,
    Never,
    Box,
    Unbox,
    Into,
    Out,
    Fix,
    Await,
    Read,
    Cl,
    Suc,
    Natrec,
    Fst,
    Snd,
    In1,
    In2,
    Left,
    Right,
    Both,
    Inputs,
    Defs,
    Outputs,
    Def,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::NatLit(n) => write!(f, "numeral `{n}`"),
            Tok::FloatLit(x) => write!(f, "float `{x}`"),
            Tok::Kw(k) => write!(f, "`{}`", keyword_str(*k)),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::DoubleColon => write!(f, "`::`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::FatArrow => write!(f, "`=>`"),
            Tok::Backslash => write!(f, "`\\`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Pipe => write!(f, "`|`"),
            Tok::Underscore => write!(f, "`_`"),
            Tok::ClockJoin => write!(f, "`\\/`"),
            Tok::FAdd => write!(f, "`+.`"),
            Tok::FSub => write!(f, "`-.`"),
            Tok::FMul => write!(f, "`*.`"),
            Tok::FDiv => write!(f, "`/.`"),
            Tok::FEq => write!(f, "`==.`"),
            Tok::FLt => write!(f, "`<.`"),
            Tok::FLe => write!(f, "`<=.`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

pub fn keyword_str(k: Kw) -> &'static str {
    match k {
        Kw::Let => "let",
        Kw::In => "in",
        Kw::Case => "case",
        Kw::Of => "of",
        Kw::Delay => "delay",
        Kw::Adv => "adv",
        Kw::Select => "select",
        Kw::Never => "never",
        Kw::Box => "box",
        Kw::Unbox => "unbox",
        Kw::Into => "into",
        Kw::Out => "out",
        Kw::Fix => "fix",
        Kw::Await => "await",
        Kw::Read => "read",
        Kw::Cl => "cl",
        Kw::Suc => "suc",
        Kw::Natrec => "natrec",
        Kw::Fst => "fst",
        Kw::Snd => "snd",
        Kw::In1 => "in1",
        Kw::In2 => "in2",
        Kw::Left => "Left",
        Kw::Right => "Right",
        Kw::Both => "Both",
        Kw::Inputs => "inputs",
        Kw::Defs => "defs",
        Kw::Outputs => "outputs",
        Kw::Def => "def",
    }
}

fn keyword(s: &str) -> Option<Kw> {
    Some(match s {
        "let" => Kw::Let,
        "in" => Kw::In,
        "case" => Kw::Case,
        "of" => Kw::Of,
        "delay" => Kw::Delay,
        "adv" => Kw::Adv,
        "select" => Kw::Select,
        "never" => Kw::Never,
        "box" => Kw::Box,
        "unbox" => Kw::Unbox,
        "into" => Kw::Into,
        "out" => Kw::Out,
        "fix" => Kw::Fix,
        "await" => Kw::Await,
        "read" => Kw::Read,
        "cl" => Kw::Cl,
        "suc" => Kw::Suc,
        "natrec" => Kw::Natrec,
        "fst" => Kw::Fst,
        "snd" => Kw::Snd,
        "in1" => Kw::In1,
        "in2" => Kw::In2,
        "Left" => Kw::Left,
        "Right" => Kw::Right,
        "Both" => Kw::Both,
        "inputs" => Kw::Inputs,
        "defs" => Kw::Defs,
        "outputs" => Kw::Outputs,
        "def" => Kw::Def,
        _ => return None,
    })
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
    /// First token on its line (drives the offside rule).
    pub line_start: bool,
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("lex error at {pos}: {message}")]
pub struct LexError {
    pub pos: Pos,
    pub message: String,
}

pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let mut tokens = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut fresh_line = true;
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0usize;

    macro_rules! push {
        ($tok:expr, $pos:expr) => {{
            tokens.push(Token {
                tok: $tok,
                pos: $pos,
                line_start: fresh_line,
            });
            fresh_line = false;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        match c {
            '\n' => {
                line += 1;
                col = 1;
                fresh_line = true;
                i += 1;
                continue;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
                continue;
            }
            '-' if i + 1 < chars.len() && chars[i + 1] == '-' => {
                // line comment
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            _ => {}
        }

        let advance = |n: usize, col: &mut u32, i: &mut usize| {
            *col += n as u32;
            *i += n;
        };

        let peek1 = chars.get(i + 1).copied();
        let peek2 = chars.get(i + 2).copied();

        match c {
            '(' => {
                push!(Tok::LParen, pos);
                advance(1, &mut col, &mut i);
            }
            ')' => {
                push!(Tok::RParen, pos);
                advance(1, &mut col, &mut i);
            }
            '{' => {
                push!(Tok::LBrace, pos);
                advance(1, &mut col, &mut i);
            }
            '}' => {
                push!(Tok::RBrace, pos);
                advance(1, &mut col, &mut i);
            }
            ',' => {
                push!(Tok::Comma, pos);
                advance(1, &mut col, &mut i);
            }
            ';' => {
                push!(Tok::Semi, pos);
                advance(1, &mut col, &mut i);
            }
            '|' => {
                push!(Tok::Pipe, pos);
                advance(1, &mut col, &mut i);
            }
            '.' => {
                push!(Tok::Dot, pos);
                advance(1, &mut col, &mut i);
            }
            ':' => {
                if peek1 == Some(':') {
                    push!(Tok::DoubleColon, pos);
                    advance(2, &mut col, &mut i);
                } else {
                    push!(Tok::Colon, pos);
                    advance(1, &mut col, &mut i);
                }
            }
            '=' => match (peek1, peek2) {
                (Some('='), Some('.')) => {
                    push!(Tok::FEq, pos);
                    advance(3, &mut col, &mut i);
                }
                (Some('>'), _) => {
                    push!(Tok::FatArrow, pos);
                    advance(2, &mut col, &mut i);
                }
                _ => {
                    push!(Tok::Eq, pos);
                    advance(1, &mut col, &mut i);
                }
            },
            '<' => match (peek1, peek2) {
                (Some('='), Some('.')) => {
                    push!(Tok::FLe, pos);
                    advance(3, &mut col, &mut i);
                }
                (Some('.'), _) => {
                    push!(Tok::FLt, pos);
                    advance(2, &mut col, &mut i);
                }
                _ => {
                    return Err(LexError {
                        pos,
                        message: "expected `<.` or `<=.`".into(),
                    })
                }
            },
            '\\' => {
                if peek1 == Some('/') {
                    push!(Tok::ClockJoin, pos);
                    advance(2, &mut col, &mut i);
                } else {
                    push!(Tok::Backslash, pos);
                    advance(1, &mut col, &mut i);
                }
            }
            '*' => {
                if peek1 == Some('.') {
                    push!(Tok::FMul, pos);
                    advance(2, &mut col, &mut i);
                } else {
                    push!(Tok::Star, pos);
                    advance(1, &mut col, &mut i);
                }
            }
            '/' => {
                if peek1 == Some('.') {
                    push!(Tok::FDiv, pos);
                    advance(2, &mut col, &mut i);
                } else {
                    return Err(LexError {
                        pos,
                        message: "expected `/.`".into(),
                    });
                }
            }
            '+' => {
                if peek1 == Some('.') {
                    push!(Tok::FAdd, pos);
                    advance(2, &mut col, &mut i);
                } else {
                    push!(Tok::Plus, pos);
                    advance(1, &mut col, &mut i);
                }
            }
            '-' => {
                if peek1 == Some('>') {
                    push!(Tok::Arrow, pos);
                    advance(2, &mut col, &mut i);
                } else if peek1 == Some('.') {
                    push!(Tok::FSub, pos);
                    advance(2, &mut col, &mut i);
                } else if peek1.is_some_and(|d| d.is_ascii_digit()) {
                    // negative float literal (machine output round-trip)
                    let (tok, used) = lex_number(&chars[i..], pos, true)?;
                    push!(tok, pos);
                    advance(used, &mut col, &mut i);
                } else {
                    return Err(LexError {
                        pos,
                        message: "expected `->`, `-.` or a negative float literal".into(),
                    });
                }
            }
            '_' => {
                if peek1.is_some_and(is_ident_char) {
                    let (tok, used) = lex_word(&chars[i..], pos)?;
                    push!(tok, pos);
                    advance(used, &mut col, &mut i);
                } else {
                    push!(Tok::Underscore, pos);
                    advance(1, &mut col, &mut i);
                }
            }
            c if c.is_ascii_digit() => {
                let (tok, used) = lex_number(&chars[i..], pos, false)?;
                push!(tok, pos);
                advance(used, &mut col, &mut i);
            }
            c if c.is_alphabetic() => {
                let (tok, used) = lex_word(&chars[i..], pos)?;
                push!(tok, pos);
                advance(used, &mut col, &mut i);
            }
            other => {
                return Err(LexError {
                    pos,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
        line_start: fresh_line,
    });
    Ok(tokens)
}

fn is_ident_char(c: char) -> bool {
    // `#` appears in machine-generated fresh names; accepting it keeps
    // pretty-printed core terms re-parseable
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '#'
}

fn lex_word(chars: &[char], _pos: Pos) -> Result<(Tok, usize), LexError> {
    let mut n = 0;
    while n < chars.len() && is_ident_char(chars[n]) {
        n += 1;
    }
    let word: String = chars[..n].iter().collect();
    let tok = match keyword(&word) {
        Some(k) => Tok::Kw(k),
        None => Tok::Ident(word),
    };
    Ok((tok, n))
}

fn lex_number(chars: &[char], pos: Pos, negative: bool) -> Result<(Tok, usize), LexError> {
    let mut n = if negative { 1 } else { 0 };
    while n < chars.len() && chars[n].is_ascii_digit() {
        n += 1;
    }
    let mut is_float = false;
    if n + 1 < chars.len() && chars[n] == '.' && chars[n + 1].is_ascii_digit() {
        is_float = true;
        n += 1;
        while n < chars.len() && chars[n].is_ascii_digit() {
            n += 1;
        }
        // optional exponent
        if n < chars.len() && (chars[n] == 'e' || chars[n] == 'E') {
            let mut m = n + 1;
            if m < chars.len() && (chars[m] == '+' || chars[m] == '-') {
                m += 1;
            }
            if m < chars.len() && chars[m].is_ascii_digit() {
                n = m;
                while n < chars.len() && chars[n].is_ascii_digit() {
                    n += 1;
                }
            }
        }
    }
    let text: String = chars[..n].iter().collect();
    if is_float || negative {
        let value: f64 = text.parse().map_err(|_| LexError {
            pos,
            message: format!("malformed float literal `{text}`"),
        })?;
        Ok((Tok::FloatLit(value), n))
    } else {
        let value: u64 = text.parse().map_err(|_| LexError {
            pos,
            message: format!("numeral `{text}` out of range"),
        })?;
        Ok((Tok::NatLit(value), n))
    }
}
