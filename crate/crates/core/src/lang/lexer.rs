use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    // keywords
    Class,
    Extends,
    Extern,
    Lib,
    Final,
    New,
    Null,
    True,
    False,
    This,
    Return,
    If,
    Else,
    While,
    Try,
    Catch,
    Throw,
    Print,
    InstanceOf,
    IntKw,
    BooleanKw,
    VoidKw,
    // punctuation
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Dot,
    At,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Bang,
    AndAnd,
    OrOr,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "class" => Tok::Class,
        "extends" => Tok::Extends,
        "extern" => Tok::Extern,
        "lib" => Tok::Lib,
        "final" => Tok::Final,
        "new" => Tok::New,
        "null" => Tok::Null,
        "true" => Tok::True,
        "false" => Tok::False,
        "this" => Tok::This,
        "return" => Tok::Return,
        "if" => Tok::If,
        "else" => Tok::Else,
        "while" => Tok::While,
        "try" => Tok::Try,
        "catch" => Tok::Catch,
        "throw" => Tok::Throw,
        "print" => Tok::Print,
        "instanceof" => Tok::InstanceOf,
        "int" => Tok::IntKw,
        "boolean" => Tok::BooleanKw,
        "void" => Tok::VoidKw,
        _ => return None,
    })
}

pub fn tokenize(source: &str, file: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;
    let err = |line, col, msg: String| ParseError { file: file.to_string(), line, col, message: msg };

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let advance = |i: &mut usize, line: &mut u32, col: &mut u32| {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        };

        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            advance(&mut i, &mut line, &mut col);
            advance(&mut i, &mut line, &mut col);
            loop {
                if i >= chars.len() {
                    return Err(err(start_line, start_col, "unterminated block comment".into()));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    advance(&mut i, &mut line, &mut col);
                    advance(&mut i, &mut line, &mut col);
                    break;
                }
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }

        let tok = if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let mut word = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                word.push(chars[i]);
                advance(&mut i, &mut line, &mut col);
            }
            keyword(&word).unwrap_or(Tok::Ident(word))
        } else if c.is_ascii_digit() {
            let mut digits = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                digits.push(chars[i]);
                advance(&mut i, &mut line, &mut col);
            }
            let value = digits
                .parse::<i64>()
                .map_err(|_| err(start_line, start_col, format!("integer literal `{digits}` out of range")))?;
            Tok::Int(value)
        } else if c == '"' {
            advance(&mut i, &mut line, &mut col);
            let mut text = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(err(start_line, start_col, "unterminated string literal".into())),
                    Some('"') => {
                        advance(&mut i, &mut line, &mut col);
                        break;
                    }
                    Some('\\') => {
                        advance(&mut i, &mut line, &mut col);
                        match chars.get(i) {
                            Some('"') => text.push('"'),
                            Some('\\') => text.push('\\'),
                            Some('n') => text.push('\n'),
                            _ => return Err(err(line, col, "invalid escape in string literal".into())),
                        }
                        advance(&mut i, &mut line, &mut col);
                    }
                    Some(&ch) => {
                        text.push(ch);
                        advance(&mut i, &mut line, &mut col);
                    }
                }
            }
            Tok::Str(text)
        } else {
            let next = chars.get(i + 1).copied();
            let (tok, width) = match (c, next) {
                ('=', Some('=')) => (Tok::EqEq, 2),
                ('!', Some('=')) => (Tok::NotEq, 2),
                ('<', Some('=')) => (Tok::Le, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('&', Some('&')) => (Tok::AndAnd, 2),
                ('|', Some('|')) => (Tok::OrOr, 2),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (';', _) => (Tok::Semi, 1),
                (',', _) => (Tok::Comma, 1),
                ('.', _) => (Tok::Dot, 1),
                ('@', _) => (Tok::At, 1),
                ('=', _) => (Tok::Assign, 1),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                ('/', _) => (Tok::Slash, 1),
                ('%', _) => (Tok::Percent, 1),
                ('!', _) => (Tok::Bang, 1),
                _ => return Err(err(line, col, format!("unexpected character `{c}`"))),
            };
            for _ in 0..width {
                advance(&mut i, &mut line, &mut col);
            }
            tok
        };
        out.push(Token { tok, line: start_line, col: start_col });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}
