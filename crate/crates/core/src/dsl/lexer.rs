use std::fmt;

use crate::diagnostic::SourceSpan;
use crate::dsl::ParseDiagnostic;

macro_rules! keywords {
    ($($variant:ident => $text:literal,)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Keyword {
            $($variant,)*
        }

        impl Keyword {
            pub const ALL: &'static [Keyword] = &[$(Keyword::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Keyword::$variant => $text,)*
                }
            }

            pub fn from_word(word: &str) -> Option<Keyword> {
                match word {
                    $($text => Some(Keyword::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

keywords! {
    Map => "map",
    Process => "process",
    Category => "category",
    Subcategory => "subcategory",
    Parent => "parent",
    Phase => "phase",
    Ordinal => "ordinal",
    Actor => "actor",
    Object => "object",
    Kind => "kind",
    Permanent => "permanent",
    Case => "case",
    Abstract => "abstract",
    Service => "service",
    External => "external",
    Customer => "customer",
    Owner => "owner",
    Input => "input",
    Output => "output",
    From => "from",
    To => "to",
    Product => "product",
    Outcome => "outcome",
    Provides => "provides",
    Uses => "uses",
    Handles => "handles",
    Tag => "tag",
    Group => "group",
    By => "by",
    Members => "members",
    Contains => "contains",
    VariantOf => "variant-of",
}

pub fn is_keyword(word: &str) -> bool {
    Keyword::from_word(word).is_some()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Str(String),
    Int(u64),
    LBrace,
    RBrace,
    Comma,
    Equals,
    /// `->`
    TriggerArrow,
    /// `~>`
    FlowArrow,
    Newline,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Keyword(k) => format!("`{}`", k.as_str()),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Str(_) => "string".into(),
            TokenKind::Int(n) => format!("number {n}"),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Equals => "`=`".into(),
            TokenKind::TriggerArrow => "`->`".into(),
            TokenKind::FlowArrow => "`~>`".into(),
            TokenKind::Newline => "end of line".into(),
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

/// Splits source text into tokens. Whitespace and `#` comments are dropped;
/// line breaks are kept as [`TokenKind::Newline`] since statements end at
/// them.
pub fn tokenize(file: &str, text: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        let (line, column) = (cur.line, cur.column);
        let span = |len: u32| SourceSpan::new(file, line, column, len);
        let kind = match c {
            '\n' => {
                cur.bump();
                TokenKind::Newline
            }
            ' ' | '\t' | '\r' | '\u{feff}' => {
                cur.bump();
                continue;
            }
            '#' => {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
                continue;
            }
            '{' | '}' | ',' | '=' => {
                cur.bump();
                match c {
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    ',' => TokenKind::Comma,
                    _ => TokenKind::Equals,
                }
            }
            '-' | '~' => {
                cur.bump();
                if cur.peek() != Some('>') {
                    return Err(ParseDiagnostic::new(
                        span(1),
                        format!("unexpected character `{c}`"),
                    )
                    .expecting(["`->`", "`~>`"]));
                }
                cur.bump();
                if c == '-' {
                    TokenKind::TriggerArrow
                } else {
                    TokenKind::FlowArrow
                }
            }
            '"' => {
                cur.bump();
                let mut value = String::new();
                loop {
                    match cur.bump() {
                        None | Some('\n') => {
                            return Err(ParseDiagnostic::new(
                                span(cur.column.saturating_sub(column).max(1)),
                                "unterminated string literal",
                            ))
                        }
                        Some('"') => break,
                        Some('\\') => match cur.bump() {
                            Some('"') => value.push('"'),
                            Some('\\') => value.push('\\'),
                            Some('n') => value.push('\n'),
                            Some('t') => value.push('\t'),
                            Some('r') => value.push('\r'),
                            other => {
                                return Err(ParseDiagnostic::new(
                                    SourceSpan::new(
                                        file,
                                        cur.line,
                                        cur.column.saturating_sub(2).max(1),
                                        2,
                                    ),
                                    match other {
                                        Some(o) => format!("unknown escape `\\{o}` in string"),
                                        None => "unterminated string literal".to_owned(),
                                    },
                                ))
                            }
                        },
                        Some(other) => value.push(other),
                    }
                }
                let len = cur.column - column;
                tokens.push(Token {
                    kind: TokenKind::Str(value),
                    span: span(len),
                });
                continue;
            }
            '0'..='9' => {
                let mut digits = String::new();
                while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                    digits.push(d);
                    cur.bump();
                }
                if cur
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                {
                    return Err(ParseDiagnostic::new(
                        span(digits.len() as u32 + 1),
                        "identifiers must start with a letter",
                    ));
                }
                let n = digits.parse::<u64>().map_err(|_| {
                    ParseDiagnostic::new(span(digits.len() as u32), "number is too large")
                })?;
                TokenKind::Int(n)
            }
            c if c.is_ascii_alphabetic() => {
                let mut word = String::new();
                while let Some(c) = cur.peek().filter(|&c| is_ident_continue(c)) {
                    // `A->B`: the hyphen belongs to the arrow.
                    if c == '-' {
                        let mut ahead = cur.chars.clone();
                        ahead.next();
                        if ahead.peek() == Some(&'>') {
                            break;
                        }
                    }
                    word.push(c);
                    cur.bump();
                }
                match Keyword::from_word(&word) {
                    Some(k) => TokenKind::Keyword(k),
                    None => TokenKind::Ident(word),
                }
            }
            other => {
                return Err(ParseDiagnostic::new(
                    span(1),
                    format!("unexpected character `{}`", other.escape_debug()),
                ))
            }
        };
        let len = cur.column.saturating_sub(column).max(1);
        tokens.push(Token {
            kind,
            span: span(if matches!(c, '\n') { 0 } else { len }),
        });
    }
    Ok(tokens)
}
