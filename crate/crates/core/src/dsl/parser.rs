use std::collections::HashMap;
use std::path::Path;

use crate::diagnostic::SourceSpan;
use crate::dsl::lexer::{tokenize, Keyword, Token, TokenKind};
use crate::dsl::{ParseDiagnostic, ParseErrorKind};
use crate::model::{
    Category, Criterion, CustomerRef, Draft, EaElement, EaKind, Group, Ident, InputSpec,
    ObjectKind, OutputKind, OutputSpec, Phase, Process, Relation, Spanned,
};

type PResult<T> = Result<T, ParseDiagnostic>;

const MAP_ITEMS: &[&str] = &[
    "`category`",
    "`phase`",
    "`actor`",
    "`object`",
    "`service`",
    "`external`",
    "`process`",
    "`group`",
    "relation",
    "`}`",
];

const PROCESS_ITEMS: &[&str] = &[
    "`category`",
    "`phase`",
    "`owner`",
    "`input`",
    "`output`",
    "`provides`",
    "`uses`",
    "`handles`",
    "`tag`",
    "`}`",
];

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Namespace {
    Process,
    Element,
    Category,
    Phase,
}

impl Namespace {
    fn noun(self) -> &'static str {
        match self {
            Namespace::Process => "process",
            Namespace::Element => "element",
            Namespace::Category => "category",
            Namespace::Phase => "phase",
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: SourceSpan,
    errors: Vec<ParseDiagnostic>,
    declared: HashMap<(Namespace, String), SourceSpan>,
    draft: Draft,
}

/// Parses one `.promap` file into a draft. Errors are collected across
/// statements; parsing resumes at the next line after each one.
pub fn parse(file: &str, text: &str) -> Result<Draft, Vec<ParseDiagnostic>> {
    let tokens = tokenize(file, text).map_err(|e| vec![e])?;
    let (line, column) = end_position(text);
    let stem = Path::new(file)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: SourceSpan::new(file, line, column, 0),
        errors: Vec::new(),
        declared: HashMap::new(),
        draft: Draft::named(stem),
    };
    parser.file_body();
    if parser.errors.is_empty() {
        Ok(parser.draft)
    } else {
        Err(parser.errors)
    }
}

fn end_position(text: &str) -> (u32, u32) {
    let line = text.matches('\n').count() as u32 + 1;
    let last = text.rsplit('\n').next().unwrap_or("");
    (line, last.trim_end_matches('\r').chars().count() as u32 + 1)
}

impl Parser {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_span(&self) -> SourceSpan {
        self.tokens
            .get(self.pos)
            .map(|t| t.span.clone())
            .unwrap_or_else(|| self.end.clone())
    }

    fn advance(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek() == Some(kind)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        self.eat(&TokenKind::Keyword(kw))
    }

    fn unexpected(&self, expected: &[&str]) -> ParseDiagnostic {
        let found = match self.peek() {
            Some(kind) => kind.describe(),
            None => "end of file".to_owned(),
        };
        ParseDiagnostic::syntax(self.peek_span(), format!("unexpected {found}"))
            .expecting(expected.iter().copied())
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<SourceSpan> {
        if self.at(&kind) {
            Ok(self.advance().unwrap().span)
        } else {
            Err(self.unexpected(&[&kind.describe()]))
        }
    }

    fn expect_kw(&mut self, kw: Keyword) -> PResult<SourceSpan> {
        self.expect(TokenKind::Keyword(kw))
    }

    fn ident(&mut self) -> PResult<(Ident, SourceSpan)> {
        match self.peek() {
            Some(TokenKind::Ident(_)) => {
                let tok = self.advance().unwrap();
                let TokenKind::Ident(name) = tok.kind else {
                    unreachable!()
                };
                Ok((Ident::new(name), tok.span))
            }
            Some(TokenKind::Keyword(kw)) => Err(ParseDiagnostic::syntax(
                self.peek_span(),
                format!("`{}` is a reserved keyword", kw.as_str()),
            )
            .expecting(["identifier"])),
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn ident_list(&mut self) -> PResult<Vec<Ident>> {
        let mut ids = vec![self.ident()?.0];
        while self.eat(&TokenKind::Comma) {
            ids.push(self.ident()?.0);
        }
        Ok(ids)
    }

    fn string(&mut self) -> PResult<String> {
        match self.peek() {
            Some(TokenKind::Str(_)) => {
                let TokenKind::Str(s) = self.advance().unwrap().kind else {
                    unreachable!()
                };
                Ok(s)
            }
            _ => Err(self.unexpected(&["string"])),
        }
    }

    fn opt_string(&mut self) -> Option<String> {
        match self.peek() {
            Some(TokenKind::Str(_)) => self.string().ok(),
            _ => None,
        }
    }

    fn skip_newlines(&mut self) {
        while self.eat(&TokenKind::Newline) {}
    }

    /// Skips the rest of the current line, together with any block opened
    /// on it. Stops before a `}` that closes an enclosing block.
    fn recover(&mut self) {
        let mut depth = 0usize;
        while let Some(kind) = self.peek() {
            match kind {
                TokenKind::Newline if depth == 0 => return,
                TokenKind::LBrace => depth += 1,
                TokenKind::RBrace if depth == 0 => return,
                TokenKind::RBrace => depth -= 1,
                _ => {}
            }
            self.pos += 1;
        }
    }

    fn declare(&mut self, ns: Namespace, id: &Ident, span: &SourceSpan) -> bool {
        let key = (ns, id.to_string());
        if let Some(first) = self.declared.get(&key) {
            self.errors.push(ParseDiagnostic {
                kind: ParseErrorKind::Duplicate,
                span: span.clone(),
                message: format!(
                    "duplicate {} `{id}`, first declared at line {}",
                    ns.noun(),
                    first.line
                ),
                expected: Vec::new(),
            });
            return false;
        }
        self.declared.insert(key, span.clone());
        true
    }

    fn file_body(&mut self) {
        self.skip_newlines();
        if self.peek().is_none() {
            return;
        }
        if let Err(e) = self.map_block() {
            self.errors.push(e);
            return;
        }
        self.skip_newlines();
        if self.peek().is_some() {
            let e = self.unexpected(&["end of file"]);
            self.errors.push(e);
        }
    }

    fn map_block(&mut self) -> PResult<()> {
        self.expect_kw(Keyword::Map)?;
        self.draft.name = self.string()?;
        self.block(MAP_ITEMS, |p| p.map_item())
    }

    /// `{ item (newline item)* }`; each item is parsed by `item` and errors
    /// inside the block are recorded and skipped.
    fn block(
        &mut self,
        expected: &[&str],
        mut item: impl FnMut(&mut Self) -> PResult<()>,
    ) -> PResult<()> {
        let open = self.expect(TokenKind::LBrace)?;
        loop {
            self.skip_newlines();
            match self.peek() {
                Some(TokenKind::RBrace) => {
                    self.pos += 1;
                    return Ok(());
                }
                None => {
                    return Err(ParseDiagnostic::syntax(
                        self.end.clone(),
                        format!("block opened at line {} is never closed", open.line),
                    )
                    .expecting(expected.iter().copied()))
                }
                Some(_) => {}
            }
            let result = item(self).and_then(|()| match self.peek() {
                None | Some(TokenKind::Newline | TokenKind::RBrace) => Ok(()),
                Some(_) => Err(self.unexpected(&["end of line", "`}`"])),
            });
            if let Err(e) = result {
                self.errors.push(e);
                self.recover();
            }
        }
    }

    fn map_item(&mut self) -> PResult<()> {
        match self.peek() {
            Some(TokenKind::Keyword(Keyword::Category)) => {
                self.pos += 1;
                self.category(None)
            }
            Some(TokenKind::Keyword(Keyword::Phase)) => self.phase(),
            Some(TokenKind::Keyword(Keyword::Actor)) => {
                self.pos += 1;
                self.element(EaKind::Actor)
            }
            Some(TokenKind::Keyword(Keyword::Service)) => {
                self.pos += 1;
                self.element(EaKind::Service)
            }
            Some(TokenKind::Keyword(Keyword::External)) => {
                self.pos += 1;
                self.expect_kw(Keyword::Customer)?;
                self.element(EaKind::ExternalCustomer)
            }
            Some(TokenKind::Keyword(Keyword::Object)) => {
                self.pos += 1;
                self.element(EaKind::Object {
                    object_kind: ObjectKind::Permanent,
                })
            }
            Some(TokenKind::Keyword(Keyword::Process)) => self.process(),
            Some(TokenKind::Keyword(Keyword::Group)) => self.group(),
            Some(TokenKind::Ident(_)) => self.relation(),
            _ => Err(self.unexpected(MAP_ITEMS)),
        }
    }

    fn category(&mut self, parent: Option<Ident>) -> PResult<()> {
        let (id, span) = self.ident()?;
        let name = self.opt_string().unwrap_or_else(|| id.to_string());
        let parent = if parent.is_none() && self.eat_kw(Keyword::Parent) {
            Some(self.ident()?.0)
        } else {
            parent
        };
        if self.declare(Namespace::Category, &id, &span) {
            self.draft.categories.push(Spanned::new(
                Category {
                    id: id.clone(),
                    name,
                    parent,
                },
                Some(span),
            ));
        }
        if self.at(&TokenKind::LBrace) {
            self.block(&["`subcategory`", "`}`"], |p| {
                p.expect_kw(Keyword::Subcategory)?;
                p.category(Some(id.clone()))
            })?;
        }
        Ok(())
    }

    fn phase(&mut self) -> PResult<()> {
        self.expect_kw(Keyword::Phase)?;
        let (id, span) = self.ident()?;
        let name = self.opt_string().unwrap_or_else(|| id.to_string());
        let ordinal = if self.eat_kw(Keyword::Ordinal) {
            match self.peek() {
                Some(&TokenKind::Int(n)) => {
                    self.pos += 1;
                    Some(n)
                }
                _ => return Err(self.unexpected(&["number"])),
            }
        } else {
            None
        };
        if self.declare(Namespace::Phase, &id, &span) {
            self.draft
                .phases
                .push(Spanned::new(Phase { id, name, ordinal }, Some(span)));
        }
        Ok(())
    }

    fn element(&mut self, mut kind: EaKind) -> PResult<()> {
        let (id, span) = self.ident()?;
        let name = self.opt_string().unwrap_or_else(|| id.to_string());
        if let EaKind::Object { object_kind } = &mut kind {
            if self.eat_kw(Keyword::Kind) {
                *object_kind = match self.peek() {
                    Some(TokenKind::Keyword(Keyword::Permanent)) => ObjectKind::Permanent,
                    Some(TokenKind::Keyword(Keyword::Case)) => ObjectKind::Case,
                    Some(TokenKind::Keyword(Keyword::Abstract)) => ObjectKind::Abstract,
                    _ => return Err(self.unexpected(&["`permanent`", "`case`", "`abstract`"])),
                };
                self.pos += 1;
            }
        }
        if self.declare(Namespace::Element, &id, &span) {
            self.draft
                .ea_elements
                .push(Spanned::new(EaElement { id, name, kind }, Some(span)));
        }
        Ok(())
    }

    fn process(&mut self) -> PResult<()> {
        self.expect_kw(Keyword::Process)?;
        let (id, span) = self.ident()?;
        let mut process = Process::new(id.clone());
        if let Some(name) = self.opt_string() {
            process.name = name;
        }
        if self.at(&TokenKind::LBrace) {
            self.block(PROCESS_ITEMS, |p| p.process_item(&mut process))?;
        }
        if self.declare(Namespace::Process, &id, &span) {
            self.draft.processes.push(Spanned::new(process, Some(span)));
        }
        Ok(())
    }

    fn customer(&mut self) -> PResult<CustomerRef> {
        let make: fn(Ident) -> CustomerRef = match self.peek() {
            Some(TokenKind::Keyword(Keyword::Customer)) => CustomerRef::ExternalCustomer,
            Some(TokenKind::Keyword(Keyword::Actor)) => CustomerRef::InternalActor,
            Some(TokenKind::Keyword(Keyword::Process)) => CustomerRef::InternalProcess,
            _ => return Err(self.unexpected(&["`customer`", "`actor`", "`process`"])),
        };
        self.pos += 1;
        Ok(make(self.ident()?.0))
    }

    fn process_item(&mut self, process: &mut Process) -> PResult<()> {
        let Some(TokenKind::Keyword(kw)) = self.peek().cloned() else {
            return Err(self.unexpected(PROCESS_ITEMS));
        };
        let start = self.peek_span();
        match kw {
            Keyword::Category
            | Keyword::Phase
            | Keyword::Owner
            | Keyword::Provides
            | Keyword::Uses
            | Keyword::Handles => {
                self.pos += 1;
                let target = match kw {
                    Keyword::Category => &mut process.categories,
                    Keyword::Phase => &mut process.phases,
                    Keyword::Owner => &mut process.owners,
                    Keyword::Provides => &mut process.provides,
                    Keyword::Uses => &mut process.uses,
                    _ => &mut process.handles,
                };
                target.extend(self.ident_list()?);
            }
            Keyword::Input => {
                self.pos += 1;
                let label = self.string()?;
                self.expect_kw(Keyword::From)?;
                let source = self.customer()?;
                process.inputs.push(InputSpec { label, source });
            }
            Keyword::Output => {
                self.pos += 1;
                let label = self.string()?;
                let kind = if self.eat_kw(Keyword::Outcome) {
                    OutputKind::Outcome
                } else {
                    self.eat_kw(Keyword::Product);
                    OutputKind::Product
                };
                self.expect_kw(Keyword::To)?;
                let destination = self.customer()?;
                process.outputs.push(OutputSpec {
                    label,
                    kind,
                    destination,
                });
            }
            Keyword::Tag => {
                self.pos += 1;
                let key = self.property_key()?;
                self.expect(TokenKind::Equals)?;
                let value = self.string()?;
                if process.properties.contains_key(&key) {
                    return Err(ParseDiagnostic {
                        kind: ParseErrorKind::Duplicate,
                        span: start,
                        message: format!("duplicate tag `{key}` on process `{}`", process.id),
                        expected: Vec::new(),
                    });
                }
                process.properties.insert(key, value);
            }
            _ => return Err(self.unexpected(PROCESS_ITEMS)),
        }
        Ok(())
    }

    fn property_key(&mut self) -> PResult<String> {
        match self.peek() {
            Some(TokenKind::Str(_)) => self.string(),
            Some(TokenKind::Ident(_)) => Ok(self.ident()?.0.to_string()),
            _ => Err(self.unexpected(&["identifier", "string"])),
        }
    }

    fn group(&mut self) -> PResult<()> {
        let span = self.expect_kw(Keyword::Group)?;
        let name = self.string()?;
        self.expect_kw(Keyword::By)?;
        let Some(TokenKind::Keyword(kw)) = self.peek().cloned() else {
            return Err(self.unexpected(CRITERIA));
        };
        self.pos += 1;
        let mut explicit_members = None;
        let criterion = match kw {
            Keyword::Category => Criterion::InCategory(self.ident()?.0),
            Keyword::Phase => Criterion::InPhase(self.ident()?.0),
            Keyword::Owner => Criterion::OwnedBy(self.ident()?.0),
            Keyword::Provides => Criterion::Provides(self.ident()?.0),
            Keyword::Uses => Criterion::Uses(self.ident()?.0),
            Keyword::Handles => Criterion::Handles(self.ident()?.0),
            Keyword::Tag => {
                let key = self.property_key()?;
                self.expect(TokenKind::Equals)?;
                Criterion::Property {
                    key,
                    value: self.string()?,
                }
            }
            Keyword::Members => {
                let members = if matches!(self.peek(), Some(TokenKind::Ident(_))) {
                    self.ident_list()?.into_iter().collect()
                } else {
                    Default::default()
                };
                explicit_members = Some(members);
                Criterion::ExplicitList
            }
            _ => {
                self.pos -= 1;
                return Err(self.unexpected(CRITERIA));
            }
        };
        self.draft.groups.push(Spanned::new(
            Group {
                name,
                criterion,
                explicit_members,
            },
            Some(span),
        ));
        Ok(())
    }

    fn relation(&mut self) -> PResult<()> {
        let (from, span) = self.ident()?;
        let make: fn(Ident, Ident) -> Relation = match self.peek() {
            Some(TokenKind::TriggerArrow) => |a, b| Relation::Trigger { src: a, dst: b },
            Some(TokenKind::FlowArrow) => |a, b| Relation::Flow { src: a, dst: b },
            Some(TokenKind::Keyword(Keyword::Contains)) => |a, b| Relation::Decomposition {
                parent: a,
                child: b,
            },
            Some(TokenKind::Keyword(Keyword::VariantOf)) => |a, b| Relation::Specialization {
                variant: a,
                standard: b,
            },
            _ => return Err(self.unexpected(&["`->`", "`~>`", "`contains`", "`variant-of`"])),
        };
        self.pos += 1;
        for to in self.ident_list()? {
            self.draft
                .relations
                .push(Spanned::new(make(from.clone(), to), Some(span.clone())));
        }
        Ok(())
    }
}

const CRITERIA: &[&str] = &[
    "`category`",
    "`phase`",
    "`owner`",
    "`provides`",
    "`uses`",
    "`handles`",
    "`tag`",
    "`members`",
];
