use super::shapes::{ArgSpec, Builtins, CommandTable, EnvKind};
use super::{Arg, ArgKind, Command, Environment, LatexNode, MathDelimiter, MathSegment, Mode};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{kind} (at byte {offset})")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("unmatched closing brace")]
    UnbalancedClose,
    #[error("group opened here is never closed")]
    UnclosedGroup,
    #[error("math opened here is never closed")]
    UnclosedMath,
    #[error("math delimiter inside math")]
    NestedMath,
    #[error("math closing delimiter outside math")]
    UnexpectedMathClose,
    #[error("environment `{0}` is never closed")]
    UnclosedEnvironment(String),
    #[error("`\\end{{{found}}}` does not match `\\begin{{{expected}}}`")]
    MismatchedEnvironment { expected: String, found: String },
    #[error("`\\end{{{0}}}` without matching `\\begin`")]
    UnexpectedEnd(String),
    #[error("`\\{command}` is missing argument {index}")]
    MissingArgument { command: String, index: usize },
    #[error("backslash at end of input")]
    DanglingBackslash,
    #[error("unterminated `\\verb`")]
    UnclosedVerbatim,
    #[error("malformed `\\begin`")]
    MalformedBegin,
}

/// Parses a text-mode fragment using only the built-in command table.
pub fn parse(source: &str) -> Result<Vec<LatexNode>, ParseError> {
    parse_with(source, &Builtins)
}

/// Parses a text-mode fragment, taking argument counts from `table`.
pub fn parse_with(source: &str, table: &dyn CommandTable) -> Result<Vec<LatexNode>, ParseError> {
    Parser {
        src: source,
        pos: 0,
        table,
    }
    .seq(Mode::Text, Until::Eof, 0)
}

/// Parses the body of a math segment (no surrounding delimiters).
pub fn parse_math(source: &str, table: &dyn CommandTable) -> Result<Vec<LatexNode>, ParseError> {
    Parser {
        src: source,
        pos: 0,
        table,
    }
    .seq(Mode::Math, Until::Eof, 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Until<'s> {
    Eof,
    Brace,
    Bracket,
    Math(MathDelimiter),
    End(&'s str),
}

enum Step {
    Node(LatexNode),
    Close,
}

struct Parser<'s, 't> {
    src: &'s str,
    pos: usize,
    table: &'t dyn CommandTable,
}

fn is_ws(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r')
}

impl<'s> Parser<'s, '_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn rest(&self) -> &'s str {
        &self.src[self.pos..]
    }

    fn err<T>(&self, offset: usize, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError { offset, kind })
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'s str {
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !f(c))
            .unwrap_or(self.rest().len());
        self.pos += len;
        &self.src[start..start + len]
    }

    fn seq(
        &mut self,
        mode: Mode,
        until: Until<'s>,
        open_at: usize,
    ) -> Result<Vec<LatexNode>, ParseError> {
        let mut out = Vec::new();
        loop {
            let Some(c) = self.peek() else {
                let kind = match until {
                    Until::Eof => return Ok(out),
                    Until::Brace | Until::Bracket => ParseErrorKind::UnclosedGroup,
                    Until::Math(_) => ParseErrorKind::UnclosedMath,
                    Until::End(name) => ParseErrorKind::UnclosedEnvironment(name.to_string()),
                };
                return self.err(open_at, kind);
            };
            match c {
                '}' => {
                    if until == Until::Brace {
                        self.pos += 1;
                        return Ok(out);
                    }
                    return self.err(self.pos, ParseErrorKind::UnbalancedClose);
                }
                ']' if until == Until::Bracket => {
                    self.pos += 1;
                    return Ok(out);
                }
                '{' => {
                    let at = self.pos;
                    self.pos += 1;
                    let body = self.seq(mode, Until::Brace, at)?;
                    out.push(LatexNode::Group(body));
                }
                '%' => {
                    self.pos += 1;
                    let text = self.take_while(|c| c != '\n');
                    out.push(LatexNode::Comment(text.to_string()));
                }
                c if is_ws(c) => {
                    let ws = self.take_while(is_ws);
                    out.push(LatexNode::Whitespace(ws.to_string()));
                }
                '$' => {
                    let at = self.pos;
                    match mode {
                        Mode::Text => out.push(self.math_segment(at)?),
                        Mode::Math => match until {
                            Until::Math(MathDelimiter::Inline) => {
                                self.pos += 1;
                                return Ok(out);
                            }
                            Until::Math(MathDelimiter::Display)
                                if self.rest().starts_with("$$") =>
                            {
                                self.pos += 2;
                                return Ok(out);
                            }
                            Until::Math(MathDelimiter::Display) => {
                                return self.err(at, ParseErrorKind::NestedMath)
                            }
                            Until::Brace | Until::Bracket => {
                                return self.err(open_at, ParseErrorKind::UnclosedGroup)
                            }
                            _ => return self.err(at, ParseErrorKind::NestedMath),
                        },
                    }
                }
                '\\' => match self.control(mode, until)? {
                    Step::Node(n) => out.push(n),
                    Step::Close => return Ok(out),
                },
                _ => {
                    let bracket = until == Until::Bracket;
                    let text = self.take_while(|c| {
                        !(matches!(c, '\\' | '{' | '}' | '$' | '%')
                            || is_ws(c)
                            || (bracket && c == ']'))
                    });
                    out.push(LatexNode::Text(text.to_string()));
                }
            }
        }
    }

    fn math_segment(&mut self, at: usize) -> Result<LatexNode, ParseError> {
        let delimiter = if self.rest().starts_with("$$") {
            MathDelimiter::Display
        } else if self.rest().starts_with('$') {
            MathDelimiter::Inline
        } else if self.rest().starts_with("\\[") {
            MathDelimiter::Bracket
        } else {
            MathDelimiter::Paren
        };
        self.pos += delimiter.open().len();
        let body = self.seq(Mode::Math, Until::Math(delimiter), at)?;
        Ok(LatexNode::Math(MathSegment { delimiter, body }))
    }

    fn control(&mut self, mode: Mode, until: Until<'s>) -> Result<Step, ParseError> {
        let start = self.pos;
        let Some(c) = self.src[start + 1..].chars().next() else {
            return self.err(start, ParseErrorKind::DanglingBackslash);
        };
        if !c.is_ascii_alphabetic() {
            match c {
                '[' | '(' => {
                    if mode == Mode::Math {
                        return self.err(start, ParseErrorKind::NestedMath);
                    }
                    return Ok(Step::Node(self.math_segment(start)?));
                }
                ']' | ')' => {
                    let closes = if c == ']' {
                        MathDelimiter::Bracket
                    } else {
                        MathDelimiter::Paren
                    };
                    if until == Until::Math(closes) {
                        self.pos += 2;
                        return Ok(Step::Close);
                    }
                    return self.err(start, ParseErrorKind::UnexpectedMathClose);
                }
                _ => {
                    self.pos += 1 + c.len_utf8();
                    return Ok(Step::Node(LatexNode::Command(Command::new(c.to_string()))));
                }
            }
        }
        self.pos += 1;
        let name = self.take_while(|c| c.is_ascii_alphabetic());
        match name {
            "begin" if self.peek() == Some('{') => {
                return self.environment(start, mode).map(Step::Node)
            }
            "end" if self.peek() == Some('{') => {
                let found = self.braced_name(start)?;
                return match until {
                    Until::End(expected) if expected == found => Ok(Step::Close),
                    Until::End(expected) => self.err(
                        start,
                        ParseErrorKind::MismatchedEnvironment {
                            expected: expected.to_string(),
                            found: found.to_string(),
                        },
                    ),
                    _ => self.err(start, ParseErrorKind::UnexpectedEnd(found.to_string())),
                };
            }
            "verb" => {
                if let Some(d) = self
                    .peek()
                    .filter(|d| !d.is_ascii_alphabetic() && !is_ws(*d))
                {
                    self.pos += d.len_utf8();
                    let Some(len) = self.rest().find(d) else {
                        return self.err(start, ParseErrorKind::UnclosedVerbatim);
                    };
                    self.pos += len + d.len_utf8();
                    return Ok(Step::Node(LatexNode::Text(
                        self.src[start..self.pos].to_string(),
                    )));
                }
            }
            _ => {}
        }
        let space = self.take_while(is_ws).to_string();
        let mut cmd = Command {
            name: name.to_string(),
            space,
            args: Vec::new(),
        };
        match self.table.command_shape(name) {
            Some(shape) => {
                let arg_mode = shape.arg_mode.unwrap_or(mode);
                self.shaped_args(
                    &mut cmd.args,
                    &shape.args,
                    cmd.space.is_empty(),
                    arg_mode,
                    name,
                    start,
                )?;
            }
            None if cmd.space.is_empty() => self.greedy_args(&mut cmd.args, mode)?,
            None => {}
        }
        Ok(Step::Node(LatexNode::Command(cmd)))
    }

    fn shaped_args(
        &mut self,
        args: &mut Vec<Arg>,
        specs: &[ArgSpec],
        mut adjacent: bool,
        mode: Mode,
        name: &str,
        start: usize,
    ) -> Result<(), ParseError> {
        for (index, spec) in specs.iter().enumerate() {
            match spec {
                ArgSpec::Optional => {
                    if adjacent && self.peek() == Some('[') {
                        if let Some(arg) = self.try_optional(mode) {
                            args.push(arg);
                        }
                    }
                }
                ArgSpec::Required => {
                    args.push(self.required(mode, name, index + 1, start)?);
                    adjacent = true;
                }
            }
        }
        Ok(())
    }

    fn greedy_args(&mut self, args: &mut Vec<Arg>, mode: Mode) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                Some('{') => {
                    let at = self.pos;
                    self.pos += 1;
                    let body = self.seq(mode, Until::Brace, at)?;
                    args.push(Arg::braced(body));
                }
                Some('[') => match self.try_optional(mode) {
                    Some(arg) => args.push(arg),
                    None => break,
                },
                _ => break,
            }
        }
        Ok(())
    }

    /// Reads `[...]`; on failure rewinds and reports `None` so `[` is read as text.
    fn try_optional(&mut self, mode: Mode) -> Option<Arg> {
        let save = self.pos;
        self.pos += 1;
        match self.seq(mode, Until::Bracket, save) {
            Ok(body) => Some(Arg::optional(body)),
            Err(_) => {
                self.pos = save;
                None
            }
        }
    }

    fn required(
        &mut self,
        mode: Mode,
        name: &str,
        index: usize,
        start: usize,
    ) -> Result<Arg, ParseError> {
        let prefix_start = self.pos;
        loop {
            match self.peek() {
                Some(c) if is_ws(c) => {
                    self.take_while(is_ws);
                }
                Some('%') => {
                    self.take_while(|c| c != '\n');
                }
                _ => break,
            }
        }
        let prefix = self.src[prefix_start..self.pos].to_string();
        let missing = || ParseErrorKind::MissingArgument {
            command: name.to_string(),
            index,
        };
        match self.peek() {
            Some('{') => {
                let at = self.pos;
                self.pos += 1;
                let body = self.seq(mode, Until::Brace, at)?;
                Ok(Arg {
                    prefix,
                    kind: ArgKind::Braced,
                    body,
                })
            }
            Some('\\') => {
                let Some(c) = self.src[self.pos + 1..].chars().next() else {
                    return self.err(self.pos, ParseErrorKind::DanglingBackslash);
                };
                self.pos += 1;
                let token = if c.is_ascii_alphabetic() {
                    self.take_while(|c| c.is_ascii_alphabetic()).to_string()
                } else {
                    self.pos += c.len_utf8();
                    c.to_string()
                };
                Ok(Arg {
                    prefix,
                    kind: ArgKind::Bare,
                    body: vec![LatexNode::Command(Command::new(token))],
                })
            }
            None | Some('}') | Some('$') => self.err(start, missing()),
            Some(c) => {
                self.pos += c.len_utf8();
                Ok(Arg {
                    prefix,
                    kind: ArgKind::Bare,
                    body: vec![LatexNode::Text(c.to_string())],
                })
            }
        }
    }

    /// Reads `{name}` right after `\begin` / `\end`.
    fn braced_name(&mut self, start: usize) -> Result<&'s str, ParseError> {
        self.pos += 1;
        let name = self.take_while(|c| !matches!(c, '}' | '{' | '\\' | '$' | '%'));
        if self.peek() != Some('}') {
            return self.err(start, ParseErrorKind::MalformedBegin);
        }
        self.pos += 1;
        Ok(name)
    }

    fn environment(&mut self, start: usize, mode: Mode) -> Result<LatexNode, ParseError> {
        let name = self.braced_name(start)?;
        let shape = self.table.env_shape(name);
        let mut args = Vec::new();
        match &shape {
            Some(shape) => self.shaped_args(&mut args, &shape.args, true, mode, name, start)?,
            None => self.greedy_args(&mut args, mode)?,
        }
        let kind = shape.map_or(EnvKind::Normal, |s| s.kind);
        let body = match kind {
            EnvKind::Verbatim => {
                let end = format!("\\end{{{name}}}");
                let Some(len) = self.rest().find(&end) else {
                    return self.err(start, ParseErrorKind::UnclosedEnvironment(name.to_string()));
                };
                let raw = &self.rest()[..len];
                self.pos += len + end.len();
                if raw.is_empty() {
                    Vec::new()
                } else {
                    vec![LatexNode::Text(raw.to_string())]
                }
            }
            EnvKind::Math => self.seq(Mode::Math, Until::End(name), start)?,
            EnvKind::Normal => self.seq(mode, Until::End(name), start)?,
        };
        Ok(LatexNode::Environment(Environment {
            name: name.to_string(),
            args,
            body,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latex::render;

    fn kind(src: &str) -> ParseErrorKind {
        parse(src).expect_err(src).kind
    }

    #[test]
    fn extra_closing_brace() {
        assert_eq!(
            kind(r"\foral{x}{A}\inset{x}{B}}"),
            ParseErrorKind::UnbalancedClose
        );
    }

    #[test]
    fn unclosed_things() {
        assert_eq!(kind("{a"), ParseErrorKind::UnclosedGroup);
        assert_eq!(kind("$a"), ParseErrorKind::UnclosedMath);
        assert_eq!(kind(r"\[ a"), ParseErrorKind::UnclosedMath);
        assert_eq!(
            kind(r"\begin{definition} a"),
            ParseErrorKind::UnclosedEnvironment("definition".into())
        );
        assert_eq!(
            kind(r"\begin{a}x\end{b}"),
            ParseErrorKind::MismatchedEnvironment {
                expected: "a".into(),
                found: "b".into()
            }
        );
        assert_eq!(kind(r"x\end{a}"), ParseErrorKind::UnexpectedEnd("a".into()));
        assert_eq!(kind(r"\["), ParseErrorKind::UnclosedMath);
        assert_eq!(kind("\\"), ParseErrorKind::DanglingBackslash);
    }

    #[test]
    fn math_nesting_and_stray_closers() {
        assert_eq!(kind(r"$a\[b\]$"), ParseErrorKind::NestedMath);
        assert_eq!(kind(r"a\]"), ParseErrorKind::UnexpectedMathClose);
        assert_eq!(kind("${a$}"), ParseErrorKind::UnclosedGroup);
        assert_eq!(kind("$$a$b$$"), ParseErrorKind::NestedMath);
    }

    #[test]
    fn missing_argument_of_known_command() {
        assert_eq!(
            kind(r"$\frac{1}$"),
            ParseErrorKind::MissingArgument {
                command: "frac".into(),
                index: 2
            }
        );
        assert_eq!(
            kind(r"{\frac{1}}"),
            ParseErrorKind::MissingArgument {
                command: "frac".into(),
                index: 2
            }
        );
    }

    #[test]
    fn bare_arguments() {
        let nodes = parse(r"\frac 12").unwrap();
        let LatexNode::Command(c) = &nodes[0] else {
            panic!()
        };
        assert_eq!(c.space, " ");
        assert_eq!(c.args.len(), 2);
        assert!(c.args.iter().all(|a| a.kind == ArgKind::Bare));
        assert_eq!(render(&c.args[1].body), "2");
    }

    #[test]
    fn unknown_commands_take_adjacent_groups_only() {
        let nodes = parse(r"\foo[a]{b} {c}").unwrap();
        let LatexNode::Command(c) = &nodes[0] else {
            panic!()
        };
        assert_eq!(c.args.len(), 2);
        assert!(matches!(nodes[2], LatexNode::Group(_)));

        let nodes = parse(r"\foo {c}").unwrap();
        let LatexNode::Command(c) = &nodes[0] else {
            panic!()
        };
        assert!(c.args.is_empty());
    }

    #[test]
    fn unclosed_optional_falls_back_to_text() {
        let nodes = parse_math(r"\foo[0,1)", &Builtins).unwrap();
        assert_eq!(render(&nodes), r"\foo[0,1)");
        let LatexNode::Command(c) = &nodes[0] else {
            panic!()
        };
        assert!(c.args.is_empty());
    }

    #[test]
    fn text_arguments_inside_math() {
        let nodes = parse(r"$x \text{for all $y$}$").unwrap();
        assert_eq!(render(&nodes), r"$x \text{for all $y$}$");
    }

    #[test]
    fn math_environment_body_is_math() {
        let nodes = parse(r"\begin{equation}a=b\end{equation}").unwrap();
        let LatexNode::Environment(e) = &nodes[0] else {
            panic!()
        };
        assert_eq!(e.name, "equation");
        assert!(parse(r"\begin{equation}$a$\end{equation}").is_err());
    }

    #[test]
    fn symdef_shape() {
        let src = "\\symdef[assocarg=1,name=multiplication]\n    {nattimes}[1]{\\assoc[p=600]{\\nattimesOp}{#1}}";
        let nodes = parse(src).unwrap();
        let LatexNode::Command(c) = &nodes[0] else {
            panic!()
        };
        assert_eq!(c.args.len(), 4);
        assert_eq!(c.args[1].prefix, "\n    ");
        assert_eq!(render(&nodes), src);
    }
}
