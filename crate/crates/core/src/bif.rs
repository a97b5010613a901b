//! Reading and writing networks in the Bayesian network Interchange Format.
//!
//! Supported: `network`, `variable` blocks with `type discrete`, and
//! `probability` blocks holding either a `table` or per-row entries
//! `(parent values) p1, ..., pk;`. `property` statements are kept as opaque
//! text. A `table` lists the owner's values slowest and the last declared
//! parent fastest. `//` and `/* */` comments are skipped.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::bn::{BayesianNetwork, BnError, NetworkBuilder, VarId};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum BifError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("in block {block}: undeclared variable {name}")]
    UndeclaredVariable { block: String, name: String },
    #[error("in block {block}: {var} has no value {label:?}")]
    UnknownValue { block: String, var: String, label: String },
    #[error("in block {block}: missing row for parent values ({values})")]
    MissingRow { block: String, values: String },
    #[error("in block {block}: duplicate row for parent values ({values})")]
    DuplicateRow { block: String, values: String },
    #[error("in block {block}: {msg}")]
    Block { block: String, msg: String },
    #[error(transparent)]
    Network(#[from] BnError),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Sym(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
    start: usize,
}

const SYMBOLS: &[char] = &['{', '}', '(', ')', '[', ']', ',', ';', '|'];

fn tokenize(src: &str) -> Result<Vec<Token>, BifError> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    let bump = |c: char, line: &mut usize, col: &mut usize| {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            bump(c, &mut line, &mut col);
            chars.next();
            continue;
        }
        if c == '/' && src[i..].starts_with("//") {
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump(c, &mut line, &mut col);
                chars.next();
            }
            continue;
        }
        if c == '/' && src[i..].starts_with("/*") {
            let (l0, c0) = (line, col);
            let Some(close) = src[i + 2..].find("*/") else {
                return Err(BifError::Syntax {
                    line: l0,
                    col: c0,
                    msg: "unterminated comment".into(),
                });
            };
            let stop = i + 2 + close + 2;
            while let Some(&(j, c)) = chars.peek() {
                if j >= stop {
                    break;
                }
                bump(c, &mut line, &mut col);
                chars.next();
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if SYMBOLS.contains(&c) {
            chars.next();
            bump(c, &mut line, &mut col);
            out.push(Token {
                tok: Tok::Sym(c),
                line: tl,
                col: tc,
                start: i,
            });
            continue;
        }
        if c == '"' {
            chars.next();
            bump(c, &mut line, &mut col);
            let mut text = String::new();
            let mut closed = false;
            for (_, c) in chars.by_ref() {
                bump(c, &mut line, &mut col);
                if c == '"' {
                    closed = true;
                    break;
                }
                text.push(c);
            }
            if !closed {
                return Err(BifError::Syntax {
                    line: tl,
                    col: tc,
                    msg: "unterminated string".into(),
                });
            }
            out.push(Token {
                tok: Tok::Str(text),
                line: tl,
                col: tc,
                start: i,
            });
            continue;
        }
        let mut end = i;
        while let Some(&(j, c)) = chars.peek() {
            if c.is_whitespace() || SYMBOLS.contains(&c) || c == '"' || src[j..].starts_with("//") || src[j..].starts_with("/*") {
                break;
            }
            end = j + c.len_utf8();
            bump(c, &mut line, &mut col);
            chars.next();
        }
        out.push(Token {
            tok: Tok::Word(src[i..end].to_string()),
            line: tl,
            col: tc,
            start: i,
        });
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
}

struct ProbabilityBlock {
    owner: String,
    parents: Vec<String>,
    table: Option<Vec<f64>>,
    rows: Vec<(Vec<String>, Vec<f64>)>,
    properties: Vec<String>,
    line: usize,
    col: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: impl Into<String>) -> BifError {
        let (line, col) = match self.toks.get(self.pos).or(self.toks.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        };
        BifError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn expect_sym(&mut self, c: char) -> Result<(), BifError> {
        match self.peek() {
            Some(Tok::Sym(s)) if *s == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(format!("expected '{c}'"))),
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn word(&mut self, what: &str) -> Result<String, BifError> {
        match self.peek() {
            Some(Tok::Word(w)) | Some(Tok::Str(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), BifError> {
        match self.peek() {
            Some(Tok::Word(w)) if w == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(format!("expected '{kw}'"))),
        }
    }

    fn number(&mut self) -> Result<f64, BifError> {
        let here = self.pos;
        let w = self.word("a probability")?;
        w.parse::<f64>().map_err(|_| {
            self.pos = here;
            self.error(format!("invalid number {w:?}"))
        })
    }

    /// Raw text of a `property ... ;` statement, keyword already consumed.
    fn property(&mut self) -> Result<String, BifError> {
        let start = self
            .toks
            .get(self.pos)
            .map(|t| t.start)
            .ok_or_else(|| self.error("unterminated property"))?;
        loop {
            match self.toks.get(self.pos) {
                Some(Token { tok: Tok::Sym(';'), .. }) => {
                    let end = self.toks[self.pos].start;
                    self.pos += 1;
                    return Ok(self.src[start..end].trim().to_string());
                }
                Some(Token { tok: Tok::Sym('}'), .. }) | None => {
                    return Err(self.error("expected ';' after property"))
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    /// Comma-optional list of numbers up to and including `;`.
    fn numbers(&mut self) -> Result<Vec<f64>, BifError> {
        let mut out = Vec::new();
        loop {
            if self.eat_sym(';') {
                return Ok(out);
            }
            out.push(self.number()?);
            self.eat_sym(',');
        }
    }

    fn variable(&mut self, b: &mut NetworkBuilder) -> Result<(), BifError> {
        let name = self.word("variable name")?;
        if b.lookup(&name).is_some() {
            return Err(self.error(format!("variable {name} declared twice")));
        }
        self.expect_sym('{')?;
        let mut domain: Option<Vec<String>> = None;
        let mut properties = Vec::new();
        loop {
            if self.eat_sym('}') {
                break;
            }
            match self.next() {
                Some(Tok::Word(w)) if w == "type" => {
                    self.keyword("discrete")?;
                    self.expect_sym('[')?;
                    let here = self.pos;
                    let n = self.word("domain size")?;
                    let n: usize = n.parse().map_err(|_| {
                        self.pos = here;
                        self.error("invalid domain size")
                    })?;
                    self.expect_sym(']')?;
                    self.expect_sym('{')?;
                    let mut labels = Vec::new();
                    loop {
                        if self.eat_sym('}') {
                            break;
                        }
                        labels.push(self.word("value label")?);
                        self.eat_sym(',');
                    }
                    self.expect_sym(';')?;
                    if labels.len() != n {
                        return Err(BifError::Block {
                            block: format!("variable {name}"),
                            msg: format!("declares {n} values but lists {}", labels.len()),
                        });
                    }
                    domain = Some(labels);
                }
                Some(Tok::Word(w)) if w == "property" => properties.push(self.property()?),
                _ => {
                    self.pos -= 1;
                    return Err(self.error("expected 'type' or 'property'"));
                }
            }
        }
        let domain = domain.ok_or_else(|| BifError::Block {
            block: format!("variable {name}"),
            msg: "missing type declaration".into(),
        })?;
        let id = b.variable(name, domain);
        b.variable_mut(id).properties = properties;
        Ok(())
    }

    fn probability(&mut self) -> Result<ProbabilityBlock, BifError> {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map_or((0, 0), |t| (t.line, t.col));
        self.expect_sym('(')?;
        let owner = self.word("variable name")?;
        let mut parents = Vec::new();
        if self.eat_sym('|') {
            loop {
                parents.push(self.word("parent name")?);
                if !self.eat_sym(',') {
                    break;
                }
            }
        }
        self.expect_sym(')')?;
        self.expect_sym('{')?;
        let mut block = ProbabilityBlock {
            owner,
            parents,
            table: None,
            rows: Vec::new(),
            properties: Vec::new(),
            line,
            col,
        };
        loop {
            if self.eat_sym('}') {
                return Ok(block);
            }
            match self.next() {
                Some(Tok::Word(w)) if w == "table" => {
                    if block.table.is_some() {
                        return Err(self.error("second table in one block"));
                    }
                    block.table = Some(self.numbers()?);
                }
                Some(Tok::Word(w)) if w == "property" => block.properties.push(self.property()?),
                Some(Tok::Sym('(')) => {
                    let mut labels = Vec::new();
                    loop {
                        if self.eat_sym(')') {
                            break;
                        }
                        labels.push(self.word("parent value")?);
                        self.eat_sym(',');
                    }
                    block.rows.push((labels, self.numbers()?));
                }
                _ => {
                    self.pos -= 1;
                    return Err(self.error("expected 'table', a row or 'property'"));
                }
            }
        }
    }
}

/// Parses and validates a BIF document.
pub fn parse_bif(text: &str) -> Result<BayesianNetwork, BifError> {
    let mut p = Parser {
        src: text,
        toks: tokenize(text)?,
        pos: 0,
    };
    let mut name = String::from("unknown");
    let mut net_properties = Vec::new();
    let mut builder = NetworkBuilder::new("");
    let mut blocks = Vec::new();
    while p.peek().is_some() {
        match p.next() {
            Some(Tok::Word(w)) if w == "network" => {
                if !matches!(p.peek(), Some(Tok::Sym('{'))) {
                    name = p.word("network name")?;
                }
                p.expect_sym('{')?;
                loop {
                    if p.eat_sym('}') {
                        break;
                    }
                    match p.next() {
                        Some(Tok::Word(w)) if w == "property" => net_properties.push(p.property()?),
                        _ => {
                            p.pos -= 1;
                            return Err(p.error("expected 'property' or '}'"));
                        }
                    }
                }
            }
            Some(Tok::Word(w)) if w == "variable" => p.variable(&mut builder)?,
            Some(Tok::Word(w)) if w == "probability" => blocks.push(p.probability()?),
            _ => {
                p.pos -= 1;
                return Err(p.error("expected 'network', 'variable' or 'probability'"));
            }
        }
    }

    let mut seen = HashSet::new();
    for block in &blocks {
        apply_block(&mut builder, block)?;
        seen.insert(block.owner.clone());
    }
    if let Some(v) = builder.variables().iter().find(|v| !seen.contains(&v.name)) {
        return Err(BnError::MissingCpt(v.name.clone()).into());
    }
    let mut bn = builder.build()?;
    bn.name = name;
    bn.properties = net_properties;
    bn.ensure_valid()?;
    Ok(bn)
}

fn apply_block(b: &mut NetworkBuilder, block: &ProbabilityBlock) -> Result<(), BifError> {
    let label = format!("probability ({}) at {}:{}", block.owner, block.line, block.col);
    let resolve = |name: &str| {
        b.lookup(name).ok_or_else(|| BifError::UndeclaredVariable {
            block: label.clone(),
            name: name.to_string(),
        })
    };
    let owner = resolve(&block.owner)?;
    let parents: Vec<VarId> = block
        .parents
        .iter()
        .map(|n| resolve(n))
        .collect::<Result<_, _>>()?;
    let card = b.variables()[owner.0].card();
    let parent_cards: Vec<usize> = parents.iter().map(|p| b.variables()[p.0].card()).collect();
    let row_count: usize = parent_cards.iter().product();
    let arity = |n: usize| -> Result<(), BifError> {
        if n == card {
            Ok(())
        } else {
            Err(BifError::Block {
                block: label.clone(),
                msg: format!("row has {n} probabilities, {} has {card} values", block.owner),
            })
        }
    };

    let mut rows: Vec<Option<Vec<f64>>> = vec![None; row_count];
    if let Some(table) = &block.table {
        if !block.rows.is_empty() {
            return Err(BifError::Block {
                block: label,
                msg: "mixes a table with explicit rows".into(),
            });
        }
        if table.len() != row_count * card {
            return Err(BifError::Block {
                block: label,
                msg: format!("table has {} entries, expected {}", table.len(), row_count * card),
            });
        }
        for (r, slot) in rows.iter_mut().enumerate() {
            *slot = Some((0..card).map(|d| table[d * row_count + r]).collect());
        }
    }
    for (labels, probs) in &block.rows {
        if labels.len() != parents.len() {
            return Err(BifError::Block {
                block: label,
                msg: format!("row ({}) names {} parent values, expected {}", labels.join(", "), labels.len(), parents.len()),
            });
        }
        arity(probs.len())?;
        let mut idx = 0;
        for ((l, p), &c) in labels.iter().zip(&parents).zip(&parent_cards) {
            let var = &b.variables()[p.0];
            let v = var.value_index(l).ok_or_else(|| BifError::UnknownValue {
                block: label.clone(),
                var: var.name.clone(),
                label: l.clone(),
            })?;
            idx = idx * c + v;
        }
        if rows[idx].is_some() {
            return Err(BifError::DuplicateRow {
                block: label,
                values: labels.join(", "),
            });
        }
        rows[idx] = Some(probs.clone());
    }
    let mut filled = Vec::with_capacity(row_count);
    for (r, row) in rows.into_iter().enumerate() {
        match row {
            Some(row) => filled.push(row),
            None => {
                let mut rest = r;
                let mut values = vec![String::new(); parents.len()];
                for ((slot, p), &c) in values.iter_mut().zip(&parents).zip(&parent_cards).rev() {
                    *slot = b.variables()[p.0].domain[rest % c].clone();
                    rest /= c;
                }
                return Err(BifError::MissingRow {
                    block: label,
                    values: values.join(", "),
                });
            }
        }
    }
    b.cpt(owner, &parents, &filled)?;
    Ok(())
}

/// Serializes `bn`; rows are written out explicitly, root tables as `table`.
/// Numbers use the shortest representation that reads back to the same
/// `f64`.
pub fn write_bif(bn: &BayesianNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "network {} {{", bn.name);
    for p in &bn.properties {
        let _ = writeln!(out, "  property {p} ;");
    }
    out.push_str("}\n");
    for v in bn.variables() {
        let _ = writeln!(out, "variable {} {{", v.name);
        let _ = writeln!(
            out,
            "  type discrete [ {} ] {{ {} }};",
            v.card(),
            v.domain.join(", ")
        );
        for p in &v.properties {
            let _ = writeln!(out, "  property {p} ;");
        }
        out.push_str("}\n");
    }
    let nums = |row: &[f64]| row.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ");
    for v in bn.variables() {
        let cpt = bn.cpt(v.id);
        if cpt.parents.is_empty() {
            let _ = writeln!(out, "probability ( {} ) {{", v.name);
            let _ = writeln!(out, "  table {};", nums(cpt.row(0)));
        } else {
            let names: Vec<&str> = cpt.parents.iter().map(|p| bn.variable(*p).name.as_str()).collect();
            let _ = writeln!(out, "probability ( {} | {} ) {{", v.name, names.join(", "));
            for r in 0..cpt.row_count() {
                let labels: Vec<&str> = cpt
                    .row_values(r)
                    .iter()
                    .zip(&cpt.parents)
                    .map(|(&d, p)| bn.variable(*p).domain[d].as_str())
                    .collect();
                let _ = writeln!(out, "  ({}) {};", labels.join(", "), nums(cpt.row(r)));
            }
        }
        out.push_str("}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{student_mood, STUDENT_MOOD_BIF};

    #[test]
    fn fixture_matches_builtin() {
        let bn = parse_bif(STUDENT_MOOD_BIF).unwrap();
        assert_eq!(bn.name, "StudentMood");
        let built = student_mood();
        assert_eq!(bn.variables(), built.variables());
        assert_eq!(bn.cpts(), built.cpts());
    }

    #[test]
    fn minimal_table() {
        let bn = parse_bif("network n { }\nvariable x { type discrete [ 2 ] { a, b }; }\nprobability ( x ) { table 0.5 0.5; }").unwrap();
        assert_eq!(bn.len(), 1);
        assert_eq!(bn.cpt(VarId(0)).row(0), &[0.5, 0.5]);
    }

    #[test]
    fn conditional_table_layout() {
        let src = "variable a { type discrete [ 2 ] { t, f }; }
            variable b { type discrete [ 2 ] { t, f }; }
            probability ( a ) { table 0.3, 0.7; }
            probability ( b | a ) { table 0.1, 0.2, 0.9, 0.8; }";
        let bn = parse_bif(src).unwrap();
        let cpt = bn.cpt(VarId(1));
        assert_eq!(cpt.row(0), &[0.1, 0.9]);
        assert_eq!(cpt.row(1), &[0.2, 0.8]);
    }

    #[test]
    fn undeclared_parent_value_names_block() {
        let src = STUDENT_MOOD_BIF.replace("(1) 0.3, 0.7;", "(2) 0.3, 0.7;");
        let err = parse_bif(&src).unwrap_err();
        assert!(
            matches!(&err, BifError::UnknownValue { block, label, .. } if block.contains("Mood") && label == "2"),
            "{err}"
        );
    }

    #[test]
    fn undeclared_variable() {
        let src = STUDENT_MOOD_BIF.replace("( Mood | Grade )", "( Mood | Grades )");
        assert!(matches!(parse_bif(&src), Err(BifError::UndeclaredVariable { .. })));
    }

    #[test]
    fn missing_and_duplicate_rows() {
        let missing = STUDENT_MOOD_BIF.replace("  (1, 0) 0.9, 0.1;\n", "");
        assert!(matches!(
            parse_bif(&missing),
            Err(BifError::MissingRow { values, .. }) if values == "1, 0"
        ));
        let dup = STUDENT_MOOD_BIF.replace("(1, 0) 0.9, 0.1;", "(0, 0) 0.9, 0.1;");
        assert!(matches!(parse_bif(&dup), Err(BifError::DuplicateRow { .. })));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_bif("variable x {\n  type discrete [ 2 ] { a, b }\n}").unwrap_err();
        match err {
            BifError::Syntax { line, col, .. } => assert_eq!((line, col), (3, 1)),
            other => panic!("{other}"),
        }
        assert!(matches!(parse_bif("/* open"), Err(BifError::Syntax { .. })));
    }

    #[test]
    fn bad_row_sum_rejected() {
        let src = STUDENT_MOOD_BIF.replace("table 0.6, 0.4;", "table 0.6, 0.3;");
        assert!(matches!(parse_bif(&src), Err(BifError::Network(BnError::Invalid(_)))));
    }

    #[test]
    fn properties_and_comments_survive() {
        let src = "network \"n\" { property author = me ; }
            /* block comment */
            variable x { type discrete [ 2 ] { a, b }; property position = (1, 2) ; } // trailing
            probability ( x ) { table 0.25, 0.75; }";
        let bn = parse_bif(src).unwrap();
        assert_eq!(bn.properties, vec!["author = me"]);
        assert_eq!(bn.variable(VarId(0)).properties, vec!["position = (1, 2)"]);
        let again = parse_bif(&write_bif(&bn)).unwrap();
        assert_eq!(again, bn);
    }

    #[test]
    fn round_trip_fixture() {
        let bn = student_mood();
        let mut again = parse_bif(&write_bif(&bn)).unwrap();
        again.name = bn.name.clone();
        assert_eq!(again, bn);
    }
}
