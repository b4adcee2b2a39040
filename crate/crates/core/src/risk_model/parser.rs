use std::fmt;

use super::lexer::{tokenize, Pos, Tok, Token};
use super::validate::{validate, ElementKind};
use super::*;

/// A located parse or resolution failure.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
    /// Tokens that would have been accepted; empty for resolution errors.
    pub expected: Vec<String>,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub diagnostics: Vec<ParseDiagnostic>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

const DECLARATIONS: [&str; 5] = ["actor", "goal", "feature", "event", "situation"];

struct Parser {
    toks: Vec<Token>,
    at: usize,
    model: RiskModel,
    /// Name position of every declared element, by kind and index.
    spans: Vec<(ElementKind, usize, Pos)>,
}

type PResult<T> = Result<T, ParseDiagnostic>;

fn err_at(pos: Pos, message: impl Into<String>, expected: &[&str]) -> ParseDiagnostic {
    ParseDiagnostic {
        line: pos.line,
        col: pos.col,
        message: message.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if t.tok != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn unexpected<T>(&self, expected: &[&str]) -> PResult<T> {
        let t = self.peek();
        let msg = match &t.tok {
            Tok::Bad(s) if s == "unterminated string" => "unterminated string".to_string(),
            other => format!("unexpected {other}"),
        };
        Err(err_at(t.pos, msg, expected))
    }

    fn eat(&mut self, tok: Tok, label: &str) -> PResult<Pos> {
        if self.peek().tok == tok {
            Ok(self.next().pos)
        } else {
            self.unexpected(&[label])
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<Pos> {
        match &self.peek().tok {
            Tok::Word(w) if w == kw => Ok(self.next().pos),
            _ => self.unexpected(&[&format!("`{kw}`")]),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Word(w) if w == kw)
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        match &self.peek().tok {
            Tok::Word(w) if is_ident(w) => {
                let w = w.clone();
                Ok((w, self.next().pos))
            }
            _ => self.unexpected(&[what]),
        }
    }

    fn word(&mut self, what: &str) -> PResult<String> {
        match &self.peek().tok {
            Tok::Word(w) => {
                let w = w.clone();
                self.next();
                Ok(w)
            }
            _ => self.unexpected(&[what]),
        }
    }

    fn string(&mut self, what: &str) -> PResult<String> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => self.unexpected(&[what]),
        }
    }

    fn number(&mut self, what: &str) -> PResult<Real> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Number(n) => {
                let v: Real = n
                    .parse()
                    .map_err(|_| err_at(t.pos, format!("malformed number `{n}`"), &[what]))?;
                self.next();
                Ok(v)
            }
            _ => self.unexpected(&[what]),
        }
    }

    fn count(&mut self) -> PResult<u64> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Number(n) => {
                let v: u64 = n
                    .parse()
                    .map_err(|_| err_at(t.pos, "sample count must be a non-negative integer", &[]))?;
                self.next();
                Ok(v)
            }
            _ => self.unexpected(&["sample count"]),
        }
    }

    /// `a, b, c` of identifiers.
    fn ident_list(&mut self, what: &str) -> PResult<Vec<String>> {
        let mut out = vec![self.ident(what)?.0];
        while self.peek().tok == Tok::Comma {
            self.next();
            out.push(self.ident(what)?.0);
        }
        Ok(out)
    }

    fn declare(&mut self, kind: ElementKind, pos: Pos) {
        let index = match kind {
            ElementKind::Actor => self.model.actors.len(),
            ElementKind::Goal => self.model.goals.len(),
            ElementKind::Feature => self.model.features.len(),
            ElementKind::Event => self.model.events.len(),
            ElementKind::Situation => self.model.situations.len(),
            ElementKind::Indicator => self.model.indicators.len(),
        };
        self.spans.push((kind, index, pos));
    }

    fn declaration(&mut self) -> PResult<()> {
        let kw = match &self.peek().tok {
            Tok::Word(w) if DECLARATIONS.contains(&w.as_str()) => w.clone(),
            _ => {
                let expected: Vec<String> = DECLARATIONS.iter().map(|d| format!("`{d}`")).collect();
                let t = self.peek();
                let msg = if t.tok == Tok::Eof {
                    "expected declaration".to_string()
                } else {
                    format!("expected declaration, found {}", t.tok)
                };
                return Err(ParseDiagnostic {
                    line: t.pos.line,
                    col: t.pos.col,
                    message: msg,
                    expected,
                });
            }
        };
        self.next();
        match kw.as_str() {
            "actor" => self.actor(),
            "goal" => self.goal(),
            "feature" => self.feature(),
            "event" => self.event(),
            _ => self.situation(),
        }
    }

    fn actor(&mut self) -> PResult<()> {
        let (name, pos) = self.ident("actor name")?;
        self.declare(ElementKind::Actor, pos);
        self.model.actors.push(Actor { name });
        Ok(())
    }

    fn goal(&mut self) -> PResult<()> {
        let (name, pos) = self.ident("goal name")?;
        self.keyword("owner")?;
        let (owner, _) = self.ident("actor name")?;
        let description = self.string("goal description")?;
        self.declare(ElementKind::Goal, pos);
        self.model.goals.push(Goal {
            name,
            owner,
            description,
        });
        Ok(())
    }

    fn feature(&mut self) -> PResult<()> {
        let (name, pos) = self.ident("feature name")?;
        let kind = match &self.peek().tok {
            Tok::Word(w) if w == "continuous" => FeatureKind::Continuous,
            Tok::Word(w) if w == "integer" => FeatureKind::Integer,
            Tok::Word(w) if w == "categorical" => FeatureKind::Categorical,
            _ => return self.unexpected(&["`continuous`", "`integer`", "`categorical`"]),
        };
        self.next();
        let (domain, units) = if kind == FeatureKind::Categorical {
            self.eat(Tok::LBrace, "`{`")?;
            let mut values = Vec::new();
            if self.peek().tok != Tok::RBrace {
                loop {
                    let t = self.next();
                    match t.tok {
                        Tok::Word(w) | Tok::Number(w) | Tok::Str(w) => values.push(w),
                        _ => {
                            self.at -= 1;
                            return self.unexpected(&["category value"]);
                        }
                    }
                    if self.peek().tok == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
            }
            self.eat(Tok::RBrace, "`}`")?;
            (Domain::Set(values), String::new())
        } else {
            self.eat(Tok::LBracket, "`[`")?;
            let lo = self.number("lower bound")?;
            self.eat(Tok::Comma, "`,`")?;
            let hi = self.number("upper bound")?;
            self.eat(Tok::RBracket, "`]`")?;
            let units = match &self.peek().tok {
                Tok::Word(w) if w != "binds" => {
                    let w = w.clone();
                    self.next();
                    w
                }
                Tok::Number(n) => {
                    let n = n.clone();
                    self.next();
                    n
                }
                _ => return self.unexpected(&["units"]),
            };
            (Domain::Interval { lo, hi }, units)
        };
        self.keyword("binds")?;
        let binding = self.word("scenario parameter path")?;
        self.declare(ElementKind::Feature, pos);
        self.model.features.push(DomainFeature {
            name,
            kind,
            domain,
            units,
            binding,
        });
        Ok(())
    }

    fn event(&mut self) -> PResult<()> {
        let (name, pos) = self.ident("event name")?;
        let polarity = match &self.peek().tok {
            Tok::Word(w) if w == "positive" => Polarity::Positive,
            Tok::Word(w) if w == "negative" => Polarity::Negative,
            _ => return self.unexpected(&["`positive`", "`negative`"]),
        };
        self.next();
        self.keyword("when")?;
        let (metric, _) = self.ident("metric name")?;
        let op = match self.peek().tok {
            Tok::Lt => CompareOp::Lt,
            Tok::Gt => CompareOp::Gt,
            _ => return self.unexpected(&["`<`", "`>`"]),
        };
        self.next();
        let t = self.peek().clone();
        let threshold = match &t.tok {
            Tok::Number(_) => self.number("threshold")?,
            Tok::Eof => return self.unexpected(&["threshold"]),
            other => {
                return Err(err_at(
                    t.pos,
                    format!("threshold not a number: {other}"),
                    &["number"],
                ))
            }
        };
        self.keyword("impacts")?;
        let mut impacts = vec![self.impact()?];
        while self.peek().tok == Tok::Comma {
            self.next();
            impacts.push(self.impact()?);
        }
        let likelihood = if self.is_keyword("likelihood") {
            self.next();
            let fraction = self.number("likelihood fraction")?;
            self.keyword("of")?;
            let samples = self.count()?;
            Some(Likelihood { fraction, samples })
        } else {
            None
        };
        self.declare(ElementKind::Event, pos);
        self.model.events.push(Event {
            name,
            polarity,
            condition: Condition {
                metric,
                op,
                threshold,
            },
            impacts,
            likelihood,
        });
        Ok(())
    }

    fn impact(&mut self) -> PResult<Impact> {
        let sign = match self.peek().tok {
            Tok::Plus => Sign::Plus,
            Tok::Minus => Sign::Minus,
            _ => return self.unexpected(&["`+`", "`-`"]),
        };
        self.next();
        let (goal, _) = self.ident("goal name")?;
        Ok(Impact { goal, sign })
    }

    fn situation(&mut self) -> PResult<()> {
        let (name, pos) = self.ident("situation name")?;
        let description = self.string("situation description")?;
        self.keyword("scenario")?;
        let scenario_ref = self.string("scenario file")?;
        self.keyword("exposes")?;
        let exposes = self.ident_list("event name")?;
        self.keyword("features")?;
        let features = self.ident_list("feature name")?;
        let mut indicators = Vec::new();
        if self.is_keyword("indicators") {
            self.next();
            loop {
                let (ind, ipos) = self.ident("indicator name")?;
                self.eat(Tok::Colon, "`:`")?;
                let (metric, _) = self.ident("metric name")?;
                self.declare(ElementKind::Indicator, ipos);
                self.model.indicators.push(Indicator {
                    name: ind.clone(),
                    situation: name.clone(),
                    metric,
                });
                indicators.push(ind);
                if self.peek().tok == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.declare(ElementKind::Situation, pos);
        self.model.situations.push(Situation {
            name,
            description,
            scenario_ref,
            exposes,
            features,
            indicators,
        });
        Ok(())
    }
}

pub(crate) fn is_ident(w: &str) -> bool {
    let mut cs = w.chars();
    cs.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parse `.riskml` source.
///
/// Fails on syntax errors, duplicate names and unresolved references; other
/// well-formedness rules are left to [`validate`].
pub fn parse_risk_model(text: &str) -> Result<RiskModel, ParseError> {
    let mut p = Parser {
        toks: tokenize(text),
        at: 0,
        model: RiskModel::default(),
        spans: Vec::new(),
    };
    loop {
        if p.peek().tok == Tok::Eof && p.at > 0 {
            break;
        }
        if let Err(d) = p.declaration() {
            return Err(ParseError {
                diagnostics: vec![d],
            });
        }
    }

    let diagnostics: Vec<ParseDiagnostic> = validate(&p.model)
        .into_iter()
        .filter(|d| d.violation.is_resolution())
        .map(|d| {
            let pos = p
                .spans
                .iter()
                .find(|(k, i, _)| *k == d.kind && *i == d.index)
                .map(|s| s.2)
                .unwrap_or_default();
            ParseDiagnostic {
                line: pos.line,
                col: pos.col,
                message: d.to_string(),
                expected: Vec::new(),
            }
        })
        .collect();
    if diagnostics.is_empty() {
        Ok(p.model)
    } else {
        Err(ParseError { diagnostics })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
        actor operator
        goal safe owner operator "keep distance"
        feature illuminance continuous [100, 10000] lux binds environment.illuminance
        event insufficient_distance negative when min_margin < 0 impacts -safe
        situation close_collaboration "hands near the arm" scenario "cell.scenario"
            exposes insufficient_distance features illuminance
    "#;

    #[test]
    fn six_elements() {
        let m = parse_risk_model(SMALL).unwrap();
        assert_eq!(m.actors.len(), 1);
        assert_eq!(m.goals.len(), 1);
        assert_eq!(m.features.len(), 1);
        assert_eq!(m.events.len(), 1);
        assert_eq!(m.situations.len(), 1);
        assert!(m.indicators.is_empty());
        let f = &m.features[0];
        assert_eq!(f.kind, FeatureKind::Continuous);
        assert_eq!(f.domain, Domain::Interval { lo: 100.0, hi: 10000.0 });
        assert_eq!(f.units, "lux");
        let e = &m.events[0];
        assert_eq!(e.condition.metric, "min_margin");
        assert_eq!(e.condition.op, CompareOp::Lt);
        assert_eq!(e.condition.threshold, 0.0);
        assert_eq!(e.impacts, vec![Impact { goal: "safe".into(), sign: Sign::Minus }]);
        assert_eq!(m.situations[0].exposes, vec!["insufficient_distance".to_string()]);
    }

    #[test]
    fn empty_input() {
        let e = parse_risk_model("").unwrap_err();
        assert_eq!(e.diagnostics.len(), 1);
        assert!(e.diagnostics[0].message.starts_with("expected declaration"));
        assert_eq!((e.diagnostics[0].line, e.diagnostics[0].col), (1, 1));
        assert!(parse_risk_model("  # only a comment\n").is_err());
    }

    #[test]
    fn bad_operator_points_at_token() {
        let src = SMALL.replace("min_margin < 0", "min_margin ! 0");
        let e = parse_risk_model(&src).unwrap_err();
        let d = &e.diagnostics[0];
        let line = src.lines().nth(d.line - 1).unwrap();
        assert_eq!(line.chars().nth(d.col - 1), Some('!'));
        assert_eq!(d.expected, vec!["`<`", "`>`"]);
    }

    #[test]
    fn threshold_not_a_number() {
        let src = SMALL.replace("min_margin < 0", "min_margin < zero");
        let e = parse_risk_model(&src).unwrap_err();
        assert!(e.diagnostics[0].message.contains("threshold not a number"));
    }

    #[test]
    fn duplicate_and_unresolved_names() {
        let src = format!("{SMALL}\nactor operator\n");
        let e = parse_risk_model(&src).unwrap_err();
        assert_eq!(e.diagnostics.len(), 1);
        assert!(e.diagnostics[0].message.contains("duplicate actor operator"));
        assert_eq!(e.diagnostics[0].line, src.lines().count());

        let src = SMALL.replace("impacts -safe", "impacts -g9");
        let e = parse_risk_model(&src).unwrap_err();
        assert!(e.diagnostics[0].message.contains("unresolved goal g9"));
        assert_eq!(e.diagnostics[0].line, 5);
    }

    #[test]
    fn order_independent_references() {
        let src = r#"
            situation s "x" scenario "y" exposes e features f
            event e negative when min_margin < 0 impacts -g
            feature f integer [1, 3] count binds belt.object_count
            goal g owner a "g"
            actor a
        "#;
        let m = parse_risk_model(src).unwrap();
        assert_eq!(m.situations[0].features, vec!["f".to_string()]);
        assert_eq!(m.features[0].kind, FeatureKind::Integer);
    }

    #[test]
    fn categorical_indicators_and_likelihood() {
        let src = r#"
            actor a
            goal g owner a "g"
            feature shade categorical {red, green, "dark blue"} binds environment.shade
            event e negative when collision > 0.5 impacts -g, +g likelihood 0.25 of 40
            situation s "x" scenario "y" exposes e features shade indicators gap:min_distance, miss:detection_miss_ratio
        "#;
        let m = parse_risk_model(src).unwrap();
        assert_eq!(
            m.features[0].domain,
            Domain::Set(vec!["red".into(), "green".into(), "dark blue".into()])
        );
        assert_eq!(m.events[0].impacts.len(), 2);
        assert_eq!(
            m.events[0].likelihood,
            Some(Likelihood { fraction: 0.25, samples: 40 })
        );
        assert_eq!(m.indicators.len(), 2);
        assert_eq!(m.indicators[1].situation, "s");
        assert_eq!(m.situations[0].indicators, vec!["gap", "miss"]);
    }

    #[test]
    fn truncated_declaration() {
        let e = parse_risk_model("actor a\ngoal g owner").unwrap_err();
        assert!(e.diagnostics[0].message.contains("end of input"));
        let e = parse_risk_model("situation s \"unterminated").unwrap_err();
        assert!(e.diagnostics[0].message.contains("unterminated string"));
    }
}
