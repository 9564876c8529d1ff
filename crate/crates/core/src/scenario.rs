//! A human-editable scenario file: universe, initial holdings, policies,
//! context facts and named proposals, in one document.
//!
//! ```text
//! users Alice Bob Carl
//! resources sb lw hw hp
//!
//! owns Alice { sb: 1 }
//! owns Carl { hw: 3, hp: 2 }
//!
//! context is_paladin(Bob)
//!
//! policy Alice {
//!     Gives(Me, sb, u) :- Gives(u', hw, Me)   // A1
//! }
//!
//! propose circular {
//!     exchange { Alice -sb-> Bob, Bob -lw-> Carl, Carl -hw-> Alice }
//!     expect fair
//! }
//! ```
//!
//! `users` and `resources` fit on one line each; `//` comments run to the
//! end of the line everywhere. A proposal holds an `exchange` multiset, a
//! `target` state, or a `want <user> <resources…>` request, plus an
//! optional expected verdict (`fair`, `unfair`, `eventually-fair`,
//! `granted`, `denied`).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{Exchange, ResourceId, State, Transfer, Universe, UserId};
use crate::muac::{parse_ruleset, Context, MuacError, Ruleset};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("scenario line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("scenario line {line}: unknown {what} {name:?}")]
    Unknown { line: usize, what: &'static str, name: String },
    #[error("policy of {owner}: {source}")]
    Policy { owner: UserId, source: MuacError },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expectation {
    Fair,
    Unfair,
    EventuallyFair,
    Granted,
    Denied,
}

impl Expectation {
    fn parse(word: &str, line: usize) -> Result<Self, ScenarioError> {
        match word {
            "fair" => Ok(Expectation::Fair),
            "unfair" => Ok(Expectation::Unfair),
            "eventually-fair" => Ok(Expectation::EventuallyFair),
            "granted" => Ok(Expectation::Granted),
            "denied" => Ok(Expectation::Denied),
            other => Err(ScenarioError::Malformed {
                line,
                message: format!("unknown expectation {other:?}"),
            }),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Expectation::Fair => "fair",
            Expectation::Unfair => "unfair",
            Expectation::EventuallyFair => "eventually-fair",
            Expectation::Granted => "granted",
            Expectation::Denied => "denied",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProposalKind {
    Exchange(Exchange),
    Target(State),
    Want { user: UserId, resources: Vec<ResourceId> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposal {
    pub name: String,
    pub kind: ProposalKind,
    pub expect: Option<Expectation>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub universe: Universe,
    pub state: State,
    pub policy_sources: BTreeMap<UserId, String>,
    pub rulesets: BTreeMap<UserId, Ruleset>,
    pub context: Context,
    pub proposals: Vec<Proposal>,
}

impl Scenario {
    /// Rulesets for every declared user, empty ones included.
    pub fn all_rulesets(&self) -> BTreeMap<UserId, Ruleset> {
        let mut out = self.rulesets.clone();
        for u in &self.universe.users {
            out.entry(u.clone()).or_insert_with(|| Ruleset { owner: u.clone(), rules: vec![] });
        }
        out
    }
}

struct Scanner {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Scanner {
    fn new(source: &str) -> Self {
        Scanner { chars: source.chars().collect(), pos: 0, line: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied();
        if let Some(c) = c {
            self.pos += 1;
            if c == '\n' {
                self.line += 1;
            }
        }
        c
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_space(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.chars.get(self.pos + 1) == Some(&'/') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
    }

    /// Skips spaces and comments without crossing a newline.
    fn skip_inline_space(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() && c != '\n' => {
                    self.bump();
                }
                Some('/') if self.chars.get(self.pos + 1) == Some(&'/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn err(&self, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Malformed { line: self.line, message: message.into() }
    }

    fn word(&mut self) -> Option<String> {
        self.skip_space();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '\''
            || c == '-')
        {
            // Words never swallow arrows.
            if self.peek() == Some('-') && self.chars.get(self.pos + 1) != Some(&'-') {
                let rest: String = self.chars[self.pos..].iter().take(2).collect();
                if rest.starts_with("-") && start != self.pos {
                    break;
                }
            }
            self.bump();
        }
        if start == self.pos {
            None
        } else {
            Some(self.chars[start..self.pos].iter().collect())
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ScenarioError> {
        self.skip_space();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '\'') {
            self.bump();
        }
        if start == self.pos {
            Err(self.err(format!("expected {what}")))
        } else {
            Ok(self.chars[start..self.pos].iter().collect())
        }
    }

    fn expect_char(&mut self, c: char) -> Result<(), ScenarioError> {
        self.skip_space();
        if self.peek() == Some(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {c:?}")))
        }
    }

    fn eat_char(&mut self, c: char) -> bool {
        self.skip_space();
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<u64, ScenarioError> {
        self.skip_space();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        if start == self.pos {
            return Err(self.err("expected a number"));
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse().map_err(|_| self.err("number out of range"))
    }

    /// The raw text up to the matching close brace (the opening one has
    /// been consumed).
    fn raw_block(&mut self) -> Result<String, ScenarioError> {
        let start = self.pos;
        let mut depth = 1usize;
        while let Some(c) = self.bump() {
            match c {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        let end = self.pos - 1;
                        return Ok(self.chars[start..end].iter().collect());
                    }
                }
                _ => {}
            }
        }
        Err(self.err("unterminated block"))
    }
}

/// Parses a scenario document.
pub fn parse_scenario(source: &str) -> Result<Scenario, ScenarioError> {
    let mut sc = Scanner::new(source);
    let mut users: Vec<UserId> = Vec::new();
    let mut resources: Vec<ResourceId> = Vec::new();
    let mut state = State::new();
    let mut policy_sources: BTreeMap<UserId, String> = BTreeMap::new();
    let mut context = Context::new();
    let mut proposals: Vec<Proposal> = Vec::new();

    loop {
        sc.skip_space();
        if sc.peek().is_none() {
            break;
        }
        let keyword = sc.ident("a section keyword")?;
        match keyword.as_str() {
            "users" => loop {
                sc.skip_inline_space();
                match sc.peek() {
                    Some('\n') | None => break,
                    _ => users.push(UserId::new(sc.ident("a user name")?)),
                }
            },
            "resources" => loop {
                sc.skip_inline_space();
                match sc.peek() {
                    Some('\n') | None => break,
                    _ => resources.push(ResourceId::new(sc.ident("a resource name")?)),
                }
            },
            "owns" => {
                let name = sc_ident(&mut sc)?;
                let user = known_user(&sc, &users, name)?;
                sc.expect_char('{')?;
                parse_holdings(&mut sc, &resources, |r, n| state.add(&user, &r, n))?;
            }
            "context" => {
                let pred = sc.ident("a predicate name")?;
                sc.expect_char('(')?;
                let mut args = Vec::new();
                if !sc.eat_char(')') {
                    loop {
                        let name = sc_ident(&mut sc)?;
                        args.push(known_user(&sc, &users, name)?);
                        if sc.eat_char(')') {
                            break;
                        }
                        sc.expect_char(',')?;
                    }
                }
                context
                    .add_fact(pred, args)
                    .map_err(|e| sc.err(e.to_string()))?;
            }
            "policy" => {
                let name = sc_ident(&mut sc)?;
                let owner = known_user(&sc, &users, name)?;
                sc.expect_char('{')?;
                let body = sc.raw_block()?;
                policy_sources.insert(owner, body);
            }
            "propose" => {
                let name = sc.ident("a proposal name")?;
                sc.expect_char('{')?;
                proposals.push(parse_proposal(&mut sc, name, &users, &resources)?);
            }
            other => return Err(sc.err(format!("unknown section {other:?}"))),
        }
    }

    let universe = Universe {
        users: users.iter().cloned().collect(),
        resources: resources.iter().cloned().collect(),
    };
    let mut rulesets = BTreeMap::new();
    for (owner, src) in &policy_sources {
        let rs = parse_ruleset(src, owner.clone())
            .map_err(|source| ScenarioError::Policy { owner: owner.clone(), source })?;
        for rule in &rs.rules {
            if !universe.resources.contains(&rule.head_resource) {
                return Err(ScenarioError::Unknown {
                    line: 0,
                    what: "resource",
                    name: rule.head_resource.to_string(),
                });
            }
        }
        rulesets.insert(owner.clone(), rs);
    }

    Ok(Scenario { universe, state, policy_sources, rulesets, context, proposals })
}

fn sc_ident(sc: &mut Scanner) -> Result<String, ScenarioError> {
    sc.ident("a name")
}

fn known_user(sc: &Scanner, users: &[UserId], name: String) -> Result<UserId, ScenarioError> {
    let id = UserId::new(name);
    if users.contains(&id) {
        Ok(id)
    } else {
        Err(ScenarioError::Unknown { line: sc.line, what: "user", name: id.to_string() })
    }
}

fn known_resource(
    sc: &Scanner,
    resources: &[ResourceId],
    name: String,
) -> Result<ResourceId, ScenarioError> {
    let id = ResourceId::new(name);
    if resources.contains(&id) {
        Ok(id)
    } else {
        Err(ScenarioError::Unknown { line: sc.line, what: "resource", name: id.to_string() })
    }
}

/// `res: count, res: count, … }` — the closing brace is consumed.
fn parse_holdings(
    sc: &mut Scanner,
    resources: &[ResourceId],
    mut add: impl FnMut(ResourceId, u64),
) -> Result<(), ScenarioError> {
    if sc.eat_char('}') {
        return Ok(());
    }
    loop {
        let name = sc_ident(sc)?;
        let res = known_resource(sc, resources, name)?;
        sc.expect_char(':')?;
        let n = sc.number()?;
        add(res, n);
        if sc.eat_char('}') {
            return Ok(());
        }
        sc.expect_char(',')?;
    }
}

fn parse_transfer(
    sc: &mut Scanner,
    users: &[UserId],
    resources: &[ResourceId],
) -> Result<Transfer, ScenarioError> {
    let name = sc_ident(sc)?;
    let giver = known_user(sc, users, name)?;
    sc.expect_char('-')?;
    let name = sc_ident(sc)?;
    let res = known_resource(sc, resources, name)?;
    sc.expect_char('-')?;
    sc.expect_char('>')?;
    let name = sc_ident(sc)?;
    let receiver = known_user(sc, users, name)?;
    Transfer::new(giver, res, receiver).map_err(|e| sc.err(e.to_string()))
}

fn parse_proposal(
    sc: &mut Scanner,
    name: String,
    users: &[UserId],
    resources: &[ResourceId],
) -> Result<Proposal, ScenarioError> {
    let mut kind: Option<ProposalKind> = None;
    let mut expect = None;
    loop {
        if sc.eat_char('}') {
            break;
        }
        let keyword = sc.ident("a proposal item")?;
        match keyword.as_str() {
            "exchange" => {
                sc.expect_char('{')?;
                let mut exc = Exchange::new();
                if !sc.eat_char('}') {
                    loop {
                        exc.insert(parse_transfer(sc, users, resources)?, 1);
                        if sc.eat_char('}') {
                            break;
                        }
                        sc.expect_char(',')?;
                    }
                }
                kind = Some(ProposalKind::Exchange(exc));
            }
            "target" => {
                sc.expect_char('{')?;
                let mut st = State::new();
                if !sc.eat_char('}') {
                    loop {
                        let name = sc_ident(sc)?;
                        let user = known_user(sc, users, name)?;
                        sc.expect_char(':')?;
                        sc.expect_char('{')?;
                        parse_holdings(sc, resources, |r, n| st.add(&user, &r, n))?;
                        if sc.eat_char('}') {
                            break;
                        }
                        sc.expect_char(',')?;
                    }
                }
                kind = Some(ProposalKind::Target(st));
            }
            "want" => {
                let name = sc_ident(sc)?;
                let user = known_user(sc, users, name)?;
                let mut wanted = Vec::new();
                loop {
                    sc.skip_inline_space();
                    match sc.peek() {
                        Some('\n') | Some('}') | None => break,
                        _ => {
                            let name = sc_ident(sc)?;
                            wanted.push(known_resource(sc, resources, name)?);
                        }
                    }
                }
                if wanted.is_empty() {
                    return Err(sc.err("want needs at least one resource"));
                }
                kind = Some(ProposalKind::Want { user, resources: wanted });
            }
            "expect" => {
                let line = sc.line;
                let word = sc.word().ok_or_else(|| sc.err("expected a verdict"))?;
                expect = Some(Expectation::parse(&word, line)?);
            }
            other => return Err(sc.err(format!("unknown proposal item {other:?}"))),
        }
    }
    let kind = kind.ok_or_else(|| {
        sc.err(format!("proposal {name:?} declares no exchange, target or want"))
    })?;
    Ok(Proposal { name, kind, expect })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
// A three-player card table.
users Alice Bob Carl
resources sb lw hw hp

owns Alice { sb: 1 }
owns Bob { lw: 1 }
owns Carl { hw: 3, hp: 2 }

context is_paladin(Bob)
context is_paladin(Carl)

policy Alice {
    Gives(Me, sb, u) :- Gives(u', hw, Me)    // A1
    Gives(Me, sb, u) :- Gives(u', hp, Me)    // A2
}

propose circular {
    exchange { Alice -sb-> Bob, Bob -lw-> Carl, Carl -hw-> Alice }
    expect fair
}

propose rearranged {
    target { Alice: { hw: 1 }, Bob: { sb: 1 }, Carl: { lw: 1, hw: 2, hp: 2 } }
}

propose alice_wants {
    want Alice hw
    expect granted
}
"#;

    #[test]
    fn parses_the_sample_scenario() {
        let s = parse_scenario(SAMPLE).unwrap();
        assert_eq!(s.universe.users.len(), 3);
        assert_eq!(s.universe.resources.len(), 4);
        assert_eq!(s.state.count(&UserId::new("Carl"), &ResourceId::new("hw")), 3);
        assert_eq!(s.rulesets[&UserId::new("Alice")].rules.len(), 2);
        assert!(s.context.holds("is_paladin", &[UserId::new("Bob")]));
        assert_eq!(s.proposals.len(), 3);
        match &s.proposals[0].kind {
            ProposalKind::Exchange(exc) => assert_eq!(exc.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(s.proposals[0].expect, Some(Expectation::Fair));
        match &s.proposals[1].kind {
            ProposalKind::Target(st) => {
                assert_eq!(st.count(&UserId::new("Carl"), &ResourceId::new("lw")), 1)
            }
            other => panic!("unexpected {other:?}"),
        }
        match &s.proposals[2].kind {
            ProposalKind::Want { user, resources } => {
                assert_eq!(user, &UserId::new("Alice"));
                assert_eq!(resources, &[ResourceId::new("hw")]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undeclared_names_are_rejected() {
        let bad = "users a\nresources x\nowns b { x: 1 }\n";
        assert!(matches!(
            parse_scenario(bad),
            Err(ScenarioError::Unknown { what: "user", .. })
        ));
        let bad = "users a\nresources x\nowns a { y: 1 }\n";
        assert!(matches!(
            parse_scenario(bad),
            Err(ScenarioError::Unknown { what: "resource", .. })
        ));
    }

    #[test]
    fn policy_errors_carry_the_owner() {
        let bad = "users a b\nresources x\npolicy a { Gives(Me, x, Me) }\n";
        assert!(matches!(parse_scenario(bad), Err(ScenarioError::Policy { .. })));
    }

    #[test]
    fn malformed_sections_report_lines() {
        let bad = "users a\nresources x\nowns a { x 1 }\n";
        match parse_scenario(bad) {
            Err(ScenarioError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
