//! The MuAC policy language: a Datalog-flavored ruleset per user.
//!
//! ```text
//! r ::= Gives(Me, res, u) :- GiveLs with PredLs
//! ```
//!
//! Both the `:-` tail and the `with` clause are optional. `//` starts a
//! line comment. Rules are separated by newlines or `;`; a line whose
//! rule is syntactically incomplete (open parenthesis, trailing `:-`,
//! `with` or `,`) continues on the next line. Resource and predicate
//! names are lowercase-initial tokens; a user position holds `Me` or a
//! lowercase-initial variable. Concrete user names are not part of the
//! grammar and are rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    ExchangeApproval, ExchangePolicy, ResourceId, Transfer, UserId,
};
use crate::multiset::Multiset;

/// `Me` or a user variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UserTerm {
    Me,
    Var(String),
}

impl fmt::Display for UserTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UserTerm::Me => f.write_str("Me"),
            UserTerm::Var(v) => f.write_str(v),
        }
    }
}

/// A `Gives(giver, res, receiver)` atom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GiveAtom {
    pub giver: UserTerm,
    pub resource: ResourceId,
    pub receiver: UserTerm,
}

/// A `p(u1, ..., un)` atom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredAtom {
    pub name: String,
    pub args: Vec<UserTerm>,
}

/// One parsed rule: the head grant, the required give atoms, and the
/// predicate conditions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleAst {
    pub head_resource: ResourceId,
    pub head_requester: String,
    pub gives: Vec<GiveAtom>,
    pub preds: Vec<PredAtom>,
}

/// A user's parsed policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ruleset {
    pub owner: UserId,
    pub rules: Vec<RuleAst>,
}

/// An interpretation of the predicate symbols: which user tuples satisfy
/// each predicate.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Context {
    facts: BTreeSet<(String, Vec<UserId>)>,
}

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_fact(&mut self, pred: impl Into<String>, args: Vec<UserId>) -> Result<(), MuacError> {
        let pred = pred.into();
        if let Some(arity) = self.arity(&pred) {
            if arity != args.len() {
                return Err(MuacError::Semantic {
                    message: format!(
                        "predicate {pred} used with arity {} but declared with {arity}",
                        args.len()
                    ),
                });
            }
        }
        self.facts.insert((pred, args));
        Ok(())
    }

    pub fn remove_fact(&mut self, pred: &str, args: &[UserId]) -> bool {
        self.facts.remove(&(pred.to_string(), args.to_vec()))
    }

    pub fn holds(&self, pred: &str, args: &[UserId]) -> bool {
        self.facts.contains(&(pred.to_string(), args.to_vec()))
    }

    pub fn arity(&self, pred: &str) -> Option<usize> {
        self.facts.iter().find(|(p, _)| p == pred).map(|(_, a)| a.len())
    }

    pub fn facts(&self) -> impl Iterator<Item = (&str, &[UserId])> {
        self.facts.iter().map(|(p, a)| (p.as_str(), a.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MuacError {
    #[error("parse error at {line}:{col}: {message}")]
    Parse { line: usize, col: usize, message: String },
    #[error("semantic error: {message}")]
    Semantic { message: String },
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Semicolon,
    Turnstile,
    Newline,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(source: &str) -> Result<Vec<Spanned>, MuacError> {
    let mut out = Vec::new();
    for (li, line) in source.lines().enumerate() {
        let line_no = li + 1;
        let content = match line.find("//") {
            Some(i) => &line[..i],
            None => line,
        };
        let bytes: Vec<char> = content.chars().collect();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            let col = i + 1;
            match c {
                ' ' | '\t' | '\r' => i += 1,
                '(' => {
                    out.push(Spanned { tok: Tok::LParen, line: line_no, col });
                    i += 1;
                }
                ')' => {
                    out.push(Spanned { tok: Tok::RParen, line: line_no, col });
                    i += 1;
                }
                ',' => {
                    out.push(Spanned { tok: Tok::Comma, line: line_no, col });
                    i += 1;
                }
                ';' => {
                    out.push(Spanned { tok: Tok::Semicolon, line: line_no, col });
                    i += 1;
                }
                ':' => {
                    if bytes.get(i + 1) == Some(&'-') {
                        out.push(Spanned { tok: Tok::Turnstile, line: line_no, col });
                        i += 2;
                    } else {
                        return Err(MuacError::Parse {
                            line: line_no,
                            col,
                            message: "expected ':-'".into(),
                        });
                    }
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < bytes.len()
                        && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_' || bytes[i] == '\'')
                    {
                        i += 1;
                    }
                    let word: String = bytes[start..i].iter().collect();
                    out.push(Spanned { tok: Tok::Ident(word), line: line_no, col });
                }
                other => {
                    return Err(MuacError::Parse {
                        line: line_no,
                        col,
                        message: format!("unexpected character {other:?}"),
                    });
                }
            }
        }
        out.push(Spanned { tok: Tok::Newline, line: line_no, col: bytes.len() + 1 });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, message: impl Into<String>) -> MuacError {
        let (line, col) = self
            .peek()
            .map(|s| (s.line, s.col))
            .or_else(|| self.toks.last().map(|s| (s.line, s.col)))
            .unwrap_or((1, 1));
        MuacError::Parse { line, col, message: message.into() }
    }

    /// Skips newlines and semicolons between rules.
    fn skip_separators(&mut self) {
        while matches!(self.peek().map(|s| &s.tok), Some(Tok::Newline) | Some(Tok::Semicolon)) {
            self.pos += 1;
        }
    }

    /// Consumes a newline that merely continues the current rule.
    fn skip_continuation_newlines(&mut self) {
        while matches!(self.peek().map(|s| &s.tok), Some(Tok::Newline)) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Spanned, MuacError> {
        match self.next() {
            Some(s) if s.tok == tok => Ok(s),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err_here(format!("expected {what}")))
            }
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize, usize), MuacError> {
        match self.next() {
            Some(Spanned { tok: Tok::Ident(w), line, col }) => Ok((w, line, col)),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err_here(format!("expected {what}")))
            }
        }
    }

    fn user_term(&mut self) -> Result<UserTerm, MuacError> {
        let (w, line, col) = self.ident("a user term (Me or a variable)")?;
        if w == "Me" {
            return Ok(UserTerm::Me);
        }
        if w.starts_with(|c: char| c.is_ascii_uppercase()) {
            return Err(MuacError::Parse {
                line,
                col,
                message: format!("user constants are not allowed in rules: {w}"),
            });
        }
        Ok(UserTerm::Var(w))
    }

    fn lower_ident(&mut self, what: &str) -> Result<String, MuacError> {
        let (w, line, col) = self.ident(what)?;
        if !w.starts_with(|c: char| c.is_ascii_lowercase()) {
            return Err(MuacError::Parse {
                line,
                col,
                message: format!("{what} must start with a lowercase letter: {w}"),
            });
        }
        Ok(w)
    }

    /// `Gives ( term , res , term )`
    fn give_atom(&mut self) -> Result<GiveAtom, MuacError> {
        let (kw, line, col) = self.ident("'Gives'")?;
        if kw != "Gives" {
            return Err(MuacError::Parse { line, col, message: format!("expected 'Gives', found {kw}") });
        }
        self.expect(Tok::LParen, "'('")?;
        self.skip_continuation_newlines();
        let giver = self.user_term()?;
        self.expect(Tok::Comma, "','")?;
        self.skip_continuation_newlines();
        let resource = ResourceId::new(self.lower_ident("a resource name")?);
        self.expect(Tok::Comma, "','")?;
        self.skip_continuation_newlines();
        let receiver = self.user_term()?;
        self.expect(Tok::RParen, "')'")?;
        if giver == receiver {
            return Err(MuacError::Semantic {
                message: format!("giver and receiver coincide in Gives({giver}, {resource}, {receiver})"),
            });
        }
        Ok(GiveAtom { giver, resource, receiver })
    }

    fn pred_atom(&mut self) -> Result<PredAtom, MuacError> {
        let name = self.lower_ident("a predicate name")?;
        self.expect(Tok::LParen, "'('")?;
        let mut args = Vec::new();
        loop {
            self.skip_continuation_newlines();
            args.push(self.user_term()?);
            match self.peek().map(|s| &s.tok) {
                Some(Tok::Comma) => {
                    self.pos += 1;
                }
                _ => break,
            }
        }
        self.expect(Tok::RParen, "')'")?;
        Ok(PredAtom { name, args })
    }

    fn at_rule_end(&self) -> bool {
        matches!(self.peek().map(|s| &s.tok), None | Some(Tok::Newline) | Some(Tok::Semicolon))
    }

    /// A trailing newline continues the rule only when followed by a body
    /// keyword or connective, as in listings that wrap after `:-`.
    fn rule(&mut self) -> Result<RuleAst, MuacError> {
        let head = self.give_atom()?;
        if head.giver != UserTerm::Me {
            return Err(MuacError::Semantic {
                message: "a rule head must have Me as the giver".into(),
            });
        }
        let requester = match &head.receiver {
            UserTerm::Me => {
                return Err(MuacError::Semantic {
                    message: "a rule head must not have Me as the requester".into(),
                })
            }
            UserTerm::Var(v) => v.clone(),
        };

        let mut gives = Vec::new();
        let mut preds = Vec::new();

        if matches!(self.peek().map(|s| &s.tok), Some(Tok::Turnstile)) {
            self.pos += 1;
            self.skip_continuation_newlines();
            // Give atoms are juxtaposed or comma-separated.
            while matches!(self.peek().map(|s| &s.tok), Some(Tok::Ident(w)) if w == "Gives") {
                let atom = self.give_atom()?;
                if atom.giver == UserTerm::Me {
                    return Err(MuacError::Semantic {
                        message: "a required give must not have Me as the giver".into(),
                    });
                }
                gives.push(atom);
                if matches!(self.peek().map(|s| &s.tok), Some(Tok::Comma)) {
                    self.pos += 1;
                    self.skip_continuation_newlines();
                }
            }
        }

        if matches!(self.peek().map(|s| &s.tok), Some(Tok::Ident(w)) if w == "with") {
            self.pos += 1;
            self.skip_continuation_newlines();
            loop {
                preds.push(self.pred_atom()?);
                if matches!(self.peek().map(|s| &s.tok), Some(Tok::Comma)) {
                    self.pos += 1;
                    self.skip_continuation_newlines();
                    continue;
                }
                if matches!(self.peek().map(|s| &s.tok), Some(Tok::Ident(w)) if w != "Gives" && w != "with")
                {
                    continue;
                }
                break;
            }
        }

        if !self.at_rule_end() {
            return Err(self.err_here("expected end of rule"));
        }

        Ok(RuleAst { head_resource: head.resource, head_requester: requester, gives, preds })
    }
}

/// Rules wrap to the next line after `:-`, `with` or a comma; flatten
/// those newlines before rule-by-rule parsing.
fn splice_continuations(toks: Vec<Spanned>) -> Vec<Spanned> {
    let mut out: Vec<Spanned> = Vec::new();
    let mut depth = 0usize;
    for s in toks {
        match &s.tok {
            Tok::LParen => depth += 1,
            Tok::RParen => depth = depth.saturating_sub(1),
            Tok::Newline => {
                let continues = depth > 0
                    || matches!(
                        out.last().map(|p| &p.tok),
                        Some(Tok::Turnstile) | Some(Tok::Comma)
                    )
                    || matches!(out.last().map(|p| &p.tok), Some(Tok::Ident(w)) if w == "with");
                if continues {
                    continue;
                }
            }
            _ => {}
        }
        out.push(s);
    }
    out
}

/// Parses a MuAC source file into the ruleset of `owner`.
pub fn parse_ruleset(source: &str, owner: UserId) -> Result<Ruleset, MuacError> {
    let toks = splice_continuations(lex(source)?);
    let mut parser = Parser { toks, pos: 0 };
    let mut rules = Vec::new();
    loop {
        parser.skip_separators();
        if parser.peek().is_none() {
            break;
        }
        rules.push(parser.rule()?);
    }
    let rs = Ruleset { owner, rules };
    check_arities(&rs)?;
    Ok(rs)
}

fn check_arities(rs: &Ruleset) -> Result<(), MuacError> {
    let mut arities: BTreeMap<&str, usize> = BTreeMap::new();
    for rule in &rs.rules {
        for p in &rule.preds {
            match arities.get(p.name.as_str()) {
                Some(&a) if a != p.args.len() => {
                    return Err(MuacError::Semantic {
                        message: format!(
                            "predicate {} used with arities {} and {}",
                            p.name,
                            a,
                            p.args.len()
                        ),
                    });
                }
                _ => {
                    arities.insert(&p.name, p.args.len());
                }
            }
        }
    }
    Ok(())
}

/// Renders a ruleset back to MuAC source. `parse_ruleset` of the output
/// yields the same AST.
pub fn print_ruleset(rs: &Ruleset) -> String {
    let mut out = String::new();
    for rule in &rs.rules {
        out.push_str(&format!("Gives(Me, {}, {})", rule.head_resource, rule.head_requester));
        if !rule.gives.is_empty() {
            out.push_str(" :- ");
            let parts: Vec<String> = rule
                .gives
                .iter()
                .map(|g| format!("Gives({}, {}, {})", g.giver, g.resource, g.receiver))
                .collect();
            out.push_str(&parts.join(" "));
        } else if !rule.preds.is_empty() {
            out.push_str(" :-");
        }
        if !rule.preds.is_empty() {
            out.push_str(" with ");
            let parts: Vec<String> = rule
                .preds
                .iter()
                .map(|p| {
                    let args: Vec<String> = p.args.iter().map(|a| a.to_string()).collect();
                    format!("{}({})", p.name, args.join(", "))
                })
                .collect();
            out.push_str(&parts.join(" "));
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Interpretation

/// How many variable assignments the interpretation enumerated, per rule,
/// before any filtering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterpStats {
    pub assignments_per_rule: Vec<u64>,
}

/// The distinct variables of a rule in order of first occurrence
/// (head first, then gives, then predicates).
pub fn rule_variables(rule: &RuleAst) -> Vec<String> {
    let mut vars = Vec::new();
    let mut push = |t: &UserTerm| {
        if let UserTerm::Var(v) = t {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
    };
    push(&UserTerm::Var(rule.head_requester.clone()));
    for g in &rule.gives {
        push(&g.giver);
        push(&g.receiver);
    }
    for p in &rule.preds {
        for a in &p.args {
            push(a);
        }
    }
    vars
}

fn resolve(term: &UserTerm, owner: &UserId, assignment: &BTreeMap<String, UserId>) -> UserId {
    match term {
        UserTerm::Me => owner.clone(),
        UserTerm::Var(v) => assignment[v].clone(),
    }
}

/// Interprets a ruleset over a finite user universe and a context,
/// producing the owner's exchange policy.
///
/// Every assignment of the rule's variables to users is enumerated; an
/// assignment survives when giver and receiver differ inside each
/// `Gives` atom (the head included), all predicate conditions hold, and
/// the resulting payoff never has the owner as a giver.
pub fn interpret_ruleset(rs: &Ruleset, ctx: &Context, universe: &BTreeSet<UserId>) -> ExchangePolicy {
    interpret_ruleset_counting(rs, ctx, universe).0
}

pub fn interpret_ruleset_counting(
    rs: &Ruleset,
    ctx: &Context,
    universe: &BTreeSet<UserId>,
) -> (ExchangePolicy, InterpStats) {
    let mut policy = ExchangePolicy::empty(rs.owner.clone());
    let mut stats = InterpStats { assignments_per_rule: Vec::new() };
    let users: Vec<UserId> = universe.iter().cloned().collect();

    for rule in &rs.rules {
        let vars = rule_variables(rule);
        let mut visited = 0u64;
        let mut assignment: BTreeMap<String, UserId> = BTreeMap::new();
        enumerate_assignments(&vars, 0, &users, &mut assignment, &mut |asg| {
            visited += 1;
            if let Some(approval) = instantiate(rule, &rs.owner, asg, ctx) {
                policy.approvals.insert(approval);
            }
        });
        stats.assignments_per_rule.push(visited);
    }
    (policy, stats)
}

fn enumerate_assignments(
    vars: &[String],
    idx: usize,
    users: &[UserId],
    assignment: &mut BTreeMap<String, UserId>,
    visit: &mut impl FnMut(&BTreeMap<String, UserId>),
) {
    if idx == vars.len() {
        visit(assignment);
        return;
    }
    for u in users {
        assignment.insert(vars[idx].clone(), u.clone());
        enumerate_assignments(vars, idx + 1, users, assignment, visit);
    }
    assignment.remove(&vars[idx]);
}

fn instantiate(
    rule: &RuleAst,
    owner: &UserId,
    asg: &BTreeMap<String, UserId>,
    ctx: &Context,
) -> Option<ExchangeApproval> {
    // In-atom distinctness, head included.
    let requester = asg[&rule.head_requester].clone();
    if &requester == owner {
        return None;
    }
    let mut payoff = Multiset::new();
    for g in &rule.gives {
        let giver = resolve(&g.giver, owner, asg);
        let receiver = resolve(&g.receiver, owner, asg);
        if giver == receiver {
            return None;
        }
        // An approval never pays with the owner's own resources.
        if &giver == owner {
            return None;
        }
        payoff.insert(Transfer { giver, resource: g.resource.clone(), receiver }, 1);
    }
    for p in &rule.preds {
        let args: Vec<UserId> = p.args.iter().map(|a| resolve(a, owner, asg)).collect();
        if !ctx.holds(&p.name, &args) {
            return None;
        }
    }
    let grant = Transfer {
        giver: owner.clone(),
        resource: rule.head_resource.clone(),
        receiver: requester,
    };
    Some(ExchangeApproval { grant, payoff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Exchange;

    fn user(n: &str) -> UserId {
        UserId::new(n)
    }

    fn universe3() -> BTreeSet<UserId> {
        ["Alice", "Bob", "Carl"].into_iter().map(UserId::new).collect()
    }

    #[test]
    fn parses_rule_a1() {
        let rs = parse_ruleset(
            "Gives(Me, spell_book, u) :- Gives(u', heavy_weapon, Me)",
            user("Alice"),
        )
        .unwrap();
        assert_eq!(
            rs.rules,
            vec![RuleAst {
                head_resource: ResourceId::new("spell_book"),
                head_requester: "u".into(),
                gives: vec![GiveAtom {
                    giver: UserTerm::Var("u'".into()),
                    resource: ResourceId::new("heavy_weapon"),
                    receiver: UserTerm::Me,
                }],
                preds: vec![],
            }]
        );
    }

    #[test]
    fn parses_rule_c3_with_predicate() {
        let rs = parse_ruleset(
            "Gives(Me, healing_potion, u) :- Gives(u, spell_book, u') with is_paladin(u')",
            user("Carl"),
        )
        .unwrap();
        assert_eq!(
            rs.rules,
            vec![RuleAst {
                head_resource: ResourceId::new("healing_potion"),
                head_requester: "u".into(),
                gives: vec![GiveAtom {
                    giver: UserTerm::Var("u".into()),
                    resource: ResourceId::new("spell_book"),
                    receiver: UserTerm::Var("u'".into()),
                }],
                preds: vec![PredAtom { name: "is_paladin".into(), args: vec![UserTerm::Var("u'".into())] }],
            }]
        );
    }

    #[test]
    fn head_requester_must_not_be_me() {
        let err = parse_ruleset("Gives(Me, apple, Me) :- ", user("a")).unwrap_err();
        assert!(matches!(err, MuacError::Semantic { .. }), "{err}");
    }

    #[test]
    fn body_give_must_not_have_me_as_giver() {
        let err =
            parse_ruleset("Gives(Me, apple, u) :- Gives(Me, pear, u)", user("a")).unwrap_err();
        assert!(matches!(err, MuacError::Semantic { .. }));
    }

    #[test]
    fn comments_and_wrapped_lines_parse() {
        let src = "// Bob's third rule\nGives(Me, light_weapon, u) :- \n\tGives(u, healing_potion, Me)  with is_paladin(u)      // Rule B3\n";
        let rs = parse_ruleset(src, user("Bob")).unwrap();
        assert_eq!(rs.rules.len(), 1);
        assert_eq!(rs.rules[0].preds.len(), 1);
    }

    #[test]
    fn user_constants_are_rejected() {
        let err = parse_ruleset("Gives(Me, apple, u) with likes(Alice)", user("a")).unwrap_err();
        assert!(matches!(err, MuacError::Parse { .. }), "{err}");
    }

    #[test]
    fn parse_error_reports_position() {
        let err = parse_ruleset("Gives(Me apple, u)", user("a")).unwrap_err();
        match err {
            MuacError::Parse { line, col, .. } => {
                assert_eq!(line, 1);
                assert!(col > 1);
            }
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn inconsistent_predicate_arity_is_rejected() {
        let src = "Gives(Me, a, u) with p(u)\nGives(Me, b, u) with p(u, u')";
        let err = parse_ruleset(src, user("x")).unwrap_err();
        assert!(matches!(err, MuacError::Semantic { .. }));
    }

    #[test]
    fn printer_roundtrips() {
        let src = "Gives(Me, spell_book, u) :- Gives(u', heavy_weapon, Me)\nGives(Me, healing_potion, u) :- Gives(u, spell_book, u') with is_paladin(u')\nGives(Me, apple, u)\n";
        let rs = parse_ruleset(src, user("Carl")).unwrap();
        let printed = print_ruleset(&rs);
        let reparsed = parse_ruleset(&printed, user("Carl")).unwrap();
        assert_eq!(rs, reparsed);
    }

    fn exchange(trs: &[(&str, &str, &str)]) -> Exchange {
        trs.iter()
            .map(|(g, r, v)| Transfer {
                giver: user(g),
                resource: ResourceId::new(*r),
                receiver: user(v),
            })
            .collect()
    }

    #[test]
    fn rule_a1_interpretation_has_four_approvals() {
        let rs = parse_ruleset("Gives(Me, sb, u) :- Gives(u', hw, Me)", user("Alice")).unwrap();
        let pol = interpret_ruleset(&rs, &Context::new(), &universe3());
        let expect: BTreeSet<ExchangeApproval> = [
            ("Bob", &[("Bob", "hw", "Alice")][..]),
            ("Bob", &[("Carl", "hw", "Alice")][..]),
            ("Carl", &[("Carl", "hw", "Alice")][..]),
            ("Carl", &[("Bob", "hw", "Alice")][..]),
        ]
        .into_iter()
        .map(|(to, payoff)| ExchangeApproval {
            grant: Transfer {
                giver: user("Alice"),
                resource: ResourceId::new("sb"),
                receiver: user(to),
            },
            payoff: exchange(payoff),
        })
        .collect();
        assert_eq!(pol.approvals, expect);
    }

    #[test]
    fn empty_ruleset_interprets_to_empty_policy() {
        let rs = Ruleset { owner: user("Alice"), rules: vec![] };
        let pol = interpret_ruleset(&rs, &Context::new(), &universe3());
        assert!(pol.approvals.is_empty());
    }

    #[test]
    fn predicates_filter_assignments() {
        let rs = parse_ruleset(
            "Gives(Me, light_weapon, u) :- Gives(u, healing_potion, Me) with is_paladin(u)",
            user("Bob"),
        )
        .unwrap();
        let empty_ctx = Context::new();
        let pol = interpret_ruleset(&rs, &empty_ctx, &universe3());
        assert!(pol.approvals.is_empty());

        let mut ctx = Context::new();
        ctx.add_fact("is_paladin", vec![user("Carl")]).unwrap();
        let pol = interpret_ruleset(&rs, &ctx, &universe3());
        assert_eq!(pol.approvals.len(), 1);
        let approval = pol.approvals.iter().next().unwrap();
        assert_eq!(approval.grant.receiver, user("Carl"));
    }

    #[test]
    fn interpretation_is_monotone_in_the_context() {
        let rs = parse_ruleset(
            "Gives(Me, x, u) :- Gives(u, y, u') with p(u')",
            user("Alice"),
        )
        .unwrap();
        let mut small = Context::new();
        small.add_fact("p", vec![user("Bob")]).unwrap();
        let mut big = small.clone();
        big.add_fact("p", vec![user("Carl")]).unwrap();
        let pol_small = interpret_ruleset(&rs, &small, &universe3());
        let pol_big = interpret_ruleset(&rs, &big, &universe3());
        assert!(pol_small.approvals.is_subset(&pol_big.approvals));
    }

    #[test]
    fn every_approval_keeps_the_owner_out_of_payoffs() {
        let rs = parse_ruleset("Gives(Me, x, u) :- Gives(v, y, w)", user("Alice")).unwrap();
        let pol = interpret_ruleset(&rs, &Context::new(), &universe3());
        assert!(!pol.approvals.is_empty());
        for a in &pol.approvals {
            assert!(a.payoff.keys().all(|t| t.giver != user("Alice")));
            assert_eq!(a.grant.giver, user("Alice"));
        }
    }

    #[test]
    fn enumeration_visits_exactly_the_assignment_space() {
        let rs = parse_ruleset("Gives(Me, x, u) :- Gives(v, y, w)", user("Alice")).unwrap();
        let (_, stats) = interpret_ruleset_counting(&rs, &Context::new(), &universe3());
        // Three distinct variables over three users.
        assert_eq!(stats.assignments_per_rule, vec![27]);
    }
}
