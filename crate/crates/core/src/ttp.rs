//! The trusted third party: a ledger that holds resources, registers
//! policies, and applies an exchange only when it arrives with a valid
//! proof whose contexts are covered by the registered theory and the
//! current holdings.
//!
//! The ledger never searches for proofs — clients do that off-line. Every
//! mutating request is validated first and applied atomically: any error
//! leaves the ledger byte-identical. An append-only, hash-chained log
//! records each mutation.
//!
//! Wire protocol: newline-delimited JSON. Request envelope
//! `{"id":…,"op":…,"args":{…}}`, response `{"id":…,"ok":true,…}` or
//! `{"id":…,"ok":false,"code":…,"message":…}`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::compile::{compile_state, full_theory_omega};
use crate::logic::{
    check_proof, check_reduced_against, proof_from_json, proof_hash, proof_to_json, NodeSequent,
    OmegaForm, ProofMode, ProofNode,
};
use crate::model::{ResourceId, State, Universe, UserId};
use crate::muac::{parse_ruleset, Context, Ruleset};
use crate::multiset::Multiset;

pub const SNAPSHOT_VERSION: u32 = 1;
const GENESIS: &str = "0000000000000000000000000000000000000000000000000000000000000000";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("ParseError: {0}")]
    Parse(String),
    #[error("NoSuchResource: {0}")]
    NoSuchResource(String),
    #[error("InvalidProof: {0}")]
    InvalidProof(String),
    #[error("NotSubsumed: {0}")]
    NotSubsumed(String),
    #[error("UnknownUser: {0}")]
    UnknownUser(String),
    #[error("ArityMismatch: {0}")]
    ArityMismatch(String),
}

impl LedgerError {
    pub fn code(&self) -> &'static str {
        match self {
            LedgerError::Parse(_) => "ParseError",
            LedgerError::NoSuchResource(_) => "NoSuchResource",
            LedgerError::InvalidProof(_) => "InvalidProof",
            LedgerError::NotSubsumed(_) => "NotSubsumed",
            LedgerError::UnknownUser(_) => "UnknownUser",
            LedgerError::ArityMismatch(_) => "ArityMismatch",
        }
    }

    pub fn message(&self) -> String {
        match self {
            LedgerError::Parse(m)
            | LedgerError::NoSuchResource(m)
            | LedgerError::InvalidProof(m)
            | LedgerError::NotSubsumed(m)
            | LedgerError::UnknownUser(m)
            | LedgerError::ArityMismatch(m) => m.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SnapshotError {
    #[error("snapshot is corrupt: {0}")]
    CorruptSnapshot(String),
    #[error("snapshot io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FactAction {
    Add,
    Remove,
}

/// Self-contained client requests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    AddResource { user: UserId, res: ResourceId },
    WithdrawResource { user: UserId, res: ResourceId },
    SetPolicy { user: UserId, source: String },
    SetContextFact { pred: String, args: Vec<UserId>, action: FactAction },
    GetState,
    GetPolicies,
    Exchange { proof: Value },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct LogEntry {
    pub request: String,
    pub proof: Option<String>,
    pub verdict: String,
    pub state: String,
    pub prev: String,
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

fn entry_digest(entry: &LogEntry) -> String {
    hex_digest(serde_json::to_string(entry).expect("log entries serialize").as_bytes())
}

/// The persistent ledger state.
#[derive(Debug, Clone)]
pub struct Ledger {
    pub universe: Universe,
    pub mode: ProofMode,
    state: State,
    policy_sources: BTreeMap<UserId, String>,
    rulesets: BTreeMap<UserId, Ruleset>,
    context: Context,
    log: Vec<LogEntry>,
    // Derived from the registered policies and context; rebuilt on change.
    full_omega: Multiset<OmegaForm>,
}

impl Ledger {
    pub fn new(universe: Universe, mode: ProofMode) -> Self {
        let mut ledger = Ledger {
            universe,
            mode,
            state: State::new(),
            policy_sources: BTreeMap::new(),
            rulesets: BTreeMap::new(),
            context: Context::new(),
            log: Vec::new(),
            full_omega: Multiset::new(),
        };
        ledger.rebuild_theory();
        ledger
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn context(&self) -> &Context {
        &self.context
    }

    pub fn policy_sources(&self) -> &BTreeMap<UserId, String> {
        &self.policy_sources
    }

    pub fn rulesets(&self) -> &BTreeMap<UserId, Ruleset> {
        &self.rulesets
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn state_hash(&self) -> String {
        hex_digest(serde_json::to_string(&self.state).expect("states serialize").as_bytes())
    }

    fn rebuild_theory(&mut self) {
        self.full_omega = full_theory_omega(&self.rulesets, &self.context, &self.universe.users);
    }

    fn check_user(&self, user: &UserId) -> Result<(), LedgerError> {
        if self.universe.users.contains(user) {
            Ok(())
        } else {
            Err(LedgerError::UnknownUser(user.to_string()))
        }
    }

    fn check_resource(&self, res: &ResourceId) -> Result<(), LedgerError> {
        if self.universe.resources.contains(res) {
            Ok(())
        } else {
            Err(LedgerError::NoSuchResource(res.to_string()))
        }
    }

    fn append_log(&mut self, request_hash: String, proof: Option<String>, verdict: String) {
        let prev = self.log.last().map(entry_digest).unwrap_or_else(|| GENESIS.to_string());
        let entry =
            LogEntry { request: request_hash, proof, verdict, state: self.state_hash(), prev };
        self.log.push(entry);
    }

    /// Validates and applies one request. Errors leave the ledger
    /// untouched; successful mutations are logged.
    pub fn handle(&mut self, req: &Request) -> Result<Value, LedgerError> {
        let request_hash = hex_digest(request_to_json(req).to_string().as_bytes());
        match req {
            Request::AddResource { user, res } => {
                self.check_user(user)?;
                self.check_resource(res)?;
                self.state.add(user, res, 1);
                self.append_log(request_hash, None, "applied".into());
                Ok(json!({"count": self.state.count(user, res)}))
            }
            Request::WithdrawResource { user, res } => {
                self.check_user(user)?;
                self.check_resource(res)?;
                if self.state.count(user, res) == 0 {
                    return Err(LedgerError::NoSuchResource(format!(
                        "{user} holds no {res}"
                    )));
                }
                self.state.take(user, res, 1).expect("count checked above");
                self.append_log(request_hash, None, "applied".into());
                Ok(json!({"count": self.state.count(user, res)}))
            }
            Request::SetPolicy { user, source } => {
                self.check_user(user)?;
                let ruleset = parse_ruleset(source, user.clone())
                    .map_err(|e| LedgerError::Parse(e.to_string()))?;
                for rule in &ruleset.rules {
                    self.check_resource(&rule.head_resource)?;
                }
                self.policy_sources.insert(user.clone(), source.clone());
                self.rulesets.insert(user.clone(), ruleset);
                self.rebuild_theory();
                self.append_log(request_hash, None, "applied".into());
                Ok(json!({"rules": self.rulesets[user].rules.len()}))
            }
            Request::SetContextFact { pred, args, action } => {
                for u in args {
                    self.check_user(u)?;
                }
                match action {
                    FactAction::Add => {
                        let mut next = self.context.clone();
                        next.add_fact(pred.clone(), args.clone())
                            .map_err(|e| LedgerError::ArityMismatch(e.to_string()))?;
                        self.context = next;
                    }
                    FactAction::Remove => {
                        self.context.remove_fact(pred, args);
                    }
                }
                self.rebuild_theory();
                self.append_log(request_hash, None, "applied".into());
                Ok(json!({}))
            }
            Request::GetState => Ok(json!({
                "universe": self.universe,
                "state": self.state,
            })),
            Request::GetPolicies => {
                let facts: Vec<Value> = self
                    .context
                    .facts()
                    .map(|(p, args)| json!({"pred": p, "args": args}))
                    .collect();
                Ok(json!({
                    "policies": self.policy_sources,
                    "context": facts,
                    "mode": self.mode,
                }))
            }
            Request::Exchange { proof } => {
                let proof = proof_from_json(proof)
                    .map_err(|e| LedgerError::InvalidProof(e.to_string()))?;
                let (consumed, produced) = self.validate_exchange(&proof)?;
                for (atom, n) in consumed.iter() {
                    self.state.take(&atom.user, &atom.resource, n).expect("subsumption checked");
                }
                for (atom, n) in produced.iter() {
                    self.state.add(&atom.user, &atom.resource, n);
                }
                let hash = proof_hash(&proof);
                self.append_log(request_hash, Some(hash.clone()), "applied".into());
                Ok(json!({"state": self.state, "proof": hash}))
            }
        }
    }

    /// Proof validation for an exchange: the proof checks alone, its
    /// theory is registered, and its consumed atoms are held.
    fn validate_exchange(
        &self,
        proof: &ProofNode,
    ) -> Result<(crate::logic::SigmaForm, crate::logic::SigmaForm), LedgerError> {
        check_proof(proof, self.mode)
            .map_err(|e| LedgerError::InvalidProof(e.to_string()))?;
        let full_sigma = compile_state(&self.state);
        check_reduced_against(proof, &self.full_omega, &full_sigma).map_err(|e| {
            LedgerError::NotSubsumed(e.to_string())
        })?;
        let NodeSequent::Linear(seq) = &proof.conclusion else {
            return Err(LedgerError::InvalidProof("not a linear sequent".into()));
        };
        let consumed = seq.sigma_atoms();
        let produced = seq.goal.clone();
        for atom in produced.keys() {
            if !self.universe.users.contains(&atom.user) {
                return Err(LedgerError::UnknownUser(atom.user.to_string()));
            }
            if !self.universe.resources.contains(&atom.resource) {
                return Err(LedgerError::NoSuchResource(atom.resource.to_string()));
            }
        }
        Ok((consumed, produced))
    }

    /// Serializes the whole ledger, log included.
    pub fn snapshot(&self) -> Value {
        let facts: Vec<Value> = self
            .context
            .facts()
            .map(|(p, args)| json!({"pred": p, "args": args}))
            .collect();
        json!({
            "version": SNAPSHOT_VERSION,
            "mode": self.mode,
            "universe": self.universe,
            "state": self.state,
            "policies": self.policy_sources,
            "context": facts,
            "log": self.log,
        })
    }

    pub fn persist(&self, path: &Path) -> Result<(), SnapshotError> {
        let body = serde_json::to_string_pretty(&self.snapshot())
            .expect("snapshots serialize");
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, body).map_err(|e| SnapshotError::Io(e.to_string()))?;
        std::fs::rename(&tmp, path).map_err(|e| SnapshotError::Io(e.to_string()))?;
        Ok(())
    }

    pub fn restore(path: &Path) -> Result<Ledger, SnapshotError> {
        let body = std::fs::read_to_string(path).map_err(|e| SnapshotError::Io(e.to_string()))?;
        Ledger::from_snapshot_str(&body)
    }

    pub fn from_snapshot_str(body: &str) -> Result<Ledger, SnapshotError> {
        let corrupt = |m: &str| SnapshotError::CorruptSnapshot(m.to_string());
        let v: Value = serde_json::from_str(body).map_err(|e| corrupt(&e.to_string()))?;
        let version = v.get("version").and_then(Value::as_u64).ok_or_else(|| corrupt("version"))?;
        if version != SNAPSHOT_VERSION as u64 {
            return Err(corrupt("unsupported version"));
        }
        let mode: ProofMode = serde_json::from_value(
            v.get("mode").cloned().ok_or_else(|| corrupt("mode"))?,
        )
        .map_err(|e| corrupt(&e.to_string()))?;
        let universe: Universe = serde_json::from_value(
            v.get("universe").cloned().ok_or_else(|| corrupt("universe"))?,
        )
        .map_err(|e| corrupt(&e.to_string()))?;
        let state: State =
            serde_json::from_value(v.get("state").cloned().ok_or_else(|| corrupt("state"))?)
                .map_err(|e| corrupt(&e.to_string()))?;
        let policy_sources: BTreeMap<UserId, String> = serde_json::from_value(
            v.get("policies").cloned().ok_or_else(|| corrupt("policies"))?,
        )
        .map_err(|e| corrupt(&e.to_string()))?;
        let mut context = Context::new();
        for fact in v.get("context").and_then(Value::as_array).ok_or_else(|| corrupt("context"))? {
            let pred = fact
                .get("pred")
                .and_then(Value::as_str)
                .ok_or_else(|| corrupt("context fact"))?;
            let args: Vec<UserId> = serde_json::from_value(
                fact.get("args").cloned().ok_or_else(|| corrupt("context fact"))?,
            )
            .map_err(|e| corrupt(&e.to_string()))?;
            context.add_fact(pred, args).map_err(|e| corrupt(&e.to_string()))?;
        }
        let log: Vec<LogEntry> =
            serde_json::from_value(v.get("log").cloned().ok_or_else(|| corrupt("log"))?)
                .map_err(|e| corrupt(&e.to_string()))?;
        // The chain must replay: each entry points at its predecessor.
        let mut prev = GENESIS.to_string();
        for entry in &log {
            if entry.prev != prev {
                return Err(corrupt("log hash chain broken"));
            }
            prev = entry_digest(entry);
        }

        let mut rulesets = BTreeMap::new();
        for (owner, src) in &policy_sources {
            let rs = parse_ruleset(src, owner.clone())
                .map_err(|e| corrupt(&format!("policy of {owner}: {e}")))?;
            rulesets.insert(owner.clone(), rs);
        }
        let mut ledger = Ledger {
            universe,
            mode,
            state,
            policy_sources,
            rulesets,
            context,
            log,
            full_omega: Multiset::new(),
        };
        ledger.rebuild_theory();
        Ok(ledger)
    }
}

// ---------------------------------------------------------------------------
// Wire encoding

pub fn request_to_json(req: &Request) -> Value {
    match req {
        Request::AddResource { user, res } => {
            json!({"op": "add_resource", "args": {"user": user, "res": res}})
        }
        Request::WithdrawResource { user, res } => {
            json!({"op": "withdraw_resource", "args": {"user": user, "res": res}})
        }
        Request::SetPolicy { user, source } => {
            json!({"op": "set_policy", "args": {"user": user, "source": source}})
        }
        Request::SetContextFact { pred, args, action } => json!({
            "op": "set_context_fact",
            "args": {
                "pred": pred,
                "args": args,
                "action": if *action == FactAction::Add { "add" } else { "remove" },
            }
        }),
        Request::GetState => json!({"op": "get_state", "args": {}}),
        Request::GetPolicies => json!({"op": "get_policies", "args": {}}),
        Request::Exchange { proof } => json!({"op": "exchange", "args": {"proof": proof}}),
    }
}

pub fn request_from_json(v: &Value) -> Result<Request, LedgerError> {
    let parse = |m: &str| LedgerError::Parse(m.to_string());
    let op = v.get("op").and_then(Value::as_str).ok_or_else(|| parse("missing op"))?;
    let args = v.get("args").cloned().unwrap_or_else(|| json!({}));
    let str_arg = |k: &str| -> Result<String, LedgerError> {
        args.get(k)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| parse(&format!("missing argument {k}")))
    };
    match op {
        "add_resource" => Ok(Request::AddResource {
            user: UserId::new(str_arg("user")?),
            res: ResourceId::new(str_arg("res")?),
        }),
        "withdraw_resource" => Ok(Request::WithdrawResource {
            user: UserId::new(str_arg("user")?),
            res: ResourceId::new(str_arg("res")?),
        }),
        "set_policy" => Ok(Request::SetPolicy {
            user: UserId::new(str_arg("user")?),
            source: str_arg("source")?,
        }),
        "set_context_fact" => {
            let action = match str_arg("action")?.as_str() {
                "add" => FactAction::Add,
                "remove" => FactAction::Remove,
                other => return Err(parse(&format!("unknown action {other:?}"))),
            };
            let users: Vec<UserId> = args
                .get("args")
                .and_then(Value::as_array)
                .ok_or_else(|| parse("missing argument args"))?
                .iter()
                .map(|u| u.as_str().map(UserId::new).ok_or_else(|| parse("bad user")))
                .collect::<Result<_, _>>()?;
            Ok(Request::SetContextFact { pred: str_arg("pred")?, args: users, action })
        }
        "get_state" => Ok(Request::GetState),
        "get_policies" => Ok(Request::GetPolicies),
        "exchange" => Ok(Request::Exchange {
            proof: args.get("proof").cloned().ok_or_else(|| parse("missing argument proof"))?,
        }),
        other => Err(parse(&format!("unknown op {other:?}"))),
    }
}

/// Wraps an exchange proof into its request.
pub fn exchange_request(proof: &ProofNode) -> Request {
    Request::Exchange { proof: proof_to_json(proof) }
}

/// Processes one envelope line; always answers, echoing the id.
pub fn handle_envelope(ledger: &mut Ledger, line: &str) -> Value {
    let (id, result) = match serde_json::from_str::<Value>(line) {
        Err(e) => (Value::Null, Err(LedgerError::Parse(format!("invalid JSON: {e}")))),
        Ok(v) => {
            let id = v.get("id").cloned().unwrap_or(Value::Null);
            let result = request_from_json(&v).and_then(|req| ledger.handle(&req));
            (id, result)
        }
    };
    match result {
        Ok(mut payload) => {
            let mut envelope = json!({"id": id, "ok": true});
            if let (Some(obj), Some(extra)) = (envelope.as_object_mut(), payload.as_object_mut()) {
                obj.append(extra);
            }
            envelope
        }
        Err(e) => json!({"id": id, "ok": false, "code": e.code(), "message": e.message()}),
    }
}

/// Serves newline-delimited JSON over TCP. Requests are handled strictly
/// serially under one lock; the ledger is persisted after every mutation
/// when a snapshot path is given.
pub fn serve(
    ledger: Ledger,
    listener: TcpListener,
    snapshot: Option<PathBuf>,
) -> std::io::Result<()> {
    let shared = Arc::new(Mutex::new(ledger));
    for stream in listener.incoming() {
        let stream = stream?;
        let shared = Arc::clone(&shared);
        let snapshot = snapshot.clone();
        std::thread::spawn(move || {
            let _ = serve_connection(stream, &shared, snapshot.as_deref());
        });
    }
    Ok(())
}

fn serve_connection(
    stream: TcpStream,
    shared: &Mutex<Ledger>,
    snapshot: Option<&Path>,
) -> std::io::Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = {
            let mut ledger = shared.lock().expect("ledger lock");
            let response = handle_envelope(&mut ledger, &line);
            if response.get("ok") == Some(&Value::Bool(true)) {
                if let Some(path) = snapshot {
                    let _ = ledger.persist(path);
                }
            }
            response
        };
        writeln!(writer, "{response}")?;
    }
    Ok(())
}
