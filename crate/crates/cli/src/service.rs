use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;

use muac_core::decide::DecisionSetting;
use muac_core::logic::{proof_hash, proof_to_json, ProofMode};
use muac_core::model::{State, Universe, UserId};
use muac_core::muac::{Context, Ruleset};
use muac_core::prove::{fair_st, slice};
use muac_core::ttp::{self, request_to_json, FactAction, Ledger, Request};
use serde_json::{json, Value};
use std::collections::BTreeMap;

use crate::common::{effective_cap, load_scenario, parse_resources};

pub fn serve(
    snapshot: &Path,
    listen: &str,
    init: Option<&Path>,
    mode: ProofMode,
) -> Result<u8, String> {
    let ledger = if snapshot.exists() {
        Ledger::restore(snapshot).map_err(|e| e.to_string())?
    } else {
        let scenario_path = init.ok_or("fresh ledgers need --init <scenario>")?;
        let scenario = load_scenario(scenario_path)?;
        let mut ledger = Ledger::new(scenario.universe.clone(), mode);
        for (owner, source) in &scenario.policy_sources {
            ledger
                .handle(&Request::SetPolicy { user: owner.clone(), source: source.clone() })
                .map_err(|e| e.to_string())?;
        }
        for (pred, args) in scenario.context.facts() {
            ledger
                .handle(&Request::SetContextFact {
                    pred: pred.to_string(),
                    args: args.to_vec(),
                    action: FactAction::Add,
                })
                .map_err(|e| e.to_string())?;
        }
        for (user, res, count) in scenario.state.entries() {
            for _ in 0..count {
                ledger
                    .handle(&Request::AddResource { user: user.clone(), res: res.clone() })
                    .map_err(|e| e.to_string())?;
            }
        }
        ledger.persist(snapshot).map_err(|e| e.to_string())?;
        ledger
    };

    let listener = TcpListener::bind(listen).map_err(|e| format!("cannot bind {listen}: {e}"))?;
    eprintln!("ledger listening on {listen}");
    ttp::serve(ledger, listener, Some(snapshot.to_path_buf())).map_err(|e| e.to_string())?;
    Ok(0)
}

struct Connection {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    next_id: u64,
}

impl Connection {
    fn open(addr: &str) -> Result<Self, String> {
        let stream = TcpStream::connect(addr).map_err(|e| format!("cannot reach {addr}: {e}"))?;
        let reader =
            BufReader::new(stream.try_clone().map_err(|e| e.to_string())?);
        Ok(Connection { reader, writer: stream, next_id: 1 })
    }

    fn roundtrip(&mut self, req: &Request) -> Result<Value, String> {
        let mut envelope = request_to_json(req);
        envelope["id"] = json!(self.next_id);
        self.next_id += 1;
        writeln!(self.writer, "{envelope}").map_err(|e| e.to_string())?;
        let mut line = String::new();
        self.reader.read_line(&mut line).map_err(|e| e.to_string())?;
        serde_json::from_str(&line).map_err(|e| format!("bad response: {e}"))
    }
}

pub fn client_request(
    addr: &str,
    user: &str,
    want: &str,
    yes: bool,
    cap: Option<u64>,
    json_out: bool,
) -> Result<u8, String> {
    let user = UserId::new(user);
    let resources = parse_resources(want)?;
    let cap = effective_cap(cap);
    let mut conn = Connection::open(addr)?;

    let state_resp = conn.roundtrip(&Request::GetState)?;
    expect_ok(&state_resp)?;
    let universe: Universe =
        serde_json::from_value(state_resp["universe"].clone()).map_err(|e| e.to_string())?;
    let state: State =
        serde_json::from_value(state_resp["state"].clone()).map_err(|e| e.to_string())?;

    let pol_resp = conn.roundtrip(&Request::GetPolicies)?;
    expect_ok(&pol_resp)?;
    let sources: BTreeMap<UserId, String> =
        serde_json::from_value(pol_resp["policies"].clone()).map_err(|e| e.to_string())?;
    let mode: ProofMode =
        serde_json::from_value(pol_resp["mode"].clone()).map_err(|e| e.to_string())?;
    let mut context = Context::new();
    for fact in pol_resp["context"].as_array().cloned().unwrap_or_default() {
        let pred = fact["pred"].as_str().ok_or("bad context fact")?.to_string();
        let args: Vec<UserId> =
            serde_json::from_value(fact["args"].clone()).map_err(|e| e.to_string())?;
        context.add_fact(pred, args).map_err(|e| e.to_string())?;
    }
    let mut rulesets: BTreeMap<UserId, Ruleset> = BTreeMap::new();
    for (owner, source) in &sources {
        let rs = muac_core::muac::parse_ruleset(source, owner.clone())
            .map_err(|e| format!("policy of {owner}: {e}"))?;
        rulesets.insert(owner.clone(), rs);
    }
    for u in &universe.users {
        rulesets
            .entry(u.clone())
            .or_insert_with(|| Ruleset { owner: u.clone(), rules: vec![] });
    }

    // Prove locally against the fetched snapshot of the ledger.
    let outcome = match fair_st(
        &rulesets,
        &context,
        &universe.users,
        &state,
        &user,
        &resources,
        cap,
        mode,
    ) {
        Ok(Some(outcome)) => outcome,
        Ok(None) => {
            if json_out {
                println!("{}", json!({"ok": false, "reason": "no fair exchange"}));
            } else {
                println!("no fair exchange grants {user} the requested resources");
            }
            return Ok(1);
        }
        Err(e) => {
            if json_out {
                println!("{}", json!({"ok": false, "reason": "cap exceeded", "detail": e.to_string()}));
            } else {
                println!("search aborted: {e}");
            }
            return Ok(2);
        }
    };

    let setting = DecisionSetting::new(&rulesets, &context, &universe.users);
    let (_, _, proof) = slice(&setting, &outcome.certificate, &state);

    if json_out {
        println!(
            "{}",
            json!({
                "proposal": {
                    "exchange": outcome.certificate.exchange.iter()
                        .map(|(t, n)| json!({"transfer": t.to_string(), "count": n}))
                        .collect::<Vec<_>>(),
                    "target": outcome.st_target,
                    "proof_nodes": proof.node_count(),
                    "proof_hash": proof_hash(&proof),
                }
            })
        );
    } else {
        println!("proposed exchange:");
        for (t, n) in outcome.certificate.exchange.iter() {
            println!("  {t}  x{n}");
        }
        println!("resulting state: {:?}", outcome.st_target);
        println!("proof: {} nodes, hash {}", proof.node_count(), proof_hash(&proof));
    }

    if !yes {
        eprint!("submit? [y/N] ");
        let mut answer = String::new();
        std::io::stdin().read_line(&mut answer).map_err(|e| e.to_string())?;
        if !matches!(answer.trim(), "y" | "Y" | "yes") {
            if json_out {
                println!("{}", json!({"ok": false, "reason": "declined"}));
            } else {
                println!("declined");
            }
            return Ok(1);
        }
    }

    let response = conn.roundtrip(&Request::Exchange { proof: proof_to_json(&proof) })?;
    if response["ok"] == json!(true) {
        if json_out {
            println!("{response}");
        } else {
            println!("applied; ledger confirms proof {}", response["proof"]);
        }
        Ok(0)
    } else {
        if json_out {
            println!("{response}");
        } else {
            println!(
                "ledger rejected the exchange: {} {}",
                response["code"], response["message"]
            );
        }
        Ok(1)
    }
}

fn expect_ok(resp: &Value) -> Result<(), String> {
    if resp["ok"] == json!(true) {
        Ok(())
    } else {
        Err(format!("ledger error: {} {}", resp["code"], resp["message"]))
    }
}
