use std::collections::BTreeSet;
use std::path::Path;

use muac_core::compile::{compile_ruleset, ground_instances};
use muac_core::model::UserId;
use muac_core::muac::parse_ruleset;
use serde_json::json;

pub fn check(file: &Path, owner: Option<&str>, json: bool) -> Result<u8, String> {
    let source =
        std::fs::read_to_string(file).map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let owner = owner
        .map(str::to_string)
        .or_else(|| file.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "owner".into());
    match parse_ruleset(&source, UserId::new(owner.clone())) {
        Ok(rs) => {
            if json {
                println!("{}", json!({"ok": true, "owner": owner, "rules": rs.rules.len()}));
            } else {
                println!("{}: {} rule(s), no problems found", file.display(), rs.rules.len());
            }
            Ok(0)
        }
        Err(e) => {
            if json {
                println!("{}", json!({"ok": false, "error": e.to_string()}));
            } else {
                eprintln!("{}: {e}", file.display());
            }
            Ok(1)
        }
    }
}

pub fn compile(
    file: &Path,
    owner: &str,
    ground: bool,
    users: Option<&str>,
    json: bool,
) -> Result<u8, String> {
    let source =
        std::fs::read_to_string(file).map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let ruleset = match parse_ruleset(&source, UserId::new(owner)) {
        Ok(rs) => rs,
        Err(e) => {
            if json {
                println!("{}", json!({"ok": false, "error": e.to_string()}));
            } else {
                eprintln!("{}: {e}", file.display());
            }
            return Ok(1);
        }
    };
    let compiled = compile_ruleset(&ruleset);
    if json {
        let formulas: Vec<String> = compiled.iter().map(|c| c.to_string()).collect();
        let mut payload = json!({"ok": true, "owner": owner, "formulas": formulas});
        if ground {
            let universe = universe_from(users, owner)?;
            let instances: Vec<String> = ground_instances(&compiled, &universe)
                .iter()
                .map(|i| i.formula.to_string())
                .collect();
            payload["instances"] = json!(instances);
        }
        println!("{payload}");
    } else {
        for c in &compiled {
            println!("{c}");
        }
        if ground {
            let universe = universe_from(users, owner)?;
            println!("\n// grounded over {{{}}}", join_users(&universe));
            for inst in ground_instances(&compiled, &universe) {
                println!("{}", inst.formula);
            }
        }
    }
    Ok(0)
}

fn universe_from(users: Option<&str>, owner: &str) -> Result<BTreeSet<UserId>, String> {
    let users = users.ok_or("grounding needs --users a,b,c")?;
    let mut set: BTreeSet<UserId> =
        users.split(',').map(str::trim).filter(|s| !s.is_empty()).map(UserId::new).collect();
    set.insert(UserId::new(owner));
    Ok(set)
}

fn join_users(set: &BTreeSet<UserId>) -> String {
    set.iter().map(|u| u.to_string()).collect::<Vec<_>>().join(", ")
}
