use std::path::Path;

use muac_core::model::ResourceId;
use muac_core::scenario::{parse_scenario, Scenario};

/// Search caps come from the flag, then MUAC_CAP, then the default.
pub fn effective_cap(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var("MUAC_CAP").ok().and_then(|v| v.parse().ok()))
        .unwrap_or(8)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_scenario(&text).map_err(|e| e.to_string())
}

pub fn parse_resources(want: &str) -> Result<Vec<ResourceId>, String> {
    let resources: Vec<ResourceId> = want
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(ResourceId::new)
        .collect();
    if resources.is_empty() {
        return Err("--want needs at least one resource".into());
    }
    Ok(resources)
}
