//! Regenerates the bundled scenario configs in `scenarios/` at the repo
//! root. Run after changing the scenario builders:
//!
//! ```text
//! cargo run -p fcache-core --example bundle_scenarios
//! ```

use std::fs;
use std::path::Path;

use fcache_core::model::ScenarioConfig;
use fcache_core::scenarios;
use serde::Serialize;

#[derive(Serialize)]
struct ConfigFile {
    version: u32,
    #[serde(flatten)]
    config: ScenarioConfig,
}

fn write(dir: &Path, name: &str, config: ScenarioConfig) {
    let file = ConfigFile { version: 1, config };
    let mut text = serde_json::to_string_pretty(&file).expect("serializable");
    text.push('\n');
    let path = dir.join(name);
    fs::write(&path, text).expect("writable scenarios dir");
    println!("wrote {}", path.display());
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    fs::create_dir_all(&dir).expect("create scenarios dir");
    write(&dir, "benchmark-1000.json", scenarios::benchmark_scenario(1000, 1000));
    write(&dir, "benchmark-100.json", scenarios::benchmark_scenario(100, 100));
    write(&dir, "evolution.json", scenarios::evolution_scenario(12));
    write(
        &dir,
        "placement.json",
        scenarios::placement_scenario(scenarios::PLACEMENT_SWEEP_RATES[0], 8),
    );
}
