//! Run the bundled simulator scripts, or one given on the command line.

use jamkit::sim::{run_scenario, BUILTIN_SCENARIOS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scripts: Vec<(String, String)> = match std::env::args().nth(1) {
        Some(path) => vec![(path.clone(), std::fs::read_to_string(&path)?)],
        None => BUILTIN_SCENARIOS.iter().map(|(n, s)| (n.to_string(), s.to_string())).collect(),
    };
    for (name, script) in scripts {
        let report = run_scenario(&script)?;
        let checks = report.steps.iter().filter(|s| s.command.starts_with("assert")).count();
        match report.failure() {
            None => println!("{name}: ok ({checks} checks, {} events)", report.events.len()),
            Some(f) => println!("{name}: FAILED at line {}: {} ({})", f.line, f.command, f.detail),
        }
    }
    Ok(())
}
