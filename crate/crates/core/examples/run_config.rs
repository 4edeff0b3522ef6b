//! Runs a command from a JSON configuration, as the binary does.

use smale_lab::config::RunConfig;
use smale_lab::run::{execute, Command};

fn main() -> smale_lab::Result<()> {
    let dir = std::env::temp_dir().join("smale-lab-example");
    let text = format!(
        r#"{{"model": {{"kind": "sft", "adjacency": [[1,1],[1,0]], "p": [0], "q": [0,1]}},
            "caps": {{"test_points": 200}},
            "out_dir": {:?}}}"#,
        dir
    );
    let cfg = RunConfig::from_json(&text)?;
    let ok = execute(&Command::Covers { depth: 6 }, &cfg)?;
    println!("covers {} -> {}", if ok { "passed" } else { "failed" }, dir.display());
    print!("{}", std::fs::read_to_string(dir.join("covers.csv"))?);
    Ok(())
}
