//! Running an experiment manifest from code; the command-line tool wraps the
//! same entry point.

use std::path::PathBuf;

use toeplitz_lab::experiment::{run, Manifest, Overrides};

fn main() {
    let manifest = Manifest::parse(
        r#"{
            "experiment": "theorem1",
            "parameters": {
                "n": 2,
                "symbol": {"invariant": [{"gamma": [1, 0], "coeff": 1.0}]},
                "f": [0.0, 1.0],
                "k_list": [10, 20, 30, 40, 50, 60]
            }
        }"#,
    )
    .expect("manifest parses");
    let out = std::env::temp_dir().join("toeplitz-lab-example").join("theorem1");
    let overrides = Overrides { out: Some(PathBuf::from(&out)), ..Overrides::default() };
    match run(&manifest, &overrides) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("json"));
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
