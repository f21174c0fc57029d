//! The command-line workflow driven in-process: corpus, analysis, training,
//! generation and validation through `ulsgan::cli::run`, with the exit code
//! of every step.
//!
//!     cargo run --release --example cli_workflow

fn main() {
    let dir = std::env::temp_dir().join("ulsgan-cli-example");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("temp dir is writable");
    let path = |name: &str| dir.join(name).display().to_string();

    let config = path("small.toml");
    std::fs::write(
        &config,
        "[gan]\nepochs = 3\ngenerator_hidden = [32, 64, 64, 128]\ndiscriminator_hidden = [64, 32, 16]\n",
    )
    .expect("config is writable");

    let steps: Vec<Vec<String>> = vec![
        vec!["show-config".into()],
        vec![
            "corpus", "--out", &path("ref"), "--heights", "0.40,0.50", "--betas", "0",
            "--rotations", "4", "--reps", "5", "--processed",
        ]
        .into_iter()
        .map(String::from)
        .collect(),
        vec!["analyze".into(), "--in".into(), path("ref"), "--report".into(), path("trend.csv")],
        vec![
            "train".into(), "--data".into(), path("ref"), "--out".into(), path("model.ulsg"),
            "--quiet".into(),
        ],
        vec![
            "generate", "--model", &path("model.ulsg"), "--height", "0.45", "--beta", "0",
            "--ground", "asphalt", "--out", &path("gen"),
        ]
        .into_iter()
        .map(String::from)
        .collect(),
        vec![
            "generate", "--model", &path("model.ulsg"), "--height", "0.70", "--beta", "0",
            "--ground", "asphalt", "--out", &path("far"),
        ]
        .into_iter()
        .map(String::from)
        .collect(),
        vec![
            "validate", "--ref", &path("ref"), "--gen", &path("ref"), "--report",
            &path("self.csv"),
        ]
        .into_iter()
        .map(String::from)
        .collect(),
        vec![
            "plot", "--in", &path("trend.csv"), "--out", &path("k.svg"), "--x", "height_m",
            "--y", "k", "--series", "ground", "--filter", "bin_lo_m=0.5",
        ]
        .into_iter()
        .map(String::from)
        .collect(),
    ];
    for step in steps {
        let mut args = vec!["ulsgan".to_string(), "--config".into(), config.clone()];
        args.extend(step.iter().cloned());
        println!("$ ulsgan {}", step.join(" "));
        let code = ulsgan::cli::run(args);
        println!("  -> exit {code}\n");
    }
}
