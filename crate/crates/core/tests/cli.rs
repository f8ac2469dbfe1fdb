use std::fs;
use std::path::Path;

use ape::cli::run;

fn ape(args: &[&str]) -> i32 {
    run(std::iter::once("ape")
        .chain(args.iter().copied())
        .map(String::from))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (train, dev) = (d.join("train"), d.join("dev"));
    assert_eq!(
        ape(&[
            "gen",
            "--task",
            "copy",
            "--n",
            "40",
            "--seed",
            "1",
            "--out",
            p(&train)
        ]),
        0
    );
    assert_eq!(
        ape(&[
            "gen",
            "--task",
            "copy",
            "--n",
            "10",
            "--seed",
            "2",
            "--out",
            p(&dev)
        ]),
        0
    );
    for f in ["src.txt", "mt.txt", "pe.txt"] {
        assert_eq!(
            fs::read_to_string(train.join(f)).unwrap().lines().count(),
            40
        );
    }

    let vocab = d.join("vocab.txt");
    let ins = [
        train.join("src.txt"),
        train.join("mt.txt"),
        train.join("pe.txt"),
    ];
    assert_eq!(
        ape(&[
            "vocab",
            "--in",
            p(&ins[0]),
            p(&ins[1]),
            p(&ins[2]),
            "--out",
            p(&vocab)
        ]),
        0
    );

    let config = d.join("run.json");
    fs::write(
        &config,
        r#"{"d_model": 16, "n_heads": 2, "n_layers": 1, "d_ff": 32, "dropout": 0.0,
            "token_budget": 300, "warmup": 20, "max_steps": 20, "eval_interval": 10,
            "train_dir": "train", "dev_dir": "dev", "vocab": "vocab.txt", "out_dir": "run"}"#,
    )
    .unwrap();
    assert_eq!(ape(&["train", "--config", p(&config)]), 0);
    let ckpt = d.join("run/model.ckpt");
    assert!(ckpt.exists());
    assert_eq!(
        fs::read_to_string(d.join("run/train_log.jsonl"))
            .unwrap()
            .lines()
            .count(),
        3
    );

    let out = d.join("hyp.txt");
    let (dev_src, dev_mt) = (dev.join("src.txt"), dev.join("mt.txt"));
    let args = [
        "postedit",
        "--model",
        p(&ckpt),
        "--src",
        p(&dev_src),
        "--mt",
        p(&dev_mt),
        "--out",
        p(&out),
    ];
    assert_eq!(ape(&args), 0);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 10);
    let mut greedy = args.to_vec();
    greedy.extend(["--beam", "1", "--max-len", "4"]);
    assert_eq!(ape(&greedy), 0);
    assert!(fs::read_to_string(&out)
        .unwrap()
        .lines()
        .all(|l| l.split_whitespace().count() <= 4));

    assert_eq!(
        ape(&[
            "eval",
            "--hyp",
            p(&dev.join("mt.txt")),
            "--ref",
            p(&dev.join("pe.txt")),
            "--table"
        ]),
        0
    );

    let maps = d.join("maps");
    for format in ["csv", "pgm", "svg"] {
        let code = ape(&[
            "align",
            "--model",
            p(&ckpt),
            "--src",
            p(&dev.join("src.txt")),
            "--mt",
            p(&dev.join("mt.txt")),
            "--out",
            p(&maps),
            "--format",
            format,
            "--layer",
            "all-mean",
            "--heads",
            "0",
        ]);
        assert_eq!(code, 0);
        assert!(maps.join(format!("00001.{format}")).exists());
    }
    let code = ape(&[
        "align",
        "--model",
        p(&ckpt),
        "--src",
        p(&dev.join("src.txt")),
        "--mt",
        p(&dev.join("mt.txt")),
        "--out",
        p(&maps),
        "--layer",
        "7",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(ape(&["frobnicate"]), 1);
    assert_eq!(ape(&["--help"]), 0);
    assert_eq!(
        ape(&["gen", "--task", "nope", "--n", "3", "--out", p(d)]),
        1
    );

    let (a, b) = (d.join("a.txt"), d.join("b.txt"));
    fs::write(&a, "x y\nz\n").unwrap();
    fs::write(&b, "x y\n").unwrap();
    assert_eq!(ape(&["eval", "--hyp", p(&a), "--ref", p(&b)]), 2);
    assert_eq!(ape(&["eval", "--hyp", p(&a), "--ref", p(&a)]), 0);

    let bad = d.join("bad.ckpt");
    fs::write(&bad, b"NOTAMODEL.......").unwrap();
    assert_eq!(
        ape(&[
            "postedit",
            "--model",
            p(&bad),
            "--src",
            p(&a),
            "--mt",
            p(&a),
            "--out",
            p(&b)
        ]),
        2
    );

    let config = d.join("run.json");
    fs::write(&config, r#"{"d_modle": 16}"#).unwrap();
    assert_eq!(ape(&["train", "--config", p(&config)]), 1);
    fs::write(&config, r#"{"d_model": 15, "n_heads": 4}"#).unwrap();
    assert_eq!(ape(&["train", "--config", p(&config)]), 1);
}
