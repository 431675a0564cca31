use std::path::Path;
use std::process::{Command, Output};

fn synthmpc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synthmpc"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("run binary")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn run_local_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&synthmpc(p, &["make-cohort", "--n", "80", "--genes", "5", "--classes", "2", "--out", "c.csv"])), 0);
    std::fs::write(p.join("run.cfg"), "# demo run\nepsilon = 8\nseed = 4\nholders = 2\n").unwrap();
    for out in ["a", "b"] {
        let o = synthmpc(p, &["run-local", "--input", "c.csv", "--out-dir", out, "--config", "run.cfg"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |f: &str| std::fs::read(p.join(f)).unwrap();
    assert_eq!(read("a/synthetic.csv"), read("b/synthetic.csv"));
    assert_eq!(read("a/report.json"), read("b/report.json"));
    let report = String::from_utf8(read("a/report.json")).unwrap();
    assert!(report.contains("\"epsilon\": 8.0") && report.contains("\"holders\": 2"), "{report}");

    // flags override the file
    let o = synthmpc(p, &["run-local", "--input", "c.csv", "--out-dir", "c", "--config", "run.cfg", "--epsilon", "inf"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&read("c/report.json")).contains("\"epsilon\": null"));
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&synthmpc(p, &["calibrate", "--genes", "10", "--epsilon", "-1"])), 2);
    assert_eq!(code(&synthmpc(p, &["calibrate", "--genes", "10", "--epsilon", "2"])), 0);
    assert_eq!(code(&synthmpc(p, &["run-local", "--input", "missing.csv", "--out-dir", "o"])), 3);

    std::fs::write(p.join("bad.csv"), "g1,g2,label\n1.0,oops,0\n").unwrap();
    let o = synthmpc(p, &["share", "--input", "bad.csv", "--out-dir", "s"]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("g2"), "{err}");

    let release = r#"{"genes":1,"classes":2,"n":0,"sigma":0.0,"bin_means_noised":false,
        "gene_counts":[[0,0,0,0]],"label_counts":[0,0],"joint_counts":[[0,0,0,0,0,0,0,0]],
        "bin_means":[[0,0,0,0]]}"#;
    std::fs::write(p.join("rel.json"), release).unwrap();
    assert_eq!(code(&synthmpc(p, &["generate", "--release", "rel.json", "--rows", "5", "--out", "x.csv"])), 4);
}

#[test]
fn share_then_three_servers_over_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&synthmpc(p, &["make-cohort", "--n", "40", "--genes", "3", "--classes", "2", "--out", "c.csv"])), 0);
    assert_eq!(code(&synthmpc(p, &["share", "--input", "c.csv", "--out-dir", "sh", "--seed", "1"])), 0);
    let ports: Vec<String> = (0..3)
        .map(|_| std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().to_string())
        .collect();
    let children: Vec<_> = (1..=3)
        .map(|i| {
            Command::new(env!("CARGO_BIN_EXE_synthmpc"))
                .current_dir(p)
                .env("RUST_LOG", "warn")
                .args(["server", "--party", &i.to_string(), "--inputs", &format!("sh/holder.s{i}.sgs")])
                .args(["--classes", "2", "--epsilon", "16", "--seed", "3", "--out", "rel.json"])
                .args(["--party1", &ports[0], "--party2", &ports[1], "--party3", &ports[2]])
                .spawn()
                .unwrap()
        })
        .collect();
    for mut c in children {
        assert!(c.wait().unwrap().success());
    }
    let o = synthmpc(p, &["generate", "--release", "rel.json", "--gene-names-from", "c.csv", "--out", "syn.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let syn = std::fs::read_to_string(p.join("syn.csv")).unwrap();
    assert!(syn.starts_with("gene_0,gene_1,gene_2,label\n"));
    assert_eq!(syn.lines().count(), 41);
}
