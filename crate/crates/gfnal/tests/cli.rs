use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gfnal::{Checkpoint, ExperimentSpec, Summary};
use gfnal_core::env::{utility, Environment};
use gfnal_core::gfn::GfnModel;
use gfnal_core::gp::GpHyperparams;
use gfnal_core::nn::Mlp;
use gfnal_core::rng_stream;
use gfnal_core::space::{enumerate_complete, AllocationMatrix, Dims};
use tempfile::TempDir;

fn gfnal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfnal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_spec(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const TINY: &str = "servers = 2\nsubcarriers = 2\ndevices = 2\nseeds = [3]\n";

const SMALL_RUN: &str = r#"
servers = 2
subcarriers = 3
devices = 3
methods = ["gflownet", "mcmc", "random"]
seeds = [1, 2]
rounds = 2
batch = 3
initial = 6
gfn_trajectories = 100
embedding_epochs = 10
mcmc_burn_in = 30
mcmc_thinning = 3
"#;

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn one_round_of_two_gives_one_row() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(
        dir.path(),
        "spec.toml",
        "servers = 2\nsubcarriers = 2\ndevices = 2\nmethods = [\"random\"]\nseeds = [0]\nrounds = 1\nbatch = 2\ninitial = 4\nembedding_epochs = 5\n",
    );
    let out = dir.path().join("out");
    let o = gfnal(&["run", path_str(&spec), "--output", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("rounds.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "round,method,seed,batch_max,batch_mean,best_so_far,surrogate_rmse,wall_ms");
    assert_eq!(lines.len(), 2);
    assert!(out.join("summary.json").exists());
}

#[test]
fn identical_specs_give_identical_csv_bytes() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(dir.path(), "spec.toml", SMALL_RUN);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = gfnal(&["run", path_str(&spec), "--output", path_str(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ca = std::fs::read(a.join("rounds.csv")).unwrap();
    let cb = std::fs::read(b.join("rounds.csv")).unwrap();
    assert_eq!(ca, cb);
    // 3 methods x 2 seeds x 2 rounds
    assert_eq!(String::from_utf8(ca).unwrap().lines().count(), 13);
}

#[test]
fn output_dir_from_spec_is_used() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("from-spec");
    let body = format!(
        "servers = 2\nsubcarriers = 2\ndevices = 2\nmethods = [\"random\"]\nrounds = 1\nbatch = 2\ninitial = 4\nembedding_epochs = 5\noutput_dir = {:?}\n",
        path_str(&out)
    );
    let spec = write_spec(dir.path(), "spec.toml", &body);
    let o = gfnal(&["run", path_str(&spec)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("rounds.csv").exists());
}

#[test]
fn too_many_devices_is_rejected_with_the_constraint() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(dir.path(), "spec.toml", "servers = 2\nsubcarriers = 2\ndevices = 5\n");
    let o = gfnal(&["run", path_str(&spec), "--output", path_str(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("devices (5) must not exceed servers x subcarriers"), "{msg}");
}

#[test]
fn bad_specs_exit_2() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("typo.toml", "servres = 2\n"),
        ("syntax.toml", "servers = = 2\n"),
        ("method.toml", "methods = [\"ppo\"]\n"),
        ("seeds.toml", "seeds = []\n"),
    ];
    for (name, body) in cases {
        let spec = write_spec(dir.path(), name, body);
        let o = gfnal(&["run", path_str(&spec), "--output", path_str(&dir.path().join("out"))]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", stderr(&o));
    }
    let o = gfnal(&["run", path_str(&dir.path().join("missing.toml"))]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn eval_matches_the_utility_function() {
    let dir = TempDir::new().unwrap();
    let spec_path = write_spec(dir.path(), "spec.toml", TINY);
    let spec = ExperimentSpec::load(&spec_path).unwrap();
    let env = Environment::sample(spec.scenario().unwrap(), 3);
    for x in enumerate_complete(env.config.dims(), 100).unwrap() {
        let o = gfnal(&["eval", path_str(&spec_path), &x.to_string()]);
        assert!(o.status.success(), "{}", stderr(&o));
        let expected = utility(&x, &env.channels, &env.config).unwrap();
        let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
        assert_eq!(
            rdr.headers().unwrap(),
            vec!["device", "bitrate_bps", "sensing_bits", "latency_s", "utility"]
        );
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 3);
        for (d, m) in expected.devices.iter().enumerate() {
            let row = &rows[d];
            assert_eq!(row[0].parse::<usize>().unwrap(), d + 1);
            assert_eq!(row[1].parse::<f64>().unwrap(), m.bitrate);
            assert_eq!(row[2].parse::<f64>().unwrap(), m.sensing_info);
            assert_eq!(row[3].parse::<f64>().unwrap(), m.latency);
            assert_eq!(row[4].parse::<f64>().unwrap(), m.utility);
        }
        assert_eq!(&rows[2][0], "total");
        assert_eq!(rows[2][4].parse::<f64>().unwrap(), expected.total);
    }
}

#[test]
fn eval_seed_selects_the_channel() {
    let dir = TempDir::new().unwrap();
    let spec_path = write_spec(dir.path(), "spec.toml", TINY);
    let a = stdout(&gfnal(&["eval", path_str(&spec_path), "1,2;0,0", "--seed", "3"]));
    let b = stdout(&gfnal(&["eval", path_str(&spec_path), "1,2;0,0"]));
    let c = stdout(&gfnal(&["eval", path_str(&spec_path), "1,2;0,0", "--seed", "4"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn malformed_or_incomplete_matrices_exit_2() {
    let dir = TempDir::new().unwrap();
    let spec_path = write_spec(dir.path(), "spec.toml", TINY);
    for bad in ["", "1,2", "1,2;0", "1,x;0,0", "1,1;0,0", "1,3;0,0", "1,0;0,0", "0,0;0,0", "1,2;0,0;0,0"] {
        let o = gfnal(&["eval", path_str(&spec_path), bad]);
        assert_eq!(o.status.code(), Some(2), "{bad:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn enumerate_lists_every_allocation_best_first() {
    let dir = TempDir::new().unwrap();
    let spec_path = write_spec(dir.path(), "spec.toml", TINY);
    let o = gfnal(&["enumerate", path_str(&spec_path)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(rdr.headers().unwrap(), vec!["rank", "allocation", "utility"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 12);
    let utils: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(utils.iter().all(|&u| u <= utils[0]));
    assert!(utils.windows(2).all(|w| w[0] >= w[1]));

    let spec = ExperimentSpec::load(&spec_path).unwrap();
    let env = Environment::sample(spec.scenario().unwrap(), 3);
    let dims = Dims::new(2, 2, 2);
    let mut seen = std::collections::BTreeSet::new();
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0].parse::<usize>().unwrap(), i + 1);
        let x = AllocationMatrix::parse(&r[1], dims).unwrap();
        assert_eq!(env.utility(&x).unwrap(), utils[i]);
        assert!(seen.insert(x));
    }
}

#[test]
fn enumerate_refuses_large_instances() {
    let dir = TempDir::new().unwrap();
    let spec_path = write_spec(dir.path(), "spec.toml", "servers = 5\nsubcarriers = 10\ndevices = 20\n");
    let o = gfnal(&["enumerate", path_str(&spec_path)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(!stderr(&o).is_empty());
}

fn report_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
        .unwrap_or_else(|| panic!("missing {key} in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn gfn_sanity_passes_at_the_default_budget() {
    let dir = TempDir::new().unwrap();
    let spec_path = write_spec(dir.path(), "spec.toml", TINY);
    let ck = dir.path().join("sampler.json");
    let o = gfnal(&["gfn-sanity", path_str(&spec_path), "--checkpoint", path_str(&ck)]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}{}", stderr(&o));
    assert!(report_value(&text, "l1") <= 0.1);
    assert!(report_value(&text, "log_z_error").is_finite());
    assert_eq!(report_value(&text, "states"), 12.0);

    let model = Checkpoint::load(&ck).unwrap().to_sampler().unwrap();
    assert_eq!(model.dims(), Dims::new(2, 2, 2));
    assert_eq!(model.log_z(), report_value(&text, "log_z"));
}

#[test]
fn gfn_sanity_without_training_fails() {
    let dir = TempDir::new().unwrap();
    let spec_path = write_spec(dir.path(), "spec.toml", TINY);
    let o = gfnal(&["gfn-sanity", path_str(&spec_path), "--trajectories", "0"]);
    let text = stdout(&o);
    assert_ne!(o.status.code(), Some(0), "{text}");
    assert!(report_value(&text, "l1") > 0.1);
    assert!(report_value(&text, "log_z_error") > 0.0);
}

#[test]
fn gfn_sanity_refuses_large_instances() {
    let dir = TempDir::new().unwrap();
    let spec_path = write_spec(dir.path(), "spec.toml", "servers = 5\nsubcarriers = 10\ndevices = 20\n");
    let o = gfnal(&["gfn-sanity", path_str(&spec_path), "--trajectories", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn summary_round_trips() {
    let dir = TempDir::new().unwrap();
    let spec_path = write_spec(dir.path(), "spec.toml", SMALL_RUN);
    let out = dir.path().join("out");
    let o = gfnal(&["run", path_str(&spec_path), "--output", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("summary.json")).unwrap();
    let summary = Summary::from_json(&text).unwrap();
    assert_eq!(summary.to_json() + "\n", text);
    assert_eq!(summary.runs.len(), 6);

    let spec = ExperimentSpec::load(&spec_path).unwrap();
    let echoed: ExperimentSpec = serde_json::from_value(summary.config.clone()).unwrap();
    assert_eq!(echoed, spec);

    let calls = summary.runs[0].oracle_calls;
    for r in &summary.runs {
        assert_eq!(r.oracle_calls, calls);
        assert_eq!(r.best_so_far.len(), 2);
        assert_eq!(r.best_so_far.last().copied(), Some(r.best_utility));
        assert!(r.best_utility >= r.initial_best);
        let env = Environment::sample(spec.scenario().unwrap(), r.seed);
        let x = AllocationMatrix::parse(&r.best_allocation, Dims::new(2, 3, 3)).unwrap();
        assert_eq!(env.utility(&x).unwrap(), r.best_utility);
    }
}

#[test]
fn checkpoints_round_trip() {
    let mut rng = rng_stream(7, 0);
    let model = GfnModel::new(Dims::new(2, 3, 3), &[16, 8], &mut rng);
    let ck = Checkpoint::from_sampler(&model);
    let back = Checkpoint::from_json(&ck.to_json()).unwrap();
    assert_eq!(back, ck);
    let loaded = back.to_sampler().unwrap();
    assert_eq!(loaded.dims(), model.dims());
    assert_eq!(loaded.policy(), model.policy());
    assert_eq!(loaded.log_z(), model.log_z());
    assert!(back.to_embedding().is_err());

    let net = Mlp::he_init(&[12, 8, 4], &mut rng);
    let hyper = GpHyperparams::new(0.7, 1.3, 1e-4).unwrap();
    let ck = Checkpoint::from_embedding(&net, &hyper);
    let (net2, hyper2) = Checkpoint::from_json(&ck.to_json()).unwrap().to_embedding().unwrap();
    assert_eq!(net2, net);
    assert_eq!(hyper2, hyper);

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("net.json");
    Checkpoint::from_mlp(&net).save(&path).unwrap();
    assert_eq!(Checkpoint::load(&path).unwrap().to_mlp().unwrap(), net);

    let mut stale = Checkpoint::from_mlp(&net);
    stale.version = 99;
    let err = Checkpoint::from_json(&stale.to_json()).unwrap_err();
    assert_eq!(err.exit_code(), 2);

    let mut short = Checkpoint::from_mlp(&net);
    short.params.pop();
    assert!(short.to_mlp().is_err());
}
