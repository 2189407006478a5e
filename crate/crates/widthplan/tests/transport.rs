use std::io::{BufReader, BufWriter};
use std::net::TcpListener;
use std::process::Command;
use std::thread;

use proptest::prelude::*;
use widthplan::core::encode::{Encoding, GraphMeta, GraphNode, GraphPair, HyperEdge, NodeKind, RelGraph};
use widthplan::fixtures;
use widthplan::policy::{self, EpisodeConfig, Mode};
use widthplan::scorer::{RemoteScorer, ScoreError, Scorer, ScorerSpec, ZeroScorer};
use widthplan::wire::{self, Message};
use widthplan::core::{LookaheadConfig, Variant};

fn node_kind() -> impl Strategy<Value = NodeKind> {
    prop_oneof![
        Just(NodeKind::Object),
        Just(NodeKind::State),
        Just(NodeKind::Depth),
        Just(NodeKind::Action)
    ]
}

fn graph() -> impl Strategy<Value = RelGraph> {
    (1usize..12).prop_flat_map(|n| {
        let ids = 0..n as u32;
        (
            "[a-z0-9 _\\-\"\\\\\u{e9}\u{3bb}]{0,12}",
            0usize..Encoding::ALL.len(),
            proptest::collection::vec((node_kind(), "[ -~\u{e9}]{0,10}"), n),
            proptest::collection::vec(("[a-z_:]{1,10}", proptest::collection::vec(ids.clone(), 0..4)), 0..20),
            proptest::collection::vec(ids, 0..5),
        )
            .prop_map(|(instance, e, nodes, edges, candidates)| RelGraph {
                meta: GraphMeta { instance, encoding: Encoding::ALL[e] },
                nodes: nodes
                    .into_iter()
                    .enumerate()
                    .map(|(i, (kind, label))| GraphNode { id: i as u32, kind, label })
                    .collect(),
                edges: edges.into_iter().map(|(label, args)| HyperEdge { label, args }).collect(),
                candidates,
            })
    })
}

fn message() -> impl Strategy<Value = Message> {
    prop_oneof![
        graph().prop_map(Message::Graph),
        (graph(), graph()).prop_map(|(left, right)| Message::GraphPair(GraphPair { left, right })),
        proptest::collection::vec(-1e12f64..1e12, 0..8).prop_map(Message::Q),
        "[ -~]{0,40}".prop_map(Message::Error),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn records_round_trip(m in message()) {
        if let Message::Graph(g) = &m {
            prop_assert!(g.validate().is_ok());
        }
        let line = wire::to_json(&m);
        prop_assert!(!line.contains('\n'));
        prop_assert_eq!(wire::from_json(&line).unwrap(), m.clone());
        prop_assert_eq!(wire::from_json(&wire::to_json_pretty(&m)).unwrap(), m.clone());

        let mut buf = Vec::new();
        wire::write_frame(&mut buf, &m).unwrap();
        wire::write_frame(&mut buf, &m).unwrap();
        let mut r = buf.as_slice();
        prop_assert_eq!(wire::read_frame(&mut r).unwrap(), Some(m.clone()));
        prop_assert_eq!(wire::read_frame(&mut r).unwrap(), Some(m));
        prop_assert_eq!(wire::read_frame(&mut r).unwrap(), None);
    }
}

/// Serves one connection on a fresh port, answering with `handler`.
fn tcp_server<F>(handler: F) -> (String, thread::JoinHandle<()>)
where
    F: FnMut(Message) -> Result<Vec<f64>, String> + Send + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let h = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut r = BufReader::new(stream.try_clone().unwrap());
        let mut w = BufWriter::new(stream);
        let _ = wire::serve(&mut r, &mut w, handler);
    });
    (addr, h)
}

fn zeros(m: Message) -> Result<Vec<f64>, String> {
    Ok(vec![0.0; m.expected_values()])
}

fn episode(task: &widthplan::core::Task, scorer: &mut dyn Scorer, mode: Mode, enc: Encoding) -> policy::EpisodeResult {
    let cfg = EpisodeConfig::new(mode, LookaheadConfig::new(Variant::Aiw))
        .with_encoding(enc)
        .with_limits(policy::Limits { max_choices: 20, ..Default::default() });
    policy::run_episode(task, scorer, &cfg).unwrap()
}

#[test]
fn tcp_zero_scorer_matches_local() {
    let task = fixtures::gripper_p2();
    for (mode, enc) in [
        (Mode::IwJump, Encoding::AggregatedDelta),
        (Mode::IwJump, Encoding::External),
        (Mode::IwJump, Encoding::InternalDelta),
        (Mode::FlatAa, Encoding::AggregatedActions),
        (Mode::FlatAd, Encoding::State),
    ] {
        let local = episode(&task, &mut ZeroScorer, mode, enc);
        let (addr, server) = tcp_server(zeros);
        let mut remote = RemoteScorer::connect(&addr).unwrap();
        let got = episode(&task, &mut remote, mode, enc);
        drop(remote);
        server.join().unwrap();
        assert_eq!(got.plan, local.plan, "{mode:?}/{enc:?}");
        assert_eq!(got.choices, local.choices);
        assert_eq!(got.failure_reason, local.failure_reason);
    }
}

#[test]
fn remote_errors_surface() {
    let task = fixtures::delivery_n1();
    let cfg = EpisodeConfig::new(Mode::IwJump, LookaheadConfig::new(Variant::Aiw));

    let (addr, server) = tcp_server(|_| Err("model not loaded".into()));
    let mut remote = RemoteScorer::connect(&addr).unwrap();
    let err = policy::run_episode(&task, &mut remote, &cfg).unwrap_err();
    assert!(err.to_string().contains("model not loaded"), "{err}");
    drop(remote);
    server.join().unwrap();

    let (addr, server) = tcp_server(|m| Ok(vec![0.0; m.expected_values() + 1]));
    let mut remote = RemoteScorer::connect(&addr).unwrap();
    assert!(policy::run_episode(&task, &mut remote, &cfg).is_err());
    drop(remote);
    server.join().unwrap();

    let (addr, server) = tcp_server(|_| Ok(vec![f64::NAN]));
    let mut remote = RemoteScorer::connect(&addr).unwrap();
    assert!(policy::run_episode(&task, &mut remote, &cfg).is_err());
    drop(remote);
    server.join().unwrap();
}

#[test]
fn closed_connection_is_an_error() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let h = thread::spawn(move || drop(listener.accept().unwrap()));
    let mut remote = RemoteScorer::connect(&addr).unwrap();
    h.join().unwrap();
    let task = fixtures::delivery_n1();
    let cfg = EpisodeConfig::new(Mode::IwJump, LookaheadConfig::new(Variant::Aiw));
    assert!(policy::run_episode(&task, &mut remote, &cfg).is_err());
}

#[test]
fn connect_refused_is_reported() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let r = RemoteScorer::connect(&format!("127.0.0.1:{port}"));
    assert!(matches!(r, Err(ScoreError::Wire(wire::WireError::Io(_)))));
}

const PY_SCORER: &str = r#"
import json, sys
inp, out = sys.stdin.buffer, sys.stdout.buffer
while True:
    header = b""
    while not header.endswith(b" "):
        c = inp.read(1)
        if not c:
            sys.exit(0)
        header += c
    body = inp.read(int(header))
    inp.read(1)
    rec = json.loads(body)
    if rec["kind"] == "graph":
        # prefer deeper state nodes: value = candidate index
        values = [float(i) for i, _ in enumerate(rec["candidates"])]
    else:
        values = [0.0]
    reply = json.dumps({"v": 1, "kind": "q", "values": values}).encode()
    out.write(str(len(reply)).encode() + b" " + reply + b"\n")
    out.flush()
"#;

fn python() -> Option<&'static str> {
    Command::new("python3").arg("--version").output().ok().filter(|o| o.status.success()).map(|_| "python3")
}

#[test]
fn subprocess_scorer_speaks_the_framing() {
    let Some(py) = python() else {
        eprintln!("python3 unavailable; skipping");
        return;
    };
    let dir = std::env::temp_dir().join(format!("widthplan-transport-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let script = dir.join("scorer.py");
    std::fs::write(&script, PY_SCORER).unwrap();

    let task = fixtures::delivery_n1();
    let mut remote = RemoteScorer::spawn(py, &[script.to_str().unwrap().to_string()]).unwrap();
    let r = episode(&task, &mut remote, Mode::IwJump, Encoding::AggregatedDelta);
    assert!(r.choices > 0);
    assert!(policy::replay(&task, &r.plan) || !r.solved);
    drop(remote);

    // Same scorer through the CLI.
    let spec: ScorerSpec = format!("cmd:{py} {}", script.display()).parse().unwrap();
    assert!(matches!(spec, ScorerSpec::Command(_)));
    let domain = dir.join("domain.pddl");
    let inst = dir.join("n1.pddl");
    std::fs::write(&domain, include_str!("../../core/fixtures/delivery/domain.pddl")).unwrap();
    std::fs::write(&inst, include_str!("../../core/fixtures/delivery/n1.pddl")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_widthplan"))
        .args(["solve", "--domain", domain.to_str().unwrap(), "--instance", inst.to_str().unwrap()])
        .args(["--max-choices", "20", "--scorer", &format!("cmd:{py} {}", script.display())])
        .output()
        .unwrap();
    let code = out.status.code().unwrap();
    assert!(code == 0 || code == 1, "{}", String::from_utf8_lossy(&out.stderr));
    let rec: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec["choices"].as_u64().unwrap() as usize, r.choices);
}

#[test]
fn cli_tcp_scorer() {
    let (addr, server) = tcp_server(zeros);
    let dir = std::env::temp_dir().join(format!("widthplan-tcp-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let domain = dir.join("domain.pddl");
    let inst = dir.join("p2.pddl");
    std::fs::write(&domain, include_str!("../../core/fixtures/gripper/domain.pddl")).unwrap();
    std::fs::write(&inst, include_str!("../../core/fixtures/gripper/p2.pddl")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_widthplan"))
        .args(["solve", "--domain", domain.to_str().unwrap(), "--instance", inst.to_str().unwrap()])
        .args(["--max-choices", "20"])
        .env("WIDTHPLAN_SCORER", format!("tcp:{addr}"))
        .output()
        .unwrap();
    server.join().unwrap();
    let code = out.status.code().unwrap();
    assert!(code == 0 || code == 1, "{}", String::from_utf8_lossy(&out.stderr));
    let rec: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let local = episode(&fixtures::gripper_p2(), &mut ZeroScorer, Mode::IwJump, Encoding::AggregatedDelta);
    assert_eq!(rec["choices"].as_u64().unwrap() as usize, local.choices);
}
