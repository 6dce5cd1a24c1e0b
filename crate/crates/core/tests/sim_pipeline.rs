use std::path::{Path, PathBuf};

use sentinel_core::agent::AgentConfig;
use sentinel_core::command::{DialogState, StubTranslator};
use sentinel_core::detection::{
    run_pipeline, DetectionTensor, FixtureBackend, GridConfig, InferenceBackend, OracleBackend,
};
use sentinel_core::harness::Harness;
use sentinel_core::jpeg;
use sentinel_core::protocol::WireMessage;
use sentinel_core::server::{replay_jsonl, CentralConfig, EventLog};
use sentinel_core::sim::{render_frame, render_tensor, Scenario, SimFrontNode};
use serde_json::json;

fn scenarios() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/scenarios");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn phrases() -> StubTranslator {
    StubTranslator::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/phrases.tsv")).unwrap()
}

#[test]
fn shipped_scenarios_parse_and_build() {
    let files = scenarios();
    assert!(files.len() >= 4);
    for f in files {
        let sc = Scenario::load(&f).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        let w = sc.world(None).unwrap();
        assert!(!w.collides(w.robot), "{}", f.display());
        assert_eq!(w.obstacles.len(), sc.obstacles.len() + sc.scatter);
    }
}

#[test]
fn sim_frame_round_trips_through_pipeline() {
    let sc = Scenario::load(&scenarios().into_iter().find(|p| p.ends_with("three_objects.scn")).unwrap()).unwrap();
    let w = sc.world(None).unwrap();
    let cfg = GridConfig::default();
    let frame = render_frame(&w, &sc.camera, &cfg);
    assert!(jpeg::is_jpeg(&frame));
    assert_eq!(jpeg::dimensions(&frame), Some((sc.camera.width, sc.camera.height)));

    let embedded = OracleBackend.infer(&frame, &cfg).unwrap();
    let direct = render_tensor(&w, &sc.camera, &cfg);
    assert_eq!(embedded.dims(), direct.dims());
    // Embedded values are stored as f32.
    assert!(embedded.values().iter().zip(direct.values()).all(|(a, b)| (a - b).abs() < 1e-6));

    let set = run_pipeline(&frame, 5, &mut OracleBackend, &cfg, &sc.camera.letterbox()).unwrap();
    let mut names = set.class_names();
    names.sort();
    assert_eq!(names, ["bottle", "chair", "person"]);
    assert!(set.items.windows(2).all(|p| p[0].score >= p[1].score));
}

#[test]
fn fixture_backend_reads_rendered_tensors() {
    let sc = Scenario::load(&scenarios().into_iter().find(|p| p.ends_with("three_objects.scn")).unwrap()).unwrap();
    let cfg = GridConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let w = sc.world(None).unwrap();
    let t = render_tensor(&w, &sc.camera, &cfg);
    for name in ["a.dten", "b.dten"] {
        t.write_fixture(std::fs::File::create(dir.path().join(name)).unwrap()).unwrap();
    }
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let mut backend = FixtureBackend::load(dir.path()).unwrap();
    let frame = render_frame(&w, &sc.camera, &cfg);
    let a = run_pipeline(&frame, 1, &mut backend, &cfg, &sc.camera.letterbox()).unwrap();
    let b = run_pipeline(&frame, 1, &mut OracleBackend, &cfg, &sc.camera.letterbox()).unwrap();
    // Fixtures store f32, so scores may differ in the last bits but boxes and classes match.
    assert_eq!(a.class_names(), b.class_names());
    for (x, y) in a.items.iter().zip(&b.items) {
        assert_eq!(x.bbox, y.bbox);
        assert!((x.score - y.score).abs() < 1e-6);
    }
    let reread = DetectionTensor::read_fixture(&dir.path().join("a.dten")).unwrap();
    assert_eq!(reread.dims(), (13, 3, 80));
}

#[test]
fn scattered_worlds_follow_the_seed() {
    let sc = Scenario::load(&scenarios().into_iter().find(|p| p.ends_with("scatter.scn")).unwrap()).unwrap();
    let a = sc.world(Some(9)).unwrap();
    let b = sc.world(Some(9)).unwrap();
    let c = sc.world(Some(10)).unwrap();
    assert_eq!(a.obstacles, b.obstacles);
    assert_ne!(a.obstacles, c.obstacles);
}

#[test]
fn sim_node_emits_telemetry_and_frames() {
    let sc = Scenario::parse("bounds = -2 -2 4 2\nperson 2 -0.2 2.3 0.2").unwrap();
    let mut node = SimFrontNode::new(&sc, None, GridConfig::default()).unwrap();
    let mut telemetry = 0;
    let mut frames = 0;
    for _ in 0..20 {
        for m in node.step() {
            match m {
                WireMessage::Telemetry(t) => {
                    telemetry += 1;
                    assert_eq!(t.seq, telemetry);
                }
                WireMessage::FrameData { payload, .. } => {
                    frames += 1;
                    assert!(jpeg::is_jpeg(&payload));
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }
    assert_eq!((telemetry, frames), (20, 10));
    assert_eq!(node.now_ms(), 1000);
    // No command was ever sent.
    assert_eq!(node.world().robot, sc.start);
}

#[test]
fn harness_log_replays_and_records_all_kinds() {
    let sc = Scenario::parse(
        "bounds = -2 -2 4 2\nduration = 3\nperson 2 -0.2 2.3 0.2\n\
         @ 0.5 {\"transcript\": \"turn left\", \"lang\": \"en\"}\n\
         @ 0.6 {\"dialog\": {\"ack\": true}}\n\
         @ 0.7 {\"dialog\": {\"target\": \"fr\"}}\n\
         @ 2.0 {\"transcript\": \"jump\"}",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let log = EventLog::open(dir.path(), 0).unwrap();
    let path = log.path().unwrap().to_path_buf();
    let mut h = Harness::new(&sc, None, CentralConfig::default(), Box::new(OracleBackend), Box::new(phrases()), log)
        .unwrap();
    h.run();
    let statuses: Vec<u16> = h.results().iter().map(|r| r.response.status).collect();
    assert_eq!(statuses, [200, 200, 200, 422]);
    assert!(h.front().world().robot.theta > 1.0, "robot did not turn");

    let text = std::fs::read_to_string(path).unwrap();
    let snap = h.central().snapshot(h.now_ms());
    assert_eq!(replay_jsonl(&text).unwrap(), snap.replay_view());
    let kinds: std::collections::BTreeSet<String> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["kind"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(kinds.len(), 5, "{kinds:?}");
}

#[test]
fn ready_dialog_accepts_drive_then_stop() {
    let sc = Scenario::parse("bounds = -3 -3 3 3\nduration = 4").unwrap();
    let mut h = Harness::new(
        &sc,
        None,
        CentralConfig::default(),
        Box::new(OracleBackend),
        Box::new(StubTranslator::default()),
        EventLog::memory(),
    )
    .unwrap();
    h.central_mut().set_dialog(DialogState::ready("en", "en"));
    assert!(h.command(json!({"transcript": "move forward 2 meters"})).is_ok());
    h.run_until(1.0);
    assert!(h.command(json!({"stop": true})).is_ok());
    h.run();
    let x = h.front().world().robot.x;
    // 0.2 m/s for one second, give or take one tick of latency.
    assert!((x - 0.2).abs() <= 0.2 * 0.05 + 1e-9, "{x}");
    assert!(!h.central().has_active_plan());
    assert!(h.trace().last().unwrap().applied.is_zero());
}

#[test]
fn agent_config_file_round_trip() {
    let cfg = AgentConfig::parse("# front node\nwatchdog_timeout = 0.25\nstop_distance=0.5\n").unwrap();
    assert_eq!(cfg.watchdog_timeout, 0.25);
    assert_eq!(cfg.stop_distance, 0.5);
    assert!(AgentConfig::parse("warp_factor = 9").is_err());
}
