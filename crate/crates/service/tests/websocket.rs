use std::net::SocketAddr;
use std::sync::Arc;
use std::thread;

use formcheck_core::matching::{build_database, PoseDatabase, PoseExemplar};
use formcheck_core::synth::{database_frames, generate, SynthKind};
use formcheck_core::PoseFrame;
use formcheck_service::protocol::ServerMessage;
use formcheck_service::{AppState, SessionState};
use futures::{SinkExt, StreamExt};
use serde_json::Value;
use tokio_tungstenite::tungstenite::Message;

async fn spawn_server(state: Arc<AppState>) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(formcheck_service::serve(state, listener));
    addr
}

fn frame_message(frame: &PoseFrame) -> String {
    let mut v = serde_json::to_value(frame).unwrap();
    v["type"] = "frame".into();
    v.to_string()
}

fn db(seed: u64) -> PoseDatabase {
    build_database(database_frames(10, 10, seed), 2.0).unwrap().0
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn sessions_survive_bad_input_and_stay_isolated() {
    let addr = spawn_server(Arc::new(AppState::new(db(1)))).await;
    let (mut a, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    let (mut b, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    let plank = generate(SynthKind::Plank, 1, 0.0, 5).unwrap().remove(0).frame.with_timestamp(4242);
    let text = frame_message(&plank);

    a.send(Message::Text(text[..20].to_string().into())).await.unwrap();
    b.send(Message::Text(text.clone().into())).await.unwrap();
    let ra: Value = serde_json::from_str(a.next().await.unwrap().unwrap().to_text().unwrap()).unwrap();
    let rb: Value = serde_json::from_str(b.next().await.unwrap().unwrap().to_text().unwrap()).unwrap();
    assert_eq!(ra["type"], "error");
    assert_eq!(ra["error"], "bad_frame");
    assert_eq!(rb["type"], "diagnosis");
    assert_eq!(rb["label"], "plank");
    assert_eq!(rb["t"], 4242);
    assert_eq!(rb["match"]["label"], "plank");
    assert!(rb["match"]["src"].is_string());

    a.send(Message::Text(text.into())).await.unwrap();
    let ra: Value = serde_json::from_str(a.next().await.unwrap().unwrap().to_text().unwrap()).unwrap();
    assert_eq!(ra["type"], "diagnosis");
    assert_eq!(ra["seq"], 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn replies_follow_frame_order() {
    let addr = spawn_server(Arc::new(AppState::new(db(2)))).await;
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    let (mut tx, mut rx) = ws.split();
    let frames = generate(SynthKind::Squat, 200, 0.02, 6).unwrap();
    let sender = tokio::spawn(async move {
        for (i, s) in frames.iter().enumerate() {
            tx.send(Message::Text(frame_message(&s.frame.clone().with_timestamp(i as i64 * 10)).into())).await.unwrap();
        }
        tx
    });
    for i in 0..200 {
        let v: Value = serde_json::from_str(rx.next().await.unwrap().unwrap().to_text().unwrap()).unwrap();
        assert_eq!(v["t"], i * 10);
        assert_eq!(v["seq"], i + 1);
    }
    let _sink = sender.await.unwrap();
}

/// Sessions keep classifying while exemplars are appended; each reply must
/// match a full classification against the snapshot version it names.
#[test]
fn every_frame_sees_exactly_one_snapshot() {
    let base = db(3);
    let added = generate(SynthKind::Squat, 20, 0.0, 99).unwrap();
    let extra: Vec<PoseExemplar> = added
        .iter()
        .enumerate()
        .map(|(i, s)| PoseExemplar::from_frame(&s.frame, s.label, format!("added-{i}")).unwrap())
        .collect();
    let mut versions = vec![base.clone()];
    for e in &extra {
        let next = versions.last().unwrap().with_exemplar(e.clone()).unwrap();
        versions.push(next);
    }
    let state = Arc::new(AppState::new(base));
    let probes = generate(SynthKind::PlankWithBentKnees, 50, 0.02, 7).unwrap();

    thread::scope(|scope| {
        let mut handles = Vec::new();
        for _ in 0..4 {
            let (state, probes, versions) = (&state, &probes, &versions);
            handles.push(scope.spawn(move || {
                let mut s = SessionState::open(state);
                for round in 0..20 {
                    for p in probes {
                        match s.handle_frame(state, &p.frame) {
                            ServerMessage::Diagnosis { matched, db_version, .. } => {
                                let expected = versions[(db_version - 1) as usize].classify(&p.frame).unwrap();
                                assert_eq!(matched.src, expected.best_source_id, "round {round}");
                                assert_eq!(matched.distance, expected.distance);
                            }
                            other => panic!("{other:?}"),
                        }
                    }
                }
            }));
        }
        for (i, (e, s)) in extra.iter().zip(&added).enumerate() {
            let snap = state.add_exemplar(&s.frame, e.label, &e.source_id).unwrap();
            assert_eq!(snap.version, i as u64 + 2);
        }
        for h in handles {
            h.join().unwrap();
        }
    });
    assert_eq!(state.snapshot().db.len(), 40);
}
