//! Starts the server in-process and plays one game over the WebSocket as a
//! human speaker who names every attribute of the target.
//!
//! cargo run --example scripted_client -p refgame-service

use std::sync::Arc;

use anyhow::{bail, Result};
use futures::{SinkExt, StreamExt};
use refgame_service::{router, AppState, ServiceConfig};
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;

#[tokio::main]
async fn main() -> Result<()> {
    let data = tempfile::tempdir()?;
    let config = ServiceConfig {
        data_dir: data.path().to_path_buf(),
        ..ServiceConfig::default()
    };
    let state = tokio::task::spawn_blocking(move || AppState::from_config(&config)).await??;
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    let app = router(Arc::new(state));
    tokio::spawn(async move { axum::serve(listener, app).await });

    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await?;
    ws.send(Message::Text(
        json!({"type": "join", "role": "humanSpeaker", "seed": 1})
            .to_string()
            .into(),
    ))
    .await?;
    let mut state = recv(&mut ws).await?;
    let id = state["sessionId"].as_str().unwrap().to_string();
    println!("session {id}");
    while state["type"] == "state" {
        let target = &state["target"];
        let object = state["context"]
            .as_array()
            .unwrap()
            .iter()
            .find(|o| &o["id"] == target)
            .unwrap();
        let text = object["description"].as_str().unwrap().to_string();
        ws.send(Message::Text(
            json!({"type": "utterance", "sessionId": id, "text": text})
                .to_string()
                .into(),
        ))
        .await?;
        let selection = recv(&mut ws).await?;
        let feedback = recv(&mut ws).await?;
        println!(
            "trial {:>2}: said {:<32} agent picked {:>4} {}",
            feedback["trialIndex"],
            text,
            selection["objectId"],
            if feedback["correct"] == true {
                "right"
            } else {
                "wrong"
            }
        );
        state = recv(&mut ws).await?;
    }
    println!("game over: {}", state["summary"]);
    let transcript = reqwest::get(format!("http://{addr}/sessions/{id}/transcript"))
        .await?
        .text()
        .await?;
    println!("transcript has {} lines", transcript.lines().count());
    Ok(())
}

async fn recv<S>(ws: &mut S) -> Result<Value>
where
    S: StreamExt<Item = Result<Message, tokio_tungstenite::tungstenite::Error>> + Unpin,
{
    match ws.next().await {
        Some(Ok(Message::Text(t))) => Ok(serde_json::from_str(t.as_str())?),
        other => bail!("unexpected frame {other:?}"),
    }
}
