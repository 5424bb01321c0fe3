#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use anyhow::{bail, Context as _, Result};
use futures::{SinkExt, StreamExt};
use refgame::captioner::PretrainConfig;
use refgame::game::GameEnv;
use refgame::setup::{Pretrained, SetupConfig, WorldConfig};
use refgame_service::{router, AppState, ServerSettings, TranscriptStore};
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

/// A quick-to-train world shared by every test in the binary.
pub fn setup() -> SetupConfig {
    SetupConfig {
        world: WorldConfig {
            pool_size: 200,
            ..WorldConfig::default()
        },
        pretrain: PretrainConfig {
            embed_dim: 16,
            hidden_dim: 24,
            max_epochs: 8,
            ..PretrainConfig::default()
        },
        ..SetupConfig::default()
    }
}

pub fn settings() -> ServerSettings {
    ServerSettings {
        setup: setup(),
        ..ServerSettings::default()
    }
}

pub fn pretrained() -> &'static (Pretrained, GameEnv) {
    static CELL: OnceLock<(Pretrained, GameEnv)> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = setup().pretrain().expect("pretraining succeeds");
        let env = p.env(&setup()).expect("environment builds");
        (p, env)
    })
}

pub fn state(data_dir: &Path) -> AppState {
    let env = pretrained().1.clone();
    AppState::new(
        env,
        settings(),
        TranscriptStore::open(data_dir).unwrap(),
        11,
    )
}

pub async fn spawn(state: AppState) -> (SocketAddr, Arc<AppState>) {
    let state = Arc::new(state);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(state.clone());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (addr, state)
}

pub struct Client {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
}

impl Client {
    pub async fn connect(addr: SocketAddr) -> Result<Self> {
        let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await?;
        Ok(Self { ws })
    }

    pub async fn send_text(&mut self, text: &str) -> Result<()> {
        self.ws.send(Message::Text(text.into())).await?;
        Ok(())
    }

    pub async fn send(&mut self, v: Value) -> Result<()> {
        self.send_text(&v.to_string()).await
    }

    pub async fn recv(&mut self) -> Result<Value> {
        let frame = tokio::time::timeout(Duration::from_secs(30), self.ws.next())
            .await
            .context("no reply within 30 s")?
            .context("socket closed")??;
        match frame {
            Message::Text(t) => {
                let v: Value = serde_json::from_str(t.as_str())?;
                if v["version"] != 1
                    || v.get("sessionId").is_none()
                    || v.get("trialIndex").is_none()
                {
                    bail!("server message lacks version, sessionId or trialIndex: {v}");
                }
                Ok(v)
            }
            other => bail!("unexpected frame {other:?}"),
        }
    }

    pub async fn expect(&mut self, kind: &str) -> Result<Value> {
        let v = self.recv().await?;
        if v["type"] != kind {
            bail!("expected {kind}, got {v}");
        }
        Ok(v)
    }

    pub async fn join(&mut self, role: &str, seed: u64) -> Result<Value> {
        self.send(json!({"type": "join", "role": role, "seed": seed}))
            .await?;
        self.expect("state").await
    }
}

/// A description naming the target's colour and shape.
pub fn describe_target(state: &Value) -> String {
    let target = &state["target"];
    let obj = state["context"]
        .as_array()
        .unwrap()
        .iter()
        .find(|o| &o["id"] == target)
        .expect("target is in the context");
    let words: Vec<&str> = obj["description"].as_str().unwrap().split(' ').collect();
    format!("the {} {}", words[1], words[3])
}

pub async fn get_json(addr: SocketAddr, path: &str) -> Result<Value> {
    Ok(reqwest::get(format!("http://{addr}{path}"))
        .await?
        .error_for_status()?
        .json()
        .await?)
}
