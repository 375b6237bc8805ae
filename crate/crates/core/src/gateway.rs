//! Completion gateway with live, record, replay, and stub modes.
//!
//! Every completion is keyed by a content hash of the full request, so a
//! recorded session replays byte-for-byte without network access. Stub mode
//! serves scripted responses keyed by (stage, method id), and can also fill
//! a record directory to bootstrap replay caches.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Isp,
    Select,
    Instantiate,
    Baseline,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Isp => "isp",
            Stage::Select => "select",
            Stage::Instantiate => "instantiate",
            Stage::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Live,
    Record,
    Replay,
    Stub,
}

/// One worked example shown before the real prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShot {
    pub user: String,
    pub assistant: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptRecord {
    pub stage: Stage,
    pub method_id: String,
    pub prompt: String,
    pub response: String,
    pub latency_ms: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone)]
pub struct CompletionResult {
    pub text: String,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct PriceTable {
    /// Dollars per million prompt tokens.
    pub prompt_per_million: f64,
    /// Dollars per million completion tokens.
    pub completion_per_million: f64,
}

pub fn estimate_cost(prompt_tokens: u64, completion_tokens: u64, prices: &PriceTable) -> f64 {
    (prompt_tokens as f64 / 1_000_000.0) * prices.prompt_per_million
        + (completion_tokens as f64 / 1_000_000.0) * prices.completion_per_million
}

/// Rough token count: one token per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

/// Content hash over the stage and every message, each length-prefixed.
pub fn hash_prompt(stage: Stage, few_shot: &[FewShot], prompt: &str) -> String {
    let mut hasher = Sha256::new();
    let mut part = |s: &str| {
        hasher.update((s.len() as u64).to_le_bytes());
        hasher.update(s.as_bytes());
    };
    part(stage.as_str());
    for fs in few_shot {
        part(&fs.user);
        part(&fs.assistant);
    }
    part(prompt);
    hex::encode(hasher.finalize())
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("transport failed after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("no cached completion at {0}")]
    CacheMiss(PathBuf),
    #[error("no stub response for stage {stage} and method {method_id}")]
    StubMiss { stage: &'static str, method_id: String },
    #[error("cache io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad record file {path}: {err}")]
    BadRecord { path: PathBuf, err: String },
}

pub struct TransportRequest {
    pub endpoint: String,
    pub model: String,
    pub api_key: String,
    pub few_shot: Vec<FewShot>,
    pub prompt: String,
}

pub struct TransportResponse {
    pub text: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

pub trait Transport: Send + Sync {
    fn complete(&self, req: &TransportRequest) -> Result<TransportResponse, String>;
}

/// OpenAI-style chat completions over HTTP. Temperature pins to zero so the
/// same prompt yields the same completion wherever the provider honors it.
pub struct HttpTransport;

impl Transport for HttpTransport {
    fn complete(&self, req: &TransportRequest) -> Result<TransportResponse, String> {
        let mut messages = Vec::new();
        for fs in &req.few_shot {
            messages.push(serde_json::json!({"role": "user", "content": fs.user}));
            messages.push(serde_json::json!({"role": "assistant", "content": fs.assistant}));
        }
        messages.push(serde_json::json!({"role": "user", "content": req.prompt}));
        let body = serde_json::json!({
            "model": req.model,
            "temperature": 0,
            "messages": messages,
        });
        let resp = ureq::post(&req.endpoint)
            .set("Authorization", &format!("Bearer {}", req.api_key))
            .set("Content-Type", "application/json")
            .send_json(body)
            .map_err(|e| e.to_string())?;
        let json: serde_json::Value = resp.into_json().map_err(|e| e.to_string())?;
        let text = json["choices"][0]["message"]["content"]
            .as_str()
            .ok_or("response missing choices[0].message.content")?
            .to_string();
        Ok(TransportResponse {
            text,
            prompt_tokens: json["usage"]["prompt_tokens"].as_u64(),
            completion_tokens: json["usage"]["completion_tokens"].as_u64(),
        })
    }
}

/// Scripted responses for stub mode. A string value repeats forever; an
/// array is consumed in order and its last element repeats.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StubScript {
    #[serde(default)]
    pub isp: BTreeMap<String, StubEntry>,
    #[serde(default)]
    pub select: BTreeMap<String, StubEntry>,
    #[serde(default)]
    pub instantiate: BTreeMap<String, StubEntry>,
    #[serde(default)]
    pub baseline: BTreeMap<String, StubEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StubEntry {
    One(String),
    Seq(Vec<String>),
}

impl StubScript {
    pub fn load(path: &Path) -> Result<StubScript, GatewayError> {
        let s = std::fs::read_to_string(path)?;
        serde_json::from_str(&s).map_err(|e| GatewayError::BadRecord {
            path: path.to_path_buf(),
            err: e.to_string(),
        })
    }

    fn table(&self, stage: Stage) -> &BTreeMap<String, StubEntry> {
        match stage {
            Stage::Isp => &self.isp,
            Stage::Select => &self.select,
            Stage::Instantiate => &self.instantiate,
            Stage::Baseline => &self.baseline,
        }
    }

    fn lookup(&self, stage: Stage, method_id: &str, nth: usize) -> Option<String> {
        let table = self.table(stage);
        let entry = table.get(method_id).or_else(|| table.get("*"))?;
        Some(match entry {
            StubEntry::One(s) => s.clone(),
            StubEntry::Seq(v) => v.get(nth).or(v.last())?.clone(),
        })
    }
}

pub struct GatewayConfig {
    pub mode: Mode,
    pub endpoint: String,
    pub model: String,
    pub api_key: String,
    pub cache_dir: Option<PathBuf>,
    pub record_dir: Option<PathBuf>,
    pub stub: Option<StubScript>,
    pub backoff_base_ms: u64,
    pub min_interval_ms: u64,
}

impl GatewayConfig {
    pub fn stub_only(stub: StubScript) -> GatewayConfig {
        GatewayConfig {
            mode: Mode::Stub,
            endpoint: String::new(),
            model: String::new(),
            api_key: String::new(),
            cache_dir: None,
            record_dir: None,
            stub: Some(stub),
            backoff_base_ms: 0,
            min_interval_ms: 0,
        }
    }
}

#[derive(Debug, Default, Clone)]
pub struct UsageTotals {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub calls_by_stage: BTreeMap<&'static str, u64>,
}

pub struct Gateway {
    config: GatewayConfig,
    transport: Box<dyn Transport>,
    ledger: Mutex<Vec<PromptRecord>>,
    totals: Mutex<UsageTotals>,
    stub_cursor: Mutex<HashMap<(Stage, String), usize>>,
    network_ops: AtomicU64,
    last_dispatch: Mutex<Option<Instant>>,
}

impl Gateway {
    pub fn new(config: GatewayConfig) -> Gateway {
        Gateway::with_transport(config, Box::new(HttpTransport))
    }

    pub fn with_transport(config: GatewayConfig, transport: Box<dyn Transport>) -> Gateway {
        Gateway {
            config,
            transport,
            ledger: Mutex::new(Vec::new()),
            totals: Mutex::new(UsageTotals::default()),
            stub_cursor: Mutex::new(HashMap::new()),
            network_ops: AtomicU64::new(0),
            last_dispatch: Mutex::new(None),
        }
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn network_ops(&self) -> u64 {
        self.network_ops.load(Ordering::SeqCst)
    }

    pub fn totals(&self) -> UsageTotals {
        self.totals.lock().unwrap().clone()
    }

    pub fn stage_calls(&self, stage: Stage) -> u64 {
        self.totals
            .lock()
            .unwrap()
            .calls_by_stage
            .get(stage.as_str())
            .copied()
            .unwrap_or(0)
    }

    pub fn ledger(&self) -> Vec<PromptRecord> {
        self.ledger.lock().unwrap().clone()
    }

    /// Sum of recorded latencies; the deterministic time measure.
    pub fn total_latency_ms(&self) -> u64 {
        self.ledger.lock().unwrap().iter().map(|r| r.latency_ms).sum()
    }

    pub fn estimated_cost(&self, prices: &PriceTable) -> f64 {
        let t = self.totals();
        estimate_cost(t.prompt_tokens, t.completion_tokens, prices)
    }

    pub fn complete(
        &self,
        stage: Stage,
        method_id: &str,
        few_shot: &[FewShot],
        prompt: &str,
    ) -> Result<CompletionResult, GatewayError> {
        let record = match self.config.mode {
            Mode::Stub => self.complete_stub(stage, method_id, few_shot, prompt)?,
            Mode::Replay => self.complete_replay(stage, method_id, few_shot, prompt)?,
            Mode::Live | Mode::Record => {
                self.complete_network(stage, method_id, few_shot, prompt)?
            }
        };
        if let Some(dir) = self.record_target() {
            self.persist(&dir, stage, few_shot, &record)?;
        }
        let result = CompletionResult {
            text: record.response.clone(),
            latency_ms: record.latency_ms,
        };
        {
            let mut totals = self.totals.lock().unwrap();
            totals.prompt_tokens += record.prompt_tokens;
            totals.completion_tokens += record.completion_tokens;
            *totals.calls_by_stage.entry(stage.as_str()).or_insert(0) += 1;
        }
        self.ledger.lock().unwrap().push(record);
        Ok(result)
    }

    fn record_target(&self) -> Option<PathBuf> {
        if let Some(d) = &self.config.record_dir {
            return Some(d.clone());
        }
        if self.config.mode == Mode::Record {
            return self.config.cache_dir.clone();
        }
        None
    }

    fn request_tokens(&self, few_shot: &[FewShot], prompt: &str) -> u64 {
        few_shot
            .iter()
            .map(|fs| estimate_tokens(&fs.user) + estimate_tokens(&fs.assistant))
            .sum::<u64>()
            + estimate_tokens(prompt)
    }

    fn complete_stub(
        &self,
        stage: Stage,
        method_id: &str,
        few_shot: &[FewShot],
        prompt: &str,
    ) -> Result<PromptRecord, GatewayError> {
        let nth = {
            let mut cursors = self.stub_cursor.lock().unwrap();
            let slot = cursors.entry((stage, method_id.to_string())).or_insert(0);
            let n = *slot;
            *slot += 1;
            n
        };
        let stub = self.config.stub.as_ref();
        let text = stub
            .and_then(|s| s.lookup(stage, method_id, nth))
            .ok_or_else(|| GatewayError::StubMiss {
                stage: stage.as_str(),
                method_id: method_id.to_string(),
            })?;
        Ok(PromptRecord {
            stage,
            method_id: method_id.to_string(),
            prompt: prompt.to_string(),
            response: text.clone(),
            latency_ms: 0,
            prompt_tokens: self.request_tokens(few_shot, prompt),
            completion_tokens: estimate_tokens(&text),
        })
    }

    fn rec_path(&self, dir: &Path, stage: Stage, hash: &str) -> PathBuf {
        dir.join(stage.as_str()).join(format!("{hash}.rec"))
    }

    fn complete_replay(
        &self,
        stage: Stage,
        method_id: &str,
        few_shot: &[FewShot],
        prompt: &str,
    ) -> Result<PromptRecord, GatewayError> {
        let Some(cache) = &self.config.cache_dir else {
            return Err(GatewayError::CacheMiss(PathBuf::from(
                "<no cache directory configured>",
            )));
        };
        let hash = hash_prompt(stage, few_shot, prompt);
        let path = self.rec_path(cache, stage, &hash);
        if !path.exists() {
            return Err(GatewayError::CacheMiss(path));
        }
        let s = std::fs::read_to_string(&path)?;
        let mut record: PromptRecord =
            serde_json::from_str(&s).map_err(|e| GatewayError::BadRecord {
                path: path.clone(),
                err: e.to_string(),
            })?;
        record.method_id = method_id.to_string();
        Ok(record)
    }

    fn complete_network(
        &self,
        stage: Stage,
        method_id: &str,
        few_shot: &[FewShot],
        prompt: &str,
    ) -> Result<PromptRecord, GatewayError> {
        let req = TransportRequest {
            endpoint: self.config.endpoint.clone(),
            model: self.config.model.clone(),
            api_key: self.config.api_key.clone(),
            few_shot: few_shot.to_vec(),
            prompt: prompt.to_string(),
        };
        let mut last = String::new();
        for attempt in 0..3u32 {
            if attempt > 0 {
                let backoff = self.config.backoff_base_ms << (attempt - 1);
                std::thread::sleep(Duration::from_millis(backoff));
            }
            self.rate_gate();
            self.network_ops.fetch_add(1, Ordering::SeqCst);
            let started = Instant::now();
            match self.transport.complete(&req) {
                Ok(resp) => {
                    let latency_ms = started.elapsed().as_millis() as u64;
                    let prompt_tokens = resp
                        .prompt_tokens
                        .unwrap_or_else(|| self.request_tokens(few_shot, prompt));
                    let completion_tokens = resp
                        .completion_tokens
                        .unwrap_or_else(|| estimate_tokens(&resp.text));
                    return Ok(PromptRecord {
                        stage,
                        method_id: method_id.to_string(),
                        prompt: prompt.to_string(),
                        response: resp.text,
                        latency_ms,
                        prompt_tokens,
                        completion_tokens,
                    });
                }
                Err(e) => last = e,
            }
        }
        Err(GatewayError::Exhausted { attempts: 3, last })
    }

    fn rate_gate(&self) {
        if self.config.min_interval_ms == 0 {
            return;
        }
        let mut guard = self.last_dispatch.lock().unwrap();
        if let Some(prev) = *guard {
            let min = Duration::from_millis(self.config.min_interval_ms);
            let elapsed = prev.elapsed();
            if elapsed < min {
                std::thread::sleep(min - elapsed);
            }
        }
        *guard = Some(Instant::now());
    }

    fn persist(
        &self,
        dir: &Path,
        stage: Stage,
        few_shot: &[FewShot],
        record: &PromptRecord,
    ) -> Result<(), GatewayError> {
        let hash = hash_prompt(stage, few_shot, &record.prompt);
        let path = self.rec_path(dir, stage, &hash);
        let parent = path.parent().unwrap();
        std::fs::create_dir_all(parent)?;
        let body = serde_json::to_string_pretty(record).expect("record serializes");
        // Write-then-rename keeps concurrent readers off half-written files.
        let tmp = parent.join(format!(".{hash}.{}.tmp", std::process::id()));
        std::fs::write(&tmp, body)?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicU32;

    struct FakeTransport {
        calls: AtomicU32,
        fail_first: u32,
    }

    impl Transport for FakeTransport {
        fn complete(&self, req: &TransportRequest) -> Result<TransportResponse, String> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fail_first {
                return Err("boom".into());
            }
            Ok(TransportResponse {
                text: format!("echo:{}", req.prompt),
                prompt_tokens: None,
                completion_tokens: None,
            })
        }
    }

    fn net_config(mode: Mode, cache: Option<PathBuf>) -> GatewayConfig {
        GatewayConfig {
            mode,
            endpoint: "http://localhost/v1".into(),
            model: "m".into(),
            api_key: "k".into(),
            cache_dir: cache,
            record_dir: None,
            stub: None,
            backoff_base_ms: 1,
            min_interval_ms: 0,
        }
    }

    #[test]
    fn stub_serves_scripted_sequences() {
        let mut stub = StubScript::default();
        stub.isp.insert(
            "a::m(int)".into(),
            StubEntry::Seq(vec!["first".into(), "second".into()]),
        );
        let gw = Gateway::with_transport(
            GatewayConfig::stub_only(stub),
            Box::new(FakeTransport {
                calls: AtomicU32::new(0),
                fail_first: 0,
            }),
        );
        let r1 = gw.complete(Stage::Isp, "a::m(int)", &[], "p").unwrap();
        let r2 = gw.complete(Stage::Isp, "a::m(int)", &[], "p").unwrap();
        let r3 = gw.complete(Stage::Isp, "a::m(int)", &[], "p").unwrap();
        assert_eq!(r1.text, "first");
        assert_eq!(r2.text, "second");
        assert_eq!(r3.text, "second");
        assert_eq!(gw.network_ops(), 0);
        assert_eq!(gw.stage_calls(Stage::Isp), 3);
    }

    #[test]
    fn stub_miss_is_an_error() {
        let gw = Gateway::with_transport(
            GatewayConfig::stub_only(StubScript::default()),
            Box::new(FakeTransport {
                calls: AtomicU32::new(0),
                fail_first: 0,
            }),
        );
        let err = gw.complete(Stage::Select, "x", &[], "p").unwrap_err();
        assert!(matches!(err, GatewayError::StubMiss { .. }));
    }

    #[test]
    fn record_then_replay_round_trips_without_network() {
        let dir = tempfile::tempdir().unwrap();
        let cache = dir.path().to_path_buf();
        let gw = Gateway::with_transport(
            net_config(Mode::Record, Some(cache.clone())),
            Box::new(FakeTransport {
                calls: AtomicU32::new(0),
                fail_first: 0,
            }),
        );
        let fs = vec![FewShot {
            user: "ex in".into(),
            assistant: "ex out".into(),
        }];
        let r = gw.complete(Stage::Instantiate, "a::m(int)", &fs, "hello").unwrap();
        assert_eq!(r.text, "echo:hello");
        assert_eq!(gw.network_ops(), 1);

        let replay = Gateway::with_transport(
            net_config(Mode::Replay, Some(cache)),
            Box::new(FakeTransport {
                calls: AtomicU32::new(0),
                fail_first: 99,
            }),
        );
        let r2 = replay
            .complete(Stage::Instantiate, "a::m(int)", &fs, "hello")
            .unwrap();
        assert_eq!(r2.text, "echo:hello");
        assert_eq!(replay.network_ops(), 0);
        let miss = replay
            .complete(Stage::Instantiate, "a::m(int)", &fs, "other")
            .unwrap_err();
        assert!(matches!(miss, GatewayError::CacheMiss(_)));
    }

    #[test]
    fn stub_with_record_dir_bootstraps_a_replay_cache() {
        let dir = tempfile::tempdir().unwrap();
        let cache = dir.path().to_path_buf();
        let mut stub = StubScript::default();
        stub.select.insert("id".into(), StubEntry::One("2".into()));
        let mut config = GatewayConfig::stub_only(stub);
        config.record_dir = Some(cache.clone());
        let gw = Gateway::with_transport(
            config,
            Box::new(FakeTransport {
                calls: AtomicU32::new(0),
                fail_first: 0,
            }),
        );
        gw.complete(Stage::Select, "id", &[], "pick one").unwrap();

        let replay = Gateway::with_transport(
            net_config(Mode::Replay, Some(cache)),
            Box::new(FakeTransport {
                calls: AtomicU32::new(0),
                fail_first: 99,
            }),
        );
        let r = replay.complete(Stage::Select, "id", &[], "pick one").unwrap();
        assert_eq!(r.text, "2");
    }

    #[test]
    fn retries_then_succeeds() {
        let gw = Gateway::with_transport(
            net_config(Mode::Live, None),
            Box::new(FakeTransport {
                calls: AtomicU32::new(0),
                fail_first: 2,
            }),
        );
        let r = gw.complete(Stage::Isp, "m", &[], "p").unwrap();
        assert_eq!(r.text, "echo:p");
        assert_eq!(gw.network_ops(), 3);
    }

    #[test]
    fn gives_up_after_three_attempts() {
        let gw = Gateway::with_transport(
            net_config(Mode::Live, None),
            Box::new(FakeTransport {
                calls: AtomicU32::new(0),
                fail_first: 99,
            }),
        );
        let err = gw.complete(Stage::Isp, "m", &[], "p").unwrap_err();
        assert!(matches!(err, GatewayError::Exhausted { attempts: 3, .. }));
        assert_eq!(gw.network_ops(), 3);
    }

    #[test]
    fn token_estimate_rounds_up_per_text() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("abcd"), 1);
        assert_eq!(estimate_tokens("abcde"), 2);
    }

    #[test]
    fn cost_estimate_matches_hand_computation() {
        let prices = PriceTable {
            prompt_per_million: 0.50,
            completion_per_million: 1.50,
        };
        let cost = estimate_cost(66_952_785, 6_240_207, &prices);
        assert!((cost - 42.836703).abs() < 1e-6);
    }

    #[test]
    fn prompt_hash_distinguishes_stage_and_few_shot() {
        let fs = vec![FewShot {
            user: "u".into(),
            assistant: "a".into(),
        }];
        let h1 = hash_prompt(Stage::Isp, &[], "p");
        let h2 = hash_prompt(Stage::Select, &[], "p");
        let h3 = hash_prompt(Stage::Isp, &fs, "p");
        assert_eq!(h1.len(), 64);
        assert_ne!(h1, h2);
        assert_ne!(h1, h3);
    }

    #[test]
    fn ledger_latency_totals_are_summed() {
        let mut stub = StubScript::default();
        stub.baseline.insert("*".into(), StubEntry::One("x".into()));
        let gw = Gateway::with_transport(
            GatewayConfig::stub_only(stub),
            Box::new(FakeTransport {
                calls: AtomicU32::new(0),
                fail_first: 0,
            }),
        );
        gw.complete(Stage::Baseline, "a", &[], "p1").unwrap();
        gw.complete(Stage::Baseline, "b", &[], "p2").unwrap();
        assert_eq!(gw.total_latency_ms(), 0);
        assert_eq!(gw.ledger().len(), 2);
        let totals = gw.totals();
        assert_eq!(totals.calls_by_stage.get("baseline"), Some(&2));
    }
}
