use std::sync::Mutex;

use super::{Backend, BackendRequest, BackendResponse, GatewayError};

type Responder = dyn Fn(&BackendRequest, usize) -> Result<BackendResponse, GatewayError> + Send + Sync;

/// Test double. Either replays a script (the last entry repeats) or asks
/// a closure, which also receives the 0-based call number.
pub struct MockBackend {
    name: String,
    thinking: bool,
    responder: Box<Responder>,
    calls: Mutex<Vec<BackendRequest>>,
}

impl MockBackend {
    pub fn scripted(script: Vec<Result<BackendResponse, GatewayError>>) -> Self {
        assert!(!script.is_empty(), "a mock script needs at least one entry");
        Self::from_fn(move |_, i| script[i.min(script.len() - 1)].clone())
    }

    /// Always answers `text`.
    pub fn constant(text: impl Into<String>) -> Self {
        let text = text.into();
        Self::from_fn(move |_, _| Ok(BackendResponse::text(text.clone())))
    }

    pub fn from_fn(f: impl Fn(&BackendRequest, usize) -> Result<BackendResponse, GatewayError> + Send + Sync + 'static) -> Self {
        MockBackend { name: "mock".into(), thinking: false, responder: Box::new(f), calls: Mutex::new(Vec::new()) }
    }

    pub fn with_thinking(mut self, on: bool) -> Self {
        self.thinking = on;
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Every request received so far, in arrival order.
    pub fn calls(&self) -> Vec<BackendRequest> {
        self.calls.lock().expect("mock lock").clone()
    }
}

impl Backend for MockBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn supports_thinking(&self) -> bool {
        self.thinking
    }

    fn call(&self, req: &BackendRequest) -> Result<BackendResponse, GatewayError> {
        let i = {
            let mut calls = self.calls.lock().expect("mock lock");
            calls.push(req.clone());
            calls.len() - 1
        };
        (self.responder)(req, i)
    }
}
