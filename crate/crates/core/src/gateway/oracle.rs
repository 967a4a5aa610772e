use std::collections::HashMap;

use super::{Backend, BackendRequest, BackendResponse, GatewayError};
use crate::eval::render_answer;
use crate::oracle::exact_solution;
use crate::prompt::{statement, Role, TARGET_MARKER};
use crate::task::{Payload, ProblemInstance};

/// Backend that answers every known target question correctly, by running
/// the exact solver on the instance whose statement follows the target
/// marker. Useful for exercising the pipeline end to end offline.
pub struct OracleBackend {
    by_statement: HashMap<String, Payload>,
}

impl OracleBackend {
    pub fn new<'a>(instances: impl IntoIterator<Item = &'a ProblemInstance>) -> Self {
        let by_statement =
            instances.into_iter().map(|i| (statement(&i.payload).trim().to_string(), i.payload.clone())).collect();
        OracleBackend { by_statement }
    }

    fn target(req: &BackendRequest) -> Option<&str> {
        req.messages
            .iter()
            .rev()
            .filter(|m| m.role == Role::User)
            .find_map(|m| m.text.split_once(TARGET_MARKER).map(|(_, t)| t.trim()))
    }
}

impl Backend for OracleBackend {
    fn name(&self) -> &str {
        "oracle"
    }

    fn supports_thinking(&self) -> bool {
        true
    }

    fn call(&self, req: &BackendRequest) -> Result<BackendResponse, GatewayError> {
        let target = Self::target(req).ok_or_else(|| GatewayError::Rejected("no target question in the prompt".into()))?;
        let payload = self
            .by_statement
            .get(target)
            .ok_or_else(|| GatewayError::Rejected("target question is not a known instance".into()))?;
        let solution = exact_solution(payload)
            .ok_or_else(|| GatewayError::Rejected("instance has no solution".into()))?;
        let mut resp = BackendResponse::text(render_answer(payload, &solution));
        if req.thinking {
            resp.thinking_text = Some("solved exactly".into());
        }
        Ok(resp)
    }
}
