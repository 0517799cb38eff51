//! Concurrent refinement over many requests, one sweep per threshold.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use dve_core::refinement::{refine_loop, LvlmClient, PassRateSummary, RefineRequest, UpdateScorer};
use dve_core::{RefinementConfig, RefinementTrace};
use serde::{Deserialize, Serialize};

use crate::jsonl::{read_lines, write_lines, JsonlError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaRun {
    pub eta: f64,
    /// In request order.
    pub traces: Vec<RefinementTrace>,
    pub summary: PassRateSummary,
}

/// Run every request under `config`, at most `concurrency` at a time.
/// Traces come back in request order regardless of completion order.
pub fn refine_all<C, S>(
    client: &C,
    scorer: &S,
    requests: &[RefineRequest],
    config: &RefinementConfig,
    concurrency: usize,
) -> Vec<RefinementTrace>
where
    C: LvlmClient + Sync + ?Sized,
    S: UpdateScorer + Sync + ?Sized,
{
    let workers = concurrency.max(1).min(requests.len());
    if workers <= 1 {
        return requests.iter().map(|r| refine_loop(client, scorer, r, config)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<RefinementTrace>>> = Mutex::new(vec![None; requests.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(request) = requests.get(i) else { break };
                let trace = refine_loop(client, scorer, request, config);
                slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(trace);
            });
        }
    });
    slots.into_inner().unwrap_or_else(|e| e.into_inner()).into_iter().map(|t| t.expect("every slot filled")).collect()
}

/// One full sweep per threshold in `etas`; empty `etas` means `config.eta`.
pub fn batch_refine<C, S>(
    client: &C,
    scorer: &S,
    requests: &[RefineRequest],
    config: &RefinementConfig,
    etas: &[f64],
    concurrency: usize,
) -> Vec<EtaRun>
where
    C: LvlmClient + Sync + ?Sized,
    S: UpdateScorer + Sync + ?Sized,
{
    let etas = if etas.is_empty() { std::slice::from_ref(&config.eta) } else { etas };
    etas.iter()
        .map(|&eta| {
            let config = RefinementConfig { eta, ..config.clone() };
            let traces = refine_all(client, scorer, requests, &config, concurrency);
            let summary = PassRateSummary::from_traces(eta, config.max_rounds, &traces);
            EtaRun { eta, traces, summary }
        })
        .collect()
}

pub fn write_traces(path: &Path, traces: &[RefinementTrace]) -> Result<(), JsonlError> {
    write_lines(path, traces)
}

pub fn read_traces(path: &Path) -> Result<Vec<RefinementTrace>, JsonlError> {
    Ok(read_lines(path)?.into_iter().map(|(_, t)| t).collect())
}

pub fn read_requests(path: &Path) -> Result<Vec<RefineRequest>, JsonlError> {
    Ok(read_lines(path)?.into_iter().map(|(_, r)| r).collect())
}

/// File name for the traces of one threshold, e.g. `traces-eta1.5.jsonl`.
pub fn trace_file_name(eta: f64) -> String {
    format!("traces-eta{eta}.jsonl")
}
