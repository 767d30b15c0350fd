//! The cycle loop: cores feed the controller, completions feed the cores.
//!
//! Per cycle: completions due this cycle return to their cores, cores emit
//! (round-robin starting at `cycle % cores`), then the controller steps.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::controller::{Controller, ControllerConfig, ControllerCounters, EnqueueError, MemRequest, StepError};
use crate::dram::{AddressError, Cycle, Geometry, TimingParams};
use crate::records::{CompletionRecord, LogRecord};
use crate::refresh::Policy;
use crate::workload::{AccessKind, CoreModel, TraceEntry};
use crate::ConfigError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("core {core}: {source}")]
    Address { core: usize, source: AddressError },
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("simulation did not finish within {0} cycles")]
    CycleLimit(Cycle),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOptions {
    pub max_outstanding_reads: usize,
    /// Keep simulating (refreshes included) until at least this cycle.
    pub min_cycles: Cycle,
    pub max_cycles: Cycle,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            max_outstanding_reads: 8,
            min_cycles: 0,
            max_cycles: 200_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoreOutcome {
    pub instructions: u64,
    pub cycles_to_finish: Cycle,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: Vec<LogRecord>,
    /// Sorted by request id.
    pub completions: Vec<CompletionRecord>,
    pub cores: Vec<CoreOutcome>,
    pub counters: ControllerCounters,
    /// First cycle not simulated.
    pub end_cycle: Cycle,
}

pub fn simulate(
    geometry: &Geometry,
    params: &TimingParams,
    policy: Policy,
    config: &ControllerConfig,
    traces: Vec<Vec<TraceEntry>>,
    options: &SimOptions,
) -> Result<RunOutput, SimError> {
    let mut controller = Controller::new(geometry, params, policy, config)?;
    let mut cores: Vec<CoreModel> = traces
        .into_iter()
        .enumerate()
        .map(|(i, t)| CoreModel::new(i, options.max_outstanding_reads, t))
        .collect();
    let n = cores.len();
    let mut in_flight: BinaryHeap<Reverse<(Cycle, u64)>> = BinaryHeap::new();
    let mut requests: std::collections::HashMap<u64, MemRequest> = std::collections::HashMap::new();
    let mut completions = Vec::new();
    let mut next_id = 0u64;
    let mut cycle: Cycle = 0;

    loop {
        while let Some(&Reverse((done, id))) = in_flight.peek() {
            if done > cycle {
                break;
            }
            in_flight.pop();
            let req = requests.remove(&id).expect("in-flight request");
            if req.kind == AccessKind::Read {
                cores[req.core].read_completed(done);
            }
            completions.push(CompletionRecord {
                id: req.id,
                core: req.core,
                kind: req.kind,
                arrival: req.arrival,
                first_issue: req.first_issue.unwrap_or(done),
                completion: done,
                address: req.address,
            });
        }

        for k in 0..n {
            let core = (cycle as usize + k) % n;
            let Some(entry) = cores[core].core_step(cycle) else {
                continue;
            };
            let address = geometry
                .decode(entry.address)
                .map_err(|source| SimError::Address { core, source })?;
            let req = MemRequest::new(next_id, core, entry.kind, address, cycle);
            match controller.enqueue(req) {
                Ok(()) => {
                    next_id += 1;
                    cores[core].emitted(cycle);
                }
                Err(EnqueueError::Backpressure) => {}
            }
        }

        let traces_done = cores.iter().all(|c| c.trace_exhausted());
        for req in controller.step(cycle, traces_done)? {
            let done = req.completion.expect("issued request carries its completion");
            in_flight.push(Reverse((done, req.id)));
            requests.insert(req.id, req);
        }
        cycle += 1;

        let finished = in_flight.is_empty() && controller.is_drained() && cores.iter().all(|c| c.finished());
        if finished && cycle >= options.min_cycles {
            break;
        }
        if cycle >= options.max_cycles {
            return Err(SimError::CycleLimit(options.max_cycles));
        }
    }

    completions.sort_by_key(|c| c.id);
    let (log, counters) = controller.into_log();
    Ok(RunOutput {
        log,
        completions,
        cores: cores
            .iter()
            .map(|c| CoreOutcome {
                instructions: c.instructions(),
                cycles_to_finish: c.cycles_to_finish(),
            })
            .collect(),
        counters,
        end_cycle: cycle,
    })
}
