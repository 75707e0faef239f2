use std::collections::VecDeque;

use super::events::{EventKind, EventQueue};
use super::random::Streams;
use crate::analytic::Variant;

/// What to record for each sampled job.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Record {
    /// Sojourn time at the k-th completion.
    Sojourn,
    /// Per-sub-queue sojourn times, once all `n` sub-tasks have finished.
    AllSubtasks,
}

#[derive(Clone, Debug)]
pub(crate) struct EngineParams {
    pub n: usize,
    pub k: usize,
    pub variant: Variant,
    pub sample_rate: f64,
    pub target_samples: usize,
    pub warmup_jobs: u64,
    pub job_budget: u64,
    pub record: Record,
    pub trace: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub time: f64,
    pub queue: usize,
    pub job: u64,
}

#[derive(Debug, Default)]
pub(crate) struct Outcome {
    pub sojourns: Vec<f64>,
    pub subtask_sojourns: Vec<Vec<f64>>,
    pub arrivals: u64,
    pub converged: bool,
    /// Sub-task completions in processing order, when tracing.
    pub trace: Vec<TraceEntry>,
}

struct Job {
    arrival: f64,
    services: Vec<f64>,
    completed: usize,
    /// Sub-queues still holding this job, waiting or in service.
    refs: usize,
    /// Reached k completions.
    departed: bool,
    sampled: bool,
    finish_times: Vec<f64>,
}

#[derive(Default)]
struct Server {
    waiting: VecDeque<u64>,
    busy: Option<u64>,
    epoch: u64,
}

struct Engine<'a> {
    p: &'a EngineParams,
    streams: &'a mut Streams,
    events: EventQueue,
    servers: Vec<Server>,
    jobs: VecDeque<Job>,
    first_job: u64,
    busy_servers: usize,
    /// Split-merge: jobs waiting for the whole server group.
    sm_waiting: VecDeque<u64>,
    sm_current: Option<u64>,
    zero_load: bool,
    arrivals: u64,
    sampled_arrivals: usize,
    arrivals_open: bool,
    out: Outcome,
}

pub(crate) fn simulate(p: &EngineParams, streams: &mut Streams) -> Outcome {
    let mut engine = Engine {
        p,
        events: EventQueue::new(),
        servers: (0..p.n).map(|_| Server::default()).collect(),
        jobs: VecDeque::new(),
        first_job: 0,
        busy_servers: 0,
        sm_waiting: VecDeque::new(),
        sm_current: None,
        zero_load: false,
        arrivals: 0,
        sampled_arrivals: 0,
        arrivals_open: true,
        out: Outcome::default(),
        streams,
    };
    engine.run();
    engine.out
}

impl Engine<'_> {
    fn run(&mut self) {
        match self.streams.next_interarrival() {
            Some(dt) => self.events.schedule(dt, EventKind::Arrival),
            None => {
                self.zero_load = true;
                self.events.schedule(0.0, EventKind::Arrival);
            }
        }

        while let Some(ev) = self.events.pop() {
            let now = ev.time;
            match ev.kind {
                EventKind::Arrival => self.on_arrival(now),
                EventKind::Completion { queue, job, epoch } => self.on_completion(now, queue, job, epoch),
            }
            if self.done() {
                break;
            }
            if self.zero_load && self.arrivals_open && self.is_idle() {
                self.events.schedule(now, EventKind::Arrival);
            }
        }
        self.out.arrivals = self.arrivals;
        self.out.converged = self.recorded() == self.p.target_samples;
    }

    fn recorded(&self) -> usize {
        match self.p.record {
            Record::Sojourn => self.out.sojourns.len(),
            Record::AllSubtasks => self.out.subtask_sojourns.len(),
        }
    }

    fn done(&self) -> bool {
        self.recorded() >= self.p.target_samples
    }

    fn is_idle(&self) -> bool {
        match self.p.variant {
            Variant::SplitMerge => self.sm_current.is_none() && self.sm_waiting.is_empty(),
            _ => self.busy_servers == 0,
        }
    }

    fn job(&mut self, id: u64) -> &mut Job {
        &mut self.jobs[(id - self.first_job) as usize]
    }

    fn on_arrival(&mut self, now: f64) {
        let id = self.arrivals;
        self.arrivals += 1;
        let decision = self.streams.sample_decision(self.p.sample_rate);
        let sampled = decision && id >= self.p.warmup_jobs;
        if sampled {
            self.sampled_arrivals += 1;
        }
        let services = self.streams.service_times();
        let track = sampled && self.p.record == Record::AllSubtasks;
        self.jobs.push_back(Job {
            arrival: now,
            services,
            completed: 0,
            refs: self.p.n,
            departed: false,
            sampled,
            finish_times: if track { vec![f64::NAN; self.p.n] } else { Vec::new() },
        });

        if self.sampled_arrivals >= self.p.target_samples || self.arrivals >= self.p.job_budget {
            self.arrivals_open = false;
        } else if !self.zero_load {
            if let Some(dt) = self.streams.next_interarrival() {
                self.events.schedule(now + dt, EventKind::Arrival);
            }
        }

        if self.p.variant == Variant::SplitMerge {
            self.sm_waiting.push_back(id);
            if self.sm_current.is_none() {
                self.start_split_merge_job(now);
            }
        } else {
            for q in 0..self.p.n {
                self.servers[q].waiting.push_back(id);
                if self.servers[q].busy.is_none() {
                    self.start_next(q, now);
                }
            }
        }
    }

    fn begin_service(&mut self, q: usize, job: u64, now: f64) {
        let service = self.job(job).services[q];
        let server = &mut self.servers[q];
        debug_assert!(server.busy.is_none());
        server.busy = Some(job);
        server.epoch += 1;
        let epoch = server.epoch;
        self.busy_servers += 1;
        self.events.schedule(now + service, EventKind::Completion { queue: q, job, epoch });
    }

    fn end_service(&mut self, q: usize) {
        let server = &mut self.servers[q];
        server.busy = None;
        server.epoch += 1;
        self.busy_servers -= 1;
    }

    /// Starts the next live sub-task at server `q`, dropping purged ones.
    fn start_next(&mut self, q: usize, now: f64) {
        while let Some(job) = self.servers[q].waiting.pop_front() {
            if self.job(job).departed && self.p.variant == Variant::Purging {
                self.release(job);
                continue;
            }
            self.begin_service(q, job, now);
            return;
        }
    }

    fn start_split_merge_job(&mut self, now: f64) {
        if let Some(job) = self.sm_waiting.pop_front() {
            self.sm_current = Some(job);
            for q in 0..self.p.n {
                self.begin_service(q, job, now);
            }
        }
    }

    fn on_completion(&mut self, now: f64, q: usize, job: u64, epoch: u64) {
        let server = &self.servers[q];
        if server.epoch != epoch || server.busy != Some(job) {
            return; // preempted or discarded
        }
        self.end_service(q);
        if self.p.trace {
            self.out.trace.push(TraceEntry { time: now, queue: q, job });
        }

        let (n, k) = (self.p.n, self.p.k);
        let record = self.p.record;
        let j = self.job(job);
        j.completed += 1;
        if !j.finish_times.is_empty() {
            j.finish_times[q] = now - j.arrival;
        }
        let reached_quorum = j.completed == k && !j.departed;
        if reached_quorum {
            j.departed = true;
            if j.sampled && record == Record::Sojourn {
                let sojourn = now - j.arrival;
                self.out.sojourns.push(sojourn);
            }
        }
        let j = self.job(job);
        if j.completed == n && j.sampled && record == Record::AllSubtasks {
            let times = std::mem::take(&mut j.finish_times);
            self.out.subtask_sojourns.push(times);
        }

        match self.p.variant {
            Variant::SplitMerge => {
                if reached_quorum {
                    for other in 0..n {
                        if self.servers[other].busy == Some(job) {
                            self.end_service(other);
                        }
                    }
                    self.job(job).refs = 0;
                    self.sm_current = None;
                    self.retire_front();
                    self.start_split_merge_job(now);
                }
            }
            Variant::Purging => {
                self.release(job);
                if reached_quorum {
                    for other in 0..n {
                        if self.servers[other].busy == Some(job) {
                            self.end_service(other);
                            self.release(job);
                            self.start_next(other, now);
                        }
                    }
                }
                self.start_next(q, now);
            }
            Variant::Basic | Variant::NonPurging => {
                self.release(job);
                self.start_next(q, now);
            }
        }
    }

    fn release(&mut self, job: u64) {
        let j = self.job(job);
        j.refs -= 1;
        if j.refs == 0 {
            self.retire_front();
        }
    }

    fn retire_front(&mut self) {
        while let Some(front) = self.jobs.front() {
            if front.refs == 0 && front.departed {
                self.jobs.pop_front();
                self.first_job += 1;
            } else {
                break;
            }
        }
    }
}
