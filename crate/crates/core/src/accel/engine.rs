// Discrete-event core shared by both schedulers. A phase is a batch of jobs
// (one traversal level, or all PBSM tiles) that runs to completion before the
// next phase starts. Channel state and the result write counter persist
// across phases.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use super::{fetch_cycles, CycleStats, SimConfig};
use crate::join::{Pair, Policy};

/// One node pair (or tile) for a join unit.
pub(crate) struct Job {
    pub n_r: u64,
    pub n_s: u64,
    /// Qualifying outputs with their position `i * n_s + j` in the compare
    /// stream, ascending.
    pub outputs: Vec<(u64, Pair)>,
    /// Outputs go to the result region rather than the next-level task queue.
    pub to_results: bool,
}

#[derive(Default)]
pub(crate) struct PhaseOut {
    pub results: Vec<Pair>,
    /// Task-queue contents in write order.
    pub tasks: Vec<Pair>,
    pub cycles: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    Idle(usize),
    FetchDone(usize),
    ComputeDone(usize),
    WriteReq(usize),
    WriteDone(usize, bool),
    ChannelFree,
}

struct Flush {
    job: usize,
    lo: usize,
    hi: usize,
    is_final: bool,
}

#[derive(Default)]
struct Unit {
    queue: VecDeque<usize>,
    job: Option<usize>,
    read_req: Option<u64>,
    planned: VecDeque<Flush>,
    pending: VecDeque<Flush>,
    compute_end: u64,
    has_final: bool,
}

pub(crate) struct Machine<'c> {
    cfg: &'c SimConfig,
    now: u64,
    read_free: Vec<u64>,
    write_free: Vec<u64>,
    result_offset: u64,
    pub stats: CycleStats,
    pub result_offsets: Vec<u64>,
}

struct Events {
    heap: BinaryHeap<Reverse<(u64, u64, Ev)>>,
    seq: u64,
}

impl Events {
    fn push(&mut self, t: u64, ev: Ev) {
        self.heap.push(Reverse((t, self.seq, ev)));
        self.seq += 1;
    }
}

impl<'c> Machine<'c> {
    pub fn new(cfg: &'c SimConfig) -> Self {
        Machine {
            cfg,
            now: 0,
            read_free: vec![0; cfg.read_channels],
            write_free: vec![0; cfg.write_channels],
            result_offset: 0,
            stats: CycleStats {
                unit_busy_cycles: vec![0; cfg.num_join_units],
                ..Default::default()
            },
            result_offsets: Vec::new(),
        }
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn run_phase(&mut self, jobs: &[Job]) -> PhaseOut {
        let cfg = self.cfg;
        let n = cfg.num_join_units;
        let start = self.now;
        let mut out = PhaseOut::default();
        let mut units: Vec<Unit> = (0..n).map(|_| Unit::default()).collect();
        let mut shared: VecDeque<usize> = VecDeque::new();
        match cfg.scheduling_policy {
            Policy::Static => {
                for j in 0..jobs.len() {
                    units[j % n].queue.push_back(j);
                }
            }
            Policy::Dynamic => shared.extend(0..jobs.len()),
        }

        let mut ev = Events {
            heap: BinaryHeap::new(),
            seq: 0,
        };
        for u in 0..n {
            ev.push(start, Ev::Idle(u));
        }
        for &f in self.read_free.iter().chain(&self.write_free) {
            if f > start {
                ev.push(f, Ev::ChannelFree);
            }
        }

        let burst = cfg.burst_pairs();
        let mut task_offset = 0u64;
        let mut end = start;
        let (mut rr_read, mut rr_write) = (0usize, 0usize);

        while let Some(&Reverse((t, _, _))) = ev.heap.peek() {
            while let Some(&Reverse((t2, _, e))) = ev.heap.peek() {
                if t2 != t {
                    break;
                }
                ev.heap.pop();
                match e {
                    Ev::Idle(u) => {
                        end = end.max(t);
                        let next = match cfg.scheduling_policy {
                            Policy::Static => units[u].queue.pop_front(),
                            Policy::Dynamic => shared.pop_front(),
                        };
                        units[u].job = next;
                        if next.is_some() {
                            units[u].read_req = Some(t);
                        }
                    }
                    Ev::FetchDone(u) => {
                        let j = units[u].job.expect("fetch without a job");
                        let job = &jobs[j];
                        let work = job.n_r * job.n_s + cfg.pipeline_depth;
                        let compute_end = t + work;
                        self.stats.compute_cycles += work;
                        self.stats.unit_busy_cycles[u] += work;
                        let unit = &mut units[u];
                        unit.compute_end = compute_end;
                        let len = job.outputs.len();
                        let full = len / burst;
                        for k in 0..full {
                            let (lo, hi) = (k * burst, (k + 1) * burst);
                            let pos = job.outputs[hi - 1].0;
                            let issue = (t + pos + 1 + cfg.pipeline_depth).min(compute_end);
                            unit.planned.push_back(Flush {
                                job: j,
                                lo,
                                hi,
                                is_final: false,
                            });
                            ev.push(issue, Ev::WriteReq(u));
                        }
                        unit.has_final = full * burst < len;
                        if unit.has_final {
                            unit.planned.push_back(Flush {
                                job: j,
                                lo: full * burst,
                                hi: len,
                                is_final: true,
                            });
                            ev.push(compute_end, Ev::WriteReq(u));
                        }
                        ev.push(compute_end, Ev::ComputeDone(u));
                    }
                    Ev::WriteReq(u) => {
                        let f = units[u].planned.pop_front().expect("unplanned write");
                        units[u].pending.push_back(f);
                    }
                    Ev::ComputeDone(u) => {
                        end = end.max(t);
                        if !units[u].has_final {
                            ev.push(t, Ev::Idle(u));
                        }
                    }
                    Ev::WriteDone(u, is_final) => {
                        end = end.max(t);
                        if is_final {
                            ev.push(t, Ev::Idle(u));
                        }
                    }
                    Ev::ChannelFree => {}
                }
            }

            // Read arbitration: lowest free channel, round-robin over units.
            while let Some(c) = self.read_free.iter().position(|&f| f <= t) {
                let Some(u) = (0..n)
                    .map(|k| (rr_read + k) % n)
                    .find(|&u| units[u].read_req.is_some())
                else {
                    break;
                };
                let req = units[u].read_req.take().unwrap();
                let job = &jobs[units[u].job.unwrap()];
                let f = fetch_cycles(job.n_r, job.n_s, cfg);
                self.stats.stall_cycles += t - req;
                self.stats.mem_read_cycles += f + cfg.mem_turnaround_cycles;
                self.stats.unit_busy_cycles[u] += f;
                self.read_free[c] = t + f + cfg.mem_turnaround_cycles;
                ev.push(t + f, Ev::FetchDone(u));
                ev.push(self.read_free[c], Ev::ChannelFree);
                rr_read = (u + 1) % n;
            }

            // Write arbitration.
            while let Some(c) = self.write_free.iter().position(|&f| f <= t) {
                let Some(u) = (0..n)
                    .map(|k| (rr_write + k) % n)
                    .find(|&u| !units[u].pending.is_empty())
                else {
                    break;
                };
                let f = units[u].pending.pop_front().unwrap();
                let job = &jobs[f.job];
                let count = (f.hi - f.lo) as u64;
                let cyc = (count * cfg.result_pair_bytes).div_ceil(cfg.mem_bw_bytes_per_cycle);
                self.stats.mem_write_cycles += cyc;
                for &(_, pair) in &job.outputs[f.lo..f.hi] {
                    if job.to_results {
                        out.results.push(pair);
                        self.result_offsets.push(self.result_offset);
                        self.result_offset += cfg.result_pair_bytes;
                    } else {
                        out.tasks.push(pair);
                        task_offset += cfg.result_pair_bytes;
                    }
                }
                if job.to_results {
                    self.stats.results_emitted += count;
                    self.stats.result_flushes += 1;
                } else {
                    self.stats.task_pairs_written += count;
                    self.stats.task_flushes += 1;
                }
                if f.is_final {
                    self.stats.stall_cycles += t - units[u].compute_end;
                    self.stats.unit_busy_cycles[u] += cyc;
                }
                self.write_free[c] = t + cyc;
                ev.push(t + cyc, Ev::WriteDone(u, f.is_final));
                ev.push(t + cyc, Ev::ChannelFree);
                rr_write = (u + 1) % n;
            }
        }

        debug_assert_eq!(task_offset, out.tasks.len() as u64 * cfg.result_pair_bytes);
        out.cycles = end - start;
        self.now = end;
        out
    }
}
