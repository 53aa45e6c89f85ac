use crate::error::{Error, Result};
use crate::join::Policy;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub num_join_units: usize,
    /// Random-access latency of a node read.
    pub mem_latency_cycles: u64,
    /// Burst width of a memory channel.
    pub mem_bw_bytes_per_cycle: u64,
    /// Extra cycles a read channel stays busy after each fetch.
    pub mem_turnaround_cycles: u64,
    pub entry_bytes: u64,
    pub result_pair_bytes: u64,
    pub pipeline_depth: u64,
    pub burst_threshold_bytes: u64,
    pub clock_hz: u64,
    pub scheduling_policy: Policy,
    pub read_channels: usize,
    pub write_channels: usize,
    /// Host link bandwidth used for `transfer_seconds`.
    pub host_link_bytes_per_sec: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            num_join_units: 16,
            mem_latency_cycles: 10,
            mem_bw_bytes_per_cycle: 64,
            mem_turnaround_cycles: 8,
            entry_bytes: 20,
            result_pair_bytes: 8,
            pipeline_depth: 3,
            burst_threshold_bytes: 4096,
            clock_hz: 200_000_000,
            scheduling_policy: Policy::Static,
            read_channels: 1,
            write_channels: 1,
            host_link_bytes_per_sec: 12_000_000_000,
        }
    }
}

impl SimConfig {
    pub fn with_units(mut self, units: usize) -> Self {
        self.num_join_units = units;
        self
    }

    pub fn with_policy(mut self, policy: Policy) -> Self {
        self.scheduling_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("num_join_units", self.num_join_units as u64),
            ("mem_latency_cycles", self.mem_latency_cycles),
            ("mem_bw_bytes_per_cycle", self.mem_bw_bytes_per_cycle),
            ("entry_bytes", self.entry_bytes),
            ("result_pair_bytes", self.result_pair_bytes),
            ("pipeline_depth", self.pipeline_depth),
            ("burst_threshold_bytes", self.burst_threshold_bytes),
            ("clock_hz", self.clock_hz),
            ("read_channels", self.read_channels as u64),
            ("write_channels", self.write_channels as u64),
            ("host_link_bytes_per_sec", self.host_link_bytes_per_sec),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Result pairs that fit in one burst (at least one).
    pub fn burst_pairs(&self) -> usize {
        (self.burst_threshold_bytes / self.result_pair_bytes).max(1) as usize
    }
}
