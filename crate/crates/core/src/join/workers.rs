use std::sync::atomic::{AtomicUsize, Ordering};

/// How a batch of independent tasks is spread over workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Policy {
    /// Contiguous blocks, one per worker, fixed up front.
    #[default]
    Static,
    /// Workers pull the next task from a shared counter when idle.
    Dynamic,
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "static" => Ok(Policy::Static),
            "dynamic" => Ok(Policy::Dynamic),
            other => Err(format!("unknown policy `{other}` (static|dynamic)")),
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Policy::Static => "static",
            Policy::Dynamic => "dynamic",
        })
    }
}

/// Runs `work` over every task with per-worker state from `init` and
/// returns the states in worker order.
pub(crate) fn run_tasks<T, S, I, W>(tasks: &[T], workers: usize, policy: Policy, init: I, work: W) -> Vec<S>
where
    T: Sync,
    S: Send,
    I: Fn() -> S + Sync,
    W: Fn(&mut S, &T) + Sync,
{
    let workers = workers.max(1).min(tasks.len().max(1));
    if workers == 1 {
        let mut state = init();
        for t in tasks {
            work(&mut state, t);
        }
        return vec![state];
    }

    let next = AtomicUsize::new(0);
    let block = tasks.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (init, work, next) = (&init, &work, &next);
                scope.spawn(move || {
                    let mut state = init();
                    match policy {
                        Policy::Static => {
                            let lo = (w * block).min(tasks.len());
                            let hi = ((w + 1) * block).min(tasks.len());
                            for t in &tasks[lo..hi] {
                                work(&mut state, t);
                            }
                        }
                        Policy::Dynamic => loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            let Some(t) = tasks.get(i) else { break };
                            work(&mut state, t);
                        },
                    }
                    state
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("join worker panicked"))
            .collect()
    })
}
