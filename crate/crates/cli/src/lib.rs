//! Command implementations behind the `splithmc` binary.
//!
//! Each subcommand is an ordinary function taking a typed configuration and
//! returning a summary, so results can be exercised directly from tests;
//! the binary only parses flags and maps errors to exit codes.

pub mod commands;
pub mod config;
pub mod output;

/// Errors surfaced by the command layer.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration; exit code 2.
    Config(String),
    /// A numerical operation could not produce a result; exit code 3.
    Numerical(String),
    /// Filesystem problems; exit code 1.
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Run indexed jobs on up to `threads` workers, returning results in job
/// order so output is identical for every thread count.
pub fn run_indexed<T, F>(n_jobs: usize, threads: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.max(1).min(n_jobs.max(1));
    if threads <= 1 || n_jobs <= 1 {
        return (0..n_jobs).map(job).collect();
    }
    let mut slots: Vec<Option<T>> = (0..n_jobs).map(|_| None).collect();
    let counter = std::sync::atomic::AtomicUsize::new(0);
    let job = &job;
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for _ in 0..threads {
            handles.push(scope.spawn(|| {
                let mut mine = Vec::new();
                loop {
                    let i = counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= n_jobs {
                        break;
                    }
                    mine.push((i, job(i)));
                }
                mine
            }));
        }
        for handle in handles {
            for (i, value) in handle.join().expect("worker panicked") {
                slots[i] = Some(value);
            }
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.expect("job ran"))
        .collect()
}
