//! Command implementations behind the `qdnn` binary.

pub mod approx_demo;
pub mod checkpoint;
pub mod eval;
pub mod gradcheck;
pub mod metrics;
pub mod settings;
pub mod train;

use std::io::Write;

use settings::{resolve_engine, resolve_seed, resolve_threads, Cli, Command, ConfigFile, TrainSettings, UsageError};

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    CheckFailed,
}

fn pool(threads: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

pub fn execute(cli: &Cli, out: &mut (dyn Write + Send)) -> anyhow::Result<Status> {
    let common = match &cli.command {
        Command::Train(a) => &a.common,
        Command::Eval(a) => &a.common,
        Command::Gradcheck(a) => &a.common,
        Command::ApproxDemo(a) => &a.common,
    };
    let file = ConfigFile::load(common.config.as_deref())?;
    let pool = pool(resolve_threads(common, &file))?;
    pool.install(|| match &cli.command {
        Command::Train(a) => {
            let s = TrainSettings::resolve(a, &file)?;
            train::run(&s, out)?;
            Ok(Status::Ok)
        }
        Command::Eval(a) => {
            eval::run(a, &file, out)?;
            Ok(Status::Ok)
        }
        Command::Gradcheck(a) => {
            let opts = gradcheck::GradcheckOptions {
                seed: resolve_seed(&a.common, &file),
                jobs: a.jobs,
                min_qubits: a.min_qubits,
                max_qubits: a.max_qubits,
                network: a.layers,
                batch: a.batch,
                fd_step: a.fd_step,
                engine: resolve_engine(&a.common, &file),
            };
            let report = gradcheck::run(&opts, out)?;
            Ok(if report.passed() { Status::Ok } else { Status::CheckFailed })
        }
        Command::ApproxDemo(a) => {
            let report = approx_demo::run(a.max_vars, a.max_degree, a.points, out)?;
            Ok(if report.passed() { Status::Ok } else { Status::CheckFailed })
        }
    })
}

/// Process exit status for an error: 2 for usage problems, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        2
    } else {
        1
    }
}
