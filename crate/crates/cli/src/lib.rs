//! Job-file driver for the `dagger` binary.

pub mod commands;
pub mod grammar;
pub mod job;
pub mod report;

use commands::{Registry, RunOptions};
use job::{JobError, JobSpec};
use report::{Format, Report};

/// Runs one job; errors become part of the report.
pub fn run_job(registry: &Registry, job: &JobSpec, opts: &RunOptions) -> Report {
    let mut report = Report::new(&job.name, &job.command);
    let result = match registry.get(&job.command) {
        Some(cmd) => cmd.run(job, opts, &mut report),
        None => {
            let known: Vec<_> = registry.names().collect();
            Err(job
                .command_pos
                .error(format!("unknown command `{}` (known: {})", job.command, known.join(", ")))
                .into())
        }
    };
    if let Err(e) = result {
        if let JobError::NotStabilized(_, table) = &e {
            report.stabilization = table.clone();
            report.not_stabilized = true;
        }
        let code = e.exit_code();
        report.error = Some((e.to_string(), code));
    }
    report
}

/// Runs independent jobs concurrently, returning reports in input order.
pub fn run_batch(registry: &Registry, jobs: &[JobSpec], opts: &RunOptions) -> Vec<Report> {
    std::thread::scope(|s| {
        let handles: Vec<_> = jobs.iter().map(|j| s.spawn(move || run_job(registry, j, opts))).collect();
        handles.into_iter().map(|h| h.join().expect("job thread panicked")).collect()
    })
}

/// The batch exit status: input errors dominate, then non-stabilization, then failed checks.
pub fn batch_exit_code(reports: &[Report]) -> i32 {
    let codes: Vec<i32> = reports.iter().map(Report::exit_code).collect();
    [2, 3, 1].into_iter().find(|c| codes.contains(c)).unwrap_or(0)
}

/// Parses and runs a job file, writing each report to its `output` path when one is set.
pub fn run_source(src: &str, opts: &RunOptions, format: Format) -> Result<Vec<(Report, String)>, JobError> {
    let jobs = job::parse_jobs(src)?;
    let registry = Registry::builtin();
    let reports = run_batch(&registry, &jobs, opts);
    let mut out = Vec::new();
    for (job, report) in jobs.iter().zip(reports) {
        let text = report.render(format);
        if let Some(path) = &job.output {
            std::fs::write(path, &text).map_err(|e| JobError::Io(format!("{}: {e}", path.display())))?;
        }
        out.push((report, text));
    }
    Ok(out)
}
