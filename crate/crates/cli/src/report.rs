//! Reports: a human table and a machine form in the job-file grammar.

use std::fmt::Write;

use crate::grammar::quote;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    NotStabilized,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::NotStabilized => "not-stabilized",
            Status::Error => "error",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::NotStabilized => 3,
            Status::Error => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Machine,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub job: String,
    pub command: String,
    pub inputs: Vec<(String, String)>,
    pub results: Vec<(String, String)>,
    /// Representatives per labelled degree, rendered in the window basis.
    pub basis: Vec<(String, Vec<String>)>,
    pub stabilization: Vec<(usize, Vec<usize>)>,
    pub precision_loss: i64,
    pub checks: Vec<(String, bool)>,
    pub not_stabilized: bool,
    /// Message and exit code of an error that stopped the job.
    pub error: Option<(String, i32)>,
}

fn join(v: &[usize]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

impl Report {
    pub fn new(job: &str, command: &str) -> Self {
        Report { job: job.into(), command: command.into(), ..Default::default() }
    }

    pub fn input(&mut self, k: &str, v: impl ToString) -> &mut Self {
        self.inputs.push((k.into(), v.to_string()));
        self
    }

    pub fn result(&mut self, k: &str, v: impl ToString) -> &mut Self {
        self.results.push((k.into(), v.to_string()));
        self
    }

    pub fn dims(&mut self, k: &str, v: &[usize]) -> &mut Self {
        self.result(k, join(v))
    }

    pub fn check(&mut self, name: &str, ok: bool) -> &mut Self {
        self.checks.push((name.into(), ok));
        self
    }

    pub fn exit_code(&self) -> i32 {
        match &self.error {
            Some((_, code)) => *code,
            None => self.status().exit_code(),
        }
    }

    pub fn status(&self) -> Status {
        if self.not_stabilized {
            Status::NotStabilized
        } else if self.error.is_some() {
            Status::Error
        } else if self.checks.iter().any(|(_, ok)| !ok) {
            Status::Fail
        } else {
            Status::Pass
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.table(),
            Format::Machine => self.machine(),
        }
    }

    fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "== {} ({}) ==", self.job, self.command);
        let rows = |s: &mut String, title: &str, rows: &[(String, String)]| {
            if !rows.is_empty() {
                let _ = writeln!(s, "{title}");
                for (k, v) in rows {
                    let _ = writeln!(s, "  {k:<22} {v}");
                }
            }
        };
        rows(&mut s, "inputs", &self.inputs);
        rows(&mut s, "results", &self.results);
        if !self.basis.is_empty() {
            let _ = writeln!(s, "basis");
            for (k, v) in &self.basis {
                let shown = if v.is_empty() { "(none)".to_string() } else { v.join(", ") };
                let _ = writeln!(s, "  {k:<22} {shown}");
            }
        }
        if !self.stabilization.is_empty() {
            let _ = writeln!(s, "stabilization");
            for (d, dims) in &self.stabilization {
                let _ = writeln!(s, "  d = {d:<18} {}", join(dims));
            }
        }
        let _ = writeln!(s, "precision loss           {}", self.precision_loss);
        if !self.checks.is_empty() {
            let _ = writeln!(s, "checks");
            for (name, ok) in &self.checks {
                let _ = writeln!(s, "  [{}] {name}", if *ok { "pass" } else { "FAIL" });
            }
        }
        if let Some((e, _)) = &self.error {
            let _ = writeln!(s, "error: {e}");
        }
        let _ = writeln!(s, "status: {}", self.status().as_str());
        s
    }

    fn machine(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "report {} {{", quote(&self.job));
        let _ = writeln!(s, "  command = {}", quote(&self.command));
        let section = |s: &mut String, title: &str, rows: &[(String, String)]| {
            if !rows.is_empty() {
                let _ = writeln!(s, "  {title} {{");
                for (k, v) in rows {
                    let _ = writeln!(s, "    {} = {}", quote(k), quote(v));
                }
                let _ = writeln!(s, "  }}");
            }
        };
        section(&mut s, "input", &self.inputs);
        section(&mut s, "result", &self.results);
        if !self.basis.is_empty() {
            let _ = writeln!(s, "  basis {{");
            for (k, v) in &self.basis {
                let vals: Vec<String> = v.iter().map(|x| quote(x)).collect();
                let _ = writeln!(s, "    {} = {}", quote(k), vals.join(" "));
            }
            let _ = writeln!(s, "  }}");
        }
        if !self.stabilization.is_empty() {
            let _ = writeln!(s, "  stabilization {{");
            for (d, dims) in &self.stabilization {
                let _ = writeln!(s, "    d{d} = {}", join(dims));
            }
            let _ = writeln!(s, "  }}");
        }
        let _ = writeln!(s, "  precision_loss = {}", self.precision_loss);
        if !self.checks.is_empty() {
            let _ = writeln!(s, "  checks {{");
            for (name, ok) in &self.checks {
                let _ = writeln!(s, "    {} = {}", quote(name), if *ok { "pass" } else { "fail" });
            }
            let _ = writeln!(s, "  }}");
        }
        if let Some((e, _)) = &self.error {
            let _ = writeln!(s, "  error = {}", quote(e));
        }
        let _ = writeln!(s, "  status = {}", self.status().as_str());
        let _ = writeln!(s, "}}");
        s
    }
}
