use std::fmt;

use kinship_core::{Diagnostic, Location};
use thiserror::Error;

/// What went wrong decides the exit code: I/O and parse failures exit 2,
/// everything else 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ProblemKind {
    Validation,
    Parse,
    Io,
}

/// A diagnostic together with the file it refers to.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub file: String,
    pub diagnostic: Diagnostic,
    pub kind: ProblemKind,
}

impl Problem {
    pub fn new(file: &str, kind: ProblemKind, diagnostic: Diagnostic) -> Self {
        Problem {
            file: file.to_string(),
            diagnostic,
            kind,
        }
    }

    pub fn error(
        file: &str,
        kind: ProblemKind,
        loc: Location,
        code: &'static str,
        msg: impl Into<String>,
    ) -> Self {
        Self::new(file, kind, Diagnostic::error(loc, code, msg))
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.diagnostic.render(&self.file))
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}", render(.0))]
    Problems(Vec<Problem>),
    #[error("{0}")]
    Evaluation(String),
}

fn render(problems: &[Problem]) -> String {
    problems
        .iter()
        .map(Problem::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

impl CliError {
    /// 0 success, 1 validation or usage, 2 I/O or parse.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Problems(ps) if ps.iter().any(|p| p.kind != ProblemKind::Validation) => 2,
            _ => 1,
        }
    }
}

/// Accumulates problems across files so one run reports all of them.
#[derive(Debug, Default)]
pub struct Problems(pub Vec<Problem>);

impl Problems {
    pub fn push(&mut self, p: Problem) {
        self.0.push(p);
    }

    /// Records every diagnostic; returns true when any was an error.
    pub fn extend_diagnostics(
        &mut self,
        file: &str,
        kind: ProblemKind,
        diags: Vec<Diagnostic>,
    ) -> bool {
        let mut failed = false;
        for d in diags {
            failed |= d.is_error();
            self.0.push(Problem::new(file, kind, d));
        }
        failed
    }

    pub fn has_errors(&self) -> bool {
        self.0.iter().any(|p| p.diagnostic.is_error())
    }

    pub fn into_result<T>(self, value: T) -> Result<(T, Vec<Problem>), CliError> {
        if self.has_errors() {
            Err(CliError::Problems(self.0))
        } else {
            Ok((value, self.0))
        }
    }
}

/// Line and column of the first occurrence of `needle` in `src`, or 1:1.
pub fn locate(src: &str, needle: &str) -> Location {
    if needle.is_empty() {
        return Location::new(1, 1);
    }
    for (i, line) in src.lines().enumerate() {
        if let Some(col) = line.find(needle) {
            return Location::new(i + 1, line[..col].chars().count() + 1);
        }
    }
    Location::new(1, 1)
}

/// Converts a byte offset to a 1-based location.
pub fn offset_location(src: &str, offset: usize) -> Location {
    let offset = offset.min(src.len());
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Location::new(line, col)
}
