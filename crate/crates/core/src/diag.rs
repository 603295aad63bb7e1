//! Located diagnostics shared by every validator in the crate.

use std::fmt;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("error"),
            Severity::Warning => f.write_str("warning"),
        }
    }
}

/// 1-based line and column in a source file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl Location {
    pub fn new(line: usize, column: usize) -> Self {
        Location { line, column }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub location: Location,
    /// Stable short identifier such as `E_CPT_NOT_NORMALIZED`.
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn error(location: Location, code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            location,
            code,
            message: message.into(),
        }
    }

    pub fn warning(location: Location, code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            location,
            code,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Renders as `file:line:col: severity CODE: message`.
    pub fn render(&self, file: &str) -> String {
        format!(
            "{}:{}:{}: {} {}: {}",
            file, self.location.line, self.location.column, self.severity, self.code, self.message
        )
    }
}

/// Sorts diagnostics by location, then code, which is the order they are printed in.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        a.location
            .cmp(&b.location)
            .then_with(|| a.code.cmp(b.code))
            .then_with(|| a.message.cmp(&b.message))
    });
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_format() {
        let d = Diagnostic::error(Location::new(3, 7), "E_SYNTAX", "expected `;`");
        assert_eq!(
            d.render("m.oobn"),
            "m.oobn:3:7: error E_SYNTAX: expected `;`"
        );
    }

    #[test]
    fn sorted_by_location_then_code() {
        let mut v = vec![
            Diagnostic::error(Location::new(2, 1), "E_B", "x"),
            Diagnostic::error(Location::new(1, 5), "E_Z", "x"),
            Diagnostic::error(Location::new(2, 1), "E_A", "x"),
        ];
        sort_diagnostics(&mut v);
        let codes: Vec<_> = v.iter().map(|d| d.code).collect();
        assert_eq!(codes, ["E_Z", "E_A", "E_B"]);
    }
}
