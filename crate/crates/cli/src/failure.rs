//! Exit-code classification and the one-line stderr reason.

use std::fmt;

use piconvae_core::ErrorClass;

/// A CLI-level error carrying its own class, for failures that do not
/// originate in the core library.
#[derive(Debug)]
pub struct Failure {
    pub class: ErrorClass,
    pub kind: &'static str,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub fn usage(kind: &'static str, message: impl Into<String>) -> anyhow::Error {
    Failure { class: ErrorClass::Usage, kind, message: message.into() }.into()
}

pub fn data(kind: &'static str, message: impl Into<String>) -> anyhow::Error {
    Failure { class: ErrorClass::Data, kind, message: message.into() }.into()
}

pub fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Usage => 1,
        ErrorClass::Data => 2,
        ErrorClass::Training => 3,
    }
}

fn class_name(class: ErrorClass) -> &'static str {
    match class {
        ErrorClass::Usage => "usage",
        ErrorClass::Data => "data",
        ErrorClass::Training => "training",
    }
}

/// The outermost classified cause decides the exit code.
pub fn classify(err: &anyhow::Error) -> (ErrorClass, &'static str) {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return (f.class, f.kind);
        }
        if let Some(e) = cause.downcast_ref::<piconvae_core::Error>() {
            return (e.class(), e.kind());
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return (ErrorClass::Usage, "json");
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return (ErrorClass::Data, "io");
        }
    }
    (ErrorClass::Data, "unknown")
}

/// `error class=<class> kind=<kind>: <message>` on a single line.
pub fn reason_line(err: &anyhow::Error) -> (u8, String) {
    let (class, kind) = classify(err);
    let message = format!("{err:#}").replace(['\n', '\r'], " ");
    (exit_code(class), format!("error class={} kind={kind}: {message}", class_name(class)))
}
