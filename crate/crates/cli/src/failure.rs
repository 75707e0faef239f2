use forkjoin::Error;

pub const GENERAL: u8 = 1;
pub const USAGE: u8 = 2;
pub const UNSTABLE: u8 = 3;
pub const NON_CONVERGENT: u8 = 4;

/// A message plus the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Failure::new(USAGE, message)
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Instability { .. } | Error::Inapplicable(_) => UNSTABLE,
        Error::Io(_) => GENERAL,
        _ => USAGE,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let hint = match &e {
            Error::Domain(_) => "\nusage: indices satisfy 1 <= k <= i <= n; rates are decimals or fractions such as 0.5 or 1/3",
            _ => "",
        };
        Failure::new(exit_code(&e), format!("{e}{hint}"))
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(GENERAL, e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::new(GENERAL, e.to_string())
    }
}
