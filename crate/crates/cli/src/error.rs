use std::fmt;

/// Process exit status with a stable numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    /// Invalid data or a failed validation.
    Data = 1,
    /// Filesystem or environment trouble.
    Io = 2,
    Usage = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn data(e: impl fmt::Display) -> Self {
        Self { exit: Exit::Data, message: e.to_string() }
    }

    pub fn io(e: impl fmt::Display) -> Self {
        Self { exit: Exit::Io, message: e.to_string() }
    }

    pub fn usage(e: impl fmt::Display) -> Self {
        Self { exit: Exit::Usage, message: e.to_string() }
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<pin_forge::io::DecodeError> for CliError {
    fn from(e: pin_forge::io::DecodeError) -> Self {
        match e.kind {
            pin_forge::io::DecodeErrorKind::Io(_) => CliError::io(e),
            _ => CliError::data(e),
        }
    }
}

impl From<pin_forge::io::WriteError> for CliError {
    fn from(e: pin_forge::io::WriteError) -> Self {
        CliError::io(e)
    }
}
