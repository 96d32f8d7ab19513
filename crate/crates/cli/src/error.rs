use complab::measurement::PovmReport;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 1;
    pub const INADMISSIBLE: i32 = 2;
    pub const VIOLATED: i32 = 3;
    pub const INTERNAL: i32 = 4;
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Inadmissible(PovmReport),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => exit::INPUT,
            CliError::Inadmissible(_) => exit::INADMISSIBLE,
            CliError::Internal(_) => exit::INTERNAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => f.write_str(m),
            CliError::Inadmissible(r) => write!(
                f,
                "inadmissible measurement model: POVM element at {} has eigenvalue {:e}",
                r.worst_outcome, r.worst_eigenvalue
            ),
            CliError::Internal(m) => write!(f, "internal consistency error: {m}"),
        }
    }
}

impl From<complab::Error> for CliError {
    fn from(e: complab::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
