use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Solver(#[from] lrce_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for bad input, 3 when demand is zero at the supply price, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use lrce_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Validation(_) => 2,
            CliError::Solver(e) => match e {
                E::Structural { .. } | E::AssumptionViolated { .. } | E::FosdViolation { .. } | E::InvalidArgument(_) => 2,
                E::NoActiveEquilibrium { .. } => 3,
                _ => 4,
            },
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }

    /// Short machine-readable name, printed with the message on failure.
    pub fn code_name(&self) -> &'static str {
        match self.exit_code() {
            2 => "invalid_input",
            3 => "no_active_equilibrium",
            4 => "numerical_failure",
            _ => "io_error",
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
