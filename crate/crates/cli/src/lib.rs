//! Library surface of the command-line tool (configuration schema, unit
//! conversion, output writers, and the subcommand implementations), kept
//! separate from the binary entry point so integration tests can drive the
//! same code paths.

pub mod build;
pub mod commands;
pub mod config;
pub mod output;

/// Process exit codes: 0 success, 1 I/O, 2 configuration, 3 numerical,
/// 4 resource limit.
pub mod exit {
    pub fn classify_core(err: &softsqueeze::Error) -> u8 {
        use softsqueeze::Error as E;
        match err {
            E::InvalidSpec(_) | E::Dimension(_) => 2,
            E::Numerical(_) | E::UndefinedSqueezing(_) | E::Analysis(_) => 3,
            E::Resource(_) => 4,
        }
    }
}
