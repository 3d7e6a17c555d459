use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input outside the domain of an operation.
    #[error("{0}")]
    Domain(String),

    /// Two channels tried to occupy the same resource element.
    #[error(
        "resource element collision at port {port}, subcarrier {subcarrier}, symbol {symbol}: \
         `{existing}` already mapped, `{incoming}` rejected"
    )]
    Collision {
        port: usize,
        subcarrier: usize,
        symbol: usize,
        existing: String,
        incoming: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => {
        $crate::error::Error::Domain(format!($($arg)*))
    };
}

macro_rules! config_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Config(format!($($arg)*))
    };
}

pub(crate) use config_err;
pub(crate) use domain;
