/// A failed command: bad input (exit 1) or a failure while executing
/// (exit 2).
#[derive(Debug)]
pub enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn validation(e: anyhow::Error) -> Self {
        Failure::Validation(e)
    }

    pub fn runtime(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }

    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Validation(e) | Failure::Runtime(e) => e,
        }
    }
}

pub trait Classify<T> {
    fn invalid(self, what: impl FnOnce() -> String) -> Result<T, Failure>;
    fn failed(self, what: impl FnOnce() -> String) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn invalid(self, what: impl FnOnce() -> String) -> Result<T, Failure> {
        self.map_err(|e| Failure::Validation(e.into().context(what())))
    }

    fn failed(self, what: impl FnOnce() -> String) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into().context(what())))
    }
}
