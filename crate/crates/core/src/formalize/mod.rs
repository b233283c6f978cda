//! The iterative fact-acquisition loop and its fact sources.

mod http;
mod mock;
pub mod prompts;
mod run;
mod source;

pub use http::{http_source, HttpConfig, HttpSource, TOKEN_ENV, URL_ENV};
pub use mock::{mock_source, MockSource};
pub use run::{run_loop, CollectedFact, FactUnion, Iteration, IterationLog, LoopConfig, LoopOutcome, ParseFailure};
pub use source::{FactSource, Request, SourceError, Task};
