use crate::cpg::GraphError;
use crate::frontend::FrontendError;

/// Failure while turning a module into a code property graph.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{function}: {message}")]
    Fold { function: String, message: String },
    #[error("{function}: {message}")]
    Cfg { function: String, message: String },
    #[error("{function}: {message}")]
    Dataflow { function: String, message: String },
    #[error("call to undefined function index {0}")]
    UndefinedCallee(u32),
}
