//! A planning engine that learns abstract planning cases from concrete
//! STRIPS-style cases by change of representation language, stores them in a
//! case base, and reuses them to decompose and speed up new planning problems.
//!
//! The crate is organized in layers:
//!
//! - [`logic`]: first-order terms, unification, and a budgeted SLD-resolution
//!   engine over Horn programs with a few evaluable built-ins.
//! - [`domain`]: the STRIPS-style formalism — states, operator schemas,
//!   instantiation, applicability, plan execution.
//! - [`dsl`]: the textual language for domains, abstraction theories,
//!   problems, cases, and case bases.
//! - [`abstraction`]: the four-phase learner that maps one concrete case to
//!   the complete set of its abstract cases under a generic abstraction
//!   theory, plus a brute-force oracle used for equivalence testing.
//! - [`planner`]: pure DFID search, case retrieval, DFID refinement of
//!   abstract cases, and hierarchical planning.
//! - [`toy`]: the bundled counting and cube fixture domains.
//! - [`lathe`]: the bundled lathe process-planning domain and its random
//!   problem generator.

pub mod abstraction;
pub mod domain;
pub mod dsl;
pub mod lathe;
pub mod logic;
pub mod planner;
pub mod toy;
