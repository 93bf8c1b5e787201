//! Compile finite-state-machine descriptions of smart contracts into Solidity.
//!
//! The pipeline is `frontend` (DSL / JSON parsing) → [`validate`] →
//! [`plugins::weave`] → [`codegen::generate`]. The [`sim`] module executes the
//! abstract semantics of a woven contract so that the guarantees of the
//! security plugins (locking, transition counter, timed transitions, access
//! control) can be checked without an EVM.

pub mod codegen;
pub mod corpus;
pub mod diag;
pub mod frontend;
pub mod model;
pub mod plugins;
pub mod sim;
pub mod validate;

pub use codegen::{generate, tokenize_solidity, SolToken};
pub use diag::{Code, Diagnostic, Severity, SourceSpan};
pub use frontend::{
    emit_dsl, emit_json, lex_fragment, parse_dsl, parse_dsl_with_sources, parse_guard_expr,
    parse_json, GuardAst, SourceMap, Token, TokenKind,
};
pub use model::{
    canonicalize, equals, ContractModel, FragmentKind, Param, Plugin, PluginConfig,
    SolidityFragment, StateId, StructDef, Tag, TimedTransition, Transition, VariableDecl,
    Visibility,
};
pub use plugins::{guard_conjunction, weave, ModifierChain, WovenContract};
pub use sim::{
    eval_guard, run_scenario, ActorId, AdminAction, Invocation, Outcome, OutcomeKind,
    RevertReason, ScenarioReport, SimConfig, SimError, SimSession,
};
pub use validate::{validate, validate_with_sources};
