//! Synthetic referent domain: attribute objects, caption grammar, and
//! context construction.

mod captions;
mod context;
mod domain;
pub mod io;
pub mod kmeans;
mod schema;

pub(crate) use captions::realize_one;
pub use captions::{full_caption, realize_captions};
pub use context::{
    build_challenging_context, build_challenging_context_in, build_simple_context, Context,
    ContextKind, CONTEXT_SIZE,
};
pub use domain::{generate_domain, DomainPool, ObjectId, ObjectSpec};
pub use kmeans::{kmeans, Clustering};
pub use schema::{
    AttributeSchema, Slot, TokenId, Vocabulary, BOS, EOS, FUNCTION_WORDS, RARE_MENTION_PROB, UNK,
};
