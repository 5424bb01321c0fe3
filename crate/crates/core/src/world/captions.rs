use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AttributeSchema, ObjectSpec, TokenId, Vocabulary};

/// Samples `count` captions of the form `the? size? color? pattern? shape`.
///
/// Each optional word is included independently with its mention
/// probability. Captions hold content tokens only (no BOS/EOS).
pub fn realize_captions(
    object: &ObjectSpec,
    schema: &AttributeSchema,
    vocab: &Vocabulary,
    count: usize,
    seed: u64,
) -> Vec<Vec<TokenId>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| realize_one(object, schema, vocab, &mut rng))
        .collect()
}

pub(crate) fn realize_one<R: Rng + ?Sized>(
    object: &ObjectSpec,
    schema: &AttributeSchema,
    vocab: &Vocabulary,
    rng: &mut R,
) -> Vec<TokenId> {
    let mut caption = Vec::with_capacity(schema.slots.len() + 1);
    if rng.gen_bool(schema.determiner_prob) {
        caption.push(vocab.the());
    }
    for (si, slot) in schema.slots.iter().enumerate() {
        if rng.gen_bool(slot.mention_prob) {
            caption.push(vocab.attribute_token(si, object.values[si]));
        }
    }
    caption
}

/// Caption mentioning every slot with the leading determiner.
pub fn full_caption(object: &ObjectSpec, vocab: &Vocabulary) -> Vec<TokenId> {
    let mut caption = vec![vocab.the()];
    caption.extend(
        object
            .values
            .iter()
            .enumerate()
            .map(|(si, &v)| vocab.attribute_token(si, v)),
    );
    caption
}
