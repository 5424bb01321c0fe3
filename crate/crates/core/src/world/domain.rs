use std::fmt;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AttributeSchema;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u32);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o{}", self.0)
    }
}

impl ObjectId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A referent: one value per slot plus its one-hot feature encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: ObjectId,
    pub values: Vec<usize>,
    pub features: Vec<f64>,
}

impl ObjectSpec {
    pub fn new(id: ObjectId, values: Vec<usize>, schema: &AttributeSchema) -> Result<Self> {
        if values.len() != schema.slots.len() {
            return Err(Error::Input(format!(
                "object has {} slot values, schema has {} slots",
                values.len(),
                schema.slots.len()
            )));
        }
        let mut features = vec![0.0; schema.feature_dim()];
        for ((slot, &v), offset) in schema.slots.iter().zip(&values).zip(schema.block_offsets()) {
            if v >= slot.values.len() {
                return Err(Error::Input(format!(
                    "value {v} out of range for slot {}",
                    slot.name
                )));
            }
            features[offset + v] = 1.0;
        }
        Ok(Self {
            id,
            values,
            features,
        })
    }

    pub fn describe(&self, schema: &AttributeSchema) -> String {
        schema
            .slots
            .iter()
            .zip(&self.values)
            .map(|(s, &v)| s.values[v].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Number of slots on which two objects differ.
    pub fn slot_distance(&self, other: &ObjectSpec) -> usize {
        self.values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// The full referent domain. Object ids equal their index in `objects`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainPool {
    pub schema: AttributeSchema,
    pub seed: u64,
    pub objects: Vec<ObjectSpec>,
}

impl DomainPool {
    pub fn get(&self, id: ObjectId) -> Result<&ObjectSpec> {
        self.objects
            .get(id.index())
            .ok_or_else(|| Error::Input(format!("object {id} not in pool")))
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.objects.iter().map(|o| o.id)
    }

    pub fn feature_table(&self) -> Vec<Vec<f64>> {
        self.objects.iter().map(|o| o.features.clone()).collect()
    }
}

/// Draws `n` distinct attribute profiles uniformly at random.
pub fn generate_domain(schema: &AttributeSchema, n: usize, seed: u64) -> Result<DomainPool> {
    schema.validate()?;
    let total = schema.combinations();
    if n == 0 || n > total {
        return Err(Error::Input(format!(
            "cannot draw {n} distinct objects from {total} attribute combinations"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = index::sample(&mut rng, total, n);
    let objects = picks
        .into_iter()
        .enumerate()
        .map(|(i, combo)| {
            let mut rest = combo;
            let mut values = vec![0; schema.slots.len()];
            for (si, slot) in schema.slots.iter().enumerate().rev() {
                values[si] = rest % slot.values.len();
                rest /= slot.values.len();
            }
            ObjectSpec::new(ObjectId(i as u32), values, schema)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DomainPool {
        schema: schema.clone(),
        seed,
        objects,
    })
}
