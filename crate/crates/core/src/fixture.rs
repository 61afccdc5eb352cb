//! Seeded generator for the bundled synthetic 17 x 8 indicator table.
//!
//! Eleven groups are tagged with sector `101X` and six with `102X`. Values are
//! log-normal around fixed medians with a shared size factor per group, so
//! the table has realistic scale spread and correlated parts. The data is
//! synthetic and labelled as such.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::composition::{validate_table, Entity, IndicatorTable, Part};
use crate::ingest::DEFAULT_SCHEMA;

pub const DEFAULT_SEED: u64 = 2023;
pub const SEED_ENV: &str = "CODA_ATLAS_SEED";
pub const ENTITIES: usize = 17;
pub const MEAT_GROUPS: usize = 11;

/// Medians per indicator, in canonical units.
const MEDIANS: [f64; 8] = [713.0, 376.0, 255.0, 111_003.0, 944_041.0, 13_166.0, 608.0, 763.0];
/// Idiosyncratic log-scale spread per indicator.
const NOISE: [f64; 8] = [0.25, 0.35, 0.4, 0.7, 0.6, 0.9, 0.5, 0.45];
/// Log shift applied to `102X` groups.
const FISH_SHIFT: [f64; 8] = [0.0, 0.1, 0.0, -0.3, 0.4, -0.2, -0.2, 0.3];
/// Decimal places kept per indicator.
const DECIMALS: [i32; 8] = [1, 1, 1, 0, 0, 0, 0, 0];

/// Seed from `CODA_ATLAS_SEED`, falling back to [`DEFAULT_SEED`].
pub fn seed_from_env() -> Result<u64, String> {
    match std::env::var(SEED_ENV) {
        Ok(text) => text.trim().parse().map_err(|_| format!("{SEED_ENV}={text:?} is not an unsigned integer")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

pub fn synthetic_table(seed: u64) -> IndicatorTable<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let mut values = Array2::<f64>::zeros((ENTITIES, MEDIANS.len()));
    let mut entities = Vec::with_capacity(ENTITIES);
    for r in 0..ENTITIES {
        let fish = r >= MEAT_GROUPS;
        let size = 0.9 * unit.sample(&mut rng);
        for c in 0..MEDIANS.len() {
            let shift = if fish { FISH_SHIFT[c] } else { 0.0 };
            let log = MEDIANS[c].ln() + size + shift + NOISE[c] * unit.sample(&mut rng);
            let scale = 10f64.powi(DECIMALS[c]);
            values[[r, c]] = ((log.exp() * scale).round() / scale).max(1.0 / scale);
        }
        let sector = if fish { "102X" } else { "101X" };
        entities.push(Entity::new(format!("G{:02}", r + 1), format!("Synthetic group {:02}", r + 1), sector));
    }
    let parts = DEFAULT_SCHEMA
        .iter()
        .enumerate()
        .map(|(i, (name, unit, role))| Part::new(i, *name, *unit, *role))
        .collect();
    validate_table(values, parts, entities).expect("generated values are positive")
}
