//! Shared inputs for the criterion benchmarks.

use elab_core::generate::{self, GenParams};
use elab_core::scenario::Scenario;
use elab_core::{fixtures, PartialDraw};

/// Seed of every generated bench input, so runs compare like with like.
pub const SEED: u64 = 7;

/// The fixture and its first named draw at the top level.
pub fn fixture_with_draw(name: &str) -> (Scenario, PartialDraw) {
    let sc = fixtures::by_name(name).expect("known fixture");
    let ts = &sc.types;
    let d = ts.partial_draw(&sc.draws[0].draw, ts.lattice().top());
    (sc, d)
}

/// A generated scenario at the small size used for exhaustive dominance checks.
pub fn small_scenario() -> Scenario {
    generate::scenario(SEED, &GenParams::small())
}

/// A generated scenario at the full default size.
pub fn default_scenario() -> Scenario {
    generate::scenario(SEED, &GenParams::default())
}
