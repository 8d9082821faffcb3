//! Built-in scenarios.
//!
//! * `example1`: two sellers with item-cost tables over items `a, b, c` and a buyer.
//! * `example2`: a single-object auction where one bidder is unaware of the high-value state.
//! * `example4r`: a reconstructed auction in which interim utility turns negative after
//!   awareness is raised, while every initial information set is fine. The valuations are
//!   chosen by search, not taken from a published table.

use std::collections::BTreeMap;

use crate::scenario::{
    AvailabilitySpec, DrawSpec, LatticeSpec, OutcomesSpec, ProjectionSpec, QText, Scenario, ScenarioSpec, SchemeSpec, TypesSpec,
    ValuationSpec,
};
use crate::transfers::SchemeKind;

pub const NAMES: [&str; 3] = ["example1", "example2", "example4r"];

pub fn by_name(name: &str) -> Option<Scenario> {
    match name {
        "example1" => Some(example1()),
        "example2" => Some(example2()),
        "example4r" => Some(example4r()),
        _ => None,
    }
}

fn s(x: &str) -> String {
    x.to_string()
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|x| s(x)).collect()
}

fn values(pairs: &[(&str, i64)]) -> BTreeMap<String, QText> {
    pairs.iter().map(|&(o, v)| (s(o), QText::Int(v))).collect()
}

/// Level name for a set of items: `"0"` for the empty set.
fn level_name(items: &[char]) -> String {
    if items.is_empty() {
        s("0")
    } else {
        items.iter().collect()
    }
}

/// Type name for a cost table restricted to `items`.
fn table_name(agent: &str, table: &[(char, i64)], items: &[char]) -> String {
    let cells: Vec<String> = table.iter().filter(|(c, _)| items.contains(c)).map(|(c, v)| format!("{c}{v}")).collect();
    format!("t{agent}({})", cells.join(","))
}

fn table_cost(table: &[(char, i64)], items: &[char]) -> i64 {
    table.iter().filter(|(c, _)| items.contains(c)).map(|(_, v)| v).sum()
}

/// Procurement over items `a, b, c` with awareness sets as levels.
///
/// Seller types at a level are the restrictions of their top-level cost tables to the
/// level's items, and projection is restriction. The buyer has one type per level and
/// values production at 100 either way.
pub fn example1() -> Scenario {
    let all = ['a', 'b', 'c'];
    let subsets: Vec<Vec<char>> = (0..8u8).map(|m| all.iter().enumerate().filter(|(k, _)| m & (1 << k) != 0).map(|(_, &c)| c).collect()).collect();
    let mut ordered = subsets.clone();
    ordered.sort_by_key(|x| (x.len(), x.clone()));
    let levels: Vec<String> = ordered.iter().map(|x| level_name(x)).collect();
    let mut edges = Vec::new();
    for lo in &ordered {
        for &c in &all {
            if !lo.contains(&c) {
                let mut hi = lo.clone();
                hi.push(c);
                hi.sort();
                edges.push([level_name(lo), level_name(&hi)]);
            }
        }
    }
    let sellers: [(&str, &str, Vec<Vec<(char, i64)>>); 2] = [
        ("1", "produce_1", vec![vec![('a', 23), ('b', 41), ('c', 16)], vec![('a', 23), ('b', 41), ('c', 15)]]),
        ("2", "produce_2", vec![vec![('a', 19), ('b', 38), ('c', 29)]]),
    ];
    let outcomes = ["none", "produce_1", "produce_2"];
    let mut types = Vec::new();
    let mut projections = Vec::new();
    let mut valuations = Vec::new();
    for (agent, own, tables) in &sellers {
        for lv in &ordered {
            let mut ids: Vec<String> = Vec::new();
            for t in tables {
                let name = table_name(agent, t, lv);
                if !ids.contains(&name) {
                    ids.push(name.clone());
                    let vals: Vec<(&str, i64)> = outcomes.iter().map(|&o| (o, if o == *own { -table_cost(t, lv) } else { 0 })).collect();
                    valuations.push(ValuationSpec { agent: s(agent), ty: name, values: values(&vals) });
                }
            }
            types.push(TypesSpec { agent: s(agent), level: level_name(lv), ids });
        }
        for [lo, hi] in &edges {
            let lo_items: Vec<char> = lo.chars().filter(|c| all.contains(c)).collect();
            let hi_items: Vec<char> = hi.chars().filter(|c| all.contains(c)).collect();
            let map = tables.iter().map(|t| (table_name(agent, t, &hi_items), table_name(agent, t, &lo_items))).collect();
            projections.push(ProjectionSpec { agent: s(agent), from: hi.clone(), to: lo.clone(), map });
        }
    }
    let buyer = |lv: &str| format!("t3@{lv}");
    for lv in &levels {
        types.push(TypesSpec { agent: s("3"), level: lv.clone(), ids: vec![buyer(lv)] });
        valuations.push(ValuationSpec {
            agent: s("3"),
            ty: buyer(lv),
            values: values(&[("none", 0), ("produce_1", 100), ("produce_2", 100)]),
        });
    }
    for [lo, hi] in &edges {
        projections.push(ProjectionSpec { agent: s("3"), from: hi.clone(), to: lo.clone(), map: [(buyer(hi), buyer(lo))].into() });
    }
    let spec = ScenarioSpec {
        name: s("example1"),
        agents: strings(&["1", "2", "3"]),
        lattice: LatticeSpec { levels, edges },
        types,
        projections,
        outcomes: OutcomesSpec { ids: strings(&outcomes), tie_break: vec![], available: vec![] },
        valuations,
        scheme: SchemeSpec::default(),
        draws: vec![
            DrawSpec {
                name: s("reference"),
                true_types: vec![s("t1(a23,b41,c16)"), s("t2(a19,b38,c29)"), s("t3@abc")],
                awareness: strings(&["ab", "bc", "0"]),
            },
            DrawSpec {
                name: s("cheaper-c"),
                true_types: vec![s("t1(a23,b41,c15)"), s("t2(a19,b38,c29)"), s("t3@abc")],
                awareness: strings(&["ab", "bc", "0"]),
            },
        ],
    };
    Scenario::from_spec(&spec).expect("example1 is valid")
}

/// Two-level single-object auction. Outcome `"k"` gives the object to agent `k`; ties go
/// to agent 1.
pub fn example2() -> Scenario {
    auction(
        "example2",
        &[
            ("1", "lo", &[("t1'", 0), ("t1''", 2)]),
            ("1", "hi", &[("t1'''", 2), ("t1''''", 2)]),
            ("2", "lo", &[("t2'", 1)]),
            ("2", "hi", &[("t2'''", 2), ("t2''''", 3)]),
        ],
        &[("1", &[("t1'''", "t1'"), ("t1''''", "t1''")]), ("2", &[("t2'''", "t2'"), ("t2''''", "t2'")])],
        vec![DrawSpec {
            name: s("reference"),
            true_types: strings(&["t1''''", "t2''''"]),
            awareness: strings(&["hi", "lo"]),
        }],
    )
}

/// Reconstructed auction: bidder 1 values the object at 1 when unaware and at 4 when aware;
/// bidder 2 at 2 and 3.
pub fn example4r() -> Scenario {
    auction(
        "example4r",
        &[("1", "lo", &[("a", 1)]), ("1", "hi", &[("A", 4)]), ("2", "lo", &[("b", 2)]), ("2", "hi", &[("B", 3)])],
        &[("1", &[("A", "a")]), ("2", &[("B", "b")])],
        vec![DrawSpec { name: s("interim-loss"), true_types: strings(&["A", "B"]), awareness: strings(&["lo", "hi"]) }],
    )
}

/// `(agent, level, [(type, value of winning)])`.
pub type Space<'a> = (&'a str, &'a str, &'a [(&'a str, i64)]);

/// Two bidders `"1"`, `"2"` on the chain `lo ◁ hi`; outcome `"k"` gives the object to
/// bidder `k`, losing is worth 0 and ties go to bidder 1. `maps` lists projections from
/// `hi` to `lo`.
pub fn auction(name: &str, spaces: &[Space<'_>], maps: &[(&str, &[(&str, &str)])], draws: Vec<DrawSpec>) -> Scenario {
    let mut types = Vec::new();
    let mut valuations = Vec::new();
    for &(agent, level, ts) in spaces {
        types.push(TypesSpec { agent: s(agent), level: s(level), ids: ts.iter().map(|(t, _)| s(t)).collect() });
        for &(t, v) in ts {
            let other = if agent == "1" { "2" } else { "1" };
            valuations.push(ValuationSpec { agent: s(agent), ty: s(t), values: values(&[(agent, v), (other, 0)]) });
        }
    }
    let projections = maps
        .iter()
        .map(|&(agent, m)| ProjectionSpec {
            agent: s(agent),
            from: s("hi"),
            to: s("lo"),
            map: m.iter().map(|&(a, b)| (s(a), s(b))).collect(),
        })
        .collect();
    let spec = ScenarioSpec {
        name: s(name),
        agents: strings(&["1", "2"]),
        lattice: LatticeSpec { levels: strings(&["lo", "hi"]), edges: vec![[s("lo"), s("hi")]] },
        types,
        projections,
        outcomes: OutcomesSpec {
            ids: strings(&["1", "2"]),
            tie_break: strings(&["1", "2"]),
            available: vec![
                AvailabilitySpec { level: s("lo"), ids: strings(&["1", "2"]) },
                AvailabilitySpec { level: s("hi"), ids: strings(&["1", "2"]) },
            ],
        },
        valuations,
        scheme: SchemeSpec { kind: SchemeKind::Clarke, ..SchemeSpec::default() },
        draws,
    };
    Scenario::from_spec(&spec).expect("auction fixture is valid")
}
