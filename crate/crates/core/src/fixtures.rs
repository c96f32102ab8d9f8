//! Small hand-built flight databases used by tests and examples.
//!
//! [`fig1_graph`] is laid out so that the depth-2 neighborhood of flight
//! `F1` has exactly seven tuples and eight links, including a same-depth
//! link between airline `A1` and airport `P1` (the airline's hub).
//! [`fig1_pair`] has two target flights `F1` and `F5` that share airline
//! `A1` and no other tuple at depth 1.

use crate::store::{IngestOptions, Schema, Store, TupleRef};

/// Three tables, three relations: a flight's airline and its two airports.
pub const FLIGHTS_SCHEMA: &str = r#"{
  "tables": [
    { "name": "flights", "file": "flights.csv", "primary_key": "flight_id",
      "columns": [ { "name": "flight_id", "kind": "categorical" },
                   { "name": "airline_id", "kind": "categorical" },
                   { "name": "dep_airport", "kind": "categorical" },
                   { "name": "arr_airport", "kind": "categorical" },
                   { "name": "distance", "kind": "numeric" },
                   { "name": "delay", "kind": "numeric" } ] },
    { "name": "airlines", "file": "airlines.csv", "primary_key": "airline_id",
      "columns": [ { "name": "airline_id", "kind": "categorical" },
                   { "name": "alliance", "kind": "categorical" } ] },
    { "name": "airports", "file": "airports.csv", "primary_key": "airport_id",
      "columns": [ { "name": "airport_id", "kind": "categorical" },
                   { "name": "elevation", "kind": "numeric" },
                   { "name": "region", "kind": "categorical" } ] }
  ],
  "relations": [
    { "from_table": "flights", "from_column": "airline_id", "to_table": "airlines", "to_column": "airline_id" },
    { "from_table": "flights", "from_column": "dep_airport", "to_table": "airports", "to_column": "airport_id" },
    { "from_table": "flights", "from_column": "arr_airport", "to_table": "airports", "to_column": "airport_id" }
  ],
  "target": { "table": "flights", "column": "delay", "task": "regression" }
}"#;

/// The flights schema plus each airline's hub airport as a fourth relation.
pub const FLIGHTS_HUB_SCHEMA: &str = r#"{
  "tables": [
    { "name": "flights", "file": "flights.csv", "primary_key": "flight_id",
      "columns": [ { "name": "flight_id", "kind": "categorical" },
                   { "name": "airline_id", "kind": "categorical" },
                   { "name": "dep_airport", "kind": "categorical" },
                   { "name": "arr_airport", "kind": "categorical" },
                   { "name": "distance", "kind": "numeric" },
                   { "name": "delay", "kind": "numeric" } ] },
    { "name": "airlines", "file": "airlines.csv", "primary_key": "airline_id",
      "columns": [ { "name": "airline_id", "kind": "categorical" },
                   { "name": "hub_airport", "kind": "categorical" },
                   { "name": "fleet_size", "kind": "numeric" } ] },
    { "name": "airports", "file": "airports.csv", "primary_key": "airport_id",
      "columns": [ { "name": "airport_id", "kind": "categorical" },
                   { "name": "elevation", "kind": "numeric" },
                   { "name": "region", "kind": "categorical" } ] }
  ],
  "relations": [
    { "from_table": "flights", "from_column": "airline_id", "to_table": "airlines", "to_column": "airline_id" },
    { "from_table": "flights", "from_column": "dep_airport", "to_table": "airports", "to_column": "airport_id" },
    { "from_table": "flights", "from_column": "arr_airport", "to_table": "airports", "to_column": "airport_id" },
    { "from_table": "airlines", "from_column": "hub_airport", "to_table": "airports", "to_column": "airport_id" }
  ],
  "target": { "table": "flights", "column": "delay", "task": "regression" }
}"#;

pub const FLIGHTS: usize = 0;
pub const AIRLINES: usize = 1;
pub const AIRPORTS: usize = 2;

/// Named tuples of [`fig1_graph`] and [`fig1_pair`]. Flight `Fk` is row
/// `k-1` of the flights table, and likewise for airlines and airports.
#[derive(Debug, Clone, Copy)]
pub struct Flights {
    pub f1: TupleRef,
    pub f2: TupleRef,
    pub f3: TupleRef,
    pub f4: TupleRef,
    pub f5: TupleRef,
    pub f6: TupleRef,
    pub a1: TupleRef,
    pub a2: TupleRef,
    pub a6: TupleRef,
    pub p1: TupleRef,
    pub p2: TupleRef,
    pub p3: TupleRef,
    pub p4: TupleRef,
}

impl Flights {
    fn new() -> Self {
        let f = |r| TupleRef::new(FLIGHTS, r);
        let a = |r| TupleRef::new(AIRLINES, r);
        let p = |r| TupleRef::new(AIRPORTS, r);
        Flights {
            f1: f(0),
            f2: f(1),
            f3: f(2),
            f4: f(3),
            f5: f(4),
            f6: f(5),
            a1: a(0),
            a2: a(1),
            a6: a(5),
            p1: p(0),
            p2: p(1),
            p3: p(2),
            p4: p(3),
        }
    }
}

fn records(rows: &[&[&str]]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
}

/// Airports P1..P5, airlines A1..A6 (A1's hub is P1), flights F1..F6.
pub fn fig1_graph() -> (Store, Flights) {
    let schema = Schema::from_json(FLIGHTS_HUB_SCHEMA).expect("fixture schema");
    let flights = records(&[
        &["F1", "A1", "P1", "P2", "420", "12"],
        &["F2", "A1", "P3", "P4", "610", "3"],
        &["F3", "A2", "P1", "P2", "415", "25"],
        &["F4", "A2", "P1", "P5", "980", "0"],
        &["F5", "A3", "P3", "P4", "600", "7"],
        &["F6", "A3", "P4", "P3", "605", "9"],
    ]);
    let airlines = records(&[
        &["A1", "P1", "120"],
        &["A2", "P3", "40"],
        &["A3", "", "75"],
        &["A4", "", "12"],
        &["A5", "", "8"],
        &["A6", "", "3"],
    ]);
    let airports = records(&[
        &["P1", "10", "eu"],
        &["P2", "340", "eu"],
        &["P3", "5", "us"],
        &["P4", "1500", "us"],
        &["P5", "72", "asia"],
    ]);
    let store = Store::from_records(schema, vec![flights, airlines, airports], IngestOptions::default())
        .expect("fixture store");
    (store, Flights::new())
}

/// Two target flights F1 and F5 sharing airline A1; no hub relation.
/// Airlines A1, A2; airports P1..P6; flights F1..F7.
pub fn fig1_pair() -> (Store, Flights) {
    let schema = Schema::from_json(FLIGHTS_SCHEMA).expect("fixture schema");
    let flights = records(&[
        &["F1", "A1", "P1", "P2", "420", "12"],
        &["F2", "A1", "P5", "P6", "610", "3"],
        &["F3", "A2", "P1", "P2", "415", "25"],
        &["F4", "A2", "P1", "P6", "980", "0"],
        &["F5", "A1", "P3", "P4", "600", "7"],
        &["F6", "A2", "P3", "P6", "605", "9"],
        &["F7", "A2", "P5", "P4", "390", "4"],
    ]);
    let airlines = records(&[&["A1", "star"], &["A2", "oneworld"]]);
    let airports = records(&[
        &["P1", "10", "eu"],
        &["P2", "340", "eu"],
        &["P3", "5", "us"],
        &["P4", "1500", "us"],
        &["P5", "72", "asia"],
        &["P6", "30", "asia"],
    ]);
    let store = Store::from_records(schema, vec![flights, airlines, airports], IngestOptions::default())
        .expect("fixture store");
    (store, Flights::new())
}
