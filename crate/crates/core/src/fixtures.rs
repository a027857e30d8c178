//! Small reference kitchens shared by tests, examples and demos.

use crate::world::{Point, TypeTree, WorldBuilder, WorldState};

/// The default kitchen type hierarchy.
pub fn kitchen_tree() -> TypeTree {
    TypeTree::from_edges([
        ("item", "thing"),
        ("device", "thing"),
        ("food", "item"),
        ("bread", "food"),
        ("bun", "food"),
        ("container", "item"),
        ("cup", "container"),
        ("glass", "container"),
        ("jug", "container"),
        ("bottle", "container"),
        ("liquid", "item"),
        ("milk", "liquid"),
        ("water", "liquid"),
        ("juice", "liquid"),
        ("tea", "liquid"),
        ("teabag", "item"),
        ("appliance", "device"),
        ("microwave", "appliance"),
        ("fridge", "appliance"),
        ("toaster", "appliance"),
        ("kettle", "device"),
    ])
    .expect("static tree")
}

fn build(f: impl FnOnce(WorldBuilder) -> Result<WorldBuilder, crate::world::WorldError>) -> WorldState {
    f(WorldBuilder::new(kitchen_tree())).and_then(WorldBuilder::build).expect("static fixture")
}

/// Bread, toaster, microwave, fridge, a cup of milk; counter and table.
pub fn kitchen_min() -> WorldState {
    build(|b| {
        b.agent("human")?
            .zone("counter", Point::new(0.0, 0.0))?
            .zone("table", Point::new(1.0, 0.0))?
            .object("bread1", "bread", None)?
            .object("toaster1", "toaster", Some(1))?
            .object("microwave1", "microwave", Some(1))?
            .object("fridge1", "fridge", Some(2))?
            .object("cup1", "cup", Some(1))?
            .object("milk1", "milk", None)?
            .fact_str("at(bread1, counter)")?
            .fact_str("at(toaster1, counter)")?
            .fact_str("at(microwave1, counter)")?
            .fact_str("at(fridge1, table)")?
            .fact_str("at(cup1, counter)")?
            .fact_str("in(milk1, cup1)")
    })
}

/// Kettle, jug of water, empty cup, teabag, microwave and fridge.
pub fn tea_world() -> WorldState {
    build(|b| {
        b.agent("robot")?
            .zone("counter", Point::new(0.0, 0.0))?
            .zone("table", Point::new(1.0, 0.0))?
            .object("kettle1", "kettle", Some(1))?
            .object("jug1", "jug", Some(1))?
            .object("water1", "water", None)?
            .object("cup1", "cup", Some(2))?
            .object("teabag1", "teabag", None)?
            .object("microwave1", "microwave", Some(1))?
            .object("fridge1", "fridge", Some(1))?
            .fact_str("at(kettle1, counter)")?
            .fact_str("at(jug1, counter)")?
            .fact_str("in(water1, jug1)")?
            .fact_str("at(cup1, counter)")?
            .fact_str("at(teabag1, counter)")?
            .fact_str("at(microwave1, counter)")?
            .fact_str("at(fridge1, table)")
    })
}

/// Juice bottle and glass out on the counter, bread and toaster on the table.
/// The only agent is the seated human at the origin.
pub fn pour_world() -> WorldState {
    build(|b| {
        b.agent("human")?
            .zone("counter", Point::new(0.0, 0.7))?
            .zone("table", Point::new(0.9, 0.0))?
            .object("bottle1", "bottle", Some(1))?
            .object("juice1", "juice", None)?
            .object("glass1", "glass", Some(1))?
            .object("bread1", "bread", None)?
            .object("toaster1", "toaster", Some(1))?
            .fact_str("at(bottle1, counter)")?
            .fact_str("in(juice1, bottle1)")?
            .fact_str("at(glass1, counter)")?
            .fact_str("at(bread1, table)")?
            .fact_str("at(toaster1, table)")
    })
}

/// Cells the robot can place things on in [`pour_world`]: a 0.1 m grid in
/// front of the human that stays 0.2 m away from the seat.
pub fn pour_robot_region() -> alloc::vec::Vec<Point> {
    crate::assist::grid(Point::new(-0.6, 0.2), Point::new(0.6, 1.0), 0.1)
}

/// A cup of milk, a cup of water and a microwave on the counter.
pub fn milk_world() -> WorldState {
    build(|b| {
        b.agent("human")?
            .zone("counter", Point::new(0.0, 0.0))?
            .object("cup1", "cup", Some(1))?
            .object("cup2", "cup", Some(1))?
            .object("milk1", "milk", None)?
            .object("water1", "water", None)?
            .object("microwave1", "microwave", Some(1))?
            .fact_str("at(cup1, counter)")?
            .fact_str("at(cup2, counter)")?
            .fact_str("at(microwave1, counter)")?
            .fact_str("in(milk1, cup1)")?
            .fact_str("in(water1, cup2)")
    })
}
