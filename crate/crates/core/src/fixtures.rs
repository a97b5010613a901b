//! Built-in example networks.
//!
//! The Student Mood network has four binary variables `Dif -> Grade <- Prep`,
//! `Grade -> Mood`. Two of its entries (see `fixtures/student_mood.bif`) are
//! free choices of this repository.

use crate::bn::{BayesianNetwork, NetworkBuilder};

pub const STUDENT_MOOD_BIF: &str = include_str!("../fixtures/student_mood.bif");
pub const STUDENT_MOOD_VTREE: &str = include_str!("../fixtures/student_mood.vtree");
pub const STUDENT_MOOD_PSDD: &str = include_str!("../fixtures/student_mood.psdd");

pub fn student_mood() -> BayesianNetwork {
    let mut b = NetworkBuilder::new("StudentMood");
    let dif = b.variable("Dif", ["0", "1"]);
    let prep = b.variable("Prep", ["0", "1"]);
    let grade = b.variable("Grade", ["0", "1"]);
    let mood = b.variable("Mood", ["0", "1"]);
    b.cpt(dif, &[], &[vec![0.6, 0.4]]).unwrap();
    b.cpt(prep, &[], &[vec![0.7, 0.3]]).unwrap();
    b.cpt(
        grade,
        &[dif, prep],
        &[
            vec![0.95, 0.05],
            vec![0.5, 0.5],
            vec![0.9, 0.1],
            vec![0.05, 0.95],
        ],
    )
    .unwrap();
    b.cpt(mood, &[grade], &[vec![0.9, 0.1], vec![0.3, 0.7]])
        .unwrap();
    b.build().unwrap()
}

/// Student Mood without `Mood`: the three-variable chain used for the
/// 15-state example.
pub fn student_mood_core() -> BayesianNetwork {
    let bn = student_mood();
    let keep: Vec<_> = ["Dif", "Prep", "Grade"]
        .iter()
        .map(|n| bn.find(n).unwrap())
        .collect();
    bn.sub_network(&keep).unwrap()
}
