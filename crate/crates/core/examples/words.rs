//! Operator words of a sequential scenario: simplification, products and the
//! level-k index used for moment matrices.

use seqdim::{Letter, Scenario, Word};

fn main() {
    // Words carry outcomes 0..o-2; the last outcome follows by completeness.
    let scenario = Scenario::new(3, 2, 3).unwrap();
    println!(
        "scenario {scenario}: {} settings, sequences of length {}, {} outcomes",
        scenario.settings(),
        scenario.length(),
        scenario.outcomes()
    );

    // Repeating a measurement with the same outcome is idempotent; a different outcome
    // annihilates the word.
    let repeat = [Letter::new(0, 1), Letter::new(0, 1), Letter::new(1, 2)];
    let clash = [Letter::new(0, 1), Letter::new(1, 1)];
    println!(
        "{} -> {}",
        raw(&repeat),
        scenario.simplify(&repeat).unwrap()
    );
    println!("{} -> {}", raw(&clash), scenario.simplify(&clash).unwrap());

    let a: Word = "0|0,1|2".parse().unwrap();
    let b: Word = "1|2,0|1".parse().unwrap();
    println!("product({a}, {b}) = {}", scenario.product(&a, &b).unwrap());

    for k in 1..=2 {
        let index = scenario.enumerate_words(k).unwrap();
        println!(
            "level {k}: {} words of length <= {}",
            index.len(),
            index.max_len()
        );
    }
    let index = scenario.enumerate_words(1).unwrap();
    let shown: Vec<String> = index.words().iter().map(Word::to_string).collect();
    println!("level 1 words: {}", shown.join("  "));

    // Events whose later steps have unspecified outcomes expand by completeness.
    let event = [Letter::new(1, 0)];
    for (coef, word) in scenario.expand_event(&event).unwrap() {
        println!("  {coef:+} * {word}");
    }
}

fn raw(letters: &[Letter]) -> String {
    letters
        .iter()
        .map(|l| format!("{}|{}", l.outcome, l.setting))
        .collect::<Vec<_>>()
        .join(",")
}
