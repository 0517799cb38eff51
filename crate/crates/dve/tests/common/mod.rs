#![allow(dead_code)]

use std::fs;
use std::path::Path;

use dve::sources::SourcePaths;

pub const P1: &str = "Two dogs run through a field.";
pub const P2: &str = "A girl in a red coat waits at a bus stop.";
pub const P3: &str = "A chef slices onions in a kitchen.";

/// Raw-format copies of a small hand-traced corpus: three neutral pairs, two
/// of which carry δ-NLI updates, plus one entailment pair and one SNLI line
/// without consensus.
pub fn write_fixture_sources(dir: &Path) -> SourcePaths {
    let snli = [
        (P1, "The dogs are chasing a ball.", "neutral", "1000.jpg#0"),
        (P2, "The girl is going to school.", "neutral", "2000.jpg#0"),
        (P3, "The chef is cooking soup.", "neutral", "3000.jpg#0"),
        (P1, "Animals are outside.", "entailment", "1000.jpg#0"),
        (P3, "Someone is in a kitchen.", "-", "3000.jpg#0"),
    ]
    .iter()
    .map(|(p, h, l, c)| {
        serde_json::json!({"gold_label": l, "sentence1": p, "sentence2": h, "captionID": c}).to_string()
    })
    .collect::<Vec<_>>()
    .join("\n");
    let train = [
        (P1, "The dogs are chasing a ball.", "A ball flies ahead of them.", "strengthener"),
        (P1, "The dogs are chasing a ball.", "Their eyes follow a rabbit.", "weakener"),
    ];
    let test = [
        (P2, "The girl is going  to school.", "She carries a backpack.", "strengthener"),
        (P2, "The girl is going to school.", "It is Sunday.", "weakener"),
    ];
    let delta = |rows: &[(&str, &str, &str, &str)]| {
        rows.iter()
            .map(|(p, h, u, t)| {
                serde_json::json!({"Premise": p, "Hypothesis": h, "Update": u, "UpdateType": t}).to_string()
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let captions = format!("1000.jpg#0\t{P1}\n1000.jpg#1\tDogs in grass.\n2000.jpg#0\t{P2}\n3000.jpg#0\t{P3}\n");

    fs::write(dir.join("snli.jsonl"), snli).unwrap();
    fs::write(dir.join("dnli_train.jsonl"), delta(&train)).unwrap();
    fs::write(dir.join("dnli_test.jsonl"), delta(&test)).unwrap();
    fs::write(dir.join("captions.tsv"), captions).unwrap();
    SourcePaths {
        snli: vec![dir.join("snli.jsonl")],
        delta_nli_train: Some(dir.join("dnli_train.jsonl")),
        delta_nli_validation: None,
        delta_nli_test: Some(dir.join("dnli_test.jsonl")),
        flickr_captions: Some(dir.join("captions.tsv")),
        flickr_images: Some(dir.join("images")),
    }
}
