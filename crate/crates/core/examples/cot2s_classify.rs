//! Two-step chain-of-thought on a single sentence, with a scripted backend
//! standing in for the model so the run is offline and repeatable.
//!
//!     cargo run --example cot2s_classify

use metonymy::classify::{Classifier, PromptSet};
use metonymy::llm::{ScriptRule, ScriptedBackend};
use metonymy::{Instance, Strategy};

fn main() {
    let inst = Instance::new("demo", "He finished the whole glass before dinner.", "glass");

    // The category-specific prompt is the one asking for a "Final answer"; its
    // replies alternate so the three votes disagree. Anything else is the
    // categorization step.
    let backend = ScriptedBackend::new(vec![
        ScriptRule::cycle(
            "Final answer",
            vec![
                "The glass itself cannot be finished; its contents (the drink) can.\nFinal answer: metonymic".into(),
                "Finishing a glass here means drinking what is in it.\nFinal answer: metonymic".into(),
                "Taken literally, one finishes the object.\nFinal answer: literal".into(),
            ],
        )
        .and("finished the whole glass"),
        ScriptRule::new("category of the target word", "CONTAINER"),
    ]);
    let prompts = PromptSet::builtin();
    let classifier = Classifier::new(&backend, &prompts, "scripted");

    let result = classifier
        .self_consistency(&inst, Strategy::Cot2s, 3)
        .expect("scripted backend answers every step");
    for t in &result.traces {
        println!(
            "vote {} {:?} (attempt {}): {}",
            t.vote_index, t.step, t.attempt, t.parsed
        );
    }
    let p = &result.prediction;
    println!(
        "final: {} via {:?}, votes {:?}",
        p.final_label.prediction_str(),
        p.predicted_category,
        p.votes.iter().map(|v| v.label.prediction_str()).collect::<Vec<_>>()
    );
}
