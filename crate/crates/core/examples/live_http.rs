//! One two-step classification against a live OpenAI-compatible endpoint.
//! Does nothing unless METONYMY_ENDPOINT and METONYMY_MODEL are set; the
//! bearer token is read from OPENAI_API_KEY (or the variable named by
//! METONYMY_API_KEY_ENV).
//!
//!     METONYMY_ENDPOINT=http://localhost:8000/v1/chat/completions \
//!     METONYMY_MODEL=meta-llama/Llama-3.1-8B-Instruct \
//!     cargo run --example live_http -- "The whole stadium stood up." stadium

use metonymy::classify::{Classifier, PromptSet};
use metonymy::llm::{HttpBackend, HttpConfig};
use metonymy::{Instance, Strategy};

fn main() {
    let (Ok(endpoint), Ok(model)) = (std::env::var("METONYMY_ENDPOINT"), std::env::var("METONYMY_MODEL")) else {
        eprintln!("set METONYMY_ENDPOINT and METONYMY_MODEL to run this example");
        return;
    };
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let sentence = args.next().unwrap_or_else(|| "The whole stadium stood up.".into());
    let target = args.next().unwrap_or_else(|| "stadium".into());

    let mut config = HttpConfig::new(endpoint);
    if let Ok(var) = std::env::var("METONYMY_API_KEY_ENV") {
        config.api_key_env = Some(var);
    }
    let backend = HttpBackend::new(config).unwrap_or_else(|e| panic!("{e}"));
    let prompts = PromptSet::builtin();
    let classifier = Classifier::new(&backend, &prompts, model);

    let inst = Instance::new("live", sentence, target);
    match classifier.self_consistency(&inst, Strategy::Cot2s, 1) {
        Ok(r) => {
            for t in &r.traces {
                println!("--- {:?} ---\n{}\n", t.step, t.response);
            }
            println!("=> {}", r.prediction.final_label.prediction_str());
        }
        Err(e) => eprintln!("failed: {e}"),
    }
}
