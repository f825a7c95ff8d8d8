//! Small deterministic scenarios for tests, demos and the acceptance suite.
//! Each one pairs a corpus and a conversation with a script for
//! [`ScriptedBackend`](crate::backend::ScriptedBackend).

use crate::backend::{Generation, MockScript};
use crate::conversation::{Conversation, Passage, Turn};
use crate::orchestrator::prompts::{TASK_DECISION, TASK_GROUNDEDNESS, TASK_RELEVANCE, TASK_RESPOND, TASK_UTILITY};
use crate::retrieval::Corpus;

/// A single pipeline turn to run: `message` is posted on top of `history`.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub corpus: Corpus,
    pub history: Conversation,
    pub message: String,
    pub script: MockScript,
}

impl Scenario {
    /// The scenario as a one-conversation benchmark ending in the message.
    pub fn benchmark(&self) -> Conversation {
        let mut conv = self.history.clone();
        conv.turns.push(Turn::user(self.message.clone()));
        conv
    }
}

const D1: &str = "boer war gold mining";
const D2: &str = "boer commandos volunteer militia";
const D3: &str = "olmec civilization origins";

/// The three-passage corpus `d1`, `d2`, `d3`.
pub fn three_doc_corpus() -> Corpus {
    Corpus::ingest([
        Passage::new("d1", "", D1),
        Passage::new("d2", "", D2),
        Passage::new("d3", "", D3),
    ])
    .expect("fixture corpus is valid")
}

const RETRIEVAL_TOKENS: [&str; 3] = ["[Retrieve]", "[No Retrieve]", "[Continue to Use Evidence]"];

fn decision(script: MockScript, needles: &[&str], retrieve: f64, no_retrieve: f64, cont: f64) -> MockScript {
    let mut n = vec![TASK_DECISION];
    n.extend_from_slice(needles);
    script.on_score(
        &n,
        &[
            (RETRIEVAL_TOKENS[0], retrieve),
            (RETRIEVAL_TOKENS[1], no_retrieve),
            (RETRIEVAL_TOKENS[2], cont),
        ],
    )
}

fn critiques(script: MockScript, evidence: &str, answer_part: &str, rel: (f64, f64), grd: (f64, f64, f64), utl5: f64) -> MockScript {
    script
        .on_score(&[TASK_RELEVANCE, evidence], &[("[Relevant]", rel.0), ("[Non Relevant]", rel.1)])
        .on_score(
            &[TASK_GROUNDEDNESS, evidence],
            &[
                ("[Fully supported]", grd.0),
                ("[Partially supported]", grd.1),
                ("[No support]", grd.2),
            ],
        )
        .on_score(
            &[TASK_UTILITY, answer_part],
            &[
                ("[Utility:1]", -4.0),
                ("[Utility:2]", -4.0),
                ("[Utility:3]", -3.0),
                ("[Utility:4]", -2.0),
                ("[Utility:5]", utl5),
            ],
        )
}

/// Retrieve path over the three-passage corpus. The query matches `d2` on
/// two terms and `d1` on one; the `d2` candidate wins.
pub fn retrieve_scenario() -> Scenario {
    let message = "What were the Boer commandos?";
    let mut script = decision(MockScript::new(), &[message], -0.1, -3.0, -3.0);
    script = script.on_generate(
        &["summarise the conversation history", message],
        Generation::text_only("Summary: The user asks about the Boer. Question: What were the Boer commandos?"),
    );
    script = script
        .on_generate(
            &[TASK_RESPOND, D2],
            Generation::from_tokens(&[
                ("[Relevant]", -0.01),
                ("Boer commandos", -0.1),
                (" were volunteer militia units.", -0.05),
                ("[Fully supported]", -0.02),
                ("[Utility:5]", -0.02),
            ]),
        )
        .on_generate(
            &[TASK_RESPOND, D1],
            Generation::from_tokens(&[("The Boer war", -0.3), (" was about gold mining.", -0.4), ("[Partially supported]", -0.1)]),
        );
    script = critiques(script, D2, "volunteer militia units", (-0.5, -1.5), (0.0, -3.0, -3.0), -0.5);
    script = critiques(script, D1, "about gold mining", (-1.5, -0.5), (-2.0, -0.2, -2.0), -2.5);
    Scenario {
        corpus: three_doc_corpus(),
        history: Conversation::new("retrieve"),
        message: message.into(),
        script,
    }
}

/// Follow-up whose answer sits in the passage attached to the previous
/// answer; the script favors continuing with that evidence.
pub fn continue_scenario() -> Scenario {
    let history = Conversation::with_turns(
        "continue",
        vec![
            Turn::user("What were the Boer commandos?"),
            Turn::assistant("They were volunteer militia units.").with_passages(["d2"]),
        ],
    );
    let message = "Were they volunteers or professional soldiers?";
    let mut script = decision(MockScript::new(), &[message, "Previously Retrieved Passages"], -3.0, -3.0, -0.1);
    script = script.on_generate(
        &[TASK_RESPOND, D2, message],
        Generation::from_tokens(&[
            ("[Relevant]", -0.01),
            ("They were volunteers", -0.05),
            (" organized as militia.", -0.1),
            ("[Fully supported]", -0.01),
            ("[Utility:5]", -0.01),
        ]),
    );
    script = critiques(script, D2, "organized as militia", (-0.1, -2.5), (0.0, -4.0, -4.0), -0.3);
    Scenario {
        corpus: three_doc_corpus(),
        history,
        message: message.into(),
        script,
    }
}

/// A creative request answered without evidence.
pub fn no_retrieve_scenario() -> Scenario {
    let message = "Write a two-line poem about the sea.";
    let mut script = decision(MockScript::new(), &[message], -3.0, -0.05, -0.2);
    script = script.on_generate(
        &[TASK_RESPOND, message],
        Generation::from_tokens(&[("Waves hum softly,", -0.2), (" tides keep time.", -0.3), ("[Utility:4]", -0.1)]),
    );
    script = script.on_score(
        &[TASK_UTILITY, "tides keep time"],
        &[
            ("[Utility:1]", -5.0),
            ("[Utility:2]", -4.0),
            ("[Utility:3]", -2.0),
            ("[Utility:4]", -0.5),
            ("[Utility:5]", -1.5),
        ],
    );
    Scenario {
        corpus: three_doc_corpus(),
        history: Conversation::new("no-retrieve"),
        message: message.into(),
        script,
    }
}

/// Retrieval benchmark in which each gold passage shares terms only with
/// the first turn of its conversation, never with the final question.
#[derive(Debug, Clone)]
pub struct PlantedBenchmark {
    pub corpus: Corpus,
    pub conversations: Vec<Conversation>,
    /// Rewrite and summary outputs for each conversation.
    pub script: MockScript,
}

pub fn planted_benchmark() -> PlantedBenchmark {
    let corpus = Corpus::ingest([
        Passage::new("g1", "Kilimanjaro", "kilimanjaro summit glacier tanzania volcano"),
        Passage::new("g2", "Olmec", "olmec civilization origins farming tabasco"),
        Passage::new("x1", "", "how tall is the eiffel tower in paris"),
        Passage::new("x2", "", "it is tall when measured from the base"),
        Passage::new("x3", "", "when did it begin raining in london"),
        Passage::new("x4", "", "the river thames flows through london"),
        Passage::new("x5", "", "did the festival begin on time"),
    ])
    .expect("fixture corpus is valid");

    let kili = Conversation::with_turns(
        "planted-1",
        vec![
            Turn::user("Tell me about Kilimanjaro in Tanzania."),
            Turn::assistant("It is a dormant volcano with a glacier near the summit."),
            {
                let mut t = Turn::user("How tall is it?").with_gold(["g1"]);
                t.gold_rewrite = Some("How tall is Kilimanjaro?".into());
                t
            },
        ],
    );
    let olmec = Conversation::with_turns(
        "planted-2",
        vec![
            Turn::user("What do we know about the Olmec civilization?"),
            Turn::assistant("It arose from early farming cultures of Tabasco."),
            {
                let mut t = Turn::user("When did it begin?").with_gold(["g2"]);
                t.gold_rewrite = Some("When did the Olmec civilization begin?".into());
                t
            },
        ],
    );

    let script = MockScript::new()
        .on_generate(
            &["summarise the conversation history", "How tall is it?"],
            Generation::text_only("Summary: The user asked about Kilimanjaro, a volcano in Tanzania with a summit glacier. Question: How tall is Kilimanjaro?"),
        )
        .on_generate(
            &["summarise the conversation history", "When did it begin?"],
            Generation::text_only("Summary: The user asked about the Olmec civilization and its farming origins in Tabasco. Question: When did the Olmec civilization begin?"),
        )
        .on_generate(&["### Task: rewrite", "How tall is it?"], Generation::text_only("How tall is Kilimanjaro?"))
        .on_generate(&["### Task: rewrite", "When did it begin?"], Generation::text_only("When did the Olmec begin?"));

    PlantedBenchmark {
        corpus,
        conversations: vec![kili, olmec],
        script,
    }
}
