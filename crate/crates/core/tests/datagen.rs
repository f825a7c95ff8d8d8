use multirag_core::backend::{Generation, MockScript, ScriptedBackend};
use multirag_core::datagen::{
    collect_labels, parse_judge_label, render_prompt, template_hash, CollectOptions, CriticTask, Instance, Label,
    LabeledInstance,
};
use multirag_core::{Conversation, Passage, Turn};

fn single(text: &str) -> Conversation {
    Conversation::with_turns("c", vec![Turn::user(text)])
}

fn cooper() -> Conversation {
    Conversation::with_turns(
        "cooper",
        vec![
            Turn::user("What was the first job John Sherman Cooper held?"),
            Turn::assistant("He was admitted to the bar in 1928 and opened a practice in Somerset."),
            Turn::user("What office did he run for first?"),
        ],
    )
}

#[test]
fn verbatim_anchor_strings() {
    let boer = single("What were the Boer commandos?");
    let p = Passage::new("d2", "", "boer commandos volunteer militia");
    let cases = [
        (CriticTask::Retrieval2, Instance::new(boer.clone()), "make a judgment on whether finding some external documents from the web"),
        (
            CriticTask::Retrieval3,
            Instance::new(boer.clone()).with_evidence(p.clone()).with_response("They were militia."),
            "[Continue to Use Evidence]",
        ),
        (
            CriticTask::Relevance,
            Instance::new(boer.clone()).with_evidence(p.clone()),
            "determine if the evidence is relevant",
        ),
        (
            CriticTask::Groundedness,
            Instance::new(boer.clone()).with_evidence(p.clone()).with_response("They were militia."),
            "entailment scale",
        ),
        (
            CriticTask::Utility,
            Instance::new(boer.clone()).with_response("They were militia."),
            "perceived utility",
        ),
        (CriticTask::Summarization, Instance::new(cooper()), "summarise the conversation history in 40-50 words and ask a question"),
        (CriticTask::JudgeEval, Instance::new(cooper()).with_response("Kentucky House."), "on a scale of 0 to 5"),
    ];
    for (task, inst, anchor) in cases {
        let prompt = render_prompt(task, &inst).unwrap();
        assert!(prompt.contains(anchor), "{task}: missing {anchor:?}");
    }
}

#[test]
fn cooper_summary_prompt_ends_with_the_instance() {
    let prompt = render_prompt(CriticTask::Summarization, &Instance::new(cooper())).unwrap();
    assert!(prompt.ends_with(
        "Converation History:\nWhat was the first job John Sherman Cooper held?\nHe was admitted to the bar in 1928 and opened a practice in Somerset.\nWhat office did he run for first?\n"
    ));
}

#[test]
fn groundedness_needs_evidence() {
    let err = render_prompt(CriticTask::Groundedness, &Instance::new(single("q")).with_response("r")).unwrap_err();
    assert_eq!(err.to_string(), "evidence required for groundedness");
}

#[test]
fn every_alphabet_member_round_trips() {
    for task in CriticTask::ALL {
        if task == CriticTask::Summarization {
            continue;
        }
        for label in Label::alphabet(task) {
            let canonical = label.canonical();
            assert_eq!(parse_judge_label(task, &canonical).unwrap(), label, "{task} {canonical}");
            assert_eq!(Label::from_canonical(task, &canonical), Some(label));
        }
    }
}

fn collect(task: CriticTask, script: MockScript, instances: &[Instance]) -> Vec<LabeledInstance> {
    let judge = ScriptedBackend::named(script, "judge");
    let opts = CollectOptions {
        parallel: 4,
        ..CollectOptions::default()
    };
    let c = collect_labels(&judge, task, instances, &opts).unwrap();
    assert_eq!(c.records.len(), instances.len());
    c.records
}

#[test]
fn scripted_judge_reproduces_label_proportions() {
    let script = MockScript::new()
        .on_generate(&["needs-web"], Generation::text_only("GPT-4-Rating: [Retrieval]"))
        .on_generate(&["chit-chat"], Generation::text_only("Explanation: casual.\nGPT-4-Rating: [No Retrieval]"));
    let instances: Vec<_> = (0..100)
        .map(|i| {
            let kind = if i < 69 { "needs-web" } else { "chit-chat" };
            Instance::new(single(&format!("question {i} {kind}")))
        })
        .collect();
    let judge = ScriptedBackend::new(script);
    let c = collect_labels(&judge, CriticTask::Retrieval2, &instances, &CollectOptions::default()).unwrap();
    assert_eq!(c.stats.labeled, 100);
    assert_eq!(c.stats.percentage("[Retrieve]"), Some(69.0));
    assert_eq!(c.stats.percentage("[No Retrieve]"), Some(31.0));
    let hash = template_hash(CriticTask::Retrieval2);
    assert!(c.records.iter().all(|r| r.template_hash == hash));
}

#[test]
fn unparseable_reply_is_kept_and_marked() {
    let script = MockScript::new()
        .on_generate(&["broken"], Generation::text_only("I cannot decide."))
        .on_generate(&["fine"], Generation::text_only("Rating: [Relevant]"));
    let p = Passage::new("p", "", "evidence");
    let instances: Vec<_> = (0..10)
        .map(|i| {
            let kind = if i == 3 { "broken" } else { "fine" };
            Instance::new(single(&format!("q{i} {kind}"))).with_evidence(p.clone())
        })
        .collect();
    let records = collect(CriticTask::Relevance, script.clone(), &instances);
    assert_eq!(records.iter().filter(|r| r.is_labeled()).count(), 9);
    assert_eq!(records[3].raw_judge_output, "I cannot decide.");
    assert!(records[3].failure.is_some());

    let judge = ScriptedBackend::new(script);
    let c = collect_labels(&judge, CriticTask::Relevance, &instances, &CollectOptions::default()).unwrap();
    assert_eq!((c.stats.labeled, c.stats.failed), (9, 1));
    assert_eq!(c.stats.percentage("[Relevant]"), Some(100.0));
}

#[test]
fn no_instances_no_stats() {
    let records = collect(CriticTask::Utility, MockScript::new(), &[]);
    assert!(records.is_empty());
}

#[test]
fn unreachable_judge_keeps_partial_results() {
    let script = MockScript::new().on_generate(&["ok"], Generation::text_only("Perceived utility: 4"));
    let instances: Vec<_> = ["ok 1", "ok 2", "missing", "ok 3"]
        .iter()
        .map(|t| Instance::new(single(t)).with_response("r"))
        .collect();
    let judge = ScriptedBackend::new(script);
    let err = collect_labels(&judge, CriticTask::Utility, &instances, &CollectOptions::default()).unwrap_err();
    assert_eq!(err.index, 2);
    assert_eq!(err.partial.records.len(), 2);
    assert_eq!(err.partial.stats.percentage("[Utility:4]"), Some(100.0));
}

#[test]
fn labeled_records_serialize_flat() {
    let script = MockScript::new().on_generate(&["q"], Generation::text_only("Perceived utility: 2\nExplanation: short"));
    let records = collect(CriticTask::Utility, script, &[Instance::new(single("q")).with_response("r")]);
    let json = serde_json::to_value(&records[0]).unwrap();
    assert_eq!(json["task"], "utility");
    assert_eq!(json["label"], "[Utility:2]");
    assert!(json["conversation"]["turns"].is_array());
    assert_eq!(json["judge"], "judge");
}
