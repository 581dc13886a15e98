use multibot_core::demo;
use multibot_core::dialogue::{
    generate_corpus, interpret, normalize, on_status, resolve_addressee, to_jsonl, Addressee, AddressingMode,
    Corpus, DialogueContext, DialogueError, DialogueTurn, Disposition, DmOutput, RobotBinding, Slot, Speaker,
};
use multibot_core::sim::{RobotKind, RobotSpec};
use multibot_core::tbs::{make_status, ActionKind, Pose, StatusPhase, StatusTracker, Urgency};
use multibot_core::world::{LocationRef, WorldMap};

struct Fixture {
    map: WorldMap,
    corpus: Corpus,
    roster: Vec<RobotSpec>,
    ctx: DialogueContext,
    t: f64,
}

impl Fixture {
    fn new(mode: AddressingMode) -> Self {
        let roster = demo::config().robots;
        Self {
            map: demo::map(),
            corpus: demo::corpus(),
            ctx: DialogueContext::new(&roster, mode, 0.35),
            roster,
            t: 0.0,
        }
    }

    fn say(&mut self, text: &str) -> DmOutput {
        self.t += 1.0;
        interpret(&DialogueTurn::operator(text, self.t), &mut self.ctx, &self.corpus, &self.map, &self.roster)
    }
}

#[test]
fn shipped_corpus_is_regenerable() {
    let map = demo::map();
    let pairs = generate_corpus(&map, &demo::config().robots);
    assert_eq!(to_jsonl(&pairs), demo::CORPUS_JSONL);
}

#[test]
fn implicit_scout_binds_to_aerial() {
    let mut f = Fixture::new(AddressingMode::Implicit);
    let out = f.say("Scout route bravo");
    assert_eq!(out.disposition, Disposition::Executed);
    assert_eq!(out.tbs.len(), 1);
    let msg = &out.tbs[0];
    assert_eq!(msg.robot_id, "snapdragon");
    assert_eq!(msg.action, ActionKind::Scout);
    assert_eq!(msg.location, Some(LocationRef::route("bravo")));
}

#[test]
fn wake_then_instruction() {
    let mut f = Fixture::new(AddressingMode::Explicit);
    let out = f.say("Husky");
    assert_eq!(out.disposition, Disposition::WakeAck);
    assert!(out.tbs.is_empty());
    let out = f.say("go to the gate");
    assert_eq!(out.tbs.len(), 1);
    assert_eq!(out.tbs[0].robot_id, "husky");
    assert_eq!(out.tbs[0].action, ActionKind::Goto);
    assert_eq!(out.tbs[0].location, Some(LocationRef::waypoint("gate")));
    assert_eq!(out.tbs[0].msg_id, "tbs-0001");
}

#[test]
fn explicit_mode_without_wake_asks() {
    let mut f = Fixture::new(AddressingMode::Explicit);
    let out = f.say("go to the gate");
    assert_eq!(out.disposition, Disposition::Clarification);
    assert!(out.tbs.is_empty());
    assert!(out.reply_to_operator.contains("Which robot"));
    assert!(f.ctx.pending.as_ref().unwrap().missing.contains(&Slot::Robot));
    // Naming the robot completes the frame.
    let out = f.say("Husky");
    assert_eq!(out.disposition, Disposition::Executed);
    assert_eq!(out.tbs[0].robot_id, "husky");
}

#[test]
fn clarification_loop() {
    let mut f = Fixture::new(AddressingMode::Explicit);
    let out = f.say("Husky, go to");
    assert_eq!(out.disposition, Disposition::Clarification);
    assert!(out.tbs.is_empty());
    let frame = f.ctx.pending.clone().unwrap();
    assert_eq!(frame.missing.iter().copied().collect::<Vec<_>>(), vec![Slot::Destination]);
    let out = f.say("the gate");
    assert_eq!(out.disposition, Disposition::Executed);
    assert_eq!(out.tbs.len(), 1);
    assert_eq!(out.tbs[0].robot_id, "husky");
    assert!(f.ctx.pending.is_none());
}

#[test]
fn urgency_and_broadcast() {
    let mut f = Fixture::new(AddressingMode::Explicit);
    let out = f.say("Husky, go to the depot quickly");
    assert_eq!(out.tbs[0].modifiers.urgency, Urgency::Urgent);
    let out = f.say("both of you go to the market");
    assert_eq!(out.tbs.len(), 2);
    assert!(f.ctx.attended.is_none());
}

#[test]
fn follow_picks_leader() {
    let mut f = Fixture::new(AddressingMode::Explicit);
    let out = f.say("Snapdragon, follow Husky");
    assert_eq!(out.tbs.len(), 1);
    assert_eq!(out.tbs[0].robot_id, "snapdragon");
    assert_eq!(out.tbs[0].leader_id.as_deref(), Some("husky"));
    let mut f = Fixture::new(AddressingMode::Implicit);
    let out = f.say("follow husky");
    assert_eq!(out.tbs[0].robot_id, "snapdragon");
}

#[test]
fn incapable_robot_is_refused() {
    let mut f = Fixture::new(AddressingMode::Explicit);
    f.say("Husky");
    let out = f.say("take off");
    assert_eq!(out.disposition, Disposition::Clarification);
    assert!(out.tbs.is_empty());
    assert!(out.reply_to_operator.contains("Husky cannot"), "{}", out.reply_to_operator);
}

#[test]
fn unknown_name_prefix() {
    let f = Fixture::new(AddressingMode::Explicit);
    let toks = normalize("Rover, go to the gate");
    let pair = f.corpus.best(&toks).0;
    let err = resolve_addressee("Rover, go to the gate", &toks, pair, &f.ctx, &f.corpus, &f.roster).unwrap_err();
    assert_eq!(err, DialogueError::UnknownRobotName("Rover".into()));
    let mut f = f;
    let out = f.say("Rover, go to the gate");
    assert_eq!(out.disposition, Disposition::Clarification);
    assert!(out.reply_to_operator.contains("Rover"));
}

#[test]
fn resolve_wake_sets_target() {
    let f = Fixture::new(AddressingMode::Explicit);
    let toks = normalize("Snapdragon");
    let pair = f.corpus.best(&toks).0;
    assert_eq!(
        resolve_addressee("Snapdragon", &toks, pair, &f.ctx, &f.corpus, &f.roster).unwrap(),
        Addressee::Wake("snapdragon".into())
    );
}

#[test]
fn self_retrieval_over_corpus() {
    let f = Fixture::new(AddressingMode::Implicit);
    for pair in f.corpus.pairs() {
        let (best, score) = f.corpus.best(&normalize(&pair.utterance));
        assert_eq!(best.id, pair.id, "{}", pair.utterance);
        assert!((score - 1.0).abs() < 1e-9);
    }
}

#[test]
fn implicit_pairs_never_name_robots_and_bind_correctly() {
    let roster = demo::config().robots;
    for pair in demo::corpus().pairs() {
        let RobotBinding::Implicit(id) = &pair.robot_binding else { continue };
        let toks = normalize(&pair.utterance);
        assert!(roster.iter().all(|r| !toks.contains(&r.id)), "{}", pair.utterance);
        let mut f = Fixture::new(AddressingMode::Implicit);
        let out = f.say(&pair.utterance);
        assert!(out.tbs.iter().all(|m| &m.robot_id == id), "{}", pair.utterance);
    }
}

#[test]
fn off_topic_gets_recovery() {
    let mut f = Fixture::new(AddressingMode::Implicit);
    let out = f.say("what's your favorite color");
    assert_eq!(out.disposition, Disposition::OffTopic);
    assert!(out.tbs.is_empty());
    assert!(!out.reply_to_operator.is_empty());
}

#[test]
fn status_phrasing() {
    let mut f = Fixture::new(AddressingMode::Explicit);
    let out = f.say("Husky, go to the gate");
    let msg = out.tbs[0].clone();
    assert!(f.ctx.is_busy("husky"));
    let mut tracker = StatusTracker::new(&msg.msg_id, "husky");
    let pose = Pose::default();
    let accepted = make_status(&mut tracker, StatusPhase::Accepted, "", pose, 1.0).unwrap();
    assert!(on_status(&accepted, &mut f.ctx).is_none());
    make_status(&mut tracker, StatusPhase::Started, "", pose, 1.0).unwrap();
    let done = make_status(&mut tracker, StatusPhase::Completed, "", pose, 5.0).unwrap();
    let turn = on_status(&done, &mut f.ctx).unwrap();
    assert_eq!(turn.speaker, Speaker::Robot("husky".into()));
    assert!(turn.text.contains("gate"), "{}", turn.text);
    assert!(!f.ctx.is_busy("husky"));

    let out = f.say("Husky, go to the depot");
    let mut tracker = StatusTracker::new(&out.tbs[0].msg_id, "husky");
    make_status(&mut tracker, StatusPhase::Accepted, "", pose, 1.0).unwrap();
    make_status(&mut tracker, StatusPhase::Started, "", pose, 1.0).unwrap();
    let cut = make_status(&mut tracker, StatusPhase::Interrupted, "interrupted", pose, 2.0).unwrap();
    assert!(on_status(&cut, &mut f.ctx).unwrap().text.contains("interrupted"));
}

#[test]
fn new_instruction_abandons_frame() {
    let mut f = Fixture::new(AddressingMode::Explicit);
    f.say("Husky, go to");
    let out = f.say("Snapdragon, scout route alpha");
    assert_eq!(out.disposition, Disposition::Executed);
    assert!(out.reply_to_operator.contains("Dropping"));
    assert!(f.ctx.pending.is_none());
}

#[test]
fn ground_only_roster_still_generates() {
    let map = demo::map();
    let roster = vec![RobotSpec::new("husky", "Husky", RobotKind::Ground)];
    let corpus = Corpus::new(generate_corpus(&map, &roster)).unwrap();
    corpus.check_roster(&roster).unwrap();
}
