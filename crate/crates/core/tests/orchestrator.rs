use multibot_core::dialogue::{AddressingMode, Speaker};
use multibot_core::orchestrator::{
    compute_metrics, parse_log, parse_script, replay, run_headless, strip_wall_time, to_jsonl, Command, DmMode,
    Frame, LogKind, LogRecord, OrchestratorError, Outbound, Session, SessionConfig,
};
use multibot_core::tbs::{decode, ActionKind, StatusPhase, TbsMessage};
use multibot_core::world::LocationRef;

const WAKE_THEN_GO: &str = r#"{"t": 0.0, "say": "Husky"}
{"t": 1.0, "say": "go to the gate"}
"#;

const WIZARD_GO: &str = r#"{"t": 0.0, "wizard": {"reply": "Husky here. Go ahead."}}
{"t": 1.0, "wizard": {"reply": "Husky is heading to the gate.", "tbs": {"id": "tbs-0001", "robot": "husky", "action": "GOTO", "loc": {"kind": "waypoint", "name": "gate"}}}}
"#;

fn demo() -> SessionConfig {
    SessionConfig::demo()
}

fn records_of(log: &[LogRecord], kind: LogKind) -> Vec<&LogRecord> {
    log.iter().filter(|r| r.kind == kind).collect()
}

#[test]
fn headless_goto_completes() {
    let (log, m) = run_headless(demo(), &parse_script(WAKE_THEN_GO).unwrap()).unwrap();
    assert_eq!(log[0].kind, LogKind::Config);
    assert_eq!(m.tasks_issued, 1);
    assert_eq!(m.completed, 1);
    assert_eq!(m.operator_turns, 2);
    assert_eq!(m.coverage, 1.0);
    assert!(!m.timed_out);
    let task = &m.tasks[0];
    assert_eq!(task.robot, "husky");
    assert_eq!(task.outcome, Some(StatusPhase::Completed));
    assert!(task.distance_to_goal.unwrap() <= 0.5);
    // 40 m at 1 m/s.
    let t = task.completion_time.unwrap();
    assert!((t - 40.0).abs() < 1.0, "{t}");
}

#[test]
fn headless_is_deterministic() {
    let script = parse_script(WAKE_THEN_GO).unwrap();
    let (a, _) = run_headless(demo(), &script).unwrap();
    let (b, _) = run_headless(demo(), &script).unwrap();
    assert_eq!(to_jsonl(&strip_wall_time(&a)), to_jsonl(&strip_wall_time(&b)));
}

#[test]
fn empty_script_logs_only_config() {
    let (log, m) = run_headless(demo(), &[]).unwrap();
    assert_eq!(log.len(), 1);
    assert!(!m.coverage_defined);
    assert_eq!(m.coverage, 1.0);
}

#[test]
fn log_round_trip_and_version_check() {
    let (log, m) = run_headless(demo(), &parse_script(WAKE_THEN_GO).unwrap()).unwrap();
    let text = to_jsonl(&log);
    let parsed = parse_log(&text).unwrap();
    assert_eq!(parsed, log);
    assert_eq!(compute_metrics(&parsed).unwrap(), m);
    let bumped = text.replacen("\"version\":1", "\"version\":7", 1);
    assert_eq!(parse_log(&bumped).unwrap_err(), OrchestratorError::VersionMismatch { found: 7 });
    assert!(matches!(parse_log("{not json}"), Err(OrchestratorError::MalformedLog(_))));
    let headless = text.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert!(matches!(parse_log(&headless), Err(OrchestratorError::MalformedLog(_))));
}

#[test]
fn wizard_script_matches_auto_dm() {
    let (auto, _) = run_headless(demo(), &parse_script(WAKE_THEN_GO).unwrap()).unwrap();
    let (wiz, m) = run_headless(demo().with_dm_mode(DmMode::Wizard), &parse_script(WIZARD_GO).unwrap()).unwrap();
    assert_eq!(m.completed, 1);
    assert_eq!(m.tasks[0].source, "wizard");
    let lines = |log: &[LogRecord], kind| records_of(log, kind).iter().map(|r| (r.sim_time, r.payload["line"].clone())).collect::<Vec<_>>();
    assert_eq!(lines(&auto, LogKind::Status), lines(&wiz, LogKind::Status));
    assert_eq!(lines(&auto, LogKind::Tbs), lines(&wiz, LogKind::Tbs));
    let events = |log: &[LogRecord]| records_of(log, LogKind::Event).iter().map(|r| r.payload.clone()).collect::<Vec<_>>();
    assert_eq!(events(&auto), events(&wiz));
}

#[test]
fn script_validation() {
    assert!(matches!(
        parse_script("{\"t\":2,\"say\":\"a\"}\n{\"t\":1,\"say\":\"b\"}"),
        Err(OrchestratorError::Script(_))
    ));
    assert!(parse_script("{\"t\":1}").is_err());
    assert!(parse_script("{\"t\":1,\"say\":\"a\",\"extra\":1}").is_err());
    let wiz = parse_script(WIZARD_GO).unwrap();
    assert!(matches!(run_headless(demo(), &wiz), Err(OrchestratorError::Config(_))));
}

#[test]
fn timeout_is_logged() {
    let mut config = demo();
    config.scenario.timeout = 5.0;
    let script = parse_script(r#"{"t": 0, "say": "Husky, go to the north gate"}"#).unwrap();
    let (log, m) = run_headless(config, &script).unwrap();
    assert!(m.timed_out);
    assert_eq!(m.tasks[0].outcome, None);
    assert_eq!(log.last().unwrap().payload["kind"], "timeout");
}

#[test]
fn wizard_mode_requires_a_wizard() {
    let mut s = Session::new("s", demo()).unwrap();
    assert_eq!(s.set_dm_mode(DmMode::Wizard), Err(OrchestratorError::NoWizardConnected));
    assert_eq!(s.wizard_submit("hi", None), Err(OrchestratorError::NotInWizardMode));
    s.attach_wizard(true);
    s.set_dm_mode(DmMode::Wizard).unwrap();
    let out = s.say("Husky, go to the gate");
    assert!(matches!(&out[1], Outbound::WizardInbox(t) if t.speaker == Speaker::Operator));
    assert!(s.sim().all_idle());

    // A bad command is refused before the reply reaches the operator.
    let bad = TbsMessage::new("w1", 0.0, "husky", ActionKind::Takeoff);
    let before = s.log().len();
    assert!(matches!(s.wizard_submit("Taking off", Some(bad)), Err(OrchestratorError::Rejected(_))));
    assert_eq!(s.log().len(), before);

    let good = TbsMessage::new("w1", 0.0, "husky", ActionKind::Goto).with_location(LocationRef::waypoint("gate"));
    let out = s.wizard_submit("On my way", Some(good.clone())).unwrap();
    assert!(matches!(&out[0], Outbound::Chat(t) if t.speaker == Speaker::Dm));
    assert!(!s.sim().all_idle());
    assert!(matches!(s.wizard_submit("", Some(good)), Err(OrchestratorError::Rejected(_))));

    // Losing the wizard falls back to the auto-DM.
    s.attach_wizard(false);
    assert_eq!(s.dm_mode(), DmMode::Auto);
}

#[test]
fn queued_commands_apply_in_order() {
    let mut config = demo();
    config.addressing = AddressingMode::Implicit;
    let mut s = Session::new("q", config).unwrap();
    s.enqueue(Command::Say("Husky".into()));
    s.enqueue(Command::Say("go to the depot".into()));
    s.enqueue(Command::Wizard { reply: "x".into(), tbs: None });
    let out = s.tick();
    assert!(out.iter().any(|o| matches!(o, Outbound::WizardError(_))));
    let tbs: Vec<_> = records_of(s.log(), LogKind::Tbs)
        .iter()
        .map(|r| decode(r.payload["line"].as_str().unwrap()).unwrap())
        .collect();
    assert_eq!(tbs.len(), 1);
    assert_eq!(tbs[0].location, Some(LocationRef::waypoint("depot")));
    assert!(s.log().iter().any(|r| r.payload["kind"] == "wizard_rejected"));
}

#[test]
fn replay_reconstructs_frames() {
    let (log, _) = run_headless(demo(), &parse_script(WAKE_THEN_GO).unwrap()).unwrap();
    let frames = replay(&log).unwrap();
    let chats = frames.iter().filter(|f| matches!(f, Frame::Chat(_))).count();
    assert_eq!(chats, records_of(&log, LogKind::Turn).len());
    let Some(Frame::State(last)) = frames.iter().rev().find(|f| matches!(f, Frame::State(_))) else {
        panic!("no state frames")
    };
    let husky = last.robots.iter().find(|r| r.id == "husky").unwrap();
    assert!((husky.x - 40.0).abs() <= 0.5 && husky.y.abs() <= 0.5);
    assert!(!husky.busy);
}

#[test]
fn stealth_status_is_chat_only() {
    let mut s = Session::new("st", demo()).unwrap();
    s.attach_wizard(true);
    s.set_dm_mode(DmMode::Wizard).unwrap();
    let mut msg = TbsMessage::new("w1", 0.0, "husky", ActionKind::Goto).with_location(LocationRef::waypoint("gate"));
    msg.modifiers.stealth = true;
    s.wizard_submit("", Some(msg)).unwrap();
    let mut robot_turns = Vec::new();
    for _ in 0..600 {
        for o in s.tick() {
            if let Outbound::Chat(t) = o {
                if matches!(t.speaker, Speaker::Robot(_)) {
                    robot_turns.push(t);
                }
            }
        }
    }
    assert!(!robot_turns.is_empty());
    assert!(robot_turns.iter().all(|t| t.chat_only));
}
