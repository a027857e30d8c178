use std::path::PathBuf;

use cuebot::domain::{Domain, DomainError};
use cuebot::protocol::{encode, encode_inbound, DecodeError, Decoder};
use cuebot::store::{episodes_from_json, episodes_to_json, kb_from_json, kb_to_json, StoreError};
use cuebot_core::episodic::EpisodicMemory;
use cuebot_core::session::{ErrorCode, Feedback, Inbound, Outbound, OutboundBody, Phase, YesNo};
use cuebot_core::skill::{induce_skill, KnowledgeBase};
use cuebot_core::world::PrimitiveAction;
use cuebot_core::Sym;

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn domain(name: &str) -> Domain {
    Domain::load(&data(&format!("domains/{name}.toml"))).unwrap()
}

#[test]
fn shipped_domains_load_and_round_trip() {
    for name in ["kitchen", "milk", "tea", "pour"] {
        let d = domain(name);
        let text = d.to_toml();
        let again = Domain::from_toml(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
        assert_eq!(again.world.facts(), d.world.facts(), "{name}");
        assert_eq!(again.world.registry().agents, d.world.registry().agents);
        assert_eq!(again.to_toml(), text, "{name} is not a fixed point");
        assert_eq!(again.human, d.human);
        assert_eq!(again.region, d.region);
    }
}

#[test]
fn pour_domain_enables_assistance() {
    let d = domain("pour");
    let cfg = d.session_config(3);
    let a = cfg.assist.expect("assist configured");
    assert_eq!(a.goals.entries.len(), 2);
    assert!((a.goals.entries[0].prior - 0.5).abs() < 1e-12);
    assert_eq!(a.region.len(), 13 * 9);
    assert_eq!(cfg.seed, 3);
    assert!(domain("kitchen").session_config(0).assist.is_none());
    assert_eq!(domain("tea").session_config(0).max_questions, 0);
}

const SMALL: &str = r#"
agents = ["human"]
facts = ["at(bread1, counter)"]
[[zones]]
id = "counter"
x = 0.0
y = 0.0
[[objects]]
id = "bread1"
type = "bread"
"#;

#[test]
fn explicit_type_tree_in_any_order() {
    let text = r#"
agents = ["human"]
facts = ["at(bun1, shelf)"]
[types]
bun = "food"
food = "item"
item = "thing"
[[zones]]
id = "shelf"
x = 0.5
y = 0.5
[[objects]]
id = "bun1"
type = "bun"
"#;
    let d = Domain::from_toml(text).unwrap();
    assert!(d.tree.is_a("bun", "item"));
    assert!(!d.tree.contains("toaster"));
}

#[test]
fn domain_errors() {
    assert!(Domain::from_toml(SMALL).is_ok());

    let dup = format!("{SMALL}[[objects]]\nid = \"bread1\"\ntype = \"bread\"\n");
    assert!(matches!(Domain::from_toml(&dup), Err(DomainError::World(_))));

    let orphan = format!("{SMALL}[types]\nbread = \"food\"\n");
    assert!(matches!(Domain::from_toml(&orphan), Err(DomainError::Tree(_))));

    let two_places = SMALL.replace(r#"facts = ["at(bread1, counter)"]"#, r#"facts = ["at(bread1, counter)", "holding(human, bread1)"]"#);
    assert!(matches!(Domain::from_toml(&two_places), Err(DomainError::World(_))));

    let unknown = SMALL.replace("type = \"bread\"", "type = \"spaceship\"");
    assert!(Domain::from_toml(&unknown).is_err());

    let typo = format!("colour = 3\n{SMALL}");
    assert!(matches!(Domain::from_toml(&typo), Err(DomainError::Parse(_))));

    let bad_goal = format!("{SMALL}[[goals]]\nname = \"g\"\ngoal = \"fly to the moon\"\n");
    assert!(matches!(Domain::from_toml(&bad_goal), Err(DomainError::Goal { .. })));

    let bad_priors = format!("{SMALL}[[goals]]\nname = \"a\"\ngoal = \"make toast\"\nprior = 0.9\n[[goals]]\nname = \"b\"\ngoal = \"toasted(bread1)\"\nprior = 0.3\n");
    assert!(matches!(Domain::from_toml(&bad_priors), Err(DomainError::Assist(_))));

    let stranger = format!("{SMALL}[human]\nagent = \"ghost\"\nseat = [0.0, 0.0]\nr_c = 0.4\nr_m = 1.0\nw_d = 1.0\nw_b = 1.0\n");
    assert!(matches!(Domain::from_toml(&stranger), Err(DomainError::Assist(_))));

    assert!(matches!(Domain::load(&data("domains/missing.toml")), Err(DomainError::Io { .. })));
}

fn heat_milk_kb(d: &Domain) -> (KnowledgeBase, EpisodicMemory) {
    let mut mem = EpisodicMemory::new();
    mem.begin(&d.world).unwrap();
    for a in [
        PrimitiveAction::open("human", "microwave1"),
        PrimitiveAction::pick("human", "cup1"),
        PrimitiveAction::place("human", "cup1", "microwave1"),
        PrimitiveAction::close("human", "microwave1"),
        PrimitiveAction::press("human", "microwave1"),
    ] {
        mem.record(&a).unwrap();
    }
    let ep = mem.end("heat milk").unwrap();
    let mut kb = KnowledgeBase::new(d.tree.clone());
    kb.insert(induce_skill(&ep, &d.tree).unwrap()).unwrap();
    (kb, mem)
}

#[test]
fn knowledge_base_and_episodes_round_trip() {
    let d = domain("milk");
    let (kb, mem) = heat_milk_kb(&d);
    let text = kb_to_json(&kb);
    let back = kb_from_json(&text, d.tree.clone()).unwrap();
    assert_eq!(back.render(), kb.render());
    assert_eq!(back.ground_all(&d.world), kb.ground_all(&d.world));

    let eps = episodes_to_json(mem.episodes());
    let back = episodes_from_json(&eps, &d.world).unwrap();
    assert_eq!(back.len(), 1);
    assert_eq!(back[0].events, mem.episodes()[0].events);
    assert_eq!(back[0].before.facts(), mem.episodes()[0].before.facts());
    assert_eq!(back[0].after.facts(), mem.episodes()[0].after.facts());
    assert!(back[0].replay().is_ok());

    let future = text.replacen("\"version\": 1", "\"version\": 9", 1);
    assert!(matches!(kb_from_json(&future, d.tree.clone()), Err(StoreError::Version(9))));
    assert!(matches!(kb_from_json("{", d.tree.clone()), Err(StoreError::Json(_))));
    // a schema over types the tree does not know is refused
    let alien = Domain::from_toml(
        "facts = [\"at(r, z)\"]\n[types]\nrock = \"thing\"\n[[zones]]\nid = \"z\"\nx = 0.0\ny = 0.0\n[[objects]]\nid = \"r\"\ntype = \"rock\"\n",
    )
    .unwrap();
    assert!(matches!(kb_from_json(&text, alien.tree.clone()), Err(StoreError::Skill(_))));
}

#[test]
fn decoder_requires_version_first() {
    let mut d = Decoder::new();
    assert!(matches!(d.decode(r#"{"type":"hello"}"#), Err(DecodeError::Version(_))));
    assert!(matches!(d.decode(r#"{"version":2,"type":"hello"}"#), Err(DecodeError::Version(_))));
    assert_eq!(d.decode(r#"{"version":1,"type":"hello"}"#).unwrap(), Inbound::Hello);
    assert_eq!(d.decode(r#"{"type":"tick"}"#).unwrap(), Inbound::Tick);
    assert_eq!(d.decode(r#"{"version":1,"type":"tick"}"#).unwrap(), Inbound::Tick);
    assert!(matches!(d.decode(r#"{"version":"1","type":"tick"}"#), Err(DecodeError::Version(_))));
    let e = d.decode("not json").unwrap_err();
    assert!(matches!(e, DecodeError::Json(_)));
    assert_eq!(e.code(), ErrorCode::ParseError);
    assert!(matches!(d.decode("[1]"), Err(DecodeError::Schema(_))));
    assert!(matches!(d.decode(r#"{"type":"dance"}"#), Err(DecodeError::Schema(_))));
    assert!(matches!(d.decode(r#"{"type":"answer","answer":"maybe"}"#), Err(DecodeError::Schema(_))));
    assert_eq!(DecodeError::Version("2".into()).code(), ErrorCode::VersionMismatch);
}

#[test]
fn inbound_messages_round_trip() {
    let msgs = [
        Inbound::Hello,
        Inbound::Gaze { object: Sym::new("cup1") },
        Inbound::HandAction {
            action: PrimitiveAction::place("human", "cup1", "microwave1"),
        },
        Inbound::Speech { text: "make toast".into() },
        Inbound::Answer { answer: YesNo::No },
        Inbound::PlanFeedback { feedback: Feedback::Reject { step: 2 } },
        Inbound::PlanFeedback { feedback: Feedback::Approve },
        Inbound::Tick,
    ];
    let mut d = Decoder::new();
    for (i, m) in msgs.iter().enumerate() {
        let line = encode_inbound(m, i == 0);
        assert_eq!(line.contains("\"version\""), i == 0);
        assert_eq!(&d.decode(&line).unwrap(), m, "{line}");
    }
    assert_eq!(
        encode_inbound(&msgs[2], false),
        r#"{"action":{"actor":"human","args":["cup1","microwave1"],"kind":"place"},"type":"hand_action"}"#
    );
}

#[test]
fn outbound_encoding() {
    let first = Outbound {
        seq: 1,
        phase: Phase::Idle,
        body: OutboundBody::Error {
            code: ErrorCode::UnknownObject,
            message: "no such object `x`".into(),
        },
    };
    let line = encode(&first);
    assert_eq!(
        line,
        r#"{"version":1,"seq":1,"phase":"idle","type":"error","code":"unknown_object","message":"no such object `x`"}"#
    );
    let later = Outbound { seq: 2, ..first };
    let line = encode(&later);
    assert!(!line.contains("version"));
    let back: Outbound = serde_json::from_str(&line).unwrap();
    assert_eq!(back, later);
}
