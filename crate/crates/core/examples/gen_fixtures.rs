//! Regenerates the synthetic interview corpus under `fixtures/`: three
//! transcripts, the gold records and the replay file for the LLM path.
//!
//! cargo run -p farmtalk --example gen_fixtures [-- <fixtures dir>]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use farmtalk::llm::pipeline::{block_text, topic_blocks};
use farmtalk::llm::schema::load_schemas;
use farmtalk::llm::ReplayRecord;
use farmtalk::preprocess::{preprocess_pipeline, FillerList, GradeList, PhraseList, PreprocessConfig, RemapTable};
use farmtalk::segmentation::{KeywordMap, MarkerTemplate};
use farmtalk::transcript::{Domain, SpeakerTurn, Transcript};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TARGET_WORDS: usize = 4700;
const Q: &str = "Interviewer";
const A: &str = "Farmer";

struct Topic {
    label: &'static str,
    turns: &'static [(&'static str, &'static str)],
}

struct Interview {
    id: &'static str,
    domain: Domain,
    seed: u64,
    marker: &'static str,
    topics: Vec<Topic>,
    /// schema name -> canned model response
    responses: Vec<(&'static str, &'static str)>,
    /// node_id, value, unit, variant_group, essential
    gold: Vec<(&'static str, &'static str, &'static str, &'static str, bool)>,
}

const FARMER_SMALL_TALK: &[&str] = &[
    "The weather has been pretty good this fall.",
    "We had a wet spring, so everything got a late start.",
    "My daughter just started college over in the city.",
    "The county fair was a lot of fun this summer.",
    "We drove down to see my sister last weekend.",
    "The roads out here get rough after a big storm.",
    "I try to get to church most Sundays.",
    "The grandkids love coming out to visit.",
    "We finally got the porch fixed up.",
    "The truck has been giving me trouble lately.",
    "My wife handles most of the bookkeeping.",
    "There's a good diner in town where we get breakfast.",
    "We've been on this place since my grandfather bought it.",
    "The neighbors are good people, we help each other out.",
    "I like to go fishing when things slow down.",
    "The kids all played ball in high school.",
    "The cold hung on forever last time around.",
    "We lost power for a while during that ice storm.",
    "I keep meaning to paint the shed.",
    "The dog follows me everywhere I go.",
    "We don't get into town as often as we used to.",
    "The internet out here is still pretty slow.",
    "My brother lives a few miles down the road.",
    "We usually take a short trip after harvest.",
    "I read the paper every morning with coffee.",
    "The local school is getting a new gym.",
    "Everything at the hardware store keeps going up.",
    "We had a big family reunion in July.",
    "The river was really high this summer.",
    "I've been trying to walk more in the evenings.",
    "Our pastor retired and we have a new fellow now.",
    "My knees aren't what they used to be.",
    "We like to listen to the ball game on the radio.",
    "There's always something that needs fixing.",
    "The sunsets out here are hard to beat.",
    "We put in a garden behind the house.",
    "My mother still makes the best pie around.",
    "It's quiet out here, and we like it that way.",
    "We go to the auction sometimes just to look around.",
    "The wind really picks up in the afternoon.",
];

const INTERVIEWER_SMALL_TALK: &[&str] = &[
    "That sounds nice.",
    "I can imagine.",
    "How long have you lived around here?",
    "Do you get out to the lake much?",
    "That must keep you busy.",
    "Tell me a little more about that.",
    "Oh, that's interesting.",
    "Right, I hear that a lot.",
    "Sure, that makes sense.",
    "How's the family doing?",
];

fn interviews() -> Vec<Interview> {
    vec![
        Interview {
            id: "pork_01",
            domain: Domain::Pork,
            seed: 11,
            marker: "Alright, section one is about pork.",
            topics: vec![
                Topic {
                    label: "barn_info",
                    turns: &[
                        (Q, "Let's start with the hog side. What's the capacity of those barns?"),
                        (A, "We have 4 4300 faring..."),
                        (Q, "Okay <affirmative>."),
                        (A, "And then 1200 nursery."),
                        (Q, "Got it. And the sow herd?"),
                        (A, "About 2000 Souths <affirmative>."),
                    ],
                },
                Topic { label: "labor", turns: &[(Q, "How many employees do you have?"), (A, "Three.")] },
                Topic {
                    label: "pig_inventory",
                    turns: &[(Q, "And so you're finishing how many total pigs a year?"), (A, "6,670.")],
                },
                Topic {
                    label: "manure",
                    turns: &[(Q, "How do you store the manure?"), (A, "Uh, it all goes into deep pits under the buildings.")],
                },
                Topic {
                    label: "feed",
                    turns: &[(Q, "Do you run your own feed mill?"), (A, "Yes, we grind everything right here.")],
                },
            ],
            responses: vec![
                ("BarnEvent", r#"[{"farrowing_capacity": 4300, "nursery_capacity": 1200, "finishing_capacity": 4, "sow_count": 2000}]"#),
                ("LaborEvent", r#"[{"employees": 3}]"#),
                ("TotalFinishingPigsEvent", r#"[{"total_finishing_pigs": "6,670"}]"#),
                ("ManureEvent", "```json\n[{\"manure_storage\": \"deep pits\"}]\n```"),
                ("FeedEvent", r#"[{"on_farm_feed_mill": "true"}]"#),
            ],
            gold: vec![
                ("barn_capacity", "4300", "farrowing", "", true),
                ("barn_capacity", "1200", "nursery", "", true),
                ("sow_inventory", "2000", "sows", "", true),
                ("employees", "3", "", "", false),
                ("finishing_pigs", "6670", "", "", true),
                ("manure_storage", "pits", "", "storage", true),
                ("manure_storage", "deep pits", "", "storage", true),
                ("feed_mill", "true", "", "", true),
            ],
        },
        Interview {
            id: "crop_01",
            domain: Domain::Crop,
            seed: 23,
            marker: "Okay, section one is about grain.",
            topics: vec![
                Topic {
                    label: "land",
                    turns: &[(Q, "What's your total acreage these days?"), (A, "We farm about 12 hundred acres.")],
                },
                Topic {
                    label: "crops",
                    turns: &[(Q, "What crops do you grow?"), (A, "Corn and soybeans mostly, and some winter wheat.")],
                },
                Topic {
                    label: "fertility",
                    turns: &[(Q, "What fertilizer do you put down?"), (A, "Um, mostly 18 46 0 in the spring.")],
                },
                Topic {
                    label: "yields",
                    turns: &[(Q, "What was your corn yield last season?"), (A, "About 210 bushels.")],
                },
                Topic {
                    label: "cover_crops",
                    turns: &[(Q, "Do you plant any cover crops?"), (A, "Yes, cereal rye after the beans.")],
                },
                Topic {
                    label: "rotation",
                    turns: &[
                        (Q, "How does the rotation work on the hay ground?"),
                        (A, "We keep alfalfa in for a few years and then it goes back to corn."),
                    ],
                },
            ],
            responses: vec![
                ("LandEvent", r#"[{"total_acres": 1200}]"#),
                ("CropEvent", r#"[{"crops_grown": ["corn", "soybeans", "wheat"]}]"#),
                ("FertilizerEvent", r#"[{"fertilizer_grade": "18-46-0"}]"#),
                ("YieldEvent", "Here is the extracted information:\n[{\"corn_yield\": 210}]"),
                ("CoverCropEvent", r#"[{"uses_cover_crops": true}]"#),
                // only "years" is shared with the block
                ("RotationEvent", r#"[{"rotation": "wheat every four years"}]"#),
            ],
            gold: vec![
                ("total_acres", "1200", "acres", "", true),
                ("crops_grown", "corn", "", "", true),
                ("crops_grown", "soybeans", "", "", true),
                ("crops_grown", "wheat", "", "wheat", true),
                ("crops_grown", "winter wheat", "", "wheat", true),
                ("fertilizer_grade", "18-46-0", "", "", false),
                ("corn_yield", "210", "bushels", "", true),
                ("cover_crops", "true", "", "", true),
            ],
        },
        Interview {
            id: "dairy_01",
            domain: Domain::Dairy,
            seed: 37,
            marker: "So section one is about dairy.",
            topics: vec![
                Topic { label: "herd", turns: &[(Q, "How many cows are you milking right now?"), (A, "About 850 head.")] },
                Topic {
                    label: "production",
                    turns: &[(Q, "What are you shipping per cow per day?"), (A, "Around 85 pounds.")],
                },
                Topic {
                    label: "components",
                    turns: &[(Q, "How are your components running?"), (A, "Protein is about 3 and butterfat runs 4.")],
                },
                Topic {
                    label: "milking",
                    turns: &[(Q, "Tell me about the milking parlor."), (A, "It's a double eight parlor, we milk twice a day.")],
                },
                Topic {
                    label: "grazing",
                    turns: &[(Q, "Is there any grazing for the herd?"), (A, "No, they stay in the free stall barn all year.")],
                },
            ],
            responses: vec![
                ("HerdEvent", r#"[{"milking_cows": 850}]"#),
                ("MilkEvent", r#"[{"milk_per_cow": 85}]"#),
                ("ComponentEvent", r#"[{"protein_percent": 3, "butterfat_percent": 4}]"#),
                // the second value shares no word with the block
                ("MilkingEvent", r#"[{"milking_system": "parlor"}, {"milking_system": "rotary carousel"}]"#),
                ("GrazingEvent", r#"[{"grazing": false}]"#),
            ],
            gold: vec![
                ("milking_cows", "850", "head", "", true),
                ("milk_per_cow", "85", "pounds", "", true),
                ("protein_percent", "3", "percent", "", true),
                ("butterfat_percent", "4", "percent", "", true),
                ("milking_system", "parlor", "", "", true),
                ("grazing", "false", "", "", true),
            ],
        },
    ]
}

/// Words the small talk must never contain, so it produces no fragments
/// and no topic boundaries.
fn forbidden_words(dir: &Path) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = [
        "capacity", "number", "usage", "production", "price", "cost", "consumption", "date", "yes", "yeah", "yep", "no",
        "nope", "section", "percent", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    ]
    .into_iter()
    .map(str::to_string)
    .collect();
    let mut add_words = |s: &str| {
        out.extend(s.split(|c: char| !c.is_alphanumeric() && c != '-').filter(|w| !w.is_empty()).map(str::to_lowercase));
    };
    for entry in fs::read_dir(dir.join("kb")).expect("kb dir") {
        let text = fs::read_to_string(entry.expect("kb entry").path()).expect("kb file");
        for line in text.lines().filter(|l| !l.starts_with('#')) {
            if let Some((_, rest)) = line.split_once(',') {
                add_words(rest.split(',').next().unwrap_or(""));
            }
        }
    }
    let kw = fs::read_to_string(dir.join("keywords.csv")).expect("keywords");
    for line in kw.lines().filter(|l| !l.starts_with('#')) {
        add_words(line.split(',').next().unwrap_or(""));
    }
    out
}

fn check_small_talk(forbidden: &BTreeSet<String>) {
    for s in FARMER_SMALL_TALK.iter().chain(INTERVIEWER_SMALL_TALK) {
        assert!(!s.chars().any(|c| c.is_ascii_digit()), "digit in small talk: {s}");
        for w in s.split(|c: char| !c.is_alphanumeric() && c != '\'').filter(|w| !w.is_empty()) {
            let w = w.to_lowercase();
            let singular = w.strip_suffix('s').unwrap_or(&w).to_string();
            assert!(!forbidden.contains(&w) && !forbidden.contains(&singular), "`{w}` in small talk: {s}");
        }
    }
}

fn words(s: &str) -> usize {
    s.split_whitespace().count()
}

fn small_talk_turns(rng: &mut ChaCha8Rng, budget: usize) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    let mut used = 0;
    let mut farmer = true;
    while used < budget {
        let text = if farmer {
            let n = rng.gen_range(2..=4);
            let mut parts: Vec<&str> = FARMER_SMALL_TALK.choose_multiple(rng, n).copied().collect();
            parts.shuffle(rng);
            let mut t = parts.join(" ");
            if rng.gen_bool(0.15) {
                t = format!("Um, {}{}", t[..1].to_lowercase(), &t[1..]);
            }
            t
        } else {
            INTERVIEWER_SMALL_TALK.choose(rng).expect("non-empty").to_string()
        };
        used += words(&text);
        out.push((if farmer { A } else { Q }, text));
        farmer = !farmer;
    }
    out
}

fn build_transcript(iv: &Interview) -> Transcript {
    let mut rng = ChaCha8Rng::seed_from_u64(iv.seed);
    let fixed: usize = words(iv.marker) + iv.topics.iter().flat_map(|t| t.turns).map(|(_, s)| words(s)).sum::<usize>();
    let mut budget = TARGET_WORDS - fixed;
    let mut gaps = iv.topics.len() + 1;
    // each gap takes an equal share of what is left, so overshoot does not accumulate
    let mut gap = |rng: &mut ChaCha8Rng| {
        let turns = small_talk_turns(rng, budget / gaps);
        budget = budget.saturating_sub(turns.iter().map(|(_, t)| words(t)).sum());
        gaps -= 1;
        turns
    };
    let mut turns: Vec<(&str, String)> = vec![(Q, iv.marker.to_string())];
    turns.extend(gap(&mut rng));
    for t in &iv.topics {
        turns.extend(t.turns.iter().map(|(s, x)| (*s, x.to_string())));
        turns.extend(gap(&mut rng));
    }
    let mut start = 0.0;
    let turns = turns
        .into_iter()
        .map(|(speaker, text)| {
            let t = SpeakerTurn::new(speaker, start, text.as_str());
            start = ((start + 0.4 * words(&text) as f64 + 1.0) * 10.0).round() / 10.0;
            // reparse to lift inline tags the same way transcript files are read
            let (clean, tags) = farmtalk::transcript::lift_tags(&t.text);
            SpeakerTurn { text: clean, tags, ..t }
        })
        .collect();
    Transcript { interview_id: iv.id.to_string(), domain_hint: Some(iv.domain), turns }
}

fn main() {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    check_small_talk(&forbidden_words(&dir));

    let cfg = PreprocessConfig {
        remap: RemapTable::load(&dir.join("remap.csv")).expect("remap"),
        phrases: PhraseList::load(&dir.join("phrases.txt")).expect("phrases"),
        fillers: FillerList::load(&dir.join("fillers.txt")).expect("fillers"),
        grades: GradeList::load(&dir.join("grades.txt")).expect("grades"),
    };
    let markers = MarkerTemplate::load_all(&dir.join("markers.txt")).expect("markers");
    let keywords = KeywordMap::load(&dir.join("keywords.csv")).expect("keywords");
    let schemas = load_schemas(&dir.join("llm/schemas.toml")).expect("schemas");

    let mut gold = String::from("interview_id,node_id,value,unit,variant_group,essential\n");
    let mut replay = Vec::new();
    fs::create_dir_all(dir.join("transcripts")).expect("transcripts dir");
    for iv in interviews() {
        let t = build_transcript(&iv);
        let wc = t.word_count();
        assert!(wc.abs_diff(TARGET_WORDS) <= 40, "{}: {wc} words", iv.id);
        fs::write(dir.join(format!("transcripts/{}.jsonl", iv.id)), t.to_jsonl()).expect("write transcript");

        let (pre, _) = preprocess_pipeline(&t, &cfg);
        let blocks = topic_blocks(&pre, &markers, &keywords);
        let labels: Vec<&str> = blocks.iter().map(|(_, b)| b.topic_label.as_str()).collect();
        let expected: Vec<&str> = std::iter::once("preamble").chain(iv.topics.iter().map(|t| t.label)).collect();
        assert_eq!(labels, expected, "{}: topic blocks", iv.id);
        assert!(blocks.iter().all(|(d, _)| *d == iv.domain), "{}: domain segments", iv.id);

        let responses: BTreeMap<&str, &str> = iv.responses.iter().copied().collect();
        for (domain, block) in &blocks {
            let text = block_text(&pre, block);
            for s in schemas.iter().filter(|s| s.applies_to(&block.topic_label, *domain)) {
                let response = responses.get(s.name.as_str()).copied().unwrap_or("[]");
                replay.push(ReplayRecord::new(&s.name, &text, response));
            }
        }
        for (node, value, unit, group, essential) in &iv.gold {
            gold.push_str(&format!("{},{node},{value},{unit},{group},{essential}\n", iv.id));
        }
        println!("{}: {wc} words, {} turns, {} blocks", iv.id, t.turns.len(), blocks.len());
    }
    let lines: String = replay.iter().map(|r| serde_json::to_string(r).expect("record") + "\n").collect();
    fs::write(dir.join("llm/replay.jsonl"), lines).expect("write replay");
    fs::write(dir.join("gold.csv"), gold).expect("write gold");
    println!("{} replay records", replay.len());
}
