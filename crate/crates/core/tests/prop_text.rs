use std::collections::BTreeSet;
use std::sync::LazyLock;

use farmtalk::preprocess::{
    apply_term_remap, hyphenate_terms, normalize_numbers, preprocess_pipeline, remove_fillers, FillerList, GradeList, PhraseList,
    PreprocessConfig, RemapTable,
};
use farmtalk::segmentation::{default_markers, fine_segment, segment_by_markers, KeywordMap, MarkerTemplate};
use farmtalk::transcript::{parse_transcript, turn_window, SpeakerTurn, Transcript};
use proptest::prelude::*;

const WORDS: &[&str] = &[
    "Souths", "faring", "2", "40", "12", "hundred", "18", "46", "0", "two", "20-head", "um", "uh", "cereal", "rye", "barns",
    "free", "stall", "sows", "the", "and", "yes", "Uh,", "4", "4300", "twelve", "thousand", "barn.", "cows", "section",
];

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 0..12).prop_map(|w| w.join(" "))
}

fn transcript() -> impl Strategy<Value = Transcript> {
    prop::collection::vec((text(), 0u32..30, prop::bool::ANY), 1..8).prop_map(|turns| {
        let mut start = 0.0;
        let turns = turns
            .into_iter()
            .map(|(text, gap, s)| {
                start += f64::from(gap) * 0.5;
                SpeakerTurn::new(if s { "Speaker 1" } else { "Speaker 2" }, start, text)
            })
            .collect();
        Transcript { interview_id: "p".into(), domain_hint: None, turns }
    })
}

fn config() -> PreprocessConfig {
    PreprocessConfig {
        remap: RemapTable::parse("souths, sows, pork\nfaring, farrowing, pork\nfree stall, freestall\n", "t").unwrap(),
        phrases: PhraseList::new(["cereal rye"]).unwrap(),
        fillers: FillerList::new(["um", "uh"]),
        grades: GradeList::new(["18-46-0", "11-52-0"]).unwrap(),
    }
}

static MARKERS: LazyLock<Vec<MarkerTemplate>> = LazyLock::new(default_markers);
const KEYWORDS: [(&str, &str); 3] = [("barns", "barns"), ("sows", "herd"), ("cows", "herd")];
static KM: LazyLock<KeywordMap> = LazyLock::new(|| KeywordMap::from_pairs(KEYWORDS).unwrap());
static KM_FRESH: LazyLock<KeywordMap> =
    LazyLock::new(|| KeywordMap::from_pairs(KEYWORDS.into_iter().chain([("zucchini", "garden")])).unwrap());

fn texts(t: &Transcript) -> Vec<String> {
    t.turns.iter().map(|x| x.text.clone()).collect()
}

proptest! {
    #[test]
    fn jsonl_round_trip(t in transcript(), tag in prop::option::of(0usize..3)) {
        let mut t = t;
        if let Some(k) = tag {
            let turn = &mut t.turns[0];
            turn.text = format!("{}<affirmative>{}", &turn.text[..turn.text.len().min(k)], &turn.text[turn.text.len().min(k)..]);
            let (clean, tags) = farmtalk::transcript::lift_tags(&turn.text);
            turn.text = clean;
            turn.tags = tags;
        }
        let back = parse_transcript(t.to_jsonl().as_bytes(), "p", None).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(back.to_jsonl(), t.to_jsonl());
    }

    #[test]
    fn window_is_bounded(t in transcript(), c in 0usize..10, before in 0usize..4, after in 0usize..4) {
        match turn_window(&t, c, before, after) {
            Ok(w) => {
                prop_assert!(c < t.len());
                prop_assert!(w.len() <= before + after + 1);
                prop_assert!(w.iter().any(|x| std::ptr::eq(x, &t.turns[c])));
            }
            Err(_) => prop_assert!(c >= t.len()),
        }
    }

    #[test]
    fn each_step_is_idempotent(t in transcript()) {
        let cfg = config();
        let steps: [&dyn Fn(&Transcript) -> Transcript; 4] = [
            &|t| apply_term_remap(t, &cfg.remap).0,
            &|t| normalize_numbers(t, &cfg.grades).0,
            &|t| hyphenate_terms(t, &cfg.phrases).0,
            &|t| remove_fillers(t, &cfg.fillers).0,
        ];
        for step in steps {
            let once = step(&t);
            prop_assert_eq!(texts(&step(&once)), texts(&once));
        }
    }

    #[test]
    fn log_replay_and_metadata(t in transcript()) {
        let (out, log) = preprocess_pipeline(&t, &config());
        prop_assert_eq!(log.replay(&t), Some(texts(&out)));
        prop_assert_eq!(out.len(), t.len());
        for (a, b) in out.turns.iter().zip(&t.turns) {
            prop_assert_eq!(&a.speaker, &b.speaker);
            prop_assert_eq!(a.start, b.start);
        }
    }

    #[test]
    fn segments_partition_turns(t in transcript(), marker in prop::option::of(0usize..8)) {
        let mut t = t;
        if let Some(m) = marker.filter(|&m| m < t.len()) {
            t.turns[m].text = "section two is about dairy".into();
        }
        let km = &*KM;
        let mut next = 0;
        for seg in segment_by_markers(&t, &MARKERS) {
            prop_assert_eq!(seg.turn_range.start, next);
            let mut inner = seg.turn_range.start;
            for b in fine_segment(&seg, &t, km) {
                prop_assert_eq!(b.turn_range.start, inner);
                prop_assert!(b.turn_range.end > b.turn_range.start);
                inner = b.turn_range.end;
            }
            prop_assert_eq!(inner, seg.turn_range.end);
            next = seg.turn_range.end;
        }
        prop_assert_eq!(next, t.len());
    }

    #[test]
    fn fresh_keyword_in_one_turn_keeps_boundaries(t in transcript(), at in 0usize..8) {
        let mut t = t;
        let at = at % t.len();
        t.turns[at].text.push_str(" zucchini");
        let starts = |km: &KeywordMap| -> BTreeSet<usize> {
            segment_by_markers(&t, &MARKERS)
                .iter()
                .flat_map(|s| fine_segment(s, &t, km))
                .map(|b| b.turn_range.start)
                .collect()
        };
        let (before, after) = (starts(&KM), starts(&KM_FRESH));
        prop_assert!(before.is_subset(&after), "{:?} vs {:?}", before, after);
    }

    #[test]
    fn segmentation_is_deterministic(t in transcript()) {
        let run = || segment_by_markers(&t, &MARKERS).iter().map(|s| fine_segment(s, &t, &KM)).collect::<Vec<_>>();
        prop_assert_eq!(run(), run());
    }
}
