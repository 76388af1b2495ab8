//! Acceptance gate. Runs every criterion, prints one line each and exits
//! non-zero if any gating criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coursekg::config::PipelineConfig;
use coursekg::corpus::load_corpus;
use coursekg::evalkit::{
    eval_entities, eval_segments, eval_slots, evaluate, load_gold, Counts, GoldDocument, GoldMention, GoldSegment,
    GoldSlot, Partition, Setting, Task,
};
use coursekg::kg::{count_statements, parse, serialize, Iri, Namespace, RdfFormat, Triple, SKOS};
use coursekg::ontology::{build_profile, load_ontology, AmbiguityClass, EntityRecord, OntologyStore, SlotSchema};
use coursekg::pipeline::{run, RunSettings};
use coursekg::recognizer::{export_silver, import_external};
use coursekg::segmenter::{extract_text, segment_document};
use coursekg::slotfill::{route, ProviderRecord};
use coursekg::{ElProfile, EntityType, Execution, HtmlDocument, Linker, LinkerWeights, SegmentType, SlotName, Span};

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    check(elapsed < limit, format!("{detail}; {:.2?} (limit {limit:?})", elapsed))
}

fn sample_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample")
}

fn sample_profile() -> ElProfile {
    let store = load_ontology(&[sample_dir().join("ontology.tsv")]).expect("sample ontology");
    build_profile(&store).expect("sample profile")
}

// ---------------------------------------------------------------------------
// slot routing

/// Valid (segment, type) pairs, typed in from the slot table.
fn slot_table() -> BTreeMap<SegmentType, (SlotName, Vec<EntityType>)> {
    use EntityType::*;
    BTreeMap::from([
        (
            SegmentType::TargetGroup,
            (SlotName::TargetGroup, vec![Topic, Occupation, Degree, Education, Industry, Position]),
        ),
        (SegmentType::Prerequisite, (SlotName::Prerequisite, vec![Topic, Skill, Occupation, Position, Education])),
        (SegmentType::LearningObjective, (SlotName::LearningObjective, vec![Topic, Skill, Occupation])),
        (SegmentType::CourseContent, (SlotName::CourseContent, vec![Topic, Skill])),
        (SegmentType::CertificatesDegree, (SlotName::Certificates, vec![Degree, Education])),
    ])
}

fn slot_routing() -> Outcome {
    let start = Instant::now();
    let table = slot_table();
    let schema = SlotSchema::default();
    let mut ok = 0;
    let mut bad = Vec::new();
    for seg in SegmentType::ALL {
        for etype in EntityType::ALL {
            let expected = match table.get(&seg) {
                Some((slot, types)) if types.contains(&etype) => *slot,
                _ => SlotName::Related,
            };
            let got = route(seg, etype, &schema);
            if got == expected {
                ok += 1;
            } else {
                bad.push(format!("{seg}/{etype}: {got} != {expected}"));
            }
        }
    }
    let total = SegmentType::ALL.len() * EntityType::ALL.len();
    if !bad.is_empty() {
        return Err(format!("{ok}/{total} cases; {}", bad.join(", ")));
    }
    within(start.elapsed(), Duration::from_secs(1), format!("{ok}/{total} cases"))
}

// ---------------------------------------------------------------------------
// same entity, two segments

fn two_segment_scenario() -> Outcome {
    let start = Instant::now();
    let store = OntologyStore::from_records(vec![
        EntityRecord::new("edu:prog", EntityType::Topic, "Programmierung"),
        EntityRecord::new("edu:sae", EntityType::School, "SAE Institute"),
    ])
    .map_err(|e| e.to_string())?;
    let profile = build_profile(&store).map_err(|e| e.to_string())?;
    let mut settings = RunSettings::default();
    settings.providers.insert(
        "sae".into(),
        ProviderRecord { school: Some("edu:sae".into()), base_iri: Some("https://sae.edu".into()) },
    );
    let doc = HtmlDocument {
        id: "c01".into(),
        provider_id: "sae".into(),
        url: "sae/c01.html".into(),
        html: "<h1>Webdesign</h1><h2>Lehrinhalte</h2><p>Programmierung</p>\
               <h2>Voraussetzungen</h2><p>Programmierung</p>"
            .into(),
    };
    let out = run(&[doc], &profile, &settings).map_err(|e| e.to_string())?;
    let ns = Namespace::default();
    let prog = ns.entity_iri("edu:prog").unwrap();
    let about_prog: Vec<&Triple> = out.triples.iter().filter(|t| t.object == prog).collect();
    let pred = |slot| about_prog.iter().filter(|t| t.predicate == ns.predicate(slot)).count();
    let (cc, pre) = (pred(SlotName::CourseContent), pred(SlotName::Prerequisite));
    let ok = cc == 1 && pre == 1 && about_prog.len() == 2;
    let detail = format!("edu:prog: course_content={cc}, prerequisite={pre}, total={}", about_prog.len());
    if !ok {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(1), detail)
}

// ---------------------------------------------------------------------------
// graph snippet round trip

fn snippet_round_trip() -> Outcome {
    let ns = Namespace::default();
    let subject = Iri::parse("https://sae.edu#c01").unwrap();
    let edu = |local: &str| ns.entity_iri(&format!("edu:{local}")).unwrap();
    let statements = [
        (ns.predicate(SlotName::Prerequisite), "matura"),
        (ns.predicate(SlotName::Prerequisite), "student"),
        (ns.predicate(SlotName::CourseContent), "Design"),
        (ns.predicate(SlotName::CourseContent), "Podcasting"),
        (Iri::parse(&format!("{SKOS}related")).unwrap(), "Web_Design"),
        (Iri::parse(&format!("{SKOS}related")).unwrap(), "Publishing"),
    ];
    let triples: BTreeSet<Triple> = statements
        .iter()
        .map(|(p, o)| Triple { subject: subject.clone(), predicate: p.clone(), object: edu(o) })
        .collect();
    let ttl = serialize(&triples, RdfFormat::Turtle, &ns);
    let back = parse(&ttl, RdfFormat::Turtle).map_err(|e| e.to_string())?;
    let counts = count_statements(&back, &ns);
    let nonzero: BTreeMap<&str, usize> =
        counts.by_predicate.iter().filter(|(_, n)| **n > 0).map(|(k, n)| (k.as_str(), *n)).collect();
    let expected = BTreeMap::from([("course_content", 2), ("prerequisite", 2), ("related", 2)]);
    check(
        back == triples && back.len() == 6 && nonzero == expected,
        format!("{} triples parsed back, counts {nonzero:?}", back.len()),
    )
}

// ---------------------------------------------------------------------------
// metric oracle

const IDS: [Option<&str>; 6] = [Some("edu:a"), Some("edu:b"), Some("nil:1"), Some("nil:2"), Some("nil:x"), None];
const TYPES: [EntityType; 3] = [EntityType::Skill, EntityType::Topic, EntityType::Degree];
const SEG_TYPES: [SegmentType; 3] = [SegmentType::CourseContent, SegmentType::Prerequisite, SegmentType::TargetGroup];
const SLOTS: [SlotName; 3] = [SlotName::CourseContent, SlotName::Prerequisite, SlotName::Related];

struct Instance {
    text: String,
    words: Vec<Span>,
    pred: GoldDocument,
    gold: GoldDocument,
}

fn random_span(rng: &mut ChaCha8Rng, len: usize) -> Span {
    let a = rng.random_range(0..len);
    let b = rng.random_range(a + 1..=len.min(a + 12));
    Span::new(a, b)
}

/// Non-overlapping segments over word boundaries.
fn random_segments(rng: &mut ChaCha8Rng, words: &[Span]) -> Vec<GoldSegment> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < words.len() && out.len() < 10 {
        let skip = rng.random_range(0..3);
        let take = rng.random_range(1..4);
        let first = i + skip;
        let last = (first + take).min(words.len());
        if first >= last {
            break;
        }
        let span = Span::new(words[first].start, words[last - 1].end);
        out.push(GoldSegment { span, seg_type: *SEG_TYPES.choose(rng).unwrap() });
        i = last;
    }
    out
}

fn random_mentions(rng: &mut ChaCha8Rng, text: &str) -> Vec<GoldMention> {
    (0..rng.random_range(0..=10))
        .map(|_| {
            let span = random_span(rng, text.len());
            GoldMention {
                span,
                surface: text[span.start..span.end].to_string(),
                etype: *TYPES.choose(rng).unwrap(),
                entity_id: IDS.choose(rng).unwrap().map(str::to_string),
            }
        })
        .collect()
}

fn random_slots(rng: &mut ChaCha8Rng, mentions: &[GoldMention]) -> Vec<GoldSlot> {
    (0..rng.random_range(0..=10))
        .map(|_| {
            let from = if mentions.is_empty() || rng.random_bool(0.3) { None } else { mentions.choose(rng) };
            let entity_id = match from.and_then(|m| m.entity_id.clone()) {
                Some(id) if rng.random_bool(0.7) => id,
                _ => IDS[rng.random_range(0..5)].unwrap().to_string(),
            };
            GoldSlot { slot: *SLOTS.choose(rng).unwrap(), entity_id, span: from.map(|m| m.span) }
        })
        .collect()
}

fn instance(rng: &mut ChaCha8Rng) -> Instance {
    let n_words = rng.random_range(1..=20);
    let mut text = String::new();
    let mut words = Vec::new();
    for i in 0..n_words {
        if i > 0 {
            text.push(if rng.random_bool(0.2) { '\n' } else { ' ' });
        }
        let start = text.len();
        for _ in 0..rng.random_range(1..=6) {
            text.push(rng.random_range(b'a'..=b'z') as char);
        }
        words.push(Span::new(start, text.len()));
    }
    let mut gold = GoldDocument::new("d", &text);
    gold.segments = random_segments(rng, &words);
    gold.mentions = random_mentions(rng, &text);
    gold.slots = random_slots(rng, &gold.mentions);
    let mut pred = GoldDocument::new("d", &text);
    pred.segments = random_segments(rng, &words);
    pred.mentions = random_mentions(rng, &text);
    // reuse some gold mentions so exact matches and NIL classes occur
    for m in &gold.mentions {
        if rng.random_bool(0.4) {
            let mut m = m.clone();
            if rng.random_bool(0.2) {
                m.etype = *TYPES.choose(rng).unwrap();
            }
            if rng.random_bool(0.2) {
                m.entity_id = IDS.choose(rng).unwrap().map(str::to_string);
            }
            pred.mentions.push(m);
        }
    }
    pred.slots = random_slots(rng, &pred.mentions);
    for s in &gold.slots {
        if rng.random_bool(0.3) {
            pred.slots.push(s.clone());
        }
    }
    Instance { text, words, pred, gold }
}

fn oracle_segments(inst: &Instance, typed: bool) -> Counts {
    let owner = |segs: &[GoldSegment], w: Span| {
        segs.iter().filter(|s| s.span.start <= w.start && w.end <= s.span.end).map(|s| s.seg_type).next()
    };
    let mut c = Counts::default();
    for &w in &inst.words {
        let p = owner(&inst.pred.segments, w);
        let g = owner(&inst.gold.segments, w);
        let hit = p.is_some() && g.is_some() && (!typed || p == g);
        c.tp += hit as usize;
        c.fp += (p.is_some() && !hit) as usize;
        c.fn_ += (g.is_some() && !hit) as usize;
    }
    c
}

fn oracle_nil(id: &Option<String>) -> bool {
    match id {
        None => true,
        Some(id) => id.starts_with("nil:"),
    }
}

type PairKey = (i64, bool, i64, i64, i64, i64);

/// Exhaustive re-scan for the best remaining pair until none is left.
fn oracle_pairs(pred: &[GoldMention], gold: &[GoldMention], setting: Setting) -> Vec<(usize, usize)> {
    let mut used_p = BTreeSet::new();
    let mut used_g = BTreeSet::new();
    let mut pairs = Vec::new();
    loop {
        let mut best: Option<(PairKey, usize, usize)> = None;
        for (i, p) in pred.iter().enumerate() {
            for (j, g) in gold.iter().enumerate() {
                if used_p.contains(&i) || used_g.contains(&j) {
                    continue;
                }
                let (a, b) = (p.span, g.span);
                let ov = a.end.min(b.end) as i64 - a.start.max(b.start) as i64;
                let exact = a == b;
                let ok = exact || (setting == Setting::Relaxed && ov > 0);
                if !ok {
                    continue;
                }
                // larger is better
                let key = (ov.max(0), exact, -(a.start as i64), -(b.start as i64), -(i as i64), -(j as i64));
                if best.as_ref().is_none_or(|(k, _, _)| key > *k) {
                    best = Some((key, i, j));
                }
            }
        }
        match best {
            Some((_, i, j)) => {
                used_p.insert(i);
                used_g.insert(j);
                pairs.push((i, j));
            }
            None => return pairs,
        }
    }
}

fn oracle_entities(inst: &Instance, setting: Setting) -> [Counts; 3] {
    let (pred, gold) = (&inst.pred.mentions, &inst.gold.mentions);
    let pairs = oracle_pairs(pred, gold, setting);
    // NIL class of a mention: its id, or a class of its own when unnamed
    let pclass = |i: usize| pred[i].entity_id.clone().unwrap_or_else(|| format!("pred#{i}"));
    let gclass = |j: usize| gold[j].entity_id.clone().unwrap_or_else(|| format!("gold#{j}"));
    let nil_pairs: Vec<(usize, usize)> = pairs
        .iter()
        .copied()
        .filter(|&(i, j)| oracle_nil(&pred[i].entity_id) && oracle_nil(&gold[j].entity_id))
        .collect();
    let exact = |&(i, j): &(usize, usize)| pred[i].span == gold[j].span;
    // identical-span pairs count only identical-span evidence
    let aligned = |i: usize, j: usize| {
        let evidence: Vec<&(usize, usize)> = nil_pairs.iter().filter(|p| !exact(&(i, j)) || exact(p)).collect();
        let golds: BTreeSet<String> =
            evidence.iter().filter(|p| pclass(p.0) == pclass(i)).map(|p| gclass(p.1)).collect();
        let preds: BTreeSet<String> =
            evidence.iter().filter(|p| gclass(p.1) == gclass(j)).map(|p| pclass(p.0)).collect();
        golds.len() == 1 && preds.len() == 1
    };
    let mut tp = [0; 3];
    for &(i, j) in &pairs {
        tp[0] += 1;
        if pred[i].etype == gold[j].etype {
            tp[1] += 1;
            let linked = if oracle_nil(&pred[i].entity_id) && oracle_nil(&gold[j].entity_id) {
                aligned(i, j)
            } else {
                pred[i].entity_id == gold[j].entity_id
            };
            tp[2] += linked as usize;
        }
    }
    tp.map(|t| Counts { tp: t, fp: pred.len() - t, fn_: gold.len() - t })
}

fn oracle_slots(inst: &Instance, setting: Setting) -> Counts {
    let mut pred: BTreeMap<(SlotName, String), Option<Span>> = BTreeMap::new();
    for s in &inst.pred.slots {
        let e = pred.entry((s.slot, s.entity_id.clone())).or_insert(None);
        if e.is_none() {
            *e = s.span;
        }
    }
    let gold: BTreeSet<(SlotName, String)> = inst.gold.slots.iter().map(|s| (s.slot, s.entity_id.clone())).collect();
    let mut taken: BTreeSet<(SlotName, String)> = pred.keys().filter(|k| gold.contains(*k)).cloned().collect();
    let mut tp = taken.len();
    if setting == Setting::Relaxed {
        for ((slot, entity), span) in &pred {
            if gold.contains(&(*slot, entity.clone())) || !entity.starts_with("nil:") {
                continue;
            }
            let Some(span) = span else { continue };
            for m in &inst.gold.mentions {
                let overlaps = m.span.start < span.end && span.start < m.span.end;
                let Some(gid) = m.entity_id.as_ref().filter(|id| id.starts_with("nil:")) else { continue };
                let key = (*slot, gid.clone());
                if overlaps && gold.contains(&key) && !taken.contains(&key) {
                    taken.insert(key);
                    tp += 1;
                    break;
                }
            }
        }
    }
    Counts { tp, fp: pred.len() - tp, fn_: gold.len() - tp }
}

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20231);
    let mut mismatches = Vec::new();
    let mut monotone_violations = 0;
    let mut checked = 0usize;
    for n in 0..1000 {
        let inst = instance(&mut rng);
        let mut compare = |what: String, got: Counts, want: Counts| {
            checked += 1;
            if got != want && mismatches.len() < 5 {
                mismatches.push(format!("instance {n} {what}: {got:?} != {want:?}"));
            }
        };
        for (task, typed) in [(Task::T1, false), (Task::T2, true)] {
            let got = eval_segments(&inst.text, &inst.pred.segments, &inst.gold.segments, typed);
            compare(format!("{task}"), got, oracle_segments(&inst, typed));
        }
        let mut tps = BTreeMap::new();
        for setting in [Setting::Strict, Setting::Relaxed] {
            let got = eval_entities(&inst.pred.mentions, &inst.gold.mentions, setting);
            let want = oracle_entities(&inst, setting);
            for (k, task) in [Task::T3, Task::T4, Task::T5].into_iter().enumerate() {
                compare(format!("{task} {setting}"), got[k], want[k]);
                tps.insert((task, setting), got[k].tp);
            }
            let got = eval_slots(&inst.pred, &inst.gold, setting);
            compare(format!("T6 {setting}"), got, oracle_slots(&inst, setting));
            tps.insert((Task::T6, setting), got.tp);
        }
        for task in [Task::T3, Task::T4, Task::T5, Task::T6] {
            if tps[&(task, Setting::Relaxed)] < tps[&(task, Setting::Strict)] {
                monotone_violations += 1;
            }
        }
    }
    let detail = format!(
        "1000 instances, {checked} comparisons, {} mismatches, {monotone_violations} relaxed<strict",
        mismatches.len()
    );
    if !mismatches.is_empty() || monotone_violations > 0 {
        return Err(format!("{detail}; {}", mismatches.join("; ")));
    }
    within(start.elapsed(), Duration::from_secs(30), detail)
}

// ---------------------------------------------------------------------------
// planted linking

const FILLER: [&str; 6] = ["zorp", "quibb", "flerm", "snarv", "plock", "wibz"];

fn planted_linking() -> Outcome {
    let profile = sample_profile();
    let forms: Vec<(&String, &String)> = profile
        .forms
        .iter()
        .filter(|(_, f)| f.ambiguity == AmbiguityClass::Unambiguous)
        .map(|(k, f)| (k, &f.entities[0]))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let linker = Linker::new(&profile, LinkerWeights::default());
    let (mut planted, mut predicted, mut correct) = (0usize, 0usize, 0usize);
    for n in 0..200 {
        let mut html = String::from("<p>");
        let mut text = String::new();
        let mut expected = BTreeSet::new();
        for k in 0..rng.random_range(1..=4) {
            if k > 0 || rng.random_bool(0.5) {
                let f = *FILLER.choose(&mut rng).unwrap();
                text.push_str(f);
                text.push(' ');
            }
            let (form, id) = *forms.choose(&mut rng).unwrap();
            expected.insert((Span::new(text.len(), text.len() + form.len()), id.clone()));
            text.push_str(form);
            text.push(' ');
        }
        text.push_str(FILLER.choose(&mut rng).unwrap());
        html.push_str(&text);
        html.push_str("</p>");
        let doc = HtmlDocument { id: format!("s{n}"), provider_id: "p".into(), url: String::new(), html };
        let seg = segment_document(&doc, &profile.title_lexicon);
        let got: BTreeSet<(Span, String)> =
            linker.link(&seg).into_iter().filter_map(|m| Some((m.span, m.entity_id?))).collect();
        planted += expected.len();
        predicted += got.len();
        correct += got.intersection(&expected).count();
    }
    let (p, r) = (correct as f64 / predicted.max(1) as f64, correct as f64 / planted.max(1) as f64);

    // ambiguous "Java" next to an unambiguous skill and a language context term
    let store = OntologyStore::from_records(vec![
        EntityRecord::new("edu:python", EntityType::Skill, "Python"),
        EntityRecord::new("edu:java_lang", EntityType::Skill, "Java").with_context(&["Programmiersprache"]),
        EntityRecord::new("edu:java_island", EntityType::Topic, "Java").with_context(&["Insel"]),
    ])
    .map_err(|e| e.to_string())?;
    let java_profile = build_profile(&store).map_err(|e| e.to_string())?;
    let doc = HtmlDocument {
        id: "j".into(),
        provider_id: "p".into(),
        url: String::new(),
        html: "<h2>Lehrinhalte</h2><p>Java und Python, jede Programmiersprache zählt</p>".into(),
    };
    let seg = segment_document(&doc, &java_profile.title_lexicon);
    let java = Linker::new(&java_profile, LinkerWeights::default())
        .link(&seg)
        .into_iter()
        .find(|m| m.surface == "Java")
        .map(|m| (m.entity_id, m.etype));
    let java_ok = java == Some((Some("edu:java_lang".into()), EntityType::Skill));
    check(
        p == 1.0 && r == 1.0 && java_ok,
        format!("{planted} planted over 200 segments: P={p:.3} R={r:.3}; Java -> {java:?}"),
    )
}

// ---------------------------------------------------------------------------
// segmentation suite

/// Pages and the segment texts of a DOM walk done by hand.
const SEGMENTATION_SUITE: [(&str, &[&str]); 20] = [
    ("<div><div><p>A</p><p>B</p></div></div>", &["A", "B"]),
    ("<p>Hallo <b>Welt</b></p>", &["Hallo Welt"]),
    ("<ul><li>eins</li><li>zwei</li></ul>", &["eins", "zwei"]),
    ("<div>Vor<p>Mitte</p>Nach</div>", &["Vor", "Mitte", "Nach"]),
    ("<table><tr><td>a1</td><td>b1</td></tr><tr><th>K</th></tr></table>", &["a1", "b1", "K"]),
    ("<h2>Lehrinhalte</h2><p>Design und <i>Podcasting</i></p>", &["Lehrinhalte", "Design und Podcasting"]),
    ("<p>Zeile eins<br>Zeile zwei</p>", &["Zeile eins Zeile zwei"]),
    ("<div><script>var x = 1;</script><p>sichtbar</p><style>p{}</style></div>", &["sichtbar"]),
    ("<dl><dt>Dauer</dt><dd>3 Tage</dd></dl>", &["Dauer", "3 Tage"]),
    ("<section><h3>Ziele</h3>Freitext ohne Absatz</section>", &["Ziele", "Freitext ohne Absatz"]),
    ("<p>   viel    Leerraum \n\t hier </p>", &["viel Leerraum hier"]),
    ("<div><span>nur</span> <a href='#'>inline</a></div>", &["nur inline"]),
    ("<p></p><div> </div><p>x</p>", &["x"]),
    ("<details><summary>Mehr</summary><p>Text</p></details>", &["Mehr", "Text"]),
    ("<fieldset><legend>Form</legend>Eingabe</fieldset>", &["Form", "Eingabe"]),
    ("<blockquote>Zitat <em>hier</em></blockquote>", &["Zitat hier"]),
    ("<div><div><div>tief</div></div>flach</div>", &["tief", "flach"]),
    ("<p>Umlaute: Prüfung &amp; Übung</p>", &["Umlaute: Prüfung & Übung"]),
    ("<nav>Menü</nav><main><p>Inhalt</p></main><footer>Impressum</footer>", &["Menü", "Inhalt", "Impressum"]),
    ("<ol><li>A <ul><li>A.1</li></ul> Ende</li></ol>", &["A", "A.1", "Ende"]),
];

fn segmentation_suite() -> Outcome {
    let mut failures = Vec::new();
    for (n, (html, expected)) in SEGMENTATION_SUITE.iter().enumerate() {
        let (text, segments) = extract_text(html);
        let texts: Vec<&str> = segments.iter().map(|s| s.text.as_str()).collect();
        let ordered = segments.windows(2).all(|w| w[0].span.end < w[1].span.start);
        let sliced = segments.iter().all(|s| text[s.span.start..s.span.end] == s.text);
        let covered = texts.join("\n") == text;
        if texts != *expected || !ordered || !sliced || !covered {
            failures.push(format!("page {n}: {texts:?} expected {expected:?}"));
        }
    }
    check(
        failures.is_empty(),
        format!(
            "{}/20 pages match the hand walk{}",
            20 - failures.len(),
            failures.iter().map(|f| format!("; {f}")).collect::<String>()
        ),
    )
}

// ---------------------------------------------------------------------------
// silver round trip

fn silver_round_trip() -> Outcome {
    let profile = sample_profile();
    let corpus = load_corpus(&sample_dir().join("html")).map_err(|e| e.to_string())?;
    let segmented: Vec<_> = corpus.documents.iter().map(|d| segment_document(d, &profile.title_lexicon)).collect();
    let linker = Linker::new(&profile, LinkerWeights::default());
    let mut file = Vec::new();
    let exported = export_silver(&mut file, &segmented, &linker).map_err(|e| e.to_string())?;
    let text = String::from_utf8(file).map_err(|e| e.to_string())?;
    let imported = import_external(&text, &segmented).map_err(|e| e.to_string())?;
    let mut mismatches = 0usize;
    for (doc, back) in segmented.iter().zip(&imported) {
        let linked: Vec<(Span, EntityType)> = linker.link(doc).iter().map(|m| (m.span, m.etype)).collect();
        let back: Vec<(Span, EntityType)> = back.iter().map(|m| (m.span, m.etype)).collect();
        mismatches += linked.iter().filter(|m| !back.contains(m)).count();
        mismatches += back.iter().filter(|m| !linked.contains(m)).count();
    }
    check(
        mismatches == 0 && exported > 0,
        format!("{} documents, {exported} linked mentions, {mismatches} mismatches", segmented.len()),
    )
}

// ---------------------------------------------------------------------------
// determinism

fn determinism() -> Outcome {
    let cfg = PipelineConfig::load(&sample_dir().join("config.toml")).map_err(|e| e.to_string())?;
    let profile = sample_profile();
    let corpus = load_corpus(&cfg.input_dir).map_err(|e| e.to_string())?;
    let settings = |execution| RunSettings {
        weights: cfg.linker_weights,
        namespaces: cfg.namespaces.clone(),
        providers: cfg.providers.clone(),
        execution,
        ..Default::default()
    };
    let runs: Vec<String> = [Execution::Parallel, Execution::Parallel, Execution::Sequential]
        .into_iter()
        .map(|e| run(&corpus.documents, &profile, &settings(e)).map(|o| o.graph(RdfFormat::NTriples)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    check(
        same && !runs[0].is_empty(),
        format!(
            "{} documents, {} bytes of N-Triples, identical across 3 runs: {same}",
            corpus.documents.len(),
            runs[0].len()
        ),
    )
}

// ---------------------------------------------------------------------------
// segmentation on an external corpus

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// `None` when no corpus is configured.
fn external_segmentation() -> Option<Outcome> {
    let dir = std::env::var_os("COURSEKG_P1_GOLD")?;
    let start = Instant::now();
    let gold = match load_gold(Path::new(&dir), Some(Partition::P1)) {
        Ok(g) => g,
        Err(e) => return Some(Err(e.to_string())),
    };
    let lexicon = coursekg::segmenter::TitleLexicon::shipped();
    let pred: Vec<GoldDocument> = gold
        .iter()
        .map(|g| {
            let html: String = g.text.lines().map(|l| format!("<p>{}</p>", escape(l))).collect();
            let doc = HtmlDocument { id: g.doc_id.clone(), provider_id: String::new(), url: String::new(), html };
            let seg = segment_document(&doc, &lexicon);
            let mut p = GoldDocument::new(&g.doc_id, &seg.text);
            p.segments = seg
                .clusters
                .iter()
                .filter(|c| c.seg_type != SegmentType::Unknown)
                .map(|c| GoldSegment { span: c.span, seg_type: c.seg_type })
                .collect();
            p
        })
        .collect();
    let report = evaluate(&gold, &pred, &[Task::T1, Task::T2], &[Setting::Strict], Execution::available());
    let f1 = |t| report.get(t, None).map_or(0.0, |s| s.f1);
    let (t1, t2) = (f1(Task::T1), f1(Task::T2));
    Some(
        within(
            start.elapsed(),
            Duration::from_secs(120),
            format!("{} documents, T1 F1={t1:.3}, T2 F1={t2:.3} (target 0.60)", gold.len()),
        )
        .and_then(|d| check(t1 >= 0.60 && t2 >= 0.60, d)),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 8] = [
        ("slot routing table", slot_routing),
        ("same entity under two segment titles", two_segment_scenario),
        ("graph snippet turtle round trip", snippet_round_trip),
        ("metric oracle on random instances", metric_oracle),
        ("planted-entity linking and Java disambiguation", planted_linking),
        ("segmentation invariants on synthetic pages", segmentation_suite),
        ("silver export/import round trip", silver_round_trip),
        ("deterministic extraction", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    let name = "external corpus segmentation (informational)";
    match external_segmentation() {
        None => println!("SKIP  {name}: set COURSEKG_P1_GOLD to a directory of converted gold JSON"),
        Some(Ok(detail)) => println!("PASS  {name}: {detail}"),
        Some(Err(detail)) => println!("INFO  {name}: below target, not gating: {detail}"),
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all gating criteria passed");
}
