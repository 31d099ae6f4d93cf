use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use clozegen::morphology::{AcceptAll, LemmaSource, Morphology, PosTag};
use clozegen::wordlist::{load_word_groups, read_headword_list, write_word_groups, WordGroupSet};
use proptest::prelude::*;

type Paradigm = BTreeMap<PosTag, BTreeSet<String>>;

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn gold() -> BTreeMap<String, Paradigm> {
    let text = fs::read_to_string(fixture("awl_sublist1_gold.tsv")).unwrap();
    let mut out: BTreeMap<String, Paradigm> = BTreeMap::new();
    for line in text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
    {
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols.len(), 3, "bad gold line {line:?}");
        let tag: PosTag = cols[1].parse().unwrap();
        let forms = cols[2].split('|').map(String::from).collect();
        out.entry(cols[0].to_string())
            .or_default()
            .insert(tag, forms);
    }
    out
}

#[test]
fn sixty_headwords_match_gold() {
    let gold = gold();
    let entries = read_headword_list(&fixture("awl_sublist1.csv")).unwrap();
    assert_eq!(entries.len(), 60);
    assert_eq!(gold.len(), 60);
    let morph = Morphology::bundled();
    let mut mismatches = Vec::new();
    for entry in &entries {
        let hw = entry.headword();
        let expected = &gold[hw];
        let tags: BTreeSet<PosTag> = morph.tag_pos(hw).unwrap().tags;
        let expected_tags: BTreeSet<PosTag> = expected.keys().copied().collect();
        if tags != expected_tags {
            mismatches.push(format!("{hw}: tags {tags:?} vs {expected_tags:?}"));
        }
        for (tag, forms) in expected {
            match morph.inflect(hw, *tag) {
                Ok(got) if &got == forms => {}
                other => mismatches.push(format!("{hw}/{tag}: {other:?} vs {forms:?}")),
            }
        }
        let group = morph.build_word_group(entry, &AcceptAll).unwrap();
        if group.inflections() != expected {
            mismatches.push(format!("{hw}: group differs"));
        }
    }
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}

#[test]
fn known_tagging_errors_are_absent() {
    let morph = Morphology::bundled();
    let mut all_forms = BTreeSet::new();
    for hw in gold().keys() {
        let paradigm = morph.paradigm(hw).unwrap();
        if let Some(plurals) = paradigm.get(&PosTag::NNS) {
            assert!(
                !plurals.contains(hw.as_str()),
                "{hw} listed as its own plural"
            );
            if let Some(singular) = paradigm.get(&PosTag::NN) {
                assert!(
                    plurals.is_disjoint(singular),
                    "{hw}: singular form under NNS"
                );
            }
        }
        for forms in paradigm.values() {
            all_forms.extend(forms.iter().cloned());
        }
    }
    assert!(!all_forms.contains("areae"));
    assert!(all_forms
        .iter()
        .all(|f| !f.ends_with("ae") && !f.ends_with('æ')));
    for noun in ["period", "economy", "formula"] {
        assert!(
            !morph.tag_pos(noun).unwrap().tags.contains(&PosTag::JJ),
            "{noun} tagged JJ"
        );
    }
    for uncountable in ["data", "research", "percent"] {
        assert!(!morph
            .tag_pos(uncountable)
            .unwrap()
            .tags
            .contains(&PosTag::NNS));
    }
    assert!(!morph.tag_pos("sector").unwrap().tags.contains(&PosTag::VBP));
    assert_eq!(
        morph.inflect("occur", PosTag::VBD).unwrap(),
        BTreeSet::from(["occurred".to_string()])
    );
}

#[test]
fn word_group_file_round_trip() {
    let morph = Morphology::bundled();
    let entries = read_headword_list(&fixture("awl_sublist1.csv")).unwrap();
    let groups = entries
        .iter()
        .map(|e| morph.build_word_group(e, &AcceptAll).unwrap())
        .collect();
    let set = WordGroupSet::new(groups, "awl").unwrap();
    let mut buf = Vec::new();
    write_word_groups(&set, &mut buf).unwrap();
    let back = load_word_groups(buf.as_slice(), "round-trip").unwrap();
    assert_eq!(back, set);
    assert_eq!(
        back.groups()
            .iter()
            .map(|g| g.headword())
            .collect::<Vec<_>>(),
        entries.iter().map(|e| e.headword()).collect::<Vec<_>>()
    );
    let mut again = Vec::new();
    write_word_groups(&back, &mut again).unwrap();
    assert_eq!(buf, again);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lemma_round_trip(idx in 0usize..60, pick in any::<prop::sample::Index>()) {
        let morph = Morphology::bundled();
        let gold = gold();
        let hw = gold.keys().nth(idx).unwrap();
        let pairs: Vec<(PosTag, String)> = gold[hw]
            .iter()
            .flat_map(|(t, fs)| fs.iter().map(move |f| (*t, f.clone())))
            .collect();
        let (tag, form) = &pairs[pick.index(pairs.len())];
        let lemma = morph.lemma_of(form, *tag);
        prop_assert_eq!(&lemma.headword, hw);
        prop_assert_eq!(lemma.source, LemmaSource::Lexicon);
        let upper = form.to_uppercase();
        prop_assert_eq!(&morph.lemma_of(&upper, *tag).headword, hw);
    }

    #[test]
    fn generated_forms_are_single_lowercase_words(word in "[a-z]{3,10}") {
        let morph = Morphology::bundled();
        if let Ok(paradigm) = morph.paradigm(&word) {
            for forms in paradigm.values() {
                prop_assert!(!forms.is_empty());
                for f in forms {
                    prop_assert!(f.chars().all(|c| c.is_ascii_lowercase()), "{}", f);
                }
            }
        }
    }
}
