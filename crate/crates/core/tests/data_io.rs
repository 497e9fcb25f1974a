mod common;

use privpref::data::{
    decode_choice, encode_choice, load_dataset, read_dataset, save_dataset, to_csv_bytes, Feature, FeatureSchema,
    LabeledDataset, PrivacyChoice, PrivacyRecord, Value,
};
use privpref::Error;
use proptest::prelude::*;

#[test]
fn generated_file_round_trips_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let ds = common::generated(100, 11);
    save_dataset(&ds, &path).unwrap();
    let first = std::fs::read(&path).unwrap();

    let loaded = load_dataset(&path, &ds.schema).unwrap();
    assert_eq!(loaded.records, ds.records);
    save_dataset(&loaded, &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);
}

#[test]
fn header_without_label_is_a_schema_mismatch() {
    let text = "record_id,context,permission,hour_of_day,prior_denials,persona_id\n1,social,camera,3,0,\n";
    let err = read_dataset(text.as_bytes(), &FeatureSchema::default_privacy(), "t").unwrap_err();
    assert!(matches!(err, Error::SchemaMismatch { .. }), "{err}");
}

#[test]
fn three_rows_keep_their_order() {
    let text = "record_id,context,permission,hour_of_day,prior_denials,persona_id,label\n\
                7,social,camera,3,0,,Allow\n2,health,storage,,1,4,Ask\n5,finance,location,22.5,20,,Deny\n";
    let ds = read_dataset(text.as_bytes(), &FeatureSchema::default_privacy(), "t").unwrap();
    assert_eq!(ds.records.iter().map(|r| r.record_id).collect::<Vec<_>>(), [7, 2, 5]);
    assert_eq!(ds.records[1].values[2], Value::Missing);
    assert_eq!(ds.records[1].persona_id, Some(4));
    assert_eq!(to_csv_bytes(&ds).unwrap(), text.as_bytes());
}

#[test]
fn empty_dataset_is_header_only() {
    let ds = LabeledDataset::new(FeatureSchema::default_privacy(), vec![], "e").unwrap();
    assert_eq!(
        String::from_utf8(to_csv_bytes(&ds).unwrap()).unwrap(),
        "record_id,context,permission,hour_of_day,prior_denials,persona_id,label\n"
    );
}

#[test]
fn choice_codes() {
    assert_eq!(encode_choice("Allow").unwrap(), 1);
    assert_eq!(encode_choice("Deny").unwrap(), 0);
    assert_eq!(encode_choice("Ask").unwrap(), -1);
    assert!(matches!(PrivacyChoice::parse_strict("allow "), Err(Error::UnknownChoice(_))));
    assert_eq!(encode_choice("allow ").unwrap(), 1);
    assert!(matches!(encode_choice("maybe"), Err(Error::UnknownChoice(_))));
    for c in [1, 0, -1] {
        assert_eq!(encode_choice(decode_choice(c).unwrap()).unwrap() as i64, c);
    }
    assert!(decode_choice(2).is_err());
}

fn small_schema() -> FeatureSchema {
    FeatureSchema::new(vec![
        Feature::categorical("colour", &["red", "green", "blue"]),
        Feature::numeric("score", -50.0, 2.0e6, "pts"),
        Feature::numeric("ratio", 0.0, 1.0, ""),
    ])
    .unwrap()
}

fn value_strategy(j: usize) -> BoxedStrategy<Value> {
    let present: BoxedStrategy<Value> = match j {
        0 => prop::sample::select(vec!["red", "green", "blue"]).prop_map(Value::cat).boxed(),
        // at most six significant digits, as the canonical form keeps
        1 => prop_oneof![
            (-50i64..1_000_000).prop_map(|x| Value::Num(x as f64)),
            (100_000i64..=200_000).prop_map(|x| Value::Num(x as f64 * 10.0)),
        ]
        .boxed(),
        _ => (0u32..=1000).prop_map(|x| Value::Num(x as f64 / 1000.0)).boxed(),
    };
    prop_oneof![1 => Just(Value::Missing), 6 => present].boxed()
}

fn record_strategy() -> impl Strategy<Value = (Vec<Value>, Option<PrivacyChoice>, Option<u32>)> {
    (
        (value_strategy(0), value_strategy(1), value_strategy(2)).prop_map(|(a, b, c)| vec![a, b, c]),
        prop::option::of(prop::sample::select(PrivacyChoice::ALL.to_vec())),
        prop::option::of(0u32..10),
    )
}

proptest! {
    #[test]
    fn canonical_csv_round_trips(rows in prop::collection::vec(record_strategy(), 0..40)) {
        let records = rows
            .into_iter()
            .enumerate()
            .map(|(i, (values, label, persona))| PrivacyRecord { record_id: i as u64 * 3, values, label, persona_id: persona })
            .collect();
        let ds = LabeledDataset::new(small_schema(), records, "p").unwrap();
        let bytes = to_csv_bytes(&ds).unwrap();
        let back = read_dataset(&bytes[..], &ds.schema, "p").unwrap();
        prop_assert_eq!(&back.records, &ds.records);
        prop_assert_eq!(to_csv_bytes(&back).unwrap(), bytes);
    }
}
