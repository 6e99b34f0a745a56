use std::io::BufReader;

use totalcost::models::fixtures::{fixture, FIXTURE_NAMES};
use totalcost::models::random::{random_model, RandomParams};
use totalcost::operators::h_backup;
use totalcost::solvers::{run, Algorithm, GroundTruth, SolverConfig};
use totalcost::{ExtReal, Regime, ValueVector};
use totalcost_cli::modelfile::{parse, render, ModelFile, Strictness};
use totalcost_cli::tracefile::{model_hash, Format, TraceFile, TraceHeader};

fn round_trip(file: &ModelFile) -> ModelFile {
    let text = render(file).unwrap();
    let parsed = parse(&text, Strictness::Strict).unwrap();
    assert!(parsed.ignored.is_empty());
    parsed.file
}

#[test]
fn fixtures_round_trip_through_model_files() {
    for name in FIXTURE_NAMES {
        let fx = fixture(name).unwrap();
        let file = ModelFile::from_model(&fx.model, Some(&fx.jstar), fx.qstar.as_ref());
        let back = round_trip(&file);
        assert_eq!(back, file, "{name}");
        assert_eq!(back.to_model().unwrap(), fx.model, "{name}");
        let gt = back.ground_truth(&fx.model).unwrap().unwrap();
        assert_eq!(gt.jstar, fx.jstar, "{name}");
        assert_eq!(gt.qstar, fx.qstar, "{name}");
    }
}

#[test]
fn random_models_round_trip_bit_for_bit() {
    for regime in [Regime::Discounted, Regime::Negative, Regime::Positive] {
        for seed in 0..10 {
            let (model, jstar) = random_model(seed, &RandomParams::new(regime, 7)).unwrap();
            let qstar = h_backup(&model, &jstar).unwrap();
            let file = ModelFile::from_model(&model, Some(&jstar), Some(&qstar));
            let back = round_trip(&file);
            let m2 = back.to_model().unwrap();
            for x in 0..model.num_states() {
                for (a, b) in model.controls(x).iter().zip(m2.controls(x)) {
                    assert_eq!(a.cost.value().to_bits(), b.cost.value().to_bits());
                    for (p, q) in a.transitions.iter().zip(&b.transitions) {
                        assert_eq!((p.0, p.1.to_bits()), (q.0, q.1.to_bits()));
                    }
                }
            }
            let gt = back.ground_truth(&m2).unwrap().unwrap();
            assert!(gt.jstar.iter().zip(jstar.iter()).all(|(a, b)| a.value().to_bits() == b.value().to_bits()));
        }
    }
}

#[test]
fn infinity_literals_parse_in_both_spellings() {
    let text = r#"
format_version = 1
regime = "P"
discount = 1.0

[[states]]
name = "a"
controls = [{ id = "stay", cost = 1.0, transitions = [{ state = "a", prob = 1.0 }] }]

[[states]]
name = "b"
controls = [{ id = "stay", cost = inf, transitions = [{ state = "b", prob = 1.0 }] }]

[ground_truth]
Jstar = ["inf", inf]
"#;
    let parsed = parse(text, Strictness::Strict).unwrap();
    let m = parsed.file.to_model().unwrap();
    assert_eq!(m.controls(1)[0].cost, ExtReal::INFINITY);
    let gt = parsed.file.ground_truth(&m).unwrap().unwrap();
    assert_eq!(gt.jstar, ValueVector(vec![ExtReal::INFINITY; 2]));
    let again = round_trip(&parsed.file);
    assert_eq!(again, parsed.file);
}

#[test]
fn unknown_fields_are_rejected_or_reported() {
    let fx = fixture("FX-N2").unwrap();
    let text = render(&ModelFile::from_model(&fx.model, None, None)).unwrap();
    let text = text.replacen("discount = 1.0", "discount = 1.0\nauthor = \"someone\"", 1);
    let err = parse(&text, Strictness::Strict).unwrap_err().to_string();
    assert!(err.contains("author"), "{err}");
    let parsed = parse(&text, Strictness::Warn).unwrap();
    assert_eq!(parsed.ignored, vec!["author".to_string()]);
    assert_eq!(parsed.file.to_model().unwrap(), fx.model);
}

#[test]
fn parse_errors_carry_a_location() {
    let fx = fixture("FX-P2").unwrap();
    let text = render(&ModelFile::from_model(&fx.model, None, None)).unwrap();
    let cut = &text[..text.len() / 2];
    let cut = cut.trim_end_matches(|c: char| c != '=').trim_end_matches('=');
    let err = format!("{:#}", parse(cut, Strictness::Warn).unwrap_err());
    assert!(err.contains("line") && err.contains("column"), "{err}");
}

#[test]
fn unknown_successors_and_wrong_versions_are_errors() {
    let text = r#"
format_version = 1
regime = "N"
discount = 1.0
[[states]]
name = "a"
controls = [{ id = "go", cost = 0.0, transitions = [{ state = "nowhere", prob = 1.0 }] }]
"#;
    let parsed = parse(text, Strictness::Strict).unwrap();
    let err = parsed.file.to_model().unwrap_err().to_string();
    assert!(err.contains("nowhere"), "{err}");
    assert!(parse(&text.replace("format_version = 1", "format_version = 7"), Strictness::Strict).is_err());
}

fn trace_of(name: &str, algorithm: Algorithm) -> TraceFile {
    let fx = fixture(name).unwrap();
    let cfg = SolverConfig {
        ground_truth: Some(GroundTruth { jstar: fx.jstar.clone(), qstar: fx.qstar.clone() }),
        ..SolverConfig::new(algorithm)
    };
    let out = run(&fx.model, &cfg).unwrap();
    let mut config = std::collections::BTreeMap::new();
    config.insert("algorithm".to_string(), algorithm.code().to_string());
    TraceFile { header: TraceHeader { model_sha256: model_hash(name.as_bytes()), seed: Some(42), config }, trace: out.trace }
}

#[test]
fn traces_reparse_exactly_in_both_formats() {
    let cases = [
        ("FX-D", Algorithm::Mixed),
        ("FX-D", Algorithm::ModifiedPolicyIteration),
        ("FX-P2", Algorithm::PolicyIteration),
        ("FX-P4", Algorithm::LpVariant),
        ("FX-N2", Algorithm::ValueIteration),
        ("FX-P3a", Algorithm::ValueIteration),
    ];
    for (name, alg) in cases {
        let file = trace_of(name, alg);
        assert!(!file.trace.is_empty());
        for format in [Format::Csv, Format::Json] {
            let mut buf = Vec::new();
            file.write(&mut buf, format).unwrap();
            let back = TraceFile::read(BufReader::new(buf.as_slice()), format).unwrap();
            assert_eq!(back, file, "{name} {alg} {format:?}");
        }
    }
}

#[test]
fn csv_rows_increase_in_k() {
    let file = trace_of("FX-D", Algorithm::Mixed);
    let mut buf = Vec::new();
    file.write(&mut buf, Format::Csv).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let body: String = text.lines().skip(2).collect::<Vec<_>>().join("\n");
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let ks: Vec<usize> = rdr.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    assert_eq!(ks.len(), file.trace.len());
    assert!(ks.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn tampered_rows_are_rejected() {
    let file = trace_of("FX-D", Algorithm::Mixed);
    let mut buf = Vec::new();
    file.write(&mut buf, Format::Csv).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.swap(3, 4);
    let swapped = lines.join("\n");
    assert!(TraceFile::read(BufReader::new(swapped.as_bytes()), Format::Csv).is_err());
}
