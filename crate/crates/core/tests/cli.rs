use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pathloss::geo::GeodeticPoint;
use pathloss::ingest::{write_samples, MeasurementSample, Source};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathloss"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn empty_testbed_log_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let synth = run(&[
        "synth",
        "--preset",
        "urban",
        "--bins",
        "50",
        "--seed",
        "1",
        "--out",
        p(dir.path()),
    ]);
    assert!(synth.status.success(), "{}", stderr(&synth));
    let log = dir.path().join("empty.csv");
    fs::write(&log, "timestamp_ms,lat,lon,mrsrp_00,mrsrp_01\n").unwrap();
    let bins = dir.path().join("bins.csv");
    let out = run(&[
        "bin",
        p(&log),
        "--site",
        p(&dir.path().join("site.json")),
        "--out",
        p(&bins),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no samples"), "{}", stderr(&out));
    assert!(!bins.exists());
}

#[test]
fn los_split_needs_labels() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "synth",
        "--preset",
        "suburban",
        "--bins-only",
        "--bins",
        "200",
        "--seed",
        "4",
        "--out",
        p(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let bins = dir.path().join("bins.csv");

    let all = run(&["fit", p(&bins), "--split", "all"]);
    assert!(all.status.success(), "{}", stderr(&all));
    let los = run(&["fit", p(&bins), "--split", "los"]);
    assert_eq!(los.status.code(), Some(2));
    assert!(stderr(&los).contains("no LOS labels"), "{}", stderr(&los));
}

#[test]
fn offset_between_bands_and_disjoint_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mk = |name: &str, freq: &str, seed: &str| {
        let out_dir = dir.path().join(name);
        let o = run(&[
            "synth",
            "--bins-only",
            "--model",
            "fspl",
            "--sigma",
            "0",
            "--freq",
            freq,
            "--bins",
            "300",
            "--seed",
            seed,
            "--out",
            p(&out_dir),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        out_dir.join("bins.csv")
    };
    let high = mk("high", "3.5", "8");
    let low = mk("low", "2.1", "8");
    let json = dir.path().join("offset.json");
    let o = run(&["offset", p(&high), p(&low), "--out", p(&json)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let offset = doc["offset_db"].as_f64().unwrap();
    assert!((offset - 20.0 * (3.5f64 / 2.1).log10()).abs() < 0.01);
    assert_eq!(doc["n_pairs"].as_u64(), Some(300));

    let far = {
        // a different seed lays bins out elsewhere; shift to guarantee no overlap
        let text = fs::read_to_string(&low).unwrap();
        let mut lines = text.lines();
        let mut shifted = vec![lines.next().unwrap().to_string()];
        for line in lines {
            let mut cols: Vec<String> = line.split(',').map(str::to_string).collect();
            cols[0] = (cols[0].parse::<i64>().unwrap() + 100_000).to_string();
            shifted.push(cols.join(","));
        }
        let path = dir.path().join("far.csv");
        fs::write(&path, shifted.join("\n") + "\n").unwrap();
        path
    };
    let o = run(&["offset", p(&high), p(&far)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no common bins"), "{}", stderr(&o));
}

fn samples(powers: impl Iterator<Item = f64>) -> Vec<MeasurementSample> {
    powers
        .enumerate()
        .map(|(i, power)| MeasurementSample {
            timestamp_ms: i as u64 + 1,
            position: GeodeticPoint::new(48.1, 11.6).unwrap(),
            received_power: power,
            band: "3.5GHz".into(),
            source: Source::Scanner,
            beam_id: None,
            cell_id: Some(7),
        })
        .collect()
}

#[test]
fn o2i_writes_one_cdf_per_session() {
    let dir = tempfile::tempdir().unwrap();
    let mut sessions = Vec::new();
    for b in 1..=6 {
        let indoor = format!("b{b}_in.csv");
        let outdoor = format!("b{b}_out.csv");
        let f = fs::File::create(dir.path().join(&indoor)).unwrap();
        write_samples(
            f,
            &samples((0..40).map(|k| -90.0 - b as f64 - k as f64 * 0.5)),
        )
        .unwrap();
        let f = fs::File::create(dir.path().join(&outdoor)).unwrap();
        write_samples(f, &samples([-70.0, -72.0, -74.0].into_iter())).unwrap();
        sessions.push(serde_json::json!({
            "building_id": b.to_string(), "floor": 0, "indoor": indoor, "outdoor": outdoor
        }));
    }
    let manifest = dir.path().join("manifest.json");
    fs::write(
        &manifest,
        serde_json::json!({ "sessions": sessions }).to_string(),
    )
    .unwrap();
    let out_dir = dir.path().join("o2i");
    let o = run(&["o2i", p(&manifest), "--out", p(&out_dir)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut names: Vec<String> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names.len(), 6);
    assert_eq!(names[0], "o2i_1_floor0.csv");
    let cdf = fs::read_to_string(out_dir.join("o2i_1_floor0.csv")).unwrap();
    let mut lines = cdf.lines();
    assert_eq!(lines.next(), Some("loss_db,probability"));
    let last = lines.last().unwrap();
    assert!(last.ends_with(",1") || last.ends_with(",1.0"), "{last}");
}

#[test]
fn models_lists_the_catalog() {
    let o = run(&["models"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let ids: Vec<&str> = doc
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["id"].as_str().unwrap())
        .collect();
    assert!(ids.contains(&"tr38901_uma_nlos"));
    assert!(ids.contains(&"fspl"));
}

#[test]
fn unknown_subcommand_exits_with_usage_error() {
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}
