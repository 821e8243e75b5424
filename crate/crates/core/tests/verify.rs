use std::io::Write;

use wqflow::config::Config;
use wqflow::diagnostics::{write_csv, CSV_HEADER};
use wqflow::verify::{record_run, run_check, Bound, Check, Criterion};

#[test]
fn check_names_round_trip() {
    for c in Check::ALL {
        assert_eq!(c.name().parse::<Check>().unwrap(), c);
        assert_eq!(c.to_string(), c.name());
    }
    assert!("nonsense".parse::<Check>().is_err());
}

#[test]
fn bounds() {
    assert!(Criterion::new("a", 1e-3, Bound::AtMost(1e-3)).passed());
    assert!(!Criterion::new("a", f64::NAN, Bound::AtMost(1.0)).passed());
    assert!(!Criterion::new("a", -1e-5, Bound::AtLeast(-1e-6)).passed());
    assert!(Criterion::new("a", 4.0, Bound::Within(3.2, 4.8)).passed());
    assert!(!Criterion::new("a", 5.0, Bound::Within(3.2, 4.8)).passed());
    let line = Criterion::new("dW/dt", 2e-2, Bound::AtMost(3e-2)).to_string();
    assert!(line.starts_with("PASS dW/dt"), "{line}");
}

#[test]
fn config_file_parsing() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# comment\np = 3\nc = inf   # geodesic\n\nN = 64").unwrap();
    let cfg = Config::load(f.path()).unwrap();
    assert_eq!(cfg.get("p").unwrap(), "3");
    assert_eq!(cfg.explicit("sigma"), None);
    let rc = cfg.run_config().unwrap();
    assert_eq!(rc.grid.points(), &[64]);
    assert!(rc.params.c().is_infinite());

    for bad in ["p = 3\np = 2", "bogus = 1", "p 3"] {
        assert!(bad.parse::<Config>().is_err(), "{bad}");
    }
    assert!("p = abc".parse::<Config>().unwrap().run_config().is_err());
    assert!(Config::load("/nonexistent/wqflow.cfg").is_err());
}

#[test]
fn overrides_and_resolution() {
    let base = Config::from_pairs([("p", "3"), ("N", "64")]).unwrap();
    let user = Config::from_pairs([("N", "32")]).unwrap();
    let merged = base.overridden_by(&user);
    assert_eq!(merged.get("N").unwrap(), "32");
    assert_eq!(merged.get("p").unwrap(), "3");
    let r = Config::from_pairs([("domain", "box"), ("N", "64")]).unwrap().resolved().unwrap();
    assert_eq!(r["ic"], "special");
    assert_eq!(r["regime"], "geodesic");
    assert!(r["hi"].parse::<f64>().unwrap() > 5.0);
}

#[test]
fn csv_layout() {
    let rc = Config::from_pairs([("N", "32"), ("T", "1.05")]).unwrap().run_config().unwrap();
    let run = record_run("r", &rc).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &run.records).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header, CSV_HEADER);
    let cols = header.split(',').count();
    assert_eq!(cols, 16);
    assert_eq!(lines.clone().count(), run.records.len());
    assert!(lines.all(|l| l.split(',').count() == cols));
}

#[test]
fn conservation_passes_on_reference() {
    let report = run_check(Check::Conservation, &Config::default()).unwrap();
    assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
    assert!(!report.runs.is_empty());
}

#[test]
fn ill_conditioned_wentropy_scenario_fails() {
    // vanishing gradients on the torus make the p < 2 speed blow up
    let user = Config::from_pairs([("p", "1.5")]).unwrap();
    let report = run_check(Check::WEntropy, &user).unwrap();
    assert!(!report.passed());
    assert!(report.failures().count() > 0);
}
