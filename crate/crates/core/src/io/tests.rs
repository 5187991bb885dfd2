use super::*;

const CONDUCTOR: &str = r#"
[geometry.disks]
r1 = 1.0
r2 = 2.0

[phases]
core = { sigma = 5.0 }
shell = { sigma = 1.0 }
matrix = { sigma = 0.7142857142857143 }
"#;

const ELASTIC: &str = r#"
[geometry.disks]
r1 = 1.0
r2 = 2.0

[phases]
core = { mu = 2.0, kappa = 1.0 }
shell = { mu = 1.0, kappa = 2.0 }
matrix = { mu = 1.0, kappa = 3.0 }

[load]
kind = "bulk"
"#;

fn paths(e: &ScenarioError) -> Vec<String> {
    e.violations().iter().map(|v| v.path.clone()).collect()
}

#[test]
fn minimal_conductor_gets_defaults() {
    let s = parse_scenario(CONDUCTOR).unwrap();
    assert_eq!(s.numerics.order, 8);
    assert_eq!(s.numerics.nodes, 256);
    assert_eq!(s.numerics.radii, [4.0, 8.0]);
    assert!(matches!(s.material, Material::Conductor(_)));
}

#[test]
fn radius_order_names_r1() {
    let text = CONDUCTOR.replace("r1 = 1.0", "r1 = 2.5");
    let e = parse_scenario(&text).unwrap_err();
    assert_eq!(paths(&e), ["geometry.disks.r1"]);
}

#[test]
fn mixed_phase_kinds_name_the_field() {
    let text = ELASTIC.replace("core = { mu = 2.0, kappa = 1.0 }", "core = { sigma = 2.0 }");
    let e = parse_scenario(&text).unwrap_err();
    assert_eq!(paths(&e), ["phases.core"]);
}

#[test]
fn all_violations_are_listed() {
    let text = r#"
[geometry.disks]
r1 = -1.0
r2 = 2.0

[phases]
core = { mu = 2.0, kappa = 1.0 }
shell = { mu = 1.0 }

[numerics]
order = 1
nodes = 7
"#;
    let p = paths(&parse_scenario(text).unwrap_err());
    for expected in [
        "geometry.disks.r1",
        "phases.shell.kappa",
        "phases.matrix",
        "numerics.order",
        "numerics.nodes",
    ] {
        assert!(
            p.iter().any(|q| q == expected),
            "{expected} missing from {p:?}"
        );
    }
}

#[test]
fn parse_errors_carry_position() {
    let e = parse_scenario("[geometry.disks]\nr1 = 1.0\nr2 = = 2\n").unwrap_err();
    assert!(matches!(e, ScenarioError::Parse { line: 3, .. }), "{e:?}");
    let e = parse_scenario("[geometry.disks]\nr1 = 1.0\nradius = 2.0\n").unwrap_err();
    assert!(matches!(e, ScenarioError::Parse { line: 3, .. }), "{e:?}");
}

#[test]
fn exactly_one_geometry() {
    let text =
        format!("{ELASTIC}\n[geometry.curves]\ninner = [[1, 1.0, 0.0]]\nouter = [[1, 2.0, 0.0]]\n");
    assert_eq!(paths(&parse_scenario(&text).unwrap_err()), ["geometry"]);
}

#[test]
fn curve_geometry_parses() {
    let text = ELASTIC.replace(
        "[geometry.disks]\nr1 = 1.0\nr2 = 2.0",
        "[geometry.curves]\ninner = [[1, 1.0, 0.0]]\nouter = [[1, 2.0, 0.0], [-1, 0.1, 0.0]]",
    );
    let s = parse_scenario(&text).unwrap();
    assert!(matches!(s.geometry, Geometry::Curves { .. }));
    assert!((s.numerics.radii[0] - 4.2).abs() < 1e-9);
    let crossing = text.replace("[[1, 1.0, 0.0]]", "[[1, 2.05, 0.0]]");
    assert_eq!(
        paths(&parse_scenario(&crossing).unwrap_err()),
        ["geometry.curves.inner"]
    );
}

#[test]
fn canonical_round_trip() {
    let extra = "\n[search]\nparameter = \"mu_m\"\n\n[sweep]\naxes = [{ parameter = \"mu_c\", lo = 0.5, hi = 2.0, count = 3, log = true }]\n\n[rigidity]\nepsilons = [0.0, 0.02]\nfamilies = [\"inner_m2\"]\n";
    for text in [CONDUCTOR.to_string(), format!("{ELASTIC}{extra}")] {
        let s = parse_scenario(&text).unwrap();
        let canon = s.canonical();
        let again = parse_scenario(&canon).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.canonical(), canon);
        assert_eq!(again.digest(), s.digest());
    }
}

#[test]
fn digest_tracks_content() {
    let a = parse_scenario(ELASTIC).unwrap();
    let b = parse_scenario(&ELASTIC.replace("kappa = 3.0", "kappa = 3.5")).unwrap();
    assert_ne!(a.digest(), b.digest());
    assert_eq!(a.digest().len(), 64);
}

#[test]
fn overrides_revalidate() {
    let s = parse_scenario(ELASTIC).unwrap();
    let o = s.with_overrides(Some(12), Some(128), Some(7)).unwrap();
    assert_eq!(
        (o.numerics.order, o.numerics.nodes, o.numerics.seed),
        (12, 128, 7)
    );
    assert_ne!(o.digest(), s.digest());
    let e = s.with_overrides(None, Some(3), None).unwrap_err();
    assert_eq!(paths(&e), ["numerics.nodes", "numerics.nodes"]);
}

#[test]
fn check_neutral_conductor_residual_vanishes() {
    let s = parse_scenario(CONDUCTOR).unwrap();
    let out = run_command(Command::CheckNeutral, &s, &RunOptions::default());
    assert_eq!(out.exit_code, EXIT_OK);
    let r = out.record.outputs["residual"].as_f64().unwrap();
    assert!(r.abs() <= 1e-12, "{r}");
    assert_eq!(out.record.outputs["neutral"], serde_json::json!(true));
}

#[test]
fn solve_bem_homogeneous_gap_is_zero() {
    let text = ELASTIC
        .replace(
            "core = { mu = 2.0, kappa = 1.0 }",
            "core = { mu = 1.0, kappa = 3.0 }",
        )
        .replace(
            "shell = { mu = 1.0, kappa = 2.0 }",
            "shell = { mu = 1.0, kappa = 3.0 }",
        );
    let s = parse_scenario(&format!("{text}\n[numerics]\nnodes = 64\n")).unwrap();
    let out = run_command(Command::SolveBem, &s, &RunOptions::default());
    assert_eq!(out.exit_code, EXIT_OK, "{:?}", out.record.error);
    let gap = out.record.outputs["gap"].as_f64().unwrap();
    assert!(gap < 1e-12, "{gap}");
}

#[test]
fn find_neutral_without_sign_change_exits_3_with_scan() {
    let text = format!("{ELASTIC}\n[search]\nparameter = \"kappa_m\"\nbracket = [2.0, 2.5]\n");
    let s = parse_scenario(&text).unwrap();
    let out = run_command(Command::FindNeutral, &s, &RunOptions::default());
    assert_eq!(out.exit_code, EXIT_NUMERICAL);
    assert_eq!(out.record.status, Status::Error);
    assert!(out.record.outputs["scan"]
        .as_array()
        .is_some_and(|a| !a.is_empty()));
    let table = &out.tables[0];
    assert_eq!(table.name, "find_neutral_scan");
    assert_eq!(table.header, ["kappa_m", "objective"]);
}

#[test]
fn find_neutral_locates_five_thirds() {
    let out = run_command(
        Command::FindNeutral,
        &parse_scenario(ELASTIC).unwrap(),
        &RunOptions::default(),
    );
    assert_eq!(out.exit_code, EXIT_OK, "{:?}", out.record.error);
    let root = out.record.outputs["root"].as_f64().unwrap();
    assert!((root - 5.0 / 3.0).abs() < 1e-10, "{root}");
}

#[test]
fn unsuitable_scenario_is_validation_failure() {
    let s = parse_scenario(CONDUCTOR).unwrap();
    let out = run_command(Command::SolveBem, &s, &RunOptions::default());
    assert_eq!(out.exit_code, EXIT_VALIDATION);
}

#[test]
fn csv_floats_round_trip() {
    let values = [0.1, 1.0 / 3.0, 5e-324, -2.5e300, 1.0, 0.0];
    let mut t = Table::new("t", &["x"]);
    for v in values {
        t.push(vec![v.into()]);
    }
    let csv = t.to_csv();
    let parsed: Vec<f64> = csv.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(parsed, values);
    assert_eq!(format_float(f64::NAN), "NaN");
}

#[test]
fn emission_is_deterministic_and_appends() {
    let dir = tempfile::tempdir().unwrap();
    let s = parse_scenario(&format!("{ELASTIC}\n[numerics]\norder = 6\n")).unwrap();
    let run = || run_command(Command::SolveDisk, &s, &RunOptions::default());
    let (a, b) = (run(), run());
    assert_eq!(a.record, b.record);
    emit(dir.path(), &a.record, &a.tables).unwrap();
    let csv = std::fs::read(dir.path().join("solve_disk_modes.csv")).unwrap();
    emit(dir.path(), &b.record, &b.tables).unwrap();
    assert_eq!(
        std::fs::read(dir.path().join("solve_disk_modes.csv")).unwrap(),
        csv
    );
    let lines = std::fs::read_to_string(dir.path().join("records.jsonl")).unwrap();
    let lines: Vec<&str> = lines.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], lines[1]);
    let back: ResultRecord = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(back, a.record);
    assert!(back.timestamp.is_none());
}

#[test]
fn command_names_round_trip() {
    for c in Command::ALL {
        assert_eq!(c.name().parse::<Command>().unwrap(), c);
    }
    assert!("solve".parse::<Command>().is_err());
}

mod properties {
    use super::super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn emitted_floats_reparse_exactly(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let mut t = Table::new("t", &["x"]);
            t.push(vec![x.into()]);
            let csv = t.to_csv();
            let back: f64 = csv.lines().nth(1).unwrap().parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }

        #[test]
        fn scenarios_round_trip(
            r2 in 0.1f64..100.0,
            ratio in 0.01f64..0.99,
            moduli in proptest::collection::vec(1e-3f64..1e3, 6),
            shear in any::<bool>(),
            order in 3usize..=64,
            seed in any::<u64>(),
        ) {
            let text = format!(
                "[geometry.disks]\nr1 = {r1:?}\nr2 = {r2:?}\n\n[phases]\ncore = {{ mu = {:?}, kappa = {:?} }}\nshell = {{ mu = {:?}, kappa = {:?} }}\nmatrix = {{ mu = {:?}, kappa = {:?} }}\n\n[load]\nkind = \"{}\"\n\n[numerics]\norder = {order}\nseed = {seed}\n",
                moduli[0], moduli[1], moduli[2], moduli[3], moduli[4], moduli[5],
                if shear { "shear" } else { "bulk" },
                r1 = r2 * ratio,
            );
            let s = parse_scenario(&text).unwrap();
            let canon = s.canonical();
            let again = parse_scenario(&canon).unwrap();
            prop_assert_eq!(&again, &s);
            prop_assert_eq!(again.canonical(), canon);
        }
    }
}
