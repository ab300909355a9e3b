use super::*;
use proptest::prelude::*;

fn plumb(kappa: f64, ell: f64) -> ExperimentManifest {
    let mut m = Subcommand::Plumb.default_manifest();
    m.metric = MetricSection {
        kappa: vec![kappa],
        ell: vec![ell],
    };
    m
}

#[test]
fn plumb_row_carries_the_closed_form() {
    let r = run(Subcommand::Plumb, &plumb(1.0, 0.75)).unwrap();
    let t = r.series("plumbing").unwrap();
    assert_eq!(t.rows.len(), 1);
    assert!((t.column("epsilon").unwrap()[0] - 0.111111).abs() < 5e-7);
    assert!(r.passed(), "{:?}", r.checks);
    assert_eq!(t.column("lower_ok").unwrap()[0], 0.0);
}

#[test]
fn ode_oracle_matches_at_one() {
    assert!((suites::epsilon_by_ode(1.0, 1.0, 100) - (-2f64).exp()).abs() < 1e-14);
}

#[test]
fn reports_are_byte_identical() {
    let m = Suite::Kato.manifest();
    let a = run(Subcommand::Audit, &m).unwrap().report_json().unwrap();
    let b = run(Subcommand::Audit, &m).unwrap().report_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn persisted_outputs_are_deterministic() {
    let dir = std::env::temp_dir().join(format!("ymlab-persist-{}", std::process::id()));
    let m = plumb(0.5, 0.3);
    let hash = |sub: &str| {
        let d = dir.join(sub);
        run(Subcommand::Plumb, &m).unwrap().persist(&d).unwrap();
        ["manifest.toml", "report.json", "plumbing.csv"].map(|f| std::fs::read(d.join(f)).unwrap())
    };
    assert_eq!(hash("a"), hash("b"));
    let back = ExperimentManifest::from_toml(&std::fs::read_to_string(dir.join("a/manifest.toml")).unwrap()).unwrap();
    assert_eq!(back, m);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn run_id_tracks_physics_only() {
    let a = plumb(1.0, 0.75);
    let mut b = a.clone();
    assert_eq!(a.run_id().unwrap(), b.run_id().unwrap());
    b.metric.ell[0] = 0.7;
    assert_ne!(a.run_id().unwrap(), b.run_id().unwrap());
    assert_eq!(a.run_id().unwrap().len(), 64);
}

#[test]
fn every_suite_manifest_round_trips() {
    for s in Suite::ALL {
        let m = s.manifest();
        assert_eq!(ExperimentManifest::from_toml(&m.to_toml().unwrap()).unwrap(), m, "{s}");
        assert!(!m.tolerances.is_empty());
    }
    for c in Subcommand::ALL {
        let m = c.default_manifest();
        assert_eq!(ExperimentManifest::from_toml(&m.to_toml().unwrap()).unwrap(), m, "{c}");
    }
}

#[test]
fn unknown_keys_and_names_are_config_errors() {
    let mut text = plumb(1.0, 0.5).to_toml().unwrap();
    text.push_str("\n[extra]\nx = 1\n");
    assert!(matches!(ExperimentManifest::from_toml(&text), Err(Error::Config(_))));
    assert!("bogus".parse::<Subcommand>().is_err());
    assert!("bogus".parse::<Suite>().is_err());
    let mut m = Suite::Kato.manifest();
    m.suite = None;
    assert!(matches!(run(Subcommand::Audit, &m), Err(Error::Config(_))));
    m.surface.topology = "sphere".into();
    assert!(matches!(run(Subcommand::Spectrum, &m), Err(Error::Config(_))));
}

#[test]
fn names_round_trip() {
    for c in Subcommand::ALL {
        assert_eq!(c.name().parse::<Subcommand>().unwrap(), c);
    }
    for s in Suite::ALL {
        assert_eq!(s.name().parse::<Suite>().unwrap(), s);
    }
    for k in PlotKind::ALL {
        assert_eq!(k.name().parse::<PlotKind>().unwrap(), k);
    }
}

#[test]
fn checks_need_a_tolerance_and_nan_fails() {
    let c = Check::new("x", f64::NAN, Relation::AtMost, 1.0, "");
    assert!(!c.pass);
    assert!(c.to_string().starts_with("FAIL x"));
    assert!(Check::new("x", 1.0, Relation::AtMost, 1.0, "").pass);
    assert!(!Check::new("x", 1.0, Relation::LessThan, 1.0, "").pass);
    let mut m = plumb(1.0, 0.75);
    m.tolerances.clear();
    let r = run(Subcommand::Plumb, &m).unwrap();
    assert!(r.checks.is_empty());
}

#[test]
fn failures_carry_values_and_tolerances() {
    let mut m = plumb(1.0, 0.75);
    m.tolerances.insert("epsilon_ode".into(), -1.0);
    let r = run(Subcommand::Plumb, &m).unwrap();
    let f: Vec<_> = r.failures().collect();
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].tolerance, -1.0);
    assert!(f[0].value >= 0.0);
}

#[test]
fn plot_kinds_enforce_their_schema() {
    let dir = std::env::temp_dir().join(format!("ymlab-plot-{}", std::process::id()));
    let mut r = run(Subcommand::Plumb, &plumb(1.0, 0.75)).unwrap();
    assert!(matches!(emit_plot_data(&r, PlotKind::Decay, &dir), Err(Error::MissingSeries(_))));
    assert_eq!(emit_plot_data(&r, PlotKind::Table, &dir).unwrap().len(), 1);
    let mut good = Series::new("decay_a", PlotKind::Decay, &["t", "sup_f", "fit"]);
    good.push(vec![0.0, 1.0, 1.0]);
    r.series.push(good);
    let paths = emit_plot_data(&r, PlotKind::Decay, &dir).unwrap();
    assert_eq!(std::fs::read_to_string(&paths[0]).unwrap(), "t,sup_f,fit\n0,1,1\n");
    r.series.push(Series::new("decay_b", PlotKind::Decay, &["t", "sup"]));
    assert!(matches!(emit_plot_data(&r, PlotKind::Decay, &dir), Err(Error::Config(_))));
    assert!(PlotKind::Leaf.accepts(&["beta".into(), "trace_1".into(), "trace_2".into()]));
    assert!(!PlotKind::Leaf.accepts(&["beta".into(), "trace_2".into()]));
    assert!(PlotKind::Lambda1.accepts(&["ell".into(), "lambda1".into(), "reducible_flag".into()]));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn spectrum_emits_flagged_lambda1_series() {
    let mut m = Subcommand::Spectrum.default_manifest();
    m.surface = SurfaceSection::new("genus2_separating_pinch", 16, 8);
    m.metric.ell = vec![0.4, 0.2];
    let r = run(Subcommand::Spectrum, &m).unwrap();
    let generic = r.series("lambda1_rep0").unwrap();
    let reducible = r.series("lambda1_rep1").unwrap();
    assert_eq!(generic.column("reducible_flag").unwrap(), vec![0.0, 0.0]);
    assert_eq!(reducible.column("reducible_flag").unwrap(), vec![1.0, 1.0]);
    assert!(r.check("lambda1_floor").unwrap().pass);
}

#[test]
fn foliate_emits_a_leaf() {
    let mut m = Subcommand::Foliate.default_manifest();
    m.twist.as_mut().unwrap().beta = vec![0.35, 0.3, 0.25];
    let r = run(Subcommand::Foliate, &m).unwrap();
    let leaf = r.series("leaf").unwrap();
    assert!(PlotKind::Leaf.accepts(&leaf.columns));
    assert_eq!(leaf.rows.len(), 3);
}

#[test]
fn sweep_merges_cells_in_index_order() {
    let mut m = Subcommand::Sweep.default_manifest();
    m.surface = SurfaceSection::new("one_holed_torus_punctured", 16, 0);
    m.metric = MetricSection {
        kappa: vec![1.0],
        ell: vec![1.0, 0.5],
    };
    m.representation = vec![RepSection::punctured_torus(0.3, 1.2, 0.4)];
    let r = run(Subcommand::Sweep, &m).unwrap();
    let t = r.series("sweep").unwrap();
    assert_eq!(t.column("cell").unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
    assert_eq!(t.column("beta").unwrap(), vec![0.25, 0.2, 0.25, 0.2]);
    assert!(r.passed());
}

#[test]
fn mismatched_twist_weight_is_rejected() {
    let mut m = Suite::Roundtrip.manifest();
    m.twist.as_mut().unwrap().alpha = 0.25;
    assert!(matches!(run(Subcommand::Flow, &m), Err(Error::Config(_))));
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, 1e-12f64..1e-3, Just(0.1 + 0.2)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn manifests_round_trip_bit_exactly(
        kappa in proptest::collection::vec(finite(), 1..4),
        ell in proptest::collection::vec(finite(), 0..6),
        tol in finite(),
        seed in 0..=i64::MAX as u64,
        dt in proptest::option::of(finite()),
    ) {
        let mut m = Suite::Degeneration.manifest();
        m.metric = MetricSection { kappa, ell };
        m.tolerances.insert("custom".into(), tol);
        m.seed = seed;
        m.flow.dt = dt;
        let back = ExperimentManifest::from_toml(&m.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back.run_id().unwrap(), m.run_id().unwrap());
        prop_assert_eq!(back, m);
    }
}
