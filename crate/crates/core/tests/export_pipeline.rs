use hypercmc::export::config::{
    example_config, DomainConfig, EntryConfig, FdOrderName, MeshFormat, Model, OutputConfig, PotentialConfig, RunConfig,
    SurfaceConfig, Tolerances, CONFIG_SCHEMA, EXAMPLE_NAMES,
};
use hypercmc::export::mesh::mesh_to_string;
use hypercmc::export::pipeline::{deform_sweep, mesh_of, parse_q_range, run, validate};
use hypercmc::export::report::to_json;
use hypercmc::potential::{Regime, RegimeHint, RootChoice};
use proptest::prelude::*;

fn small(name: &str, n: usize) -> RunConfig {
    let mut cfg = example_config(name).unwrap();
    cfg.domain.nx = n;
    cfg.domain.ny = n;
    cfg.output = OutputConfig::default();
    cfg
}

#[test]
fn every_example_passes_its_residual_checks() {
    for name in EXAMPLE_NAMES {
        let mut cfg = example_config(name).unwrap();
        cfg.output = OutputConfig::default();
        let r = run(&cfg).unwrap();
        assert!(r.report.passed, "{name}: {:?}", r.report.failed());
        for row in ["curvature", "gauss", "codazzi", "legendre", "det_f", "reality"] {
            assert!(r.report.row(row).is_some(), "{name} lacks {row}");
        }
        assert!(r.report.timings.is_none());
    }
}

#[test]
fn meshes_and_reports_are_deterministic() {
    let cfg = small("umbilic", 41);
    let (a, b) = (run(&cfg).unwrap(), run(&cfg).unwrap());
    for format in [MeshFormat::Ply, MeshFormat::Obj] {
        assert_eq!(mesh_to_string(&mesh_of(&a), format), mesh_to_string(&mesh_of(&b), format));
    }
    assert_eq!(to_json(&a.report), to_json(&b.report));
    let m = mesh_of(&a);
    assert_eq!(m.vertices.len(), 41 * 41);
    assert_eq!(m.faces.len(), 40 * 40);
    assert!(m.vertices.iter().all(|v| v.iter().map(|x| x * x).sum::<f64>() < 1.0));
}

#[test]
fn umbilic_beyond_the_unit_circle_reports_its_singular_set() {
    let mut cfg = small("umbilic", 41);
    cfg.domain.re = [-1.5, 1.5];
    cfg.domain.im = [-1.5, 1.5];
    let r = run(&cfg).unwrap();
    let s = &r.report.singular_set;
    assert!(s.cell_id > 0 && s.cell_omega0 > 0);
    assert_eq!(s.backward_sheet_vertices, s.cell_omega0 - s.rejected.min(s.cell_omega0));
    assert!(s.curves >= 1);
    let m = mesh_of(&r);
    // no quad straddles the two sheets
    for f in &m.faces {
        let cells: Vec<i32> = f.iter().map(|&v| m.cell[v]).collect();
        assert!(cells.iter().all(|c| *c == cells[0]));
    }
}

#[test]
fn deform_sweep_reports_each_parameter() {
    let mut cfg = small("revolution", 41);
    cfg.domain.im = [2.9, 3.4];
    cfg.domain.re = [-0.25, 0.25];
    cfg.domain.basepoint = [0.0, 3.1];
    let r = run(&cfg).unwrap();
    let qs = parse_q_range("0:0.3:3").unwrap();
    let (rep, surfaces) = deform_sweep(&r, &qs).unwrap();
    assert_eq!(rep.entries.len(), 3);
    assert_eq!(surfaces.len(), 3);
    for e in &rep.entries {
        assert!(e.pass, "{e:?}");
        assert!((e.k_mean - e.k_expected).abs() <= 1e-9 * e.k_expected.abs());
    }
    assert!(rep.passed);
}

#[test]
fn validate_names_the_bad_entry() {
    let mut cfg = small("umbilic", 11);
    cfg.potential = PotentialConfig::Custom {
        entries: vec![
            EntryConfig { row: 1, col: 2, power: -1, expr: "1".into() },
            EntryConfig { row: 2, col: 2, power: -1, expr: "z".into() },
        ],
        poles: vec![],
        hint: RegimeHint::Either,
    };
    let e = validate(&cfg).unwrap_err();
    assert_eq!(e.code(), "ERR_CONFIG");
    let msg = e.to_string();
    assert!(msg.contains("(2,2)") || msg.contains("(2, 2)"), "{msg}");
}

#[test]
fn q_range_edges() {
    assert_eq!(parse_q_range("0.5:0.5:1").unwrap(), vec![0.5]);
    assert_eq!(parse_q_range("-1:1:3").unwrap(), vec![-1.0, 0.0, 1.0]);
    for bad in ["", "1:2", "1:2:0", "a:b:3", "0:1:1", "0:inf:3", "0:1:100000"] {
        assert_eq!(parse_q_range(bad).unwrap_err().code(), "ERR_CONFIG", "{bad}");
    }
}

fn arb_potential() -> impl Strategy<Value = PotentialConfig> {
    let root = prop_oneof![Just(RootChoice::Larger), Just(RootChoice::Other)];
    prop_oneof![
        Just(PotentialConfig::Umbilic),
        (0.01f64..2.0, root.clone()).prop_map(|(a, root)| PotentialConfig::Revolution { a, root }),
        (1u32..6).prop_map(|k| PotentialConfig::Radial { k }),
        (0.01f64..2.0, 0.5f64..10.0).prop_map(|(a, period)| PotentialConfig::Cylinder { h: "exp(1i*z)".into(), period, a }),
        (0.01f64..0.5, root).prop_map(|(a, root)| PotentialConfig::Trinoid { a, root }),
        (1u8..=2, 1u8..=2, -3i32..=3, prop::sample::select(vec!["z", "1", "exp(z)", "z^2 + 1i", "sin(2*z)/3"])).prop_map(|(row, col, power, expr)| PotentialConfig::Custom {
            entries: vec![EntryConfig { row, col, power, expr: expr.to_string() }],
            poles: vec![[0.5, -0.25]],
            hint: RegimeHint::Either,
        }),
    ]
}

prop_compose! {
    fn arb_config()(
        regime in prop_oneof![Just(Regime::HLess1), Just(Regime::HGreater1)],
        q in 0.01f64..3.0,
        theta in -3.0f64..3.0,
        truncation in 1usize..64,
        fourth in any::<bool>(),
        (nx, i0) in (2usize..500).prop_flat_map(|n| (Just(n), 0..n)),
        (ny, j0) in (2usize..500).prop_flat_map(|n| (Just(n), 0..n)),
        hx in (1u32..64).prop_map(|k| k as f64 / 256.0),
        hy in (1u32..64).prop_map(|k| k as f64 / 256.0),
        potential in arb_potential(),
        model in prop_oneof![Just(Model::PoincareBall), Just(Model::UpperHalfSpace), Just(Model::Minkowski)],
        obj in any::<bool>(),
        report in proptest::option::of("[a-z]{1,8}\\.json"),
        timings in any::<bool>(),
    ) -> RunConfig {
        RunConfig {
            schema: CONFIG_SCHEMA,
            surface: SurfaceConfig {
                regime, q, theta, truncation,
                fd_order: if fourth { FdOrderName::Fourth } else { FdOrderName::Second },
                tolerances: Tolerances::default(),
            },
            // the basepoint sits on node (i0, j0)
            domain: DomainConfig {
                re: [-(i0 as f64) * hx, (nx - 1 - i0) as f64 * hx],
                im: [-(j0 as f64) * hy, (ny - 1 - j0) as f64 * hy],
                nx,
                ny,
                basepoint: [0.0, 0.0],
            },
            potential,
            output: OutputConfig {
                mesh: Some("out.ply".into()),
                format: if obj { MeshFormat::Obj } else { MeshFormat::Ply },
                model,
                report,
                singular_curves: None,
                timings,
            },
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn config_survives_a_toml_round_trip(cfg in arb_config()) {
        let text = cfg.to_toml();
        let back = RunConfig::parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn config_parser_never_panics(s in "[a-z_=\\[\\]\\.0-9\" \n-]{0,120}") {
        let _ = RunConfig::parse(&s);
    }
}
