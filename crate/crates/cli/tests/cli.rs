use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use trussfd::ground::ProblemFile;
use trussfd::moga::FrontPoint;
use trussfd::{fea, pareto, FrontArchive, GroundStructure, Load, Material, Member, NodeId, Support};
use trussfd_cli::run::{self, DesignSet, COMPARISON_HEADER};
use trussfd_cli::svg;

fn trussfd(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trussfd"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) {
    let o = trussfd(args, out);
    assert!(
        o.status.success(),
        "trussfd {args:?} failed:\n{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

const SMALL_GA: &[&str] = &[
    "--pop", "10", "--gens", "8", "--reps", "2", "--seed", "5", "--ws-starts", "1", "--ws-iters", "40",
];

fn args<'a>(verb: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![verb];
    v.extend_from_slice(SMALL_GA);
    v.extend_from_slice(extra);
    v
}

fn manifest_without_dir(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v["config"]["output_dir"] = serde_json::Value::Null;
    v
}

#[test]
fn single_threaded_moo_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&args("moo", &["--single-thread"]), &a);
    ok(&args("moo", &["--single-thread"]), &b);
    for f in ["front.csv", "front.svg", "front.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(manifest_without_dir(&a.join("manifest.json")), manifest_without_dir(&b.join("manifest.json")));
    // the thread count changes nothing but speed
    let c = dir.path().join("c");
    ok(&args("moo", &[]), &c);
    assert_eq!(fs::read(a.join("front.csv")).unwrap(), fs::read(c.join("front.csv")).unwrap());
}

#[test]
fn front_csv_has_one_row_per_front_point_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    ok(&args("moo", &["--single-thread"]), dir.path());
    let front: FrontArchive = serde_json::from_str(&fs::read_to_string(dir.path().join("front.json")).unwrap()).unwrap();
    let text = fs::read_to_string(dir.path().join("front.csv")).unwrap();
    assert_eq!(text.lines().next(), Some(pareto::CSV_HEADER));
    let rows = pareto::parse_front_csv(&text).unwrap();
    let points = pareto::describe_front(&front);
    assert_eq!(rows.len(), points.len());
    for (i, (row, p)) in rows.iter().zip(&points).enumerate() {
        assert_eq!(row.index, i);
        assert_eq!(row.fx.to_bits(), p.fx().to_bits());
        assert_eq!(row.fy.to_bits(), p.fy().to_bits());
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["rng_seed"], 5);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["ga"]["seed_individuals"].as_array().unwrap().len(), 3);
}

fn synthetic_front(n: usize) -> FrontArchive {
    FrontArchive {
        points: (1..=n)
            .map(|i| FrontPoint {
                objectives: [i as f64, 1.0 / i as f64],
                genome: vec![i as f64],
            })
            .collect(),
    }
}

#[test]
fn exported_front_sizes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run::export_front(&synthetic_front(40), &[], dir.path(), None).unwrap(), 40);
    let text = fs::read_to_string(dir.path().join("front.csv")).unwrap();
    assert_eq!(text.lines().count(), 41);
    assert_eq!(fs::read_to_string(dir.path().join("front.svg")).unwrap().matches("front-point").count(), 40);

    run::export_front(&synthetic_front(1), &[], dir.path(), None).unwrap();
    let rows = pareto::parse_front_csv(&fs::read_to_string(dir.path().join("front.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].beta, None);

    assert!(run::export_front(&FrontArchive::default(), &[], dir.path(), None).is_err());
}

#[test]
fn front_verb_overlays_reference_dots() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src");
    run::export_front(&synthetic_front(5), &[], &src, None).unwrap();
    let g = GroundStructure::cantilever(3, 2, 3.0, 2.0).unwrap();
    let set = DesignSet {
        problem: ProblemFile::from_structure(&g),
        material: Material::default(),
        volume: 100.0,
        designs: vec![run::DesignRecord {
            method: run::WEIGHTED.into(),
            r: 1.0,
            q: vec![1.0; 29],
            fx: Some(2.5),
            fy: Some(0.5),
            compliance: 1.0,
            r_est: None,
        }],
    };
    fs::write(src.join("designs.json"), serde_json::to_string(&set).unwrap()).unwrap();
    let out = dir.path().join("out");
    let front_json = src.join("front.json");
    let dots = src.join("designs.json");
    ok(
        &["front", "--front", front_json.to_str().unwrap(), "--dots", dots.to_str().unwrap()],
        &out,
    );
    let svg = fs::read_to_string(out.join("front.svg")).unwrap();
    assert_eq!(svg.matches("front-point").count(), 5);
    assert_eq!(svg.matches("reference-point").count(), 1);
    assert_eq!(fs::read(out.join("front.csv")).unwrap(), fs::read(src.join("front.csv")).unwrap());
}

#[test]
fn render_is_byte_identical_and_matches_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    ok(&args("wsum", &["--r", "1,2.5"]), &run_dir);
    let designs = run_dir.join("designs.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["render", "--design", designs.to_str().unwrap()], &a);
    ok(&["render", "--design", designs.to_str().unwrap()], &b);
    for f in ["truss_weighted_r1.svg", "truss_weighted_r2.5.svg"] {
        let first = fs::read(run_dir.join(f)).unwrap();
        assert_eq!(first, fs::read(a.join(f)).unwrap(), "{f}");
        assert_eq!(first, fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(run_dir.join("comparison.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(COMPARISON_HEADER));
    assert_eq!(csv.lines().count(), 3);
}

fn stroke_widths(svg: &str) -> Vec<f64> {
    svg.lines()
        .filter(|l| l.contains(r#"class="member""#))
        .map(|l| {
            let rest = &l[l.find("stroke-width=\"").unwrap() + 14..];
            rest[..rest.find('"').unwrap()].parse().unwrap()
        })
        .collect()
}

#[test]
fn single_member_is_drawn_at_two_percent_of_span() {
    let g = GroundStructure::new(
        vec![[0.0, 0.0], [4.0, 0.0]],
        vec![Member::new(0, 1)],
        vec![
            Support::pin(0),
            Support {
                node: NodeId(1),
                fix_x: false,
                fix_y: true,
            },
        ],
        vec![Load {
            node: NodeId(1),
            fx: 1.0,
            fy: 0.0,
        }],
        &[],
    )
    .unwrap();
    let d = fea::realize_design(&g, &[1.0], Material::default()).unwrap();
    let text = svg::truss_svg(&g, &d, None);
    let widths = stroke_widths(&text);
    assert_eq!(widths.len(), 1);
    assert!((widths[0] - 0.02 * 4.0).abs() < 1e-6, "{}", widths[0]);
    assert_eq!(svg::drawing_span(&g, &d), 4.0);
    assert_eq!(text.matches("class=\"support pin\"").count(), 1);
    assert_eq!(text.matches("class=\"load\"").count(), 1);
    assert_eq!(text, svg::truss_svg(&g, &d, None));
}

#[test]
fn widest_member_is_two_percent_and_thin_members_are_omitted() {
    let g = GroundStructure::cantilever(3, 2, 3.0, 2.0).unwrap();
    let m = Material::default();
    let q = trussfd::wsopt::default_start(&g, m).unwrap();
    let rd = trussfd::wsopt::realize_scaled(&g, &q, 2.5, 100.0, m).unwrap();
    let text = svg::truss_svg(&rd.structure, &rd.design, None);
    let widths = stroke_widths(&text);
    let drawn = svg::drawn_members(&rd.design);
    assert_eq!(widths.len(), drawn.len());
    assert!(drawn.len() < g.member_count());
    let span = svg::drawing_span(&rd.structure, &rd.design);
    let max = widths.iter().fold(0.0_f64, |a, b| a.max(*b));
    assert!((max - 0.02 * span).abs() < 1e-6);
    // the x extent follows the 2.5 scaling of the 3 × 2 grid
    assert!((span - 7.5).abs() < 1e-9);
}

#[test]
fn empty_r_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = trussfd(&["compare", "--r"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("r list is empty"));
    let o = trussfd(&["scaling", "--r", "0.5,-1"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("positive"));
}

#[test]
fn compare_at_unit_ratio_agrees_between_scaling_and_weighted_sum() {
    let dir = tempfile::tempdir().unwrap();
    ok(&args("compare", &["--r", "1"]), dir.path());
    let csv = fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let methods: Vec<&str> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(methods, [run::SCALING, run::WEIGHTED, run::NSGA]);
    let c: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!((c[0] - c[1]).abs() <= 1e-9 * c[0]);
    assert!(c[2] > 0.0);
    for f in ["truss_scaling_r1.svg", "truss_weighted_r1.svg", "truss_nsga_r1.svg", "front.csv", "front.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["flags"].as_array().unwrap().is_empty());
}

#[test]
fn problem_file_drives_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let g = GroundStructure::cantilever(2, 1, 2.0, 1.0).unwrap();
    let path = dir.path().join("problem.toml");
    fs::write(&path, ProblemFile::from_structure(&g).to_toml()).unwrap();
    let out = dir.path().join("out");
    ok(&args("scaling", &["--problem", path.to_str().unwrap(), "--r", "1.5"]), &out);
    let set = DesignSet::load(&out.join("designs.json")).unwrap();
    assert_eq!(set.problem.build().unwrap(), g);
    assert_eq!(set.designs.len(), 1);
    assert_eq!(set.designs[0].q.len(), g.member_count());

    fs::write(&path, "nodes = [[0.0, 0.0]]\nbogus = 1\n").unwrap();
    let o = trussfd(&["scaling", "--problem", path.to_str().unwrap()], &out);
    assert!(!o.status.success());
}
