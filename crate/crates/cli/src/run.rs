//! The experiments behind each CLI verb.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use trussfd::ground::ProblemFile;
use trussfd::moga::{self, TrussProblem};
use trussfd::pareto;
use trussfd::wsopt::{self, RatioDesign};
use trussfd::{FrontArchive, GroundStructure, Material, WsConfig};

use crate::config::{Manifest, RunConfig};
use crate::svg::{self, Window};

pub const SCALING: &str = "Scaling";
pub const WEIGHTED: &str = "Weighted-sum";
pub const NSGA: &str = "NSGA-III";

pub const COMPARISON_HEADER: &str = "method,r,compliance";

/// Relative Scaling/Weighted-sum gap above which a comparison is flagged.
pub const METHOD_GAP_LIMIT: f64 = 0.10;

/// One realized design: its genome, where it sits on the unscaled front and
/// its volume-normalized compliance at ratio `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub method: String,
    pub r: f64,
    pub q: Vec<f64>,
    pub fx: Option<f64>,
    pub fy: Option<f64>,
    pub compliance: f64,
    /// Aspect ratio estimated from the front slopes, for GA designs.
    pub r_est: Option<f64>,
}

/// Self-contained set of designs: enough to redraw them without the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSet {
    pub problem: ProblemFile,
    pub material: Material,
    pub volume: f64,
    pub designs: Vec<DesignRecord>,
}

impl DesignSet {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// `(F_x, F_y)` of every design that has both.
    pub fn objective_points(&self) -> Vec<[f64; 2]> {
        self.designs
            .iter()
            .filter_map(|d| Some([d.fx?, d.fy?]))
            .collect()
    }
}

fn slug(method: &str) -> &'static str {
    match method {
        SCALING => "scaling",
        WEIGHTED => "weighted",
        NSGA => "nsga",
        _ => "design",
    }
}

pub fn truss_file_name(method: &str, r: f64) -> String {
    format!("truss_{}_r{r}.svg", slug(method))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, &text)
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn record(g: &GroundStructure, material: Material, method: &str, rd: &RatioDesign, q: &[f64], r_est: Option<f64>) -> DesignRecord {
    let obj = moga::evaluate(q, g, material);
    DesignRecord {
        method: method.to_string(),
        r: rd.r,
        q: q.to_vec(),
        fx: obj.map(|o| o.fx),
        fy: obj.map(|o| o.fy),
        compliance: rd.compliance,
        r_est,
    }
}

fn draw(out: &Path, method: &str, rd: &RatioDesign) -> Result<PathBuf> {
    let path = out.join(truss_file_name(method, rd.r));
    write(&path, &svg::truss_svg(&rd.structure, &rd.design, None))?;
    Ok(path)
}

pub fn comparison_csv(rows: &[(String, f64, f64)]) -> String {
    let mut s = String::from(COMPARISON_HEADER);
    s.push('\n');
    for (method, r, c) in rows {
        let _ = writeln!(s, "{method},{r},{c:.16e}");
    }
    s
}

/// Writes `front.json` (genomes), `front.csv` and `front.svg`.
pub fn export_front(front: &FrontArchive, dots: &[[f64; 2]], out: &Path, window: Option<Window>) -> Result<usize> {
    if front.is_empty() {
        bail!("the front is empty");
    }
    prepare(out)?;
    let points = pareto::describe_front(front);
    write_json(&out.join("front.json"), front)?;
    write(&out.join("front.csv"), &pareto::front_csv(&points))?;
    let objectives: Vec<[f64; 2]> = points.iter().map(|p| p.objectives).collect();
    write(&out.join("front.svg"), &svg::front_svg(&objectives, dots, window))?;
    Ok(points.len())
}

/// Best-hypervolume front of the configured GA repetitions.
fn run_ga(cfg: &RunConfig, g: &GroundStructure, ws: &WsConfig, manifest: &mut Manifest) -> Result<FrontArchive> {
    let m = cfg.material;
    let q0 = moga::initial_force_densities(g, m).context("ground-structure force densities")?;
    let mut ga = cfg.ga_config(q0);
    ga.seed_individuals =
        wsopt::ga_seeds(g, &cfg.ga.seed_ratios, m, ws, ga.q_lower, ga.q_upper).context("computing GA seeds")?;
    let problem = TrussProblem {
        structure: g,
        material: m,
    };
    let runs = moga::run_repetitions(&problem, &ga, cfg.ga.repetitions).context("running NSGA-III")?;
    manifest.ga = Some(ga);
    let fronts: Vec<FrontArchive> = runs.into_iter().map(|r| r.front).collect();
    let best = moga::most_diverse(&fronts).ok_or_else(|| anyhow!("every GA repetition ended with an empty front"))?;
    println!(
        "NSGA-III: kept repetition {best} of {} ({} front points)",
        fronts.len(),
        fronts[best].len()
    );
    Ok(fronts.into_iter().nth(best).unwrap())
}

fn nsga_designs(
    g: &GroundStructure,
    front: &FrontArchive,
    ratios: &[f64],
    cfg: &RunConfig,
) -> Result<Vec<(DesignRecord, RatioDesign)>> {
    if ratios.is_empty() {
        return Ok(Vec::new());
    }
    let est = pareto::estimate_supported_ratios(front)
        .with_context(|| format!("{NSGA}: estimating aspect ratios from the front"))?;
    ratios
        .iter()
        .map(|&r| {
            let p = pareto::solution_for_ratio(&est.points, r)
                .ok_or_else(|| anyhow!("{NSGA} at r = {r}: no front point carries a ratio estimate"))?;
            let rd = pareto::realize_at_ratio(g, p, r, cfg.volume, cfg.material)
                .with_context(|| format!("{NSGA} at r = {r}"))?;
            Ok((record(g, cfg.material, NSGA, &rd, &p.genome, p.r_est), rd))
        })
        .collect()
}

fn ws_designs(g: &GroundStructure, method: &str, cfg: &RunConfig, ws: &WsConfig) -> Result<Vec<(DesignRecord, RatioDesign)>> {
    cfg.r_list
        .iter()
        .map(|&r| {
            let res = match method {
                SCALING => wsopt::scaling_method(g, r, cfg.volume, cfg.material, ws),
                _ => wsopt::weighted_method(g, r, cfg.volume, cfg.material, ws),
            }
            .with_context(|| format!("{method} at r = {r}"))?;
            println!(
                "{method} r = {r}: compliance {:.6} ({:?} after {} iterations)",
                res.compliance(),
                res.optimum.status,
                res.optimum.iterations
            );
            Ok((record(g, cfg.material, method, &res.realized, &res.optimum.q, None), res.realized))
        })
        .collect()
}

struct Outputs<'a> {
    cfg: &'a RunConfig,
    g: &'a GroundStructure,
    records: Vec<DesignRecord>,
}

impl Outputs<'_> {
    fn add(&mut self, designs: Vec<(DesignRecord, RatioDesign)>) -> Result<()> {
        for (rec, rd) in designs {
            draw(&self.cfg.output_dir, &rec.method, &rd)?;
            self.records.push(rec);
        }
        Ok(())
    }

    fn finish(self, manifest: &Manifest) -> Result<()> {
        let out = &self.cfg.output_dir;
        if !self.records.is_empty() {
            let rows: Vec<(String, f64, f64)> =
                self.records.iter().map(|d| (d.method.clone(), d.r, d.compliance)).collect();
            write(&out.join("comparison.csv"), &comparison_csv(&rows))?;
            let set = DesignSet {
                problem: ProblemFile::from_structure(self.g),
                material: self.cfg.material,
                volume: self.cfg.volume,
                designs: self.records,
            };
            write_json(&out.join("designs.json"), &set)?;
        }
        write_json(&out.join("manifest.json"), manifest)
    }
}

fn start(command: &str, cfg: &RunConfig) -> Result<(GroundStructure, Manifest)> {
    cfg.validate()?;
    let g = cfg.problem.build()?;
    prepare(&cfg.output_dir)?;
    let manifest = Manifest::new(command, cfg, &g);
    Ok((g, manifest))
}

/// NSGA-III over the force densities; realizes front points at each `r`.
pub fn run_moo(cfg: &RunConfig) -> Result<Manifest> {
    let (g, mut manifest) = start("moo", cfg)?;
    let ws = cfg.ws_config();
    let front = run_ga(cfg, &g, &ws, &mut manifest)?;
    export_front(&front, &[], &cfg.output_dir, None)?;
    let mut out = Outputs {
        cfg,
        g: &g,
        records: Vec::new(),
    };
    out.add(nsga_designs(&g, &front, &cfg.r_list, cfg)?)?;
    out.finish(&manifest)?;
    Ok(manifest)
}

/// Weighted-sum optimization with weights `(r², 1)` on the unscaled structure.
pub fn run_wsum(cfg: &RunConfig) -> Result<Manifest> {
    single_method("wsum", WEIGHTED, cfg)
}

/// Equal-weight optimization of the structure scaled by `(r, 1)`.
pub fn run_scaling(cfg: &RunConfig) -> Result<Manifest> {
    single_method("scaling", SCALING, cfg)
}

fn single_method(command: &str, method: &str, cfg: &RunConfig) -> Result<Manifest> {
    let (g, manifest) = start(command, cfg)?;
    let ws = cfg.ws_config();
    let mut out = Outputs {
        cfg,
        g: &g,
        records: Vec::new(),
    };
    out.add(ws_designs(&g, method, cfg, &ws)?)?;
    out.finish(&manifest)?;
    Ok(manifest)
}

/// Scaling, Weighted-sum and NSGA-III compliances for every `r`.
pub fn run_compare(cfg: &RunConfig) -> Result<Manifest> {
    let (g, mut manifest) = start("compare", cfg)?;
    let ws = cfg.ws_config();
    let scaling = ws_designs(&g, SCALING, cfg, &ws)?;
    let weighted = ws_designs(&g, WEIGHTED, cfg, &ws)?;
    for ((s, _), (w, _)) in scaling.iter().zip(&weighted) {
        let gap = (w.compliance - s.compliance).abs() / s.compliance;
        if gap > METHOD_GAP_LIMIT {
            let msg = format!(
                "r = {}: {SCALING} {:.6} and {WEIGHTED} {:.6} differ by {:.2}% (limit {:.0}%)",
                s.r,
                s.compliance,
                w.compliance,
                100.0 * gap,
                100.0 * METHOD_GAP_LIMIT
            );
            eprintln!("warning: {msg}");
            manifest.flags.push(msg);
        }
    }
    let front = run_ga(cfg, &g, &ws, &mut manifest)?;
    let nsga = nsga_designs(&g, &front, &cfg.r_list, cfg)?;
    for (rec, _) in &nsga {
        println!(
            "{NSGA} r = {}: compliance {:.6} (estimated r {:.3})",
            rec.r,
            rec.compliance,
            rec.r_est.unwrap_or(f64::NAN)
        );
    }
    let dots: Vec<[f64; 2]> = weighted.iter().filter_map(|(d, _)| Some([d.fx?, d.fy?])).collect();
    export_front(&front, &dots, &cfg.output_dir, None)?;
    let mut out = Outputs {
        cfg,
        g: &g,
        records: Vec::new(),
    };
    out.add(scaling)?;
    out.add(weighted)?;
    out.add(nsga)?;
    out.finish(&manifest)?;
    Ok(manifest)
}

/// Redraws every design of a design set.
pub fn render(designs: &Path, out: &Path, window: Option<Window>) -> Result<Vec<PathBuf>> {
    let set = DesignSet::load(designs)?;
    let g = set.problem.build().context("building the stored problem")?;
    prepare(out)?;
    set.designs
        .iter()
        .map(|d| {
            let rd = wsopt::realize_scaled(&g, &d.q, d.r, set.volume, set.material)
                .with_context(|| format!("{} at r = {}", d.method, d.r))?;
            let path = out.join(truss_file_name(&d.method, d.r));
            write(&path, &svg::truss_svg(&rd.structure, &rd.design, window))?;
            Ok(path)
        })
        .collect()
}

/// Re-exports a stored front, optionally with reference dots from a design set.
pub fn front(front_json: &Path, dots: Option<&Path>, out: &Path, window: Option<Window>) -> Result<usize> {
    let text = fs::read_to_string(front_json).with_context(|| format!("reading {}", front_json.display()))?;
    let archive: FrontArchive =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", front_json.display()))?;
    let dots = match dots {
        Some(p) => DesignSet::load(p)?.objective_points(),
        None => Vec::new(),
    };
    export_front(&archive, &dots, out, window)
}
