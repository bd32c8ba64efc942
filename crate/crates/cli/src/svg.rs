//! Vector drawings of realized trusses and of fronts in objective space.

use std::fmt::Write;

use trussfd::energy;
use trussfd::{GroundStructure, TrussDesign};

/// Largest member stroke as a fraction of the drawing span.
pub const MAX_STROKE_FRACTION: f64 = 0.02;

/// Axis-aligned region in model or objective coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Window {
    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        (self.xmin..=self.xmax).contains(&p[0]) && (self.ymin..=self.ymax).contains(&p[1])
    }

    fn around(points: impl IntoIterator<Item = [f64; 2]>) -> Option<Window> {
        let mut w: Option<Window> = None;
        for p in points {
            w = Some(match w {
                None => Window {
                    xmin: p[0],
                    xmax: p[0],
                    ymin: p[1],
                    ymax: p[1],
                },
                Some(w) => Window {
                    xmin: w.xmin.min(p[0]),
                    xmax: w.xmax.max(p[0]),
                    ymin: w.ymin.min(p[1]),
                    ymax: w.ymax.max(p[1]),
                },
            });
        }
        w
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Members whose `|q̃|` clears the topology threshold and whose area is positive.
pub fn drawn_members(design: &TrussDesign) -> Vec<usize> {
    energy::retained_members(&design.q_tilde)
        .into_iter()
        .enumerate()
        .filter(|&(k, keep)| keep && design.areas[k] > 0.0)
        .map(|(k, _)| k)
        .collect()
}

/// Span of the region the structure occupies: the larger side of the
/// bounding box of drawn members, supports and loaded nodes.
pub fn drawing_span(g: &GroundStructure, design: &TrussDesign) -> f64 {
    let b = structure_box(g, design);
    let s = b.width().max(b.height());
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn node(design: &TrussDesign, i: usize) -> [f64; 2] {
    [design.geometry.x[i], design.geometry.y[i]]
}

fn structure_box(g: &GroundStructure, design: &TrussDesign) -> Window {
    let mut nodes: Vec<usize> = Vec::new();
    for k in drawn_members(design) {
        let m = g.members()[k];
        nodes.push(m.a.0);
        nodes.push(m.b.0);
    }
    nodes.extend(g.supports().iter().map(|s| s.node.0));
    nodes.extend(g.loads().iter().map(|l| l.node.0));
    Window::around(nodes.into_iter().map(|i| node(design, i))).unwrap_or(Window {
        xmin: 0.0,
        xmax: 1.0,
        ymin: 0.0,
        ymax: 1.0,
    })
}

/// SVG drawing of a realized truss. Member stroke widths are proportional to
/// the areas, the largest being [`MAX_STROKE_FRACTION`] of the span. Model
/// `y` points up. `window` defaults to the structure's bounding box with a
/// margin for the glyphs.
pub fn truss_svg(g: &GroundStructure, design: &TrussDesign, window: Option<Window>) -> String {
    let span = drawing_span(g, design);
    let glyph = 0.04 * span;
    let view = window.unwrap_or_else(|| {
        let b = structure_box(g, design);
        let pad = 0.25 * span;
        Window {
            xmin: b.xmin - pad,
            xmax: b.xmax + pad,
            ymin: b.ymin - pad,
            ymax: b.ymax + pad,
        }
    });
    let drawn = drawn_members(design);
    let a_max = drawn.iter().map(|&k| design.areas[k]).fold(0.0_f64, f64::max);
    let k_scale = if a_max > 0.0 { MAX_STROKE_FRACTION * span / a_max } else { 0.0 };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="{}" height="{}">"#,
        num(view.xmin),
        num(-view.ymax),
        num(view.width()),
        num(view.height()),
        num(600.0),
        num(600.0 * view.height() / view.width()),
    );
    let _ = writeln!(s, r#"<g id="members" stroke="black" stroke-linecap="round">"#);
    for &k in &drawn {
        let m = g.members()[k];
        let (p, q) = (node(design, m.a.0), node(design, m.b.0));
        let colour = if design.q_tilde[k] < 0.0 { "#1f4e9c" } else { "#b22222" };
        let _ = writeln!(
            s,
            r#"<line class="member" data-member="{k}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{colour}" stroke-width="{}"/>"#,
            num(p[0]),
            num(-p[1]),
            num(q[0]),
            num(-q[1]),
            num(k_scale * design.areas[k]),
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="supports" fill="none" stroke="dimgray" stroke-width="{}">"#, num(0.1 * glyph));
    for sup in g.supports() {
        let p = node(design, sup.node.0);
        let kind = match (sup.fix_x, sup.fix_y) {
            (true, true) => "pin",
            (true, false) => "roller-x",
            _ => "roller-y",
        };
        let (x, y) = (p[0], -p[1]);
        let _ = writeln!(
            s,
            r#"<polygon class="support {kind}" points="{},{} {},{} {},{}"/>"#,
            num(x),
            num(y),
            num(x - glyph),
            num(y + 1.5 * glyph),
            num(x + glyph),
            num(y + 1.5 * glyph),
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="loads" stroke="darkgreen" fill="darkgreen" stroke-width="{}">"#, num(0.15 * glyph));
    for load in g.loads() {
        let norm = load.fx.hypot(load.fy);
        if norm == 0.0 {
            continue;
        }
        let (ux, uy) = (load.fx / norm, -load.fy / norm);
        let p = node(design, load.node.0);
        let (hx, hy) = (p[0], -p[1]);
        let len = 4.0 * glyph;
        let (tx, ty) = (hx - ux * len, hy - uy * len);
        let (bx, by) = (hx - ux * glyph, hy - uy * glyph);
        let (nx, ny) = (-uy * 0.5 * glyph, ux * 0.5 * glyph);
        let _ = writeln!(
            s,
            r#"<line class="load" x1="{}" y1="{}" x2="{}" y2="{}"/><polygon class="load-head" points="{},{} {},{} {},{}"/>"#,
            num(tx),
            num(ty),
            num(bx),
            num(by),
            num(hx),
            num(hy),
            num(bx + nx),
            num(by + ny),
            num(bx - nx),
            num(by - ny),
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

const PLOT_W: f64 = 480.0;
const PLOT_H: f64 = 360.0;
const LEFT: f64 = 80.0;
const TOP: f64 = 20.0;

/// Scatter plot of front points (`+`) in the `(F_x, F_y)` plane, with
/// optional reference dots. Points outside `window` are left out; the default
/// window covers everything with a 5 % margin.
pub fn front_svg(points: &[[f64; 2]], dots: &[[f64; 2]], window: Option<Window>) -> String {
    let view = window
        .or_else(|| {
            Window::around(points.iter().chain(dots).copied()).map(|b| {
                let px = 0.05 * b.width().max(f64::MIN_POSITIVE);
                let py = 0.05 * b.height().max(f64::MIN_POSITIVE);
                Window {
                    xmin: b.xmin - px,
                    xmax: b.xmax + px,
                    ymin: b.ymin - py,
                    ymax: b.ymax + py,
                }
            })
        })
        .unwrap_or(Window {
            xmin: 0.0,
            xmax: 1.0,
            ymin: 0.0,
            ymax: 1.0,
        });
    let sx = |v: f64| LEFT + PLOT_W * (v - view.xmin) / view.width();
    let sy = |v: f64| TOP + PLOT_H * (view.ymax - v) / view.height();

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {} {}" width="{}" height="{}" font-family="sans-serif" font-size="12">"#,
        num(LEFT + PLOT_W + 20.0),
        num(TOP + PLOT_H + 50.0),
        num(LEFT + PLOT_W + 20.0),
        num(TOP + PLOT_H + 50.0),
    );
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        num(LEFT),
        num(TOP),
        num(PLOT_W),
        num(PLOT_H)
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let vx = view.xmin + t * view.width();
        let vy = view.ymin + t * view.height();
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{vx:.3e}</text>"#,
            num(sx(vx)),
            num(TOP + PLOT_H + 18.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{vy:.3e}</text>"#,
            num(LEFT - 6.0),
            num(sy(vy) + 4.0)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">Fx</text>"#,
        num(LEFT + 0.5 * PLOT_W),
        num(TOP + PLOT_H + 40.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">Fy</text>"#,
        num(16.0),
        num(TOP + 0.5 * PLOT_H),
        num(16.0),
        num(TOP + 0.5 * PLOT_H)
    );
    let _ = writeln!(s, r#"<g id="front" stroke="black" stroke-width="1">"#);
    for p in points.iter().filter(|p| view.contains(**p)) {
        let (x, y) = (sx(p[0]), sy(p[1]));
        let _ = writeln!(
            s,
            r#"<path class="front-point" d="M{} {}h8M{} {}v8"/>"#,
            num(x - 4.0),
            num(y),
            num(x),
            num(y - 4.0)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="reference" fill="crimson">"#);
    for p in dots.iter().filter(|p| view.contains(**p)) {
        let _ = writeln!(
            s,
            r#"<circle class="reference-point" cx="{}" cy="{}" r="2.5"/>"#,
            num(sx(p[0])),
            num(sy(p[1]))
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}
