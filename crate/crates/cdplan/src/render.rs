//! SVG rendering of run reports.
//!
//! The drawing is produced entirely from the serialized report (scenario
//! echo, trajectory, displaced shapes), so a scene can be re-rendered from a
//! saved `report.json` alone. All coordinates are written with fixed
//! four-decimal formatting, which makes the output byte-for-byte
//! reproducible across runs.
//!
//! World coordinates use y-up; SVG uses y-down. Points are flipped
//! explicitly (`sy = min_y + max_y - y`) instead of with a transform so the
//! emitted numbers stay human-readable.

use crate::dynamics::RobotState;
use crate::pipeline::RunReport;
use crate::scenario::{Scenario, ScenarioError, ShapeDoc};

/// Pixels per world unit in the top-level width/height attributes.
const PIXELS_PER_UNIT: f64 = 60.0;
/// Padding around the drawn extent when no domain is given (world units).
const BBOX_MARGIN: f64 = 0.5;

struct Frame {
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
}

impl Frame {
    fn flip_y(&self, y: f64) -> f64 {
        self.min_y + self.max_y - y
    }

    fn include(&mut self, x: f64, y: f64) {
        self.min_x = self.min_x.min(x);
        self.max_x = self.max_x.max(x);
        self.min_y = self.min_y.min(y);
        self.max_y = self.max_y.max(y);
    }

    fn include_shape(&mut self, shape: &ShapeDoc) {
        match shape {
            ShapeDoc::Circle(c) => {
                self.include(c.cx - c.r, c.cy - c.r);
                self.include(c.cx + c.r, c.cy + c.r);
            }
            ShapeDoc::Polygon(vs) => {
                for v in vs {
                    self.include(v[0], v[1]);
                }
            }
        }
    }
}

/// Fixed-precision coordinate formatting; normalizes `-0.0000` to `0.0000`.
fn fmt(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}

/// Render a run report as a standalone SVG document.
pub fn render_svg(report: &RunReport) -> Result<String, ScenarioError> {
    let scenario = Scenario::from_doc(report.scenario.clone())?;
    let frame = compute_frame(report);
    let w = frame.max_x - frame.min_x;
    let h = frame.max_y - frame.min_y;

    let mut out = String::with_capacity(16 * 1024);
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"{} {} {} {}\">\n",
        (w * PIXELS_PER_UNIT).round() as i64,
        (h * PIXELS_PER_UNIT).round() as i64,
        fmt(frame.min_x),
        fmt(frame.min_y),
        fmt(w),
        fmt(h),
    ));
    out.push_str(
        "<style>\n\
         .domain { fill: none; stroke: #444444; stroke-width: 0.03; }\n\
         .obstacle { fill: #c8c8c8; stroke: #808080; stroke-width: 0.02; }\n\
         .displaced { fill: #66d9d9; fill-opacity: 0.5; stroke: #009999; stroke-width: 0.03; }\n\
         .trajectory { fill: none; stroke: #2255cc; stroke-width: 0.04; }\n\
         .robot { fill: none; stroke: #555555; stroke-width: 0.02; stroke-dasharray: 0.08 0.05; }\n\
         .start { fill: #22aa22; }\n\
         .goal { fill: #cc2222; }\n\
         </style>\n",
    );

    if let Some(d) = &report.scenario.domain {
        out.push_str(&format!(
            "<rect class=\"domain\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>\n",
            fmt(d.xmin),
            fmt(frame.flip_y(d.ymax)),
            fmt(d.xmax - d.xmin),
            fmt(d.ymax - d.ymin),
        ));
    }

    // obstacles at their original poses
    for ob in &scenario.obstacles {
        push_shape(&mut out, &frame, &ShapeDoc::from(&ob.shape), "obstacle", &ob.id);
    }
    // displaced poses on top
    for d in &report.displacement {
        if d.moved {
            push_shape(&mut out, &frame, &d.after, "displaced", &d.id);
        }
    }

    // robot footprints at the start and final poses
    if let Some(first) = report.plan.states.first() {
        push_footprint(&mut out, &frame, &scenario, first, "robot robot-start");
    }
    if report.plan.states.len() > 1 {
        let last = report.plan.states.last().unwrap();
        push_footprint(&mut out, &frame, &scenario, last, "robot robot-goal");
    }

    if report.plan.states.len() > 1 {
        out.push_str("<polyline class=\"trajectory\" points=\"");
        for (i, s) in report.plan.states.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{},{}", fmt(s[0]), fmt(frame.flip_y(s[1]))));
        }
        out.push_str("\"/>\n");
    }

    let start = &report.scenario.robot.start;
    let goal = &report.scenario.robot.goal;
    out.push_str(&format!(
        "<circle class=\"start\" cx=\"{}\" cy=\"{}\" r=\"0.1\"/>\n",
        fmt(start[0]),
        fmt(frame.flip_y(start[1]))
    ));
    out.push_str(&format!(
        "<circle class=\"goal\" cx=\"{}\" cy=\"{}\" r=\"0.1\"/>\n",
        fmt(goal[0]),
        fmt(frame.flip_y(goal[1]))
    ));

    out.push_str("</svg>\n");
    Ok(out)
}

fn compute_frame(report: &RunReport) -> Frame {
    if let Some(d) = &report.scenario.domain {
        return Frame {
            min_x: d.xmin - 0.2,
            min_y: d.ymin - 0.2,
            max_x: d.xmax + 0.2,
            max_y: d.ymax + 0.2,
        };
    }
    let mut frame = Frame {
        min_x: f64::INFINITY,
        min_y: f64::INFINITY,
        max_x: f64::NEG_INFINITY,
        max_y: f64::NEG_INFINITY,
    };
    for s in &report.plan.states {
        frame.include(s[0], s[1]);
    }
    frame.include(report.scenario.robot.start[0], report.scenario.robot.start[1]);
    frame.include(report.scenario.robot.goal[0], report.scenario.robot.goal[1]);
    for ob in &report.scenario.obstacles {
        if let Some(c) = &ob.circle {
            frame.include_shape(&ShapeDoc::Circle(*c));
        }
        if !ob.polygon.is_empty() {
            frame.include_shape(&ShapeDoc::Polygon(ob.polygon.clone()));
        }
    }
    for d in &report.displacement {
        frame.include_shape(&d.after);
    }
    frame.min_x -= BBOX_MARGIN;
    frame.min_y -= BBOX_MARGIN;
    frame.max_x += BBOX_MARGIN;
    frame.max_y += BBOX_MARGIN;
    frame
}

fn push_shape(out: &mut String, frame: &Frame, shape: &ShapeDoc, class: &str, id: &str) {
    match shape {
        ShapeDoc::Circle(c) => {
            out.push_str(&format!(
                "<circle class=\"{class}\" data-id=\"{id}\" cx=\"{}\" cy=\"{}\" r=\"{}\"/>\n",
                fmt(c.cx),
                fmt(frame.flip_y(c.cy)),
                fmt(c.r)
            ));
        }
        ShapeDoc::Polygon(vs) => {
            out.push_str(&format!("<polygon class=\"{class}\" data-id=\"{id}\" points=\""));
            for (i, v) in vs.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(&format!("{},{}", fmt(v[0]), fmt(frame.flip_y(v[1]))));
            }
            out.push_str("\"/>\n");
        }
    }
}

fn push_footprint(
    out: &mut String,
    frame: &Frame,
    scenario: &Scenario,
    pose: &[f64; 3],
    class: &str,
) {
    let state = RobotState::new(pose[0], pose[1], pose[2]);
    for shape in scenario.body.world_shapes(&state) {
        let doc = ShapeDoc::from(&shape);
        match &doc {
            ShapeDoc::Circle(c) => {
                out.push_str(&format!(
                    "<circle class=\"{class}\" cx=\"{}\" cy=\"{}\" r=\"{}\"/>\n",
                    fmt(c.cx),
                    fmt(frame.flip_y(c.cy)),
                    fmt(c.r)
                ));
            }
            ShapeDoc::Polygon(vs) => {
                out.push_str(&format!("<polygon class=\"{class}\" points=\""));
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    out.push_str(&format!("{},{}", fmt(v[0]), fmt(frame.flip_y(v[1]))));
                }
                out.push_str("\"/>\n");
            }
        }
    }
}
