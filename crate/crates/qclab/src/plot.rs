//! SVG plots of report series.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::report::{Report, Series};

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("drawing failed: {0}")]
    Draw(String),
}

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

fn draw_err<E: std::fmt::Display>(e: E) -> PlotError {
    PlotError::Draw(e.to_string())
}

fn axis_value(v: f64, log: bool) -> Option<f64> {
    if !v.is_finite() {
        return None;
    }
    if log {
        (v > 0.0).then(|| v.log10())
    } else {
        Some(v)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// One chart per group of series sharing axis labels and scales.
fn render_svg(title: &str, group: &[&Series]) -> Result<String, PlotError> {
    let first = group[0];
    let (lx, ly) = (first.log_x, first.log_y);
    let pts: Vec<Vec<(f64, f64)>> = group
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter_map(|&(x, y)| Some((axis_value(x, lx)?, axis_value(y, ly)?)))
                .collect()
        })
        .collect();
    let all: Vec<&(f64, f64)> = pts.iter().flatten().collect();
    let (x0, x1) = padded(
        all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = padded(
        all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    let label = |name: &str, log: bool| if log { format!("log10 {name}") } else { name.to_string() };
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (640, 420)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(56)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(draw_err)?;
        chart
            .configure_mesh()
            .x_desc(label(&first.x_label, lx))
            .y_desc(label(&first.y_label, ly))
            .draw()
            .map_err(draw_err)?;
        for (k, (s, p)) in group.iter().zip(&pts).enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            chart
                .draw_series(LineSeries::new(p.iter().copied(), color.stroke_width(2)))
                .map_err(draw_err)?
                .label(s.name.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
            chart
                .draw_series(p.iter().map(|&q| Circle::new(q, 3, color.filled())))
                .map_err(draw_err)?;
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(draw_err)?;
        root.present().map_err(draw_err)?;
    }
    Ok(svg)
}

/// SVG documents for a report, one per axis group; empty if nothing plots.
pub fn render(report: &Report) -> Result<Vec<(String, String)>, PlotError> {
    let mut groups: Vec<Vec<&Series>> = Vec::new();
    for s in report.series.iter().filter(|s| !s.points.is_empty()) {
        let same = |g: &Vec<&Series>| {
            let f = g[0];
            f.x_label == s.x_label && f.y_label == s.y_label && f.log_x == s.log_x && f.log_y == s.log_y
        };
        match groups.iter_mut().find(|g| same(g)) {
            Some(g) => g.push(s),
            None => groups.push(vec![s]),
        }
    }
    let many = groups.len() > 1;
    groups
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let name = if many { format!("{}-{}", report.experiment, k + 1) } else { report.experiment.clone() };
            Ok((name.clone(), render_svg(&name, g)?))
        })
        .collect()
}

/// Writes plots/<name>.svg next to the report directory `dir`.
pub fn emit_plots(report: &Report, dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let docs = render(report)?;
    if docs.is_empty() {
        return Ok(Vec::new());
    }
    let plots = dir.join("plots");
    std::fs::create_dir_all(&plots)?;
    let mut written = Vec::new();
    for (name, svg) in docs {
        let path = plots.join(format!("{name}.svg"));
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, ExperimentKind};

    fn report(series: Vec<Series>) -> Report {
        Report::new(ExperimentConfig::for_kind(ExperimentKind::IteratesGrowth), vec![], series, vec![])
    }

    fn curve(name: &str, log: bool) -> Series {
        Series {
            name: name.into(),
            x_label: "m".into(),
            y_label: "norm".into(),
            log_x: log,
            log_y: log,
            points: vec![(1.0, 1.0), (2.0, 0.7), (4.0, 0.4), (8.0, -1.0)],
        }
    }

    #[test]
    fn empty_report_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_plots(&report(vec![]), dir.path()).unwrap().is_empty());
        assert!(!dir.path().join("plots").exists());
    }

    #[test]
    fn groups_by_axes_and_is_deterministic() {
        let r = report(vec![curve("a", true), curve("b", true), curve("c", false)]);
        let docs = render(&r).unwrap();
        assert_eq!(docs.len(), 2);
        assert!(docs[0].1.starts_with("<svg"));
        assert_eq!(render(&r).unwrap(), docs);
        let one = render(&report(vec![curve("probe", true)])).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].0, "iterates-growth");
    }
}
