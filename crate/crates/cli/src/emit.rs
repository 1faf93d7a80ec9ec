//! Report files: `report.json`, one `<measure>.csv` per measure and, on
//! request, one `<series>.svg` per convergence series.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hyperwalk::report::{ExperimentReport, Series};

pub fn emit(report: &ExperimentReport, dir: &Path, plots: bool) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report.to_json())?;
    for m in &report.measures {
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", m.name)))?;
        w.write_record(["key", "mass"])?;
        for (k, v) in &m.entries {
            w.write_record([k.as_str(), &v.to_string()])?;
        }
        w.flush()?;
    }
    if plots {
        for s in &report.series {
            fs::write(dir.join(format!("{}.svg", s.name)), svg(s))?;
        }
    }
    Ok(())
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

/// Line plot with a logarithmic x axis.
fn svg(s: &Series) -> String {
    let pts: Vec<(f64, f64)> = s
        .x
        .iter()
        .zip(&s.y)
        .filter(|(x, y)| **x > 0.0 && y.is_finite())
        .map(|(x, y)| (x.log10(), *y))
        .collect();
    let (x0, x1) = bounds(pts.iter().map(|p| p.0));
    let (y0, y1) = bounds(pts.iter().map(|p| p.1).chain([0.0]));
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    let _ = writeln!(
        out,
        "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n<text x=\"{}\" y=\"20\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        s.name
    );
    let _ = writeln!(
        out,
        "<line x1=\"{PAD}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{b}\" stroke=\"black\"/>",
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{} (log scale)</text>",
        W / 2.0,
        H - 12.0,
        s.x_label
    );
    let _ = writeln!(
        out,
        "<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">{}</text>",
        H / 2.0,
        H / 2.0,
        s.y_label
    );
    for (v, label) in [(y0, y0), (y1, y1)] {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{label:.3}</text>",
            PAD - 4.0,
            py(v) + 4.0
        );
    }
    for (v, label) in [(x0, 10f64.powf(x0)), (x1, 10f64.powf(x1))] {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{label:.0}</text>",
            px(v),
            H - PAD + 16.0
        );
    }
    let poly: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
    let _ = writeln!(
        out,
        "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>",
        poly.join(" ")
    );
    for &(x, y) in &pts {
        let _ = writeln!(out, "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"steelblue\"/>", px(x), py(y));
    }
    out.push_str("</svg>\n");
    out
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}
