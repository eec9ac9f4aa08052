//! Minimal self-contained SVG emitters: a log-log scatter for
//! condition-number sweeps and a binned heat grid for pairing tables.

use crate::kernels::EPS;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    /// (kappa, value) pairs; nonpositive entries are skipped on the log axes.
    pub points: Vec<(f64, f64)>,
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Log-log scatter of stability values against condition number, with
/// reference lines at eps, eps*kappa, and eps*kappa^2.
pub fn scatter_svg(title: &str, series: &[Series]) -> String {
    let mut xs: Vec<f64> = vec![];
    let mut ys: Vec<f64> = vec![];
    for s in series {
        for &(k, v) in &s.points {
            if k > 0.0 && k.is_finite() {
                xs.push(k.log10());
            }
            if v > 0.0 && v.is_finite() {
                ys.push(v.log10());
            }
        }
    }
    let (x_lo, x_hi) = span(&xs, 0.0, 8.0);
    // Keep the machine-precision reference visible.
    let (y_lo, y_hi) = span(&ys, EPS.log10() - 1.0, 1.0);
    let y_lo = y_lo.min(EPS.log10() - 1.0);

    let px = |lx: f64| MARGIN_L + (lx - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |ly: f64| HEIGHT - MARGIN_B - (ly - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut svg = header(title);
    svg.push_str(&axes(x_lo, x_hi, y_lo, y_hi, &px, &py, "kappa", "value"));

    // Reference lines eps * kappa^d for d = 0, 1, 2.
    for (d, dash) in [(0.0, "2,2"), (1.0, "6,3"), (2.0, "1,4")] {
        let y1 = EPS.log10() + d * x_lo;
        let y2 = EPS.log10() + d * x_hi;
        svg.push_str(&format!(
            "<line class=\"ref\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999999\" stroke-dasharray=\"{}\"/>\n",
            fmt(px(x_lo)),
            fmt(py(y1.clamp(y_lo, y_hi))),
            fmt(px(x_hi)),
            fmt(py(y2.clamp(y_lo, y_hi))),
            dash
        ));
    }

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        for &(k, v) in &s.points {
            if !(k > 0.0 && v > 0.0 && k.is_finite() && v.is_finite()) {
                continue;
            }
            let (cx, cy) = (px(k.log10()), py(v.log10().clamp(y_lo, y_hi)));
            if path.is_empty() {
                path.push_str(&format!("M {} {}", fmt(cx), fmt(cy)));
            } else {
                path.push_str(&format!(" L {} {}", fmt(cx), fmt(cy)));
            }
            svg.push_str(&format!(
                "<circle class=\"marker\" cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>\n",
                fmt(cx),
                fmt(cy),
                color
            ));
        }
        if !path.is_empty() {
            svg.push_str(&format!(
                "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1\"/>\n"
            ));
        }
        // Legend entry.
        let ly = MARGIN_T + 16.0 * i as f64;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n<text class=\"legend\" x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>\n",
            fmt(WIDTH - MARGIN_R + 10.0),
            fmt(ly),
            color,
            fmt(WIDTH - MARGIN_R + 25.0),
            fmt(ly + 9.0),
            escape(&s.label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Heat grid with log10 value binning; NaN cells are gray.
pub fn heat_svg(
    title: &str,
    row_labels: &[String],
    col_labels: &[String],
    values: &[Vec<f64>],
) -> String {
    let cell_w = (WIDTH - MARGIN_L - 20.0) / col_labels.len().max(1) as f64;
    let cell_h = (HEIGHT - MARGIN_T - MARGIN_B) / row_labels.len().max(1) as f64;
    let mut svg = header(title);
    for (i, rl) in row_labels.iter().enumerate() {
        let y0 = MARGIN_T + i as f64 * cell_h;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
            fmt(MARGIN_L - 4.0),
            fmt(y0 + cell_h / 2.0 + 3.0),
            escape(rl)
        ));
        for (j, v) in values[i].iter().enumerate() {
            let x0 = MARGIN_L + j as f64 * cell_w;
            let color = bin_color(*v);
            svg.push_str(&format!(
                "<rect class=\"cell\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#ffffff\"><title>{}</title></rect>\n",
                fmt(x0),
                fmt(y0),
                fmt(cell_w),
                fmt(cell_h),
                color,
                super::output::format_value(*v)
            ));
        }
    }
    for (j, cl) in col_labels.iter().enumerate() {
        let x0 = MARGIN_L + (j as f64 + 0.5) * cell_w;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
            fmt(x0),
            fmt(HEIGHT - MARGIN_B + 14.0),
            escape(cl)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Map log10(v) in [-17, 1] onto a blue-to-red ramp.
fn bin_color(v: f64) -> &'static str {
    if !v.is_finite() {
        return "#aaaaaa";
    }
    let lv = if v <= 0.0 { -17.0 } else { v.log10().clamp(-17.0, 1.0) };
    const RAMP: [&str; 9] = [
        "#08306b", "#2171b5", "#6baed6", "#c6dbef", "#fdd0a2", "#fdae6b", "#f16913", "#d94801",
        "#7f2704",
    ];
    let bin = ((lv + 17.0) / 18.0 * (RAMP.len() as f64 - 1.0)).round() as usize;
    RAMP[bin.min(RAMP.len() - 1)]
}

fn span(values: &[f64], default_lo: f64, default_hi: f64) -> (f64, f64) {
    if values.is_empty() {
        return (default_lo, default_hi);
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if (hi - lo).abs() < 1e-9 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo - 0.3, hi + 0.3)
    }
}

fn header(title: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n<text x=\"{}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
        fmt(WIDTH / 2.0),
        escape(title)
    )
}

fn axes(
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
    px: &dyn Fn(f64) -> f64,
    py: &dyn Fn(f64) -> f64,
    x_name: &str,
    y_name: &str,
) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>\n",
        fmt(px(x_lo)),
        fmt(py(y_lo)),
        fmt(px(x_hi)),
        fmt(py(y_lo))
    ));
    s.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>\n",
        fmt(px(x_lo)),
        fmt(py(y_lo)),
        fmt(px(x_lo)),
        fmt(py(y_hi))
    ));
    let mut tick = x_lo.ceil();
    while tick <= x_hi {
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">1e{}</text>\n",
            fmt(px(tick)),
            fmt(py(y_lo) + 16.0),
            tick as i64
        ));
        tick += 1.0;
    }
    let mut tick = y_lo.ceil();
    while tick <= y_hi {
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">1e{}</text>\n",
            fmt(px(x_lo) - 6.0),
            fmt(py(tick) + 3.0),
            tick as i64
        ));
        tick += 2.0;
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        fmt((px(x_lo) + px(x_hi)) / 2.0),
        fmt(py(y_lo) + 40.0),
        escape(x_name)
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">{}</text>\n",
        fmt((py(y_lo) + py(y_hi)) / 2.0),
        fmt((py(y_lo) + py(y_hi)) / 2.0),
        escape(y_name)
    ));
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_scatter_is_valid() {
        let s = scatter_svg(
            "demo",
            &[Series {
                label: "BCGS/CGS".into(),
                points: vec![(1e4, 1e-12)],
            }],
        );
        assert!(s.starts_with("<?xml"));
        assert!(s.ends_with("</svg>\n"));
        assert_eq!(s.matches("class=\"marker\"").count(), 1);
    }

    #[test]
    fn legend_has_one_entry_per_series() {
        let mk = |label: &str| Series {
            label: label.into(),
            points: vec![(1e2, 1e-10), (1e4, 1e-8)],
        };
        let s = scatter_svg("demo", &[mk("a"), mk("b")]);
        assert_eq!(s.matches("class=\"legend\"").count(), 2);
        assert_eq!(s.matches("class=\"marker\"").count(), 4);
    }

    #[test]
    fn marker_count_matches_grid() {
        let series: Vec<Series> = (0..3)
            .map(|i| Series {
                label: format!("v{i}"),
                points: (1..=16).map(|t| (10f64.powi(t), 1e-15 * t as f64)).collect(),
            })
            .collect();
        let s = scatter_svg("demo", &series);
        assert_eq!(s.matches("class=\"marker\"").count(), 48);
    }

    #[test]
    fn heat_grid_cells_and_nan() {
        let s = heat_svg(
            "grid",
            &["BCGS".into(), "BMGS".into()],
            &["CGS".into(), "MGS".into(), "HouseQR".into()],
            &[vec![1e-14, 1e-2, f64::NAN], vec![1e-15, 1e-15, 1.0]],
        );
        assert_eq!(s.matches("class=\"cell\"").count(), 6);
        assert!(s.contains("#aaaaaa"));
    }

    #[test]
    fn deterministic_output() {
        let series = [Series {
            label: "x".into(),
            points: vec![(1e3, 1e-9)],
        }];
        assert_eq!(scatter_svg("t", &series), scatter_svg("t", &series));
    }
}
