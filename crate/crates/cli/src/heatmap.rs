//! Self-contained SVG heatmaps for 2D grids: one rectangle per cell colored
//! on a blue-yellow-red ramp, with optional sample markers. No plotting
//! dependency, no text labels beyond the title.

const CELL: f64 = 12.0;

fn color(t: f64) -> String {
    // Piecewise-linear blue (low) -> yellow (mid) -> red (high).
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let u = t / 0.5;
        (
            (40.0 + u * (250.0 - 40.0)) as u8,
            (60.0 + u * (220.0 - 60.0)) as u8,
            (150.0 - u * 120.0) as u8,
        )
    } else {
        let u = (t - 0.5) / 0.5;
        (
            (250.0 - u * 30.0) as u8,
            (220.0 - u * 180.0) as u8,
            (30.0 + u * 10.0) as u8,
        )
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Renders `values` (row-major, second axis fastest, `res.0 * res.1` cells)
/// as an SVG heatmap. `points` are normalized [0,1]^2 locations drawn as
/// circles, e.g. the archive. The y axis points up.
pub fn render_heatmap(
    values: &[f64],
    res: (usize, usize),
    points: &[(f64, f64)],
    title: &str,
) -> String {
    assert_eq!(values.len(), res.0 * res.1, "value count must match the grid");
    let width = res.0 as f64 * CELL;
    let height = res.1 as f64 * CELL;
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n<title>{title}</title>\n"
    );
    for i0 in 0..res.0 {
        for i1 in 0..res.1 {
            let v = values[i0 * res.1 + i1];
            let fill = if v.is_finite() {
                color((v - lo) / span)
            } else {
                "#808080".to_string()
            };
            let x = i0 as f64 * CELL;
            let y = height - (i1 + 1) as f64 * CELL;
            svg.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{fill}\"/>\n"
            ));
        }
    }
    for (px, py) in points {
        let cx = px * width;
        let cy = height - py * height;
        svg.push_str(&format!(
            "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"3\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\"/>\n"
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
