//! Minimal SVG heatmaps for flow matrices. Linear white-to-red scale for
//! counts and rates; diverging blue-white-red scale centered at 1 for the
//! normalized-volume and density-ratio matrices; masked cells in grey.

use echoflow_core::flows::{Cell, FlowMatrix, MatrixKind};

const CELL: usize = 18;
const MARGIN: usize = 46;

fn lerp(a: u8, b: u8, t: f64) -> u8 {
    (a as f64 + (b as f64 - a as f64) * t.clamp(0.0, 1.0)).round() as u8
}

fn linear_color(t: f64) -> (u8, u8, u8) {
    // white -> deep red
    (lerp(255, 178, t), lerp(255, 24, t), lerp(255, 43, t))
}

fn diverging_color(log_ratio: f64, span: f64) -> (u8, u8, u8) {
    // blue (below 1) -> white (1) -> red (above 1)
    let t = (log_ratio / span).clamp(-1.0, 1.0);
    if t < 0.0 {
        let t = -t;
        (lerp(255, 33, t), lerp(255, 102, t), lerp(255, 172, t))
    } else {
        let (r, g, b) = linear_color(t);
        (r, g, b)
    }
}

pub fn heatmap(matrix: &FlowMatrix) -> String {
    let n = matrix.size();
    let size = MARGIN + n * CELL + 4;
    let diverging = matches!(
        matrix.kind(),
        MatrixKind::Normalized | MatrixKind::DensityRatio
    );

    let mut max_val: f64 = 0.0;
    let mut max_abs_log: f64 = 1.0;
    for r in 0..n {
        for c in 0..n {
            if let Cell::Val(v) = matrix.get(r, c) {
                max_val = max_val.max(v);
                if v > 0.0 {
                    max_abs_log = max_abs_log.max(v.log2().abs());
                }
            }
        }
    }

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" \
         font-family=\"monospace\" font-size=\"9\">\n"
    ));
    out.push_str(&format!(
        "<title>{} flow matrix; rows import from columns</title>\n",
        matrix.kind().as_str()
    ));
    for (i, cc) in matrix.countries().iter().enumerate() {
        let pos = MARGIN + i * CELL + CELL / 2;
        out.push_str(&format!(
            "<text x=\"{pos}\" y=\"{}\" text-anchor=\"middle\">{cc}</text>\n",
            MARGIN - 6
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{cc}</text>\n",
            MARGIN - 6,
            pos + 3
        ));
    }
    for r in 0..n {
        for c in 0..n {
            let (red, green, blue) = match matrix.get(r, c) {
                Cell::Masked => (200, 200, 200),
                Cell::Infinite => (103, 0, 13),
                Cell::Val(v) => {
                    if diverging {
                        let log = if v > 0.0 { v.log2() } else { -max_abs_log };
                        diverging_color(log, max_abs_log)
                    } else if max_val > 0.0 {
                        linear_color(v / max_val)
                    } else {
                        (255, 255, 255)
                    }
                }
            };
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{CELL}\" height=\"{CELL}\" \
                 fill=\"rgb({red},{green},{blue})\" stroke=\"#fff\"/>\n",
                MARGIN + c * CELL,
                MARGIN + r * CELL
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}
