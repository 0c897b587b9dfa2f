//! Deterministic SVG rendering: fixed canvas, fixed palette, every float
//! printed through the same formatter, so identical inputs give identical
//! bytes.

use std::fmt::Write as _;

use multiwell::stats::brody_pdf;

use crate::record::{fmt_f64, parse_csv};
use crate::CliError;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 620.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 70.0;

fn plot_w() -> f64 {
    WIDTH - MARGIN_L - MARGIN_R
}

fn plot_h() -> f64 {
    HEIGHT - MARGIN_T - MARGIN_B
}

/// Pixel coordinates rounded to fixed precision.
fn px(x: f64) -> String {
    format!("{x:.3}")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

const VIRIDIS: [(f64, f64, f64); 11] = [
    (0.267, 0.005, 0.329),
    (0.283, 0.141, 0.458),
    (0.254, 0.265, 0.530),
    (0.207, 0.372, 0.553),
    (0.164, 0.471, 0.558),
    (0.128, 0.567, 0.551),
    (0.135, 0.659, 0.518),
    (0.267, 0.749, 0.441),
    (0.478, 0.821, 0.318),
    (0.741, 0.873, 0.150),
    (0.993, 0.906, 0.144),
];

fn viridis(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let scaled = t * (VIRIDIS.len() - 1) as f64;
    let i = (scaled.floor() as usize).min(VIRIDIS.len() - 2);
    let f = scaled - i as f64;
    let (r0, g0, b0) = VIRIDIS[i];
    let (r1, g1, b1) = VIRIDIS[i + 1];
    let ch = |a: f64, b: f64| ((a + (b - a) * f) * 255.0).round() as u8;
    format!("#{:02x}{:02x}{:02x}", ch(r0, r1), ch(g0, g1), ch(b0, b1))
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(title: &str, metadata: &str) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        );
        let _ = writeln!(body, "<metadata>{metadata}</metadata>");
        let _ = writeln!(
            body,
            "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>"
        );
        let _ = writeln!(
            body,
            "<text x=\"{}\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
            px(MARGIN_L + plot_w() / 2.0),
            title
        );
        Svg { body }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, style: &str) {
        let _ = writeln!(
            self.body,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" {style}/>",
            px(x1),
            px(y1),
            px(x2),
            px(y2)
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\"/>",
            px(x),
            px(y),
            px(w),
            px(h)
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, content: &str) {
        let _ = writeln!(
            self.body,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"{anchor}\">{content}</text>",
            px(x),
            px(y)
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], style: &str) {
        let mut coords = String::new();
        for &(x, y) in pts {
            let _ = write!(coords, "{},{} ", px(x), px(y));
        }
        let _ = writeln!(
            self.body,
            "<polyline fill=\"none\" {style} points=\"{}\"/>",
            coords.trim_end()
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\"/>",
            px(x),
            px(y),
            px(r)
        );
    }

    fn frame(&mut self, x_label: &str, y_label: &str) {
        let style = "stroke=\"#000000\" stroke-width=\"1\"";
        let (x0, y0) = (MARGIN_L, MARGIN_T + plot_h());
        self.line(x0, y0, x0 + plot_w(), y0, style);
        self.line(x0, MARGIN_T, x0, y0, style);
        self.text(x0 + plot_w() / 2.0, HEIGHT - 20.0, "middle", x_label);
        let _ = writeln!(
            self.body,
            "<text x=\"22\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 22 {})\">{}</text>",
            px(MARGIN_T + plot_h() / 2.0),
            px(MARGIN_T + plot_h() / 2.0),
            y_label
        );
    }
}

/// Linear data-to-pixel maps for a framed plot.
struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn x(&self, v: f64) -> f64 {
        MARGIN_L + (v - self.x0) / (self.x1 - self.x0) * plot_w()
    }

    fn y(&self, v: f64) -> f64 {
        MARGIN_T + plot_h() - (v - self.y0) / (self.y1 - self.y0) * plot_h()
    }

    fn x_ticks(&self, svg: &mut Svg, n: usize) {
        for i in 0..=n {
            let v = self.x0 + (self.x1 - self.x0) * i as f64 / n as f64;
            let x = self.x(v);
            svg.line(
                x,
                MARGIN_T + plot_h(),
                x,
                MARGIN_T + plot_h() + 5.0,
                "stroke=\"#000000\" stroke-width=\"1\"",
            );
            svg.text(x, MARGIN_T + plot_h() + 20.0, "middle", &tick_label(v));
        }
    }

    fn y_ticks(&self, svg: &mut Svg, n: usize) {
        for i in 0..=n {
            let v = self.y0 + (self.y1 - self.y0) * i as f64 / n as f64;
            let y = self.y(v);
            svg.line(
                MARGIN_L - 5.0,
                y,
                MARGIN_L,
                y,
                "stroke=\"#000000\" stroke-width=\"1\"",
            );
            svg.text(MARGIN_L - 8.0, y + 4.0, "end", &tick_label(v));
        }
    }
}

fn column_toggle(column: &str) -> &'static str {
    match column {
        "beta" | "beta_err" => "brody",
        "kurtosis" => "kurtosis",
        "gamma_dev_min" | "gamma_dev_max" => "gamma",
        "s_inf" | "hole_depth" | "hole_time" => "survival",
        _ => "unknown",
    }
}

fn comment_value(text: &str, key: &str) -> Option<f64> {
    for line in text.lines() {
        let line = line.strip_prefix("# ")?.trim();
        if let Some(rest) = line.strip_prefix(key) {
            if let Some(v) = rest.trim().strip_prefix('=') {
                return v.trim().parse().ok();
            }
        }
    }
    None
}

/// Heatmap of one sweep column over the `(tau, gamma)` grid.
pub fn render_heatmap(
    csv_text: &str,
    column: &str,
    n_filter: Option<u32>,
    wells_filter: Option<u32>,
) -> Result<String, CliError> {
    let (header, rows) = parse_csv(csv_text).map_err(CliError::Render)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Render(format!("input has no '{name}' column")))
    };
    let (c_n, c_w, c_tau, c_gamma, c_val) = (
        col("n")?,
        col("wells")?,
        col("tau")?,
        col("gamma")?,
        col(column)?,
    );

    let mut groups: Vec<(u32, u32)> = Vec::new();
    for r in &rows {
        let key = (
            r[c_n].parse::<u32>().unwrap_or(0),
            r[c_w].parse::<u32>().unwrap_or(0),
        );
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    groups.retain(|&(n, w)| n_filter.map_or(true, |f| f == n) && wells_filter.map_or(true, |f| f == w));
    if groups.is_empty() {
        return Err(CliError::Render("no rows match the n/wells filter".into()));
    }
    if groups.len() > 1 {
        return Err(CliError::Render(format!(
            "input holds {} (n, wells) groups; pick one with --n/--wells",
            groups.len()
        )));
    }
    let (n_sel, w_sel) = groups[0];

    let mut taus: Vec<f64> = Vec::new();
    let mut gammas: Vec<f64> = Vec::new();
    let mut cells: Vec<(f64, f64, Option<f64>)> = Vec::new();
    for r in &rows {
        if r[c_n].parse::<u32>().unwrap_or(0) != n_sel
            || r[c_w].parse::<u32>().unwrap_or(0) != w_sel
        {
            continue;
        }
        let t: f64 = r[c_tau].parse().map_err(|_| {
            CliError::Render(format!("bad tau value '{}'", r[c_tau]))
        })?;
        let g: f64 = r[c_gamma].parse().map_err(|_| {
            CliError::Render(format!("bad gamma value '{}'", r[c_gamma]))
        })?;
        let v: Option<f64> = if r[c_val].is_empty() {
            None
        } else {
            r[c_val].parse().ok()
        };
        if !taus.iter().any(|&x| x == t) {
            taus.push(t);
        }
        if !gammas.iter().any(|&x| x == g) {
            gammas.push(g);
        }
        cells.push((t, g, v));
    }
    taus.sort_by(f64::total_cmp);
    gammas.sort_by(f64::total_cmp);

    let present: Vec<f64> = cells.iter().filter_map(|c| c.2).collect();
    if present.is_empty() {
        return Err(CliError::Render(format!(
            "column '{column}' has no values; run with the '{}' diagnostic enabled",
            column_toggle(column)
        )));
    }
    let vmin = present.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if vmax > vmin { vmax - vmin } else { 1.0 };

    let meta = format!(
        "{{\"kind\":\"heatmap\",\"value\":\"{column}\",\"n\":{n_sel},\"wells\":{w_sel},\"vmin\":{},\"vmax\":{}}}",
        fmt_f64(vmin),
        fmt_f64(vmax)
    );
    let mut svg = Svg::new(&format!("{column}, N={n_sel} W={w_sel}"), &meta);
    let cell_w = plot_w() / taus.len() as f64;
    let cell_h = plot_h() / gammas.len() as f64;
    for &(t, g, v) in &cells {
        let i = taus.iter().position(|&x| x == t).unwrap();
        let j = gammas.iter().position(|&x| x == g).unwrap();
        let fill = match v {
            Some(v) => viridis((v - vmin) / span),
            None => "#bbbbbb".to_string(),
        };
        svg.rect(
            MARGIN_L + i as f64 * cell_w,
            MARGIN_T + plot_h() - (j + 1) as f64 * cell_h,
            cell_w,
            cell_h,
            &fill,
        );
    }
    svg.frame("tau", "gamma");
    for (i, &t) in taus.iter().enumerate() {
        svg.text(
            MARGIN_L + (i as f64 + 0.5) * cell_w,
            MARGIN_T + plot_h() + 20.0,
            "middle",
            &tick_label(t),
        );
    }
    for (j, &g) in gammas.iter().enumerate() {
        svg.text(
            MARGIN_L - 8.0,
            MARGIN_T + plot_h() - (j as f64 + 0.5) * cell_h + 4.0,
            "end",
            &tick_label(g),
        );
    }

    // colorbar legend
    let bar_x = WIDTH - MARGIN_R + 30.0;
    let steps = 24;
    for k in 0..steps {
        let frac = k as f64 / (steps - 1) as f64;
        svg.rect(
            bar_x,
            MARGIN_T + plot_h() * (1.0 - (k + 1) as f64 / steps as f64),
            18.0,
            plot_h() / steps as f64 + 0.5,
            &viridis(frac),
        );
    }
    svg.text(bar_x + 24.0, MARGIN_T + plot_h() + 4.0, "start", &tick_label(vmin));
    svg.text(bar_x + 24.0, MARGIN_T + 10.0, "start", &tick_label(vmax));
    svg.text(bar_x + 9.0, MARGIN_T - 10.0, "middle", column);
    Ok(svg.finish())
}

/// Spacing histogram with the fitted Brody curve and the Poisson and
/// Wigner-Dyson references.
pub fn render_spacing_hist(csv_text: &str) -> Result<String, CliError> {
    let (header, rows) = parse_csv(csv_text).map_err(CliError::Render)?;
    if header != ["s"] {
        return Err(CliError::Render(format!(
            "expected a spacings file with a single 's' column, got {header:?}"
        )));
    }
    if rows.is_empty() {
        return Err(CliError::Render(
            "no spacings; run with the 'brody' diagnostic enabled".into(),
        ));
    }
    let values: Vec<f64> = rows
        .iter()
        .map(|r| r[0].parse::<f64>().map_err(|e| CliError::Render(e.to_string())))
        .collect::<Result<_, _>>()?;
    let beta = comment_value(csv_text, "beta");

    let s_hi = values.iter().copied().fold(0.0f64, f64::max).max(4.0);
    let n_bins = 40usize;
    let bin_w = s_hi / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &s in &values {
        let k = ((s / bin_w) as usize).min(n_bins - 1);
        counts[k] += 1;
    }
    let density: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / (values.len() as f64 * bin_w))
        .collect();
    let d_max = density.iter().copied().fold(0.0f64, f64::max).max(1.1);

    let meta = format!(
        "{{\"kind\":\"spacing_hist\",\"bins\":{n_bins},\"s_max\":{},\"density_max\":{}}}",
        fmt_f64(s_hi),
        fmt_f64(d_max)
    );
    let title = match beta {
        Some(b) => format!("spacing distribution, beta = {:.3}", b),
        None => "spacing distribution".to_string(),
    };
    let mut svg = Svg::new(&title, &meta);
    let ax = Axes {
        x0: 0.0,
        x1: s_hi,
        y0: 0.0,
        y1: d_max * 1.05,
    };
    for (k, &d) in density.iter().enumerate() {
        let x = ax.x(k as f64 * bin_w);
        let w = ax.x(bin_w) - ax.x(0.0);
        let y = ax.y(d);
        svg.rect(x, y, w, MARGIN_T + plot_h() - y, "#a1d99b");
    }

    let curve = |f: &dyn Fn(f64) -> f64| -> Vec<(f64, f64)> {
        (0..=240)
            .map(|i| {
                let s = s_hi * i as f64 / 240.0;
                (ax.x(s), ax.y(f(s).min(d_max * 1.05)))
            })
            .collect()
    };
    svg.polyline(
        &curve(&|s| (-s).exp()),
        "stroke=\"#756bb1\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\"",
    );
    svg.polyline(
        &curve(&|s| std::f64::consts::FRAC_PI_2 * s * (-std::f64::consts::PI * s * s / 4.0).exp()),
        "stroke=\"#e6550d\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\"",
    );
    if let Some(b) = beta {
        svg.polyline(
            &curve(&|s| brody_pdf(s, b).unwrap_or(0.0)),
            "stroke=\"#08519c\" stroke-width=\"2\"",
        );
    }
    svg.frame("s", "P(s)");
    ax.x_ticks(&mut svg, 4);
    ax.y_ticks(&mut svg, 4);

    let lx = WIDTH - MARGIN_R + 10.0;
    let entries: [(&str, &str); 3] = [
        ("#756bb1", "Poisson"),
        ("#e6550d", "Wigner-Dyson"),
        ("#08519c", "Brody fit"),
    ];
    for (i, (color, label)) in entries.iter().enumerate() {
        let y = MARGIN_T + 20.0 + i as f64 * 18.0;
        svg.line(lx, y - 4.0, lx + 22.0, y - 4.0, &format!("stroke=\"{color}\" stroke-width=\"2\""));
        svg.text(lx + 28.0, y, "start", label);
    }
    Ok(svg.finish())
}

/// Scatter of the binned moment ratio against transition frequency, with
/// the Gaussian reference pi/2.
pub fn render_gamma_scatter(csv_text: &str) -> Result<String, CliError> {
    let (header, rows) = parse_csv(csv_text).map_err(CliError::Render)?;
    if header != ["omega", "gamma", "pairs"] {
        return Err(CliError::Render(format!(
            "expected a gamma file with omega,gamma,pairs columns, got {header:?}"
        )));
    }
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut omega_max = 0.0f64;
    for r in &rows {
        let omega: f64 = r[0].parse().map_err(|e: std::num::ParseFloatError| {
            CliError::Render(e.to_string())
        })?;
        omega_max = omega_max.max(omega);
        if !r[1].is_empty() {
            pts.push((omega, r[1].parse().map_err(|e: std::num::ParseFloatError| {
                CliError::Render(e.to_string())
            })?));
        }
    }
    if pts.is_empty() {
        return Err(CliError::Render(
            "no populated bins; run with the 'gamma' diagnostic enabled".into(),
        ));
    }
    let g_max = pts.iter().map(|p| p.1).fold(0.0f64, f64::max).max(2.0);
    let meta = format!(
        "{{\"kind\":\"gamma_scatter\",\"omega_max\":{},\"gamma_max\":{}}}",
        fmt_f64(omega_max),
        fmt_f64(g_max)
    );
    let mut svg = Svg::new("off-diagonal moment ratio", &meta);
    let ax = Axes {
        x0: 0.0,
        x1: omega_max * 1.02,
        y0: 0.0,
        y1: g_max * 1.1,
    };
    let y_ref = ax.y(std::f64::consts::FRAC_PI_2);
    svg.line(
        MARGIN_L,
        y_ref,
        MARGIN_L + plot_w(),
        y_ref,
        "stroke=\"#e6550d\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"",
    );
    svg.text(MARGIN_L + plot_w() + 6.0, y_ref + 4.0, "start", "pi/2");
    for &(o, g) in &pts {
        svg.circle(ax.x(o), ax.y(g), 3.0, "#08519c");
    }
    svg.frame("omega", "gamma(omega)");
    ax.x_ticks(&mut svg, 5);
    ax.y_ticks(&mut svg, 4);
    Ok(svg.finish())
}

/// Survival probability on log-log axes: raw, smoothed, analytic, and the
/// long-time plateau.
pub fn render_survival(csv_text: &str) -> Result<String, CliError> {
    let (header, rows) = parse_csv(csv_text).map_err(CliError::Render)?;
    if header != ["t", "raw", "smoothed", "analytic"] {
        return Err(CliError::Render(format!(
            "expected a survival file with t,raw,smoothed,analytic columns, got {header:?}"
        )));
    }
    if rows.is_empty() {
        return Err(CliError::Render(
            "empty curve; run with the 'survival' diagnostic enabled".into(),
        ));
    }
    let s_inf = comment_value(csv_text, "s_inf")
        .ok_or_else(|| CliError::Render("missing '# s_inf =' header".into()))?;
    let mut t = Vec::new();
    let mut raw = Vec::new();
    let mut smooth = Vec::new();
    let mut analytic = Vec::new();
    for r in &rows {
        let parse = |s: &str| -> Result<f64, CliError> {
            s.parse().map_err(|e: std::num::ParseFloatError| {
                CliError::Render(e.to_string())
            })
        };
        t.push(parse(&r[0])?);
        raw.push(parse(&r[1])?);
        smooth.push(parse(&r[2])?);
        analytic.push(parse(&r[3])?);
    }

    let floor = (s_inf * 1e-3).max(1e-12);
    let y_min = raw
        .iter()
        .chain(&smooth)
        .chain(&analytic)
        .copied()
        .filter(|&v| v > 0.0)
        .fold(1.0f64, f64::min)
        .max(floor);
    let ax = Axes {
        x0: t[0].log10(),
        x1: t[t.len() - 1].log10(),
        y0: y_min.log10() * 1.05,
        y1: 0.0,
    };
    let meta = format!(
        "{{\"kind\":\"survival_curve\",\"t_min\":{},\"t_max\":{},\"y_min\":{},\"s_inf\":{}}}",
        fmt_f64(t[0]),
        fmt_f64(t[t.len() - 1]),
        fmt_f64(y_min),
        fmt_f64(s_inf)
    );
    let mut svg = Svg::new("survival probability", &meta);

    let series = |vals: &[f64]| -> Vec<(f64, f64)> {
        t.iter()
            .zip(vals)
            .map(|(&tt, &v)| (ax.x(tt.log10()), ax.y(v.max(floor).log10())))
            .collect()
    };
    svg.polyline(&series(&raw), "stroke=\"#9ecae1\" stroke-width=\"0.8\"");
    svg.polyline(&series(&smooth), "stroke=\"#08519c\" stroke-width=\"1.8\"");
    svg.polyline(
        &series(&analytic),
        "stroke=\"#e6550d\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\"",
    );
    let y_plateau = ax.y(s_inf.log10());
    svg.line(
        MARGIN_L,
        y_plateau,
        MARGIN_L + plot_w(),
        y_plateau,
        "stroke=\"#31a354\" stroke-width=\"1.5\" stroke-dasharray=\"8,4\"",
    );

    svg.frame("t", "S_P(t)");
    let k_lo = ax.x0.ceil() as i64;
    let k_hi = ax.x1.floor() as i64;
    for k in k_lo..=k_hi {
        let x = ax.x(k as f64);
        svg.line(
            x,
            MARGIN_T + plot_h(),
            x,
            MARGIN_T + plot_h() + 5.0,
            "stroke=\"#000000\" stroke-width=\"1\"",
        );
        svg.text(x, MARGIN_T + plot_h() + 20.0, "middle", &format!("1e{k}"));
    }
    let d_lo = ax.y0.ceil() as i64;
    for k in d_lo..=0 {
        let y = ax.y(k as f64);
        svg.line(
            MARGIN_L - 5.0,
            y,
            MARGIN_L,
            y,
            "stroke=\"#000000\" stroke-width=\"1\"",
        );
        svg.text(MARGIN_L - 8.0, y + 4.0, "end", &format!("1e{k}"));
    }

    let lx = WIDTH - MARGIN_R + 10.0;
    let entries: [(&str, &str); 4] = [
        ("#9ecae1", "raw"),
        ("#08519c", "smoothed"),
        ("#e6550d", "analytic"),
        ("#31a354", "S_inf"),
    ];
    for (i, (color, label)) in entries.iter().enumerate() {
        let y = MARGIN_T + 20.0 + i as f64 * 18.0;
        svg.line(lx, y - 4.0, lx + 22.0, y - 4.0, &format!("stroke=\"{color}\" stroke-width=\"2\""));
        svg.text(lx + 28.0, y, "start", label);
    }
    Ok(svg.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{sweep_csv, BetaRecord, DiagnosticsRecord};

    fn sample_records() -> Vec<DiagnosticsRecord> {
        let mut out = Vec::new();
        for (i, &tau) in [0.0, 12.5, 25.0].iter().enumerate() {
            for (j, &gamma) in [0.0, 25.0, 50.0].iter().enumerate() {
                let mut r = DiagnosticsRecord::blank(4, 2, tau, gamma, 720.0, 300.0, 60.0);
                if (i, j) != (0, 0) {
                    r.beta = Some(BetaRecord {
                        value: 0.1 * (i * 3 + j) as f64,
                        fit_error: 0.02,
                    });
                }
                out.push(r);
            }
        }
        out
    }

    #[test]
    fn heatmap_is_deterministic_and_carries_bounds() {
        let csv = sweep_csv(&sample_records(), &[]);
        let a = render_heatmap(&csv, "beta", None, None).unwrap();
        let b = render_heatmap(&csv, "beta", None, None).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"vmin\":"));
        assert!(a.contains("\"vmax\":"));
        assert!(a.contains("#bbbbbb"), "missing cell should render gray");
    }

    #[test]
    fn heatmap_missing_diagnostic_names_toggle() {
        let csv = sweep_csv(&sample_records(), &[]);
        let err = render_heatmap(&csv, "kurtosis", None, None).unwrap_err();
        assert!(err.to_string().contains("'kurtosis' diagnostic"), "{err}");
    }

    #[test]
    fn single_record_renders_single_cell() {
        let mut r = DiagnosticsRecord::blank(2, 2, 5.0, 3.0, 200.0, 60.0, 30.0);
        r.beta = Some(BetaRecord {
            value: 0.4,
            fit_error: 0.05,
        });
        let csv = sweep_csv(&[r], &[]);
        let svg = render_heatmap(&csv, "beta", None, None).unwrap();
        assert!(svg.contains("<rect"));
        assert!(svg.contains("N=2 W=2"));
    }

    #[test]
    fn spacing_hist_renders_reference_curves() {
        let mut text = String::from("# multiwell spacings csv v1\n# beta = 5.0e-1\ns\n");
        for i in 0..200 {
            text.push_str(&format!("{}\n", 0.02 * (i as f64 + 0.5)));
        }
        let svg = render_spacing_hist(&text).unwrap();
        assert!(svg.contains("Poisson"));
        assert!(svg.contains("Wigner-Dyson"));
        assert!(svg.contains("Brody fit"));
    }

    #[test]
    fn gamma_scatter_skips_empty_bins() {
        let text = "# multiwell gamma csv v1\nomega,gamma,pairs\n1.0,1.5,100\n2.0,,5\n3.0,1.6,80\n";
        let svg = render_gamma_scatter(text).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("pi/2"));
    }

    #[test]
    fn survival_renders_four_series() {
        let mut text = String::from("# multiwell survival csv v1\n# s_inf = 2.5e-3\nt,raw,smoothed,analytic\n");
        for i in 0..50 {
            let t = 10f64.powf(-3.0 + 5.0 * i as f64 / 49.0);
            text.push_str(&format!("{t},{},{},{}\n", 0.5, 0.4, 0.45));
        }
        let svg = render_survival(&text).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("#31a354"), "plateau line");
        assert!(svg.contains("\"s_inf\":"));
    }

    #[test]
    fn survival_requires_plateau_header() {
        let text = "t,raw,smoothed,analytic\n1.0,0.5,0.5,0.5\n";
        assert!(render_survival(text).is_err());
    }
}
