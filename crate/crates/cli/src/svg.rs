//! Grouped bar chart of RFI estimates with confidence whiskers.
//!
//! Output depends only on the records, so identical runs give identical
//! bytes.

use std::fmt::Write;

use rfi_core::RfiRecord;

const PALETTE: [&str; 8] = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c",
];

const BAR: f64 = 22.0;
const GROUP_PAD: f64 = 24.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 50.0;
const PLOT_H: f64 = 280.0;
const LEGEND_W: f64 = 190.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn set_label(given: &[String]) -> String {
    if given.is_empty() {
        "G = ∅".to_string()
    } else {
        format!("G = {{{}}}", given.join(", "))
    }
}

fn first_seen<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for it in items {
        if !out.contains(&it) {
            out.push(it);
        }
    }
    out
}

fn nice_step(range: f64) -> f64 {
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

/// Features form the groups and conditioning sets the series, both in
/// order of first appearance. Bars whose p-value is below `alpha` are
/// drawn solid, the rest faded.
pub fn render_chart(title: &str, records: &[RfiRecord], alpha: f64) -> String {
    let features = first_seen(records.iter().map(|r| r.feature.clone()));
    let series = first_seen(records.iter().map(|r| r.given.clone()));
    let group_w = series.len().max(1) as f64 * BAR + GROUP_PAD;
    let plot_w = (features.len().max(1) as f64 * group_w).max(200.0);
    let width = LEFT + plot_w + 20.0 + LEGEND_W;
    let height = TOP + PLOT_H + 60.0;

    let finite = |v: f64| v.is_finite().then_some(v);
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for r in records {
        for v in [Some(r.estimate), finite(r.ci_lower), finite(r.ci_upper)].into_iter().flatten() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if hi - lo <= 0.0 {
        hi = lo + 1.0;
    }
    let step = nice_step(hi - lo);
    lo = (lo / step).floor() * step;
    hi = (hi / step).ceil() * step;
    let y = |v: f64| TOP + PLOT_H * (hi - v) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" font-size="14" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    let n_ticks = ((hi - lo) / step).round() as i64;
    for k in 0..=n_ticks {
        let v = lo + k as f64 * step;
        let yy = y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.1}" y1="{yy:.2}" x2="{:.1}" y2="{yy:.2}" stroke="#e0e0e0"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            yy + 4.0,
            format_tick(v, step)
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.1}" y1="{:.2}" x2="{:.1}" y2="{:.2}" stroke="black"/>"#,
        y(0.0),
        LEFT + plot_w,
        y(0.0)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.1}" y1="{TOP:.1}" x2="{LEFT:.1}" y2="{:.1}" stroke="black"/>"#,
        TOP + PLOT_H
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">importance</text>"#,
        TOP + PLOT_H / 2.0
    );

    for (gi, f) in features.iter().enumerate() {
        let gx = LEFT + gi as f64 * group_w + GROUP_PAD / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            gx + (group_w - GROUP_PAD) / 2.0,
            TOP + PLOT_H + 20.0,
            escape(f)
        );
        for r in records.iter().filter(|r| &r.feature == f) {
            let si = series.iter().position(|g| g == &r.given).unwrap_or(0);
            let x = gx + si as f64 * BAR;
            let colour = PALETTE[si % PALETTE.len()];
            let (top, bottom) = if r.estimate >= 0.0 {
                (y(r.estimate), y(0.0))
            } else {
                (y(0.0), y(r.estimate))
            };
            let opacity = if r.p_value < alpha { "1" } else { "0.4" };
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{colour}" fill-opacity="{opacity}"><title>{} | {}: {:.4} (p = {:.3e})</title></rect>"#,
                x + 1.0,
                BAR - 2.0,
                bottom - top,
                escape(f),
                escape(&set_label(&r.given)),
                r.estimate,
                r.p_value
            );
            if r.ci_lower.is_finite() && r.ci_upper.is_finite() {
                let cx = x + BAR / 2.0;
                let (y0, y1) = (y(r.ci_lower), y(r.ci_upper));
                let _ = writeln!(
                    s,
                    r#"<path d="M{:.2} {y1:.2}H{:.2}M{cx:.2} {y1:.2}V{y0:.2}M{:.2} {y0:.2}H{:.2}" stroke="black" fill="none"/>"#,
                    cx - 4.0,
                    cx + 4.0,
                    cx - 4.0,
                    cx + 4.0
                );
            }
        }
    }

    let lx = LEFT + plot_w + 20.0;
    for (si, g) in series.iter().enumerate() {
        let ly = TOP + 8.0 + si as f64 * 20.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.1}" y="{ly:.1}" width="12" height="12" fill="{}"/>"#,
            PALETTE[si % PALETTE.len()]
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 18.0,
            ly + 10.0,
            escape(&set_label(g))
        );
    }
    s.push_str("</svg>\n");
    s
}

fn format_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
    format!("{v:.decimals$}")
}
