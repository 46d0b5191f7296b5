//! CSV and SVG renderings of a [`ResultSet`].

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::evolution::ResultSet;
use crate::modes::ModeId;

/// Formats like C's `%.17g`: 17 significant digits, enough to round-trip
/// any `f64`, trailing zeros trimmed.
pub fn format_g17(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Writes one row per record:
/// `scenario,year,replicate,trip_cost_usd,n_legs,frac_<mode>...`
pub fn write_records_csv<W: Write>(results: &ResultSet, sink: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    let mut header = vec![
        "scenario".to_string(),
        "year".into(),
        "replicate".into(),
        "trip_cost_usd".into(),
        "n_legs".into(),
    ];
    header.extend(results.mode_ids().map(|m| format!("frac_{m}")));
    w.write_record(&header)?;

    let ids: Vec<&ModeId> = results.mode_ids().collect();
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for r in &results.records {
        row.clear();
        row.push(results.config.name.clone());
        row.push(r.year.to_string());
        row.push(r.replicate.to_string());
        row.push(format_g17(r.trip_cost));
        row.push(r.n_legs.to_string());
        row.extend(ids.iter().map(|id| format_g17(r.fraction(id))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn records_csv_string(results: &ResultSet) -> Result<String> {
    let mut buf = Vec::new();
    write_records_csv(results, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Scatter plot settings. Points are coloured by the distance fraction
/// travelled on `focus_mode`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub focus_mode: ModeId,
    pub width: f64,
    pub height: f64,
}

impl PlotSpec {
    pub fn new(focus_mode: ModeId) -> Self {
        PlotSpec {
            focus_mode,
            width: 900.0,
            height: 560.0,
        }
    }
}

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const POINT_RADIUS: f64 = 2.5;

const RAMP: [(f64, [u8; 3]); 3] = [
    (0.0, [0x44, 0x01, 0x54]),
    (0.5, [0x21, 0x91, 0x8C]),
    (1.0, [0xFD, 0xE7, 0x25]),
];

/// Colour for a fraction: purple at 0, teal at 0.5, yellow at 1, linear in between.
pub fn ramp_color(fraction: f64) -> String {
    let f = if fraction.is_nan() {
        0.0
    } else {
        fraction.clamp(0.0, 1.0)
    };
    let (lo, hi) = if f <= RAMP[1].0 {
        (RAMP[0], RAMP[1])
    } else {
        (RAMP[1], RAMP[2])
    };
    let t = (f - lo.0) / (hi.0 - lo.0);
    let mix = |a: u8, b: u8| (f64::from(a) + (f64::from(b) - f64::from(a)) * t).round() as u8;
    format!(
        "#{:02X}{:02X}{:02X}",
        mix(lo.1[0], hi.1[0]),
        mix(lo.1[1], hi.1[1]),
        mix(lo.1[2], hi.1[2])
    )
}

/// Vertical plot coordinate: `log10` of the cost in millions of USD.
pub fn cost_axis_value(trip_cost: f64) -> f64 {
    (trip_cost / 1e6).log10()
}

/// Maps data coordinates (year, log10 $M) onto SVG pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotLayout {
    pub width: f64,
    pub height: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl PlotLayout {
    pub fn for_results(results: &ResultSet, plot: &PlotSpec) -> Self {
        let (lo, hi) = results
            .records
            .iter()
            .map(|r| cost_axis_value(r.trip_cost))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| {
                (lo.min(y), hi.max(y))
            });
        let (mut y_min, mut y_max) = if lo.is_finite() {
            (lo.floor(), hi.ceil())
        } else {
            (0.0, 1.0)
        };
        if y_max <= y_min {
            y_max = y_min + 1.0;
        }
        if y_max - y_min < 1.0 {
            y_min = y_max - 1.0;
        }
        PlotLayout {
            width: plot.width,
            height: plot.height,
            x_min: f64::from(results.config.start_year) - 0.5,
            x_max: f64::from(results.config.end_year) + 0.5,
            y_min,
            y_max,
        }
    }

    fn plot_w(&self) -> f64 {
        self.width - MARGIN_LEFT - MARGIN_RIGHT
    }

    fn plot_h(&self) -> f64 {
        self.height - MARGIN_TOP - MARGIN_BOTTOM
    }

    pub fn x_px(&self, year: f64) -> f64 {
        MARGIN_LEFT + (year - self.x_min) / (self.x_max - self.x_min) * self.plot_w()
    }

    pub fn y_px(&self, axis_value: f64) -> f64 {
        MARGIN_TOP + (self.y_max - axis_value) / (self.y_max - self.y_min) * self.plot_h()
    }

    /// Inverse of [`PlotLayout::y_px`].
    pub fn y_value(&self, px: f64) -> f64 {
        self.y_max - (px - MARGIN_TOP) / self.plot_h() * (self.y_max - self.y_min)
    }
}

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Renders one circle per record at `(year, log10(cost / 1e6))`.
pub fn render_scatter_svg<W: Write>(
    results: &ResultSet,
    plot: &PlotSpec,
    mut sink: W,
) -> Result<()> {
    let svg = scatter_svg_string(results, plot);
    sink.write_all(svg.as_bytes())?;
    sink.flush()?;
    Ok(())
}

pub fn scatter_svg_string(results: &ResultSet, plot: &PlotSpec) -> String {
    let l = PlotLayout::for_results(results, plot);
    let (left, right) = (MARGIN_LEFT, l.width - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, l.height - MARGIN_BOTTOM);
    let mut s = String::new();

    // writes into a String cannot fail
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
        w = l.width,
        h = l.height
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
        l.width, l.height
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" font-size="14">{}: trip cost coloured by share of distance on {}</text>"#,
        left,
        escape_xml(&results.config.name),
        escape_xml(plot.focus_mode.as_str())
    );

    let _ = writeln!(s, r##"<g id="grid" stroke="#dddddd" stroke-width="1">"##);
    let mut decade = l.y_min;
    while decade <= l.y_max + 1e-9 {
        let y = l.y_px(decade);
        let _ = writeln!(
            s,
            r#"<line x1="{left:.1}" y1="{y:.4}" x2="{right:.1}" y2="{y:.4}"/>"#
        );
        decade += 1.0;
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r##"<g id="axes" stroke="#000000" stroke-width="1">"##);
    let _ = writeln!(
        s,
        r#"<line x1="{left:.1}" y1="{bottom:.1}" x2="{right:.1}" y2="{bottom:.1}"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left:.1}" y1="{top:.1}" x2="{left:.1}" y2="{bottom:.1}"/>"#
    );
    let n_years = results.config.end_year - results.config.start_year + 1;
    let label_every = ((n_years + 11) / 12).max(1);
    for year in results.config.years() {
        let x = l.x_px(f64::from(year));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.4}" y1="{bottom:.1}" x2="{x:.4}" y2="{:.1}"/>"#,
            bottom + 4.0
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="labels" fill="black">"#);
    for year in results
        .config
        .years()
        .filter(|y| (y - results.config.start_year) % label_every == 0)
    {
        let x = l.x_px(f64::from(year));
        let _ = writeln!(
            s,
            r#"<text x="{x:.4}" y="{:.1}" text-anchor="middle">{year}</text>"#,
            bottom + 16.0
        );
    }
    let mut decade = l.y_min;
    while decade <= l.y_max + 1e-9 {
        let y = l.y_px(decade);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.4}" text-anchor="end">{decade}</text>"#,
            left - 6.0,
            y + 4.0
        );
        decade += 1.0;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">year</text>"#,
        0.5 * (left + right),
        l.height - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{y:.1}" text-anchor="middle" transform="rotate(-90 16 {y:.1})">log10(trip cost, $M)</text>"#,
        y = 0.5 * (top + bottom)
    );
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="points" fill-opacity="0.6">"#);
    for r in &results.records {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.4}" cy="{:.4}" r="{POINT_RADIUS}" fill="{}"/>"#,
            l.x_px(f64::from(r.year)),
            l.y_px(cost_axis_value(r.trip_cost)),
            ramp_color(r.fraction(&plot.focus_mode))
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    s
}
