use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{JointDistribution, SubsetStats};

pub const CSV_HEADER: [&str; 12] = [
    "subset",
    "total_docs",
    "total_images",
    "avg_images",
    "avg_itif",
    "total_tokens",
    "total_length",
    "avg_tokens_per_text_block",
    "avg_bold_chars",
    "avg_italic_chars",
    "avg_heading_count",
    "itif_variant",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Csv,
    Json,
    SvgScatter,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub subsets: Vec<SubsetStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total: Option<SubsetStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint: Option<JointDistribution>,
}

pub fn emit_report(report: &StatsReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Csv => csv_report(report),
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
            out.push(b'\n');
            out
        }
        ReportFormat::SvgScatter => svg_report(report.joint.as_ref()).into_bytes(),
    }
}

fn csv_report(report: &StatsReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("write to Vec");
    for s in report.subsets.iter().chain(&report.total) {
        w.write_record([
            s.subset.clone(),
            s.total_docs.to_string(),
            s.total_images.to_string(),
            s.avg_images.to_string(),
            s.avg_itif.to_string(),
            s.total_tokens.to_string(),
            s.total_length.to_string(),
            s.avg_tokens_per_text_block.to_string(),
            s.avg_bold_chars.to_string(),
            s.avg_italic_chars.to_string(),
            s.avg_heading_count.to_string(),
            s.itif_variant.as_str().to_string(),
        ])
        .expect("write to Vec");
    }
    w.into_inner().expect("flush to Vec")
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn svg_report(joint: Option<&JointDistribution>) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    let Some(j) = joint else {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">no data</text>"#, WIDTH / 2.0, HEIGHT / 2.0);
        s.push_str("</svg>\n");
        return s;
    };
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let cell_w = plot_w / j.spec.token_bins as f64;
    let cell_h = plot_h / j.spec.image_bins as f64;
    let peak = j.bins.iter().flatten().copied().max().unwrap_or(0).max(1) as f64;

    s.push_str("<g class=\"bins\">\n");
    for (ii, row) in j.bins.iter().enumerate() {
        for (ti, &count) in row.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let x = MARGIN + ti as f64 * cell_w;
            let y = HEIGHT - MARGIN - (ii + 1) as f64 * cell_h;
            let opacity = 0.15 + 0.85 * (count as f64 / peak);
            let _ = writeln!(
                s,
                r##"<rect x="{x:.2}" y="{y:.2}" width="{cell_w:.2}" height="{cell_h:.2}" fill="#1f77b4" fill-opacity="{opacity:.3}"><title>{count}</title></rect>"##
            );
        }
    }
    s.push_str("</g>\n");

    let x_max = j.spec.token_max as f64 + 1.0;
    let y_max = j.spec.image_max as f64 + 1.0;
    s.push_str("<g class=\"points\" fill=\"#d62728\" fill-opacity=\"0.4\">\n");
    for &(images, tokens) in &j.points {
        let cx = MARGIN + (tokens as f64).min(x_max) / x_max * plot_w;
        let cy = HEIGHT - MARGIN - (images as f64).min(y_max) / y_max * plot_h;
        let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="1.5"/>"#);
    }
    s.push_str("</g>\n");

    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{x0}" y="{}" font-size="12">0</text>"#, y0 + 16.0);
    let _ = writeln!(s, r#"<text x="{x1}" y="{}" font-size="12" text-anchor="end">{}</text>"#, y0 + 16.0, j.spec.token_max);
    let _ = writeln!(s, r#"<text x="{}" y="{y1}" font-size="12" text-anchor="end">{}</text>"#, x0 - 6.0, j.spec.image_max);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">tokens per document</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {})">content images per document</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" font-size="14" text-anchor="middle">n = {} of {}</text>"#,
        WIDTH / 2.0,
        j.sample_size,
        j.population
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{BinSpec, ItifVariant};

    fn fixture() -> StatsReport {
        let mut a = SubsetStats::empty("alpha", ItifVariant::Count);
        a.total_docs = 4;
        a.total_images = 6;
        a.avg_images = 1.5;
        a.avg_itif = 2.25;
        a.total_tokens = 1000;
        a.total_length = 5210;
        a.avg_tokens_per_text_block = 62.5;
        a.avg_bold_chars = 0.0;
        a.avg_italic_chars = 12.75;
        a.avg_heading_count = 3.0;
        let mut b = SubsetStats::empty("beta, \"quoted\"", ItifVariant::Count);
        b.total_docs = 1;
        b.total_tokens = 7;
        b.total_length = 30;
        b.avg_tokens_per_text_block = 7.0;
        let total = crate::stats::aggregate_total(&[a.clone(), b.clone()], Default::default()).unwrap();
        StatsReport { subsets: vec![a, b], total: Some(total), joint: None }
    }

    #[test]
    fn empty_report_is_header_only() {
        let out = emit_report(&StatsReport::default(), ReportFormat::Csv);
        assert_eq!(String::from_utf8(out).unwrap(), CSV_HEADER.join(",") + "\n");
    }

    #[test]
    fn golden_csv() {
        let out = String::from_utf8(emit_report(&fixture(), ReportFormat::Csv)).unwrap();
        let golden = "\
subset,total_docs,total_images,avg_images,avg_itif,total_tokens,total_length,avg_tokens_per_text_block,avg_bold_chars,avg_italic_chars,avg_heading_count,itif_variant
alpha,4,6,1.5,2.25,1000,5210,62.5,0,12.75,3,count
\"beta, \"\"quoted\"\"\",1,0,0,0,7,30,7,0,0,0,count
total,5,6,0.75,1.125,1007,5240,34.75,0,6.375,1.5,count
";
        assert_eq!(out, golden);
    }

    #[test]
    fn json_round_trips() {
        let r = fixture();
        let back: StatsReport = serde_json::from_slice(&emit_report(&r, ReportFormat::Json)).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn svg_is_well_formed() {
        let points = vec![(0, 10), (3, 500), (3, 510), (40, 99_999)];
        let joint = JointDistribution::from_points(points, 9, BinSpec::default()).unwrap();
        let r = StatsReport { joint: Some(joint), ..StatsReport::default() };
        let svg = String::from_utf8(emit_report(&r, ReportFormat::SvgScatter)).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        let circles = doc.descendants().filter(|n| n.has_tag_name("circle")).count();
        assert_eq!(circles, 4);
        // (3, 500) and (3, 510) share a bin
        let cells = doc.descendants().filter(|n| n.has_tag_name("rect")).count() - 1;
        assert_eq!(cells, 3);

        let empty = String::from_utf8(emit_report(&StatsReport::default(), ReportFormat::SvgScatter)).unwrap();
        roxmltree::Document::parse(&empty).unwrap();
    }
}
