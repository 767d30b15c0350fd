//! CSV and SVG reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use crate::refresh::PolicyKind;

pub const CSV_HEADER: &str = "policy,density_gb,seed,cores,weighted_speedup,degradation_vs_ideal,mean_read_latency_cycles,refresh_blocked_cycles,overlap_ratio,energy_norm";

#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub policy: PolicyKind,
    pub density_gb: u32,
    pub seed: u64,
    pub cores: usize,
    pub weighted_speedup: f64,
    pub degradation_vs_ideal: f64,
    pub mean_read_latency_cycles: f64,
    pub refresh_blocked_cycles: u64,
    pub overlap_ratio: f64,
    pub energy_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Svg,
}

/// Sort order of merged reports.
pub fn sort_rows(rows: &mut [StatsRow]) {
    rows.sort_by(|a, b| (a.policy, a.density_gb, a.seed).cmp(&(b.policy, b.density_gb, b.seed)));
}

pub fn csv(rows: &[StatsRow]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.3},{},{:.6},{:.6}",
            r.policy.name(),
            r.density_gb,
            r.seed,
            r.cores,
            r.weighted_speedup,
            r.degradation_vs_ideal,
            r.mean_read_latency_cycles,
            r.refresh_blocked_cycles,
            r.overlap_ratio,
            r.energy_norm
        );
    }
    out
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const COLORS: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

/// Bar chart of mean weighted speedup, one group per density.
pub fn svg(rows: &[StatsRow]) -> String {
    let mut groups: BTreeMap<u32, BTreeMap<PolicyKind, (f64, usize)>> = BTreeMap::new();
    for r in rows {
        let e = groups.entry(r.density_gb).or_default().entry(r.policy).or_insert((0.0, 0));
        e.0 += r.weighted_speedup;
        e.1 += 1;
    }
    let policies: Vec<PolicyKind> = {
        let mut p: Vec<PolicyKind> = groups.values().flat_map(|g| g.keys().copied()).collect();
        p.sort();
        p.dedup();
        p
    };
    let max = groups
        .values()
        .flat_map(|g| g.values())
        .map(|&(sum, n)| sum / n as f64)
        .fold(0.0f64, f64::max)
        .max(1e-9);

    let (left, right, top, bottom) = (50.0, 130.0, 30.0, 40.0);
    let plot_w = WIDTH - left - right;
    let plot_h = HEIGHT - top - bottom;
    let group_w = plot_w / groups.len().max(1) as f64;
    let bar_w = group_w * 0.8 / policies.len().max(1) as f64;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="18" font-size="14" text-anchor="middle">mean weighted speedup by density</text>"#,
        left + plot_w / 2.0
    );
    let _ = writeln!(
        out,
        r##"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="#000"/>"##,
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    for (gi, (density, bars)) in groups.iter().enumerate() {
        let gx = left + gi as f64 * group_w + group_w * 0.1;
        let _ = writeln!(out, r#"<g class="density" data-density="{density}">"#);
        for (pi, policy) in policies.iter().enumerate() {
            let Some(&(sum, n)) = bars.get(policy) else { continue };
            let mean = sum / n as f64;
            let h = plot_h * mean / max;
            let _ = writeln!(
                out,
                r#"<rect class="bar" data-policy="{}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{} {}Gb {:.4}</title></rect>"#,
                policy.name(),
                gx + pi as f64 * bar_w,
                top + plot_h - h,
                bar_w,
                h,
                COLORS[pi % COLORS.len()],
                policy.name(),
                density,
                mean
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" font-size="12" text-anchor="middle">{density} Gb</text>"#,
            gx + group_w * 0.4,
            top + plot_h + 18.0
        );
        out.push_str("</g>\n");
    }
    for (pi, policy) in policies.iter().enumerate() {
        let y = top + 10.0 + pi as f64 * 18.0;
        let x = WIDTH - right + 15.0;
        let _ = writeln!(
            out,
            r#"<rect class="legend" x="{x}" y="{y}" width="12" height="12" fill="{}"/><text x="{}" y="{}" font-size="12">{}</text>"#,
            COLORS[pi % COLORS.len()],
            x + 18.0,
            y + 10.0,
            policy.name()
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn emit_report(rows: &[StatsRow], format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Csv => csv(rows).into_bytes(),
        ReportFormat::Svg => svg(rows).into_bytes(),
    }
}

pub fn write_report(rows: &[StatsRow], format: ReportFormat, sink: &mut impl io::Write) -> io::Result<()> {
    sink.write_all(&emit_report(rows, format))?;
    sink.flush()
}
