//! File emission: CSV tables, SVG heatmaps, and run manifests.
//!
//! Every emitter renders to a `String` first (exact, reproducible bytes —
//! floats are written in their shortest round-trip form, newlines are LF)
//! and only then touches the filesystem, so determinism is testable without
//! IO. Heatmaps are standalone vector graphics; the value-to-color mapping
//! is recorded in the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::basis::{conserved_charge, ReducedBasis};
use crate::observables::ObservableSeries;
use crate::spectrum::SpectrumResult;
use crate::Result;

/// Shortest decimal that round-trips to the same f64 (`1.0`, `0.25`, `1e-9`).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/* CSV *************************************************************************/

/// `index,bitstring,charge` — one row per sector state, 1-based indices.
pub fn render_basis_csv(basis: &ReducedBasis) -> String {
    let mut out = String::from("index,bitstring,charge\n");
    let n = basis.qubit_count();
    for (k, &p) in basis.states().iter().enumerate() {
        let charge = conserved_charge(p, basis.layers());
        writeln!(out, "{},{},{}", k + 1, p.bitstring(n), charge).unwrap();
    }
    out
}

/// `t,layer,mean,std` — long format over a set of per-layer series.
pub fn render_occupation_csv(series: &[ObservableSeries]) -> String {
    let mut out = String::from("t,layer,mean,std\n");
    for s in series {
        for (k, &t) in s.times.iter().enumerate() {
            let std = s.std.as_ref().map_or(0.0, |v| v[k]);
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(t),
                s.probe,
                fmt_f64(s.values[k]),
                fmt_f64(std)
            )
            .unwrap();
        }
    }
    out
}

/// `t,probe_qubit,value,std,n` — for OTOC and Holevo series.
pub fn render_series_csv(series: &[ObservableSeries]) -> String {
    let mut out = String::from("t,probe_qubit,value,std,n\n");
    for s in series {
        for (k, &t) in s.times.iter().enumerate() {
            let std = s.std.as_ref().map_or(0.0, |v| v[k]);
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(t),
                s.probe,
                fmt_f64(s.values[k]),
                fmt_f64(std),
                s.count
            )
            .unwrap();
        }
    }
    out
}

/// `realization,arrival_time` — empty time field when never crossed.
pub fn render_arrivals_csv(arrivals: &[(u32, Option<f64>)]) -> String {
    let mut out = String::from("realization,arrival_time\n");
    for (r, t) in arrivals {
        match t {
            Some(t) => writeln!(out, "{r},{}", fmt_f64(*t)).unwrap(),
            None => writeln!(out, "{r},").unwrap(),
        }
    }
    out
}

/// `realization,n,r` rows plus one `summary,<excluded>,<mean>` row pooled
/// over all realizations.
pub fn render_spectrum_csv(results: &[(u32, SpectrumResult)]) -> String {
    let mut out = String::from("realization,n,r\n");
    let mut pooled_sum = 0.0;
    let mut pooled_count = 0usize;
    let mut excluded = 0usize;
    for (realization, res) in results {
        for (n, &r) in res.ratios.iter().enumerate() {
            writeln!(out, "{realization},{},{}", n + 1, fmt_f64(r)).unwrap();
        }
        pooled_sum += res.ratios.iter().sum::<f64>();
        pooled_count += res.ratios.len();
        excluded += res.excluded_degenerate;
    }
    let mean = if pooled_count > 0 {
        pooled_sum / pooled_count as f64
    } else {
        f64::NAN
    };
    writeln!(out, "summary,{excluded},{}", fmt_f64(mean)).unwrap();
    out
}

/* Heatmaps ********************************************************************/

/// Color scale of a heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Palette {
    /// Sequential dark-to-bright scale for values in `[0, 1]`.
    Sequential,
    /// Blue-white-red scale for values in `[-1, 1]`.
    Diverging,
}

impl Palette {
    /// Piecewise-linear anchors in RGB.
    fn anchors(self) -> &'static [(f64, [u8; 3])] {
        match self {
            Palette::Sequential => &[
                (0.00, [68, 1, 84]),
                (0.25, [59, 82, 139]),
                (0.50, [33, 145, 140]),
                (0.75, [94, 201, 98]),
                (1.00, [253, 231, 37]),
            ],
            Palette::Diverging => &[
                (0.00, [33, 102, 172]),
                (0.50, [247, 247, 247]),
                (1.00, [178, 24, 43]),
            ],
        }
    }

    /// Map a fraction in `[0, 1]` to `#rrggbb`.
    pub fn color(self, frac: f64) -> String {
        let f = frac.clamp(0.0, 1.0);
        let anchors = self.anchors();
        let mut rgb = anchors[anchors.len() - 1].1;
        for w in anchors.windows(2) {
            let (f0, c0) = w[0];
            let (f1, c1) = w[1];
            if f <= f1 {
                let u = if f1 > f0 { (f - f0) / (f1 - f0) } else { 0.0 };
                rgb = [
                    (c0[0] as f64 + u * (c1[0] as f64 - c0[0] as f64)).round() as u8,
                    (c0[1] as f64 + u * (c1[1] as f64 - c0[1] as f64)).round() as u8,
                    (c0[2] as f64 + u * (c1[2] as f64 - c0[2] as f64)).round() as u8,
                ];
                break;
            }
        }
        format!("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2])
    }

    pub fn describe(self) -> &'static str {
        match self {
            Palette::Sequential => {
                "sequential (dark violet -> yellow), linear over the pinned value range"
            }
            Palette::Diverging => {
                "diverging (blue -> white -> red), linear over the pinned value range"
            }
        }
    }
}

/// A space-time matrix ready for rendering: one row per layer (row 0 on
/// top), one column per grid time.
#[derive(Debug, Clone)]
pub struct Heatmap {
    pub title: String,
    /// Row-major values; all rows must share the column count.
    pub rows: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    /// Pinned color range (e.g. `[0, 1]` for occupation, `[-1, 1]` for OTOC).
    pub value_range: (f64, f64),
    pub palette: Palette,
}

impl Heatmap {
    /// Build from one series per layer (values clipped into the pinned
    /// range only for coloring, never altered).
    pub fn from_layer_series(
        title: &str,
        series: &[ObservableSeries],
        value_range: (f64, f64),
        palette: Palette,
    ) -> Self {
        Heatmap {
            title: title.to_string(),
            rows: series.iter().map(|s| s.values.clone()).collect(),
            times: series.first().map(|s| s.times.clone()).unwrap_or_default(),
            value_range,
            palette,
        }
    }

    /// Render as a standalone SVG document.
    pub fn render_svg(&self) -> String {
        let n_rows = self.rows.len().max(1);
        let n_cols = self.rows.first().map_or(1, |r| r.len()).max(1);
        let cell_h = 28.0_f64;
        let plot_w = 640.0_f64;
        let cell_w = plot_w / n_cols as f64;
        let plot_h = cell_h * n_rows as f64;
        let (ml, mt, mr, mb) = (64.0, 34.0, 16.0, 44.0);
        let width = ml + plot_w + mr;
        let height = mt + plot_h + mb;
        let (lo, hi) = self.value_range;
        let span = if hi > lo { hi - lo } else { 1.0 };

        let mut svg = String::new();
        writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
        )
        .unwrap();
        writeln!(
            svg,
            r#"<rect width="{width:.0}" height="{height:.0}" fill="white"/>"#
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.1}" y="20" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            ml + plot_w / 2.0,
            self.title
        )
        .unwrap();
        for (row, values) in self.rows.iter().enumerate() {
            let y = mt + row as f64 * cell_h;
            for (col, &v) in values.iter().enumerate() {
                let x = ml + col as f64 * cell_w;
                let frac = (v - lo) / span;
                writeln!(
                    svg,
                    r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{cell_h:.2}" fill="{c}"/>"#,
                    w = cell_w + 0.5, // overlap a hair to avoid hairline gaps
                    c = self.palette.color(frac)
                )
                .unwrap();
            }
            writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="end">layer {}</text>"#,
                ml - 8.0,
                y + cell_h / 2.0 + 4.0,
                row + 1
            )
            .unwrap();
        }
        // time axis: start, middle, end ticks
        let t0 = self.times.first().copied().unwrap_or(0.0);
        let t1 = self.times.last().copied().unwrap_or(0.0);
        for (frac, t) in [(0.0, t0), (0.5, 0.5 * (t0 + t1)), (1.0, t1)] {
            writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{:.1}</text>"#,
                ml + frac * plot_w,
                mt + plot_h + 18.0,
                t
            )
            .unwrap();
        }
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">t  [1/g]</text>"#,
            ml + plot_w / 2.0,
            mt + plot_h + 36.0
        )
        .unwrap();
        writeln!(svg, "</svg>").unwrap();
        svg
    }
}

/* Manifest ********************************************************************/

/// Provenance record written next to every output set.
///
/// Re-running the recorded subcommand with the recorded resolved
/// configuration reproduces the CSV outputs byte for byte (the manifest
/// itself carries the wall-clock duration and so differs between runs).
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    /// Subcommand that produced the outputs.
    pub command: String,
    /// Crate version tag.
    pub version: String,
    /// Fully resolved configuration, sorted by key.
    pub config: BTreeMap<String, String>,
    /// Master seed (duplicated from the config for quick lookup).
    pub seed: u64,
    /// Wall-clock duration of the run in seconds.
    pub duration_seconds: f64,
    /// Files written, relative to the manifest's directory.
    pub outputs: Vec<String>,
    /// Free-form notes (color-map documentation and the like).
    pub notes: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render_json())?;
        Ok(())
    }
}

/// Write pre-rendered text, creating parent directories as needed.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::SeriesKind;

    fn toy_series(probe: usize, values: Vec<f64>) -> ObservableSeries {
        let n = values.len();
        ObservableSeries {
            kind: SeriesKind::Otoc,
            probe,
            source: Some(1),
            times: (0..n).map(|k| k as f64).collect(),
            values,
            std: None,
            count: 1,
            seed: 0,
            realization: Some(0),
        }
    }

    #[test]
    fn float_formatting_is_shortest_round_trip() {
        assert_eq!(fmt_f64(1.0), "1.0");
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(-0.5), "-0.5");
        let tiny = fmt_f64(1e-9);
        assert_eq!(tiny.parse::<f64>().unwrap(), 1e-9);
        let pi = fmt_f64(std::f64::consts::PI);
        assert_eq!(pi.parse::<f64>().unwrap(), std::f64::consts::PI);
    }

    #[test]
    fn basis_csv_three_layers() {
        let basis = ReducedBasis::enumerate(3).unwrap();
        let csv = render_basis_csv(&basis);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6); // header + 5 states
        assert_eq!(lines[0], "index,bitstring,charge");
        assert_eq!(lines[1], "1,1000000,1");
        assert_eq!(lines[2], "2,0110000,1");
        assert_eq!(lines[5], "5,0001111,1");
    }

    #[test]
    fn empty_series_gives_header_only() {
        assert_eq!(render_series_csv(&[]), "t,probe_qubit,value,std,n\n");
        assert_eq!(render_occupation_csv(&[]), "t,layer,mean,std\n");
        assert_eq!(render_arrivals_csv(&[]), "realization,arrival_time\n");
    }

    #[test]
    fn series_csv_rows() {
        let s = toy_series(2, vec![1.0, -0.25]);
        let csv = render_series_csv(std::slice::from_ref(&s));
        assert_eq!(csv, "t,probe_qubit,value,std,n\n0.0,2,1.0,0.0,1\n1.0,2,-0.25,0.0,1\n");
    }

    #[test]
    fn arrivals_csv_handles_missing() {
        let csv = render_arrivals_csv(&[(0, Some(1.5)), (1, None)]);
        assert_eq!(csv, "realization,arrival_time\n0,1.5\n1,\n");
    }

    #[test]
    fn rendering_is_deterministic() {
        let s = toy_series(3, vec![0.5, 0.25, 0.0]);
        let a = render_series_csv(std::slice::from_ref(&s));
        let b = render_series_csv(std::slice::from_ref(&s));
        assert_eq!(a, b);
    }

    #[test]
    fn palette_endpoints() {
        assert_eq!(Palette::Sequential.color(0.0), "#440154");
        assert_eq!(Palette::Sequential.color(1.0), "#fde725");
        assert_eq!(Palette::Diverging.color(0.5), "#f7f7f7");
        // out-of-range values clamp
        assert_eq!(Palette::Diverging.color(-3.0), Palette::Diverging.color(0.0));
    }

    #[test]
    fn single_cell_heatmap_renders() {
        let h = Heatmap {
            title: "single".into(),
            rows: vec![vec![0.5]],
            times: vec![0.0],
            value_range: (0.0, 1.0),
            palette: Palette::Sequential,
        };
        let svg = h.render_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("layer 1"));
        assert_eq!(svg.matches("<rect").count(), 2); // background + one cell
    }

    #[test]
    fn manifest_serializes_with_sorted_config() {
        let mut config = BTreeMap::new();
        config.insert("layers".to_string(), "4".to_string());
        config.insert("mode".to_string(), "ideal".to_string());
        let m = RunManifest {
            command: "otoc".into(),
            version: "0.1.0".into(),
            config,
            seed: 7,
            duration_seconds: 0.25,
            outputs: vec!["otoc.csv".into()],
            notes: BTreeMap::new(),
        };
        let json = m.render_json();
        assert!(json.contains("\"command\": \"otoc\""));
        assert!(json.find("layers").unwrap() < json.find("mode").unwrap());
    }
}
