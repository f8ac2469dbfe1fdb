//! src–mt alignment read off the mt encoder's cross-attention, with
//! CSV / PGM / SVG heatmap export.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::model::{Model, SeqBatch, SessionOptions, Site, SourceMode};
use crate::numerics::Float;

/// Which mt-encoder layers contribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum LayerSpec {
    #[default]
    Last,
    AllMean,
    Index(usize),
}

/// How the heads of a layer are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum HeadAgg {
    #[default]
    Mean,
    Index(usize),
}

impl FromStr for LayerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "last" => Ok(Self::Last),
            "all-mean" | "mean" => Ok(Self::AllMean),
            _ => s.parse().map(Self::Index).map_err(|_| {
                Error::Config(format!(
                    "layer spec {s:?}: expected last, all-mean or an index"
                ))
            }),
        }
    }
}

impl FromStr for HeadAgg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            _ => s.parse().map(Self::Index).map_err(|_| {
                Error::Config(format!("head aggregation {s:?}: expected mean or an index"))
            }),
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Last => f.write_str("last"),
            Self::AllMean => f.write_str("all-mean"),
            Self::Index(k) => write!(f, "{k}"),
        }
    }
}

impl fmt::Display for HeadAgg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mean => f.write_str("mean"),
            Self::Index(k) => write!(f, "{k}"),
        }
    }
}

/// How a map was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct Provenance {
    pub layers: LayerSpec,
    pub heads: HeadAgg,
}

/// `T_y × T_x` row-stochastic matrix: row `i` is mt token `i`'s
/// distribution over src tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    pub weights: Vec<Vec<f64>>,
    pub src_tokens: Vec<String>,
    pub mt_tokens: Vec<String>,
    /// `None` for imported maps.
    pub provenance: Option<Provenance>,
}

impl AttentionMap {
    pub fn new(
        weights: Vec<Vec<f64>>,
        src_tokens: Vec<String>,
        mt_tokens: Vec<String>,
    ) -> Result<Self> {
        if weights.len() != mt_tokens.len() || weights.iter().any(|r| r.len() != src_tokens.len()) {
            return Err(Error::Input(format!(
                "alignment matrix does not match {} mt × {} src tokens",
                mt_tokens.len(),
                src_tokens.len()
            )));
        }
        Ok(Self {
            weights,
            src_tokens,
            mt_tokens,
            provenance: None,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.mt_tokens.len(), self.src_tokens.len())
    }

    /// Largest deviation of a row sum from one.
    pub fn max_row_error(&self) -> f64 {
        self.weights
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Column of the largest weight in mt row `i` (first on ties).
    pub fn row_argmax(&self, i: usize) -> usize {
        argmax(&self.weights[i])
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &w) in row.iter().enumerate() {
        if w > row[best] {
            best = j;
        }
    }
    best
}

fn labels(vocab: Option<&Vocabulary>, ids: &[usize]) -> Vec<String> {
    match vocab {
        Some(v) => v.decode(ids),
        None => ids.iter().map(usize::to_string).collect(),
    }
}

/// Cross-attention of the mt encoder over `x'` for one (src, mt) pair,
/// reduced per `layers` and `heads` and renormalised row-wise.
pub fn extract_alignment<T: Float>(
    model: &Model<T>,
    vocab: Option<&Vocabulary>,
    x: &[usize],
    y: &[usize],
    layers: LayerSpec,
    heads: HeadAgg,
) -> Result<AttentionMap> {
    if model.config().mode != SourceMode::Multi {
        return Err(Error::Config(
            "alignment needs the multi-source model".into(),
        ));
    }
    let (n_layers, n_heads) = (model.config().n_layers, model.config().n_heads);
    if n_layers == 0 {
        return Err(Error::Config("model has no mt encoder layers".into()));
    }
    let chosen: Vec<usize> = match layers {
        LayerSpec::Last => vec![n_layers - 1],
        LayerSpec::AllMean => (0..n_layers).collect(),
        LayerSpec::Index(k) if k < n_layers => vec![k],
        LayerSpec::Index(k) => {
            return Err(Error::Config(format!(
                "layer {k} out of range (model has {n_layers})"
            )));
        }
    };
    let head_ids: Vec<usize> = match heads {
        HeadAgg::Mean => (0..n_heads).collect(),
        HeadAgg::Index(h) if h < n_heads => vec![h],
        HeadAgg::Index(h) => {
            return Err(Error::Config(format!(
                "head {h} out of range (model has {n_heads})"
            )));
        }
    };

    let mut session = model.session(SessionOptions::eval());
    let (_, records) = session.encode(&SeqBatch::single(x)?, &SeqBatch::single(y)?)?;
    let (ty, tx) = (y.len(), x.len());
    let mut acc = vec![vec![0.0f64; tx]; ty];
    for rec in records
        .iter()
        .filter(|r| r.site == Site::MtCross && chosen.contains(&r.layer))
    {
        for &h in &head_ids {
            for (row, src_row) in acc.iter_mut().zip(rec.matrix(h, 0)) {
                for (a, w) in row.iter_mut().zip(src_row) {
                    *a += w.as_f64();
                }
            }
        }
    }
    for row in &mut acc {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|w| *w /= s);
        }
    }
    let mut map = AttentionMap::new(acc, labels(vocab, x), labels(vocab, y))?;
    map.provenance = Some(Provenance { layers, heads });
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapFormat {
    Csv,
    Pgm,
    Svg,
}

impl FromStr for HeatmapFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "pgm" => Ok(Self::Pgm),
            "svg" => Ok(Self::Svg),
            _ => Err(Error::Config(format!(
                "unknown heatmap format {s:?} (csv, pgm or svg)"
            ))),
        }
    }
}

impl HeatmapFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Pgm => "pgm",
            Self::Svg => "svg",
        }
    }
}

/// Gray level of a weight; lighter means more probable.
pub fn gray(w: f64) -> u8 {
    (w.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn csv_bytes(map: &AttentionMap) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Input(e.to_string());
    w.write_record(std::iter::once("").chain(map.src_tokens.iter().map(String::as_str)))
        .map_err(fail)?;
    for (tok, row) in map.mt_tokens.iter().zip(&map.weights) {
        let cells: Vec<String> = std::iter::once(tok.clone())
            .chain(row.iter().map(|v| format!("{v:.6}")))
            .collect();
        w.write_record(&cells).map_err(fail)?;
    }
    w.into_inner().map_err(|e| Error::Input(e.to_string()))
}

fn pgm_text(map: &AttentionMap) -> String {
    let (h, w) = map.shape();
    let mut out = format!("P2\n{w} {h}\n255\n");
    for row in &map.weights {
        let cells: Vec<String> = row.iter().map(|&v| gray(v).to_string()).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn svg_text(map: &AttentionMap) -> String {
    const CELL: usize = 28;
    const MARGIN: usize = 80;
    let (h, w) = map.shape();
    let (width, height) = (MARGIN + w * CELL + 10, MARGIN + h * CELL + 10);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="monospace" font-size="11">"#
    );
    for (j, tok) in map.src_tokens.iter().enumerate() {
        let x = MARGIN + j * CELL + CELL / 2;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" transform="rotate(-60 {x} {})" text-anchor="start">{}</text>"#,
            MARGIN - 6,
            MARGIN - 6,
            xml_escape(tok)
        );
    }
    for (i, (tok, row)) in map.mt_tokens.iter().zip(&map.weights).enumerate() {
        let y = MARGIN + i * CELL;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            MARGIN - 6,
            y + CELL / 2 + 4,
            xml_escape(tok)
        );
        for (j, &v) in row.iter().enumerate() {
            let g = gray(v);
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{y}" width="{CELL}" height="{CELL}" fill="rgb({g},{g},{g})"><title>{v:.6}</title></rect>"#,
                MARGIN + j * CELL
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `map` to `path` in the given format.
pub fn emit_heatmap(map: &AttentionMap, path: &Path, format: HeatmapFormat) -> Result<()> {
    let bytes = match format {
        HeatmapFormat::Csv => csv_bytes(map)?,
        HeatmapFormat::Pgm => pgm_text(map).into_bytes(),
        HeatmapFormat::Svg => svg_text(map).into_bytes(),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a map in the CSV heatmap layout.
pub fn read_csv(path: &Path) -> Result<AttentionMap> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let mut rows = r.records();
    let header = rows
        .next()
        .ok_or_else(|| Error::Input(format!("{}: empty alignment file", path.display())))?
        .map_err(|e| Error::Input(e.to_string()))?;
    let src_tokens: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let (mut mt_tokens, mut weights) = (Vec::new(), Vec::new());
    for rec in rows {
        let rec = rec.map_err(|e| Error::Input(e.to_string()))?;
        mt_tokens.push(rec.get(0).unwrap_or_default().to_owned());
        let row = rec
            .iter()
            .skip(1)
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Input(format!("{}: bad weight {c:?}", path.display())))
            })
            .collect::<Result<Vec<f64>>>()?;
        weights.push(row);
    }
    AttentionMap::new(weights, src_tokens, mt_tokens)
}

/// Agreement between two maps of the same shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlignmentComparison {
    /// Fraction of mt rows whose argmax src position coincides.
    pub argmax_agreement: f64,
    /// Row-wise total-variation distance `½·Σ|p − q|`, averaged over rows.
    pub mean_tv_distance: f64,
}

pub fn compare_alignment(
    map: &AttentionMap,
    external: &AttentionMap,
) -> Result<AlignmentComparison> {
    if map.shape() != external.shape() {
        return Err(Error::Input(format!(
            "alignment shapes differ: {:?} vs {:?}",
            map.shape(),
            external.shape()
        )));
    }
    let rows = map.weights.len();
    if rows == 0 {
        return Err(Error::Input("empty alignment".into()));
    }
    let mut agree = 0;
    let mut tv = 0.0;
    for (p, q) in map.weights.iter().zip(&external.weights) {
        if argmax(p) == argmax(q) {
            agree += 1;
        }
        tv += 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    }
    Ok(AlignmentComparison {
        argmax_agreement: agree as f64 / rows as f64,
        mean_tv_distance: tv / rows as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(n: usize, p: &str) -> Vec<String> {
        (0..n).map(|i| format!("{p}{i}")).collect()
    }

    #[test]
    fn uniform_map_is_gray_85() {
        let m = AttentionMap::new(vec![vec![1.0 / 3.0; 3]; 2], toks(3, "s"), toks(2, "t")).unwrap();
        let text = pgm_text(&m);
        let pixels: Vec<&str> = text
            .lines()
            .skip(3)
            .flat_map(str::split_whitespace)
            .collect();
        assert_eq!(pixels, vec!["85"; 6]);
        let one = AttentionMap::new(vec![vec![1.0]], toks(1, "s"), toks(1, "t")).unwrap();
        assert!(pgm_text(&one).ends_with("255\n255\n"));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let m = AttentionMap::new(
            vec![vec![0.25, 0.75], vec![0.123456, 0.876544]],
            vec!["s,1".into(), "s\"2".into()],
            toks(2, "t"),
        )
        .unwrap();
        emit_heatmap(&m, &p, HeatmapFormat::Csv).unwrap();
        let back = read_csv(&p).unwrap();
        assert_eq!(back.src_tokens, m.src_tokens);
        assert_eq!(back.mt_tokens, m.mt_tokens);
        for (a, b) in back
            .weights
            .iter()
            .flatten()
            .zip(m.weights.iter().flatten())
        {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn comparison_closed_forms() {
        let u = AttentionMap::new(vec![vec![0.5, 0.5]], toks(2, "s"), toks(1, "t")).unwrap();
        let o = AttentionMap::new(vec![vec![1.0, 0.0]], toks(2, "s"), toks(1, "t")).unwrap();
        let c = compare_alignment(&u, &o).unwrap();
        assert!((c.mean_tv_distance - 0.5).abs() < 1e-12);
        let c = compare_alignment(&o, &o).unwrap();
        assert_eq!((c.argmax_agreement, c.mean_tv_distance), (1.0, 0.0));
        let wide =
            AttentionMap::new(vec![vec![0.2, 0.3, 0.5]], toks(3, "s"), toks(1, "t")).unwrap();
        assert!(matches!(compare_alignment(&u, &wide), Err(Error::Input(_))));
    }

    #[test]
    fn specs_parse() {
        assert_eq!("last".parse::<LayerSpec>().unwrap(), LayerSpec::Last);
        assert_eq!("2".parse::<LayerSpec>().unwrap(), LayerSpec::Index(2));
        assert_eq!("mean".parse::<HeadAgg>().unwrap(), HeadAgg::Mean);
        assert!("top".parse::<HeadAgg>().is_err());
    }
}
