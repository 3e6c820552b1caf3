use crate::keyval::KeyValFile;
use thiserror::Error;

const DEFAULT_TABLES: &str = include_str!("reba_tables.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("section [{section}] is missing entry {entry}")]
    Missing { section: String, entry: String },
    #[error("section [{section}] does not cover angle {angle}")]
    Uncovered { section: String, angle: String },
    #[error("table_c is not monotone at ({row}, {col})")]
    NotMonotone { row: usize, col: usize },
}

/// Closed angle interval mapped to a part score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinRow {
    pub lo: f64,
    pub hi: f64,
    pub score: u8,
}

/// Ordered bins; the first interval containing the angle wins.
#[derive(Debug, Clone, PartialEq)]
pub struct Bins(pub Vec<BinRow>);

impl Bins {
    pub fn score(&self, angle: f64) -> u8 {
        self.0
            .iter()
            .find(|b| angle >= b.lo && angle <= b.hi)
            .map(|b| b.score)
            // Coverage is validated at load time; out-of-domain input
            // clamps to the nearest edge.
            .unwrap_or_else(|| self.score(angle.clamp(-180.0, 180.0)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartBins {
    pub trunk: Bins,
    pub neck: Bins,
    pub legs: Bins,
    pub upper_arm: Bins,
    pub lower_arm: Bins,
    pub wrist: Bins,
}

/// Worksheet lookup data. Indices are 1-based scores in the file and
/// 0-based here.
#[derive(Debug, Clone, PartialEq)]
pub struct RebaTables {
    /// `[neck][legs][trunk]`
    pub table_a: [[[u8; 5]; 4]; 3],
    /// `[lower_arm][wrist][upper_arm]`
    pub table_b: [[[u8; 6]; 3]; 2],
    /// `[score_a][score_b]`
    pub table_c: [[u8; 12]; 12],
    pub bins: PartBins,
}

impl Default for RebaTables {
    fn default() -> Self {
        Self::parse(DEFAULT_TABLES).expect("embedded REBA tables are valid")
    }
}

impl RebaTables {
    /// The embedded default file, for inspection or as a template.
    pub fn default_text() -> &'static str {
        DEFAULT_TABLES
    }

    pub fn parse(text: &str) -> Result<Self, TableError> {
        let file = KeyValFile::parse(text).map_err(|e| TableError::Syntax { line: e.line, message: e.message })?;
        let bins = PartBins {
            trunk: parse_bins(&file, "trunk", true, 1..=4)?,
            neck: parse_bins(&file, "neck", true, 1..=2)?,
            legs: parse_bins(&file, "legs", false, 1..=4)?,
            upper_arm: parse_bins(&file, "upper_arm", true, 1..=6)?,
            lower_arm: parse_bins(&file, "lower_arm", false, 1..=2)?,
            wrist: parse_bins(&file, "wrist", false, 1..=3)?,
        };

        let mut table_a = [[[0u8; 5]; 4]; 3];
        fill(&file, "table_a", [3, 4, 5], 1..=9, |i, v| table_a[i[0]][i[1]][i[2]] = v)?;
        let mut table_b = [[[0u8; 6]; 3]; 2];
        fill(&file, "table_b", [2, 3, 6], 1..=9, |i, v| table_b[i[0]][i[1]][i[2]] = v)?;
        let mut table_c = [[0u8; 12]; 12];
        fill(&file, "table_c", [12, 12], 1..=12, |i, v| table_c[i[0]][i[1]] = v)?;

        for r in 0..12 {
            for c in 0..12 {
                let up = r > 0 && table_c[r][c] < table_c[r - 1][c];
                let left = c > 0 && table_c[r][c] < table_c[r][c - 1];
                if up || left {
                    return Err(TableError::NotMonotone { row: r + 1, col: c + 1 });
                }
            }
        }
        Ok(Self { table_a, table_b, table_c, bins })
    }
}

fn syntax(line: usize, message: impl Into<String>) -> TableError {
    TableError::Syntax { line, message: message.into() }
}

fn parse_bins(
    file: &KeyValFile,
    part: &str,
    signed: bool,
    range: std::ops::RangeInclusive<u8>,
) -> Result<Bins, TableError> {
    let section = format!("bins.{part}");
    let mut rows = Vec::new();
    for e in file.section(&section) {
        let edges: Vec<f64> = e.key.split_whitespace().filter_map(|t| t.parse().ok()).collect();
        if edges.len() != 2 || edges[0] > edges[1] {
            return Err(syntax(e.line, format!("expected `lo hi = score`, found `{} = {}`", e.key, e.value)));
        }
        let score: u8 = e.value.parse().map_err(|_| syntax(e.line, format!("bad score `{}`", e.value)))?;
        if !range.contains(&score) {
            return Err(syntax(e.line, format!("{part} score {score} outside {range:?}")));
        }
        rows.push(BinRow { lo: edges[0], hi: edges[1], score });
    }
    // Coverage: the union of closed intervals must span the whole domain.
    let lo = if signed { -180.0 } else { 0.0 };
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut reach = lo;
    let mut started = false;
    for r in &sorted {
        if r.lo > reach || (!started && r.lo > lo) {
            break;
        }
        started = true;
        reach = reach.max(r.hi);
    }
    if !started || reach < 180.0 {
        return Err(TableError::Uncovered { section, angle: format!("{reach}") });
    }
    Ok(Bins(rows))
}

fn fill<const N: usize>(
    file: &KeyValFile,
    section: &str,
    dims: [usize; N],
    range: std::ops::RangeInclusive<u8>,
    mut set: impl FnMut([usize; N], u8),
) -> Result<(), TableError> {
    let total: usize = dims.iter().product();
    let mut seen = vec![false; total];
    for e in file.section(section) {
        let idx: Vec<usize> = e.key.split_whitespace().filter_map(|t| t.parse().ok()).collect();
        if idx.len() != N || idx.iter().zip(dims).any(|(&i, d)| i == 0 || i > d) {
            return Err(syntax(e.line, format!("bad index `{}` for [{section}]", e.key)));
        }
        let value: u8 = e.value.parse().map_err(|_| syntax(e.line, format!("bad value `{}`", e.value)))?;
        if !range.contains(&value) {
            return Err(syntax(e.line, format!("value {value} outside {range:?}")));
        }
        let mut at = [0usize; N];
        let mut flat = 0;
        for k in 0..N {
            at[k] = idx[k] - 1;
            flat = flat * dims[k] + at[k];
        }
        seen[flat] = true;
        set(at, value);
    }
    if let Some(flat) = seen.iter().position(|s| !s) {
        let mut rem = flat;
        let mut entry = [0usize; N];
        for k in (0..N).rev() {
            entry[k] = rem % dims[k] + 1;
            rem /= dims[k];
        }
        let entry = entry.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        return Err(TableError::Missing { section: section.into(), entry });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tables_load() {
        let t = RebaTables::default();
        assert_eq!(t.table_a[0][0][0], 1);
        assert_eq!(t.table_a[2][3][4], 9);
        assert_eq!(t.table_b[1][2][5], 9);
        assert_eq!(t.table_c[11][11], 12);
        assert_eq!(t.table_c[5][0], 6);
    }

    #[test]
    fn bins_match_worksheet_edges() {
        let b = RebaTables::default().bins;
        assert_eq!(b.trunk.score(0.0), 1);
        assert_eq!(b.trunk.score(20.0), 2);
        assert_eq!(b.trunk.score(20.5), 3);
        assert_eq!(b.trunk.score(-20.0), 2);
        assert_eq!(b.trunk.score(-21.0), 3);
        assert_eq!(b.trunk.score(61.0), 4);
        assert_eq!(b.neck.score(-1.0), 2);
        assert_eq!(b.lower_arm.score(0.0), 2);
        assert_eq!(b.lower_arm.score(80.0), 1);
        assert_eq!(b.upper_arm.score(95.0), 4);
        assert_eq!(b.wrist.score(16.0), 2);
        assert_eq!(b.legs.score(45.0), 2);
    }

    #[test]
    fn missing_entry_is_reported() {
        let text = RebaTables::default_text().replace("3 4 5 = 9\n", "");
        assert_eq!(
            RebaTables::parse(&text),
            Err(TableError::Missing { section: "table_a".into(), entry: "3 4 5".into() })
        );
    }

    #[test]
    fn non_monotone_table_c_is_rejected() {
        let text = RebaTables::default_text().replace("6 1 = 6\n", "6 1 = 3\n");
        assert_eq!(RebaTables::parse(&text), Err(TableError::NotMonotone { row: 6, col: 1 }));
    }

    #[test]
    fn bin_gaps_are_rejected() {
        let text = RebaTables::default_text().replace("15 180 = 2", "20 180 = 2");
        assert!(matches!(RebaTables::parse(&text), Err(TableError::Uncovered { .. })));
    }
}
