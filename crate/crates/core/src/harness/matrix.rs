use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{parallel_map, prepare_entry, run_cell, CellStatus, HarnessError, MisuseManifestEntry, PipelineOptions, RunReport};
use crate::filter::{SearchImp, SearchLoc, StrategyConfig};
use crate::stats::{wilcoxon_signed_rank, ALPHA};

/// A paired signed-rank comparison of relative pattern frequencies between
/// two groups of cells, paired by entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub strategy: String,
    pub condition: String,
    pub group_a: String,
    pub group_b: String,
    pub pairs: usize,
    pub mean_a: Option<f64>,
    pub mean_b: Option<f64>,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub significant: Option<bool>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub sr_grid: Vec<f64>,
    pub cells: Vec<RunReport>,
    pub comparisons: Vec<Comparison>,
    /// Per threshold, entries with a fix occurrence in at least one cell.
    pub entries_with_fix_per_sr: Vec<(f64, usize)>,
}

fn loc_name(l: SearchLoc) -> &'static str {
    match l {
        SearchLoc::Internal => "internal",
        SearchLoc::External => "external",
        SearchLoc::Both => "both",
    }
}

fn imp_name(i: SearchImp) -> &'static str {
    match i {
        SearchImp::AllImports => "all imports",
        SearchImp::MisusedImports => "misused imports",
    }
}

type CellKey = (String, SearchLoc, SearchImp, u64, bool);

struct Lookup<'a> {
    entries: Vec<String>,
    cells: HashMap<CellKey, &'a RunReport>,
}

impl Lookup<'_> {
    fn freq(&self, entry: &str, loc: SearchLoc, imp: SearchImp, sr: f64, mf: bool) -> Option<f64> {
        let r = self.cells.get(&(entry.to_string(), loc, imp, sr.to_bits(), mf))?;
        (r.status == CellStatus::Completed).then_some(r.relative_pattern_frequency).flatten()
    }

    fn compare(&self, strategy: &str, condition: String, a: (String, CellSel), b: (String, CellSel)) -> Comparison {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for e in &self.entries {
            let (Some(x), Some(y)) = (self.freq(e, a.1 .0, a.1 .1, a.1 .2, a.1 .3), self.freq(e, b.1 .0, b.1 .1, b.1 .2, b.1 .3))
            else {
                continue;
            };
            xs.push(x);
            ys.push(y);
        }
        let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        let mut c = Comparison {
            strategy: strategy.into(),
            condition,
            group_a: a.0,
            group_b: b.0,
            pairs: xs.len(),
            mean_a: mean(&xs),
            mean_b: mean(&ys),
            statistic: None,
            p_value: None,
            significant: None,
            note: None,
        };
        if xs.is_empty() {
            c.note = Some("no paired observations".into());
            return c;
        }
        match wilcoxon_signed_rank(&xs, &ys) {
            Ok(t) => {
                c.statistic = Some(t.statistic);
                c.p_value = Some(t.p_value);
                c.significant = Some(t.p_value < ALPHA);
            }
            Err(e) => c.note = Some(e.to_string()),
        }
        c
    }
}

type CellSel = (SearchLoc, SearchImp, f64, bool);

/// The comparisons between single strategies, each on groups that differ in
/// that strategy only, with the other filters held off.
fn comparisons(lookup: &Lookup<'_>, sr_grid: &[f64]) -> Vec<Comparison> {
    let locs = [SearchLoc::Internal, SearchLoc::External];
    let imps = [SearchImp::AllImports, SearchImp::MisusedImports];
    let has_zero = sr_grid.contains(&0.0);
    let mut out = Vec::new();
    if has_zero {
        for imp in imps {
            out.push(lookup.compare(
                "search_loc",
                format!("sr=0, no method filter, {}", imp_name(imp)),
                ("internal".into(), (SearchLoc::Internal, imp, 0.0, false)),
                ("external".into(), (SearchLoc::External, imp, 0.0, false)),
            ));
        }
        for loc in locs {
            out.push(lookup.compare(
                "search_imp",
                format!("sr=0, no method filter, {}", loc_name(loc)),
                ("all imports".into(), (loc, SearchImp::AllImports, 0.0, false)),
                ("misused imports".into(), (loc, SearchImp::MisusedImports, 0.0, false)),
            ));
        }
    }
    for loc in locs {
        for imp in imps {
            for (i, &a) in sr_grid.iter().enumerate() {
                for &b in &sr_grid[i + 1..] {
                    out.push(lookup.compare(
                        "filter_file",
                        format!("no method filter, {}, {}", loc_name(loc), imp_name(imp)),
                        (format!("sr={a}"), (loc, imp, a, false)),
                        (format!("sr={b}"), (loc, imp, b, false)),
                    ));
                }
            }
        }
    }
    if has_zero {
        for loc in locs {
            for imp in imps {
                out.push(lookup.compare(
                    "filter_method",
                    format!("sr=0, {}, {}", loc_name(loc), imp_name(imp)),
                    ("off".into(), (loc, imp, 0.0, false)),
                    ("on".into(), (loc, imp, 0.0, true)),
                ));
            }
        }
    }
    out
}

/// Runs every strategy cell for every entry and compares the strategies.
pub fn run_matrix(entries: &[MisuseManifestEntry], sr_grid: &[f64], opts: &PipelineOptions) -> Result<MatrixReport, HarnessError> {
    if entries.is_empty() {
        return Err(HarnessError::EmptyManifest);
    }
    let prepared = parallel_map(entries, opts.workers, prepare_entry);
    let configs = StrategyConfig::matrix(sr_grid);
    let jobs: Vec<(usize, StrategyConfig)> =
        (0..prepared.len()).flat_map(|i| configs.iter().map(move |c| (i, *c))).collect();
    let cells = parallel_map(&jobs, opts.workers, |(i, c)| run_cell(&prepared[*i], c, opts));

    let lookup = Lookup {
        entries: entries.iter().map(|e| e.id.clone()).collect(),
        cells: cells
            .iter()
            .map(|r| {
                let c = r.config;
                ((r.entry_id.clone(), c.search_loc, c.search_imp, c.sr.to_bits(), c.method_filter), r)
            })
            .collect(),
    };
    let comparisons = comparisons(&lookup, sr_grid);
    let entries_with_fix_per_sr = sr_grid
        .iter()
        .map(|&sr| {
            let n = entries
                .iter()
                .filter(|e| {
                    cells.iter().any(|r| {
                        r.entry_id == e.id && r.config.sr == sr && r.relative_pattern_frequency.is_some_and(|f| f > 0.0)
                    })
                })
                .count();
            (sr, n)
        })
        .collect();
    Ok(MatrixReport { sr_grid: sr_grid.to_vec(), cells, comparisons, entries_with_fix_per_sr })
}
