use std::collections::BTreeMap;
use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::eval::{k_for_proportion, EvalCurve};
use super::HarnessError;

/// Proportions whose selected sets are exported as selection paths.
pub const PATH_PROPORTIONS: [f64; 3] = [0.1, 0.2, 0.3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub method: String,
    pub mean_auroc: f64,
    /// Sum of selector runtimes over datasets.
    pub selector_runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub method: String,
    pub dataset: String,
    pub proportion: f64,
    pub k: usize,
    pub selected: Vec<String>,
}

/// Cross-dataset summary of a set of curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    /// In order of first appearance.
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    /// Proportions with at least one dataset evaluated by every method.
    pub proportions: Vec<f64>,
    /// Datasets contributing to each proportion.
    pub datasets_per_proportion: Vec<usize>,
    /// Per method, the mean AUROC over datasets at each proportion.
    pub mean_auroc: IndexMap<String, Vec<f64>>,
    /// Per method, the mean of its proportion series.
    pub mean_over_proportions: IndexMap<String, f64>,
    pub paths: Vec<PathRow>,
    /// Wall-clock figures vary between runs and are reported separately.
    #[serde(skip_serializing, default)]
    pub runtime: Vec<RuntimeRow>,
}

impl AggregateReport {
    /// Matrix with one row per method and one column per proportion,
    /// followed by the mean over proportions.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for p in &self.proportions {
            let _ = write!(out, ",{p}");
        }
        out.push_str(",mean\n");
        for m in &self.methods {
            out.push_str(&csv_field(m));
            for v in &self.mean_auroc[m] {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", self.mean_over_proportions[m]);
        }
        out
    }

    /// Methods ordered by mean AUROC, best first; ties by name.
    pub fn methods_by_mean(&self) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = self.mean_over_proportions.iter().map(|(m, s)| (m.clone(), *s)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Proportion keys compared exactly via their bit patterns.
fn key(p: f64) -> u64 {
    p.to_bits()
}

/// Averages curves across datasets using only the (dataset, proportion)
/// cells that every method has.
pub fn aggregate(curves: &[EvalCurve]) -> Result<AggregateReport, HarnessError> {
    if curves.is_empty() {
        return Err(HarnessError::NoCurves);
    }
    let mut methods: Vec<String> = Vec::new();
    let mut datasets: Vec<String> = Vec::new();
    let mut by_cell: IndexMap<(String, String), &EvalCurve> = IndexMap::new();
    let mut grid_of: IndexMap<String, (String, Vec<(u64, usize)>)> = IndexMap::new();
    for c in curves {
        if !methods.contains(&c.method) {
            methods.push(c.method.clone());
        }
        if !datasets.contains(&c.dataset) {
            datasets.push(c.dataset.clone());
        }
        if by_cell.insert((c.method.clone(), c.dataset.clone()), c).is_some() {
            return Err(HarnessError::DuplicateCurve {
                method: c.method.clone(),
                dataset: c.dataset.clone(),
            });
        }
        let grid: Vec<(u64, usize)> = c.points.iter().map(|p| (key(p.proportion), p.k)).collect();
        match grid_of.get(&c.dataset) {
            Some((first, g)) if *g != grid => {
                return Err(HarnessError::InconsistentProportions {
                    dataset: c.dataset.clone(),
                    first: first.clone(),
                    second: c.method.clone(),
                })
            }
            Some(_) => {}
            None => {
                grid_of.insert(c.dataset.clone(), (c.method.clone(), grid));
            }
        }
    }

    // Proportion -> datasets where every method has a curve.
    let mut cells: BTreeMap<u64, Vec<&str>> = BTreeMap::new();
    for d in &datasets {
        if !methods.iter().all(|m| by_cell.contains_key(&(m.clone(), d.clone()))) {
            continue;
        }
        for &(p, _) in &grid_of[d].1 {
            cells.entry(p).or_default().push(d);
        }
    }
    let mut proportions: Vec<f64> = cells.keys().map(|&b| f64::from_bits(b)).collect();
    proportions.sort_by(f64::total_cmp);

    let mut mean_auroc = IndexMap::new();
    let mut mean_over_proportions = IndexMap::new();
    for m in &methods {
        let series: Vec<f64> = proportions
            .iter()
            .map(|&p| {
                let ds = &cells[&key(p)];
                let total: f64 = ds
                    .iter()
                    .map(|d| {
                        let c = by_cell[&(m.clone(), d.to_string())];
                        c.points.iter().find(|pt| key(pt.proportion) == key(p)).expect("grid checked").auroc
                    })
                    .sum();
                total / ds.len() as f64
            })
            .collect();
        let mean = if series.is_empty() {
            f64::NAN
        } else {
            series.iter().sum::<f64>() / series.len() as f64
        };
        mean_auroc.insert(m.clone(), series);
        mean_over_proportions.insert(m.clone(), mean);
    }

    let runtime = methods
        .iter()
        .map(|m| RuntimeRow {
            method: m.clone(),
            mean_auroc: mean_over_proportions[m],
            selector_runtime_seconds: curves.iter().filter(|c| &c.method == m).map(|c| c.selector_runtime_seconds).sum(),
        })
        .collect();

    let mut paths = Vec::new();
    for m in &methods {
        for d in &datasets {
            let Some(c) = by_cell.get(&(m.clone(), d.clone())) else {
                continue;
            };
            let n = c.points.last().map_or(0, |p| p.k);
            for p in PATH_PROPORTIONS {
                let k = k_for_proportion(p, n);
                if let Some(pt) = c.points.iter().find(|pt| pt.k == k) {
                    paths.push(PathRow {
                        method: m.clone(),
                        dataset: d.clone(),
                        proportion: p,
                        k,
                        selected: pt.selected.clone(),
                    });
                }
            }
        }
    }

    let datasets_per_proportion = proportions.iter().map(|p| cells[&key(*p)].len()).collect();
    drop(cells);
    Ok(AggregateReport {
        methods,
        datasets,
        datasets_per_proportion,
        proportions,
        mean_auroc,
        mean_over_proportions,
        paths,
        runtime,
    })
}
