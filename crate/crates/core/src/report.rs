//! Serializable reports and their JSON and table renderings. Every map is
//! ordered and every rational is a `p/q` string, so output is byte-stable.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::limitpage::{Analysis, E1Page, E2Page, Variant};
use crate::strata::{Check, StrataDatum, ValidationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Table,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidateReport {
    pub n: usize,
    pub components: Vec<String>,
    pub nerve: Vec<String>,
    pub euler_oracle: i64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub fn validate_report(s: &StrataDatum, v: &ValidationReport) -> ValidateReport {
    ValidateReport {
        n: s.n,
        components: s.index.labels().to_vec(),
        nerve: s.nerve().into_iter().map(|x| s.index.key(x)).collect(),
        euler_oracle: s.euler_oracle(),
        passed: v.passed(),
        checks: v.checks.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRow {
    pub m: i64,
    pub q: i64,
    pub e1: usize,
    pub d1_rank: usize,
    /// Absent outside the cells where `E_2` is determined.
    pub e2: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellDump {
    pub m: i64,
    pub q: i64,
    pub summands: Vec<String>,
    pub d1: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageReport {
    pub variant: String,
    pub n: usize,
    pub complete: bool,
    pub m_range: (i64, i64),
    pub cells: Vec<CellRow>,
    pub dump: Option<Vec<CellDump>>,
}

fn summand_label(s: &StrataDatum, v: Variant, x: &crate::limitpage::Summand) -> String {
    match v {
        Variant::A => format!("σ={} r={} H^{}", s.index.key(x.sigma), x.r, x.degree),
        Variant::K => format!("A={} σ'={} r={} H^{}", s.index.key(x.cech), s.index.key(x.sigma), x.r, x.degree),
    }
}

pub fn page_report(s: &StrataDatum, e1: &E1Page, e2: &E2Page, dump: bool) -> PageReport {
    let n = s.n as i64;
    let cells: Vec<CellRow> = e1
        .cells
        .iter()
        .filter(|(&(_, q), c)| (0..=2 * n).contains(&q) && c.dim > 0)
        .map(|(&(m, q), c)| CellRow {
            m,
            q,
            e1: c.dim,
            d1_rank: e1.d1.get(&(m, q)).map_or(0, |d| d.rank()),
            e2: e2.cells.get(&(m, q)).map(|x| x.dim),
        })
        .collect();
    let dump = dump.then(|| {
        cells
            .iter()
            .map(|r| {
                let c = &e1.cells[&(r.m, r.q)];
                CellDump {
                    m: r.m,
                    q: r.q,
                    summands: c.summands.iter().map(|x| summand_label(s, e1.variant, x)).collect(),
                    d1: e1.d1.get(&(r.m, r.q)).map(|d| d.to_strings()).unwrap_or_default(),
                }
            })
            .collect()
    });
    PageReport {
        variant: format!("{:?}", e1.variant),
        n: s.n,
        complete: e1.complete,
        m_range: (e1.window.m_lo, e1.window.m_hi),
        cells,
        dump,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeRow {
    pub q: i64,
    pub betti: usize,
    pub weights: BTreeMap<i64, usize>,
    pub hodge: BTreeMap<i64, usize>,
    pub jordan: Vec<usize>,
    pub l_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MhsReport {
    pub n: usize,
    pub components: Vec<String>,
    pub degrees: Vec<DegreeRow>,
    pub euler: i64,
    pub euler_oracle: i64,
    pub trace: Vec<String>,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub fn mhs_report(s: &StrataDatum, an: &Analysis) -> MhsReport {
    let lim = &an.limit;
    let mut checks: Vec<Check> = lim.checks.clone();
    checks.extend(an.comparison.checks.iter().cloned());
    checks.extend(an.pairing.checks.iter().cloned());
    MhsReport {
        n: s.n,
        components: s.index.labels().to_vec(),
        degrees: lim
            .degrees
            .iter()
            .map(|d| DegreeRow {
                q: d.q,
                betti: d.weights.values().sum(),
                weights: d.weights.clone(),
                hodge: d.hodge.clone(),
                jordan: d.jordan.clone(),
                l_rank: d.l_rank,
            })
            .collect(),
        euler: lim.euler,
        euler_oracle: lim.euler_oracle,
        trace: an.pairing.trace.iter().map(crate::exactlin::format_rational).collect(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceRow {
    pub q: i64,
    pub i: usize,
    pub dim: usize,
    pub form: Vec<Vec<String>>,
    pub literal_form: Vec<Vec<String>>,
    pub positive: bool,
    pub literal_positive: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarizeReport {
    pub n: usize,
    pub hodge_tate: bool,
    pub pieces: Vec<PieceRow>,
    pub passed: bool,
    /// Every check of the pipeline, validation first.
    pub checks: Vec<Check>,
}

pub fn polarize_report(s: &StrataDatum, an: &Analysis) -> PolarizeReport {
    let checks: Vec<Check> = an.all_checks().into_iter().cloned().collect();
    let pieces = an
        .polarization
        .as_ref()
        .map(|p| {
            p.pieces
                .iter()
                .map(|x| PieceRow {
                    q: x.q,
                    i: x.i,
                    dim: x.dim,
                    form: x.form.to_strings(),
                    literal_form: x.literal_form.to_strings(),
                    positive: x.positive,
                    literal_positive: x.literal_positive,
                })
                .collect()
        })
        .unwrap_or_default();
    PolarizeReport {
        n: s.n,
        hodge_tate: an.polarization.is_some(),
        pieces,
        passed: an.polarization.is_some() && checks.iter().all(|c| c.passed),
        checks,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareRow {
    pub m: i64,
    pub q: i64,
    pub dim_a: usize,
    pub dim_k: usize,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareReport {
    pub n: usize,
    pub cells: Vec<CompareRow>,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub fn compare_report(s: &StrataDatum, an: &Analysis) -> CompareReport {
    let c = &an.comparison;
    CompareReport {
        n: s.n,
        cells: c
            .cells
            .iter()
            .filter(|(_, v)| v.0 + v.1 > 0)
            .map(|(&(m, q), &(dim_a, dim_k, rank))| CompareRow { m, q, dim_a, dim_k, rank })
            .collect(),
        passed: c.checks.iter().all(|x| x.passed),
        checks: c.checks.clone(),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(r: &T) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serializes");
    s.push('\n');
    s
}

fn checks_table(out: &mut String, checks: &[Check]) {
    for c in checks {
        let mark = if c.passed { "pass" } else { "FAIL" };
        match &c.witness {
            Some(w) => writeln!(out, "  {mark}  {}: {w}", c.name),
            None => writeln!(out, "  {mark}  {}", c.name),
        }
        .unwrap();
    }
}

fn join_map(m: &BTreeMap<i64, usize>, f: impl Fn(i64, usize) -> String) -> String {
    if m.is_empty() {
        return "-".into();
    }
    m.iter().map(|(&k, &v)| f(k, v)).collect::<Vec<_>>().join(" ")
}

pub fn validate_table(r: &ValidateReport) -> String {
    let mut out = String::new();
    writeln!(out, "strata datum: n = {}, components {}", r.n, r.components.join(" ")).unwrap();
    writeln!(out, "nerve: {}", r.nerve.iter().map(|k| format!("{{{k}}}")).collect::<Vec<_>>().join(" ")).unwrap();
    writeln!(out, "Euler oracle: {}", r.euler_oracle).unwrap();
    checks_table(&mut out, &r.checks);
    out
}

pub fn page_table(r: &PageReport) -> String {
    let mut out = String::new();
    let kind = if r.complete { "complete" } else { "window" };
    writeln!(out, "page {} (n = {}, {kind} m ∈ [{}, {}])", r.variant, r.n, r.m_range.0, r.m_range.1).unwrap();
    writeln!(out, "{:>4} {:>4} {:>4} {:>5} {:>5} {:>4}", "m", "q", "p", "E1", "rk d1", "E2").unwrap();
    for c in &r.cells {
        let e2 = c.e2.map_or("?".to_string(), |x| x.to_string());
        writeln!(out, "{:>4} {:>4} {:>4} {:>5} {:>5} {:>4}", c.m, c.q, -c.m, c.e1, c.d1_rank, e2).unwrap();
    }
    if let Some(d) = &r.dump {
        for c in d {
            writeln!(out, "cell (m={}, q={}): {}", c.m, c.q, c.summands.join("; ")).unwrap();
            for row in &c.d1 {
                writeln!(out, "  [{}]", row.join(" ")).unwrap();
            }
        }
    }
    out
}

pub fn mhs_table(r: &MhsReport) -> String {
    let mut out = String::new();
    writeln!(out, "limit MHS: n = {}, components {}", r.n, r.components.join(" ")).unwrap();
    writeln!(out, "{:<6} {:>5}  {:<20} {:<20} {:<10} {}", "", "dim", "weights", "hodge", "N-jordan", "rank l").unwrap();
    for d in &r.degrees {
        let jordan = if d.jordan.is_empty() {
            "-".to_string()
        } else {
            d.jordan.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        };
        writeln!(
            out,
            "{:<6} {:>5}  {:<20} {:<20} {:<10} {}",
            format!("H^{}", d.q),
            d.betti,
            join_map(&d.weights, |w, v| format!("w{w}:{v}")),
            join_map(&d.hodge, |p, v| format!("h{p}{p}:{v}")),
            jordan,
            d.l_rank
        )
        .unwrap();
    }
    writeln!(out, "Euler characteristic {} (strata oracle {})", r.euler, r.euler_oracle).unwrap();
    writeln!(out, "trace on H^{}: [{}]", 2 * r.n, r.trace.join(" ")).unwrap();
    checks_table(&mut out, &r.checks);
    out
}

pub fn polarize_table(r: &PolarizeReport) -> String {
    let mut out = String::new();
    writeln!(out, "polarization: n = {}", r.n).unwrap();
    if !r.hodge_tate {
        writeln!(out, "  FAIL  datum is not Hodge-Tate; positivity is not checked").unwrap();
    }
    for p in &r.pieces {
        let rows = |m: &Vec<Vec<String>>| m.iter().map(|r| r.join(" ")).collect::<Vec<_>>().join("; ");
        writeln!(
            out,
            "  P_{} at q={}: dim {}, form [{}] {}, literal form [{}] {}",
            p.i,
            p.q,
            p.dim,
            rows(&p.form),
            if p.positive { "positive" } else { "not positive" },
            rows(&p.literal_form),
            if p.literal_positive { "positive" } else { "not positive" }
        )
        .unwrap();
    }
    checks_table(&mut out, &r.checks);
    writeln!(out, "verdict: {}", if r.passed { "pass" } else { "FAIL" }).unwrap();
    out
}

pub fn compare_table(r: &CompareReport) -> String {
    let mut out = String::new();
    writeln!(out, "φ: E2(A) -> E2(K), n = {}", r.n).unwrap();
    writeln!(out, "{:>4} {:>4} {:>6} {:>6} {:>6}", "m", "q", "E2(A)", "E2(K)", "rank").unwrap();
    for c in &r.cells {
        writeln!(out, "{:>4} {:>4} {:>6} {:>6} {:>6}", c.m, c.q, c.dim_a, c.dim_k, c.rank).unwrap();
    }
    checks_table(&mut out, &r.checks);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limitpage::analyze;
    use crate::strata::fixture_cycle_of_p1;

    #[test]
    fn cycle_table_row() {
        let s = fixture_cycle_of_p1(3).unwrap();
        let an = analyze(&s).unwrap();
        let t = mhs_table(&mhs_report(&s, &an));
        let row = t.lines().find(|l| l.starts_with("H^1 ")).unwrap();
        assert!(row.contains("w0:1 w2:1"), "{row}");
    }

    #[test]
    fn json_round_trip() {
        let s = fixture_cycle_of_p1(3).unwrap();
        let an = analyze(&s).unwrap();
        let r = polarize_report(&s, &an);
        let back: PolarizeReport = serde_json::from_str(&to_json(&r)).unwrap();
        assert_eq!(back, r);
        let m = mhs_report(&s, &an);
        let back: MhsReport = serde_json::from_str(&to_json(&m)).unwrap();
        assert_eq!(back, m);
    }
}
