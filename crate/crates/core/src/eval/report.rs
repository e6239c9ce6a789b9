use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::{conditioned_hr, hr_at_k, ndcg_at_k, Condition, EvalCase, ItemFacets, ListsByUser};
use crate::{Error, ItemId, Result};

/// Metrics of one model at every cutoff of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub model: String,
    pub hr: Vec<f64>,
    pub ndcg: Vec<f64>,
    pub conditioned: BTreeMap<Condition, Vec<f64>>,
}

impl MetricsRow {
    pub fn evaluate(
        model: &str,
        cases: &[EvalCase],
        lists: &ListsByUser,
        ks: &[usize],
        facets: &HashMap<ItemId, ItemFacets>,
    ) -> Result<Self> {
        if model.is_empty() || model.contains(char::is_whitespace) {
            return Err(Error::Validation(format!("bad model name `{model}`")));
        }
        let hr = ks.iter().map(|&k| hr_at_k(cases, lists, k)).collect::<Result<_>>()?;
        let ndcg = ks.iter().map(|&k| ndcg_at_k(cases, lists, k)).collect::<Result<_>>()?;
        let mut conditioned = BTreeMap::new();
        for cond in Condition::ALL {
            let v = ks.iter().map(|&k| conditioned_hr(cases, lists, k, cond, facets)).collect::<Result<_>>()?;
            conditioned.insert(cond, v);
        }
        Ok(MetricsRow { model: model.to_owned(), hr, ndcg, conditioned })
    }
}

/// Rows are models, columns HR@k then NDCG@k, plus a relevance-conditioned
/// hit-rate block and free-form notes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub ks: Vec<usize>,
    pub rows: Vec<MetricsRow>,
    pub notes: BTreeMap<String, String>,
}

impl MetricsReport {
    pub fn new(ks: Vec<usize>) -> Self {
        MetricsReport { ks, ..Default::default() }
    }

    pub fn row(&self, model: &str) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    /// HR at cutoff `k` for `model`.
    pub fn hr(&self, model: &str, k: usize) -> Option<f64> {
        let col = self.ks.iter().position(|&x| x == k)?;
        self.row(model).map(|r| r.hr[col])
    }

    pub fn ndcg(&self, model: &str, k: usize) -> Option<f64> {
        let col = self.ks.iter().position(|&x| x == k)?;
        self.row(model).map(|r| r.ndcg[col])
    }

    pub fn to_table(&self) -> String {
        let name_w = self.rows.iter().map(|r| r.model.len()).max().unwrap_or(5).max(5);
        let mut out = String::new();
        write!(out, "{:<name_w$}", "model").unwrap();
        for k in &self.ks {
            write!(out, " {:>9}", format!("HR@{k}")).unwrap();
        }
        for k in &self.ks {
            write!(out, " {:>9}", format!("NDCG@{k}")).unwrap();
        }
        out.push('\n');
        for r in &self.rows {
            write!(out, "{:<name_w$}", r.model).unwrap();
            for v in r.hr.iter().chain(&r.ndcg) {
                write!(out, " {v:>9.4}").unwrap();
            }
            out.push('\n');
        }

        out.push_str("\nhit rate by relevance (cases with a match in the top k)\n");
        write!(out, "{:<name_w$} {:<8}", "model", "match").unwrap();
        for k in &self.ks {
            write!(out, " {:>9}", format!("@{k}")).unwrap();
        }
        out.push('\n');
        for r in &self.rows {
            for (cond, vs) in &r.conditioned {
                write!(out, "{:<name_w$} {:<8}", r.model, cond.name()).unwrap();
                for v in vs {
                    write!(out, " {v:>9.4}").unwrap();
                }
                out.push('\n');
            }
        }
        if !self.notes.is_empty() {
            out.push('\n');
            for (k, v) in &self.notes {
                writeln!(out, "{k}: {v}").unwrap();
            }
        }
        out
    }

    /// `<model>.<metric>@<k>=<value>` lines, then `note.<key>=<value>`.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            for (i, k) in self.ks.iter().enumerate() {
                writeln!(out, "{}.hr@{k}={}", r.model, r.hr[i]).unwrap();
                writeln!(out, "{}.ndcg@{k}={}", r.model, r.ndcg[i]).unwrap();
                for (cond, vs) in &r.conditioned {
                    writeln!(out, "{}.hr_{}@{k}={}", r.model, cond.name(), vs[i]).unwrap();
                }
            }
        }
        for (k, v) in &self.notes {
            writeln!(out, "note.{k}={v}").unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::RankedList;
    use crate::UserId;

    #[test]
    fn report_renders_both_forms() {
        let facets: HashMap<ItemId, ItemFacets> = ["a", "b", "c"]
            .iter()
            .map(|i| (ItemId::from(*i), ItemFacets { destination: format!("D{i}"), category: "C".into() }))
            .collect();
        let case =
            EvalCase::new(UserId::from("u"), [(ItemId::from("b"), facets[&ItemId::from("b")].clone())].into()).unwrap();
        let list = RankedList::new("u".into(), vec!["a".into(), "b".into(), "c".into()], vec![3.0, 2.0, 1.0]).unwrap();
        let lists: ListsByUser = [(UserId::from("u"), list)].into();
        let mut report = MetricsReport::new(vec![1, 2]);
        report.rows.push(MetricsRow::evaluate("Hot", &[case], &lists, &report.ks.clone(), &facets).unwrap());
        report.notes.insert("cases".into(), "1".into());

        assert_eq!(report.hr("Hot", 1), Some(0.0));
        assert_eq!(report.hr("Hot", 2), Some(1.0));
        assert_eq!(report.hr("Hot", 3), None);
        let kv = report.to_kv();
        assert!(kv.contains("Hot.hr@2=1\n"));
        assert!(kv.contains("Hot.hr_cat@1=1\n"));
        assert!(kv.contains("Hot.hr_dest@1=0\n"));
        assert!(kv.ends_with("note.cases=1\n"));
        let table = report.to_table();
        assert!(table.starts_with("model      HR@1      HR@2    NDCG@1    NDCG@2\n"));
        assert!(table.contains("Hot      0.0000    1.0000"));
        assert!(MetricsRow::evaluate("two words", &[], &ListsByUser::new(), &[1], &facets).is_err());
    }
}
