use std::fmt::Write as _;

/// One cost-function evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub eval: usize,
    pub cost: f64,
    pub params: Vec<f64>,
    /// Per-trial energies in Hartree at this evaluation.
    pub energies: Vec<f64>,
}

/// Evaluation history of an optimisation run, in call order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends a record; the evaluation index is assigned here so it is
    /// strictly increasing across the whole trace.
    pub fn push(&mut self, cost: f64, params: Vec<f64>, energies: Vec<f64>) {
        let eval = self.records.len();
        self.records.push(TraceRecord {
            eval,
            cost,
            params,
            energies,
        });
    }

    pub fn last_cost(&self) -> Option<f64> {
        self.records.last().map(|r| r.cost)
    }

    /// CSV with header `eval,cost,param_0..,E_0..`. Rows with fewer
    /// parameters than the widest row are padded with empty cells.
    pub fn to_csv(&self) -> String {
        let n_params = self.records.iter().map(|r| r.params.len()).max().unwrap_or(0);
        let n_energies = self.records.iter().map(|r| r.energies.len()).max().unwrap_or(0);
        let mut out = String::from("eval,cost");
        for i in 0..n_params {
            write!(out, ",param_{i}").unwrap();
        }
        for i in 0..n_energies {
            write!(out, ",E_{i}").unwrap();
        }
        out.push('\n');
        for r in &self.records {
            write!(out, "{},{:.12e}", r.eval, r.cost).unwrap();
            for i in 0..n_params {
                match r.params.get(i) {
                    Some(p) => write!(out, ",{p:.12e}").unwrap(),
                    None => out.push(','),
                }
            }
            for i in 0..n_energies {
                match r.energies.get(i) {
                    Some(e) => write!(out, ",{e:.11e}").unwrap(),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = ConvergenceTrace::new();
        t.push(1.5, vec![0.0, 0.25], vec![-1.0]);
        t.push(1.0, vec![0.5], vec![-1.25]);
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "eval,cost,param_0,param_1,E_0");
        assert!(lines[1].starts_with("0,1.5"));
        assert!(lines[2].starts_with("1,1.0"));
        assert_eq!(lines[2].matches(',').count(), 4);
    }
}
