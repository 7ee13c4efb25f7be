//! Aggregated experiment results: one row per configuration, exact
//! success counts, formatted only at print time.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub successes: usize,
    pub episodes: usize,
    pub total_steps: u64,
    pub total_final_d: f64,
}

impl Row {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.episodes as f64
    }

    pub fn mean_steps(&self) -> f64 {
        self.total_steps as f64 / self.episodes as f64
    }

    pub fn mean_final_d(&self) -> f64 {
        self.total_final_d / self.episodes as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<Row>,
}

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("label,success_rate,mean_steps,mean_final_d_polar,episodes\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.4},{:.2},{:.4},{}\n",
                r.label,
                r.success_rate(),
                r.mean_steps(),
                r.mean_final_d(),
                r.episodes
            ));
        }
        out
    }

    pub fn row(&self, label: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn success_rate(&self, label: &str) -> Option<f64> {
        self.row(label).map(Row::success_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_formatting_is_fixed_width() {
        let t = ResultTable {
            rows: vec![Row {
                label: "gt-depth".into(),
                successes: 9,
                episodes: 12,
                total_steps: 240,
                total_final_d: 3.6,
            }],
        };
        assert_eq!(
            t.to_csv(),
            "label,success_rate,mean_steps,mean_final_d_polar,episodes\n\
             gt-depth,0.7500,20.00,0.3000,12\n"
        );
    }

    #[test]
    fn lookup_by_label() {
        let t = ResultTable {
            rows: vec![Row {
                label: "a".into(),
                successes: 1,
                episodes: 2,
                total_steps: 5,
                total_final_d: 0.4,
            }],
        };
        assert_eq!(t.success_rate("a"), Some(0.5));
        assert_eq!(t.success_rate("b"), None);
    }
}
