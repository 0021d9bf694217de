use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub subject: String,
    pub accuracy: f64,
    pub correct: usize,
    pub test_sequences: usize,
    pub train_samples: usize,
    pub final_train_accuracy: f64,
}

/// Aggregate LOPO result. `confusion[predicted][truth]` counts test
/// sequences, so rows are predictions and columns ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub labels: Vec<String>,
    pub folds: Vec<FoldReport>,
    pub mean_accuracy: f64,
    pub best_accuracy: f64,
    pub worst_accuracy: f64,
    pub confusion: Vec<Vec<u64>>,
    /// Row sums: how often each class was predicted.
    pub predicted_totals: Vec<u64>,
    /// Column sums: test sequences per true class.
    pub truth_totals: Vec<u64>,
}

impl EvalReport {
    pub fn new(labels: Vec<String>, folds: Vec<FoldReport>, confusion: Vec<Vec<u64>>) -> Self {
        let accs: Vec<f64> = folds.iter().map(|f| f.accuracy).collect();
        let mean_accuracy = if accs.is_empty() {
            0.0
        } else {
            accs.iter().sum::<f64>() / accs.len() as f64
        };
        let c = confusion.len();
        let predicted_totals = confusion.iter().map(|row| row.iter().sum()).collect();
        let truth_totals = (0..c).map(|j| confusion.iter().map(|row| row[j]).sum()).collect();
        Self {
            labels,
            mean_accuracy,
            best_accuracy: accs.iter().copied().fold(f64::NAN, f64::max),
            worst_accuracy: accs.iter().copied().fold(f64::NAN, f64::min),
            folds,
            confusion,
            predicted_totals,
            truth_totals,
        }
    }

    pub fn total_sequences(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(s).map_err(|e| HarnessError::Report(e.to_string()))
    }

    /// Confusion matrix with class-name header row and column and a
    /// trailing `total` column of row sums.
    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("predicted\\truth");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push_str(",total\n");
        for (label, (row, total)) in self
            .labels
            .iter()
            .zip(self.confusion.iter().zip(&self.predicted_totals))
        {
            out.push_str(label);
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(",{total}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fold(subject: &str, correct: usize, n: usize) -> FoldReport {
        FoldReport {
            subject: subject.into(),
            accuracy: correct as f64 / n as f64,
            correct,
            test_sequences: n,
            train_samples: 10,
            final_train_accuracy: 1.0,
        }
    }

    fn report() -> EvalReport {
        EvalReport::new(
            vec!["a1".into(), "a2".into()],
            vec![fold("s1", 3, 4), fold("s2", 1, 3)],
            vec![vec![3, 2], vec![1, 1]],
        )
    }

    #[test]
    fn aggregates() {
        let r = report();
        assert!((r.mean_accuracy - (0.75 + 1.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(r.best_accuracy, 0.75);
        assert_eq!(r.predicted_totals, vec![5, 2]);
        assert_eq!(r.truth_totals, vec![4, 3]);
        assert_eq!(r.total_sequences(), 7);
    }

    #[test]
    fn json_round_trip() {
        let r = report();
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn csv_layout() {
        assert_eq!(
            report().confusion_csv(),
            "predicted\\truth,a1,a2,total\na1,3,2,5\na2,1,1,2\n"
        );
        let zero = EvalReport::new(vec!["x".into(), "y".into()], vec![], vec![vec![0; 2]; 2]);
        for line in zero.confusion_csv().lines().skip(1) {
            assert!(line.split(',').skip(1).all(|v| v == "0"));
        }
    }
}
