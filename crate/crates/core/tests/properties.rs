use std::sync::Arc;

use proptest::prelude::*;

use clocrc::corpus::{chunk_lines, truncate_lines, Dataset, DocumentPair, BLOCK_SIZES};
use clocrc::experiments::{bootstrap_test, run_task_length, TaskLengthConfig};
use clocrc::llm_client::{Client, EchoProvider, ProviderConfig};
use clocrc::text_metrics::{aggregate, cer, Aggregation, NormalizationPolicy};

fn line() -> impl Strategy<Value = (String, String)> {
    ("[a-e ]{1,12}", "[a-e ]{1,12}")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chunks_rejoin_to_the_first_sixty_lines(lines in prop::collection::vec(line(), 60..70)) {
        let doc = DocumentPair::from_lines("d", Dataset::Smh, None, lines);
        let head = truncate_lines(&doc, 60).unwrap();
        for x in BLOCK_SIZES {
            let chunks = chunk_lines(&doc, x).unwrap();
            prop_assert_eq!(chunks.len(), 60 / x);
            let ocr: Vec<&str> = chunks.iter().map(|c| c.ocr_text.as_str()).collect();
            prop_assert_eq!(ocr.join("\n"), head.ocr_text.clone());
        }
    }

    #[test]
    fn a_minority_of_disasters_cannot_move_the_median(
        good in prop::collection::vec(1.0f64..60.0, 51..80),
        bad in prop::collection::vec(-5000.0f64..-500.0, 0..50),
    ) {
        prop_assume!(bad.len() < good.len());
        let mut all = good.clone();
        all.extend(&bad);
        let median = aggregate(&all, Aggregation::Median).unwrap();
        prop_assert!(median > 0.0);
    }

    #[test]
    fn swapping_samples_keeps_the_p_value(
        a in prop::collection::vec(-10.0f64..10.0, 2..20),
        b in prop::collection::vec(-10.0f64..10.0, 2..20),
        seed in any::<u64>(),
    ) {
        let ab = bootstrap_test(&a, &b, 200, seed).unwrap();
        let ba = bootstrap_test(&b, &a, 200, seed).unwrap();
        prop_assert_eq!(ab.p_value, ba.p_value);
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
    }
}

#[test]
fn echo_task_length_matches_unchunked_cer() {
    let lines: Vec<(String, String)> =
        (0..60).map(|i| (format!("tbe line {i} of tcxt"), format!("the line {i} of text"))).collect();
    let doc = DocumentPair::from_lines("d", Dataset::Smh, None, lines);
    let client = Client::new(Arc::new(EchoProvider::new()), ProviderConfig::builtin("echo").unwrap());
    let report = run_task_length(&client, std::slice::from_ref(&doc), &TaskLengthConfig::new("echo")).unwrap();
    let expected = cer(&doc.gt_text, &doc.ocr_text, &NormalizationPolicy::default()).unwrap().0;
    assert!(!report.cells.is_empty());
    for cell in &report.cells {
        assert_eq!(cell.cer, Some(expected), "block {} {:?}", cell.block_size, cell.prompt);
    }
}
