use std::collections::HashSet;
use std::io::Cursor;

use memd_core::data::{
    build_vocabulary, read_dense_csv, read_sparse, tf_weights, tokenize, Document,
};
use memd_core::error::MemdError;
use proptest::prelude::*;

proptest! {
    #[test]
    fn sparse_parser_never_panics(text in "[0-9a-z:\\- .\\t\\n]{0,200}") {
        match read_sparse(Cursor::new(text.as_bytes()), 0) {
            Ok(data) => prop_assert!(data.rows().iter().all(|r| r.entries().all(|(i, _)| i < data.dim()))),
            Err(MemdError::Parse { line, .. }) => prop_assert!(line >= 1),
            Err(other) => prop_assert!(false, "unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_parser_never_panics(text in "(label,[a-z0-9,]{0,10}\\n)?[a-z0-9,.\\-\\n]{0,200}") {
        if let Err(e) = read_dense_csv(Cursor::new(text.as_bytes())) {
            prop_assert!(matches!(e, MemdError::Parse { .. }), "{e:?}");
        }
    }

    #[test]
    fn well_formed_sparse_lines_round_trip(
        rows in prop::collection::vec(
            (0usize..3, prop::collection::btree_map(1usize..40, 0.0f64..10.0, 0..6)),
            1..10,
        )
    ) {
        let mut text = String::new();
        for (label, feats) in &rows {
            text.push_str(&format!("c{label}"));
            for (id, v) in feats {
                text.push_str(&format!(" {id}:{v:?}"));
            }
            text.push('\n');
        }
        let data = read_sparse(Cursor::new(text.as_bytes()), 0).unwrap();
        prop_assert_eq!(data.len(), rows.len());
        for (i, (_, feats)) in rows.iter().enumerate() {
            let got: Vec<(usize, f64)> = data.row(i).entries().collect();
            let want: Vec<(usize, f64)> = feats.iter().map(|(&k, &v)| (k - 1, v)).collect();
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn term_weights_sum_to_one(words in prop::collection::vec("[a-e]{1,2}", 1..30)) {
        let doc = tokenize(&words.join(" "));
        let vocab = build_vocabulary(std::slice::from_ref(&doc), &HashSet::new(), 1).unwrap();
        let tf = tf_weights(&doc, &vocab);
        let total: f64 = tf.row.iter().map(|(_, v)| v).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(!tf.flagged);
    }

    #[test]
    fn vocabulary_ignores_document_order(docs in prop::collection::vec(prop::collection::vec("[a-d]{1,2}", 0..8), 1..8)) {
        let docs: Vec<Document> = docs.iter().map(|w| tokenize(&w.join(" "))).collect();
        let mut reversed = docs.clone();
        reversed.reverse();
        let a = build_vocabulary(&docs, &HashSet::new(), 1);
        let b = build_vocabulary(&reversed, &HashSet::new(), 1);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.words(), b.words()),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "order changed the outcome"),
        }
    }
}
